"""Householder and Lanczos tridiagonalization with explicit Krylov bases.

Both reductions use the start vector e1 by default, so on a non-degenerate
Krylov space they agree coefficient by coefficient.  Off-diagonals are
returned non-negative; reflector/recursion signs are absorbed into the basis
columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs

from .ensembles import DenseSymmetric

_sytrd = get_lapack_funcs(("sytrd",), (np.empty((2, 2), dtype=np.float64),))[0]

BREAKDOWN_RTOL = 1e-12  # b_m below this times ||H||_F terminates Lanczos


@dataclass
class TridiagonalForm:
    a: np.ndarray                      # diagonal, length m
    b: np.ndarray                      # off-diagonal, length m-1, all >= 0
    basis: np.ndarray | None = None    # optional m Krylov columns in the computational basis
    start_vector: str = "e1"

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.b.shape != (max(len(self.a) - 1, 0),):
            raise ValueError("off-diagonal length must be len(a) - 1")
        if np.any(self.b < 0):
            raise ValueError("off-diagonals must be non-negative (sign convention)")

    def __len__(self):
        return len(self.a)

    def matrix(self) -> np.ndarray:
        """Dense m x m tridiagonal matrix."""
        T = np.diag(self.a)
        m = len(self.a)
        idx = np.arange(m - 1)
        T[idx, idx + 1] = self.b
        T[idx + 1, idx] = self.b
        return T


def _as_array(H) -> np.ndarray:
    if isinstance(H, DenseSymmetric):
        return H.entries
    return np.asarray(H, dtype=float)


def householder_tridiagonalize(H, accumulate_basis: bool = False) -> TridiagonalForm:
    """Reduce a symmetric matrix to tridiagonal form by Householder reflections.

    Returns coefficients with b >= 0.  When `accumulate_basis` is set, the
    orthogonal transform Q (first column e1) is built by back-application of
    the stored reflectors, with column signs flipped so that Q^T H Q has the
    returned non-negative off-diagonals.
    """
    A = _as_array(H)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    N = A.shape[0]
    if N == 1:
        basis = np.ones((1, 1)) if accumulate_basis else None
        return TridiagonalForm(A.diagonal().copy(), np.zeros(0), basis)
    c, d, e, tau, info = _sytrd(A, lower=1)
    if info != 0:
        raise RuntimeError(f"sytrd failed with info={info}")
    a = np.asarray(d, dtype=float)
    b = np.abs(np.asarray(e, dtype=float))
    basis = None
    if accumulate_basis:
        Q = np.eye(N)
        # reflector k acts on rows k+1.. with v[k+1] = 1, v[k+2:] = c[k+2:, k]
        for k in range(N - 3, -1, -1):
            v = np.zeros(N)
            v[k + 1] = 1.0
            v[k + 2:] = c[k + 2:, k]
            Q -= np.outer(tau[k] * v, v @ Q)
        # absorb off-diagonal signs into the columns so b >= 0
        signs = np.ones(N)
        sign_e = np.where(e < 0, -1.0, 1.0)
        signs[1:] = np.cumprod(sign_e)
        basis = Q * signs
    return TridiagonalForm(a, b, basis)


def lanczos_tridiagonalize(H, v0: np.ndarray | None = None, steps: int | None = None,
                           start_label: str | None = None) -> TridiagonalForm:
    """Lanczos three-term recursion with full (two-pass) reorthogonalization.

    Terminates early when the next off-diagonal falls below
    BREAKDOWN_RTOL * ||H||_F, returning the achieved Krylov dimension.
    """
    A = _as_array(H)
    N = A.shape[0]
    m = N if steps is None else int(steps)
    if not 1 <= m <= N:
        raise ValueError(f"steps must lie in [1, {N}]")
    norm_H = np.linalg.norm(A, "fro")
    if v0 is None:
        v = np.zeros(N)
        v[0] = 1.0
        label = "e1"
    else:
        v = np.asarray(v0, dtype=float).copy()
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("start vector must have unit norm")
        label = start_label or "custom"
    V = np.zeros((N, m))
    a = np.zeros(m)
    b = np.zeros(max(m - 1, 0))
    V[:, 0] = v
    w = A @ v
    a[0] = v @ w
    w = w - a[0] * v
    k = 1
    while k < m:
        # two passes of Gram-Schmidt against every previous vector
        w -= V[:, :k] @ (V[:, :k].T @ w)
        w -= V[:, :k] @ (V[:, :k].T @ w)
        bk = np.linalg.norm(w)
        if bk < BREAKDOWN_RTOL * norm_H:
            return TridiagonalForm(a[:k], b[: k - 1], V[:, :k], label)
        b[k - 1] = bk
        v = w / bk
        V[:, k] = v
        w = A @ v
        a[k] = v @ w
        w = w - a[k] * v
        k += 1
    return TridiagonalForm(a, b, V, label)


def scaled_profile(t: TridiagonalForm) -> np.ndarray:
    """Pairs (x, b) with x = n/N for n = 1..N-1."""
    N = len(t.a)
    n = np.arange(1, N)
    return np.column_stack([n / N, t.b])


def basis_orthogonality_residual(t: TridiagonalForm) -> float:
    """Max |<K_i|K_j>| off the diagonal (0 when no basis stored)."""
    if t.basis is None:
        return 0.0
    G = t.basis.T @ t.basis
    np.fill_diagonal(G, 0.0)
    return float(np.max(np.abs(G)))


def reproduction_residual(t: TridiagonalForm, H) -> float:
    """Max |(basis^T H basis)_ij - T_ij| over the tridiagonal band."""
    if t.basis is None:
        raise ValueError("no basis stored")
    A = _as_array(H)
    T = t.basis.T @ A @ t.basis
    m = len(t.a)
    idx = np.arange(m - 1)
    res = max(
        float(np.max(np.abs(T.diagonal() - t.a))),
        float(np.max(np.abs(T[idx, idx + 1] - t.b))) if m > 1 else 0.0,
    )
    return res
