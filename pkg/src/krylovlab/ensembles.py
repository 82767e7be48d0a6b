"""Seeded generation of Rosenzweig-Porter and heteroskedastic Gaussian matrices.

The RP Hamiltonian is H = A + N^(-gamma/2) B with A a diagonal Gaussian matrix
and B a GOE matrix.  Three normalization conventions are exposed because
different observables are defined at different overall scales: `paper-main`
(A_ii ~ N(0,1); B diagonal variance 1, off-diagonal 1/2), `unit-bandwidth`
(same structure with every variance divided by N), and `sm5` (a direct
heteroskedastic draw with diagonal variance 1/(2N) and off-diagonal variance
1/(4 N^(gamma+1))).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np


class Normalization(str, Enum):
    PAPER_MAIN = "paper-main"
    UNIT_BANDWIDTH = "unit-bandwidth"
    SM5 = "sm5"


@dataclass(frozen=True)
class EnsembleConfig:
    N: int
    gamma: float
    normalization: Normalization = Normalization.PAPER_MAIN
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"matrix dimension must be >= 2, got {self.N}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class DenseSymmetric:
    """A symmetric matrix realization plus the config that produced it."""

    entries: np.ndarray
    meta: EnsembleConfig | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __post_init__(self):
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("entries must be a square matrix")
        if not np.array_equal(m, m.T):
            raise ValueError("entries must be exactly symmetric")


def _symmetric_gaussian(N, diag_sigma, off_sigma, rng):
    """Symmetric matrix with N(0, diag_sigma^2) diagonal, N(0, off_sigma^2) off-diagonal."""
    raw = rng.standard_normal((N, N))
    upper = np.triu(raw, k=1) * off_sigma
    H = upper + upper.T
    np.fill_diagonal(H, raw.diagonal() * diag_sigma)
    return H


def generate_rp(cfg: EnsembleConfig) -> DenseSymmetric:
    """Draw one RP realization under the configured normalization convention."""
    N, gamma = cfg.N, cfg.gamma
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed)))
    norm = Normalization(cfg.normalization)
    if norm is Normalization.SM5:
        alpha = 1.0 / (2.0 * N)
        beta = 1.0 / (4.0 * N ** (gamma + 1.0))
        H = _symmetric_gaussian(N, np.sqrt(alpha), np.sqrt(beta), rng)
        return DenseSymmetric(H, cfg)
    scale = 1.0 if norm is Normalization.PAPER_MAIN else 1.0 / np.sqrt(N)
    # suppression factor applied to B; guard the gamma -> infinity limit against underflow
    with np.errstate(under="ignore"):
        supp = float(N) ** (-gamma / 2.0)
    a_diag = rng.standard_normal(N) * scale
    B = _symmetric_gaussian(N, scale, scale / np.sqrt(2.0), rng)
    H = supp * B
    idx = np.diag_indices(N)
    H[idx] += a_diag
    return DenseSymmetric(H, cfg)


def generate_heteroskedastic(N: int, alpha: float, beta: float, seed: int) -> DenseSymmetric:
    """Symmetric Gaussian matrix with <H_ij^2> = alpha on the diagonal, beta off it."""
    if N < 2:
        raise ValueError(f"matrix dimension must be >= 2, got {N}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    H = _symmetric_gaussian(N, np.sqrt(alpha), np.sqrt(beta), rng)
    return DenseSymmetric(H, None)


def realization_seeds(base_seed: int, count: int, *tags: int) -> np.ndarray:
    """Derive `count` independent 64-bit seeds from (base_seed, *tags).

    The derivation is a pure function of its arguments, so sweeps partitioned
    across any number of workers regenerate identical matrices.
    """
    ss = np.random.SeedSequence([int(base_seed), *[int(t) for t in tags]])
    return ss.generate_state(count, np.uint64)


def tag_from_gamma(gamma: float) -> int:
    """Stable integer tag for a gamma value (3 decimal places)."""
    return int(round(float(gamma) * 1000.0))


def save_matrix(mat: DenseSymmetric, path: str | Path) -> None:
    """Binary dump: 8-byte little-endian dim, then row-major float64 entries.

    A JSON sidecar `<path>.json` records the generating config when present.
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", mat.dim))
        fh.write(np.ascontiguousarray(mat.entries, dtype="<f8").tobytes())
    if mat.meta is not None:
        side = {
            "N": mat.meta.N,
            "gamma": mat.meta.gamma,
            "normalization": Normalization(mat.meta.normalization).value,
            "seed": int(mat.meta.seed),
        }
        Path(f"{path}.json").write_text(json.dumps(side, indent=2) + "\n")


def load_matrix(path: str | Path) -> DenseSymmetric:
    path = Path(path)
    raw = path.read_bytes()
    (dim,) = struct.unpack_from("<Q", raw, 0)
    entries = np.frombuffer(raw, dtype="<f8", offset=8).reshape(dim, dim).copy()
    meta = None
    sidecar = Path(f"{path}.json")
    if sidecar.exists():
        d = json.loads(sidecar.read_text())
        meta = EnsembleConfig(d["N"], d["gamma"], Normalization(d["normalization"]), d["seed"])
    return DenseSymmetric(entries, meta)
