"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written from scratch against textbook
definitions (Sturm sequences, characteristic polynomials, Monte-Carlo
surmises) rather than calling back into krylovlab, so agreement between the
two is evidence and not tautology.
"""
import numpy as np


def sturm_count(a, b, x):
    """Number of eigenvalues of the symmetric tridiagonal (a, b) below x.

    Counts sign agreements of the Sturm sequence of leading principal minors,
    evaluated in the standard overflow-safe ratio form.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    count = 0
    q = a[0] - x
    if q < 0:
        count += 1
    for i in range(1, len(a)):
        if q == 0.0:
            q = 1e-300
        q = a[i] - x - b[i - 1] ** 2 / q
        if q < 0:
            count += 1
    return count


def sturm_eigenvalues(a, b, tol=1e-12):
    """All eigenvalues of the symmetric tridiagonal (a, b) by Sturm bisection."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    radius = np.abs(a).max() + (2 * np.abs(b).max() if len(b) else 0.0) + 1.0
    out = []
    for k in range(n):
        lo, hi = -radius, radius
        while hi - lo > tol * radius:
            mid = 0.5 * (lo + hi)
            if sturm_count(a, b, mid) <= k:
                lo = mid
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def charpoly_eigenvalues(a, b):
    """Eigenvalues of a small symmetric tridiagonal via its characteristic
    polynomial, built from the three-term minor recurrence and solved with
    np.roots.  Reliable for n <= ~8."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p_prev = np.array([1.0])                       # det of the empty block
    p = np.array([-1.0, a[0]])                     # a[0] - x
    for i in range(1, len(a)):
        term1 = np.polymul(np.array([-1.0, a[i]]), p)
        term2 = b[i - 1] ** 2 * p_prev
        padded = np.zeros(len(term1))
        padded[len(term1) - len(term2):] = term2
        p_prev, p = p, term1 - padded
    return np.sort(np.roots(p).real)


def charpoly_eigenvalues_full(H):
    """Eigenvalues of a small full matrix via the characteristic polynomial,
    with coefficients from the Faddeev-LeVerrier recursion (no eigensolver
    involved).  Reliable for n <= ~6."""
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(H)
    for k in range(1, n + 1):
        M = H @ M + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(H @ M) / k)
    return np.sort(np.roots(coeffs).real)


def surmise_r_mc(samples=200_000, seed=20260815):
    """<r> of the 3x3 GOE surmise by direct Monte-Carlo."""
    rng = np.random.default_rng(seed)
    acc = 0.0
    block = 20_000
    done = 0
    while done < samples:
        m = min(block, samples - done)
        g = rng.standard_normal((m, 3, 3))
        h = (g + np.swapaxes(g, 1, 2)) / 2.0
        ev = np.linalg.eigvalsh(h)
        s1 = ev[:, 1] - ev[:, 0]
        s2 = ev[:, 2] - ev[:, 1]
        acc += np.sum(np.minimum(s1, s2) / np.maximum(s1, s2))
        done += m
    return acc / samples


def poisson_r_mean():
    """<r> for uncorrelated (Poisson) levels: 2 ln 2 - 1."""
    return 2.0 * np.log(2.0) - 1.0


def porter_thomas_ipr_mc(N, ell=2, samples=20_000, seed=7):
    """Mean IPR_ell of random unit vectors uniform on the sphere in R^N."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((samples, N))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return float(np.mean(np.sum(np.abs(v) ** (2 * ell), axis=1)))


def arcsine_dos(E, half_width=1.0):
    """Density 1/(pi sqrt(w^2 - E^2)) of the constant-b chain."""
    E = np.asarray(E, dtype=float)
    out = np.zeros_like(E)
    inside = np.abs(E) < half_width
    out[inside] = 1.0 / (np.pi * np.sqrt(half_width**2 - E[inside] ** 2))
    return out


def semicircle_dos(E, radius=2.0):
    """Wigner semicircle of the given support radius."""
    E = np.asarray(E, dtype=float)
    out = np.zeros_like(E)
    inside = np.abs(E) < radius
    out[inside] = 2.0 / (np.pi * radius**2) * np.sqrt(radius**2 - E[inside] ** 2)
    return out


def gaussian_dos(E, xi):
    """Zero-mean Gaussian density with standard deviation xi."""
    E = np.asarray(E, dtype=float)
    return np.exp(-(E**2) / (2.0 * xi**2)) / (xi * np.sqrt(2.0 * np.pi))


def ks_statistic(sorted_samples, cdf_grid_E, cdf_grid_F):
    """KS distance between an empirical sample and a tabulated model CDF."""
    s = np.asarray(sorted_samples, dtype=float)
    F = np.interp(s, cdf_grid_E, cdf_grid_F)
    n = len(s)
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    return float(max(np.abs(emp_hi - F).max(), np.abs(emp_lo - F).max()))
