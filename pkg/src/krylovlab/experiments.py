"""Seeded experiment sweeps over (gamma, N) grids with resumable file output.

Every sweep is fully determined by its RunManifest: per-realization seeds are
derived from (seed, gamma-tag, N), realizations are aggregated in index
order, and floats are written at fixed precision, so two runs of the same
manifest produce byte-identical tables regardless of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, runio
from .ensembles import (EnsembleConfig, Normalization, generate_rp,
                        realization_seeds, tag_from_gamma)
from .krylov_dynamics import (build_tfd_krylov, build_time_grid, detect_peak_curve,
                              plateau_drift, propagate, smoothed_peak_flag,
                              REALIZATION_PEAK_THRESHOLD)
from .krylov_ipr import KRule, KrylovIprRecord, fit_d2, krylov_ipr, pick_k
from .lanczos_stats import AnsatzForm, FitError, fit_ansatz, fit_logvar_powerlaw, log_variance
from .sm5_oracle import predict_lanczos_profile
from .spectral import DosModel, dos_closed_form, dos_from_lanczos, eig_dense, ks_distance, r_statistics
from .tridiag import householder_tridiagonalize, lanczos_tridiagonalize

EXPERIMENTS = ("profile", "fit", "rstat", "dos", "spread", "ipr", "logvar", "sm5")
WORKERS_ENV = "KRYLOVLAB_WORKERS"
MAX_N = 8192
MAX_WORK = 1e14


class GuardrailError(RuntimeError):
    """Raised when a manifest asks for more than a desk-scale run."""


@dataclass(frozen=True)
class RunManifest:
    experiment: str
    gamma_grid: tuple
    N_grid: tuple
    realizations: int
    seed: int = 0
    normalization: str = Normalization.PAPER_MAIN.value
    output_dir: str = "runs"
    beta: float = 0.0               # spread: TFD inverse temperature
    allow_large: bool = False
    version: str = __version__

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; pick from {EXPERIMENTS}")
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        object.__setattr__(self, "N_grid", tuple(int(n) for n in self.N_grid))
        if not self.gamma_grid or not self.N_grid:
            raise ValueError("gamma_grid and N_grid must be non-empty")
        if any(g < 0 for g in self.gamma_grid):
            raise ValueError("gamma values must be non-negative")
        if any(n < 2 for n in self.N_grid):
            raise ValueError("matrix sizes must be >= 2")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        Normalization(self.normalization)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_grid"] = list(self.gamma_grid)
        d["N_grid"] = list(self.N_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown manifest keys: {sorted(extra)}")
        return cls(**d)


def resolve_workers(explicit: int | None = None) -> int:
    if explicit is not None:
        return max(int(explicit), 1)
    return max(int(os.environ.get(WORKERS_ENV, "1")), 1)


def check_guardrails(manifest: RunManifest) -> None:
    n_max = max(manifest.N_grid)
    if manifest.allow_large:
        return
    if n_max > MAX_N:
        raise GuardrailError(f"N = {n_max} exceeds the desk-scale limit {MAX_N}; pass the override flag")
    work = manifest.realizations * float(n_max) ** 3
    if work > MAX_WORK:
        raise GuardrailError(
            f"realizations x N^3 = {work:.3g} exceeds {MAX_WORK:.0g}; pass the override flag")


def heteroskedastic_equiv(N: int, gamma: float, normalization) -> tuple:
    """Entry variances (alpha, beta) matching the chosen ensemble convention."""
    norm = Normalization(normalization)
    if norm is Normalization.SM5:
        return 1.0 / (2.0 * N), 1.0 / (4.0 * float(N) ** (gamma + 1.0))
    with np.errstate(under="ignore"):
        supp2 = float(N) ** (-float(gamma))
    alpha, beta = 1.0 + supp2, supp2 / 2.0
    if norm is Normalization.UNIT_BANDWIDTH:
        alpha, beta = alpha / N, beta / N
    return alpha, beta


# ---------------------------------------------------------------------------
# per-realization workers (module-level so process pools can pickle them)

def _tridiag_identity_residual(H, t):
    """Max of the trace and Frobenius invariant residuals (both relative)."""
    m = H.entries
    tr = float(np.trace(m))
    fro2 = float(np.sum(m * m))
    res_tr = abs(t.a.sum() - tr) / (abs(tr) + 1.0)
    res_fro = abs(np.sum(t.a**2) + 2.0 * np.sum(t.b**2) - fro2) / (fro2 + 1.0)
    return max(res_tr, res_fro)


def _w_profile(args):
    N, gamma, norm, seed = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    t = householder_tridiagonalize(H)
    return t.a, t.b, _tridiag_identity_residual(H, t)


def _w_profile_eigs(args):
    N, gamma, norm, seed = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    t = householder_tridiagonalize(H)
    return t.a, t.b, eig_dense(H).values, _tridiag_identity_residual(H, t)


def _w_rstat(args):
    N, gamma, norm, seed = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    return r_statistics(eig_dense(H).values)


def _w_spread(args):
    N, gamma, norm, seed, beta, times = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    t, _state = build_tfd_krylov(H, beta)
    psi0 = np.zeros(len(t.a))
    psi0[0] = 1.0
    trace = propagate(t, psi0, np.asarray(times))
    unit_dev = float(np.abs(trace.occupations.sum(axis=1) - 1.0).max())
    return trace.ks, unit_dev


def _w_ipr(args):
    N, gamma, norm, seed = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    t = lanczos_tridiagonalize(H)
    dim = len(t.a)
    last = krylov_ipr(t.basis, dim - 1, 2)
    mid = krylov_ipr(t.basis, pick_k(dim, KRule.MID_VECTOR), 2)
    gram = t.basis.T @ t.basis
    orth = float(np.abs(gram - np.eye(dim)).max())
    return last, mid, dim, orth


def _w_logvar(args):
    N, gamma, norm, seed = args
    H = generate_rp(EnsembleConfig(N, gamma, norm, seed))
    return log_variance(householder_tridiagonalize(H))


def _map(fn, argslist, workers):
    if workers <= 1 or len(argslist) <= 1:
        return [fn(a) for a in argslist]
    chunk = max(1, len(argslist) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, argslist, chunksize=chunk))


# ---------------------------------------------------------------------------
# cells

def _cell_seeds(manifest: RunManifest, gamma: float, N: int):
    return realization_seeds(manifest.seed, manifest.realizations, tag_from_gamma(gamma), N)


def mean_profile_cell(manifest: RunManifest, gamma: float, N: int, workers: int = 1):
    """Ensemble-mean Householder profile: (x, mean_a, mean_b, stderr_b, residual)."""
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    out = _map(_w_profile, args, workers)
    A = np.stack([a for a, _, _ in out])
    B = np.stack([b for _, b, _ in out])
    residual = max(r for _, _, r in out)
    x = np.arange(1, N) / N
    stderr = B.std(axis=0, ddof=1) / np.sqrt(len(B)) if len(B) > 1 else np.zeros(N - 1)
    return x, A.mean(axis=0)[: N - 1], B.mean(axis=0), stderr, residual


_IDENTITY_CHECK = "tridiag_identity_residual"


def _profile_rows(x, mean_a, mean_b, stderr_b):
    return [(x[i], mean_a[i], mean_b[i], stderr_b[i]) for i in range(len(x))]


def _cell_profile(manifest, gamma, N, workers):
    x, mean_a, mean_b, stderr_b, res = mean_profile_cell(manifest, gamma, N, workers)
    imax = int(np.argmax(mean_b))
    summary = {
        "aggregate": [[gamma, N, manifest.realizations, float(mean_b[imax]), float(x[imax])]],
        "checks": {_IDENTITY_CHECK: {"value": res, "tol": 1e-8}},
    }
    return ("x,mean_a,mean_b,stderr_b".split(","),
            _profile_rows(x, mean_a, mean_b, stderr_b), summary)


def _cell_fit(manifest, gamma, N, workers):
    x, mean_a, mean_b, stderr_b, res = mean_profile_cell(manifest, gamma, N, workers)
    prof = np.column_stack([x, mean_b])
    rows = []
    for form in (AnsatzForm.QLOG, AnsatzForm.SUPERPOSITION):
        f = fit_ansatz(prof, form)
        rows.append([gamma, N, f.p, f.q, f.dp, f.dq, f.epsilon, form.value])
    summary = {"aggregate": rows,
               "checks": {_IDENTITY_CHECK: {"value": res, "tol": 1e-8}}}
    return ("x,mean_a,mean_b,stderr_b".split(","),
            _profile_rows(x, mean_a, mean_b, stderr_b), summary)


def _cell_rstat(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    rs = np.array(_map(_w_rstat, args, workers))
    stderr = rs.std(ddof=1) / np.sqrt(len(rs)) if len(rs) > 1 else 0.0
    rescaled = (gamma - 2.0) * np.log(N)
    summary = {"aggregate": [[gamma, N, float(rs.mean()), float(stderr), float(rescaled)]]}
    return ["realization", "r"], [(i, v) for i, v in enumerate(rs)], summary


def _cell_dos(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    out = _map(_w_profile_eigs, args, workers)
    A = np.stack([o[0] for o in out])
    B = np.stack([o[1] for o in out])
    pooled = np.sort(np.concatenate([o[2] for o in out]))
    identity_res = max(o[3] for o in out)
    x = np.arange(1, N) / N
    mean_a, mean_b = A.mean(axis=0)[: N - 1], B.mean(axis=0)

    fit = fit_ansatz(np.column_stack([x, mean_b]), AnsatzForm.QLOG)
    p_raw = fit.p * fit.scale
    # the closed form lives on 0 <= q < 1; clamp small ergodic undershoots to the
    # semicircle end and localized overshoots into the log-limit branch
    q_eff = float(np.clip(fit.q, 0.0, 1.0 - 5e-4))
    model = DosModel(p_raw, q_eff)

    span = pooled[-1] - pooled[0]
    E = np.linspace(pooled[0] - 0.02 * span, pooled[-1] + 0.02 * span, 401)
    profile = np.column_stack([x, mean_a, mean_b])
    rho_quad = dos_from_lanczos(profile, E)
    rho_closed = dos_closed_form(model, E)
    ks_quad = ks_distance(rho_quad, E, pooled)
    ks_closed = ks_distance(rho_closed, E, pooled)
    norm_quad = float(np.trapezoid(rho_quad, E))
    rows = [(E[i], rho_quad[i], rho_closed[i]) for i in range(len(E))]
    summary = {
        "aggregate": [[gamma, N, p_raw, fit.q, ks_quad, ks_closed]],
        "checks": {"dos_norm_deviation": {"value": norm_quad - 1.0, "tol": 0.02},
                   _IDENTITY_CHECK: {"value": identity_res, "tol": 1e-8}},
    }
    return ["E", "rho_quadrature", "rho_closed"], rows, summary


def _cell_spread(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    norm = manifest.normalization
    H0 = generate_rp(EnsembleConfig(N, gamma, norm, int(seeds[0])))
    t0, _ = build_tfd_krylov(H0, manifest.beta)
    times = build_time_grid(t0.b[0], N)
    psi0 = np.zeros(len(t0.a))
    psi0[0] = 1.0
    trace0 = propagate(t0, psi0, times)
    unit0 = float(np.abs(trace0.occupations.sum(axis=1) - 1.0).max())
    args = [(N, gamma, norm, int(s), manifest.beta, times) for s in seeds[1:]]
    rest = _map(_w_spread, args, workers)
    unit_dev = max([unit0] + [u for _, u in rest])
    KS = np.stack([trace0.ks] + [k for k, _ in rest])
    ks_mean = KS.mean(axis=0)
    stderr = KS.std(axis=0, ddof=1) / np.sqrt(len(KS)) if len(KS) > 1 else np.zeros(len(times))
    has_peak, peak_value, peak_time = detect_peak_curve(times, ks_mean)
    plateau = float(np.mean(ks_mean[int(np.ceil(0.8 * len(times))):]))
    fraction = float(np.mean([smoothed_peak_flag(times, row, REALIZATION_PEAK_THRESHOLD)
                          for row in KS]))
    summary = {
        "aggregate": [[gamma, N, peak_value, peak_time, plateau, int(has_peak), fraction]],
        "checks": {"plateau_drift": {"value": plateau_drift(times, ks_mean), "tol": 0.01},
                   "unitarity_residual": {"value": unit_dev, "tol": 1e-9}},
    }
    rows = [(times[i], ks_mean[i], stderr[i]) for i in range(len(times))]
    return ["t", "Ks_mean", "Ks_stderr"], rows, summary


def _cell_ipr(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    out = _map(_w_ipr, args, workers)
    last = np.array([o[0] for o in out])
    mid = np.array([o[1] for o in out])
    truncated = sum(1 for o in out if o[2] != N)
    orth = max(o[3] for o in out)
    def se(v):
        return float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
    summary = {
        "aggregate": [
            [gamma, N, N - 1, 2, float(last.mean()), se(last)],
            [gamma, N, N // 2, 2, float(mid.mean()), se(mid)],
        ],
        "checks": {"lanczos_truncations": {"value": truncated, "tol": 0},
                   "orthogonality_residual": {"value": orth, "tol": 1e-10}},
    }
    rows = [(i, last[i], mid[i]) for i in range(len(out))]
    return ["realization", "ipr_last", "ipr_mid"], rows, summary


def _cell_logvar(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    sig = np.array(_map(_w_logvar, args, workers))
    stderr = sig.std(ddof=1) / np.sqrt(len(sig)) if len(sig) > 1 else 0.0
    summary = {"aggregate": [[gamma, N, float(sig.mean()), float(stderr)]]}
    return ["realization", "sigma_b"], [(i, v) for i, v in enumerate(sig)], summary


def _cell_sm5(manifest, gamma, N, workers):
    seeds = _cell_seeds(manifest, gamma, N)
    args = [(N, gamma, manifest.normalization, int(s)) for s in seeds]
    out = _map(_w_profile, args, workers)
    mean_b = np.stack([b for _, b, _ in out]).mean(axis=0)
    identity_res = max(r for _, _, r in out)
    alpha, beta = heteroskedastic_equiv(N, gamma, manifest.normalization)
    pred = predict_lanczos_profile(N, alpha, beta)      # rows (x, 0, b) for n = 1..N-2
    x = pred[:, 0]
    b_pred = pred[:, 2]
    b_emp = mean_b[: N - 2]
    rel = np.abs(b_pred - b_emp) / np.abs(b_emp)
    mid = (x >= 0.1) & (x <= 0.9)
    summary = {
        "aggregate": [[gamma, N, float(rel[mid].max()), float(rel[mid].mean())]],
        "checks": {_IDENTITY_CHECK: {"value": identity_res, "tol": 1e-8}},
    }
    rows = [(x[i], b_pred[i], b_emp[i], rel[i]) for i in range(len(x))]
    return ["x", "b_predicted", "b_empirical", "rel_error"], rows, summary


_CELL_FNS = {
    "profile": _cell_profile,
    "fit": _cell_fit,
    "rstat": _cell_rstat,
    "dos": _cell_dos,
    "spread": _cell_spread,
    "ipr": _cell_ipr,
    "logvar": _cell_logvar,
    "sm5": _cell_sm5,
}

_AGG_HEADERS = {
    "profile": ["gamma", "N", "realizations", "b_max", "x_at_max"],
    "fit": ["gamma", "N", "p", "q", "dp", "dq", "epsilon", "form"],
    "rstat": ["gamma", "N", "r_mean", "r_stderr", "rescaled_gamma"],
    "dos": ["gamma", "N", "p_raw", "q", "ks_quadrature", "ks_closed"],
    "spread": ["gamma", "N", "peak_value", "peak_time", "plateau", "has_peak", "has_peak_fraction"],
    "ipr": ["gamma", "N", "k", "ell", "ipr", "stderr"],
    "logvar": ["gamma", "N", "sigma_b", "stderr"],
    "sm5": ["gamma", "N", "max_rel_mid", "mean_rel_mid"],
}


def _post_ipr(manifest: RunManifest, summaries: dict, out_dir: Path):
    """Regress D2 per gamma whenever the sweep covers >= 3 sizes."""
    if len(manifest.N_grid) < 3:
        return
    rows = []
    for gamma in manifest.gamma_grid:
        for rule in (KRule.LAST_VECTOR, KRule.MID_VECTOR):
            recs = []
            for N in manifest.N_grid:
                agg = summaries[(gamma, N)]["aggregate"]
                k = pick_k(N, rule)
                for row in agg:
                    if int(row[2]) == k:
                        recs.append(KrylovIprRecord(gamma, N, k, 2, float(row[4]),
                                                    manifest.realizations))
            exponent = fit_d2(recs, rule)
            rows.append([gamma, rule.value, exponent.d2, exponent.fit_stderr])
    runio.write_csv(Path(out_dir) / "d2.csv", ["gamma", "k_rule", "D2", "stderr"], rows)


def _post_logvar(manifest: RunManifest, summaries: dict, out_dir: Path):
    """Power-law fits per N when a phase region holds >= 5 gamma points."""
    g = np.array(manifest.gamma_grid)
    covered = {"fractal": np.count_nonzero((g > 1.0) & (g <= 2.0)),
               "localized": np.count_nonzero(g > 2.0)}
    keep = [phase for phase, hits in covered.items() if hits >= 5]
    if not keep:
        return
    def in_kept(gamma):
        if "fractal" in keep and 1.0 < gamma <= 2.0:
            return True
        return "localized" in keep and gamma > 2.0

    rows = []
    for N in manifest.N_grid:
        points = np.array([[gamma, summaries[(gamma, N)]["aggregate"][0][2]]
                           for gamma in manifest.gamma_grid if in_kept(gamma)])
        fits = fit_logvar_powerlaw(points, N)
        for phase in keep:
            rows.append([N, phase, *fits[phase]])
    runio.write_csv(Path(out_dir) / "logvar_powerlaw.csv",
                    ["N", "phase", "a", "n", "c"], rows)


_POST_FNS = {"ipr": _post_ipr, "logvar": _post_logvar}


def run(manifest: RunManifest, workers: int | None = None) -> int:
    """Execute a sweep; returns 0 when every cell (and post-processing) succeeded."""
    check_guardrails(manifest)
    workers = resolve_workers(workers)
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cell_fn = _CELL_FNS[manifest.experiment]
    failures = []
    summaries = {}
    for gamma in manifest.gamma_grid:
        for N in manifest.N_grid:
            stem = runio.cell_stem(manifest.experiment, gamma, N)
            if runio.cell_complete(out_dir, stem):
                summaries[(gamma, N)] = runio.load_summary(out_dir, stem)
                continue
            try:
                header, rows, summary = cell_fn(manifest, gamma, N, workers)
            except Exception as err:  # noqa: BLE001 - record and keep sweeping
                failures.append((stem, f"{type(err).__name__}: {err}"))
                continue
            summary.update(status="ok", experiment=manifest.experiment,
                           gamma=gamma, N=N, realizations=manifest.realizations,
                           seed=int(manifest.seed))
            runio.write_cell(out_dir, stem, header, rows, summary)
            summaries[(gamma, N)] = summary
    agg_rows = []
    for gamma in manifest.gamma_grid:
        for N in manifest.N_grid:
            if (gamma, N) in summaries:
                agg_rows.extend(summaries[(gamma, N)]["aggregate"])
    runio.write_csv(out_dir / runio.AGGREGATE_NAME, _AGG_HEADERS[manifest.experiment], agg_rows)
    post = _POST_FNS.get(manifest.experiment)
    payload = manifest.to_dict()
    if post is not None and not failures:
        try:
            post(manifest, summaries, out_dir)
        except Exception as err:  # noqa: BLE001
            failures.append(("post", f"{type(err).__name__}: {err}"))
    if failures:
        payload["failures"] = [f"{stem}: {msg}" for stem, msg in failures]
    runio.finalize_manifest(out_dir, payload)
    for stem, msg in failures:
        print(f"FAIL {stem}: {msg}")
    return 1 if failures else 0


def verify(output_dir) -> int:
    ok, lines = runio.verify_outputs(Path(output_dir))
    for line in lines:
        print(line)
    print("VERIFY:", "pass" if ok else "FAIL")
    return 0 if ok else 1
