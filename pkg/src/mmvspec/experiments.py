"""Config-driven Monte Carlo experiments.

A run takes an ``ExperimentConfig`` (usually loaded from a JSON file),
executes the trial grid, and writes to an output directory:

* ``trials.csv``     one row per trial (per method, where several run);
  byte-identical across repeat runs with the same config and seed.
* ``aggregate.csv``  one row per sweep point.
* ``manifest.json``  config echo and hash, library version, wall-clock.
* one PNG figure rendering the aggregate.

Trial rows never contain timing; solver effort is recorded as iteration
counts so outputs stay reproducible. Each trial draws from a counter-based
generator keyed by ``(seed XOR trial, sweep index)``, making every trial
independent of execution order and thread count.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from statistics import median

import numpy as np

from ._version import __version__
from .atomic import (AdmmOptions, admm_complete, admm_denoise, extract_dual,
                     tau_for_awgn)
from .baselines import (CrbInput, fisher_crb, freq_mse, group_lasso_dft,
                        normalized_error, per_vector_mse)
from .covariance import (covariance_exact, estimate_toeplitz, lambda_heuristic,
                         sample_covariance)
from .dualpoly import eval_dual_poly, locate_frequencies, locate_peaks, recover_amplitudes
from .errors import (CertificateError, DomainError, FullRankError,
                     IllPosedError, SolverFailureError)
from .model import (FrequencySet, ObservationMask, draw_frequencies,
                    rng_from_seed, synthesize)
from .subspace import fit_powers, music_pseudospectrum, root_music, subspace_split

__all__ = [
    "KINDS",
    "ExperimentConfig",
    "ExperimentResult",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "apply_full_overrides",
    "run_experiment",
]

KINDS = ("complete", "denoise", "covariance", "phase-transition",
         "crb-compare", "baseline-compare", "localize")

SIGNAL_CUTOFF = 1e-5
FREQ_CUTOFF = 1e-5

_SOLVER_ERRORS = (SolverFailureError, CertificateError, IllPosedError,
                  FullRankError, DomainError)


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment.

    ``min_sep`` and ``delta_values`` are in units of 1/n. ``m`` is the
    number of observed rows (or entries per column for entrywise masks);
    ``omega`` pins the observed row set instead of drawing it per trial.
    ``tol`` of 0 keeps each solver's default stopping tolerance.
    ``full_overrides`` are merged over the config when a run is invoked
    with the full-scale flag.
    """

    kind: str
    label: str = ""
    n: int = 64
    m: int = 0
    r_values: tuple[int, ...] = (4,)
    L_values: tuple[int, ...] = (1,)
    sigma: float = 0.0
    min_sep: float = 1.0
    trials: int = 20
    seed: int = 0
    mask: str = "full"
    coeffs: str = "gaussian"
    delta_values: tuple[float, ...] = ()
    freqs: tuple[float, ...] = ()
    omega: tuple[int, ...] = ()
    eps: float = 1e-3
    oversampling: int = 4
    mu: float = 0.05
    rho: float = 1.0
    max_iters: int = 100_000
    tol: float = 0.0
    full_overrides: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentResult:
    out_dir: Path
    trial_columns: tuple[str, ...]
    trial_rows: tuple[tuple, ...]
    aggregate_columns: tuple[str, ...]
    aggregate_rows: tuple[tuple, ...]
    manifest: dict


_INT_TUPLES = ("r_values", "L_values", "omega")
_FLOAT_TUPLES = ("delta_values", "freqs")


def config_from_dict(data) -> ExperimentConfig:
    """Build a validated config; problems raise DomainError naming the fields."""
    if not isinstance(data, dict):
        raise DomainError("config must be a JSON object")
    problems = []
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        problems.append("unknown fields: " + ", ".join(unknown))
    kw = {}

    def take(name, conv, check=lambda v: True, want=""):
        if name not in data:
            return
        try:
            v = conv(data[name])
            if not check(v):
                raise ValueError
            kw[name] = v
        except (TypeError, ValueError):
            problems.append(f"{name}: expected {want} (got {data[name]!r})")

    def int_tuple(v):
        return tuple(int(x) for x in v)

    def float_tuple(v):
        return tuple(float(x) for x in v)

    take("kind", str, lambda s: s in KINDS, "one of " + ", ".join(KINDS))
    take("label", str, want="a string")
    take("n", int, lambda v: v >= 2, "an integer >= 2")
    take("m", int, lambda v: v >= 0, "a nonnegative integer")
    take("trials", int, lambda v: v >= 0, "a nonnegative integer")
    take("seed", int, lambda v: v >= 0, "a nonnegative integer")
    take("max_iters", int, lambda v: v >= 1, "a positive integer")
    take("oversampling", int, lambda v: v >= 1, "a positive integer")
    take("sigma", float, lambda v: v >= 0, "a nonnegative number")
    take("min_sep", float, lambda v: v >= 0, "a nonnegative number")
    take("eps", float, lambda v: 0 < v < 1, "a number in (0, 1)")
    take("mu", float, lambda v: v > 0, "a positive number")
    take("rho", float, lambda v: v > 0, "a positive number")
    take("tol", float, lambda v: v >= 0, "a nonnegative number")
    take("mask", str, lambda s: s in ("full", "common-rows", "entrywise"),
         "full, common-rows, or entrywise")
    take("coeffs", str, lambda s: s in ("gaussian", "unit-phase"),
         "gaussian or unit-phase")
    for name in _INT_TUPLES:
        take(name, int_tuple, lambda v: all(x >= 0 for x in v),
             "a list of nonnegative integers")
    for name in _FLOAT_TUPLES:
        take(name, float_tuple, lambda v: all(x >= 0 for x in v),
             "a list of nonnegative numbers")
    if "full_overrides" in data:
        if isinstance(data["full_overrides"], dict):
            kw["full_overrides"] = dict(data["full_overrides"])
        else:
            problems.append("full_overrides: expected an object")

    if "kind" not in data:
        problems.append("kind: required")
    cfg = None
    if not problems:
        cfg = ExperimentConfig(**kw)
        problems.extend(_kind_problems(cfg))
    if problems:
        raise DomainError("invalid config: " + "; ".join(problems))
    return cfg


def _kind_problems(cfg: ExperimentConfig) -> list[str]:
    out = []
    needs_m = cfg.mask != "full" and not (cfg.omega and cfg.mask == "common-rows")
    if cfg.kind in ("complete", "covariance", "baseline-compare") and needs_m and cfg.m < 1:
        out.append("m: required for a non-full mask without a fixed omega")
    if cfg.kind == "covariance" and cfg.mask != "common-rows":
        out.append("mask: covariance experiments need common-rows observations")
    if cfg.kind == "baseline-compare" and cfg.mask != "common-rows":
        out.append("mask: baseline comparisons need common-rows observations")
    if cfg.kind == "phase-transition":
        if not cfg.delta_values:
            out.append("delta_values: required for phase-transition")
        if cfg.sigma <= 0:
            out.append("sigma: phase-transition needs a positive noise level")
    if cfg.kind == "crb-compare":
        if len(cfg.freqs) != 2:
            out.append("freqs: crb-compare needs exactly two fixed frequencies")
        if cfg.sigma <= 0:
            out.append("sigma: crb-compare needs a positive noise level")
    if cfg.kind == "denoise" and cfg.sigma <= 0:
        out.append("sigma: denoising needs a positive noise level")
    if not cfg.r_values:
        out.append("r_values: must not be empty")
    if not cfg.L_values:
        out.append("L_values: must not be empty")
    for name in ("r_values", "L_values"):
        if any(v < 1 for v in getattr(cfg, name)):
            out.append(f"{name}: entries must be positive")
    if cfg.omega and any(not (0 <= i < cfg.n) for i in cfg.omega):
        out.append("omega: row indices must lie in [0, n)")
    return out


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    for key in _INT_TUPLES + _FLOAT_TUPLES:
        out[key] = list(out[key])
    return out


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file.

    Unreadable or syntactically broken files raise DataFormatError (an I/O
    problem); a parseable file with bad fields raises DomainError listing
    the offending fields.
    """
    from .errors import DataFormatError
    with open(path, "r") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"config is not valid JSON: {exc}",
                                  line=exc.lineno) from exc
    return config_from_dict(data)


def apply_full_overrides(cfg: ExperimentConfig) -> ExperimentConfig:
    """Merge ``full_overrides`` on top of the config (full-scale runs)."""
    if not cfg.full_overrides:
        return cfg
    base = config_to_dict(cfg)
    overrides = base.pop("full_overrides")
    base.update(overrides)
    base["full_overrides"] = {}
    return config_from_dict(base)


# --------------------------------------------------------------------------
# shared trial helpers


def _trial_rng(cfg: ExperimentConfig, sweep_idx: int, trial: int):
    return rng_from_seed(cfg.seed ^ trial, word=sweep_idx)


def _draw_freqs(cfg: ExperimentConfig, r: int, rng) -> FrequencySet:
    sep = cfg.min_sep / cfg.n if cfg.min_sep > 0 else 0.0
    return draw_frequencies(r, rng, min_sep=sep)


def _draw_coeffs(kind: str, r: int, L: int, rng) -> np.ndarray:
    if kind == "unit-phase":
        return np.exp(2j * np.pi * rng.random((r, L)))
    z = rng.standard_normal((r, L)) + 1j * rng.standard_normal((r, L))
    return z / np.sqrt(2.0)


def _noise(shape, sigma: float, rng) -> np.ndarray:
    if sigma <= 0:
        return np.zeros(shape, dtype=complex)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return (sigma / np.sqrt(2.0)) * w


def _draw_mask(cfg: ExperimentConfig, L: int, rng) -> ObservationMask:
    n = cfg.n
    if cfg.mask == "full":
        return ObservationMask.full(n, L)
    if cfg.mask == "common-rows":
        rows = cfg.omega if cfg.omega else sorted(
            int(i) for i in rng.choice(n, size=cfg.m, replace=False))
        return ObservationMask.common_rows(rows, n, L)
    cells = []
    for l in range(L):
        for i in rng.choice(n, size=cfg.m, replace=False):
            cells.append((int(i), l))
    return ObservationMask.entrywise(cells, n, L)


def _opts(cfg: ExperimentConfig, default_tol: float) -> AdmmOptions:
    tol = cfg.tol if cfg.tol > 0 else default_tol
    return AdmmOptions(rho=cfg.rho, max_iters=cfg.max_iters,
                       tol_primal=tol, tol_dual=tol)


def _map_tasks(threads: int, tasks):
    if threads <= 1:
        return [fn() for fn in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda fn: fn(), tasks))


def _grouped(rows, key):
    out = {}
    for row in rows:
        out.setdefault(key(row), []).append(row)
    return sorted(out.items())


def _atomic_frequencies(Z, mask, cfg):
    """Frequency estimates from the dual of the fitting atomic-norm program.

    Noiseless data is interpolated exactly; noisy data is denoised with the
    AWGN weight. Returns (FrequencySet, iterations, converged).
    """
    if cfg.sigma > 0:
        tau = tau_for_awgn(cfg.sigma, cfg.n, mask.L)
        kw = {} if mask.kind == "full" else {"mask": mask}
        res = admm_denoise(Z, tau, _opts(cfg, 1e-5), **kw)
        Zres = Z if mask.kind == "full" else np.where(mask.bool_array(), Z, res.x)
        Y = extract_dual(Zres, res.x, tau)
    else:
        res = admm_complete(Z, mask, _opts(cfg, 1e-6))
        Y = extract_dual(Z, res.x, state=res.state, mask=mask)
    fs = locate_frequencies(Y, eps=cfg.eps)
    return fs, res.report.iterations, res.report.converged


# --------------------------------------------------------------------------
# experiment kinds


def _run_complete(cfg, threads, out_dir):
    sweep = list(product(cfg.r_values, cfg.L_values))
    tasks = []
    for s_idx, (r, L) in enumerate(sweep):
        for t in range(cfg.trials):
            tasks.append(lambda s=s_idx, r=r, L=L, t=t: _complete_trial(cfg, s, r, L, t))
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("r", "L", "trial", "rel_error", "success", "iterations",
             "converged", "atomic_norm")
    acols = ("r", "L", "trials", "success_rate", "median_rel_error",
             "mean_iterations")
    arows = []
    for (r, L), grp in _grouped(rows, lambda w: (w[0], w[1])):
        arows.append((r, L, len(grp),
                      sum(w[4] for w in grp) / len(grp),
                      median(w[3] for w in grp),
                      sum(w[5] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _complete_trial(cfg, s_idx, r, L, t):
    rng = _trial_rng(cfg, s_idx, t)
    fs = _draw_freqs(cfg, r, rng)
    C = _draw_coeffs(cfg.coeffs, r, L, rng)
    X = synthesize(fs, C, cfg.n).data
    mask = _draw_mask(cfg, L, rng)
    Zobs = np.where(mask.bool_array(), X, 0.0)
    try:
        res = admm_complete(Zobs, mask, _opts(cfg, 1e-6))
    except _SOLVER_ERRORS:
        return [(r, L, t, float("inf"), 0, cfg.max_iters, 0, float("nan"))]
    err = normalized_error(res.x, X)
    return [(r, L, t, err, int(err < SIGNAL_CUTOFF), res.report.iterations,
             int(res.report.converged), res.report.atomic_norm_estimate)]


def _run_denoise(cfg, threads, out_dir):
    r = cfg.r_values[0]
    tasks = []
    for s_idx, L in enumerate(cfg.L_values):
        for t in range(cfg.trials):
            tasks.append(lambda s=s_idx, L=L, t=t: _denoise_trial(cfg, s, r, L, t))
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("L", "trial", "mse", "bound", "within_bound", "rel_error",
             "iterations", "converged")
    acols = ("L", "trials", "median_mse", "mean_mse", "median_bound",
             "within_bound_rate")
    arows = []
    for L, grp in _grouped(rows, lambda w: w[0]):
        arows.append((L, len(grp),
                      median(w[2] for w in grp),
                      sum(w[2] for w in grp) / len(grp),
                      median(w[3] for w in grp),
                      sum(w[4] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _denoise_trial(cfg, s_idx, r, L, t):
    rng = _trial_rng(cfg, s_idx, t)
    fs = _draw_freqs(cfg, r, rng)
    C = _draw_coeffs(cfg.coeffs, r, L, rng)
    X = synthesize(fs, C, cfg.n).data
    Z = X + _noise(X.shape, cfg.sigma, rng)
    tau = tau_for_awgn(cfg.sigma, cfg.n, L)
    res = admm_denoise(Z, tau, _opts(cfg, 1e-5))
    mse = per_vector_mse(res.x, X)
    # the oracle bound needs the true ensemble's atomic norm; interpolating
    # the fully observed truth computes it
    full = ObservationMask.full(cfg.n, L)
    anorm_star = admm_complete(X, full, _opts(cfg, 1e-6)).report.atomic_norm_estimate
    bound = 2.0 * tau * anorm_star / L
    return [(L, t, mse, bound, int(mse <= bound), normalized_error(res.x, X),
             res.report.iterations, int(res.report.converged))]


def _run_covariance(cfg, threads, out_dir):
    sweep = list(product(cfg.r_values, cfg.L_values))
    tasks = []
    for s_idx, (r, L) in enumerate(sweep):
        for t in range(cfg.trials):
            tasks.append(lambda s=s_idx, r=r, L=L, t=t: _covariance_trial(cfg, s, r, L, t))
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("r", "L", "trial", "rel_error", "lambda", "iterations",
             "converged", "fit_residual")
    acols = ("r", "L", "trials", "median_rel_error", "mean_rel_error")
    arows = []
    for (r, L), grp in _grouped(rows, lambda w: (w[0], w[1])):
        arows.append((r, L, len(grp),
                      median(w[3] for w in grp),
                      sum(w[3] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _covariance_trial(cfg, s_idx, r, L, t):
    rng = _trial_rng(cfg, s_idx, t)
    fs = _draw_freqs(cfg, r, rng)
    u_star = covariance_exact(fs, np.ones(r), cfg.n)
    mask = _draw_mask(cfg, L, rng)
    C = _draw_coeffs("gaussian", r, L, rng)
    X = synthesize(fs, C, cfg.n).data
    Xobs = X[list(mask.rows), :] + _noise((mask.m, L), cfg.sigma, rng)
    S = sample_covariance(Xobs, mask, L)
    lam = lambda_heuristic(L, mask.m)
    est = estimate_toeplitz(S, lam, _opts(cfg, 1e-6))
    err = normalized_error(est.u_hat.u, u_star.u)
    return [(r, L, t, err, lam, est.iterations, int(est.converged),
             est.fit_residual)]


def _run_phase_transition(cfg, threads, out_dir):
    sweep = list(product(cfg.delta_values, cfg.L_values))
    tasks = []
    for s_idx, (delta, L) in enumerate(sweep):
        for t in range(cfg.trials):
            tasks.append(lambda s=s_idx, d=delta, L=L, t=t: _phase_trial(cfg, s, d, L, t))
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("delta", "L", "trial", "method", "observations", "freq_mse",
             "success")
    acols = ("delta", "L", "method", "observations", "trials", "success_rate")
    arows = []
    for key, grp in _grouped(rows, lambda w: (w[0], w[1], w[3], w[4])):
        arows.append(key + (len(grp), sum(w[6] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _phase_trial(cfg, s_idx, delta, L, t):
    n = cfg.n
    rng = _trial_rng(cfg, s_idx, t)
    fs = FrequencySet((0.0, delta / n))
    C = _draw_coeffs(cfg.coeffs, 2, L, rng)
    X = synthesize(fs, C, n).data
    Z = X + _noise(X.shape, cfg.sigma, rng)
    half_rows = sorted(int(i) for i in rng.choice(n, size=n // 2, replace=False))
    out = []
    for obs, mask in (("full", ObservationMask.full(n, L)),
                      ("half", ObservationMask.common_rows(half_rows, n, L))):
        sel = list(mask.rows) if mask.kind == "common-rows" else list(range(n))
        try:
            est, _, _ = _atomic_frequencies(
                np.where(mask.bool_array(), Z, 0.0), mask, cfg)
            fm = freq_mse(est, fs)
        except _SOLVER_ERRORS:
            fm = float("inf")
        out.append((delta, L, t, "atomic", obs, fm, int(fm <= FREQ_CUTOFF)))
        try:
            cov_mask = ObservationMask.common_rows(sel, n, L)
            S = sample_covariance(Z[sel, :], cov_mask, L)
            est2 = estimate_toeplitz(S, lambda_heuristic(L, len(sel)),
                                     _opts(cfg, 1e-6))
            fm2 = freq_mse(root_music(est2.u_hat, 2), fs)
        except _SOLVER_ERRORS:
            fm2 = float("inf")
        out.append((delta, L, t, "covariance", obs, fm2, int(fm2 <= FREQ_CUTOFF)))
    return out


def _run_crb_compare(cfg, threads, out_dir):
    fs = FrequencySet(cfg.freqs)
    tasks = []
    for s_idx, L in enumerate(cfg.L_values):
        for t in range(cfg.trials):
            tasks.append(lambda s=s_idx, L=L, t=t: _crb_trial(cfg, s, fs, L, t))
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("L", "trial", "freq_mse", "crb_mean", "ok", "iterations")
    acols = ("L", "trials", "ok_count", "mean_freq_mse", "mean_crb")
    arows = []
    for L, grp in _grouped(rows, lambda w: w[0]):
        ok = [w for w in grp if w[4]]
        mean_mse = sum(w[2] for w in ok) / len(ok) if ok else float("inf")
        arows.append((L, len(grp), len(ok), mean_mse,
                      sum(w[3] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _crb_trial(cfg, s_idx, fs, L, t):
    n = cfg.n
    rng = _trial_rng(cfg, s_idx, t)
    C = _draw_coeffs("gaussian", 2, L, rng)
    X = synthesize(fs, C, n).data
    Z = X + _noise(X.shape, cfg.sigma, rng)
    crb = fisher_crb(CrbInput(fs.as_array(), C, cfg.sigma, n))
    crb_mean = float((crb[0, 0] + crb[1, 1]) / 2.0)
    tau = tau_for_awgn(cfg.sigma, n, L)
    try:
        res = admm_denoise(Z, tau, _opts(cfg, 1e-5))
        Y = extract_dual(Z, res.x, tau)
        est = locate_frequencies(Y, eps=cfg.eps)
        iters = res.report.iterations
    except _SOLVER_ERRORS:
        return [(L, t, float("inf"), crb_mean, 0, cfg.max_iters)]
    fm = freq_mse(est, fs)
    ok = int(len(est) == len(fs) and np.isfinite(fm))
    return [(L, t, fm if ok else float("inf"), crb_mean, ok, iters)]


def _run_baseline_compare(cfg, threads, out_dir):
    r = cfg.r_values[0]
    L = cfg.L_values[0]
    tasks = [lambda t=t: _baseline_trial(cfg, r, L, t) for t in range(cfg.trials)]
    rows = [row for grp in _map_tasks(threads, tasks) for row in grp]
    tcols = ("trial", "method", "freq_mse", "success", "count", "iterations",
             "converged")
    acols = ("method", "trials", "success_rate", "mean_count")
    arows = []
    for method, grp in _grouped(rows, lambda w: w[1]):
        arows.append((method, len(grp),
                      sum(w[3] for w in grp) / len(grp),
                      sum(w[4] for w in grp) / len(grp)))
    return tcols, rows, acols, arows, {}


def _baseline_trial(cfg, r, L, t):
    n = cfg.n
    rng = _trial_rng(cfg, 0, t)
    fs = _draw_freqs(cfg, r, rng)
    C = _draw_coeffs("gaussian", r, L, rng)
    X = synthesize(fs, C, n).data
    mask = _draw_mask(cfg, L, rng)
    rows = list(mask.rows)
    Z = X + _noise(X.shape, cfg.sigma, rng)
    Zobs = np.where(mask.bool_array(), Z, 0.0)
    out = []

    try:
        est, iters, conv = _atomic_frequencies(Zobs, mask, cfg)
        fm = freq_mse(est, fs)
        out.append((t, "atomic", fm, int(fm <= FREQ_CUTOFF), len(est), iters,
                    int(conv)))
    except _SOLVER_ERRORS:
        out.append((t, "atomic", float("inf"), 0, 0, cfg.max_iters, 0))

    try:
        S = sample_covariance(Z[rows, :], mask, L)
        cov = estimate_toeplitz(S, lambda_heuristic(L, mask.m), _opts(cfg, 1e-6))
        est2 = root_music(cov.u_hat, r)
        fm2 = freq_mse(est2, fs)
        out.append((t, "covariance", fm2, int(fm2 <= FREQ_CUTOFF), len(est2),
                    cov.iterations, int(cov.converged)))
    except _SOLVER_ERRORS:
        out.append((t, "covariance", float("inf"), 0, 0, cfg.max_iters, 0))

    try:
        lasso = group_lasso_dft(Zobs, mask, oversampling=cfg.oversampling,
                                mu=cfg.mu)
        norms = np.linalg.norm(lasso.coeffs, axis=1)
        grid = np.arange(norms.size) / norms.size
        sel = norms >= 0.1 * norms.max(initial=0.0) if norms.max(initial=0.0) > 0 else norms > 0
        est3 = grid[sel]
        fm3 = freq_mse(est3, fs)
        out.append((t, "gridded-lasso", fm3, int(fm3 <= FREQ_CUTOFF),
                    int(sel.sum()), lasso.iterations, int(lasso.converged)))
    except _SOLVER_ERRORS:
        out.append((t, "gridded-lasso", float("inf"), 0, 0, cfg.max_iters, 0))
    return out


def _run_localize(cfg, threads, out_dir):
    # a single end-to-end demonstration instance rather than a Monte Carlo
    # sweep: synthesize, write the observation file, then localize with both
    # the dual-polynomial and the subspace pipelines
    from . import dataio
    r = cfg.r_values[0]
    L = cfg.L_values[0]
    n = cfg.n
    rng = _trial_rng(cfg, 0, 0)
    fs = _draw_freqs(cfg, r, rng)
    C = _draw_coeffs(cfg.coeffs, r, L, rng)
    X = synthesize(fs, C, n).data
    Z = X + _noise(X.shape, cfg.sigma, rng)
    mask = _draw_mask(cfg, L, rng)
    Zobs = np.where(mask.bool_array(), Z, 0.0)
    extras = {"true_freqs": list(fs)}
    files = {}

    if out_dir is not None:
        path = Path(out_dir) / "ensemble.csv"
        dataio.write_ensemble_csv(path, Zobs, mask)
        files["ensemble"] = path.name

    rows = []
    report = {"true_freqs": list(fs)}

    if cfg.sigma > 0:
        tau = tau_for_awgn(cfg.sigma, n, L)
        kw = {} if mask.kind == "full" else {"mask": mask}
        res = admm_denoise(Zobs, tau, _opts(cfg, 1e-5), **kw)
        Zres = Zobs if mask.kind == "full" else np.where(mask.bool_array(), Zobs, res.x)
        Y = extract_dual(Zres, res.x, tau)
    else:
        res = admm_complete(Zobs, mask, _opts(cfg, 1e-6))
        Y = extract_dual(Zobs, res.x, state=res.state, mask=mask)
    peak_fs, peak_vs = locate_peaks(Y, eps=cfg.eps)
    amp_mask = None if mask.kind == "full" else mask
    amps = recover_amplitudes(peak_fs, Zobs, amp_mask).entries if peak_fs.size else np.zeros((0, L))
    amp_norms = np.linalg.norm(np.atleast_2d(amps), axis=1) / np.sqrt(L) if peak_fs.size else np.zeros(0)
    poly = eval_dual_poly(Y)
    extras["dual_curve"] = (poly.grid_freqs, poly.grid_norms)
    extras["atomic_freqs"] = [float(f) for f in peak_fs]
    report["atomic"] = {
        "freqs": [float(f) for f in peak_fs],
        "peak_norms": [float(v) for v in peak_vs],
        "amplitude_norms": [float(a) for a in amp_norms],
        "iterations": res.report.iterations,
        "converged": bool(res.report.converged),
    }
    for k, (f, a) in enumerate(zip(peak_fs, amp_norms)):
        rows.append((0, "atomic", k, float(f), float(a)))

    rows_idx = list(mask.rows) if mask.kind == "common-rows" else list(range(n))
    cov_mask = ObservationMask.common_rows(rows_idx, n, L)
    S = sample_covariance(Z[rows_idx, :], cov_mask, L)
    cov = estimate_toeplitz(S, lambda_heuristic(L, len(rows_idx)), _opts(cfg, 1e-6))
    cov_fs = root_music(cov.u_hat, r)
    powers = fit_powers(cov.u_hat, cov_fs)
    split = subspace_split(cov.u_hat, r)
    gap = float(split.eigenvalues[r - 1] - split.eigenvalues[r]) if r < n else 0.0
    curve = music_pseudospectrum(cov.u_hat, r)
    extras["pseudospectrum"] = (curve.freqs, curve.values)
    extras["covariance_freqs"] = [float(f) for f in cov_fs]
    report["covariance"] = {
        "freqs": [float(f) for f in cov_fs],
        "powers": [float(p) for p in powers],
        "eigen_gap": gap,
        "fit_residual": cov.fit_residual,
        "iterations": cov.iterations,
        "converged": bool(cov.converged),
    }
    for k, (f, p) in enumerate(zip(cov_fs, powers)):
        rows.append((0, "covariance", k, float(f), float(p)))

    if out_dir is not None:
        jpath = Path(out_dir) / "localization.json"
        with open(jpath, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        files["localization"] = jpath.name
        cpath = Path(out_dir) / "dual_curve.csv"
        dataio.write_curve_csv(cpath, poly.grid_freqs, poly.grid_norms,
                               meta={"curve": "dual-polynomial"})
        files["dual_curve"] = cpath.name
        ppath = Path(out_dir) / "pseudospectrum.csv"
        dataio.write_curve_csv(ppath, curve.freqs, curve.values,
                               meta={"curve": "pseudospectrum"})
        files["pseudospectrum"] = ppath.name

    extras["extra_files"] = files
    tcols = ("trial", "method", "index", "freq", "weight")
    acols = ("method", "located")
    arows = [(m, len(g)) for m, g in _grouped(rows, lambda w: w[1])]
    return tcols, rows, acols, arows, extras


_RUNNERS = {
    "complete": _run_complete,
    "denoise": _run_denoise,
    "covariance": _run_covariance,
    "phase-transition": _run_phase_transition,
    "crb-compare": _run_crb_compare,
    "baseline-compare": _run_baseline_compare,
    "localize": _run_localize,
}


# --------------------------------------------------------------------------
# run driver


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path, header: dict, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(v) for v in row) + "\n")


def run_experiment(config: ExperimentConfig, out_dir, threads: int = 1,
                   full: bool = False, make_figures: bool = True) -> ExperimentResult:
    """Execute one experiment and write its outputs under ``out_dir``."""
    cfg = apply_full_overrides(config) if full else config
    problems = _kind_problems(cfg)
    if problems:
        raise DomainError("invalid config: " + "; ".join(problems))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    started_utc = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started))

    tcols, trows, acols, arows, extras = _RUNNERS[cfg.kind](cfg, threads, out)

    cfg_dict = config_to_dict(cfg)
    cfg_json = json.dumps(cfg_dict, sort_keys=True)
    header = {"format": "trials", "kind": cfg.kind, "seed": cfg.seed,
              "version": __version__, "config_sha256":
              hashlib.sha256(cfg_json.encode()).hexdigest()}
    _write_rows(out / "trials.csv", header, tcols, trows)
    header_agg = dict(header, format="aggregate")
    _write_rows(out / "aggregate.csv", header_agg, acols, arows)

    figures = []
    if make_figures:
        from . import figures as figmod
        figures = figmod.render(cfg, tcols, trows, acols, arows, extras, out)

    files = ["trials.csv", "aggregate.csv"]
    files += sorted(extras.get("extra_files", {}).values())
    manifest = {
        "kind": cfg.kind,
        "label": cfg.label,
        "config": cfg_dict,
        "config_sha256": header["config_sha256"],
        "seed": cfg.seed,
        "version": __version__,
        "threads": int(threads),
        "full": bool(full),
        "trial_rows": len(trows),
        "files": files,
        "figures": figures,
        "started_utc": started_utc,
        "wall_seconds": time.time() - started,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return ExperimentResult(out, tuple(tcols), tuple(tuple(r) for r in trows),
                            tuple(acols), tuple(tuple(r) for r in arows),
                            manifest)
