"""Command-line interface.

Three subcommands:

* ``run``             execute a JSON experiment config, writing delimited
                      tables, a manifest, and figures to an output directory.
* ``localize``        estimate frequencies from an observation file, either
                      through the dual polynomial of an atomic-norm fit or
                      through the Toeplitz covariance pipeline.
* ``validate-config`` check a config file and echo its normalized form.

Exit codes: 0 success, 1 usage or config problems, 2 unreadable or
malformed input files, 3 solver failure during localization. Worker thread
count defaults to the MMVSPEC_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .atomic import admm_complete, admm_denoise, extract_dual, tau_for_awgn
from .covariance import estimate_toeplitz, lambda_heuristic, sample_covariance
from .dualpoly import locate_peaks, recover_amplitudes
from .errors import (CertificateError, DataFormatError, DomainError,
                     FullRankError, IllPosedError, SolverFailureError)
from .experiments import (config_from_dict, config_to_dict, load_config,
                          run_experiment)
from .model import ObservationMask
from .subspace import estimate_model_order, fit_powers, root_music, subspace_split

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_SOLVER = 3

_SOLVER_ERRORS = (SolverFailureError, CertificateError, IllPosedError,
                  FullRankError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad flags; remap to the usage code."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _default_threads() -> int:
    raw = os.environ.get("MMVSPEC_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="mmvspec",
                     description="Gridless multi-snapshot spectral estimation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, help="JSON config file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--out", default=None,
                       help="output directory (default: <config stem>-out)")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: MMVSPEC_THREADS or 1)")
    p_run.add_argument("--full", action="store_true",
                       help="apply the config's full_overrides (larger sweep)")
    p_run.set_defaults(handler=_cmd_run)

    p_loc = sub.add_parser("localize", help="estimate frequencies from a file")
    p_loc.add_argument("input", help="ensemble or covariance CSV file")
    p_loc.add_argument("--mode", required=True,
                       choices=("atomic", "covariance"))
    p_loc.add_argument("--r", type=int, default=None,
                       help="model order (covariance mode; default: estimated)")
    p_loc.add_argument("--sigma", type=float, default=0.0,
                       help="noise level; positive switches atomic mode to denoising")
    p_loc.add_argument("--eps", type=float, default=1e-3,
                       help="dual-polynomial peak threshold")
    p_loc.add_argument("--out", default=None,
                       help="write the JSON report here instead of stdout")
    p_loc.set_defaults(handler=_cmd_localize)

    p_val = sub.add_parser("validate-config", help="check a config file")
    p_val.add_argument("--config", required=True, help="JSON config file")
    p_val.set_defaults(handler=_cmd_validate)
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except DomainError as exc:
        print(f"mmvspec run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        data = config_to_dict(cfg)
        data["seed"] = args.seed
        cfg = config_from_dict(data)
    out = args.out if args.out else Path(args.config).stem + "-out"
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        print("mmvspec run: error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run_experiment(cfg, out, threads=threads, full=args.full)
    except DomainError as exc:
        print(f"mmvspec run: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = result.manifest
    print(f"{manifest['kind']}: {manifest['trial_rows']} trial rows, "
          f"{len(result.aggregate_rows)} aggregate rows -> {result.out_dir}")
    for name in manifest["files"] + manifest["figures"] + ["manifest.json"]:
        print(f"  {name}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except DomainError as exc:
        print(f"mmvspec validate-config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(config_to_dict(cfg), indent=2, sort_keys=True))
    return EXIT_OK


def _sniff_format(path) -> str:
    with open(path, "r") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise DataFormatError("missing JSON header line", line=1)
    try:
        return str(json.loads(first[1:]).get("format", ""))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"bad JSON header: {exc}", line=1) from exc


def _localize_atomic(Z, mask: ObservationMask, args) -> dict:
    if args.sigma > 0:
        tau = tau_for_awgn(args.sigma, mask.n, mask.L)
        kw = {} if mask.kind == "full" else {"mask": mask}
        res = admm_denoise(Z, tau, **kw)
        Zres = Z if mask.kind == "full" else np.where(mask.bool_array(), Z, res.x)
        Y = extract_dual(Zres, res.x, tau)
    else:
        res = admm_complete(Z, mask, None)
        Y = extract_dual(Z, res.x, state=res.state, mask=mask)
    freqs, peaks = locate_peaks(Y, eps=args.eps)
    amp_mask = None if mask.kind == "full" else mask
    if freqs.size:
        A = recover_amplitudes(freqs, Z, amp_mask).entries
    else:
        A = np.zeros((0, mask.L), dtype=complex)
    return {
        "mode": "atomic",
        "n": mask.n,
        "L": mask.L,
        "freqs": [float(f) for f in freqs],
        "peak_norms": [float(v) for v in peaks],
        "amplitudes": {"re": np.atleast_2d(A).real.tolist(),
                       "im": np.atleast_2d(A).imag.tolist()},
        "diagnostics": {
            "dual_norm_max": float(peaks.max(initial=0.0)),
            "atomic_norm": res.report.atomic_norm_estimate,
            "duality_gap": res.report.duality_gap,
            "iterations": res.report.iterations,
            "converged": bool(res.report.converged),
        },
    }


def _localize_covariance(sample, args) -> dict:
    lam = lambda_heuristic(sample.L, sample.omega.m) if sample.L >= 2 else 1e-3
    est = estimate_toeplitz(sample, lam)
    r = args.r if args.r is not None else estimate_model_order(est.u_hat)
    n = est.u_hat.n
    if not (1 <= r < n):
        raise DomainError(f"model order {r} must lie in [1, n)")
    freqs = root_music(est.u_hat, r)
    powers = fit_powers(est.u_hat, freqs)
    split = subspace_split(est.u_hat, r)
    gap = float(split.eigenvalues[r - 1] - split.eigenvalues[r])
    return {
        "mode": "covariance",
        "n": n,
        "L": sample.L,
        "r": int(r),
        "freqs": [float(f) for f in freqs],
        "powers": [float(p) for p in powers],
        "diagnostics": {
            "eigen_gap": gap,
            "lambda": float(lam),
            "fit_residual": est.fit_residual,
            "iterations": est.iterations,
            "converged": bool(est.converged),
        },
    }


def _cmd_localize(args) -> int:
    from . import dataio
    fmt = _sniff_format(args.input)
    if fmt == "ensemble":
        Z, mask = dataio.read_ensemble_csv(args.input)
        sample = None
    elif fmt == "covariance":
        Z, mask = None, None
        sample = dataio.read_covariance_csv(args.input)
    else:
        raise DataFormatError(f"unsupported input format {fmt!r}", line=1)

    if args.mode == "atomic":
        if Z is None:
            print("mmvspec localize: atomic mode needs an ensemble file",
                  file=sys.stderr)
            return EXIT_USAGE
        try:
            report = _localize_atomic(Z, mask, args)
        except _SOLVER_ERRORS as exc:
            print(f"mmvspec localize: solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    else:
        if sample is None:
            if mask.kind == "entrywise":
                print("mmvspec localize: covariance mode needs common rows",
                      file=sys.stderr)
                return EXIT_USAGE
            rows = list(mask.rows) if mask.kind == "common-rows" else list(range(mask.n))
            omega = ObservationMask.common_rows(rows, mask.n, mask.L)
            sample = sample_covariance(Z[rows, :], omega, mask.L)
        try:
            report = _localize_covariance(sample, args)
        except DomainError as exc:
            # an out-of-range --r, not a data problem
            print(f"mmvspec localize: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except _SOLVER_ERRORS as exc:
            print(f"mmvspec localize: solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER

    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version print and exit
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except (DataFormatError, OSError) as exc:
        print(f"mmvspec: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        # invalid values inside an otherwise well-formed input file
        print(f"mmvspec: invalid input: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
