"""Command-line front door.

Subcommands
-----------
calibrate   fit rejection thresholds at a target joint error level
bound       false/true-discovery bounds for a chosen set of hypotheses
reproduce   run the bundled simulation grids and reference tables to CSV
serve       launch the local HTTP service used by the explorer UI

Every command is deterministic given ``--seed``: identical invocations write
byte-identical output. Exit codes: 0 success, 1 computation refused (e.g. an
exact-enumeration cap), 2 bad input.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources

import numpy as np

from .bounds import bound_detail, sbar_topk_curve, vstar_bruteforce
from .calibration import (Calibration, calibrate_unknown, known_calibrator,
                          step_down, unknown_calibrator)
from .experiments import (balanced_grid_config, jer_grid_config,
                          power_grid_config, resolve_threads, run_jer_grid,
                          run_orderstat_table, run_power_grid, run_size_table,
                          write_csv)
from .models import (NullJointSampler, pvalues, read_matrix_csv,
                     sign_flip_transforms, test_statistics)
from .templates import LinearTemplate, fit_balanced_known, fit_balanced_unknown

EXIT_OK = 0
EXIT_REFUSED = 1
EXIT_BAD_INPUT = 2

LONG_RANGE_THETAS = (-2.0, -1.0, -0.5, -0.2)


class Refusal(RuntimeError):
    """A computation the tool declines to attempt (exit code 1)."""


def _read_pvalues(path: str) -> np.ndarray:
    p = read_matrix_csv(path).ravel()
    if p.size == 0:
        raise ValueError(f"{path}: no values")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError(f"{path}: p-values must be in [0, 1]")
    return p


def _parse_cov(text: str):
    """'indep' | 'equi:RHO' | 'toeplitz:THETA' -> (rho, theta)."""
    if text == "indep":
        return 0.0, None
    kind, _, value = text.partition(":")
    if not value:
        raise ValueError(f"--cov {text!r}: expected indep, equi:RHO or "
                         "toeplitz:THETA")
    if kind == "equi":
        return float(value), None
    if kind == "toeplitz":
        return 0.0, float(value)
    raise ValueError(f"--cov {text!r}: unknown covariance kind {kind!r}")


def _parse_set(text: str, m: int) -> tuple:
    """Comma-separated 0-based indices; empty string means the empty set."""
    if not text.strip():
        return ()
    out = []
    for tok in text.split(","):
        i = int(tok)
        if not 0 <= i < m:
            raise ValueError(f"--set index {i} out of range for m={m}")
        out.append(i)
    return tuple(sorted(set(out)))


def _write_text(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _rows_to_csv_text(rows) -> str:
    import csv as _csv
    import io
    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    from .experiments import CSV_COLUMNS
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([str(v) for v in row.as_record()])
    return buf.getvalue()


def demo_path(name: str) -> str:
    """Filesystem path of a bundled demo dataset (demo_data, demo_pvalues)."""
    return str(resources.files("posthoc") / "data" / f"{name}.csv")


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

class NeedsRawData(ValueError):
    """The requested method requires an observation matrix, not p-values."""


def calibrate_core(method: str, *, p=None, X=None, template: str = "linear",
                   K: int | None = None, alpha: float = 0.25, B: int = 1000,
                   seed: int = 0, sided: str = "two", cov: str = "indep",
                   use_step_down: bool = False) -> Calibration:
    """One calibration, end to end — the reference behavior.

    Both the CLI and the HTTP service delegate here, which is what makes
    their outputs identical for identical inputs. Exactly one of ``p`` (a
    p-value vector) or ``X`` (an m-by-n observation matrix) must be given;
    sign-flipping requires ``X``.
    """
    if (p is None) == (X is None):
        raise ValueError("exactly one of p or X must be given")
    if X is not None:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d matrix")
        m, n = X.shape
        p = pvalues(test_statistics(X), sided=sided)
    else:
        p = np.asarray(p, dtype=np.float64)
        m, n = p.size, 0

    if K is None:
        K = m
    if not 1 <= K <= m:
        raise ValueError(f"K must be in 1..{m}, got {K}")
    if template not in ("linear", "balanced"):
        raise ValueError(f"unknown template {template!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")

    rng = np.random.default_rng(seed)

    if method == "simes-fixed":
        if template != "linear":
            raise ValueError("method simes-fixed requires the linear "
                             "template (fixed thresholds alpha*k/m)")
        tpl = LinearTemplate(m=m, K=K)
        cal = Calibration(lam=alpha, alpha=alpha, B=0, mode="fixed", m=m,
                          thresholds=tpl.thresholds(alpha),
                          set_used=tuple(range(m)), seed=seed)
    elif method == "mc-known":
        rho, theta = _parse_cov(cov)
        sampler = NullJointSampler(m=m, rho=rho, theta=theta, sided=sided)
        if template == "linear":
            tpl = LinearTemplate(m=m, K=K)
        else:
            tpl = fit_balanced_known(sampler, m, K, B, rng)
        calibrator = known_calibrator(tpl, sampler, alpha, B, seed=rng)
        if use_step_down:
            cal = step_down(calibrator, tpl, p)
        else:
            cal = calibrator(tuple(range(m)))
    elif method == "sign-flip":
        if X is None:
            raise NeedsRawData("method sign-flip needs a raw observation "
                               "matrix, not p-values")
        transforms = sign_flip_transforms(n, B, rng)
        if template == "linear":
            tpl = LinearTemplate(m=m, K=K)
        else:
            tpl = fit_balanced_unknown(X, transforms, K, sided=sided)
        if use_step_down:
            calibrator = unknown_calibrator(tpl, X, transforms, alpha,
                                            sided=sided)
            cal = step_down(calibrator, tpl, p)
        else:
            cal = calibrate_unknown(tpl, X, transforms, alpha, range(m),
                                    sided=sided)
    else:
        raise ValueError(f"unknown method {method!r}")

    return dataclasses.replace(cal, seed=seed)


def cmd_calibrate(args) -> int:
    if args.data is not None:
        X = read_matrix_csv(args.data)
        p = None
    else:
        X = None
        p = _read_pvalues(args.pvalues)
    cal = calibrate_core(args.method, p=p, X=X, template=args.template,
                         K=args.K, alpha=args.alpha, B=args.B,
                         seed=args.seed, sided=args.sided, cov=args.cov,
                         use_step_down=args.step_down)
    _write_text(json.dumps(cal.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bound
# ---------------------------------------------------------------------------

def cmd_bound(args) -> int:
    with open(args.calibration) as fh:
        cal = Calibration.from_json(json.load(fh))
    fam = cal.family()
    p = _read_pvalues(args.pvalues)
    if p.size != cal.m:
        raise ValueError(f"p-values have length {p.size}, calibration "
                         f"expects m={cal.m}")

    if args.top_k is not None:
        n_max = args.top_k
        if not 1 <= n_max <= cal.m:
            raise ValueError(f"--top-k must be in 1..{cal.m}")
        curve = sbar_topk_curve(fam, p, n_max)
        lines = ["k,sbar"]
        lines += [f"{k},{int(s)}" for k, s in enumerate(curve, start=1)]
        _write_text("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    R = _parse_set(args.set, cal.m)
    detail = bound_detail(R, fam, p)
    body = {"vbar": detail.vbar, "sbar": detail.sbar,
            "k_argmin": detail.k_argmin}
    if args.exact:
        if len(R) > args.exact_cap:
            raise Refusal(
                f"exact enumeration over {len(R)} items needs 2^{len(R)} "
                f"subset checks; refusing above --exact-cap={args.exact_cap}")
        body["vstar"] = vstar_bruteforce(R, fam, p, cap=args.exact_cap)
    _write_text(json.dumps(body, indent=2) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

def cmd_reproduce(args) -> int:
    target = args.target
    threads = resolve_threads(args.threads)
    if target == "orderstat-table":
        rows = run_orderstat_table()
    elif target == "size-table":
        kw = {}
        if args.runs is not None:
            kw["runs"] = args.runs
        if args.seed is not None:
            kw["seed"] = args.seed
        rows = run_size_table(**kw)
    elif target in ("jer-linear", "jer-balanced"):
        build = jer_grid_config if target == "jer-linear" else \
            balanced_grid_config
        kw = dict(paper_scale=args.paper_scale, runs=args.runs,
                  threads=threads)
        if args.seed is not None:
            kw["seed"] = args.seed
        if target == "jer-linear" and args.long_range:
            kw["thetas"] = LONG_RANGE_THETAS
        cfg = build(**kw)
        rows = run_jer_grid(cfg)
    elif target == "power":
        kw = dict(paper_scale=args.paper_scale, runs=args.runs,
                  threads=threads)
        if args.seed is not None:
            kw["seed"] = args.seed
        rows = run_power_grid(power_grid_config(**kw))
    else:  # pragma: no cover - argparse choices prevent this
        raise ValueError(f"unknown target {target!r}")

    if args.out is None or args.out == "-":
        sys.stdout.write(_rows_to_csv_text(rows))
    else:
        write_csv(rows, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    app = create_app(ui_dir=args.ui, snapshot_path=args.snapshot)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posthoc",
        description="Simultaneous false/true-discovery bounds for arbitrary "
                    "post hoc selections, with resampling-calibrated "
                    "thresholds.")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser(
        "calibrate",
        help="fit rejection thresholds at a target joint error level")
    src = cal.add_mutually_exclusive_group(required=True)
    src.add_argument("--pvalues", help="CSV with one p-value per line")
    src.add_argument("--data", help="CSV observation matrix, one row per "
                                    "hypothesis, one column per observation")
    cal.add_argument("--method", required=True,
                     choices=("simes-fixed", "mc-known", "sign-flip"),
                     help="fixed classical thresholds, Monte Carlo against a "
                          "known null law, or sign-flipping the raw data")
    cal.add_argument("--cov", default="indep",
                     help="null covariance for mc-known: indep, equi:RHO, "
                          "or toeplitz:THETA")
    cal.add_argument("--template", default="linear",
                     choices=("linear", "balanced"))
    cal.add_argument("--K", type=int, default=None,
                     help="template depth (default: m)")
    cal.add_argument("--alpha", type=float, default=0.25,
                     help="target joint error level (default 0.25)")
    cal.add_argument("--B", type=int, default=1000,
                     help="Monte Carlo draws / sign flips (default 1000)")
    cal.add_argument("--seed", type=int, default=0)
    cal.add_argument("--sided", choices=("one", "two"), default="two")
    cal.add_argument("--step-down", action="store_true",
                     help="iterate calibration on the surviving set")
    cal.add_argument("--out", default=None, help="output JSON path "
                                                 "(default stdout)")
    cal.set_defaults(func=cmd_calibrate)

    bnd = sub.add_parser(
        "bound",
        help="false/true-discovery bounds for a chosen hypothesis set")
    bnd.add_argument("--calibration", required=True,
                     help="calibration JSON from `posthoc calibrate`")
    bnd.add_argument("--pvalues", required=True,
                     help="CSV with one p-value per line")
    what = bnd.add_mutually_exclusive_group(required=True)
    what.add_argument("--set", help="comma-separated 0-based indices "
                                    "(empty string for the empty set)")
    what.add_argument("--top-k", type=int, dest="top_k",
                      help="sweep the k smallest p-values, k=1..N, emitting "
                           "a CSV curve of true-discovery lower bounds")
    bnd.add_argument("--exact", action="store_true",
                     help="also compute the exact optimal bound by subset "
                          "enumeration (small sets only)")
    bnd.add_argument("--exact-cap", type=int, default=20,
                     help="refuse --exact above this set size (default 20)")
    bnd.add_argument("--out", default=None)
    bnd.set_defaults(func=cmd_bound)

    rep = sub.add_parser(
        "reproduce",
        help="run a bundled simulation grid or reference table to CSV")
    rep.add_argument("target", choices=("orderstat-table", "size-table",
                                        "jer-linear", "jer-balanced",
                                        "power"))
    rep.add_argument("--runs", type=int, default=None,
                     help="Monte Carlo repetitions (default: per-target)")
    rep.add_argument("--seed", type=int, default=None)
    rep.add_argument("--paper-scale", action="store_true",
                     help="full-size grids (hours) instead of desk scale "
                          "(minutes)")
    rep.add_argument("--long-range", action="store_true",
                     help="jer-linear only: long-range dependent "
                          "covariance grid instead of equi-correlated")
    rep.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: POSTHOC_THREADS or "
                          "CPU count); results do not depend on this")
    rep.add_argument("--out", default=None, help="output CSV path "
                                                 "(default stdout)")
    rep.set_defaults(func=cmd_reproduce)

    srv = sub.add_parser("serve", help="start the local HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8787)
    srv.add_argument("--ui", default=None,
                     help="directory of built UI assets to serve at /ui")
    srv.add_argument("--snapshot", default=None,
                     help="JSON file to snapshot sessions into on shutdown")
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
