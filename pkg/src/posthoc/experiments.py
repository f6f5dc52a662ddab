"""Monte Carlo harness: error-rate and power grids over the Gaussian models.

Layout
------
A *grid* is a cross product of model cells (dependence level, pi0, mubar);
inside each cell every Monte Carlo repetition draws one dataset and one batch
of shared randomness, then evaluates every requested template size, mode and
alpha on that same draw.  Full pairing keeps comparisons (step-down versus
single-step, balanced versus linear) free of between-run noise.

Every repetition owns an independent RNG substream derived from
``SeedSequence(entropy=seed, spawn_key=(cell_index, rep))``, so results are
bit-identical for a given seed no matter how repetitions are chunked or how
many worker processes run them.  Aggregation concatenates per-rep outputs in
repetition order before any reduction.

Results are flat ``ResultRow`` records; ``write_csv`` serializes them with a
fixed column set.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bounds import ThresholdFamily, as_pvalues, bound_detail
from .calibration import calibrator_from_matrix, step_down
from .models import (DataModel, NullJointSampler, orderstat_cdf_independent,
                     pvalues, sample_dataset, sign_flip_transforms,
                     flip_statistics, test_statistics)
from .templates import (BalancedTemplate, LinearTemplate, fit_balanced_known,
                        fit_balanced_unknown)

__all__ = [
    "CSV_COLUMNS",
    "ResultRow",
    "ExperimentConfig",
    "jer_violation",
    "averaged_power",
    "bh_rejections",
    "select_scenario",
    "run_jer_grid",
    "run_power_grid",
    "run_size_table",
    "run_orderstat_table",
    "jer_grid_config",
    "balanced_grid_config",
    "power_grid_config",
    "default_alpha_grid",
    "write_csv",
    "resolve_threads",
]

CSV_COLUMNS = ("setting-id", "m", "n", "rho_or_theta", "pi0", "mubar",
               "alpha", "template", "K", "mode", "scenario", "estimate",
               "stderr", "runs_used", "seed")


@dataclass(frozen=True)
class ResultRow:
    """One aggregated estimate (a single CSV line)."""

    setting_id: str
    m: int
    n: int
    rho_or_theta: float
    pi0: float
    mubar: float
    alpha: float
    template: str
    K: int
    mode: str
    scenario: str
    estimate: float
    stderr: float
    runs_used: int
    seed: int

    def as_record(self) -> tuple:
        return (self.setting_id, self.m, self.n, self.rho_or_theta, self.pi0,
                self.mubar, self.alpha, self.template, self.K, self.mode,
                self.scenario, self.estimate, self.stderr, self.runs_used,
                self.seed)


def write_csv(rows, path) -> None:
    """Write rows to ``path`` with the fixed column header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([str(v) for v in row.as_record()])


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else POSTHOC_THREADS, else CPU count."""
    if threads is None:
        env = os.environ.get("POSTHOC_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


# ---------------------------------------------------------------------------
# per-draw statistics
# ---------------------------------------------------------------------------

def jer_violation(thresholds, p, h0) -> bool:
    """True when some k has at least k true-null p-values below threshold k.

    Equivalent to the bound V(R_k) > k - 1 failing for the threshold family:
    the k-th smallest null p-value sits below t_k for some k <= K and |H0|.
    """
    h0 = np.asarray(h0, dtype=np.int64)
    if h0.size == 0:
        return False
    t = np.asarray(thresholds, dtype=np.float64)
    p0 = np.sort(np.asarray(p, dtype=np.float64)[h0])
    kmax = min(t.size, p0.size)
    return bool(np.any(p0[:kmax] < t[:kmax]))


def averaged_power(thresholds, p, R, h1) -> float:
    """(|R| - Vbar(R)) / |R intersect H1|, or nan when R misses H1 entirely.

    Conditioning on |R intersect H1| > 0 keeps the ratio well defined; grid
    aggregation averages over the runs where it is defined and reports that
    count separately.
    """
    R = np.asarray(sorted(set(int(i) for i in R)), dtype=np.int64)
    h1 = np.asarray(h1, dtype=np.int64)
    denom = np.intersect1d(R, h1).size
    if denom == 0:
        return float("nan")
    fam = ThresholdFamily(m=int(np.asarray(p).size),
                          thresholds=np.asarray(thresholds, dtype=np.float64))
    detail = bound_detail(R, fam, np.asarray(p, dtype=np.float64))
    return (R.size - detail.vbar) / denom


def bh_rejections(p, level: float) -> np.ndarray:
    """Step-up false-discovery-rate rejections at the given level (indices)."""
    p = as_pvalues(p)
    m = p.size
    order = np.argsort(p, kind="stable")
    passed = np.flatnonzero(p[order] <= level * np.arange(1, m + 1) / m)
    if passed.size == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(order[: passed[-1] + 1])


def select_scenario(kind: str, p, alpha0: float = 0.05, rng=None) -> np.ndarray:
    """Build the candidate rejection set used in the power grids.

    a) every hypothesis;
    b) a random half (rounded up) of R0 = {i : p_i <= alpha0}, drawn without
       replacement with weights favoring small p-values — the item of rank r
       within R0 (rank 1 = smallest p) gets weight |R0| + 1 - r;
    c) like (b) but R0 is the step-up (false-discovery-rate) rejection set
       at level alpha0.
    """
    p = np.asarray(p, dtype=np.float64)
    if kind == "a":
        return np.arange(p.size, dtype=np.int64)
    if kind == "b":
        R0 = np.flatnonzero(p <= alpha0)
    elif kind == "c":
        R0 = bh_rejections(p, alpha0)
    else:
        raise ValueError(f"unknown scenario {kind!r}")
    if R0.size == 0:
        return R0
    if rng is None:
        raise ValueError(f"scenario {kind!r} needs an rng")
    by_p = R0[np.argsort(p[R0], kind="stable")]
    take = math.ceil(R0.size / 2)
    w = np.arange(R0.size, 0, -1, dtype=np.float64)
    pick = rng.choice(by_p, size=take, replace=False, p=w / w.sum())
    return np.sort(pick)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

MODES = ("fixed", "single-step", "step-down", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid description shared by the error-rate and power drivers.

    ``Ks`` entries may be None (use m), an int, or the string "2m1"
    (twice the number of signal coordinates, capped at m). ``mubars=None``
    in a power grid derives the alternative mean per pi0 so that the
    oracle separation stays comparable across sparsity levels.
    """

    m: int = 200
    n: int = 100
    B: int = 500
    runs: int = 1000
    alpha: float = 0.25
    sided: str = "two"
    dependence: str = "unknown"
    template: str = "linear"
    Ks: tuple = (None,)
    modes: tuple = ("fixed", "single-step", "step-down", "oracle")
    rhos: tuple | None = (0.0,)
    thetas: tuple | None = None
    pi0s: tuple = (0.8,)
    mubars: tuple | None = (0.0,)
    seed: int = 20260501
    threads: int | None = None
    setting_id: str = "grid"
    # power-grid extras
    alphas: tuple | None = None
    scenarios: tuple = ("a", "b", "c")
    procedures: tuple = (("linear", None),)
    alpha0: float = 0.05

    def check(self) -> None:
        if self.m < 1 or self.n < 1 or self.B < 1 or self.runs < 1:
            raise ValueError("m, n, B and runs must be positive")
        if self.sided not in ("one", "two"):
            raise ValueError("sided must be 'one' or 'two'")
        if self.dependence not in ("known", "unknown"):
            raise ValueError("dependence must be 'known' or 'unknown'")
        if self.template not in ("linear", "balanced"):
            raise ValueError("template must be 'linear' or 'balanced'")
        if (self.rhos is None) == (self.thetas is None):
            raise ValueError("exactly one of rhos/thetas must be set")
        if not self.Ks or not self.modes or not self.pi0s:
            raise ValueError("Ks, modes and pi0s must be non-empty")
        for mode in self.modes:
            if mode not in MODES:
                raise ValueError(f"unknown mode {mode!r}")
        if "fixed" in self.modes and self.template != "linear":
            raise ValueError("mode 'fixed' only makes sense for the linear "
                             "template (its thresholds at lambda=alpha)")
        for kind, _ in self.procedures:
            if kind not in ("linear", "balanced"):
                raise ValueError(f"unknown procedure template {kind!r}")
        for s in self.scenarios:
            if s not in ("a", "b", "c"):
                raise ValueError(f"unknown scenario {s!r}")

    def dependence_values(self) -> tuple:
        if self.thetas is not None:
            return tuple(("theta", float(v)) for v in self.thetas)
        return tuple(("rho", float(v)) for v in self.rhos)


def default_alpha_grid(n_points: int = 20, lo: float = 0.005,
                       hi: float = 0.5) -> tuple:
    """Log-spaced alpha grid used by the power experiments."""
    return tuple(float(a) for a in np.geomspace(lo, hi, n_points))


def derived_mubar(pi0: float) -> float:
    """Alternative mean scaling with sparsity, sqrt(-4 log(1 - pi0))."""
    if not 0.0 < pi0 < 1.0:
        raise ValueError("derived mubar needs 0 < pi0 < 1")
    return math.sqrt(-4.0 * math.log(1.0 - pi0))


def _resolve_K(spec, m: int, m1: int) -> int:
    if spec is None:
        return m
    if spec == "2m1":
        return max(1, min(m, 2 * m1))
    K = int(spec)
    if not 1 <= K <= m:
        raise ValueError(f"K={K} out of range for m={m}")
    return K


def _rep_rng(seed: int, cell_index: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(cell_index, rep)))


@dataclass(frozen=True)
class _Cell:
    index: int
    dep_kind: str  # "rho" or "theta"
    dep_value: float
    pi0: float
    mubar: float


def _jer_cells(cfg: ExperimentConfig) -> list:
    cells = []
    idx = 0
    for dep_kind, dep_value in cfg.dependence_values():
        for pi0 in cfg.pi0s:
            for mubar in cfg.mubars:
                cells.append(_Cell(idx, dep_kind, dep_value,
                                   float(pi0), float(mubar)))
                idx += 1
    return cells


def _power_cells(cfg: ExperimentConfig) -> list:
    cells = []
    idx = 0
    for dep_kind, dep_value in cfg.dependence_values():
        for pi0 in cfg.pi0s:
            if cfg.mubars is None:
                mubars = (derived_mubar(float(pi0)),)
            else:
                mubars = cfg.mubars
            for mubar in mubars:
                cells.append(_Cell(idx, dep_kind, dep_value,
                                   float(pi0), float(mubar)))
                idx += 1
    return cells


def _cell_model(cfg: ExperimentConfig, cell: _Cell) -> DataModel:
    rho = cell.dep_value if cell.dep_kind == "rho" else 0.0
    theta = cell.dep_value if cell.dep_kind == "theta" else None
    return DataModel(m=cfg.m, n=cfg.n, pi0=cell.pi0, mubar=cell.mubar,
                     rho=rho, theta=theta)


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield start, min(total, start + size)


_CHUNK = 25  # repetitions per worker task (fixed: part of the task layout)


def _base_balanced(cfg: ExperimentConfig, model: DataModel, Kmax: int,
                   cell_index: int):
    """Deterministic balanced-template fit for known-dependence cells.

    The fit consumes its own substream (rep index ``cfg.runs`` is never used
    by a repetition) so it is identical in every chunk of the cell.
    """
    sampler = NullJointSampler(m=model.m, rho=model.rho, theta=model.theta,
                               sided=cfg.sided)
    rng = _rep_rng(cfg.seed, cell_index, cfg.runs)
    return fit_balanced_known(sampler, model.m, Kmax, cfg.B, rng)


def _slice_balanced(base: BalancedTemplate, K: int) -> BalancedTemplate:
    if K == base.K:
        return base
    return BalancedTemplate(m=base.m, curves=base.curves[:K],
                            source=base.source)


# ---------------------------------------------------------------------------
# error-rate grid
# ---------------------------------------------------------------------------

def _jer_task(args):
    cfg, cell, start, stop = args
    model = _cell_model(cfg, cell)
    m1 = model.h1.size
    Ks = tuple(_resolve_K(k, cfg.m, m1) for k in cfg.Ks)
    h0 = model.h0
    full = np.arange(cfg.m)
    sampler = None
    base_bal = None
    if cfg.dependence == "known":
        sampler = NullJointSampler(m=cfg.m, rho=model.rho, theta=model.theta,
                                   sided=cfg.sided)
        if cfg.template == "balanced":
            base_bal = _base_balanced(cfg, model, max(Ks), cell.index)

    needs_cal = any(mode != "fixed" for mode in cfg.modes)
    out = {(K, mode): np.zeros(stop - start, dtype=np.int8)
           for K in Ks for mode in cfg.modes}

    for rep in range(start, stop):
        rng = _rep_rng(cfg.seed, cell.index, rep)
        data = sample_dataset(model, rng)
        p = pvalues(test_statistics(data), sided=cfg.sided)

        if cfg.dependence == "unknown":
            transforms = sign_flip_transforms(cfg.n, cfg.B, rng)
            P = (pvalues(flip_statistics(data, transforms), sided=cfg.sided)
                 if needs_cal else None)
            if cfg.template == "balanced":
                rep_base = fit_balanced_unknown(data, transforms, max(Ks),
                                                sided=cfg.sided)
        else:
            P = sampler.draw(rng, cfg.B) if needs_cal else None
            rep_base = base_bal

        for K in Ks:
            if cfg.template == "linear":
                tpl = LinearTemplate(m=cfg.m, K=K)
            else:
                tpl = _slice_balanced(rep_base, K)
            cache: dict = {}
            run = (calibrator_from_matrix(tpl, P, cfg.alpha, psi_cache=cache)
                   if needs_cal else None)
            for mode in cfg.modes:
                if mode == "fixed":
                    thresholds = tpl.thresholds(cfg.alpha)
                elif mode == "single-step":
                    thresholds = run(full).thresholds
                elif mode == "step-down":
                    thresholds = step_down(run, tpl, p).thresholds
                else:  # oracle
                    thresholds = (run(h0).thresholds if h0.size
                                  else tpl.thresholds(1.0))
                out[(K, mode)][rep - start] = jer_violation(thresholds, p, h0)
    return cell.index, start, out


def run_jer_grid(cfg: ExperimentConfig) -> list:
    """Estimate P(joint error) per cell, template size and calibration mode."""
    cfg.check()
    cells = _jer_cells(cfg)
    tasks = [(cfg, cell, start, stop)
             for cell in cells for start, stop in _chunks(cfg.runs, _CHUNK)]
    results = _run_tasks(_jer_task, tasks, resolve_threads(cfg.threads))

    rows = []
    for cell in cells:
        merged = _merge_cell(results, cell.index, cfg.runs)
        model = _cell_model(cfg, cell)
        Ks = tuple(_resolve_K(k, cfg.m, model.h1.size) for k in cfg.Ks)
        for K in Ks:
            for mode in cfg.modes:
                hits = merged[(K, mode)]
                est = float(np.mean(hits))
                se = math.sqrt(est * (1.0 - est) / cfg.runs)
                rows.append(ResultRow(
                    setting_id=cfg.setting_id, m=cfg.m, n=cfg.n,
                    rho_or_theta=cell.dep_value, pi0=cell.pi0,
                    mubar=cell.mubar, alpha=cfg.alpha,
                    template=cfg.template, K=K, mode=mode, scenario="",
                    estimate=est, stderr=se, runs_used=cfg.runs,
                    seed=cfg.seed))
    return rows


# ---------------------------------------------------------------------------
# power grid
# ---------------------------------------------------------------------------

def _power_task(args):
    cfg, cell, start, stop = args
    model = _cell_model(cfg, cell)
    m1 = model.h1.size
    alphas = cfg.alphas if cfg.alphas is not None else (cfg.alpha,)
    procs = []
    for kind, kspec in cfg.procedures:
        procs.append((kind, _resolve_K(kspec, cfg.m, m1)))
    Kmax_bal = max((K for kind, K in procs if kind == "balanced"), default=0)

    base_bal = None
    sampler = None
    if cfg.dependence == "known":
        sampler = NullJointSampler(m=cfg.m, rho=model.rho, theta=model.theta,
                                   sided=cfg.sided)
        if Kmax_bal:
            base_bal = _base_balanced(cfg, model, Kmax_bal, cell.index)

    keys = [(ai, pi, s) for ai in range(len(alphas))
            for pi in range(len(procs)) for s in cfg.scenarios]
    out = {key: np.full(stop - start, np.nan) for key in keys}

    for rep in range(start, stop):
        rng = _rep_rng(cfg.seed, cell.index, rep)
        data = sample_dataset(model, rng)
        p = pvalues(test_statistics(data), sided=cfg.sided)

        if cfg.dependence == "unknown":
            transforms = sign_flip_transforms(cfg.n, cfg.B, rng)
            P = pvalues(flip_statistics(data, transforms), sided=cfg.sided)
            rep_base = (fit_balanced_unknown(data, transforms, Kmax_bal,
                                             sided=cfg.sided)
                        if Kmax_bal else None)
        else:
            P = sampler.draw(rng, cfg.B)
            rep_base = base_bal

        # candidate sets drawn once per repetition, shared by all procedures
        sets = {s: select_scenario(s, p, cfg.alpha0, rng)
                for s in cfg.scenarios}

        for pi, (kind, K) in enumerate(procs):
            if kind == "linear":
                tpl = LinearTemplate(m=cfg.m, K=K)
            else:
                tpl = _slice_balanced(rep_base, K)
            cache: dict = {}
            for ai, alpha in enumerate(alphas):
                run = calibrator_from_matrix(tpl, P, float(alpha),
                                             psi_cache=cache)
                cal = step_down(run, tpl, p)
                for s in cfg.scenarios:
                    R = sets[s]
                    if R.size == 0:
                        continue  # stays nan: no candidates this run
                    out[(ai, pi, s)][rep - start] = averaged_power(
                        cal.thresholds, p, R, model.h1)
    return cell.index, start, out


def run_power_grid(cfg: ExperimentConfig) -> list:
    """Averaged-power grid: step-down calibration, several candidate sets.

    The estimate for a (cell, alpha, procedure, scenario) combination is the
    mean of (|R| - Vbar(R)) / |R intersect H1| over the runs where the
    candidate set R touches H1; ``runs_used`` records how many did.
    """
    cfg.check()
    cells = _power_cells(cfg)
    tasks = [(cfg, cell, start, stop)
             for cell in cells for start, stop in _chunks(cfg.runs, _CHUNK)]
    results = _run_tasks(_power_task, tasks, resolve_threads(cfg.threads))

    alphas = cfg.alphas if cfg.alphas is not None else (cfg.alpha,)
    rows = []
    for cell in cells:
        merged = _merge_cell(results, cell.index, cfg.runs)
        model = _cell_model(cfg, cell)
        m1 = model.h1.size
        for ai, alpha in enumerate(alphas):
            for pi, (kind, kspec) in enumerate(cfg.procedures):
                K = _resolve_K(kspec, cfg.m, m1)
                for s in cfg.scenarios:
                    vals = merged[(ai, pi, s)]
                    used = int(np.count_nonzero(~np.isnan(vals)))
                    if used:
                        est = float(np.nanmean(vals))
                        se = (float(np.nanstd(vals, ddof=1)) / math.sqrt(used)
                              if used > 1 else 0.0)
                    else:
                        est, se = float("nan"), float("nan")
                    rows.append(ResultRow(
                        setting_id=cfg.setting_id, m=cfg.m, n=cfg.n,
                        rho_or_theta=cell.dep_value, pi0=cell.pi0,
                        mubar=cell.mubar, alpha=float(alpha), template=kind,
                        K=K, mode="step-down", scenario=s, estimate=est,
                        stderr=se, runs_used=used, seed=cfg.seed))
    return rows


# ---------------------------------------------------------------------------
# task execution and aggregation
# ---------------------------------------------------------------------------

def _run_tasks(fn, tasks, threads: int) -> dict:
    results = {}
    if threads <= 1 or len(tasks) <= 1:
        for task in tasks:
            cell_index, start, out = fn(task)
            results[(cell_index, start)] = out
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for cell_index, start, out in pool.map(fn, tasks):
                results[(cell_index, start)] = out
    return results


def _merge_cell(results: dict, cell_index: int, runs: int) -> dict:
    starts = sorted(s for (ci, s) in results if ci == cell_index)
    merged = {}
    for key in results[(cell_index, starts[0])]:
        merged[key] = np.concatenate(
            [results[(cell_index, s)][key] for s in starts])
        assert merged[key].size == runs
    return merged


# ---------------------------------------------------------------------------
# reference tables
# ---------------------------------------------------------------------------

def run_size_table(runs: int = 10_000, seed: int = 20260516,
                   rhos=(0.0, 0.1, 0.2, 0.4, 0.8), m: int = 1000,
                   alpha: float = 0.2, chunk: int = 500) -> list:
    """Joint-error probability of the fixed linear thresholds at level alpha,
    reported as a fraction of alpha, under one-sided equi-correlated nulls.

    Vectorized over repetitions (no per-run data matrices: statistics are
    drawn directly from the null joint law).  ``chunk`` bounds memory and is
    part of the seeding layout.
    """
    t = alpha * np.arange(1, m + 1) / m
    rows = []
    for r_idx, rho in enumerate(rhos):
        sampler = NullJointSampler(m=m, rho=float(rho), sided="one")
        hits = 0
        for start, stop in _chunks(runs, chunk):
            rng = _rep_rng(seed, r_idx, start)
            P = np.sort(sampler.draw(rng, stop - start), axis=1)
            hits += int(np.count_nonzero(np.any(P < t, axis=1)))
        phat = hits / runs
        se = math.sqrt(phat * (1.0 - phat) / runs)
        rows.append(ResultRow(
            setting_id="size-table", m=m, n=0, rho_or_theta=float(rho),
            pi0=1.0, mubar=0.0, alpha=alpha, template="linear", K=m,
            mode="fixed", scenario="", estimate=phat / alpha,
            stderr=se / alpha, runs_used=runs, seed=seed))
    return rows


def run_orderstat_table(ks=(1, 2, 5, 10, 100), m: int = 1000,
                        alpha: float = 0.05) -> list:
    """Exact per-member violation probabilities of the linear thresholds.

    Row k is P(k-th smallest of m independent uniforms < alpha*k/m): how
    often member k of the linear family at level alpha is breached on its
    own under independence.  The rapid decay in k is what makes the joint
    union affordable.
    """
    rows = []
    for k in ks:
        prob = orderstat_cdf_independent(int(k), m, alpha * int(k) / m)
        rows.append(ResultRow(
            setting_id="orderstat-table", m=m, n=0, rho_or_theta=0.0,
            pi0=1.0, mubar=0.0, alpha=alpha, template="linear", K=int(k),
            mode="exact", scenario="", estimate=float(prob), stderr=0.0,
            runs_used=0, seed=0))
    return rows


# ---------------------------------------------------------------------------
# standard grid configurations
# ---------------------------------------------------------------------------

def jer_grid_config(paper_scale: bool = False, runs: int | None = None,
                    seed: int = 20260501, threads: int | None = None,
                    thetas: tuple | None = None) -> ExperimentConfig:
    """Linear-template error-rate grid across all four calibration modes.

    Desk scale finishes in minutes on one core; paper scale matches the
    published grid sizes.  Pass ``thetas`` for long-range dependence instead
    of the equi-correlated default.
    """
    cfg = ExperimentConfig(
        setting_id="jer-linear", template="linear", Ks=(None,),
        modes=("fixed", "single-step", "step-down", "oracle"),
        pi0s=(0.8,), seed=seed, threads=threads)
    if paper_scale:
        cfg = replace(cfg, m=1000, n=1000, B=1000, runs=10_000,
                      mubars=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0))
    else:
        cfg = replace(cfg, m=200, n=100, B=500, runs=1000,
                      mubars=(0.0, 3.0, 5.0))
    if thetas is not None:
        cfg = replace(cfg, rhos=None, thetas=tuple(thetas),
                      setting_id="jer-linear-longrange")
    else:
        cfg = replace(cfg, rhos=(0.0, 0.2, 0.4))
    if runs is not None:
        cfg = replace(cfg, runs=runs)
    return cfg


def balanced_grid_config(paper_scale: bool = False, runs: int | None = None,
                         seed: int = 20260502,
                         threads: int | None = None) -> ExperimentConfig:
    """Balanced-template error-rate grid (K truncation versus K = m)."""
    cfg = ExperimentConfig(
        setting_id="jer-balanced", template="balanced", Ks=(10, None),
        modes=("single-step", "step-down"), pi0s=(0.99,), seed=seed,
        threads=threads)
    if paper_scale:
        cfg = replace(cfg, m=1000, n=1000, B=1000, runs=10_000,
                      rhos=(0.0, 0.2, 0.4), mubars=(0.0, 3.0, 5.0))
    else:
        cfg = replace(cfg, m=200, n=100, B=500, runs=1000, rhos=(0.0,),
                      mubars=(0.0, 3.0))
    if runs is not None:
        cfg = replace(cfg, runs=runs)
    return cfg


def power_grid_config(paper_scale: bool = False, runs: int | None = None,
                      seed: int = 20260503, threads: int | None = None,
                      alphas: tuple | None = None) -> ExperimentConfig:
    """Averaged-power grid: linear versus balanced step-down calibration.

    Independent coordinates, sparse signals; the alternative mean is derived
    from pi0.  Covers candidate-set scenarios (a), (b), (c).
    """
    cfg = ExperimentConfig(
        setting_id="power", rhos=(0.0,), pi0s=(0.9, 0.99), mubars=None,
        modes=("step-down",), scenarios=("a", "b", "c"),
        procedures=(("linear", None), ("balanced", 10),
                    ("balanced", "2m1"), ("balanced", None)),
        alphas=alphas if alphas is not None else default_alpha_grid(),
        seed=seed, threads=threads)
    if paper_scale:
        cfg = replace(cfg, m=1000, n=1000, B=1000, runs=1000)
    else:
        cfg = replace(cfg, m=200, n=100, B=500, runs=1000)
    if runs is not None:
        cfg = replace(cfg, runs=runs)
    return cfg
