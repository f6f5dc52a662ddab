"""Calibration of the template parameter lambda at a target confidence level.

The joint guarantee "every family member R_k contains at most k-1 true
nulls, simultaneously, with probability >= 1-alpha" reduces to a quantile
problem through the pivotal statistic: the family at parameter lambda
over-rejects among the nulls exactly when psi(p, H0) < lambda. So the
largest safe lambda is the alpha-quantile of psi's null distribution over
any superset A of H0. Two ways to reach that distribution:

* known dependence: draw B vectors from the null joint law and take
  lambda = Psi_(floor(alpha*B)+1), the empirical alpha-quantile;
* unknown dependence: evaluate psi on B randomization transforms of the
  observed data (identity first); the same order statistic is exactly valid
  by exchangeability, no asymptotics involved.

Using A = all hypotheses is always safe but conservative; the step-down
loop shrinks A toward H0 by repeatedly discarding hypotheses already
rejected at the current first threshold, legitimate because lambda(alpha, A)
only grows when A shrinks. Within one step-down run all iterations reuse the
same draws/transforms, which preserves that monotonicity exactly rather
than just in expectation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .bounds import ThresholdFamily
from .models import NullJointSampler, flip_statistics, pvalues
from .templates import psi_many

__all__ = [
    "Calibration",
    "calibrate_known",
    "calibrate_unknown",
    "known_calibrator",
    "unknown_calibrator",
    "calibrator_from_matrix",
    "step_down",
    "materialize",
]

MODES = ("single-step", "step-down", "oracle", "fixed")


@dataclass(frozen=True, eq=False)
class Calibration:
    """A calibrated lambda with everything needed to audit or reuse it.

    ``lam`` is the (floor(alpha*B)+1)-th order statistic of ``psi_sample``
    (clamped to 1 when the index set was empty and every psi is the +inf
    sentinel). ``thresholds`` are the materialized t_k(lam). ``set_used``
    records the A that psi was evaluated on; ``mode`` how A was chosen.
    """

    lam: float
    alpha: float
    B: int
    mode: str
    m: int
    thresholds: np.ndarray
    set_used: tuple
    psi_sample: np.ndarray | None = None
    seed: int | None = None
    history: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "thresholds",
                           np.asarray(self.thresholds, dtype=np.float64))
        object.__setattr__(self, "set_used",
                           tuple(int(i) for i in self.set_used))

    @property
    def K(self) -> int:
        return int(self.thresholds.size)

    def to_json(self) -> dict:
        """Wire form; indices 1-based. Includes the calibration statistic
        sample (one value per Monte Carlo draw) when it was retained."""
        return {
            "lambda": float(self.lam),
            "alpha": float(self.alpha),
            "B": int(self.B),
            "mode": self.mode,
            "K": self.K,
            "thresholds": [float(t) for t in self.thresholds],
            "m": self.m,
            "set_used": [i + 1 for i in self.set_used],
            "seed": self.seed,
            # +inf marks a vacuous statistic (empty conditioning set); JSON
            # has no inf, so it crosses the wire as null
            "psi": (None if self.psi_sample is None
                    else [float(v) if math.isfinite(v) else None
                          for v in self.psi_sample]),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Calibration":
        psi = obj.get("psi")
        if psi is not None:
            psi = [math.inf if v is None else v for v in psi]
        return cls(
            lam=float(obj["lambda"]),
            alpha=float(obj["alpha"]),
            B=int(obj["B"]),
            mode=str(obj["mode"]),
            m=int(obj["m"]),
            thresholds=np.asarray(obj["thresholds"], dtype=np.float64),
            set_used=tuple(int(i) - 1 for i in obj["set_used"]),
            seed=obj.get("seed"),
            psi_sample=(None if psi is None
                        else np.asarray(psi, dtype=np.float64)),
        )

    def family(self) -> ThresholdFamily:
        return ThresholdFamily(self.m, self.thresholds)


def _quantile_rank(alpha: float, B: int) -> int:
    """1-based rank floor(alpha*B) + 1, with a snap guard for decimal alpha
    whose float is a few ulp under an exact integer product."""
    return int(math.floor(alpha * B + 1e-9)) + 1


def _lambda_from_psi(psi_sample: np.ndarray, alpha: float) -> float:
    B = psi_sample.size
    rank = _quantile_rank(alpha, B)
    value = float(np.partition(psi_sample, rank - 1)[rank - 1])
    return min(1.0, value)  # +inf sentinel (empty A) -> vacuous lambda = 1


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return alpha


def _check_set(A: Iterable[int], m: int) -> tuple:
    a = tuple(sorted(set(int(i) for i in A)))
    if a and (a[0] < 0 or a[-1] >= m):
        raise ValueError("index set out of range 0..m-1")
    return a


# ---------------------------------------------------------------------------
# calibrator factories: bind everything but A, share draws across calls
# ---------------------------------------------------------------------------

def calibrator_from_matrix(tpl, P: np.ndarray, alpha: float,
                           mode: str = "single-step", seed=None,
                           psi_cache: dict | None = None
                           ) -> Callable[[Iterable[int]], Calibration]:
    """Calibrator over an explicit (B, m) matrix of null/transformed p-values.

    The factories below build P from a sampler or from sign flips and then
    delegate here; simulation harnesses that already hold P (e.g. to reuse
    one flip matrix across several alpha values or template sizes) can call
    this directly. All calls share P, so lambda is exactly non-increasing
    under set enlargement.

    ``psi_cache`` (a plain dict) memoizes psi samples by index set; pass the
    same dict to several calibrators over the same (tpl, P) — e.g. one per
    alpha — to avoid recomputing the expensive part.
    """
    alpha = _check_alpha(alpha)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != tpl.m:
        raise ValueError("P must be (B, m)")
    B = int(P.shape[0])
    seed_label = seed if isinstance(seed, (int, np.integer)) else None

    def run(A: Iterable[int]) -> Calibration:
        a = _check_set(A, tpl.m)
        if psi_cache is None:
            sample = psi_many(tpl, P, a)
        else:
            sample = psi_cache.get(a)
            if sample is None:
                sample = psi_cache[a] = psi_many(tpl, P, a)
        lam = _lambda_from_psi(sample, alpha)
        return Calibration(lam=lam, alpha=alpha, B=B, mode=mode, m=tpl.m,
                           thresholds=tpl.thresholds(lam), set_used=a,
                           psi_sample=sample, seed=seed_label)

    return run


def known_calibrator(tpl, sampler: NullJointSampler, alpha: float, B: int,
                     seed=None, mode: str = "single-step"
                     ) -> Callable[[Iterable[int]], Calibration]:
    """Known-dependence calibrator with the B null draws fixed up front.

    Every call evaluates psi on the same draws, so lambda(alpha, A) is
    exactly non-increasing in A across calls — the property the step-down
    loop leans on. Balanced templates must have been fitted from a null
    sampler (``source="sampler"``), not from the observed data: in this mode
    the template has to be deterministic.
    """
    alpha = _check_alpha(alpha)
    if B < 1:
        raise ValueError("B must be >= 1")
    if alpha * B < 1.0:
        warnings.warn(
            "B < 1/alpha: lambda falls back to the minimum of the psi "
            "sample; increase B for a meaningful quantile", stacklevel=2)
    if getattr(tpl, "source", "sampler") != "sampler":
        raise ValueError(
            "known-dependence calibration requires a template fitted from "
            "the null sampler, not from data")
    if sampler.m != tpl.m:
        raise ValueError("sampler dimension does not match the template")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return calibrator_from_matrix(tpl, sampler.draw(rng, B), alpha,
                                  mode=mode, seed=seed)


def unknown_calibrator(tpl, X: np.ndarray, transforms: np.ndarray,
                       alpha: float, sided: str = "two", seed=None,
                       mode: str = "single-step"
                       ) -> Callable[[Iterable[int]], Calibration]:
    """Randomization calibrator; transforms (identity first) fixed up front."""
    alpha = _check_alpha(alpha)
    X = np.asarray(X, dtype=np.float64)
    transforms = np.asarray(transforms, dtype=np.float64)
    if transforms.ndim != 2 or transforms.shape[0] < 2:
        raise ValueError("need at least 2 transforms (identity + 1 draw)")
    if transforms.shape[1] != X.shape[1]:
        raise ValueError("transforms must be (B, n)")
    if not np.all(transforms[0] == 1.0):
        raise ValueError("first transform must be the identity")
    if X.shape[0] != tpl.m:
        raise ValueError("data row count does not match the template")
    B = int(transforms.shape[0])
    if alpha * B < 1.0:
        warnings.warn(
            "B < 1/alpha: lambda falls back to the minimum of the psi "
            "sample; increase B for a meaningful quantile", stacklevel=2)
    P = pvalues(flip_statistics(X, transforms), sided)
    return calibrator_from_matrix(tpl, P, alpha, mode=mode, seed=seed)


# ---------------------------------------------------------------------------
# public single-shot entry points
# ---------------------------------------------------------------------------

def calibrate_known(tpl, sampler: NullJointSampler, alpha: float,
                    A: Iterable[int], B: int, seed=None) -> Calibration:
    """Monte Carlo lambda-calibration against a known null joint law.

    Draws B vectors from the sampler, evaluates psi on A for each, and
    returns lambda = Psi_(floor(alpha*B)+1) — the largest lambda whose
    empirical exceedance P(psi < lambda) stays within alpha.
    """
    a = _check_set(A, tpl.m)
    if not a:
        raise ValueError("A must be nonempty")
    return known_calibrator(tpl, sampler, alpha, B, seed=seed)(a)


def calibrate_unknown(tpl, X: np.ndarray, transforms: np.ndarray,
                      alpha: float, A: Iterable[int], sided: str = "two",
                      seed=None) -> Calibration:
    """Randomization lambda-calibration under unknown dependence.

    psi is computed on the observed data and on B-1 random sign flips of it;
    exchangeability of the B values on the nulls makes the same order
    statistic a finite-sample valid choice. No model for the dependence is
    used anywhere.
    """
    a = _check_set(A, tpl.m)
    if not a:
        raise ValueError("A must be nonempty")
    return unknown_calibrator(tpl, X, transforms, alpha, sided=sided,
                              seed=seed)(a)


# ---------------------------------------------------------------------------
# step-down
# ---------------------------------------------------------------------------

def step_down(calibrator: Callable[[Iterable[int]], Calibration], tpl,
              p: np.ndarray, alpha: float | None = None) -> Calibration:
    """Iteratively shrink the calibration set from all of 1..m toward H0.

    A(0) = everything; at each round, calibrate on A(j-1), then drop the
    hypotheses rejected at the new first threshold: A(j) = {i : p_i >=
    t_1(lambda_j)}. Stops at the first fixpoint. lambda never decreases and
    A never grows along the way, so at most m+1 rounds can occur. The
    returned Calibration is the fixpoint one, relabeled mode="step-down",
    with the (lambda, |A|) path in ``history``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size != tpl.m:
        raise ValueError("p must have length m")
    current = tuple(range(tpl.m))
    history = []
    cal = None
    for _ in range(tpl.m + 2):
        cal = calibrator(current)
        if alpha is not None and cal.alpha != alpha:
            raise ValueError("calibrator alpha does not match step_down alpha")
        history.append((cal.lam, len(current)))
        nxt = tuple(np.flatnonzero(p >= tpl.threshold(1, cal.lam)).tolist())
        if nxt == current:
            return Calibration(lam=cal.lam, alpha=cal.alpha, B=cal.B,
                               mode="step-down", m=cal.m,
                               thresholds=cal.thresholds, set_used=current,
                               psi_sample=cal.psi_sample, seed=cal.seed,
                               history=tuple(history))
        current = nxt
    raise RuntimeError("step-down failed to reach a fixpoint within m+1 "
                       "iterations; monotonicity must have been broken")


def materialize(cal: Calibration, tpl=None, p=None) -> ThresholdFamily:
    """Threshold family at the calibrated lambda.

    Uses the thresholds stored on the Calibration; passing the template
    recomputes them (and must agree). ``p`` is accepted for signature
    symmetry with the bound layer but is not needed to build the family.
    """
    thresholds = cal.thresholds
    if tpl is not None:
        fresh = tpl.thresholds(cal.lam)
        if not np.array_equal(fresh, thresholds):
            raise ValueError("calibration does not belong to this template")
        thresholds = fresh
    return ThresholdFamily(cal.m, thresholds)
