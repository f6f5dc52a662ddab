"""One-parameter threshold templates and the pivotal statistic.

A template is a family of curves lambda -> t_k(lambda), k = 1..K, each
non-decreasing and left-continuous with t_k(0) = 0. Fixing lambda yields the
thresholds of a candidate rejection family; calibration picks lambda from
data. Two kinds are provided:

* linear: t_k(lambda) = lambda * k / m, the classical Simes shape;
* balanced: t_k(lambda) = F_k^{-1}(lambda), the lambda-quantile of the null
  law of the k-th smallest p-value, so every member of the family has the
  same marginal probability of being violated. F_k is stored as a sorted
  Monte Carlo sample (fitted from a null sampler when the dependence is
  known, or from randomization transforms of the observed data when not).

The pivotal statistic psi(p, A) = min_{k <= K ^ |A|} t_k^{-1}(p_(k:A)) turns
the joint violation event into a single scalar: the family at parameter
lambda over-rejects inside A exactly when psi < lambda, which is what makes
quantile calibration work.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np
from scipy import stats as _sps

from .bounds import as_pvalues
from .models import NullJointSampler, flip_statistics, pvalues

__all__ = [
    "LinearTemplate",
    "BalancedTemplate",
    "ExactBalancedIndependent",
    "psi",
    "psi_many",
    "template_to_json",
    "template_from_json",
    "fit_balanced_known",
    "fit_balanced_unknown",
]


def _check_km(m: int, K: int) -> None:
    if not 1 <= K <= m:
        raise ValueError("template size K must satisfy 1 <= K <= m")


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1]")
    return lam


class LinearTemplate:
    """t_k(lambda) = lambda * k / m."""

    kind = "linear"

    def __init__(self, m: int, K: int):
        _check_km(m, K)
        self.m = int(m)
        self.K = int(K)

    def thresholds(self, lam: float) -> np.ndarray:
        """Vector (t_1(lam), ..., t_K(lam))."""
        lam = _check_lambda(lam)
        return lam * np.arange(1, self.K + 1, dtype=np.float64) / self.m

    def threshold(self, k: int, lam: float) -> float:
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        return _check_lambda(lam) * k / self.m

    def inverse(self, k: int, u: float) -> float:
        """Generalized inverse max{lambda : t_k(lambda) <= u}, in [0, 1]."""
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        if u < 0.0:
            return 0.0
        return min(1.0, self.m * u / k)

    def inverse_columns(self, u: np.ndarray) -> np.ndarray:
        """Apply t_k^{-1} to column k-1 of a (rows, K') order-stat matrix."""
        k = np.arange(1, u.shape[1] + 1, dtype=np.float64)
        return np.clip(self.m * u / k, 0.0, 1.0)

    def __repr__(self):
        return f"LinearTemplate(m={self.m}, K={self.K})"


class BalancedTemplate:
    """t_k(lambda) = empirical lambda-quantile of the null k-th order statistic.

    ``curves`` has one sorted row per k holding the B-sample of the null law
    of p_(k) (k-th smallest of all m p-values). ``source`` records how the
    rows were obtained: "sampler" (drawn from a known-dependence null
    sampler) or "data" (randomization transforms of the observed matrix);
    calibration for known dependence insists on "sampler".
    """

    kind = "balanced"

    def __init__(self, m: int, curves: np.ndarray, source: str = "data"):
        curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
        _check_km(m, curves.shape[0])
        if curves.shape[1] < 1:
            raise ValueError("curves need at least one sample point")
        if np.any(curves < 0.0) or np.any(curves > 1.0):
            raise ValueError("curve samples must lie in [0, 1]")
        if np.any(np.diff(curves, axis=1) < 0.0):
            raise ValueError("curve rows must be sorted")
        if source not in ("sampler", "data"):
            raise ValueError("source must be 'sampler' or 'data'")
        self.m = int(m)
        self.K = int(curves.shape[0])
        self.curves = curves
        self.source = source

    @property
    def B_fit(self) -> int:
        return int(self.curves.shape[1])

    def thresholds(self, lam: float) -> np.ndarray:
        lam = _check_lambda(lam)
        if lam == 0.0:
            return np.zeros(self.K)
        # ceil(lam*B) with a snap-to-grid guard: calibrated lam values are
        # exact multiples of 1/B that float rounding can nudge a few ulp
        # past an integer, which would shift every threshold by one sample.
        idx = max(1, math.ceil(lam * self.B_fit - 1e-9))
        return self.curves[:, idx - 1].copy()

    def threshold(self, k: int, lam: float) -> float:
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        return float(self.thresholds(lam)[k - 1])

    def inverse(self, k: int, u: float) -> float:
        """F_k(u): fraction of curve k's sample <= u."""
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        return float(np.searchsorted(self.curves[k - 1], u, side="right")
                     / self.B_fit)

    def inverse_columns(self, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        for j in range(u.shape[1]):
            out[:, j] = np.searchsorted(self.curves[j], u[:, j], side="right")
        return out / self.B_fit

    def __repr__(self):
        return (f"BalancedTemplate(m={self.m}, K={self.K}, "
                f"B_fit={self.B_fit}, source={self.source!r})")


class ExactBalancedIndependent:
    """Balanced template with analytic curves, valid under independence only.

    Independent continuous null p-values are i.i.d. uniform, so the k-th
    order statistic is Beta(k, m + 1 - k) and no Monte Carlo fit is needed.
    Useful as an exact reference in tests and for independent designs.
    """

    kind = "balanced"
    source = "sampler"

    def __init__(self, m: int, K: int):
        _check_km(m, K)
        self.m = int(m)
        self.K = int(K)

    def _dist(self, k):
        return _sps.beta(k, self.m + 1 - k)

    def thresholds(self, lam: float) -> np.ndarray:
        lam = _check_lambda(lam)
        k = np.arange(1, self.K + 1)
        return _sps.beta.ppf(lam, k, self.m + 1 - k)

    def threshold(self, k: int, lam: float) -> float:
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        return float(self._dist(k).ppf(_check_lambda(lam)))

    def inverse(self, k: int, u: float) -> float:
        if not 1 <= k <= self.K:
            raise ValueError("k out of range")
        if u < 0.0:
            return 0.0
        return float(self._dist(k).cdf(min(u, 1.0)))

    def inverse_columns(self, u: np.ndarray) -> np.ndarray:
        k = np.arange(1, u.shape[1] + 1)
        return _sps.beta.cdf(np.clip(u, 0.0, 1.0), k, self.m + 1 - k)

    def __repr__(self):
        return f"ExactBalancedIndependent(m={self.m}, K={self.K})"


# ---------------------------------------------------------------------------
# pivotal statistic
# ---------------------------------------------------------------------------

def psi(tpl, p: np.ndarray, A: Iterable[int]) -> float:
    """Pivotal statistic min_{k <= K ^ |A|} t_k^{-1}(p_(k:A)).

    An empty A returns +inf: with no hypotheses in play the family cannot
    over-reject, so the value never constrains a minimum.
    """
    return float(psi_many(tpl, as_pvalues(p)[np.newaxis, :], A)[0])


def psi_many(tpl, P: np.ndarray, A: Iterable[int]) -> np.ndarray:
    """psi for every row of a (rows, m) p-value matrix, vectorized.

    All rows share the same index set A; this is the shape calibration
    needs (B null draws or B randomization transforms, one psi each).
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != tpl.m:
        raise ValueError("P must be (rows, m)")
    a = np.asarray(sorted(set(int(i) for i in A)), dtype=np.int64)
    if a.size and (a[0] < 0 or a[-1] >= tpl.m):
        raise ValueError("index set out of range 0..m-1")
    if a.size == 0:
        return np.full(P.shape[0], np.inf)
    keff = min(tpl.K, a.size)
    sub = np.sort(P[:, a], axis=1)[:, :keff]
    return tpl.inverse_columns(sub).min(axis=1)


# ---------------------------------------------------------------------------
# fitting balanced templates
# ---------------------------------------------------------------------------

def fit_balanced_known(sampler: NullJointSampler, m: int, K: int, B: int,
                       seed=None) -> BalancedTemplate:
    """Fit balanced curves from B draws of the known-dependence null law."""
    if sampler.m != m:
        raise ValueError("sampler dimension does not match m")
    _check_km(m, K)
    if B < 1:
        raise ValueError("B must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q = sampler.draw(rng, B)
    order_stats = np.sort(q, axis=1)[:, :K]       # (B, K)
    curves = np.sort(order_stats.T, axis=1)       # (K, B), rows sorted
    return BalancedTemplate(m, curves, source="sampler")


def fit_balanced_unknown(X: np.ndarray, transforms: np.ndarray, K: int,
                         sided: str = "two") -> BalancedTemplate:
    """Fit balanced curves from randomization transforms of the data.

    ``transforms`` is a (B, n) matrix of sign vectors whose first row must be
    the identity. Curve k's sample is the k-th smallest p-value of each
    transformed dataset. Data-dependent, so treat as experimental: the
    finite-sample guarantee is only proven for data-independent templates.
    """
    X = np.asarray(X, dtype=np.float64)
    transforms = np.asarray(transforms, dtype=np.float64)
    if transforms.ndim != 2 or transforms.shape[1] != X.shape[1]:
        raise ValueError("transforms must be (B, n)")
    if not np.all(transforms[0] == 1.0):
        raise ValueError("first transform must be the identity")
    m = X.shape[0]
    _check_km(m, K)
    P = pvalues(flip_statistics(X, transforms), sided)   # (B, m)
    order_stats = np.sort(P, axis=1)[:, :K]
    curves = np.sort(order_stats.T, axis=1)
    return BalancedTemplate(m, curves, source="data")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def template_to_json(tpl) -> dict:
    """JSON form {kind, m, K, curves?}. Linear templates carry no curves;
    the analytic balanced variant is marked ``exact`` instead of carrying
    curves since (m, K) reconstructs it."""
    obj = {"kind": tpl.kind, "m": tpl.m, "K": tpl.K}
    if isinstance(tpl, BalancedTemplate):
        obj["curves"] = [[float(x) for x in row] for row in tpl.curves]
    elif isinstance(tpl, ExactBalancedIndependent):
        obj["exact"] = True
    return obj


def template_from_json(obj: dict):
    kind = obj["kind"]
    if kind == "linear":
        return LinearTemplate(int(obj["m"]), int(obj["K"]))
    if kind == "balanced":
        if obj.get("exact"):
            return ExactBalancedIndependent(int(obj["m"]), int(obj["K"]))
        curves = np.asarray(obj["curves"], dtype=np.float64)
        return BalancedTemplate(int(obj["m"]), curves, source="data")
    raise ValueError(f"unknown template kind {kind!r}")
