"""Reference families of rejection sets and post hoc false-positive bounds.

A reference family is a list of candidate rejection sets R_k, each paired
with a budget zeta_k on the number of true nulls it may contain. Once such a
family holds jointly with high probability, an upper bound on the number of
false positives inside *any* user-chosen set R can be interpolated from it.
This module implements the interpolation bound ``vbar`` (cheap, exact for
nested families), the brute-force optimal bound ``vstar_bruteforce``
(exponential, small problems only), self-consistent budgets ``zeta_tilde``,
family truncation, and the Simes/Hommel threshold family used as a baseline.

Index convention: hypotheses are 0-based throughout the Python API; the JSON
serialization layer is 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "FamilyMember",
    "ReferenceFamily",
    "ThresholdFamily",
    "BoundDetail",
    "as_pvalues",
    "vbar",
    "sbar",
    "bound_detail",
    "vstar_bruteforce",
    "zeta_tilde",
    "truncate_family",
    "simes_family",
    "sbar_topk_curve",
]


def as_pvalues(values: Iterable[float]) -> np.ndarray:
    """Validate and convert a p-value collection to a float64 array.

    Raises ValueError if the vector is empty or any entry falls outside [0, 1].
    """
    p = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                   dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("p-value vector must be one-dimensional and non-empty")
    if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return p


class FamilyMember(NamedTuple):
    """One rejection set with its false-positive budget."""

    indices: frozenset
    zeta: int


@dataclass(frozen=True)
class ReferenceFamily:
    """An explicit reference family: K sets over m hypotheses with budgets.

    Parameters
    ----------
    m : int
        Number of hypotheses; member indices must lie in ``0..m-1``.
    members : tuple of FamilyMember
        Ordered rejection sets with budgets ``0 <= zeta <= |set|``.
    """

    m: int
    members: tuple = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        object.__setattr__(self, "members", tuple(
            FamilyMember(frozenset(s), int(z)) for s, z in self.members))
        for s, z in self.members:
            if any((not 0 <= i < self.m) for i in s):
                raise ValueError("family member index out of range 0..m-1")
            if not 0 <= z <= len(s):
                raise ValueError("zeta must satisfy 0 <= zeta <= |set|")

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def nested(self) -> bool:
        """True iff each member set is contained in the next one."""
        return all(a.indices <= b.indices
                   for a, b in zip(self.members, self.members[1:]))

    def with_zetas(self, zetas: Sequence[int]) -> "ReferenceFamily":
        """Same sets, new budgets."""
        if len(zetas) != self.K:
            raise ValueError("need one zeta per member")
        return ReferenceFamily(
            self.m, tuple((mem.indices, int(z)) for mem, z in zip(self.members, zetas)))

    def to_json(self) -> dict:
        """1-based JSON form: {m, members: [{set: [...], zeta: n}]}."""
        return {
            "m": self.m,
            "members": [
                {"set": sorted(i + 1 for i in mem.indices), "zeta": mem.zeta}
                for mem in self.members
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReferenceFamily":
        m = int(obj["m"])
        members = []
        for entry in obj["members"]:
            raw = [int(i) for i in entry["set"]]
            if len(set(raw)) != len(raw):
                raise ValueError("member set contains duplicate indices")
            if any(not 1 <= i <= m for i in raw):
                raise ValueError("member set index out of range 1..m")
            members.append((frozenset(i - 1 for i in raw), int(entry["zeta"])))
        return cls(m, tuple(members))


@dataclass(frozen=True)
class ThresholdFamily:
    """A p-value thresholding family: R_k = {i : p_i < t_k}, budgets k-1.

    Thresholds must be non-decreasing, which makes the materialized sets
    nested. The budgets are implicit: zeta_k = k - 1, so set k is allowed to
    contain at most k - 1 true nulls.
    """

    m: int
    thresholds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("thresholds must be a non-empty vector")
        if t.size > self.m:
            raise ValueError("family size K cannot exceed m")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise ValueError("thresholds must lie in [0, 1]")
        if np.any(np.diff(t) < 0.0):
            raise ValueError("thresholds must be non-decreasing")
        object.__setattr__(self, "thresholds", t)

    @property
    def K(self) -> int:
        return int(self.thresholds.size)

    def member_sets(self, p: np.ndarray) -> list:
        """Materialize R_k = {i : p_i < t_k} (strict inequality)."""
        p = as_pvalues(p)
        if p.size != self.m:
            raise ValueError("p-value vector length must equal m")
        return [frozenset(np.flatnonzero(p < t)) for t in self.thresholds]

    def to_reference_family(self, p: np.ndarray) -> ReferenceFamily:
        # A budget k-1 larger than the set itself is vacuous: clamping it to
        # |set| changes neither vbar (the clamped term |R \ R_k| + |R_k| is
        # always >= |R|, the trivial cap) nor the feasible sets of the optimal
        # bound, and keeps the explicit-family invariant zeta <= |set|.
        return ReferenceFamily(
            self.m,
            tuple((s, min(k, len(s))) for k, s in enumerate(self.member_sets(p))),
        )

    def to_json(self) -> dict:
        return {"m": self.m, "thresholds": [float(t) for t in self.thresholds]}

    @classmethod
    def from_json(cls, obj: dict) -> "ThresholdFamily":
        return cls(int(obj["m"]), np.asarray(obj["thresholds"], dtype=np.float64))


def _check_rejection_set(R: Iterable[int], m: int) -> np.ndarray:
    r = np.asarray(sorted(set(int(i) for i in R)), dtype=np.int64)
    if r.size and (r[0] < 0 or r[-1] >= m):
        raise ValueError("rejection-set index out of range 0..m-1")
    return r


def _threshold_terms(fam: ThresholdFamily, r: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Interpolation terms |R \\ R_k| + (k-1) for all k, via one sorted scan."""
    p = as_pvalues(p)
    if p.size != fam.m:
        raise ValueError("p-value vector length must equal m")
    pr = np.sort(p[r])
    below = np.searchsorted(pr, fam.thresholds, side="left")  # #{i in R : p_i < t_k}
    return (r.size - below) + np.arange(fam.K, dtype=np.int64)


def vbar(R: Iterable[int], fam, p: np.ndarray | None = None) -> int:
    """Upper bound on the number of true nulls inside the set R.

    Interpolates from the family: ``min_k (|R \\ R_k| + zeta_k)``, capped at
    ``|R|``. Valid simultaneously over every R whenever the family's budget
    guarantee holds, and equal to the optimal bound when the family is nested.

    Parameters
    ----------
    R : iterable of int
        Candidate rejection set, 0-based indices.
    fam : ReferenceFamily or ThresholdFamily
        The calibrated family. Threshold families additionally need ``p``.
    p : ndarray, optional
        p-values (length m), required when ``fam`` is a ThresholdFamily.

    Returns
    -------
    int
        The bound, between 0 and ``|R|``.
    """
    return bound_detail(R, fam, p).vbar


class BoundDetail(NamedTuple):
    """Bound on a set together with its witness inside the family.

    ``k_argmin`` is the 1-based family position achieving the minimizing
    interpolation term (smallest k on ties), or None when the trivial cap
    ``|R|`` is strictly smaller than every term.
    """

    vbar: int
    sbar: int
    k_argmin: int | None


def bound_detail(R: Iterable[int], fam, p: np.ndarray | None = None) -> BoundDetail:
    """Compute ``vbar``/``sbar`` on R and report the minimizing position."""
    r = _check_rejection_set(R, fam.m)
    cap = int(r.size)
    if isinstance(fam, ThresholdFamily):
        if p is None:
            raise ValueError("threshold families need the p-value vector")
        terms = _threshold_terms(fam, r, p)
    elif isinstance(fam, ReferenceFamily):
        rset = frozenset(int(i) for i in r)
        terms = np.asarray(
            [len(rset - mem.indices) + mem.zeta for mem in fam.members],
            dtype=np.int64)
    else:
        raise TypeError(f"unsupported family type {type(fam).__name__}")
    if terms.size == 0:
        return BoundDetail(cap, 0, None)
    k = int(np.argmin(terms))
    best = int(terms[k])
    if best <= cap:
        return BoundDetail(best, cap - best, k + 1)
    return BoundDetail(cap, 0, None)


def sbar(R: Iterable[int], fam, p: np.ndarray | None = None) -> int:
    """Lower bound on the number of true discoveries in R: ``|R| - vbar(R)``."""
    return bound_detail(R, fam, p).sbar


def vstar_bruteforce(R: Iterable[int], fam, p: np.ndarray | None = None,
                     cap: int = 20) -> int:
    """Optimal worst-case bound on ``|R ∩ H0|`` by exhaustive enumeration.

    Maximizes ``|R ∩ A|`` over all null-candidate sets A compatible with the
    family budgets (``|R_k ∩ A| <= zeta_k`` for all k). Computing this is
    NP-hard for arbitrary families, so the search is restricted to subsets of
    R — sound because ``|R ∩ A|`` and the constraints only tighten when A is
    shrunk to ``A ∩ R`` — and refused outright when ``|R|`` exceeds ``cap``.

    Raises
    ------
    ValueError
        If ``|R| > cap`` (exponential cost: 2^|R| candidate sets).
    """
    r = _check_rejection_set(R, fam.m)
    if r.size > cap:
        raise ValueError(
            f"refusing vstar enumeration: |R|={r.size} exceeds cap={cap} "
            f"(exponential cost 2^|R|)")
    if isinstance(fam, ThresholdFamily):
        if p is None:
            raise ValueError("threshold families need the p-value vector")
        fam = fam.to_reference_family(p)
    pos = {int(i): j for j, i in enumerate(r)}
    masks = []
    for mem in fam.members:
        mask = 0
        for i in mem.indices:
            j = pos.get(int(i))
            if j is not None:
                mask |= 1 << j
        masks.append((mask, mem.zeta))
    best = 0
    for a in range(1 << r.size):
        size = a.bit_count()
        if size <= best:
            continue
        if all((a & mask).bit_count() <= z for mask, z in masks):
            best = size
    return best


def zeta_tilde(fam: ReferenceFamily) -> tuple:
    """Self-consistent budgets: the family's own bound applied to each member.

    Returns ``(vbar(R_1), ..., vbar(R_K))``. Replacing the budgets with these
    values never changes ``vbar`` on any set, and re-applying the operation is
    the identity.
    """
    return tuple(vbar(mem.indices, fam) for mem in fam.members)


def truncate_family(fam: ThresholdFamily, K0: int) -> ThresholdFamily:
    """Keep only the first ``K0 + 1`` thresholds.

    If the user only cares about sets whose false-positive bound is at most
    K0, the truncated family yields the same ``vbar`` on all of them (terms
    with k > K0 + 1 contribute at least k - 1 > K0 and cannot be the minimum).
    """
    if K0 < 0:
        raise ValueError("K0 must be >= 0")
    keep = min(fam.K, K0 + 1)
    return ThresholdFamily(fam.m, fam.thresholds[:keep])


def simes_family(p: np.ndarray, alpha: float, hommel: bool = False) -> ThresholdFamily:
    """Baseline threshold family t_k = alpha*k/(m*c_m), K = m.

    With ``hommel=False`` (Simes), c_m = 1; the joint budget guarantee then
    requires positive regression dependence. With ``hommel=True``,
    c_m = sum_{i<=m} 1/i, valid under arbitrary dependence but markedly more
    conservative.
    """
    p = as_pvalues(p)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    m = p.size
    c = float(np.sum(1.0 / np.arange(1, m + 1))) if hommel else 1.0
    k = np.arange(1, m + 1, dtype=np.float64)
    return ThresholdFamily(m, alpha * k / (m * c))


def sbar_topk_curve(fam: ThresholdFamily, p: np.ndarray, n_max: int) -> np.ndarray:
    """True-discovery lower bounds for the top-k sets, k = 1..n_max.

    The top-k set consists of the k smallest p-values. Runs in
    O(m log m + K + n_max log K) using the monotonicity of the member counts:
    for each k the interpolation term is flat in the set size until the set
    outgrows R_k, then climbs with slope one.
    """
    p = as_pvalues(p)
    if p.size != fam.m:
        raise ValueError("p-value vector length must equal m")
    if not 1 <= n_max <= fam.m:
        raise ValueError("top-k size must satisfy 1 <= N <= m")
    order = np.argsort(p, kind="stable")
    p_sorted = p[order]
    # counts[k] = #{i : p_i < t_k}; non-decreasing because thresholds are.
    counts = np.searchsorted(p_sorted, fam.thresholds, side="left")
    base = np.arange(fam.K, dtype=np.int64) - counts  # (k-1) - counts_k
    prefix_min = np.minimum.accumulate(base)
    sizes = np.arange(1, n_max + 1, dtype=np.int64)
    # First family position whose member already covers the whole top-k' set.
    first_cover = np.searchsorted(counts, sizes, side="left")
    vbar_vals = np.full(n_max, np.iinfo(np.int64).max, dtype=np.int64)
    covered = first_cover < fam.K
    vbar_vals[covered] = first_cover[covered]  # term value is (k-1) = position
    partial = first_cover > 0
    if np.any(partial):
        idx = first_cover[partial] - 1
        vbar_vals[partial] = np.minimum(
            vbar_vals[partial], sizes[partial] + prefix_min[idx])
    vbar_vals = np.minimum(vbar_vals, sizes)
    return sizes - vbar_vals
