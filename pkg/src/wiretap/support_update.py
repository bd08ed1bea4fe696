"""Support maintenance between optimisation rounds: clustering, pruning and UPDATE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wiretap.kkt import KktReport
from wiretap.model import SymmetricInput
from wiretap.numerics import DomainError

REPLACE = "replace"
SPLIT = "split"
INSERT = "insert"
RESET = "reset"


class ContractError(RuntimeError):
    """An operation was called outside its precondition."""


@dataclass(frozen=True)
class UpdatePolicy:
    min_dist: float = 1e-2
    delta: float = 0.1
    prune_weight: float = 1e-6

    def __post_init__(self):
        if not 0 < self.min_dist < self.delta:
            raise DomainError("need 0 < min_dist < delta")
        if self.prune_weight < 0:
            raise DomainError("prune_weight must be nonnegative")


def _merge_pass(x: list[float], w: list[float], a: float, pinned: bool, min_dist: float):
    out_x: list[float] = []
    out_w: list[float] = []
    i = 0
    while i < len(x):
        j = i + 1
        while j < len(x) and x[j] - x[j - 1] < min_dist:
            j += 1
        run_x, run_w = x[i:j], w[i:j]
        total = sum(run_w)
        if j == i + 1:
            loc = run_x[0]
        elif pinned and j == len(x):
            loc = a
        elif run_x[0] == 0.0 and len(run_x) > 1:
            loc = sum(p * q for p, q in zip(run_x, run_w)) / total
            if loc < min_dist:
                loc = 0.0
        else:
            loc = sum(p * q for p, q in zip(run_x, run_w)) / total
        out_x.append(loc)
        out_w.append(total)
        i = j
    return out_x, out_w


def cluster(inp: SymmetricInput, policy: UpdatePolicy = UpdatePolicy()) -> SymmetricInput:
    """Merge runs of half-points closer than ``min_dist``.

    Each run becomes one point at the probability-weighted mean carrying the
    summed weight.  A run containing the pinned peak stays at A, and a run
    containing 0 stays at 0 when its mean lands within ``min_dist`` of it.
    A pair {-x, +x} with 2x < min_dist collapses onto 0.  Passes repeat
    until every gap is at least ``min_dist``.
    """
    a = inp.amplitude
    pinned = inp.is_pinned
    x = inp.half_points.tolist()
    w = inp.half_weights.tolist()
    while True:
        x = [0.0 if 0.0 < p < 0.5 * policy.min_dist and not (pinned and k == len(x) - 1) else p
             for k, p in enumerate(x)]
        nx, nw = _merge_pass(x, w, a, pinned, policy.min_dist)
        if len(nx) == len(x) and nx == x:
            break
        x, w = nx, nw
    if x == inp.half_points.tolist() and w == inp.half_weights.tolist():
        return inp
    return SymmetricInput(a, x, w)


def prune(inp: SymmetricInput, policy: UpdatePolicy = UpdatePolicy()) -> SymmetricInput:
    """Drop non-peak half-points whose weight fell below ``prune_weight``."""
    keep = inp.half_weights >= policy.prune_weight
    if inp.is_pinned:
        keep[-1] = True
    if keep.all():
        return inp
    w = inp.half_weights[keep]
    return SymmetricInput(inp.amplitude, inp.half_points[keep], w / w.sum())


def uniform_weights(points) -> np.ndarray:
    """Half-weights giving every point of the full support the same mass."""
    x = np.asarray(points, dtype=float)
    mult = np.where(x == 0.0, 1.0, 2.0)
    return mult / mult.sum()


def choose_update(inp: SymmetricInput, report: KktReport, policy: UpdatePolicy = UpdatePolicy()):
    """Which UPDATE branch applies; returns (branch, (x1, x2) or None)."""
    if report.valid:
        raise ContractError("update called with a valid KKT report")
    if report.location_violated and report.level_violated:
        s = sorted(x for x, _ in report.support_violations)
        xh = report.candidate_x
        best = None
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                x1, x2 = s[i], s[j]
                if x2 - x1 < policy.delta and x1 <= xh <= x2:
                    if best is None or x2 - x1 < best[1] - best[0]:
                        best = (x1, x2)
        if best is not None:
            return REPLACE, best
    if report.location_violated:
        split_at = zero_split_location(inp, report, policy)
        if split_at is not None:
            return SPLIT, split_at
        return INSERT, None
    return RESET, None


def zero_split_location(inp: SymmetricInput, report: KktReport, policy: UpdatePolicy):
    """First local maximum of the Xi profile when Xi rises away from a support point at 0.

    A point at 0 can only be optimal if Xi peaks there; if Xi increases
    from 0 the singleton must split into a pair.
    """
    if not inp.has_zero or inp.n < 2:
        return None
    xs, vals = report.profile_x, report.profile_xi
    if xs.size < 3 or not vals[1] > vals[0]:
        return None
    k = 1
    while k + 1 < xs.size and vals[k + 1] > vals[k]:
        k += 1
    loc = float(xs[k])
    if loc < policy.min_dist or loc >= inp.half_points[1]:
        return None
    return loc


def update(inp: SymmetricInput, report: KktReport, policy: UpdatePolicy = UpdatePolicy()) -> SymmetricInput:
    """Modify an input that failed validation.

    * both conditions fired and two violating points x1, x2 closer than
      ``delta`` bracket the candidate: the candidate replaces them and takes
      their summed weight;
    * otherwise, if a better location exists and Xi rises away from a support
      point at 0, that singleton splits into a pair at the first local maximum
      of Xi, keeping its weight;
    * otherwise, if a better location exists, the candidate joins the support
      (or merges into a point within ``min_dist`` of it) and all full-support
      points get equal mass;
    * otherwise the weights are reset to equal mass on the same support.
    """
    branch, pair = choose_update(inp, report, policy)
    a = inp.amplitude
    x = inp.half_points.copy()
    w = inp.half_weights.copy()
    xh = float(np.clip(report.candidate_x, 0.0, a))
    if branch == REPLACE:
        x1, x2 = pair
        drop = (x == x1) | (x == x2)
        merged_w = w[drop].sum()
        x, w = x[~drop], w[~drop]
        k = np.searchsorted(x, xh)
        if k < x.size and x[k] == xh:
            w[k] += merged_w
        else:
            x = np.insert(x, k, xh)
            w = np.insert(w, k, merged_w)
        return SymmetricInput(a, x, w)
    if branch == SPLIT:
        x[0] = pair
        return SymmetricInput(a, np.sort(x), w[np.argsort(x, kind="stable")])
    if branch == INSERT:
        near = np.abs(x - xh) < policy.min_dist
        if not near.any():
            if xh < 0.5 * policy.min_dist and not (x == 0.0).any():
                xh = 0.0
            x = np.sort(np.append(x, xh))
        return SymmetricInput(a, x, uniform_weights(x))
    return SymmetricInput(a, x, uniform_weights(x))
