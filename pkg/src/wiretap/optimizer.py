"""Inner loops: multiplicative probability updates and gradient ascent on locations.

The probability update is w_i <- w_i exp(Xi(x_i)) / Z over a fixed support.
Its fixed points are the inputs whose support points all share the same Xi
value, and it reduces to the classical Blahut-Arimoto iteration when the
eavesdropper noise grows without bound.

Locations move by projected gradient ascent on I(X;Y1) - I(X;Y2) with an
Armijo backtracking line search, so the objective never decreases.  The
largest point stays pinned at the amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from wiretap.model import (
    DEFAULT_QUAD,
    ChannelPair,
    LegTable,
    SymmetricInput,
    leg_rule,
    secrecy_information,
)
from wiretap.numerics import DomainError, NumericalError, QuadratureSettings

WEIGHT_FLOOR = 1e-12


@dataclass(frozen=True)
class AscentParams:
    n_ba: int = 100
    n_ga: int = 20
    backtrack_alpha: float = 0.3
    backtrack_beta: float = 0.5
    initial_step: Optional[float] = None  # None -> 0.1 * sigma1
    fd_check_tol: float = 1e-6
    max_shrinks: int = 30

    def __post_init__(self):
        if self.n_ba < 0 or self.n_ga < 0:
            raise DomainError("iteration counts must be nonnegative")
        if not 0 < self.backtrack_alpha < 0.5:
            raise DomainError("backtrack_alpha must lie in (0, 1/2)")
        if not 0 < self.backtrack_beta < 1:
            raise DomainError("backtrack_beta must lie in (0, 1)")
        if self.initial_step is not None and self.initial_step <= 0:
            raise DomainError("initial_step must be positive")

    def step_for(self, ch: ChannelPair) -> float:
        return 0.1 * ch.sigma1 if self.initial_step is None else self.initial_step


class _Tables:
    """Both legs' quadrature tables for one fixed set of support points."""

    def __init__(self, inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings):
        self.legs = [LegTable(inp.half_points, s, leg_rule(inp, s, quad)) for s in ch.sigmas]
        self.zero = inp.half_points == 0.0

    def log_densities(self, w):
        out = [leg.log_density(w) for leg in self.legs]
        for lp in out:
            if not np.all(np.isfinite(lp)):
                raise NumericalError("non-finite output log-density")
        return out

    def xi(self, w) -> np.ndarray:
        lp1, lp2 = self.log_densities(w)
        return self.legs[0].divergences(lp1) - self.legs[1].divergences(lp2)

    def secrecy(self, w) -> float:
        lp1, lp2 = self.log_densities(w)
        l1, l2 = self.legs
        return (l1.entropy(lp1) - l1.h_gauss) - (l2.entropy(lp2) - l2.h_gauss)

    def gradient(self, w) -> np.ndarray:
        lp1, lp2 = self.log_densities(w)
        l1, l2 = self.legs
        g = l1.location_gradient(w, lp1) - l2.location_gradient(w, lp2)
        # a singleton at 0 is a stationary point by symmetry
        g[self.zero] = 0.0
        return g


def _require_degraded(ch: ChannelPair):
    if not ch.degraded:
        raise DomainError("optimizer requires sigma1 < sigma2")


def _ba_update(w: np.ndarray, xi_vals: np.ndarray) -> np.ndarray:
    logw = np.log(w) + xi_vals
    logw -= logw.max()
    new = np.exp(logw)
    z = new.sum()
    if not math.isfinite(z) or z <= 0:
        raise NumericalError("probability update normaliser is not finite")
    return new / z


def ba_step(inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings = DEFAULT_QUAD) -> SymmetricInput:
    """One multiplicative update w_i <- w_i exp(Xi(x_i)) / Z on a fixed support."""
    _require_degraded(ch)
    w = inp.half_weights
    return inp.with_weights(_ba_update(w, _Tables(inp, ch, quad).xi(w)))


def _floor(w: np.ndarray) -> np.ndarray:
    if np.any(w < WEIGHT_FLOOR):
        w = np.maximum(w, WEIGHT_FLOOR)
        w = w / w.sum()
    return w


def run_ba(inp: SymmetricInput, ch: ChannelPair, n_ba: int, quad: QuadratureSettings = DEFAULT_QUAD,
           tol: float = 0.0) -> SymmetricInput:
    """`n_ba` probability updates; weights are floored at 1e-12 and renormalised.

    With `tol` > 0 the loop stops early once no weight changes by more than `tol`.
    """
    if n_ba <= 0:
        return inp
    _require_degraded(ch)
    tables = _Tables(inp, ch, quad)
    w = inp.half_weights.copy()
    for _ in range(n_ba):
        new = _floor(_ba_update(w, tables.xi(w)))
        done = tol > 0 and np.max(np.abs(new - w)) <= tol
        w = new
        if done:
            break
    return inp.with_weights(w)


def secrecy_gradient(inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings = DEFAULT_QUAD) -> np.ndarray:
    """Gradient of I(X;Y1) - I(X;Y2) with respect to each half-point.

    Component i is w_i [J(x_i, s1) - J(x_i, s2)], where J(x, s) is the
    x-derivative of D(N(x, s^2) || P_Y) with P_Y held fixed.  The entry for
    the pinned peak is returned too; ``ascend`` never applies it.
    """
    return _Tables(inp, ch, quad).gradient(inp.half_weights)


def finite_difference_gradient(inp: SymmetricInput, ch: ChannelPair, step: float = 1e-5,
                               quad: QuadratureSettings = DEFAULT_QUAD) -> np.ndarray:
    """Central differences of the secrecy information, one coordinate at a time.

    Coordinates are perturbed inside a widened amplitude so the perturbed
    input stays admissible; the quadrature domain is held at the original
    amplitude.  Points at 0 get a zero entry (moving them either way gives
    the same pair by symmetry).
    """
    a = inp.amplitude
    out = np.zeros(inp.n)

    def value(points):
        pts = np.abs(points)
        order = np.argsort(pts, kind="stable")
        probe = SymmetricInput(a + step, pts[order], inp.half_weights[order])
        l1, l2 = _probe_tables(probe, ch, quad, reach=a)
        lp1 = l1.log_density(probe.half_weights)
        lp2 = l2.log_density(probe.half_weights)
        return (l1.entropy(lp1) - l1.h_gauss) - (l2.entropy(lp2) - l2.h_gauss)

    for i, xi_ in enumerate(inp.half_points):
        if xi_ == 0.0:
            continue
        up = inp.half_points.copy()
        dn = inp.half_points.copy()
        up[i] += step
        dn[i] -= step
        out[i] = (value(up) - value(dn)) / (2 * step)
    return out


def _probe_tables(inp: SymmetricInput, ch: ChannelPair, quad, reach: float):
    return [LegTable(inp.half_points, s, leg_rule(inp, s, quad, reach=reach)) for s in ch.sigmas]


def gradient_check(inp: SymmetricInput, ch: ChannelPair, step: float = 1e-5,
                   quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """Largest absolute gap between the analytic gradient and central differences."""
    analytic = secrecy_gradient(inp, ch, quad)
    numeric = finite_difference_gradient(inp, ch, step, quad)
    return float(np.max(np.abs(analytic - numeric)))


def ascend(inp: SymmetricInput, ch: ChannelPair, params: AscentParams = AscentParams(),
           quad: QuadratureSettings = DEFAULT_QUAD) -> SymmetricInput:
    """Up to ``params.n_ga`` projected gradient steps with backtracking.

    Free points move along the gradient, are clamped to [0, A] and re-sorted.
    The first trial of each iteration moves the fastest point by
    ``initial_step``, so flat directions are crossed at a usable pace.
    A trial step is accepted when the secrecy information rises by at least
    alpha * g.(x_new - x); otherwise the step shrinks by beta.  After
    ``max_shrinks`` failed trials the current points are returned.
    Coincident points are left for clustering.
    """
    if params.n_ga <= 0:
        return inp
    if ch.sigma1 == ch.sigma2:
        return inp
    _require_degraded(ch)
    a = inp.amplitude
    x = inp.half_points.copy()
    w = inp.half_weights.copy()
    free = np.ones(x.size, dtype=bool)
    if inp.is_pinned:
        free[-1] = False
    t0 = params.step_for(ch)

    tables = _Tables(inp, ch, quad)
    f = tables.secrecy(w)
    for _ in range(params.n_ga):
        g = tables.gradient(w)
        g[~free] = 0.0
        if not np.any(g):
            break
        t = t0 / float(np.max(np.abs(g)))
        accepted = False
        for _ in range(params.max_shrinks + 1):
            trial = np.clip(x + t * g, 0.0, a)
            trial[~free] = x[~free]
            moved = float(g @ (trial - x))
            if moved <= 0:
                t *= params.backtrack_beta
                continue
            order = np.argsort(trial, kind="stable")
            cand = SymmetricInput(a, trial[order], w[order])
            cand_tables = _Tables(cand, ch, quad)
            f_new = cand_tables.secrecy(cand.half_weights)
            if f_new > f and f_new >= f + params.backtrack_alpha * moved:
                x, w = cand.half_points.copy(), cand.half_weights.copy()
                free = free[order]
                tables, f = cand_tables, f_new
                accepted = True
                break
            t *= params.backtrack_beta
        if not accepted:
            break
    if np.array_equal(x, inp.half_points):
        return inp
    return SymmetricInput(a, x, w)


def secrecy_value(inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """Unclamped secrecy information on the optimizer's own tables."""
    if not ch.degraded:
        return secrecy_information(inp, ch, quad)
    return _Tables(inp, ch, quad).secrecy(inp.half_weights)
