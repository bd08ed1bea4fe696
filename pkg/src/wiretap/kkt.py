"""epsilon-KKT validation of a candidate input.

An input fails validation when

* some x in [-A, A] has Xi(x) > Xi(A) + eps (a better location exists), or
* some support point has |Xi(x_i) - Xi(A)| > eps (the support is not level).

Xi(A) stands in for the unknown capacity because the peak always belongs to
the optimal support.  Xi is even for symmetric inputs, so only [0, A] is
scanned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from wiretap.model import DEFAULT_QUAD, ChannelPair, SymmetricInput, xi
from wiretap.numerics import DomainError, QuadratureSettings

DEFAULT_EPSILON = 1e-4
MAX_GRID_POINTS = 50_000
GOLDEN_TOL = 1e-9
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class KktReport:
    valid: bool
    capacity_proxy: float
    max_profile_violation: float
    support_violations: tuple[tuple[float, float], ...]
    candidate_x: float
    epsilon: float
    profile_x: np.ndarray = field(repr=False)
    profile_xi: np.ndarray = field(repr=False)

    @property
    def profile(self) -> list[tuple[float, float]]:
        return list(zip(self.profile_x.tolist(), self.profile_xi.tolist()))

    @property
    def location_violated(self) -> bool:
        """Some x beats the peak by more than eps."""
        return self.max_profile_violation > self.epsilon

    @property
    def level_violated(self) -> bool:
        """Some support point sits outside the eps-strip around Xi(A)."""
        return bool(self.support_violations)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "epsilon": self.epsilon,
            "capacity_proxy": self.capacity_proxy,
            "max_profile_violation": self.max_profile_violation,
            "candidate_x": self.candidate_x,
            "support_violations": [{"x": x, "deviation": d} for x, d in self.support_violations],
        }


def default_grid_step(sigma1: float, amplitude: float) -> float:
    """min(sigma1, A)/50, coarsened if the scan would exceed 5e4 points."""
    if amplitude <= 0:
        return sigma1 / 50.0
    step = min(sigma1, amplitude) / 50.0
    return max(step, amplitude / (MAX_GRID_POINTS - 1))


def golden_section_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise a scalar function on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def profile_grid(inp: SymmetricInput, grid_step: float) -> np.ndarray:
    if grid_step <= 0:
        raise DomainError("grid_step must be positive")
    a = inp.amplitude
    grid = np.arange(0.0, a, grid_step) if a > 0 else np.zeros(1)
    return np.unique(np.concatenate([grid, [a], inp.half_points]))


def xi_profile(inp: SymmetricInput, ch: ChannelPair, grid_step: float,
               quad: QuadratureSettings = DEFAULT_QUAD) -> tuple[np.ndarray, np.ndarray]:
    """Xi on {0, step, 2 step, ...} plus A and every support point, sorted by x."""
    xs = profile_grid(inp, grid_step)
    return xs, xi(xs, inp, ch, quad)


def _peak_value(inp: SymmetricInput, xs: np.ndarray, vals: np.ndarray) -> float:
    idx = np.searchsorted(xs, inp.amplitude)
    return float(vals[idx])


def violating_set(inp: SymmetricInput, ch: ChannelPair, epsilon: float = DEFAULT_EPSILON,
                  quad: QuadratureSettings = DEFAULT_QUAD) -> list[float]:
    """Support points (other than A) whose Xi leaves the eps-strip around Xi(A)."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    pts = np.unique(np.append(inp.half_points, inp.amplitude))
    vals = xi(pts, inp, ch, quad)
    peak = _peak_value(inp, pts, vals)
    dev = xi(inp.half_points, inp, ch, quad) - peak
    keep = (np.abs(dev) > epsilon) & (inp.half_points != inp.amplitude)
    return inp.half_points[keep].tolist()


def validate(inp: SymmetricInput, ch: ChannelPair, epsilon: float = DEFAULT_EPSILON,
             grid_step: float | None = None, quad: QuadratureSettings = DEFAULT_QUAD,
             check_evenness: bool = False) -> KktReport:
    """Scan Xi over [0, A] and test both eps-KKT conditions.

    The grid argmax is refined by golden-section search within one grid step
    on either side; the refined point is the insertion candidate.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if grid_step is None:
        grid_step = default_grid_step(ch.sigma1, inp.amplitude)
    xs, vals = xi_profile(inp, ch, grid_step, quad)
    if check_evenness:
        mirrored = xi(-xs, inp, ch, quad)
        gap = float(np.max(np.abs(mirrored - vals)))
        if gap > 1e-9:
            raise AssertionError(f"Xi is not even: max |Xi(x) - Xi(-x)| = {gap:.3e}")
    peak = _peak_value(inp, xs, vals)

    k = int(np.argmax(vals))
    cand_x, cand_val = float(xs[k]), float(vals[k])
    a = inp.amplitude
    if a > 0:
        lo, hi = max(0.0, cand_x - grid_step), min(a, cand_x + grid_step)
        rx, rv = golden_section_max(lambda t: xi(t, inp, ch, quad), lo, hi)
        if rv > cand_val:
            cand_x, cand_val = rx, rv
    max_violation = max(float(np.max(vals)), cand_val) - peak

    support_vals = vals[np.searchsorted(xs, inp.half_points)]
    dev = support_vals - peak
    bad = (np.abs(dev) > epsilon) & (inp.half_points != a)
    violations = tuple((float(x), float(d)) for x, d in zip(inp.half_points[bad], dev[bad]))

    valid = max_violation <= epsilon and not violations
    return KktReport(
        valid=bool(valid),
        capacity_proxy=peak,
        max_profile_violation=float(max_violation),
        support_violations=violations,
        candidate_x=float(min(max(cand_x, 0.0), a)),
        epsilon=float(epsilon),
        profile_x=xs,
        profile_xi=vals,
    )
