"""Channel pair, symmetric inputs, output mixtures and the information functionals.

A symmetric input is stored by its nonnegative half-support.  Each positive
half-point x stands for the pair {-x, +x}, and its weight is the total
probability of that pair; a half-point at 0 is a singleton.

All output densities are Gaussian mixtures evaluated in the log domain.
Integrals use the composite Gauss-Legendre rule of ``numerics`` over
[-R - 8 sigma, R + 8 sigma], where R is the amplitude of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from wiretap.numerics import (
    LOG_2PI,
    DomainError,
    NumericalError,
    QuadratureRule,
    QuadratureSettings,
    gaussian_rule,
    log_gaussian_pdf,
    logsumexp_rows,
)

DEFAULT_QUAD = QuadratureSettings()

# Below this a negative mutual information is quadrature noise and is clamped to 0.
MI_CLAMP = 1e-9


def gaussian_entropy(sigma: float) -> float:
    """Differential entropy of N(0, sigma^2) in nats."""
    return 0.5 * (LOG_2PI + 1.0) + math.log(sigma)


@dataclass(frozen=True)
class ChannelPair:
    """Noise standard deviations of the legitimate (sigma1) and eavesdropper (sigma2) legs."""

    sigma1: float
    sigma2: float

    def __post_init__(self):
        for name in ("sigma1", "sigma2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def degraded(self) -> bool:
        """True when the eavesdropper is strictly noisier, i.e. secrecy capacity can be positive."""
        return self.sigma1 < self.sigma2

    @property
    def sigmas(self) -> tuple[float, float]:
        return (self.sigma1, self.sigma2)


@dataclass(frozen=True, eq=False)
class SymmetricInput:
    """Symmetric discrete distribution on [-A, A] kept as its half-support.

    Construction checks that points are sorted, lie in [0, amplitude] and that
    weights are positive and sum to one (they are renormalised exactly).
    Coincident points are tolerated because gradient steps may produce them
    before clustering; ``is_canonical`` reports the strict form.  The peak pin
    (last point equal to the amplitude) is reported by ``is_pinned`` rather
    than enforced, so that degenerate probes such as a point mass at 0 can be
    built for any amplitude.
    """

    amplitude: float
    half_points: np.ndarray
    half_weights: np.ndarray

    def __post_init__(self):
        a = float(self.amplitude)
        x = np.array(self.half_points, dtype=float).ravel()
        w = np.array(self.half_weights, dtype=float).ravel()
        if not (math.isfinite(a) and a >= 0):
            raise DomainError(f"amplitude must be finite and nonnegative, got {a!r}")
        if x.size == 0 or x.size != w.size:
            raise DomainError("half_points and half_weights must be nonempty and of equal length")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise DomainError("non-finite support point or weight")
        if x[0] < 0 or x[-1] > a:
            raise DomainError(f"support points must lie in [0, {a}]")
        if np.any(np.diff(x) < 0):
            raise DomainError("half_points must be sorted")
        if np.any(w <= 0):
            raise DomainError("weights must be strictly positive")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"weights sum to {total!r}, not 1")
        w = w / total
        x.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "amplitude", a)
        object.__setattr__(self, "half_points", x)
        object.__setattr__(self, "half_weights", w)

    def __len__(self) -> int:
        return self.half_points.size

    def __repr__(self) -> str:
        pts = ", ".join(f"{v:.6g}" for v in self.half_points)
        ws = ", ".join(f"{v:.6g}" for v in self.half_weights)
        return f"SymmetricInput(A={self.amplitude:.6g}, x=[{pts}], w=[{ws}])"

    @property
    def n(self) -> int:
        return self.half_points.size

    @property
    def has_zero(self) -> bool:
        return bool(self.half_points[0] == 0.0)

    @property
    def full_support_size(self) -> int:
        return 2 * self.n - int(np.count_nonzero(self.half_points == 0.0))

    @property
    def is_pinned(self) -> bool:
        return bool(self.half_points[-1] == self.amplitude)

    def is_canonical(self, min_gap: float = 0.0) -> bool:
        """Strictly increasing with successive gaps above `min_gap`."""
        gaps = np.diff(self.half_points)
        return bool(np.all(gaps > 0) and np.all(gaps >= min_gap))

    def with_weights(self, weights) -> "SymmetricInput":
        return SymmetricInput(self.amplitude, self.half_points, weights)

    def with_points(self, points) -> "SymmetricInput":
        return SymmetricInput(self.amplitude, points, self.half_weights)

    def full_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Expanded support (sorted ascending) and the probability of each point."""
        x, w = self.half_points, self.half_weights
        zero = x == 0.0
        pos_x, pos_w = x[~zero], 0.5 * w[~zero]
        pts = np.concatenate([-pos_x[::-1], x[zero], pos_x])
        probs = np.concatenate([pos_w[::-1], w[zero], pos_w])
        return pts, probs

    @classmethod
    def point_mass(cls, amplitude: float = 0.0) -> "SymmetricInput":
        return cls(amplitude, [0.0], [1.0])

    @classmethod
    def from_full(cls, points: Sequence[float], probs: Sequence[float], amplitude: float | None = None,
                  tol: float = 1e-9) -> "SymmetricInput":
        """Fold a full symmetric pmf into half form.

        Raises DomainError if the pmf is not normalised or not symmetric within `tol`.
        """
        pts = np.asarray(points, dtype=float)
        p = np.asarray(probs, dtype=float)
        if pts.size == 0 or pts.size != p.size:
            raise DomainError("points and probabilities must be nonempty and of equal length")
        if np.any(p <= 0):
            raise DomainError("probabilities must be positive")
        if abs(p.sum() - 1.0) > tol:
            raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")
        order = np.argsort(pts)
        pts, p = pts[order], p[order]
        if np.any(np.abs(pts + pts[::-1]) > tol) or np.any(np.abs(p - p[::-1]) > tol):
            raise DomainError("pmf is not symmetric about 0")
        half_x, half_w = [], []
        for xv, pv in zip(pts, p):
            if abs(xv) <= tol:
                half_x.append(0.0)
                half_w.append(pv)
            elif xv > 0:
                half_x.append(float(xv))
                half_w.append(2.0 * pv)
        a = max(half_x) if amplitude is None else float(amplitude)
        w = np.asarray(half_w)
        return cls(a, half_x, w / w.sum())


@dataclass(frozen=True, eq=False)
class OutputMixture:
    """Gaussian mixture density of Y = X + N for a symmetric discrete X."""

    sigma: float
    means: np.ndarray
    weights: np.ndarray

    def log_pdf(self, y):
        return log_output_pdf(self, y)


def output_mixture(inp: SymmetricInput, sigma: float) -> OutputMixture:
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    means, weights = inp.full_support()
    return OutputMixture(float(sigma), means, weights)


def log_output_pdf(mix: OutputMixture, y):
    """log P_Y(y) for scalar or array y."""
    ya = np.atleast_1d(np.asarray(y, dtype=float))
    comps = np.log(mix.weights)[:, None] + log_gaussian_pdf(ya[None, :], mix.means[:, None], mix.sigma)
    out = logsumexp_rows(comps)
    return float(out[0]) if np.ndim(y) == 0 else out


class LegTable:
    """Quadrature tables for one noise leg and a fixed set of support points.

    While the support stays fixed only the weights change, so the Gaussian
    kernels at the quadrature nodes are computed once and reused.
    """

    def __init__(self, half_points: np.ndarray, sigma: float, rule: QuadratureRule):
        self.sigma = float(sigma)
        self.rule = rule
        x = np.asarray(half_points, dtype=float)
        y = rule.nodes
        zero = x == 0.0
        # full components: +x_i for every point, -x_i for positive ones
        neg_idx = np.flatnonzero(~zero)
        self.owner = np.concatenate([np.arange(x.size), neg_idx])
        self.log_share = np.concatenate([np.where(zero, 0.0, -math.log(2.0)), np.full(neg_idx.size, -math.log(2.0))])
        means = np.concatenate([x, -x[neg_idx]])
        self.log_phi = log_gaussian_pdf(y[None, :], means[:, None], self.sigma)
        phi_pos = np.exp(self.log_phi[: x.size])
        self.wphi = phi_pos * rule.weights[None, :]
        self.wdphi = self.wphi * (y[None, :] - x[:, None]) / self.sigma**2
        self.h_gauss = gaussian_entropy(self.sigma)

    def log_density(self, weights: np.ndarray) -> np.ndarray:
        lw = np.log(weights)[self.owner] + self.log_share
        return logsumexp_rows(lw[:, None] + self.log_phi)

    def entropy(self, log_p: np.ndarray) -> float:
        """h(Y) = -sum_k q_k P(y_k) log P(y_k)."""
        return float(-(self.rule.weights @ (np.exp(log_p) * log_p)))

    def divergences(self, log_p: np.ndarray) -> np.ndarray:
        """D(N(x_i, sigma^2) || P_Y) at every half-point."""
        return -self.h_gauss - self.wphi @ log_p

    def location_gradient(self, weights: np.ndarray, log_p: np.ndarray) -> np.ndarray:
        """d h(Y) / d x_i, both members of a pair moving together."""
        return -weights * (self.wdphi @ (log_p + 1.0))


def leg_rule(inp: SymmetricInput, sigma: float, quad: QuadratureSettings = DEFAULT_QUAD,
             reach: float | None = None) -> QuadratureRule:
    r = max(inp.amplitude, float(inp.half_points[-1])) if reach is None else reach
    return gaussian_rule(r, sigma, quad)


def _check_finite(values: np.ndarray, rule: QuadratureRule, what: str):
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(np.atleast_1d(values)))
        node = float(rule.nodes[bad[0]]) if np.ndim(values) and values.size == rule.nodes.size else None
        raise NumericalError(f"non-finite {what}", node=node)


def differential_entropy(inp: SymmetricInput, sigma: float, quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    table = LegTable(inp.half_points, sigma, leg_rule(inp, sigma, quad))
    log_p = table.log_density(inp.half_weights)
    _check_finite(log_p, table.rule, "output log-density")
    return table.entropy(log_p)


def _clamp_mi(value: float) -> float:
    if value < -MI_CLAMP:
        raise NumericalError(f"mutual information {value!r} is negative beyond quadrature noise")
    return max(value, 0.0)


def mutual_information(inp: SymmetricInput, sigma: float, quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """I(X; X + N) with N ~ N(0, sigma^2), in nats."""
    if sigma <= 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if inp.n == 1 and inp.half_points[0] == 0.0:
        return 0.0
    return _clamp_mi(differential_entropy(inp, sigma, quad) - gaussian_entropy(sigma))


def secrecy_information(inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings = DEFAULT_QUAD) -> float:
    """I(X; Y1) - I(X; Y2)."""
    return mutual_information(inp, ch.sigma1, quad) - mutual_information(inp, ch.sigma2, quad)


def _divergence_at(xs: np.ndarray, inp: SymmetricInput, sigma: float, quad: QuadratureSettings) -> np.ndarray:
    reach = max(inp.amplitude, float(np.max(np.abs(xs))) if xs.size else 0.0)
    rule = leg_rule(inp, sigma, quad, reach=reach)
    table = LegTable(inp.half_points, sigma, rule)
    log_p = table.log_density(inp.half_weights)
    _check_finite(log_p, rule, "output log-density")
    y = rule.nodes
    wphi = np.exp(log_gaussian_pdf(y[None, :], xs[:, None], sigma)) * rule.weights[None, :]
    return -table.h_gauss - wphi @ log_p


def xi(x, inp: SymmetricInput, ch: ChannelPair, quad: QuadratureSettings = DEFAULT_QUAD):
    """Marginal information density difference at x (scalar or array).

    D(N(x, s1^2) || P_Y1) - D(N(x, s2^2) || P_Y2), where P_Y1 and P_Y2 are the
    outputs induced by `inp`.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise DomainError("xi is only defined at finite x")
    out = _divergence_at(xs, inp, ch.sigma1, quad) - _divergence_at(xs, inp, ch.sigma2, quad)
    return float(out[0]) if np.ndim(x) == 0 else out


def gaussian_input_mi(input_variance: float, sigma: float) -> float:
    """Mutual information of a Gaussian input of the given variance: 0.5 log(1 + v / sigma^2)."""
    if input_variance < 0:
        raise DomainError("input variance must be nonnegative")
    return 0.5 * math.log1p(input_variance / sigma**2)


def input_variance(inp: SymmetricInput) -> float:
    return float(inp.half_weights @ inp.half_points**2)
