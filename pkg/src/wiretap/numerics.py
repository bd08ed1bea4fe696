"""Log-domain Gaussian densities, log-sum-exp and composite Gauss-Legendre rules.

Everything here is a pure function of its arguments.  Rules are cached by
their defining parameters, so repeated integrals over the same domain reuse
the same node/weight arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
MAX_PANEL_SIGMAS = 2.0


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, message: str, node: float | None = None):
        super().__init__(message)
        self.node = node


def log_gaussian_pdf(y, mean, sigma):
    """Log-density of N(mean, sigma^2) at y, in nats.  Broadcasts over arrays."""
    if np.any(np.asarray(sigma) <= 0):
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    z = (np.asarray(y, dtype=float) - mean) / sigma
    out = -0.5 * LOG_2PI - np.log(sigma) - 0.5 * z * z
    return float(out) if np.ndim(out) == 0 else out


def log_sum_exp(terms: Iterable[tuple[float, float]]) -> float:
    """log sum_j exp(log_weight_j + log_value_j) with max subtraction."""
    s = np.array([a + b for a, b in terms], dtype=float)
    if s.size == 0:
        raise DomainError("log_sum_exp of an empty list")
    m = s.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(s - m).sum()))


def logsumexp_rows(a: np.ndarray) -> np.ndarray:
    """Column-wise log-sum-exp of a 2-D array (reduces axis 0)."""
    m = a.max(axis=0)
    return m + np.log(np.exp(a - m).sum(axis=0))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float

    def __len__(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class QuadratureSettings:
    """Panel count, nodes per panel and Gaussian tail truncation (in sigmas)."""

    panels: int = 64
    order: int = 10
    tail: float = 8.0


@lru_cache(maxsize=None)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


@lru_cache(maxsize=512)
def build_rule(lo: float, hi: float, panels: int = 64, order: int = 10) -> QuadratureRule:
    """Composite Gauss-Legendre rule with `panels` equal subintervals of [lo, hi].

    Exact per panel for polynomials of degree <= 2*order - 1.
    """
    if not (lo < hi):
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    if panels < 1 or order < 1:
        raise DomainError("panels and order must be positive")
    t, w = _legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights, float(lo), float(hi))


def gaussian_rule(reach: float, sigma: float, settings: QuadratureSettings = QuadratureSettings()) -> QuadratureRule:
    """Rule over [-reach - tail*sigma, reach + tail*sigma], symmetric about 0.

    Uses ``settings.panels`` panels, or more if needed to keep every panel
    at most ``MAX_PANEL_SIGMAS`` sigmas wide.
    """
    r = float(reach) + settings.tail * float(sigma)
    panels = max(settings.panels, math.ceil(2 * r / (MAX_PANEL_SIGMAS * sigma)))
    return build_rule(-r, r, panels, settings.order)


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sum of weights * f(nodes).  `f` is called once on the whole node array."""
    vals = np.broadcast_to(np.asarray(f(rule.nodes), dtype=float), rule.nodes.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        node = float(rule.nodes[np.argmax(bad)])
        raise NumericalError(f"integrand is not finite at y={node!r}", node=node)
    return float(rule.weights @ vals)
