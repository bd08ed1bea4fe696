"""Independent reference computations shared by the test modules."""

import math

import numpy as np
from scipy.optimize import minimize


def trapezoid_secrecy_batch(points, probs, s1, s2, reach, n=6001):
    """Secrecy information for a batch of symmetric pmfs by trapezoid rule.

    ``points`` and ``probs`` have shape (batch, k); zero-probability entries
    are ignored.
    """
    points = np.atleast_2d(points)
    probs = np.atleast_2d(probs)
    out = 0.0
    for sign, s in ((1.0, s1), (-1.0, s2)):
        y = np.linspace(-reach - 10 * s, reach + 10 * s, n)
        dens = np.exp(-0.5 * ((y[None, None, :] - points[:, :, None]) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        p = np.einsum("bk,bky->by", probs, dens)
        integrand = -p * np.log(np.maximum(p, 1e-300))
        h = np.trapezoid(integrand, y, axis=1)
        out = out + sign * (h - 0.5 * math.log(2 * math.pi * math.e * s * s))
    return out


def best_small_symmetric(amplitude, s1, s2, step=1e-2):
    """Exhaustive search over symmetric pmfs with at most three points, then a local polish.

    Candidates are {+-a} and {0, +-a} with a on a grid of ``step`` and the
    mass at 0 on a grid of ``step``.  Returns (value, a, mass_at_zero).
    """
    locs = np.arange(step, amplitude + 1e-12, step)
    zeros = np.arange(0.0, 1.0 + 1e-12, step)
    la, lz = np.meshgrid(locs, zeros, indexing="ij")
    la, lz = la.ravel(), lz.ravel()
    pts = np.stack([-la, np.zeros_like(la), la], axis=1)
    prb = np.stack([(1 - lz) / 2, lz, (1 - lz) / 2], axis=1)
    vals = trapezoid_secrecy_batch(pts, prb, s1, s2, amplitude)
    k = int(np.argmax(vals))

    def neg(v):
        a = float(np.clip(v[0], 1e-6, amplitude))
        z = float(np.clip(v[1], 0.0, 1.0))
        return -float(trapezoid_secrecy_batch([[-a, 0.0, a]], [[(1 - z) / 2, z, (1 - z) / 2]], s1, s2, amplitude)[0])

    res = minimize(neg, [la[k], lz[k]], method="L-BFGS-B",
                   bounds=[(1e-6, amplitude), (0.0, 1.0)])
    if -res.fun >= vals[k]:
        return -res.fun, float(res.x[0]), float(res.x[1])
    return float(vals[k]), float(la[k]), float(lz[k])
