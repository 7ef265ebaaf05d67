"""Smoothed maximum likelihood estimator on the unit square.

The smoothed df integrates a product of integrated kernels against the
fitted discrete distribution.  Near the right/upper boundary a reflection
term is added per axis,

    weight(t, v) = IK((t - v)/h) + IKtail((2 - t - v)/h),

which removes the negative boundary bias while reducing to the plain
integrated kernel whenever max(t, u) <= 1 - h.  The lower boundary is left
uncorrected on purpose.  Axis weights never exceed 1, so values stay in
[0, 1] for a unit-mass source with the second-order kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (
    KernelSpec,
    TRIWEIGHT_SECOND_MOMENT,
    TRIWEIGHT_SQUARED_INTEGRAL,
)
from .npmle import DiscreteDistribution

__all__ = ["SmleEstimate", "DegeneratePointError", "smle_eval", "smle_grid",
           "smle_marginal", "smle_asymptotics", "default_bandwidth"]


class DegeneratePointError(ValueError):
    """An asymptotic formula was requested where a denominator vanishes."""


def default_bandwidth(n: int) -> float:
    """The prescribed bandwidth n^(-1/6)."""
    return float(n) ** (-1.0 / 6.0)


@dataclass(frozen=True)
class SmleEstimate:
    """A fitted discrete df together with the smoothing kernel."""

    source: DiscreteDistribution
    kernel: KernelSpec


def _axis_weights(kernel: KernelSpec, t, coords, boundary: bool):
    t = np.asarray(t, dtype=float)[..., None]
    w = kernel.cdf_h(t - coords)
    if boundary:
        w = w + kernel.tail_h(2.0 - t - coords)
    return w


def smle_eval(est: SmleEstimate, t, u, boundary: bool = True):
    """Boundary-corrected SMLE value at (t, u), both in [0, 1].

    With ``boundary=False`` the plain product-kernel form is evaluated; the
    two coincide whenever ``max(t, u) <= 1 - h``.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    shape = np.broadcast_shapes(t.shape, u.shape)
    pts, p = est.source.points, est.source.masses
    wx = _axis_weights(est.kernel, np.broadcast_to(t, shape).ravel(), pts[:, 0], boundary)
    wy = _axis_weights(est.kernel, np.broadcast_to(u, shape).ravel(), pts[:, 1], boundary)
    vals = (wx * wy) @ p
    return vals.reshape(shape) if shape else float(vals[0])


def smle_grid(est: SmleEstimate, ts, us, boundary: bool = True) -> np.ndarray:
    """SMLE on the product grid ``ts x us``; entry [i, j] is at (ts[i], us[j])."""
    ts = np.asarray(ts, dtype=float).ravel()
    us = np.asarray(us, dtype=float).ravel()
    pts, p = est.source.points, est.source.masses
    wx = _axis_weights(est.kernel, ts, pts[:, 0], boundary)
    wy = _axis_weights(est.kernel, us, pts[:, 1], boundary)
    return (wx * p) @ wy.T


def smle_marginal(est: SmleEstimate, axis: int, t, boundary: bool = True):
    """Smoothed marginal df along ``axis`` (1 or 2) at ``t``.

    Identical to absorbing the other axis completely, e.g.
    ``smle_eval(est, t, 1.0) == smle_marginal(est, 1, t)`` exactly, because
    the direct and reflected weights sum to one there.
    """
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    t = np.asarray(t, dtype=float)
    coords = est.source.points[:, axis - 1]
    w = _axis_weights(est.kernel, t.ravel(), coords, boundary)
    vals = w @ est.source.masses
    return vals.reshape(t.shape) if t.shape else float(vals[0])


def smle_asymptotics(c, f0, f1, f2, d11, d22, g=1.0, squared_bias_factor=False):
    """Limiting bias and standard deviation of the n^(1/3)-scaled SMLE error.

    Parameters are values at the evaluation point: ``f0 = F0(t, u)``,
    ``f1 = F0(t, 1)``, ``f2 = F0(1, u)``, second partials ``d11``/``d22``
    and observation density ``g``; ``c`` is the limit of ``n^(1/3) h^2``.

    Returns ``(beta, sigma)`` with

        beta    = (c/2) (d11 + d22) * m2,        m2 = int x^2 K(x) dx,
        sigma^2 = [harmonic sum]^(-1) * (int K^2)^2 / (c g),

    where the harmonic sum has the four terms 1/F0, 1/(F1-F0), 1/(F2-F0)
    and 1/(1-F1-F2+F0).  ``squared_bias_factor=True`` switches the bias to
    the m2^2 variant for documentation purposes; the default single-factor
    form is the one consistent with product-kernel expansions.
    """
    if not c > 0:
        raise DegeneratePointError(f"c must be positive, got {c}")
    if not g > 0:
        raise DegeneratePointError(f"g must be positive, got {g}")
    denoms = (f0, f1 - f0, f2 - f0, 1.0 - f1 - f2 + f0)
    if min(denoms) <= 0:
        raise DegeneratePointError(
            f"degenerate point: region probabilities {denoms} must all be positive"
        )
    m2 = TRIWEIGHT_SECOND_MOMENT ** 2 if squared_bias_factor else TRIWEIGHT_SECOND_MOMENT
    beta = 0.5 * c * (d11 + d22) * m2
    harmonic = sum(1.0 / d for d in denoms)
    var = (1.0 / c) * (1.0 / harmonic) * (TRIWEIGHT_SQUARED_INTEGRAL ** 2) / g
    return beta, math.sqrt(var)
