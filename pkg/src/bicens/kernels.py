"""Kernel primitives: triweight, its integral, tail integral, fourth-order variant.

Integrated forms are evaluated from the exact antiderivative polynomials so
tests are bit-stable.  Scaled forms are dimensionless on purpose:
``cdf_h(x) = cdf(x/h)`` and ``tail_h(x) = tail(x/h)``, which keeps the sum of
a direct and a reflected integrated kernel inside [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# exact triweight moments: integral of x^2 K and of K^2 over [-1, 1]
TRIWEIGHT_SECOND_MOMENT = 1.0 / 9.0
TRIWEIGHT_SQUARED_INTEGRAL = 350.0 / 429.0


def triweight(x):
    """(35/32)(1 - x^2)^3 on [-1, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) < 1.0, 35.0 / 32.0 * (1.0 - x * x) ** 3, 0.0)
    return out if out.ndim else float(out)


def integrated_triweight(x):
    """Integral of the triweight from -inf to x (a smooth cdf on [-1, 1])."""
    x = np.asarray(x, dtype=float)
    z = np.clip(x, -1.0, 1.0)
    z2 = z * z
    poly = z * (1.0 + z2 * (-1.0 + z2 * (3.0 / 5.0 - z2 / 7.0))) + 16.0 / 35.0
    out = np.where(x <= -1.0, 0.0, np.where(x >= 1.0, 1.0, 35.0 / 32.0 * poly))
    return out if out.ndim else float(out)


def integrated_triweight_tail(x):
    """Integral of the triweight from x to +inf; equals 1 - integrated_triweight."""
    out = 1.0 - integrated_triweight(x)
    return out


def fourth_order_triweight(u):
    """Fourth-order companion of the triweight: (315/512)(1-u^2)^3(3-11u^2).

    Integrates to 1 with vanishing second moment; takes negative values for
    |u| > sqrt(3/11), so it is not a density.
    """
    u = np.asarray(u, dtype=float)
    u2 = u * u
    out = np.where(np.abs(u) < 1.0,
                   315.0 / 512.0 * (1.0 - u2) ** 3 * (3.0 - 11.0 * u2),
                   0.0)
    return out if out.ndim else float(out)


def integrated_fourth_order_triweight(x):
    """Integral of the fourth-order triweight from -inf to x."""
    x = np.asarray(x, dtype=float)
    z = np.clip(x, -1.0, 1.0)
    z2 = z * z
    # antiderivative of 3 - 20u^2 + 42u^4 - 36u^6 + 11u^8
    poly = z * (3.0 + z2 * (-20.0 / 3.0 + z2 * (42.0 / 5.0 + z2 * (-36.0 / 7.0 + z2 * 11.0 / 9.0))))
    out = np.where(x <= -1.0, 0.0,
                   np.where(x >= 1.0, 1.0, 315.0 / 512.0 * (poly + 256.0 / 315.0)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice (order 2 = triweight, 4 = fourth-order) plus bandwidth."""

    bandwidth: float
    order: int = 2

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def cdf(self, x):
        if self.order == 2:
            return integrated_triweight(x)
        return integrated_fourth_order_triweight(x)

    def tail(self, x):
        return 1.0 - self.cdf(x)

    def cdf_h(self, x):
        """Integrated kernel at bandwidth scale (dimensionless)."""
        return self.cdf(np.asarray(x, dtype=float) / self.bandwidth)

    def tail_h(self, x):
        return self.tail(np.asarray(x, dtype=float) / self.bandwidth)
