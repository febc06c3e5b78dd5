"""Rotationally symmetric bowl solitons.

The radial graph u(r) of a translator moving with speed c in R^{d+1} solves

    u'' / (1 + u'^2) + (d - 1) u' / r = c,     u(0) = u'(0) = 0.

The r = 0 singularity is removable; integration starts from the regular
series u = A r^2 + B r^4 with A = c/(2d), B = 2A^3/(d+2) and continues with
classical fixed-step RK4.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import IntegrationAccuracyError

SERIES_CELLS = 10


@dataclass(frozen=True)
class BowlProfile:
    dimension: int
    speed: float
    r_samples: np.ndarray
    u_samples: np.ndarray
    step: float
    slope_samples: np.ndarray = field(default=None, repr=False)

    def __call__(self, r):
        """Height at radius r (cubic Hermite through samples and slopes)."""
        spline = CubicHermiteSpline(self.r_samples, self.u_samples, self.slope_samples)
        return spline(np.abs(np.asarray(r, dtype=float)))

    def curvature_at_axis(self):
        """u''(0) by the 4th-order centred difference, ghosts u(-r) = u(r)."""
        u, h = self.u_samples, self.step
        return (-2 * u[2] + 32 * u[1] - 30 * u[0]) / (12 * h**2)

    def residual(self):
        """Centred-difference residual of the radial ODE at interior nodes."""
        r, u, h = self.r_samples, self.u_samples, self.step
        up = (u[2:] - u[:-2]) / (2 * h)
        upp = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        return upp / (1 + up**2) + (self.dimension - 1) * up / r[1:-1] - self.speed

    def to_csv(self, path):
        header = f"bowl dimension={self.dimension} speed={self.speed!r} step={self.step!r}"
        np.savetxt(path, np.column_stack([self.r_samples, self.u_samples]), fmt="%.17g",
                   delimiter=",", header=header, comments="# ")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=") for item in header[1:])
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        # slopes are not persisted; rebuild from the ODE-consistent differences
        r, u = data[:, 0], data[:, 1]
        slope = np.gradient(u, r, edge_order=2)
        return cls(int(meta["dimension"]), float(meta["speed"]), r, u, float(meta["step"]), slope)


def _rhs(r, u, p, dimension, speed):
    return p, (1 + p * p) * (speed - (dimension - 1) * p / r)


def series_coefficients(dimension, speed):
    A = speed / (2 * dimension)
    return A, 2 * A**3 / (dimension + 2)


def integrate_bowl(dimension, speed, r_max, step):
    """Integrate the radial bowl ODE on [0, r_max] with a fixed step.

    Raises ValueError on bad arguments and IntegrationAccuracyError when the
    centred-difference residual of the result exceeds 10 * step**2 (relative
    to the speed).
    """
    if dimension not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {dimension}")
    if not speed > 0 or not r_max > 0:
        raise ValueError("speed and r_max must be positive")
    if not 0 < step <= r_max / 100:
        raise ValueError(f"step must lie in (0, r_max/100], got {step}")

    n = int(round(r_max / step))
    r = step * np.arange(n + 1)
    u = np.empty(n + 1)
    p = np.empty(n + 1)
    A, B = series_coefficients(dimension, speed)
    m = min(SERIES_CELLS, n)
    rs = r[: m + 1]
    u[: m + 1] = A * rs**2 + B * rs**4
    p[: m + 1] = 2 * A * rs + 4 * B * rs**3

    uu, pp = u[m], p[m]
    h = step
    for i in range(m, n):
        ri = r[i]
        k1u, k1p = _rhs(ri, uu, pp, dimension, speed)
        k2u, k2p = _rhs(ri + h / 2, uu + h / 2 * k1u, pp + h / 2 * k1p, dimension, speed)
        k3u, k3p = _rhs(ri + h / 2, uu + h / 2 * k2u, pp + h / 2 * k2p, dimension, speed)
        k4u, k4p = _rhs(ri + h, uu + h * k3u, pp + h * k3p, dimension, speed)
        uu += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        pp += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        u[i + 1] = uu
        p[i + 1] = pp

    prof = BowlProfile(dimension, float(speed), r, u, float(step), p)
    worst = np.max(np.abs(prof.residual())) / speed if n > 2 else 0.0
    if worst > 10 * step**2:
        raise IntegrationAccuracyError(
            f"relative ODE residual {worst:.3e} exceeds 10*step^2={10 * step**2:.3e}")
    return prof


def reference_Z0(speed=2**-0.5, rho_max=4.0, step=None):
    """Tip-region target: Z0(rho) = -u(rho) for the 2d bowl of the given speed."""
    if step is None:
        step = min(1e-3, rho_max / 100)
    bowl = integrate_bowl(2, speed, rho_max, step)
    return BowlProfile(2, bowl.speed, bowl.r_samples, -bowl.u_samples, bowl.step,
                       -bowl.slope_samples)
