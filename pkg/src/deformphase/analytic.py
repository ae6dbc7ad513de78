"""Reference solutions used as test oracles.

The free symmetric top is solved in closed form.  Uniform scaling and a
stretch along the symmetry axis only reparameterize time along that
solution, so they reduce to it once the new time is integrated.  Tri-axial
base flows are produced by fine-step integration instead of elliptic
functions and are flagged ``semi_analytic``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .deformation import make_rigid, scalar_function
from .errors import DegenerateRate, DeformPhaseError
from .geom3 import as_vec3, inertia_tensor
from .momentum import integrate_momentum
from .phase import wrap_angle

TAU_TOL = 1e-12


@dataclass(frozen=True)
class AnalyticSolution:
    """``Pi(t) = base(tau(t))`` on ``[t_start, t_end]``."""

    base: Callable[[np.ndarray], np.ndarray]
    tau: Callable[[float], float]
    t_start: float = -math.inf
    t_end: float = math.inf
    params: dict = field(default_factory=dict)
    semi_analytic: bool = False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        taus = np.vectorize(self.tau, otypes=[float])(t)
        return self.base(taus)


def _symmetric_top_base(I1: float, I2: float, pi0):
    p = as_vec3(pi0)
    rate = p[0] * (1.0 / I2 - 1.0 / I1)

    def base(tau):
        tau = np.asarray(tau, dtype=float)
        c, s = np.cos(rate * tau), np.sin(rate * tau)
        out = np.stack([np.full(tau.shape, p[0]), c * p[1] - s * p[2], s * p[1] + c * p[2]],
                       axis=-1)
        return out

    return base, rate


def symmetric_top_solution(I1: float, I2: float, pi0) -> AnalyticSolution:
    """Free top with ``I = diag(I1, I2, I2)``.

    ``Pi1`` is constant and ``(Pi2, Pi3)`` turns rigidly at the rate
    ``Pi1 (1/I2 - 1/I1)``.
    """
    if not (I1 > 0.0 and I2 > 0.0):
        raise DeformPhaseError("moments must be positive")
    base, rate = _symmetric_top_base(float(I1), float(I2), pi0)
    period = 2.0 * math.pi / abs(rate) if rate != 0.0 else math.inf
    return AnalyticSolution(base, lambda t: t,
                            params={"I1": I1, "I2": I2, "rate": rate, "period": period})


def semi_analytic_rigid(inertia0, pi0, t_end: float, h: float = 1e-5) -> AnalyticSolution:
    """Rigid flow from a fine RK4 run, interpolated with exact-slope Hermite cubics."""
    I0 = inertia_tensor(inertia0)
    m = make_rigid(I0)
    n = max(1, math.ceil(t_end / h))
    traj = integrate_momentum(m, pi0, 0.0, n * h, h)
    P = traj.points
    slopes = np.cross(P, np.linalg.solve(I0, P.T).T)
    spline = CubicHermiteSpline(traj.times, P, slopes, axis=0)
    return AnalyticSolution(lambda tau: spline(np.asarray(tau, dtype=float)), lambda t: t,
                            0.0, float(traj.times[-1]), params={"h": h}, semi_analytic=True)


def _rigid_base(I0: np.ndarray, pi0, tau_max: float, h: float):
    d = np.diag(I0)
    if np.allclose(I0, np.diag(d), rtol=0.0, atol=1e-14 * d.max()) and d[1] == d[2]:
        return symmetric_top_solution(d[0], d[1], pi0).base, False
    return semi_analytic_rigid(I0, pi0, tau_max, h).base, True


def _tau_function(integrand: Callable[[float], float], t0: float):
    def tau(t):
        value, _ = quad(integrand, t0, t, epsabs=TAU_TOL, epsrel=TAU_TOL, limit=200)
        return value
    return tau


def vibrational_exact(inertia0, a, pi0, t0: float = 0.0, t_end: float | None = None,
                      h_base: float = 1e-5) -> AnalyticSolution:
    """``I(t) = a(t)^2 I0`` runs the rigid flow of ``I0`` in the time
    ``tau(t) = int_t0^t a(s)^-2 ds``.

    A tri-axial ``I0`` needs ``t_end`` to size the fine reference run.
    """
    I0 = inertia_tensor(inertia0)
    f = scalar_function(a)
    tau = _tau_function(lambda s: float(f(s)) ** -2, t0)
    tau_max = tau(t_end) if t_end is not None else math.inf
    d = np.diag(I0)
    symmetric = np.allclose(I0, np.diag(d), rtol=0.0, atol=1e-14 * d.max()) and d[1] == d[2]
    if not symmetric and not math.isfinite(tau_max):
        raise DeformPhaseError("a tri-axial base flow needs t_end")
    base, semi = _rigid_base(I0, pi0, tau_max, h_base)
    return AnalyticSolution(base, tau, t0, math.inf if t_end is None else t_end,
                            params={"kind": "vibrational"}, semi_analytic=semi)


def axisym_stretch_exact(I1, I23: float, pi0, t0: float = 0.0) -> AnalyticSolution:
    """``I(t) = diag(I1(t), I23, I23)``: the symmetric top of ``I(t0)`` in the time
    ``tau(t) = int (1/I1(s) - 1/I23) / (1/I1(t0) - 1/I23) ds``."""
    f = scalar_function(I1)
    I1_0 = float(f(t0))
    denom = 1.0 / I1_0 - 1.0 / I23
    if denom == 0.0:
        raise DegenerateRate("the body is spherical at the start time")
    tau = _tau_function(lambda s: (1.0 / float(f(s)) - 1.0 / I23) / denom, t0)
    base, rate = _symmetric_top_base(I1_0, float(I23), pi0)
    return AnalyticSolution(base, tau, t0, params={"kind": "axisym", "rate0": rate})


def rigid_phase_formula(E: float, T: float, l: float, solid_angle: float) -> float:
    """Classical rigid-body rotation angle ``wrap(-Lambda + 2 E T / l)``."""
    if not l > 0.0:
        raise DeformPhaseError("l must be positive")
    return wrap_angle(-solid_angle + 2.0 * E * T / l)
