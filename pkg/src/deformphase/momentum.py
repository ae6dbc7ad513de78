"""Body angular momentum on the sphere ``|Pi| = l``.

    dPi/dt = Pi x I(t)^-1 (Pi - L0(t))

integrated with fixed-step classical RK4 plus rescaling onto the sphere
after each step, together with the energy and arc-length diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import _kernels
from .deformation import DeformationModel, StateBatch
from .errors import DeformPhaseError, StepNotDividing
from .geom3 import apply_inverse, as_vec3


@dataclass(frozen=True)
class MomentumTrajectory:
    times: np.ndarray          # (N+1,)
    points: np.ndarray         # (N+1, 3)
    momentum_norm: float
    h: float
    norm_drift_max: float      # max per-step | |Pi| - l | before projection
    step_drift: np.ndarray     # (N,)
    partial_step: float | None = None

    @property
    def l(self) -> float:
        return self.momentum_norm

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class _Grid:
    times: np.ndarray
    steps: np.ndarray
    partial_step: float | None


def time_grid(t0: float, t1: float, h: float, allow_partial: bool = False) -> _Grid:
    """Uniform nodes ``t0 + k h``; the span must be a whole number of steps.

    With ``allow_partial`` a shorter final step ends exactly at ``t1``.
    """
    t0, t1, h = float(t0), float(t1), float(h)
    if not (h > 0.0) or not (t1 > t0):
        raise DeformPhaseError("need t1 > t0 and h > 0")
    n_float = (t1 - t0) / h
    n = round(n_float)
    if abs(n_float - n) <= 1e-9 and n >= 1:
        times = t0 + h * np.arange(n + 1)
        return _Grid(times, np.full(n, h), None)
    if not allow_partial:
        raise StepNotDividing(f"(t1 - t0)/h = {n_float!r} is not an integer")
    n = math.floor(n_float)
    times = np.append(t0 + h * np.arange(n + 1), t1)
    last = t1 - times[-2]
    return _Grid(times, np.append(np.full(n, h), last), last)


def _stage_data(model: DeformationModel, grid: _Grid):
    nodes = model.eval_many(grid.times)
    mids = model.eval_many(grid.times[:-1] + 0.5 * grid.steps)
    return nodes, mids


def _run(model, pi0, R0, grid: _Grid, with_rotation: bool):
    nodes, mids = _stage_data(model, grid)
    R0 = np.eye(3) if R0 is None else np.ascontiguousarray(R0, dtype=float)
    out = _kernels.integrate_coupled(
        np.ascontiguousarray(grid.steps),
        np.ascontiguousarray(nodes.inertia_inv), np.ascontiguousarray(nodes.internal_momentum),
        np.ascontiguousarray(mids.inertia_inv), np.ascontiguousarray(mids.internal_momentum),
        np.ascontiguousarray(pi0, dtype=float), R0, with_rotation)
    return nodes, out


def momentum_rhs(t: float, pi, m: DeformationModel) -> np.ndarray:
    """``Pi x I^-1 (Pi - L0)`` at time ``t``."""
    pi = as_vec3(pi)
    state = m.eval(t)
    return np.cross(pi, apply_inverse(state.inertia, pi - state.internal_momentum))


def integrate_momentum(m: DeformationModel, pi0, t0: float, t1: float, h: float,
                       allow_partial: bool = False) -> MomentumTrajectory:
    """Fixed-step RK4 for the body momentum, rescaled to ``|pi0|`` after every step."""
    pi0 = as_vec3(pi0)
    l = float(np.linalg.norm(pi0))
    if l == 0.0:
        raise DeformPhaseError("initial momentum must be nonzero")
    grid = time_grid(t0, t1, h, allow_partial)
    _, (points, _, drift, _, _) = _run(m, pi0, None, grid, with_rotation=False)
    return MomentumTrajectory(grid.times, points, l, float(h), float(drift.max()), drift,
                              grid.partial_step)


# -- pointwise diagnostics ---------------------------------------------------


def omega_from_pi(t: float, pi, m: DeformationModel) -> np.ndarray:
    """Body angular velocity ``I^-1 (Pi - L0)``."""
    state = m.eval(t)
    return apply_inverse(state.inertia, as_vec3(pi) - state.internal_momentum)


def energy_at(t: float, pi, m: DeformationModel) -> float:
    """``E_t(Pi) = 1/2 Pi . I(t)^-1 Pi``."""
    pi = as_vec3(pi)
    return 0.5 * float(pi @ apply_inverse(m.eval(t).inertia, pi))


def energy_rate(t: float, pi, m: DeformationModel) -> float:
    """Time derivative of ``E_t(Pi(t))`` along a solution.

    ``(Pi x I^-1 Pi) . I^-1 L0 + 1/2 Pi . d(I^-1)/dt Pi``
    """
    pi = as_vec3(pi)
    state = m.eval(t)
    inv_pi = apply_inverse(state.inertia, pi)
    inv_L0 = apply_inverse(state.inertia, state.internal_momentum)
    return float(np.cross(pi, inv_pi) @ inv_L0 + 0.5 * pi @ state.d_inertia_inv_dt @ pi)


@dataclass(frozen=True)
class KineticDecomposition:
    total_kinetic: float
    rotational: float
    coupling: float
    internal: float


def kinetic_decomposition(t: float, pi, m: DeformationModel,
                          internal_kinetic: float) -> KineticDecomposition:
    """Split the kinetic energy into rotational, coupling and internal parts.

    ``internal_kinetic`` is the kinetic energy of the deformation alone,
    which a model does not know; the caller supplies it.
    """
    state = m.eval(t)
    omega = omega_from_pi(t, pi, m)
    rot = 0.5 * float(omega @ state.inertia @ omega)
    coupling = float(state.internal_momentum @ omega)
    return KineticDecomposition(rot + coupling + internal_kinetic, rot, coupling, internal_kinetic)


# -- vectorized along a trajectory --------------------------------------------


def node_states(traj: MomentumTrajectory, m: DeformationModel) -> StateBatch:
    return m.eval_many(traj.times)


def omega_along(traj: MomentumTrajectory, m: DeformationModel,
                states: StateBatch | None = None) -> np.ndarray:
    s = states if states is not None else node_states(traj, m)
    return np.einsum("nij,nj->ni", s.inertia_inv, traj.points - s.internal_momentum)


def energy_along(traj: MomentumTrajectory, m: DeformationModel,
                 states: StateBatch | None = None) -> np.ndarray:
    s = states if states is not None else node_states(traj, m)
    return 0.5 * np.einsum("ni,nij,nj->n", traj.points, s.inertia_inv, traj.points)


def azimuth_about_axis1(points) -> np.ndarray:
    """Unwrapped ``atan2(Pi3, Pi2)``: the longitude about the 1 axis."""
    P = np.asarray(points)
    return np.unwrap(np.arctan2(P[:, 2], P[:, 1]))


def azimuth_rate(t: float, pi, m: DeformationModel) -> float:
    """d/dt of the longitude about axis 1 for a diagonal model with ``L0 = 0``.

    ``Pi1 [(1/I2 - 1/I1) + (1/I3 - 1/I2) sin^2 phi]``; the solution turns
    clockwise about axis 1 whenever ``I1 < I2 < I3`` and ``Pi1 > 0``.
    """
    pi = as_vec3(pi)
    inv = np.diag(m.eval(t).inertia_inv)
    phi = math.atan2(pi[2], pi[1])
    return float(pi[0] * ((inv[1] - inv[0]) + (inv[2] - inv[1]) * math.sin(phi) ** 2))


def arc_length(traj: MomentumTrajectory) -> float:
    """Chordal length of the sampled curve."""
    return float(np.linalg.norm(np.diff(traj.points, axis=0), axis=1).sum())


def arc_length_bound(m: DeformationModel, t0: float, t1: float, l: float,
                     n_samples: int = 1001) -> float:
    """Upper bound ``l * int (l + |L0|) / lambda_min(I) dt`` on the curve length."""
    if n_samples < 2:
        raise DeformPhaseError("n_samples must be >= 2")
    ts = np.linspace(float(t0), float(t1), int(n_samples))
    s = m.eval_many(ts)
    a = np.linalg.eigvalsh(s.inertia)[:, 0]
    y = l * (l + np.linalg.norm(s.internal_momentum, axis=1)) / a
    return float(simpson(y, x=ts))
