"""Time-dependent data of a self-deforming body.

A :class:`DeformationModel` turns a prescribed deformation into the four
quantities the rotational dynamics needs at time ``t``: the inertia tensor,
its inverse, the time derivative of the inverse, and the internal angular
momentum ``L0(t)`` measured in the deforming frame.

Models evaluate in batches (:meth:`DeformationModel.eval_many`) so the
integrators can pre-compute all stage times in one vectorized call.
"""

from __future__ import annotations

import csv
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    Collinear,
    DeformPhaseError,
    NonPositiveMoment,
    NonPositiveScale,
    NotCenterOfMassFrame,
    NotPositiveDefinite,
    UnsortedSamples,
)
from .geom3 import inertia_tensor

TABULATED_HEADER = ["t", "I11", "I12", "I13", "I22", "I23", "I33", "L01", "L02", "L03"]
PARTICLE_HEADER = ["t", "particle_id", "x", "y", "z", "vx", "vy", "vz"]
MASSES_HEADER = ["particle_id", "mass"]

# upper-triangle entries in TABULATED_HEADER order
_SYM_INDEX = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


# ---------------------------------------------------------------------------
# scalar functions of time
# ---------------------------------------------------------------------------


class ScalarFunction(ABC):
    """Smooth scalar function of time with an exact derivative."""

    kind: str = ""

    @abstractmethod
    def __call__(self, t): ...

    @abstractmethod
    def derivative(self, t): ...

    @abstractmethod
    def to_spec(self) -> dict: ...

    def is_constant(self) -> bool:
        return False


@dataclass(frozen=True)
class Constant(ScalarFunction):
    value: float
    kind = "constant"

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value))

    def derivative(self, t):
        return np.zeros(np.shape(t))

    def to_spec(self):
        return {"kind": "constant", "value": self.value}

    def is_constant(self):
        return True


@dataclass(frozen=True)
class Linear(ScalarFunction):
    """``offset + rate * t``."""

    offset: float
    rate: float
    kind = "linear"

    def __call__(self, t):
        return self.offset + self.rate * np.asarray(t, dtype=float)

    def derivative(self, t):
        return np.full(np.shape(t), float(self.rate))

    def to_spec(self):
        return {"kind": "linear", "offset": self.offset, "rate": self.rate}

    def is_constant(self):
        return self.rate == 0.0


@dataclass(frozen=True)
class Exponential(ScalarFunction):
    """``scale * exp(rate * t)``."""

    scale: float
    rate: float
    kind = "exp"

    def __call__(self, t):
        return self.scale * np.exp(self.rate * np.asarray(t, dtype=float))

    def derivative(self, t):
        return self.rate * self(t)

    def to_spec(self):
        return {"kind": "exp", "scale": self.scale, "rate": self.rate}

    def is_constant(self):
        return self.rate == 0.0


@dataclass(frozen=True)
class Sinusoid(ScalarFunction):
    """``mean + amplitude * sin(omega * t + phase)``."""

    mean: float
    amplitude: float
    omega: float
    phase: float = 0.0
    kind = "sin"

    def __call__(self, t):
        return self.mean + self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)

    def derivative(self, t):
        return self.amplitude * self.omega * np.cos(self.omega * np.asarray(t, dtype=float) + self.phase)

    def to_spec(self):
        return {"kind": "sin", "mean": self.mean, "amplitude": self.amplitude,
                "omega": self.omega, "phase": self.phase}

    def is_constant(self):
        return self.amplitude == 0.0 or self.omega == 0.0


class CallableFunction(ScalarFunction):
    """Wraps a user callable; the derivative defaults to a 4th-order central difference."""

    kind = "callable"

    def __init__(self, f: Callable, df: Callable | None = None, step: float = 1e-4):
        self._f = f
        self._df = df
        self._step = step

    def _call(self, g, t):
        t = np.asarray(t, dtype=float)
        try:
            out = np.asarray(g(t), dtype=float)
            return np.broadcast_to(out, t.shape).copy()
        except (TypeError, ValueError):
            return np.vectorize(lambda s: float(g(s)))(t)

    def __call__(self, t):
        return self._call(self._f, t)

    def derivative(self, t):
        if self._df is not None:
            return self._call(self._df, t)
        t = np.asarray(t, dtype=float)
        d = self._step * np.maximum(1.0, np.abs(t))
        f = self.__call__
        return (8.0 * (f(t + d) - f(t - d)) - (f(t + 2 * d) - f(t - 2 * d))) / (12.0 * d)

    def to_spec(self):
        raise DeformPhaseError("callable scalar functions cannot be serialized")


_FUNCTION_KINDS = {
    "constant": (Constant, ("value",)),
    "linear": (Linear, ("offset", "rate")),
    "exp": (Exponential, ("scale", "rate")),
    "sin": (Sinusoid, ("mean", "amplitude", "omega", "phase")),
}


def scalar_function(spec) -> ScalarFunction:
    """Build a :class:`ScalarFunction` from a number, a callable, or a spec dict.

    >>> scalar_function({"kind": "linear", "offset": 3.0, "rate": 0.5})(2.0)
    array(4.)
    """
    if isinstance(spec, ScalarFunction):
        return spec
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if callable(spec):
        return CallableFunction(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind not in _FUNCTION_KINDS:
            raise DeformPhaseError(f"unknown function kind {kind!r}")
        cls, fields = _FUNCTION_KINDS[kind]
        unknown = set(spec) - set(fields) - {"kind"}
        if unknown:
            raise DeformPhaseError(f"unknown keys for {kind!r} function: {sorted(unknown)}")
        try:
            return cls(**{k: float(spec[k]) for k in fields if k in spec})
        except TypeError as exc:
            raise DeformPhaseError(f"bad parameters for {kind!r} function: {exc}") from exc
    raise DeformPhaseError(f"cannot interpret {spec!r} as a scalar function")


# ---------------------------------------------------------------------------
# model contract
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformationState:
    t: float
    inertia: np.ndarray
    inertia_inv: np.ndarray
    d_inertia_inv_dt: np.ndarray
    internal_momentum: np.ndarray


class StateBatch(NamedTuple):
    """Model data at ``n`` times; arrays are (n,), (n,3,3) x3 and (n,3)."""

    t: np.ndarray
    inertia: np.ndarray
    inertia_inv: np.ndarray
    d_inertia_inv_dt: np.ndarray
    internal_momentum: np.ndarray

    def state(self, k: int) -> DeformationState:
        return DeformationState(float(self.t[k]), self.inertia[k], self.inertia_inv[k],
                                self.d_inertia_inv_dt[k], self.internal_momentum[k])


class DeformationModel(ABC):
    """Evaluation contract for the time-dependent body data.

    Subclasses implement :meth:`eval_many`; ``eval`` is derived from it so a
    single evaluation and a batched one agree bit for bit.
    """

    t_start: float = -math.inf
    t_end: float = math.inf
    smoothness: str = "C1"
    #: True when the inertia tensor is diagonal for all t.
    diagonal: bool = False
    #: True when L0 vanishes identically.
    zero_internal_momentum: bool = False

    @abstractmethod
    def eval_many(self, times) -> StateBatch: ...

    def eval(self, t: float) -> DeformationState:
        return self.eval_many(np.array([float(t)])).state(0)

    def moments(self, times) -> np.ndarray:
        """Principal moments (ascending) at ``times``, shape (n, 3)."""
        return np.linalg.eigvalsh(self.eval_many(times).inertia)

    def to_spec(self) -> dict:
        raise DeformPhaseError(f"{type(self).__name__} has no serializable spec")


def _diag_batch(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape[:-1] + (3, 3))
    idx = np.arange(3)
    out[..., idx, idx] = values
    return out


class ScaledModel(DeformationModel):
    """``I(t) = a(t)^2 I0`` with ``L0 = 0``; rigid when ``a`` is constant."""

    zero_internal_momentum = True

    def __init__(self, inertia0, scale: ScalarFunction, t_start=-math.inf, t_end=math.inf):
        self.inertia0 = inertia_tensor(inertia0)
        self.inertia0_inv = np.linalg.inv(self.inertia0)
        self.inertia0_inv = 0.5 * (self.inertia0_inv + self.inertia0_inv.T)
        self.scale = scale
        self.t_start, self.t_end = float(t_start), float(t_end)
        off = self.inertia0 - np.diag(np.diag(self.inertia0))
        self.diagonal = bool(np.all(off == 0.0))
        if math.isfinite(self.t_start) and math.isfinite(self.t_end):
            self._check_scale(np.linspace(self.t_start, self.t_end, 1001))

    def _check_scale(self, times):
        a = self.scale(times)
        if np.any(~(a > 0.0)):
            bad = np.asarray(times)[~(a > 0.0)][0]
            raise NonPositiveScale(f"scale factor a(t) <= 0 at t = {bad}")
        return a

    def eval_many(self, times) -> StateBatch:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        a = self._check_scale(t)
        a_dot = self.scale.derivative(t)
        inertia = (a * a)[:, None, None] * self.inertia0
        inv = (1.0 / (a * a))[:, None, None] * self.inertia0_inv
        d_inv = (-2.0 * a_dot / a**3)[:, None, None] * self.inertia0_inv
        return StateBatch(t, inertia, inv, d_inv, np.zeros((t.size, 3)))

    def to_spec(self):
        if self.scale.is_constant():
            c = float(self.scale(0.0))
            return {"kind": "rigid", "inertia": (c * c * self.inertia0).tolist()}
        return {"kind": "vibrational", "inertia": self.inertia0.tolist(),
                "scale": self.scale.to_spec()}


class DiagonalModel(DeformationModel):
    """``I(t) = diag(I1(t), I2(t), I3(t))`` with ``L0 = 0``."""

    diagonal = True
    zero_internal_momentum = True

    def __init__(self, moments: Sequence[ScalarFunction], t_start=-math.inf, t_end=math.inf,
                 kind: str = "diagonal"):
        if len(moments) != 3:
            raise ValueError("need three principal moment functions")
        self.moment_functions = tuple(moments)
        self.t_start, self.t_end = float(t_start), float(t_end)
        self.kind = kind
        if math.isfinite(self.t_start) and math.isfinite(self.t_end):
            self._moment_values(np.linspace(self.t_start, self.t_end, 1001))

    def _moment_values(self, t):
        vals = np.stack([f(t) for f in self.moment_functions], axis=-1)
        if np.any(~(vals > 0.0)):
            k = np.argwhere(~(vals > 0.0))[0]
            raise NonPositiveMoment(f"moment I{k[1] + 1}(t) <= 0 at t = {t[k[0]]}")
        return vals

    def eval_many(self, times) -> StateBatch:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        vals = self._moment_values(t)
        rates = np.stack([f.derivative(t) for f in self.moment_functions], axis=-1)
        return StateBatch(t, _diag_batch(vals), _diag_batch(1.0 / vals),
                          _diag_batch(-rates / (vals * vals)), np.zeros((t.size, 3)))

    def to_spec(self):
        return {"kind": "diagonal", "moments": [f.to_spec() for f in self.moment_functions]}


class FunctionModel(DeformationModel):
    """General model from callables ``inertia(t)`` and ``internal_momentum(t)``.

    Callables receive a 1-D array of times and return (n,3,3) / (n,3) arrays;
    constants are accepted too.  Without ``inertia_rate`` the derivative of
    the inertia tensor is taken by a 4th-order central difference.
    """

    def __init__(self, inertia, internal_momentum=(0.0, 0.0, 0.0), inertia_rate=None,
                 t_start=-math.inf, t_end=math.inf, step: float = 1e-4):
        self._inertia = inertia
        self._momentum = internal_momentum
        self._rate = inertia_rate
        self._step = step
        self.t_start, self.t_end = float(t_start), float(t_end)
        if not callable(inertia):
            inertia_tensor(inertia)
        if not callable(internal_momentum):
            self.zero_internal_momentum = bool(np.all(np.asarray(internal_momentum) == 0.0))

    @staticmethod
    def _broadcast(value, t, shape):
        if callable(value):
            out = np.asarray(value(t), dtype=float)
        else:
            out = np.asarray(value, dtype=float)
        return np.broadcast_to(out, (t.size,) + shape).copy()

    def _inertia_at(self, t):
        inertia = self._broadcast(self._inertia, t, (3, 3))
        return 0.5 * (inertia + np.swapaxes(inertia, -1, -2))

    def eval_many(self, times) -> StateBatch:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        inertia = self._inertia_at(t)
        try:
            np.linalg.cholesky(inertia)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("inertia lost positive definiteness") from exc
        inv = np.linalg.inv(inertia)
        inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
        if not callable(self._inertia):
            rate = np.zeros_like(inertia)
        elif self._rate is not None:
            rate = self._broadcast(self._rate, t, (3, 3))
        else:
            d = self._step * np.maximum(1.0, np.abs(t))[:, None, None]
            dd = d[:, 0, 0]
            rate = (8.0 * (self._inertia_at(t + dd) - self._inertia_at(t - dd))
                    - (self._inertia_at(t + 2 * dd) - self._inertia_at(t - 2 * dd))) / (12.0 * d)
        d_inv = -inv @ rate @ inv
        d_inv = 0.5 * (d_inv + np.swapaxes(d_inv, -1, -2))
        L0 = self._broadcast(self._momentum, t, (3,))
        return StateBatch(t, inertia, inv, d_inv, L0)

    def to_spec(self):
        if callable(self._inertia) or callable(self._momentum):
            return super().to_spec()
        return {"kind": "constant", "inertia": np.asarray(self._inertia, float).tolist(),
                "internal_momentum": np.asarray(self._momentum, float).tolist()}


def make_rigid(inertia0) -> ScaledModel:
    """Constant inertia, zero internal momentum."""
    return ScaledModel(inertia0, Constant(1.0))


def make_vibrational(inertia0, a, t_start=-math.inf, t_end=math.inf) -> ScaledModel:
    """Global expansion/contraction ``I(t) = a(t)^2 I0``."""
    return ScaledModel(inertia0, scalar_function(a), t_start, t_end)


def make_diagonal_timevarying(I1, I2, I3, t_start=-math.inf, t_end=math.inf) -> DiagonalModel:
    return DiagonalModel([scalar_function(I1), scalar_function(I2), scalar_function(I3)],
                         t_start, t_end)


def make_axisymmetric_stretch(I1, I23, t_start=-math.inf, t_end=math.inf) -> DiagonalModel:
    """Axially symmetric body stretching along its symmetry axis 1."""
    f = scalar_function(I23)
    return DiagonalModel([scalar_function(I1), f, f], t_start, t_end, kind="axisym")


def make_constant(inertia, internal_momentum) -> FunctionModel:
    """Constant inertia with a constant internal momentum (e.g. a spinning rotor)."""
    return FunctionModel(inertia_tensor(inertia), np.asarray(internal_momentum, dtype=float))


# ---------------------------------------------------------------------------
# tabulated data
# ---------------------------------------------------------------------------


def _record_fields(rec):
    if isinstance(rec, dict):
        t = rec["t"]
        inertia = rec["inertia"]
        L0 = rec.get("internal_momentum", rec.get("L0", (0.0, 0.0, 0.0)))
    else:
        t, inertia = rec.t, rec.inertia
        L0 = getattr(rec, "internal_momentum", (0.0, 0.0, 0.0))
    return float(t), np.asarray(inertia, dtype=float).reshape(3, 3), np.asarray(L0, float).reshape(3)


class TabulatedModel(DeformationModel):
    """Piecewise cubic Hermite interpolation of sampled inertia and ``L0``.

    Slopes come from finite differences of the samples (central in the
    interior).  Evaluation outside the sample range is clamped to the
    endpoint state and emits a ``RuntimeWarning``.
    """

    smoothness = "C1"

    def __init__(self, samples: Iterable, prescan_points: int = 16):
        recs = [_record_fields(r) for r in samples]
        if len(recs) < 2:
            raise DeformPhaseError("a tabulated model needs at least two samples")
        t = np.array([r[0] for r in recs])
        if np.any(np.diff(t) <= 0.0):
            raise UnsortedSamples("sample times must be strictly increasing")
        for ti, inertia, _ in recs:
            try:
                np.linalg.cholesky(0.5 * (inertia + inertia.T))
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(f"sample inertia at t = {ti} is not SPD") from exc
        y = np.array([[I[i, j] for i, j in _SYM_INDEX] + list(L0) for _, I, L0 in recs])
        dydt = np.gradient(y, t, axis=0, edge_order=2 if len(t) > 2 else 1)
        self.sample_times = t
        self.sample_values = y
        self._spline = CubicHermiteSpline(t, y, dydt, axis=0)
        self._dspline = self._spline.derivative()
        self.t_start, self.t_end = float(t[0]), float(t[-1])
        self.zero_internal_momentum = bool(np.all(y[:, 6:] == 0.0))
        self.diagonal = bool(np.all(y[:, [1, 2, 4]] == 0.0))
        # dense scan: interpolated entries can lose SPD between samples
        frac = np.linspace(0.0, 1.0, prescan_points + 1)[1:-1]
        dense = (t[:-1, None] + np.diff(t)[:, None] * frac[None, :]).ravel()
        if dense.size:
            lam = np.linalg.eigvalsh(self._unpack(self._spline(dense)))[:, 0]
            if np.any(lam <= 0.0):
                bad = dense[np.argmax(lam <= 0.0)]
                raise NotPositiveDefinite(f"interpolated inertia is not SPD near t = {bad}")

    @staticmethod
    def _unpack(entries) -> np.ndarray:
        n = entries.shape[0]
        out = np.empty((n, 3, 3))
        for k, (i, j) in enumerate(_SYM_INDEX):
            out[:, i, j] = entries[:, k]
            out[:, j, i] = entries[:, k]
        return out

    def eval_many(self, times) -> StateBatch:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        tc = np.clip(t, self.t_start, self.t_end)
        if np.any(tc != t):
            warnings.warn(f"tabulated model evaluated outside [{self.t_start}, {self.t_end}]; "
                          "clamped to endpoint state", RuntimeWarning, stacklevel=2)
        y = self._spline(tc)
        dy = self._dspline(tc)
        inertia = self._unpack(y[:, :6])
        rate = self._unpack(dy[:, :6])
        inv = np.linalg.inv(inertia)
        inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
        d_inv = -inv @ rate @ inv
        d_inv = 0.5 * (d_inv + np.swapaxes(d_inv, -1, -2))
        return StateBatch(t, inertia, inv, d_inv, np.array(y[:, 6:]))


def make_tabulated(samples: Iterable) -> TabulatedModel:
    return TabulatedModel(samples)


def sample_model(model: DeformationModel, times) -> list[dict]:
    """Records ``{t, inertia, internal_momentum}`` of ``model`` at ``times``."""
    batch = model.eval_many(times)
    return [{"t": float(batch.t[k]), "inertia": batch.inertia[k],
             "internal_momentum": batch.internal_momentum[k]} for k in range(batch.t.size)]


def write_tabulated_csv(path, records: Iterable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABULATED_HEADER)
        for rec in records:
            t, inertia, L0 = _record_fields(rec)
            w.writerow([repr(t)] + [repr(float(inertia[i, j])) for i, j in _SYM_INDEX]
                       + [repr(float(x)) for x in L0])


def read_tabulated_samples(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != TABULATED_HEADER:
            raise DeformPhaseError(f"{path}: expected header {','.join(TABULATED_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise DeformPhaseError(f"{path}:{lineno}: {exc}") from exc
            if len(vals) != len(TABULATED_HEADER):
                raise DeformPhaseError(f"{path}:{lineno}: expected {len(TABULATED_HEADER)} columns")
            inertia = np.empty((3, 3))
            for k, (i, j) in enumerate(_SYM_INDEX):
                inertia[i, j] = inertia[j, i] = vals[1 + k]
            out.append({"t": vals[0], "inertia": inertia, "internal_momentum": np.array(vals[7:])})
    return out


def read_tabulated_csv(path) -> TabulatedModel:
    return TabulatedModel(read_tabulated_samples(path))


# ---------------------------------------------------------------------------
# particle systems
# ---------------------------------------------------------------------------


class ParticleSystem:
    """Point masses with prescribed positions/velocities in the deforming CM frame.

    ``positions(t)`` and ``velocities(t)`` return (n, 3) arrays.
    """

    def __init__(self, masses, positions: Callable, velocities: Callable, times=None):
        self.masses = np.asarray(masses, dtype=float).reshape(-1)
        if self.masses.size == 0 or np.any(~(self.masses > 0.0)):
            raise DeformPhaseError("particle masses must be positive")
        self._positions = positions
        self._velocities = velocities
        #: sample times, when built from data
        self.times = None if times is None else np.asarray(times, dtype=float)

    @classmethod
    def from_samples(cls, masses, times, positions, velocities) -> "ParticleSystem":
        """Hermite-interpolated trajectories through sampled positions and velocities."""
        times = np.asarray(times, dtype=float)
        if np.any(np.diff(times) <= 0.0):
            raise UnsortedSamples("sample times must be strictly increasing")
        pos = np.asarray(positions, dtype=float)
        vel = np.asarray(velocities, dtype=float)
        if len(times) == 1:
            return cls(masses, lambda t: pos[0], lambda t: vel[0], times)
        spline = CubicHermiteSpline(times, pos, vel, axis=0)

        def at(values, t):
            k = np.searchsorted(times, t)
            if k < len(times) and times[k] == t:
                return values[k]
            return None

        def positions_fn(t):
            exact = at(pos, t)
            return exact if exact is not None else spline(t)

        def velocities_fn(t):
            exact = at(vel, t)
            return exact if exact is not None else spline(t, 1)

        return cls(masses, positions_fn, velocities_fn, times)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def positions(self, t) -> np.ndarray:
        r = np.asarray(self._positions(t), dtype=float).reshape(-1, 3)
        if r.shape[0] != self.masses.size:
            raise DeformPhaseError("positions/masses size mismatch")
        return r

    def velocities(self, t) -> np.ndarray:
        return np.asarray(self._velocities(t), dtype=float).reshape(-1, 3)

    def checked_positions(self, t) -> np.ndarray:
        r = self.positions(t)
        m = self.masses
        rms = math.sqrt(float(m @ np.einsum("ij,ij->i", r, r)) / self.total_mass)
        com = (m @ r) / self.total_mass
        if np.linalg.norm(com) > 1e-9 * rms:
            raise NotCenterOfMassFrame(f"positions at t = {t} are not in the center-of-mass frame "
                                       f"(|r_cm| = {np.linalg.norm(com):.3e})")
        return r


def inertia_from_particles(p: ParticleSystem, t: float) -> np.ndarray:
    """``sum_i m_i (|r_i|^2 Id - r_i r_i^T)``."""
    r = p.checked_positions(t)
    m = p.masses
    r2 = np.einsum("ij,ij->i", r, r)
    inertia = np.eye(3) * float(m @ r2) - np.einsum("i,ij,ik->jk", m, r, r)
    inertia = 0.5 * (inertia + inertia.T)
    lam = np.linalg.eigvalsh(inertia)
    if lam[0] < 1e-12 * max(np.trace(inertia), 1e-300):
        raise Collinear(f"particles are collinear at t = {t}")
    return inertia


def internal_momentum_from_particles(p: ParticleSystem, t: float) -> np.ndarray:
    """``sum_i m_i r_i x v_i``."""
    r = p.checked_positions(t)
    v = p.velocities(t)
    return p.masses @ np.cross(r, v)


def make_particle_model(p: ParticleSystem, times=None) -> TabulatedModel:
    """Tabulated model from a particle system sampled at ``times``."""
    if times is None:
        times = p.times
    if times is None:
        raise DeformPhaseError("sample times required for a particle system built from callables")
    return TabulatedModel([{"t": float(t), "inertia": inertia_from_particles(p, float(t)),
                            "internal_momentum": internal_momentum_from_particles(p, float(t))}
                           for t in times])


def read_particle_csv(path, masses_path) -> ParticleSystem:
    with open(masses_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != MASSES_HEADER:
            raise DeformPhaseError(f"{masses_path}: expected header {','.join(MASSES_HEADER)}")
        masses = {row[0].strip(): float(row[1]) for row in reader if row}
    ids = sorted(masses)
    rows: dict[float, dict[str, list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != PARTICLE_HEADER:
            raise DeformPhaseError(f"{path}: expected header {','.join(PARTICLE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t = float(row[0])
                pid = row[1].strip()
                vals = [float(x) for x in row[2:8]]
            except (ValueError, IndexError) as exc:
                raise DeformPhaseError(f"{path}:{lineno}: {exc}") from exc
            if pid not in masses:
                raise DeformPhaseError(f"{path}:{lineno}: particle {pid!r} has no mass")
            rows.setdefault(t, {})[pid] = vals
    times = sorted(rows)
    for t in times:
        missing = set(ids) - set(rows[t])
        if missing:
            raise DeformPhaseError(f"{path}: particles {sorted(missing)} missing at t = {t}")
    data = np.array([[rows[t][pid] for pid in ids] for t in times])
    return ParticleSystem.from_samples([masses[pid] for pid in ids], times,
                                       data[:, :, :3], data[:, :, 3:])


def write_particle_csv(path, masses_path, system: ParticleSystem, times, ids=None) -> None:
    ids = ids or [str(k) for k in range(system.masses.size)]
    with open(masses_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(MASSES_HEADER)
        for pid, m in zip(ids, system.masses):
            w.writerow([pid, repr(float(m))])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(PARTICLE_HEADER)
        for t in times:
            r, v = system.positions(t), system.velocities(t)
            for k, pid in enumerate(ids):
                w.writerow([repr(float(t)), pid] + [repr(float(x)) for x in (*r[k], *v[k])])

