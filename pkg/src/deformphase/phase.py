"""Closed momentum curves and the rotation angle they produce about ``L``.

A closed stretch ``Pi(t_a) = Pi(t_b)`` of the body-momentum curve forces
``R(t_b) R(t_a)^T`` to be a rotation about the spatial momentum ``L``.  Its
angle is computed two ways: from the enclosed signed solid angle plus the
dynamic term (:func:`montgomery_phase`), and straight from the reconstructed
rotations (:func:`direct_phase`).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing

from .deformation import DeformationModel
from .errors import (AxisMismatch, DeformPhaseError, DegenerateCurve, NotClosed,
                     NotDiagonalOrdered, NotSimple, RegimeNotApplicable)
from .geom3 import as_vec3, exp_rotation
from .momentum import MomentumTrajectory, energy_along
from .reconstruct import RotationTrajectory, dynamic_phase_between

CLOSURE_TOL = 1e-3
AXIS_TOL = 1e-3
MIN_ARC_NODES = 10
RETRY_DISCREPANCY = 1e-2


def wrap_angle(x: float) -> float:
    """Representative of ``x`` modulo 2 pi in ``(-pi, pi]``."""
    y = math.remainder(float(x), 2.0 * math.pi)
    return math.pi if y == -math.pi else y


def circle_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


# -- closure detection ----------------------------------------------------------


@dataclass(frozen=True)
class ClosedSegment:
    index_a: int
    index_b: int
    closure_residual: float   # |Pi_b - Pi_a| / l
    simple: bool

    def __post_init__(self):
        if not self.index_a < self.index_b:
            raise ValueError("index_a must precede index_b")


def _first_return(tree, U, a, tol, min_arc_nodes):
    """Smallest node after ``a + min_arc_nodes`` back inside the ``tol`` ball
    around ``U[a]`` once the curve has left it.  Returns -1 if the curve
    never returns, -2 if it never leaves."""
    near = np.asarray(tree.query_ball_point(U[a], tol, return_sorted=True))
    after = near[near > a]
    # the contiguous run a+1, a+2, ... is the curve still leaving the ball
    gaps = np.nonzero(after != a + 1 + np.arange(after.size))[0]
    if gaps.size == 0:
        left = a + 1 + after.size
        if left >= U.shape[0]:
            return -2
        return -1
    b_candidates = after[gaps[0]:]
    b_candidates = b_candidates[b_candidates > a + min_arc_nodes]
    return int(b_candidates[0]) if b_candidates.size else -1


def _descend(U, a, b):
    """Move ``b`` forward to the bottom of the dip of ``|U_b - U_a|``."""
    n = U.shape[0]
    best = float(np.linalg.norm(U[b] - U[a]))
    while b + 1 < n:
        d = float(np.linalg.norm(U[b + 1] - U[a]))
        if d >= best:
            break
        b, best = b + 1, d
    return b, best


def detect_closures(traj: MomentumTrajectory, closure_tol: float = CLOSURE_TOL,
                    min_arc_nodes: int = MIN_ARC_NODES,
                    max_segments: int | None = None) -> list[ClosedSegment]:
    """Greedy, non-overlapping closed segments of the momentum curve.

    Scanning start nodes in order, a segment ``[a, b]`` is opened at the
    first node ``b`` that comes back within ``closure_tol * l`` of ``Pi_a``
    after leaving that ball, then moved on to the bottom of that dip in the
    gap.  The next scan starts at ``b``.
    """
    if not closure_tol > 0.0:
        raise DeformPhaseError("closure_tol must be positive")
    U = traj.points / traj.l
    n = U.shape[0]
    tree = cKDTree(U)
    out: list[ClosedSegment] = []
    a = 0
    while a < n - min_arc_nodes - 1:
        b = _first_return(tree, U, a, closure_tol, min_arc_nodes)
        if b == -2:
            break  # all remaining motion stays inside one tolerance ball
        if b < 0:
            a += 1
            continue
        b, gap = _descend(U, a, b)
        # Pi_b stands in for Pi_a, so the polygon closes from b - 1; keeping
        # both would fold a sliver onto the first edge whenever b overshoots
        out.append(ClosedSegment(a, b, gap, is_simple_curve(traj.points[a:b])))
        if max_segments is not None and len(out) >= max_segments:
            break
        a = b
    return out


def brute_force_closure(traj: MomentumTrajectory, a: int, closure_tol: float = CLOSURE_TOL,
                        min_arc_nodes: int = MIN_ARC_NODES) -> int:
    """Node ``b > a`` minimizing ``|Pi_b - Pi_a|`` among all nodes whose gap is
    inside ``closure_tol`` after the curve first leaves the ball; -1 if none."""
    U = traj.points / traj.l
    d = np.linalg.norm(U - U[a], axis=1)
    idx = np.arange(U.shape[0])
    outside = np.nonzero((d > closure_tol) & (idx > a))[0]
    if outside.size == 0:
        return -1
    ok = (idx > max(outside[0], a + min_arc_nodes)) & (d <= closure_tol)
    if not ok.any():
        return -1
    first = int(np.nonzero(ok)[0][0])
    # the local minimum of the gap in the dip that starts at ``first``
    end = first
    while end + 1 < d.size and d[end + 1] <= closure_tol:
        end += 1
    return first + int(np.argmin(d[first:end + 1]))


# -- simple-curve test ----------------------------------------------------------


def _unit_rows(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    norms = np.linalg.norm(P, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateCurve("curve passes through the origin")
    return P / norms[:, None]


def _ring_vertices(points) -> np.ndarray:
    """Unit vertices with repeats and the duplicated closing point removed."""
    U = _unit_rows(points)
    keep = np.ones(U.shape[0], dtype=bool)
    keep[1:] = np.any(U[1:] != U[:-1], axis=1)
    U = U[keep]
    if U.shape[0] > 1 and np.allclose(U[0], U[-1], rtol=0.0, atol=1e-15):
        U = U[:-1]
    return U


def _arcs_cross(p1, p2, Q1, Q2) -> np.ndarray:
    """Whether great-circle arc ``p1 p2`` meets each arc ``Q1[j] Q2[j]``."""
    n1 = np.cross(p1, p2)
    n2 = np.cross(Q1, Q2)
    x = np.cross(n1, n2)
    norm = np.linalg.norm(x, axis=1)
    hit = np.zeros(Q1.shape[0], dtype=bool)
    good = norm > 1e-300
    x = x[good] / norm[good, None]
    q1, q2, m2 = Q1[good], Q2[good], n2[good]
    res = np.zeros(x.shape[0], dtype=bool)
    for s in (1.0, -1.0):
        y = s * x
        on1 = (np.cross(p1, y) @ n1 >= 0.0) & (np.cross(y, p2) @ n1 >= 0.0)
        on2 = ((np.einsum("ij,ij->i", np.cross(q1, y), m2) >= 0.0)
               & (np.einsum("ij,ij->i", np.cross(y, q2), m2) >= 0.0))
        res |= on1 & on2
    hit[good] = res
    return hit


def is_simple_curve_bruteforce(points) -> bool:
    """O(n^2) pairwise great-circle arc intersection test of the closed polygon."""
    U = _ring_vertices(points)
    n = U.shape[0]
    if n < 3:
        return False
    A, B = U, np.roll(U, -1, axis=0)
    for i in range(n - 2):
        # skip the neighbour on each side (and, for edge 0, the closing edge)
        j = np.arange(i + 2, n - 1 if i == 0 else n)
        if j.size and _arcs_cross(A[i], B[i], A[j], B[j]).any():
            return False
    return True


def is_simple_curve(points) -> bool:
    """True iff no two non-adjacent edges of the closed spherical polygon meet.

    Curves lying in an open hemisphere are sent to a plane by the gnomonic
    projection about their centroid, which maps great-circle arcs to line
    segments, and tested there; other curves use the pairwise test.
    """
    U = _ring_vertices(points)
    if U.shape[0] < 3:
        return False
    c = U.mean(axis=0)
    cn = np.linalg.norm(c)
    if cn < 1e-6:
        return is_simple_curve_bruteforce(points)
    c /= cn
    depth = U @ c
    if depth.min() <= 1e-3:
        return is_simple_curve_bruteforce(points)
    e1 = np.cross(c, np.eye(3)[int(np.argmin(np.abs(c)))])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    G = U / depth[:, None]
    return bool(LinearRing(np.column_stack([G @ e1, G @ e2])).is_simple)


# -- solid angle and phases -----------------------------------------------------


def signed_solid_angle(points) -> float:
    """Solid angle enclosed by the closed curve ``points`` (any common radius).

    Fan-triangulated from the normalized centroid; each triangle contributes
    its oriented solid angle, positive when the boundary turns counter-
    clockwise seen from outside the sphere.  The closing edge from the last
    point back to the first is included.
    """
    U = _unit_rows(points)
    if U.shape[0] < 3:
        raise DegenerateCurve("need at least three points")
    c = U.mean(axis=0)
    cn = np.linalg.norm(c)
    if cn < 1e-6:
        raise DegenerateCurve("curve is not contained in an open disc of the sphere")
    c /= cn
    A, B = U, np.roll(U, -1, axis=0)
    num = np.cross(A, B) @ c
    den = 1.0 + A @ c + np.einsum("ij,ij->i", A, B) + B @ c
    return float(2.0 * np.arctan2(num, den).sum())


def _minimal_rotation(u, v) -> np.ndarray:
    """Rotation about ``u x v`` taking unit ``u`` to unit ``v``."""
    axis = np.cross(u, v)
    s = np.linalg.norm(axis)
    if s < 1e-300:
        return np.eye(3)
    return exp_rotation(axis / s * math.atan2(s, float(u @ v)))


def direct_phase(R_a, R_b, L, axis_tol: float = AXIS_TOL) -> tuple[float, float]:
    """Angle of ``R_b R_a^T`` about ``L``.

    When the endpoints of the momentum curve differ slightly, ``R_b R_a^T``
    moves ``L`` a little; it is first composed with the smallest rotation
    putting ``L`` back, which is what following the short great-circle arc
    from ``Pi_b`` to ``Pi_a`` would add.  Returns ``(theta, axis_residual)``
    with ``axis_residual = |R_b R_a^T L - L| / |L|``.
    """
    L = as_vec3(L)
    nL = np.linalg.norm(L)
    if nL == 0.0:
        raise DeformPhaseError("L must be nonzero")
    n = L / nL
    dR = np.asarray(R_b, dtype=float) @ np.asarray(R_a, dtype=float).T
    moved = dR @ n
    residual = float(np.linalg.norm(moved - n))
    if residual > axis_tol:
        raise AxisMismatch(f"R_b R_a^T moves L by {residual:.3e} (> {axis_tol:g})")
    Q = _minimal_rotation(moved, n) @ dR
    u = np.cross(n, np.eye(3)[int(np.argmin(np.abs(n)))])
    u /= np.linalg.norm(u)
    w = Q @ u
    return math.atan2(float(w @ np.cross(n, u)), float(w @ u)), residual


# -- regimes and bounds ----------------------------------------------------------


class Regime(str, Enum):
    AXIS1 = "Axis1Orbit"
    AXIS3 = "Axis3Orbit"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    E_min: float
    E_max: float
    E_homoclinic_min: float
    E_homoclinic_max: float
    E_start: float
    E_end: float
    #: energy starts above every homoclinic level and ends below every one
    transition: bool


def _diagonal_moments(m: DeformationModel, times, strict: bool = True) -> np.ndarray:
    """Ordered diagonal moments at ``times``; NotDiagonalOrdered otherwise.

    ``strict=False`` admits equal moments (a symmetric top).
    """
    s = m.eval_many(times)
    I = s.inertia
    d = np.diagonal(I, axis1=1, axis2=2)
    off = np.abs(I - d[:, :, None] * np.eye(3)).max()
    if off > 1e-12 * np.abs(d).max() or np.abs(s.internal_momentum).max() > 0.0:
        raise NotDiagonalOrdered("model is not diagonal with zero internal momentum")
    bad = (d[:, 0] >= d[:, 1]) | (d[:, 1] >= d[:, 2]) if strict else \
        (d[:, 0] > d[:, 1]) | (d[:, 1] > d[:, 2])
    if np.any(bad):
        raise NotDiagonalOrdered("moments are not ordered I1 < I2 < I3 on the span")
    return d


def regime_classify(m: DeformationModel, traj: MomentumTrajectory,
                    index_a: int = 0, index_b: int | None = None) -> RegimeReport:
    """Compare the energy envelope on nodes ``a..b`` with the homoclinic levels
    ``l^2 / (2 I2(t))``."""
    b = len(traj) - 1 if index_b is None else index_b
    sl = slice(index_a, b + 1)
    d = _diagonal_moments(m, traj.times[sl])
    sub = MomentumTrajectory(traj.times[sl], traj.points[sl], traj.l, traj.h, 0.0,
                             np.zeros(0))
    E = energy_along(sub, m)
    k = traj.l ** 2 / (2.0 * d[:, 1])
    e_min, e_max, k_min, k_max = E.min(), E.max(), k.min(), k.max()
    if e_min > k_max:
        regime = Regime.AXIS1
    elif e_max < k_min:
        regime = Regime.AXIS3
    else:
        regime = Regime.INDETERMINATE
    return RegimeReport(regime, float(e_min), float(e_max), float(k_min), float(k_max),
                        float(E[0]), float(E[-1]), bool(E[0] > k_max and E[-1] < k_min))


@dataclass(frozen=True)
class PhaseBounds:
    low: float
    high: float

    @property
    def informative(self) -> bool:
        return self.high - self.low < 2.0 * math.pi


def phase_bounds(m: DeformationModel, traj: MomentumTrajectory, seg: ClosedSegment,
                 solid_angle: float) -> PhaseBounds:
    """Interval for the unwrapped angle ``-Lambda + theta_D`` from the energy envelope."""
    rep = regime_classify(m, traj, seg.index_a, seg.index_b)
    if rep.regime is Regime.INDETERMINATE:
        raise RegimeNotApplicable("bounds need an Axis1Orbit or Axis3Orbit segment")
    dt = traj.times[seg.index_b] - traj.times[seg.index_a]
    return PhaseBounds(float(-solid_angle + 2.0 * rep.E_min * dt / traj.l),
                       float(-solid_angle + 2.0 * rep.E_max * dt / traj.l))


def return_time_lower_bound(m: DeformationModel, pi_a, t0: float, t1: float,
                            regime: Regime = Regime.AXIS1, n_samples: int = 1001) -> float:
    """Lower bound ``2 pi |Pi_a x e| / (l^2 max_t 1/I_min(t))`` on the return time.

    ``e`` is the axis the orbit surrounds (1 or 3).
    """
    regime = Regime(regime)
    if regime is Regime.INDETERMINATE:
        raise RegimeNotApplicable("no return-time bound for an indeterminate regime")
    pi_a = as_vec3(pi_a)
    d = _diagonal_moments(m, np.linspace(float(t0), float(t1), int(n_samples)), strict=False)
    axis = np.eye(3)[0 if regime is Regime.AXIS1 else 2]
    l2 = float(pi_a @ pi_a)
    return float(2.0 * math.pi * np.linalg.norm(np.cross(pi_a, axis)) * d[:, 0].min() / l2)


# -- the report ------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseReport:
    index_a: int
    index_b: int
    t_a: float
    t_b: float
    closure_residual: float
    theta_dynamic: float
    signed_solid_angle: float
    theta_geometric: float
    theta_M_formula: float          # wrapped to (-pi, pi]
    theta_M_unwrapped: float        # -Lambda + theta_D
    theta_direct: float
    axis_residual: float
    discrepancy: float
    disc: str                       # "centroid" or "complement"
    regime: str | None = None
    bounds_low: float | None = None
    bounds_high: float | None = None
    bounds_informative: bool | None = None
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)


def montgomery_phase(m: DeformationModel, mtraj: MomentumTrajectory, rtraj: RotationTrajectory,
                     seg: ClosedSegment, closure_tol: float = CLOSURE_TOL,
                     axis_tol: float = AXIS_TOL) -> PhaseReport:
    """Angle of the closed segment from ``-Lambda + theta_D``, checked against
    the reconstructed rotations."""
    if not seg.simple:
        raise NotSimple(f"segment [{seg.index_a}, {seg.index_b}] is not a simple curve")
    if seg.closure_residual > closure_tol:
        raise NotClosed(f"closure residual {seg.closure_residual:.3e} > {closure_tol:g}")
    a, b = seg.index_a, seg.index_b
    theta_d = dynamic_phase_between(rtraj, a, b)
    lam = signed_solid_angle(mtraj.points[a:b + 1])
    direct, axis_res = direct_phase(rtraj.rotations[a], rtraj.rotations[b],
                                    rtraj.spatial_momentum, axis_tol)
    disc = "centroid"
    if circle_distance(-lam + theta_d, direct) > RETRY_DISCREPANCY:
        # the other disc bounded by the same curve; differs by 4 pi
        other = lam - math.copysign(4.0 * math.pi, lam)
        if circle_distance(-other + theta_d, direct) < circle_distance(-lam + theta_d, direct):
            lam, disc = other, "complement"
    unwrapped = -lam + theta_d
    extra = {}
    try:
        rep = regime_classify(m, mtraj, a, b)
        extra["regime"] = rep.regime.value
        if rep.regime is not Regime.INDETERMINATE:
            bounds = phase_bounds(m, mtraj, seg, lam)
            extra.update(bounds_low=bounds.low, bounds_high=bounds.high,
                         bounds_informative=bounds.informative)
    except NotDiagonalOrdered:
        pass
    return PhaseReport(a, b, float(mtraj.times[a]), float(mtraj.times[b]),
                       seg.closure_residual, theta_d, lam, -lam, wrap_angle(unwrapped),
                       unwrapped, direct, axis_res,
                       circle_distance(unwrapped, direct), disc, **extra)


def analyze_segments(m: DeformationModel, mtraj: MomentumTrajectory, rtraj: RotationTrajectory,
                     closure_tol: float = CLOSURE_TOL, axis_tol: float = AXIS_TOL,
                     max_segments: int | None = None) -> list[dict]:
    """Phase reports for every detected segment; failures are kept with a status."""
    out = []
    for seg in detect_closures(mtraj, closure_tol, max_segments=max_segments):
        base = {"index_a": seg.index_a, "index_b": seg.index_b,
                "t_a": float(mtraj.times[seg.index_a]), "t_b": float(mtraj.times[seg.index_b]),
                "closure_residual": seg.closure_residual}
        if not seg.simple:
            out.append({**base, "status": "not simple"})
            continue
        try:
            out.append(montgomery_phase(m, mtraj, rtraj, seg, closure_tol, axis_tol).to_dict())
        except AxisMismatch as exc:
            out.append({**base, "status": "axis mismatch", "detail": str(exc)})
        except DegenerateCurve as exc:
            out.append({**base, "status": "degenerate curve", "detail": str(exc)})
    return out
