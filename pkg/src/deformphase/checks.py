"""Acceptance checks, runnable from ``deformphase verify`` and from the tests.

Every check integrates its own scenarios and returns a :class:`CheckResult`
whose ``details`` carry the measured numbers next to the limits.
"""

from __future__ import annotations

import filecmp
import math
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import fixtures
from .analytic import axisym_stretch_exact, rigid_phase_formula, vibrational_exact
from .config import parse_config
from .deformation import make_rigid
from .momentum import (arc_length, arc_length_bound, azimuth_about_axis1, energy_along,
                       energy_at, integrate_momentum)
from .phase import (circle_distance, detect_closures, montgomery_phase, regime_classify,
                    return_time_lower_bound, Regime)
from .reconstruct import integrate_reconstruction, second_order_residual


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name} ({self.seconds:.2f} s)"


def _run_fixture(fx: fixtures.Fixture, t1: float | None = None, h: float | None = None):
    model = fx.model
    mt, rt = integrate_reconstruction(model, fx.pi0, None, fx.t0,
                                      fx.t1 if t1 is None else t1, fx.h if h is None else h)
    return model, mt, rt


def _first_simple_report(model, mt, rt):
    for seg in detect_closures(mt):
        if seg.simple:
            return seg, montgomery_phase(model, mt, rt, seg)
    return None, None


def warm_up() -> None:
    """Compile (or load from cache) the integration kernel outside any timing."""
    _run_fixture(fixtures.get("triaxial"), t1=0.01)


# -- 1 -------------------------------------------------------------------------------


def check_montgomery_vs_direct() -> CheckResult:
    warm_up()
    start = time.perf_counter()
    details, ok = {}, True
    for name in fixtures.PHASE_FIXTURES:
        model, mt, rt = _run_fixture(fixtures.get(name))
        seg, rep = _first_simple_report(model, mt, rt)
        if rep is None:
            details[name] = "no simple closed segment"
            ok = False
            continue
        details[name] = {"t_a": rep.t_a, "t_b": rep.t_b, "discrepancy": rep.discrepancy,
                         "theta_M": rep.theta_M_formula, "theta_direct": rep.theta_direct}
        ok &= rep.discrepancy < 1e-4
    elapsed = time.perf_counter() - start
    details["runtime_s"] = elapsed
    return CheckResult("montgomery_vs_direct", bool(ok and elapsed < 5.0), details)


# -- 2 -------------------------------------------------------------------------------


def check_symmetric_top() -> CheckResult:
    fx = fixtures.get("s1")
    model, mt, rt = _run_fixture(fx)
    seg, rep = _first_simple_report(model, mt, rt)
    if rep is None:
        return CheckResult("symmetric_top", False, {"error": "no closed segment"})
    period = rep.t_b - rep.t_a
    d = {"period": period, "solid_angle": rep.signed_solid_angle,
         "theta_dynamic": rep.theta_dynamic, "theta_M": rep.theta_M_formula,
         "theta_direct": rep.theta_direct}
    ok = (abs(period - 8.0 * math.pi) <= 2.0 * fx.h
          and abs(abs(rep.signed_solid_angle) - math.pi) <= 1e-4
          and abs(rep.theta_dynamic - 5.0 * math.pi) <= 1e-5
          and circle_distance(rep.theta_M_formula, 0.0) <= 1e-5
          and circle_distance(rep.theta_direct, 0.0) <= 1e-5)
    return CheckResult("symmetric_top", bool(ok), d)


# -- 3 -------------------------------------------------------------------------------


def check_conservation() -> CheckResult:
    details, ok = {}, True
    for name, fx in fixtures.FIXTURES.items():
        model, mt, rt = _run_fixture(fx, t1=100.0, h=1e-3)
        l = mt.l
        row = {"spatial": rt.spatial_residual_max / l,
               "norm_drift": mt.norm_drift_max / l,
               "orthogonality": rt.orthogonality_max,
               "second_order": second_order_residual(mt, rt, model)}
        details[name] = row
        ok &= (row["spatial"] <= 1e-7 and row["norm_drift"] < 1e-12
               and row["orthogonality"] < 1e-10 and row["second_order"] < 1e-5)
    return CheckResult("conservation", bool(ok), details)


# -- 4 -------------------------------------------------------------------------------


def _closed_form_cases():
    vib, ax = fixtures.get("vibrational"), fixtures.get("axisym")
    vib_exact = vibrational_exact(vib.model.inertia0, fixtures.VIB_SCALE, vib.pi0)
    ax_exact = axisym_stretch_exact(fixtures.AXISYM_I1, 2.0, ax.pi0)
    return [(vib, vib_exact), (ax, ax_exact)]


def _sup_error(fx, exact, h):
    mt = integrate_momentum(fx.model, fx.pi0, fx.t0, fx.t1, h)
    return float(np.abs(mt.points - exact(mt.times)).max())


def check_closed_form() -> CheckResult:
    details, ok = {}, True
    for fx, exact in _closed_form_cases():
        err = _sup_error(fx, exact, 1e-3)
        # the ratio is taken where truncation error dominates rounding
        ratio = _sup_error(fx, exact, 0.05) / _sup_error(fx, exact, 0.025)
        details[fx.name] = {"sup_error_h1e-3": err, "ratio_h0.05_h0.025": ratio}
        ok &= err < 1e-6 and 12.0 <= ratio <= 20.0
    return CheckResult("closed_form", bool(ok), details)


# -- 5 -------------------------------------------------------------------------------


def check_rigid_reduction() -> CheckResult:
    fx = fixtures.get("triaxial")
    model = fx.model
    long = integrate_momentum(model, fx.pi0, 0.0, 100.0, 1e-3)
    E = energy_along(long, model)
    drift = float(np.abs(E - E[0]).max())
    _, mt, rt = _run_fixture(fx)
    seg, rep = _first_simple_report(model, mt, rt)
    if rep is None:
        return CheckResult("rigid_reduction", False, {"energy_drift": drift,
                                                      "error": "no closed segment"})
    formula = rigid_phase_formula(energy_at(0.0, fx.pi0, model), rep.t_b - rep.t_a, mt.l,
                                  rep.signed_solid_angle)
    d = {"energy_drift": drift, "theta_M": rep.theta_M_formula,
         "rigid_formula": formula, "theta_direct": rep.theta_direct,
         "difference": circle_distance(rep.theta_M_formula, formula)}
    ok = drift < 1e-8 and d["difference"] <= 1e-5
    return CheckResult("rigid_reduction", bool(ok), d)


# -- 6 -------------------------------------------------------------------------------


def check_monotonicity_and_bounds() -> CheckResult:
    d, ok = {}, True
    tri = fixtures.get("triaxial")
    mt = integrate_momentum(tri.model, tri.pi0, tri.t0, tri.t1, tri.h)
    steps = np.diff(azimuth_about_axis1(mt.points))
    d["azimuth_max_increase"] = float(steps.max())
    d["pi1_min"] = float(mt.points[:, 0].min())
    ok &= bool(steps.max() <= 1e-9 and mt.points[:, 0].min() > 0.0)

    ant = fixtures.get("antenna")
    model, mt, rt = _run_fixture(ant)
    seg, rep = _first_simple_report(model, mt, rt)
    if rep is None or rep.bounds_low is None:
        d["antenna"] = "no bounded segment"
        ok = False
    else:
        d["antenna"] = {"low": rep.bounds_low, "theta_M": rep.theta_M_unwrapped,
                        "high": rep.bounds_high, "width": rep.bounds_high - rep.bounds_low}
        ok &= bool(rep.bounds_low <= rep.theta_M_unwrapped <= rep.bounds_high
                   and rep.bounds_high - rep.bounds_low < 2.0 * math.pi)

    arcs = {}
    for name, fx in fixtures.FIXTURES.items():
        m = fx.model
        traj = integrate_momentum(m, fx.pi0, fx.t0, fx.t1, fx.h)
        length, bound = arc_length(traj), arc_length_bound(m, fx.t0, fx.t1, traj.l)
        arcs[name] = {"length": length, "bound": bound}
        ok &= length <= bound + 1e-6
    d["arc_length"] = arcs

    s1 = fixtures.get("s1")
    model, mt, rt = _run_fixture(s1)
    seg, rep = _first_simple_report(model, mt, rt)
    bound = return_time_lower_bound(model, s1.pi0, s1.t0, s1.t1, Regime.AXIS1)
    period = rep.t_b - rep.t_a if rep is not None else math.nan
    d["return_time"] = {"bound": bound, "period": period}
    ok &= bool(bound <= period)
    return CheckResult("monotonicity_and_bounds", bool(ok), d)


# -- 7 -------------------------------------------------------------------------------


def check_regime_transition() -> CheckResult:
    fx = fixtures.get("antenna_fast")
    model = fx.model
    mt = integrate_momentum(model, fx.pi0, fx.t0, fx.t1, fx.h)
    start = regime_classify(model, mt, 0, 10)
    rep = regime_classify(model, mt)
    d = {"start_regime": start.regime.value, "E_start": rep.E_start, "E_end": rep.E_end,
         "E_homoclinic_min": rep.E_homoclinic_min, "E_homoclinic_max": rep.E_homoclinic_max,
         "regime": rep.regime.value, "transition": rep.transition}
    ok = start.regime is Regime.AXIS1 and rep.transition
    return CheckResult("regime_transition", bool(ok), d)


# -- 8 -------------------------------------------------------------------------------


def check_slow_deformation() -> CheckResult:
    fx = fixtures.get("antenna_slow")
    model, mt, rt = _run_fixture(fx)
    seg, rep = _first_simple_report(model, mt, rt)
    if rep is None:
        return CheckResult("slow_deformation", False, {"error": "no closed segment"})
    frozen = make_rigid(model.eval(rep.t_a).inertia)
    pi_a = mt.points[rep.index_a]
    span = 2.0 * (rep.t_b - rep.t_a)
    fm, fr = integrate_reconstruction(frozen, pi_a, None, 0.0, round(span / fx.h) * fx.h, fx.h)
    _, rigid = _first_simple_report(frozen, fm, fr)
    if rigid is None:
        return CheckResult("slow_deformation", False, {"error": "frozen body did not close"})
    diff = circle_distance(rep.theta_M_formula, rigid.theta_M_formula)
    d = {"theta_M": rep.theta_M_formula, "rigid_theta_M": rigid.theta_M_formula,
         "difference": diff}
    return CheckResult("slow_deformation", bool(diff < 0.05), d)


# -- 9 -------------------------------------------------------------------------------


def check_determinism() -> CheckResult:
    from .pipeline import run

    cfg = parse_config(fixtures.get("antenna").config(outputs={"model_csv": True}))
    names = ("trajectory.csv", "report.json", "model.csv")
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        run(cfg, a, with_phase=True)
        run(cfg, b, with_phase=True)
        same = {n: filecmp.cmp(a / n, b / n, shallow=False) for n in names}
    return CheckResult("determinism", all(same.values()), same)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "montgomery_vs_direct": check_montgomery_vs_direct,
    "symmetric_top": check_symmetric_top,
    "conservation": check_conservation,
    "closed_form": check_closed_form,
    "rigid_reduction": check_rigid_reduction,
    "monotonicity_and_bounds": check_monotonicity_and_bounds,
    "regime_transition": check_regime_transition,
    "slow_deformation": check_slow_deformation,
    "determinism": check_determinism,
}

SUITES = {"default": tuple(CHECKS), "quick": ("symmetric_top", "rigid_reduction",
                                              "regime_transition", "determinism")}


def run_check(name: str) -> CheckResult:
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            res = CHECKS[name]()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            res = CheckResult(name, False, {"error": f"{type(exc).__name__}: {exc}"})
    res.seconds = time.perf_counter() - start
    return res


def resolve_suite(suite: str) -> tuple[str, ...]:
    if suite in SUITES:
        return SUITES[suite]
    if suite in CHECKS:
        return (suite,)
    raise KeyError(f"unknown suite {suite!r}; known: {sorted(SUITES) + sorted(CHECKS)}")
