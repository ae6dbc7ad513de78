"""Named reference scenarios shared by the acceptance checks, tests and CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import deformation as dm

#: step that puts the free symmetric top's period 8 pi exactly on a node
S1_STEP = 8.0 * math.pi / 25133


@dataclass(frozen=True)
class Fixture:
    name: str
    build: Callable[[], dm.DeformationModel]
    pi0: tuple
    t1: float
    h: float = 1e-3
    t0: float = 0.0
    note: str = ""

    @property
    def model(self) -> dm.DeformationModel:
        return self.build()

    def config(self, **overrides) -> dict:
        """Scenario JSON document for the CLI."""
        cfg = {"name": self.name, "model": self.build().to_spec(), "pi0": list(self.pi0),
               "t0": self.t0, "t1": self.t1, "h": self.h}
        cfg.update(overrides)
        return cfg


def _lin(offset, rate):
    return {"kind": "linear", "offset": offset, "rate": rate}


VIB_SCALE = {"kind": "exp", "scale": 1.0, "rate": 0.2}
AXISYM_I1 = _lin(1.0, 0.1)

FIXTURES: dict[str, Fixture] = {f.name: f for f in [
    Fixture("triaxial", lambda: dm.make_rigid(np.diag([1.0, 2.0, 3.0])), (0.6, 0.0, 0.8), 23.0,
            note="rigid, orbit about axis 1, period about 22.42"),
    Fixture("s1", lambda: dm.make_rigid(np.diag([1.0, 2.0, 2.0])),
            (0.5, math.sqrt(3.0) / 2.0, 0.0), 26000 * S1_STEP, S1_STEP,
            note="free symmetric top, period 8 pi"),
    Fixture("vibrational",
            lambda: dm.make_vibrational(np.diag([0.16, 0.08, 0.08]), VIB_SCALE),
            (0.48, 0.12, 0.0), 4.7,
            note="a = exp(0.2 t); int a^-2 reaches the rigid period 2 pi/3 at t = 4.547"),
    Fixture("axisym", lambda: dm.make_axisymmetric_stretch(AXISYM_I1, 2.0),
            (3.5, 0.6, 0.0), 7.0, note="I1 = 1 + 0.1 t, I2 = I3 = 2; closes near t = 6.88"),
    Fixture("antenna", lambda: dm.make_diagonal_timevarying(1.0, 2.0, _lin(3.0, 0.05)),
            (0.0, 0.6, 0.8), 25.0, note="I3 = 3 + 0.05 t, orbit about axis 3"),
    Fixture("antenna_fast", lambda: dm.make_diagonal_timevarying(1.0, 2.0, _lin(3.0, 2.0)),
            (0.6, 0.0, 0.8), 20.0, note="I3 = 3 + 2 t; energy drops through the homoclinic level"),
    Fixture("antenna_slow", lambda: dm.make_diagonal_timevarying(1.0, 2.0, _lin(3.0, 5e-5)),
            (0.0, 0.6, 0.8), 25.0, note="antenna with the growth rate scaled by 1e-3"),
    Fixture("corotating",
            lambda: dm.make_constant(np.diag([1.0, 2.0, 3.0]), (0.3, 0.4, 0.5)),
            (0.3, 0.4, 0.5), 10.0, note="Pi = L0: the body does not turn"),
]}

#: fixtures on which the formula is compared with direct reconstruction
PHASE_FIXTURES = ("triaxial", "s1", "vibrational", "axisym", "antenna")


def get(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(FIXTURES)}") from None
