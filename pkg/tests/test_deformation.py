"""Deformation models and particle ingestion."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deformphase import deformation as dm
from deformphase.errors import (Collinear, DeformPhaseError, NonPositiveMoment, NonPositiveScale,
                                NotCenterOfMassFrame, NotPositiveDefinite, UnsortedSamples)

from conftest import random_rotation


def static_system(positions, masses=None):
    r = np.asarray(positions, dtype=float)
    m = np.ones(len(r)) if masses is None else masses
    return dm.ParticleSystem(m, lambda t: r, lambda t: np.zeros_like(r))


def random_cloud(rng, n=7):
    m = rng.uniform(0.5, 2.0, n)
    r = rng.normal(size=(n, 3))
    r -= (m @ r) / m.sum()
    return m, r


class TestParticles:
    def test_square_of_unit_masses(self):
        p = static_system([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)])
        np.testing.assert_allclose(dm.inertia_from_particles(p, 0.0), np.diag([2.0, 2, 4]))

    def test_collinear_pair(self):
        with pytest.raises(Collinear):
            dm.inertia_from_particles(static_system([(1, 0, 0), (-1, 0, 0)]), 0.0)

    def test_bilinear_form(self, rng):
        m, r = random_cloud(rng)
        I = dm.inertia_from_particles(static_system(r, m), 0.0)
        for _ in range(5):
            v, w = rng.normal(size=3), rng.normal(size=3)
            expected = sum(mi * np.cross(v, ri) @ np.cross(w, ri) for mi, ri in zip(m, r))
            assert v @ I @ w == pytest.approx(expected, abs=1e-12 * max(1.0, abs(expected)))

    def test_relabel_invariant(self, rng):
        m, r = random_cloud(rng)
        perm = rng.permutation(len(m))
        a = dm.inertia_from_particles(static_system(r, m), 0.0)
        b = dm.inertia_from_particles(static_system(r[perm], m[perm]), 0.0)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rotation_equivariant(self, rng):
        m, r = random_cloud(rng)
        Q = random_rotation(rng)
        a = dm.inertia_from_particles(static_system(r, m), 0.0)
        b = dm.inertia_from_particles(static_system(r @ Q.T, m), 0.0)
        np.testing.assert_allclose(b, Q @ a @ Q.T, atol=1e-12)

    def test_not_center_of_mass(self):
        with pytest.raises(NotCenterOfMassFrame):
            dm.inertia_from_particles(static_system([(1, 0, 0), (0, 1, 0), (0, 0, 1)]), 0.0)

    def test_static_particles_no_internal_momentum(self, rng):
        m, r = random_cloud(rng)
        np.testing.assert_array_equal(
            dm.internal_momentum_from_particles(static_system(r, m), 0.0), np.zeros(3))

    def test_spinning_pair(self):
        pos = lambda t: np.array([[math.cos(t), math.sin(t), 0], [-math.cos(t), -math.sin(t), 0]])
        vel = lambda t: np.array([[-math.sin(t), math.cos(t), 0], [math.sin(t), -math.cos(t), 0]])
        p = dm.ParticleSystem([1.0, 1.0], pos, vel)
        np.testing.assert_allclose(dm.internal_momentum_from_particles(p, 0.7), [0, 0, 2],
                                   atol=1e-15)

    def test_radial_motion(self, rng):
        m, r = random_cloud(rng)
        p = dm.ParticleSystem(m, lambda t: r, lambda t: 0.3 * r)
        np.testing.assert_allclose(dm.internal_momentum_from_particles(p, 0.0), 0.0,
                                   atol=1e-14)

    def test_pure_scaling_cloud_matches_vibrational(self, rng):
        m, r0 = random_cloud(rng)
        a = lambda t: math.exp(0.3 * t)
        p = dm.ParticleSystem(m, lambda t: a(t) * r0, lambda t: 0.3 * a(t) * r0)
        I0 = dm.inertia_from_particles(p, 0.0)
        vib = dm.make_vibrational(I0, {"kind": "exp", "scale": 1.0, "rate": 0.3})
        for t in (0.4, 1.3):
            np.testing.assert_allclose(dm.inertia_from_particles(p, t), vib.eval(t).inertia,
                                       rtol=1e-12)
            np.testing.assert_allclose(dm.internal_momentum_from_particles(p, t), 0.0,
                                       atol=1e-12)

    def test_csv_round_trip(self, rng, tmp_path):
        m, r0 = random_cloud(rng, 4)
        times = np.linspace(0, 1, 6)
        omega = np.array([0.1, 0.2, 0.3])
        from deformphase.geom3 import exp_rotation, hat
        pos = lambda t: r0 @ exp_rotation(omega * t).T * (1 + 0.1 * t)
        vel = lambda t: (r0 @ exp_rotation(omega * t).T) @ (0.1 * np.eye(3)
                                                            + (1 + 0.1 * t) * hat(omega).T)
        p = dm.ParticleSystem(m, pos, vel)
        dm.write_particle_csv(tmp_path / "p.csv", tmp_path / "m.csv", p, times)
        q = dm.read_particle_csv(tmp_path / "p.csv", tmp_path / "m.csv")
        model = dm.make_particle_model(q)
        for t in times:
            np.testing.assert_allclose(model.eval(t).inertia, dm.inertia_from_particles(p, t),
                                       rtol=1e-12)
            np.testing.assert_allclose(model.eval(t).internal_momentum,
                                       dm.internal_momentum_from_particles(p, t), atol=1e-12)


class TestBuiltinModels:
    def test_rigid(self):
        s = dm.make_rigid(np.diag([1.0, 2, 3])).eval(0.0)
        np.testing.assert_array_equal(s.internal_momentum, 0.0)
        np.testing.assert_array_equal(s.d_inertia_inv_dt, 0.0)
        np.testing.assert_allclose(s.inertia_inv, np.diag([1, 0.5, 1 / 3]))

    def test_rigid_time_independent(self):
        m = dm.make_rigid(np.diag([1.0, 2, 3]))
        a, b = m.eval(0.0), m.eval(17.3)
        for f in ("inertia", "inertia_inv", "d_inertia_inv_dt", "internal_momentum"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))

    def test_eval_deterministic(self):
        m = dm.make_vibrational(np.diag([1.0, 2, 3]), {"kind": "sin", "mean": 1, "amplitude": 0.1,
                                                        "omega": 2})
        np.testing.assert_array_equal(m.eval(0.37).inertia, m.eval(0.37).inertia)

    def test_vibrational_unit_scale_is_rigid(self):
        I0 = np.diag([1.0, 2, 3])
        a, b = dm.make_vibrational(I0, 1.0).eval(2.0), dm.make_rigid(I0).eval(2.0)
        np.testing.assert_array_equal(a.inertia, b.inertia)
        np.testing.assert_array_equal(a.d_inertia_inv_dt, b.d_inertia_inv_dt)

    def test_vibrational_exponential(self):
        m = dm.make_vibrational(np.eye(3), {"kind": "exp", "scale": 1.0, "rate": 0.5})
        np.testing.assert_allclose(m.eval(1.0).inertia, math.e * np.eye(3))

    @given(st.floats(0.2, 5.0))
    def test_vibrational_constant_scale(self, c):
        I0 = np.diag([1.0, 1.5, 2.0])
        a, b = dm.make_vibrational(I0, c).eval(0.3), dm.make_rigid(c * c * I0).eval(0.3)
        np.testing.assert_allclose(a.inertia, b.inertia, rtol=1e-15)
        np.testing.assert_allclose(a.inertia_inv, b.inertia_inv, rtol=1e-14)
        np.testing.assert_array_equal(a.d_inertia_inv_dt, b.d_inertia_inv_dt)

    def test_vibrational_rejects_nonpositive_scale(self):
        m = dm.make_vibrational(np.eye(3), {"kind": "linear", "offset": 1.0, "rate": -1.0})
        with pytest.raises(NonPositiveScale):
            m.eval(2.0)
        with pytest.raises(NonPositiveScale):
            dm.make_vibrational(np.eye(3), {"kind": "linear", "offset": 1.0, "rate": -1.0},
                                0.0, 2.0)

    def test_symmetric_top(self):
        s = dm.make_diagonal_timevarying(1, 2, 2).eval(5.0)
        np.testing.assert_array_equal(s.inertia, np.diag([1.0, 2, 2]))

    def test_antenna_values(self):
        m = dm.make_diagonal_timevarying(1, 2, {"kind": "linear", "offset": 3, "rate": 0.5})
        s = m.eval(2.0)
        np.testing.assert_array_equal(s.inertia, np.diag([1.0, 2, 4]))
        assert s.d_inertia_inv_dt[2, 2] == pytest.approx(-0.5 / 16)

    def test_nonpositive_moment(self):
        with pytest.raises(NonPositiveMoment):
            dm.make_diagonal_timevarying(1, 2, {"kind": "linear", "offset": 1, "rate": -1},
                                         0.0, 3.0)

    def test_scalar_function_rejects_unknown(self):
        with pytest.raises(DeformPhaseError):
            dm.scalar_function({"kind": "linear", "offset": 1, "slope": 2})
        with pytest.raises(DeformPhaseError):
            dm.scalar_function({"kind": "cubic"})


def builtin_models():
    return {
        "rigid": dm.make_rigid(np.diag([1.0, 2, 3])),
        "vibrational": dm.make_vibrational(np.diag([1.0, 2, 3]), {"kind": "exp", "scale": 1.2,
                                                                  "rate": 0.2}),
        "diagonal": dm.make_diagonal_timevarying({"kind": "sin", "mean": 1, "amplitude": 0.2,
                                                  "omega": 1.3}, 2, {"kind": "linear",
                                                                     "offset": 3, "rate": 0.5}),
        "axisym": dm.make_axisymmetric_stretch({"kind": "linear", "offset": 1, "rate": 0.1}, 2),
        "function": dm.FunctionModel(
            lambda t: np.einsum("n,ij->nij", 1 + 0.1 * np.sin(t), np.diag([1.0, 2, 3]))
            + np.einsum("n,ij->nij", 0.1 * t, np.ones((3, 3)) - np.eye(3)) * 0.1,
            lambda t: np.stack([np.cos(t), np.sin(t), 0.1 * t], axis=-1)),
        "tabulated": dm.make_tabulated(dm.sample_model(
            dm.make_vibrational(np.diag([1.0, 2, 3]), {"kind": "exp", "scale": 1, "rate": 0.1}),
            np.linspace(0, 3, 31))),
    }


@pytest.mark.parametrize("name", list(builtin_models()))
class TestModelContract:
    times = np.array([0.35, 1.1, 2.45])

    def test_inverse(self, name):
        b = builtin_models()[name].eval_many(self.times)
        np.testing.assert_allclose(b.inertia_inv @ b.inertia, np.broadcast_to(np.eye(3), (3, 3, 3)),
                                   atol=1e-10)

    def test_inverse_rate_matches_finite_difference(self, name):
        m = builtin_models()[name]
        d = 1e-5
        for t in self.times:
            fd = (m.eval(t + d).inertia_inv - m.eval(t - d).inertia_inv) / (2 * d)
            got = m.eval(t).d_inertia_inv_dt
            scale = max(np.abs(got).max(), np.abs(m.eval(t).inertia_inv).max())
            assert np.abs(fd - got).max() <= 1e-6 * scale

    def test_eval_matches_batch(self, name):
        m = builtin_models()[name]
        batch = m.eval_many(self.times)
        for k, t in enumerate(self.times):
            np.testing.assert_array_equal(m.eval(t).inertia, batch.inertia[k])


class TestTabulated:
    def test_constant_samples(self):
        rec = {"inertia": np.diag([1.0, 2, 3]), "internal_momentum": [0.1, 0, 0]}
        m = dm.make_tabulated([{"t": 0.0, **rec}, {"t": 1.0, **rec}])
        s = m.eval(0.4)
        np.testing.assert_allclose(s.inertia, np.diag([1.0, 2, 3]))
        np.testing.assert_allclose(s.d_inertia_inv_dt, 0.0, atol=1e-15)

    def test_mid_grid_accuracy(self):
        exact = dm.make_vibrational(np.eye(3), {"kind": "exp", "scale": 1, "rate": 0.1})
        grid = np.arange(0, 2.0 + 1e-12, 0.01)
        m = dm.make_tabulated(dm.sample_model(exact, grid))
        mid = grid[:-1] + 0.005
        np.testing.assert_allclose(m.eval_many(mid).inertia, exact.eval_many(mid).inertia,
                                   atol=1e-6)

    def test_exact_at_samples(self):
        exact = dm.make_diagonal_timevarying(1, 2, {"kind": "sin", "mean": 3, "amplitude": 0.3,
                                                    "omega": 2})
        grid = np.linspace(0, 1, 9)
        m = dm.make_tabulated(dm.sample_model(exact, grid))
        np.testing.assert_array_equal(m.eval_many(grid).inertia, exact.eval_many(grid).inertia)

    def test_clamped_with_warning(self):
        rec = lambda t, c: {"t": t, "inertia": c * np.eye(3)}
        m = dm.make_tabulated([rec(0.0, 1.0), rec(1.0, 2.0)])
        with pytest.warns(RuntimeWarning):
            s = m.eval(5.0)
        np.testing.assert_array_equal(s.inertia, 2.0 * np.eye(3))

    def test_unsorted(self):
        rec = lambda t: {"t": t, "inertia": np.eye(3)}
        with pytest.raises(UnsortedSamples):
            dm.make_tabulated([rec(1.0), rec(0.0)])

    def test_sample_not_spd(self):
        with pytest.raises(NotPositiveDefinite):
            dm.make_tabulated([{"t": 0.0, "inertia": np.eye(3)},
                               {"t": 1.0, "inertia": np.diag([1.0, -1, 1])}])

    def test_prescan_catches_interpolated_loss(self):
        # entries overshoot between samples: steep middle makes the cubic dip below zero
        small = np.diag([1.0, 1.0, 1e-3])
        recs = [{"t": 0.0, "inertia": np.eye(3)}, {"t": 1.0, "inertia": small},
                {"t": 1.01, "inertia": small}, {"t": 1.02, "inertia": 3 * np.eye(3)}]
        with pytest.raises(NotPositiveDefinite):
            dm.make_tabulated(recs)

    def test_csv_round_trip(self, tmp_path):
        exact = dm.make_diagonal_timevarying(1, 2, {"kind": "linear", "offset": 3, "rate": 0.05})
        grid = np.linspace(0, 2, 11)
        dm.write_tabulated_csv(tmp_path / "m.csv", dm.sample_model(exact, grid))
        m = dm.read_tabulated_csv(tmp_path / "m.csv")
        np.testing.assert_allclose(m.eval_many(grid).inertia, exact.eval_many(grid).inertia,
                                   rtol=1e-15, atol=1e-15)

    def test_csv_bad_header(self, tmp_path):
        (tmp_path / "m.csv").write_text("t,a,b\n0,1,2\n")
        with pytest.raises(DeformPhaseError):
            dm.read_tabulated_csv(tmp_path / "m.csv")
