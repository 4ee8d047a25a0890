import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwm.errors import DomainError, InterpolationError
from hwm.exact import (
    PERIODIC_ORBIT_OMEGA,
    PERIODIC_ORBIT_PERIOD,
    BlaschkeSpec,
    MobiusMap,
    blaschke_product,
    blaschke_profile,
    circle_wave,
    mobius_reparam,
    periodic_orbit_field,
    periodic_orbit_velocity,
    profile_residual,
    profile_velocity,
    soliton_energy_expected,
    stereographic_pullback,
    winding_number,
)
from hwm.grid import hwm_rhs_values, make_grid, norm_defect
from hwm.invariants import energy

upper_half = st.complex_numbers(min_magnitude=0.1, max_magnitude=5.0, allow_nan=False, allow_infinity=False).filter(
    lambda z: z.imag > 0.05
)


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class TestBlaschkeSpec:
    def test_rejects_lower_half_plane_zero(self):
        with pytest.raises(DomainError, match="upper half-plane"):
            BlaschkeSpec(zeros=(1 - 1j,))
        with pytest.raises(DomainError):
            BlaschkeSpec(zeros=(2.0,))

    def test_rejects_bad_rotation_and_chirality(self):
        with pytest.raises(DomainError):
            BlaschkeSpec(rotation=np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(DomainError):
            BlaschkeSpec(rotation=np.ones((2, 2)))
        with pytest.raises(DomainError):
            BlaschkeSpec(chirality=0)

    def test_pure(self):
        spec = BlaschkeSpec.pure(3, 0.2, -1)
        assert spec.degree == 3 and spec.zeros == (1j,) * 3
        assert spec.velocity == 0.2 and spec.chirality == -1


class TestBlaschkeProduct:
    @settings(max_examples=30, deadline=None)
    @given(zeros=st.lists(upper_half, min_size=1, max_size=4), x=st.floats(-1e3, 1e3))
    def test_unimodular_on_real_line(self, zeros, x):
        assert abs(abs(blaschke_product(BlaschkeSpec(zeros=tuple(zeros)), x)) - 1.0) < 1e-12

    def test_vanishes_at_zeros(self):
        spec = BlaschkeSpec(zeros=(1j, 2 + 0.5j))
        assert abs(blaschke_product(spec, 2 + 0.5j)) == 0.0
        assert blaschke_product(spec, 1j) == 0

    def test_pole_raises(self):
        with pytest.raises(DomainError):
            blaschke_product(BlaschkeSpec.pure(1), -1j)

    def test_ground_state_values(self):
        # (x - i)/(x + i): -1 at 0, -i at 1, tends to 1 at infinity
        b = blaschke_product(BlaschkeSpec.pure(1), np.array([0.0, 1.0, 1e9]))
        assert np.allclose(b, [-1, -1j, 1], atol=1e-8)


class TestProfile:
    def test_velocity_out_of_range(self):
        g = make_grid("torus", 64)
        for v in (1.0, -1.0, 1.2):
            with pytest.raises(DomainError, match=r"no nonconstant profile for \|v\| ≥ 1"):
                blaschke_profile(BlaschkeSpec.pure(1, v), g)
        with pytest.raises(DomainError):
            soliton_energy_expected(1, 1.5)

    def test_window_values(self):
        g = make_grid("window", 64, 4.0)
        u = blaschke_profile(BlaschkeSpec.pure(1), g)
        j = int(np.flatnonzero(g.nodes == 0.0)[0])
        assert np.allclose(u.values[j], [-1.0, 0.0, 0.0])
        # boosted: third component -c v, radius sqrt(1 - v^2)
        ub = blaschke_profile(BlaschkeSpec.pure(2, 0.6, chirality=-1), g)
        assert np.allclose(ub.values[:, 2], 0.6)
        assert np.allclose(np.linalg.norm(ub.values[:, :2], axis=1), 0.8)

    @pytest.mark.parametrize(
        "spec",
        [
            BlaschkeSpec.pure(1),
            BlaschkeSpec.pure(2, 0.5),
            BlaschkeSpec.pure(3, -0.7, chirality=-1),
            BlaschkeSpec(zeros=(0.3 + 0.8j, -1 + 2j), velocity=0.4),
            BlaschkeSpec(zeros=(2j,), velocity=-0.3, rotation=rot_z(0.7), chirality=-1),
        ],
    )
    def test_torus_pullback_travels_at_minus_v(self, spec):
        g = make_grid("torus", 512)
        u = stereographic_pullback(spec, g)
        assert norm_defect(u.values) < 1e-14
        assert profile_residual(u, profile_velocity(spec)) < 1e-11
        if spec.velocity:
            assert profile_residual(u, spec.velocity) > 1e-2

    def test_pullback_matches_line_profile(self):
        spec = BlaschkeSpec(zeros=(0.5 + 1j,), velocity=0.3)
        g = make_grid("torus", 64)
        u = stereographic_pullback(spec, g)
        inner = np.abs(np.abs(g.nodes - np.pi) - np.pi) > 0.1
        b = blaschke_product(spec, np.tan(g.nodes[inner] / 2.0))
        a = np.sqrt(1 - 0.09)
        assert np.allclose(u.values[inner, 0], a * b.real)
        assert np.allclose(u.values[inner, 1], -a * b.imag)
        j = g.n // 2  # theta = pi maps to x = infinity where B = 1
        assert np.allclose(u.values[j], [a, 0.0, -0.3])

    @pytest.mark.parametrize("m,v", [(1, 0.0), (2, 0.5), (3, 0.9)])
    def test_energy_law(self, m, v):
        u = stereographic_pullback(BlaschkeSpec.pure(m, v), make_grid("torus", 1024))
        assert energy(u) == pytest.approx(soliton_energy_expected(m, v), rel=1e-10)

    def test_degree_zero_is_constant(self):
        u = blaschke_profile(BlaschkeSpec(velocity=0.3), make_grid("torus", 32))
        assert np.allclose(u.values, u.values[0])
        assert energy(u) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("m,c", [(1, 1), (2, 1), (3, -1)])
    def test_winding(self, m, c):
        u = stereographic_pullback(BlaschkeSpec.pure(m, 0.3, chirality=c), make_grid("torus", 256))
        assert winding_number(u) == -c * m
        assert abs(winding_number(u, axis=(0, 0, c))) == m


class TestCircleWave:
    def test_solves_the_equation(self):
        g = make_grid("torus", 128)
        m, v, t, h = 3, 0.4, 0.7, 1e-5
        u = circle_wave(m, v, t, g)
        dudt = (circle_wave(m, v, t + h, g).values - circle_wave(m, v, t - h, g).values) / (2 * h)
        assert np.max(np.abs(dudt - hwm_rhs_values(u.values, g))) < 1e-8

    def test_bad_arguments(self):
        g = make_grid("torus", 32)
        with pytest.raises(DomainError):
            circle_wave(0, 0.1, 0.0, g)
        with pytest.raises(DomainError):
            circle_wave(1, 1.0, 0.0, g)


class TestPeriodicOrbit:
    def test_formula_values(self):
        g = make_grid("window", 64, 8.0)
        j0 = int(np.flatnonzero(g.nodes == 0.0)[0])
        j1 = int(np.flatnonzero(g.nodes == 1.0)[0])
        assert np.allclose(periodic_orbit_field(0.0, g).values[j0], [0, 0, -1])
        assert np.allclose(periodic_orbit_field(np.pi * np.sqrt(2), g).values[j1], [-1, 0, 0])
        far = periodic_orbit_field(1.3, make_grid("window", 64, 1e4)).values[0]
        assert np.allclose(far, [0, 0, 1], atol=1e-7)

    def test_period_and_velocity(self):
        g = make_grid("window", 64, 8.0)
        assert PERIODIC_ORBIT_PERIOD == pytest.approx(2 * np.pi / PERIODIC_ORBIT_OMEGA)
        assert np.allclose(periodic_orbit_field(PERIODIC_ORBIT_PERIOD, g).values, periodic_orbit_field(0, g).values)
        h = 1e-6
        fd = (periodic_orbit_field(0.4 + h, g).values - periodic_orbit_field(0.4 - h, g).values) / (2 * h)
        assert np.allclose(periodic_orbit_velocity(0.4, g), fd, atol=1e-8)

    def test_residual_at_origin_is_sqrt2(self):
        # |nabla|[2x^2/(x^4+1)](0) = -sqrt(2) on the line, so the rotating field is not a solution
        g = make_grid("window", 4096, 200.0)
        u = periodic_orbit_field(0.0, g)
        res = np.abs(periodic_orbit_velocity(0.0, g) - hwm_rhs_values(u.values, g))
        j0 = int(np.argmin(np.abs(g.nodes)))
        assert np.max(res[j0]) == pytest.approx(np.sqrt(2), rel=1e-3)


class TestMobius:
    def test_validation(self):
        with pytest.raises(DomainError):
            MobiusMap.line(1, 1, 1, 1)
        with pytest.raises(DomainError):
            MobiusMap.circle(a=1.0)
        with pytest.raises(DomainError):
            MobiusMap("sphere")

    def test_identity_returns_same_object(self):
        u = stereographic_pullback(BlaschkeSpec.pure(1), make_grid("torus", 64))
        assert mobius_reparam(u, MobiusMap.circle()) is u
        assert MobiusMap.line(1, 0, 0, 1).is_identity

    def test_rotation_keeps_energy(self):
        u = stereographic_pullback(BlaschkeSpec.pure(2, 0.3), make_grid("torus", 256))
        w = mobius_reparam(u, MobiusMap.circle(alpha=0.37))
        assert energy(w) == pytest.approx(energy(u), rel=1e-13)

    def test_disk_automorphism_energy(self):
        u = stereographic_pullback(BlaschkeSpec.pure(1), make_grid("torus", 1024))
        w = mobius_reparam(u, MobiusMap.circle(alpha=0.0, a=0.3))
        assert abs(energy(w) - energy(u)) / energy(u) <= 1e-6
        assert norm_defect(w.values) < 1e-14

    def test_line_map_leaving_window(self):
        u = blaschke_profile(BlaschkeSpec.pure(1), make_grid("window", 128, 10.0))
        with pytest.raises(InterpolationError, match="leaves the window"):
            mobius_reparam(u, MobiusMap.line(2.0, 0.0, 0.0, 0.5))

    def test_line_dilation_inside_window(self):
        # x -> x/4 keeps the window; the even field makes the edges match
        g = make_grid("window", 2048, 100.0)
        w = mobius_reparam(periodic_orbit_field(0.3, g), MobiusMap.line(0.5, 0.0, 0.0, 2.0), tail_tol=1e-6)
        x = g.nodes
        r = 2 * (x / 4) ** 2 / ((x / 4) ** 4 + 1)
        assert np.max(np.abs(w.values[:, 0] - np.cos(0.3 / np.sqrt(2)) * r)) < 1e-6

    def test_unresolved_tail(self):
        u = stereographic_pullback(BlaschkeSpec.pure(1), make_grid("torus", 32))
        with pytest.raises(InterpolationError, match="unresolved"):
            mobius_reparam(u, MobiusMap.circle(a=0.9))

    def test_kind_mismatch(self):
        u = stereographic_pullback(BlaschkeSpec.pure(1), make_grid("torus", 32))
        with pytest.raises(DomainError):
            mobius_reparam(u, MobiusMap.line(1, 1, 0, 1))
