import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hwm.errors import DomainError
from hwm.grid import (
    ScalarField,
    SphereField,
    VectorField3,
    apply_multiplier,
    fourier_multiply,
    hwm_rhs,
    inner,
    interpolate,
    make_grid,
    multiplier_matrix,
    symbol_table,
)

from .conftest import trig_poly


class TestMakeGrid:
    def test_torus_nodes_and_wavenumbers(self):
        g = make_grid("torus", 16)
        assert g.dx == pytest.approx(2 * np.pi / 16)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == pytest.approx(2 * np.pi - g.dx)
        assert sorted(g.wavenumbers) == list(range(-8, 8))
        assert g.k_max == 8 and g.is_torus and g.half_width is None

    def test_window_nodes_and_wavenumbers(self):
        g = make_grid("window", 64, 10.0)
        assert g.nodes[0] == -10.0
        assert g.nodes[-1] == pytest.approx(10.0 - g.dx)
        assert g.circumference == pytest.approx(20.0)
        assert np.allclose(np.sort(g.wavenumbers), np.arange(-32, 32) * np.pi / 10.0)

    @pytest.mark.parametrize("n", [4, 12, 100, 0, -8])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(DomainError):
            make_grid("torus", n)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError):
            make_grid("torus", 16, 3.0)
        with pytest.raises(DomainError):
            make_grid("window", 16)
        with pytest.raises(DomainError):
            make_grid("window", 16, -1.0)
        with pytest.raises(DomainError):
            make_grid("sphere", 16)

    def test_equality_by_descriptor(self):
        assert make_grid("window", 32, 5.0) == make_grid("window", 32, 5.0)
        assert make_grid("window", 32, 5.0) != make_grid("window", 32, 6.0)
        assert len({make_grid("torus", 32), make_grid("torus", 32)}) == 1

    def test_arrays_read_only(self):
        g = make_grid("torus", 8)
        with pytest.raises(ValueError):
            g.nodes[0] = 1.0


class TestMultipliers:
    @settings(max_examples=40, deadline=None)
    @given(k=st.integers(min_value=-63, max_value=63))
    def test_pure_modes_exact(self, k):
        g = make_grid("torus", 128)
        e = np.exp(1j * k * g.nodes)
        tol = 1e-13 * max(1, abs(k))
        assert np.max(np.abs(fourier_multiply(e, g, "halfwave") - abs(k) * e)) < 10 * tol
        assert np.max(np.abs(fourier_multiply(e, g, "hilbert") + 1j * np.sign(k) * e)) < tol
        assert np.max(np.abs(fourier_multiply(e, g, "derivative") - 1j * k * e)) < 10 * tol

    def test_zero_mode_annihilated(self, torus256):
        ones = np.ones(torus256.n)
        assert np.all(fourier_multiply(ones, torus256, "halfwave") == 0)
        assert np.all(fourier_multiply(ones, torus256, "hilbert") == 0)

    def test_hilbert_after_derivative_is_halfwave(self, rng, torus256):
        f = trig_poly(rng, torus256.nodes, 40, mean=False)
        hd = fourier_multiply(fourier_multiply(f, torus256, "derivative"), torus256, "hilbert")
        assert np.max(np.abs(hd - fourier_multiply(f, torus256, "halfwave"))) < 1e-12 * 40

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_symmetry_and_skewness(self, seed):
        g = make_grid("torus", 128)
        r = np.random.default_rng(seed)
        f, h = trig_poly(r, g.nodes, 16), trig_poly(r, g.nodes, 16)
        hw = lambda v: fourier_multiply(v, g, "halfwave")  # noqa: E731
        hi = lambda v: fourier_multiply(v, g, "hilbert")  # noqa: E731
        assert abs(inner(f, hw(h), g) - inner(hw(f), h, g)) < 1e-12 * 16**2
        assert abs(inner(f, hi(h), g) + inner(hi(f), h, g)) < 1e-12 * 16**2

    def test_line_oracles_on_window(self):
        # 1/(1+x^2) has transform pi exp(-|xi|): |nabla| gives (1-x^2)/(1+x^2)^2, H gives x/(1+x^2)
        g = make_grid("window", 4096, 200.0)
        x = g.nodes
        f = 1.0 / (1.0 + x * x)
        centre = np.abs(x) < 20
        hw = fourier_multiply(f, g, "halfwave")
        hi = fourier_multiply(f, g, "hilbert")
        assert np.max(np.abs(hw - (1 - x * x) / (1 + x * x) ** 2)) < 1e-4
        assert np.max(np.abs(hi - x / (1 + x * x))[centre]) < 1e-3

    def test_matrix_matches_fft(self, rng):
        g = make_grid("window", 64, 3.0)
        f = rng.normal(size=64)
        for sym in ("halfwave", "hilbert", "derivative"):
            assert np.allclose(multiplier_matrix(g, sym) @ f, fourier_multiply(f, g, sym), atol=1e-12)
        assert np.allclose(multiplier_matrix(g, "halfwave"), multiplier_matrix(g, "halfwave").T, atol=1e-12)

    def test_unknown_symbol(self, torus256):
        with pytest.raises(DomainError):
            symbol_table(torus256, "laplacian")

    def test_length_mismatch(self, torus256):
        with pytest.raises(DomainError):
            fourier_multiply(np.zeros(10), torus256, "halfwave")

    def test_apply_multiplier_types(self, torus256):
        s = apply_multiplier(ScalarField(torus256, np.cos(torus256.nodes)), "halfwave")
        assert isinstance(s, ScalarField)
        assert np.allclose(s.values, np.cos(torus256.nodes))
        v = apply_multiplier(SphereField(torus256, np.tile([0.0, 0.0, 1.0], (256, 1))), "hilbert")
        assert type(v) is VectorField3


class TestFields:
    def test_sphere_field_rejects_non_unit(self, torus256):
        vals = np.tile([0.0, 0.0, 1.0], (256, 1))
        vals[3] *= 1 + 1e-9
        with pytest.raises(DomainError, match="violates"):
            SphereField(torus256, vals)

    def test_vector_field_rejects_nan_and_shape(self, torus256):
        vals = np.zeros((256, 3))
        vals[0, 0] = np.nan
        with pytest.raises(DomainError):
            VectorField3(torus256, vals)
        with pytest.raises(DomainError):
            VectorField3(torus256, np.zeros((255, 3)))

    def test_rhs_tangent(self, rng, torus256):
        raw = np.column_stack([trig_poly(rng, torus256.nodes, 6) for _ in range(3)])
        u = SphereField(torus256, raw / np.linalg.norm(raw, axis=1, keepdims=True))
        rhs = hwm_rhs(u).values
        assert np.max(np.abs(np.einsum("ij,ij->i", rhs, u.values))) < 1e-12 * np.max(np.abs(rhs))


class TestInterpolate:
    def test_trig_poly_exact_off_grid(self, rng):
        g = make_grid("torus", 64)
        f = trig_poly(rng, g.nodes, 20)
        pts = rng.uniform(0, 2 * np.pi, 50)
        r2 = np.random.default_rng(12345)
        exact = trig_poly(r2, pts, 20)
        assert np.max(np.abs(interpolate(f, g, pts) - exact)) < 1e-11

    def test_nodes_reproduced_including_nyquist(self, rng):
        g = make_grid("window", 32, 4.0)
        f = rng.normal(size=(32, 3))
        out = interpolate(f, g, g.nodes)
        assert np.isrealobj(out)
        assert np.max(np.abs(out - f)) < 1e-12
