import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rotcouette import spectral_core as sc
from rotcouette.spectral_core import Frame, Grid, ModeClass, ModeIndex, SpectralField


def random_real_field(grid, components=3, seed=0, dealiased=False):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((components,) + grid.shape)
    f = sc.from_physical(values, grid)
    return sc.dealias(f) if dealiased else f


class TestGrid:
    def test_frequencies(self):
        g = Grid(4, 8, 6, ly=4 * math.pi)
        assert np.array_equal(g.k, [0, 1, -2, -1])
        assert np.allclose(g.eta, 0.5 * np.array([0, 1, 2, 3, -4, -3, -2, -1]))
        assert np.array_equal(np.sort(g.l), np.arange(-3, 3))
        assert g.d_eta == pytest.approx(0.5)

    @pytest.mark.parametrize("shape", [(3, 8, 8), (8, 2, 8), (8, 8, 7), (0, 8, 8)])
    def test_rejects_bad_sizes(self, shape):
        with pytest.raises(ValueError):
            Grid(*shape)

    def test_rejects_bad_ly_and_fraction(self):
        with pytest.raises(ValueError):
            Grid(8, 8, 8, ly=0.0)
        with pytest.raises(ValueError):
            Grid(8, 8, 8, dealias_fraction=1.5)

    def test_class_masks_partition_lattice(self):
        g = Grid(8, 8, 8)
        masks = [g.class_mask(c) for c in ModeClass]
        assert np.array_equal(sum(m.astype(int) for m in masks), np.ones(g.shape, int))

    def test_dealias_box(self):
        g = Grid(8, 8, 8)
        k, _, l = g.mesh
        kept = np.broadcast_to(np.abs(k), g.shape)[g.dealias_mask]
        assert kept.max() == 2
        assert g.dealias_mask[0, 0, 0]


class TestModeIndex:
    def test_zero_flag_and_norm(self):
        assert ModeIndex(0, 0.0, 0).is_zero
        assert not ModeIndex(0, 0.5, 0).is_zero
        assert ModeIndex(1, 2.0, 2).norm2 == 9.0

    def test_classes(self):
        assert ModeIndex(0, 1.0, 0).mode_class is ModeClass.DOUBLE_ZERO
        assert ModeIndex(0, 1.0, 3).mode_class is ModeClass.SIMPLE_ZERO
        assert ModeIndex(-2, 1.0, 0).mode_class is ModeClass.NONZERO


class TestSymbols:
    @pytest.mark.parametrize("mode,t,expected", [
        (ModeIndex(0, 3.0, 1), 7.0, 3.0),
        (ModeIndex(1, 5.0, 0), 5.0, 0.0),
        (ModeIndex(2, 1.0, 4), 3.0, -5.0),
    ])
    def test_shear_frequency(self, mode, t, expected):
        assert sc.shear_frequency(mode, t) == expected

    @pytest.mark.parametrize("mode,t,expected", [
        (ModeIndex(0, 0.0, 0), 12.3, 0.0),
        (ModeIndex(1, 0.0, 0), 0.0, -1.0),
        (ModeIndex(1, 2.0, 2), 1.0, -6.0),
    ])
    def test_laplacian(self, mode, t, expected):
        assert sc.laplacian_L_symbol(mode, t) == expected

    @given(st.integers(-5, 5), st.floats(-20, 20), st.integers(-5, 5), st.floats(0, 50))
    def test_laplacian_nonpositive(self, k, eta, l, t):
        assert sc.laplacian_L_symbol(ModeIndex(k, eta, l), t) <= 0


class TestSpectralField:
    def test_immutable_and_copying(self):
        g = Grid(4, 4, 4)
        arr = np.zeros((3,) + g.shape, complex)
        f = SpectralField(g, arr)
        arr[0, 0, 0, 0] = 1.0
        assert f.coeffs[0, 0, 0, 0] == 0
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0, 0] = 1.0

    def test_scalar_input_promoted(self):
        g = Grid(4, 4, 4)
        assert SpectralField(g, np.zeros(g.shape)).components == 1

    def test_bad_shape(self):
        g = Grid(4, 4, 4)
        with pytest.raises(ValueError):
            SpectralField(g, np.zeros((2,) + g.shape))

    def test_arithmetic_checks_grid_and_time(self):
        g = Grid(4, 4, 4)
        a = SpectralField.zeros(g)
        with pytest.raises(sc.GridMismatchError):
            a + SpectralField.zeros(Grid(4, 4, 6))
        with pytest.raises(sc.GridMismatchError):
            a + SpectralField.zeros(g, time=1.0)
        with pytest.raises(sc.GridMismatchError):
            a + SpectralField.zeros(g, frame=Frame.STATIONARY)


class TestTransforms:
    def test_roundtrip(self):
        g = Grid(8, 16, 8, ly=7.0)
        rng = np.random.default_rng(1)
        v = rng.standard_normal((3,) + g.shape)
        back = sc.inverse(sc.forward(v, g), g)
        assert np.max(np.abs(back - v)) <= 1e-12 * np.max(np.abs(v))

    def test_parseval(self):
        g = Grid(8, 16, 8, ly=11.0)
        rng = np.random.default_rng(2)
        v = rng.standard_normal(g.shape)
        f = sc.from_physical(v, g)
        assert f.l2_norm() == pytest.approx(sc.physical_l2_norm(v, g), rel=1e-12)

    def test_single_mode_coefficient(self):
        # cos(x) has coefficients 1/2 at k = +-1 divided by d_eta
        g = Grid(8, 8, 8, ly=2 * math.pi)
        x, _, _ = g.physical_coordinates()
        v = np.broadcast_to(np.cos(x)[:, None, None], g.shape)
        c = sc.forward(v, g)
        assert c[1, 0, 0] == pytest.approx(0.5 / g.d_eta)
        assert c[-1, 0, 0] == pytest.approx(0.5 / g.d_eta)

    def test_real_field_is_conjugate_symmetric(self):
        g = Grid(8, 8, 8)
        assert sc.conjugate_symmetry_error(random_real_field(g)) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetrize_gives_real_field(self, seed):
        g = Grid(4, 8, 4)
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        s = sc.symmetrize(c)
        assert sc.conjugate_symmetry_error(s) < 1e-14
        v = np.fft.ifftn(s)
        assert np.max(np.abs(v.imag)) <= 1e-12 * max(1.0, np.max(np.abs(v.real)))


class TestProjections:
    def test_double_zero_support(self):
        g = Grid(8, 8, 8)
        c = np.zeros(g.shape, complex)
        c[0, :, 0] = np.arange(8) + 1.0
        f = SpectralField(g, c)
        assert np.array_equal(sc.project_modes(f, ModeClass.DOUBLE_ZERO).coeffs, f.coeffs)
        assert not sc.project_modes(f, ModeClass.SIMPLE_ZERO).coeffs.any()
        assert not sc.project_modes(f, ModeClass.NONZERO).coeffs.any()

    def test_nonzero_support(self):
        g = Grid(8, 8, 8)
        c = np.zeros(g.shape, complex)
        c[1, :, 2] = 1.0
        f = SpectralField(g, c)
        assert np.array_equal(sc.project_modes(f, ModeClass.NONZERO).coeffs, f.coeffs)

    def test_partition_idempotent_orthogonal(self):
        g = Grid(8, 8, 8)
        f = random_real_field(g, seed=4)
        parts = [sc.project_modes(f, c) for c in ModeClass]
        total = parts[0] + parts[1] + parts[2]
        assert np.max(np.abs(total.coeffs - f.coeffs)) <= 1e-14 * np.max(np.abs(f.coeffs))
        for p, c in zip(parts, ModeClass):
            assert np.array_equal(sc.project_modes(p, c).coeffs, p.coeffs)
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(np.vdot(parts[i].coeffs, parts[j].coeffs)) == 0.0


def brute_force_product(cf, cg, grid):
    """h(p) = sum_q f(q) g(p - q) d_eta over signed lattice indices, truncated to the box."""
    n = grid.shape
    kmax = [grid._cutoff(m) for m in n]
    out = np.zeros_like(cf)
    idx = [range(-k, k + 1) for k in kmax]
    for a in idx[0]:
        for b in idx[1]:
            for c in idx[2]:
                acc = 0j
                for qa in idx[0]:
                    for qb in idx[1]:
                        for qc in idx[2]:
                            ra, rb, rc = a - qa, b - qb, c - qc
                            if abs(ra) > kmax[0] or abs(rb) > kmax[1] or abs(rc) > kmax[2]:
                                continue
                            acc += cf[qa % n[0], qb % n[1], qc % n[2]] * cg[ra % n[0], rb % n[1], rc % n[2]]
                out[a % n[0], b % n[1], c % n[2]] = acc * grid.d_eta
    return out


class TestConvolution:
    def test_constant_factor_is_identity(self):
        g = Grid(8, 8, 8, ly=3.0)
        one = sc.from_physical(np.ones(g.shape), g)
        f = random_real_field(g, components=1, seed=5)
        out = sc.convolve_dealiased(one, f)
        assert np.allclose(out.coeffs, sc.dealias(f).coeffs, atol=1e-12)

    def test_cosine_squared(self):
        g = Grid(8, 8, 8, ly=2 * math.pi)
        x, _, _ = g.physical_coordinates()
        v = np.broadcast_to(np.cos(x)[:, None, None], g.shape)
        f = sc.from_physical(v, g)
        out = sc.convolve_dealiased(f, f).to_physical()
        expected = 0.5 + 0.5 * np.cos(2 * x)[:, None, None]
        assert np.allclose(out, np.broadcast_to(expected, g.shape), atol=1e-12)

    def test_brute_force_oracle(self):
        g = Grid(8, 8, 8, ly=5.0)
        f = random_real_field(g, components=1, seed=6, dealiased=True)
        h = random_real_field(g, components=1, seed=7, dealiased=True)
        out = sc.convolve_dealiased(f, h).coeffs[0]
        ref = brute_force_product(f.coeffs[0], h.coeffs[0], g)
        assert np.max(np.abs(out - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_preserves_symmetry_and_truncates(self):
        g = Grid(8, 8, 8)
        out = sc.convolve_dealiased(random_real_field(g, 3, 8), random_real_field(g, 1, 9))
        assert out.components == 3
        assert sc.conjugate_symmetry_error(out) < 1e-12
        assert not out.coeffs[:, ~g.dealias_mask].any()

    def test_grid_mismatch(self):
        with pytest.raises(sc.GridMismatchError):
            sc.convolve_dealiased(SpectralField.zeros(Grid(4, 4, 4)), SpectralField.zeros(Grid(8, 4, 4)))


class TestMovingFrameCalculus:
    def test_leray_projection_is_divergence_free(self):
        g = Grid(8, 8, 8)
        u = random_real_field(g).replace(time=0.7)
        p = sc.leray_project(u)
        assert sc.divergence_residual(p) < 1e-14
        assert sc.divergence_residual(u) > 1e-3
        assert np.allclose(sc.leray_project(p).coeffs, p.coeffs, atol=1e-14)

    def test_origin_keeps_horizontal_components(self):
        g = Grid(4, 4, 4)
        c = np.zeros((3,) + g.shape, complex)
        c[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        p = sc.leray_project(SpectralField(g, c))
        assert list(p.coeffs[:, 0, 0, 0]) == [1.0, 0.0, 3.0]


class TestSnapshot:
    def test_roundtrip(self, tmp_path):
        g = Grid(4, 8, 6, ly=9.5)
        f = random_real_field(g, seed=10).replace(time=2.25)
        path = tmp_path / "f.rcsf"
        sc.write_snapshot(path, f)
        back = sc.read_snapshot(path)
        assert back.grid == g and back.time == 2.25 and back.frame == Frame.MOVING
        assert np.array_equal(back.coeffs, f.coeffs)

    def test_layout(self, tmp_path):
        g = Grid(4, 4, 4, ly=2.0)
        c = np.zeros((1,) + g.shape, complex)
        c[0, 0, 0, 1] = 1 + 2j
        path = tmp_path / "s.rcsf"
        sc.write_snapshot(path, SpectralField(g, c, Frame.STATIONARY, 0.5))
        data = path.read_bytes()
        assert data[:4] == b"RCSF"
        header = sc._HEADER.unpack_from(data)
        assert header[1:] == (1, 1, 4, 4, 4, 2.0, 0.5, 0)
        body = np.frombuffer(data, "<f8", offset=sc._HEADER.size)
        assert body[2] == 1.0 and body[3] == 2.0  # l-minor ordering

    @pytest.mark.parametrize("mutate", ["magic", "version", "truncate"])
    def test_rejects_corrupt(self, tmp_path, mutate):
        g = Grid(4, 4, 4)
        path = tmp_path / "bad.rcsf"
        sc.write_snapshot(path, SpectralField.zeros(g))
        data = bytearray(path.read_bytes())
        if mutate == "magic":
            data[:4] = b"XXXX"
        elif mutate == "version":
            data[4] = 9
        else:
            data = data[:-8]
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError):
            sc.read_snapshot(path)
