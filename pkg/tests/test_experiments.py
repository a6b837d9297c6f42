import math

import numpy as np
import pytest

from rotcouette import experiments as ex
from rotcouette.nonlinear import SimulationConfig
from rotcouette.spectral_core import Grid, ModeIndex


class TestLinearDrivers:
    def test_enhanced_dissipation_small(self):
        rep = ex.enhanced_dissipation_check(n_modes=5, n_out=20, seed=4)
        assert rep.n_modes == 5 and rep.passed()

    def test_inviscid_damping_single_mode(self):
        mode = ModeIndex(1, 5.0, 2)
        u0 = ex._divergence_free_mode(np.random.default_rng(0), mode)
        ratio = ex.inviscid_damping_ratio(mode, u0, 2.0, 1e-3, np.linspace(0, 20, 41))
        assert 0 < ratio <= 8.0

    def test_instability_growth_bounds(self):
        rep = ex.instability_growth(grid=Grid(4, 32, 8, ly=16 * math.pi), n_times=16)
        assert rep.n_modes > 0
        assert rep.lower_bound * 0.98 <= rep.fitted_rate <= rep.max_rate * 1.02

    def test_dispersive_small_grid(self):
        slopes, w2 = ex.dispersive_slopes(ly=500.0, ny=2048, nz=16, window=(10.0, 200.0), n_times=12)
        assert all(-0.6 < s < 0.0 for s in slopes)


class TestNonlinearDrivers:
    def test_linear_consistency_small(self):
        rep = ex.linear_consistency(grid=Grid(8, 16, 8), dt=0.01, t_end=2.0)
        assert rep.ratio == pytest.approx(10.0, rel=0.3)
        assert rep.max_div_residual < 1e-10

    def test_ledger_sanity_small(self):
        cfg = SimulationConfig(nx=8, ny=16, nz=8, ly=8.0, dt=0.05, t_end=2.0, ledger_interval=0.5, epsilon=1e-6)
        rep = ex.ledger_sanity(cfg)
        assert rep.status == "Completed"
        assert rep.max_bootstrap_over_eps2 <= 100.0
        assert rep.heat_identity_error <= 1e-8

    def test_linear_norm_series(self, tmp_path):
        cfg = SimulationConfig(nx=8, ny=16, nz=8, ly=8.0, t_end=1.0, ledger_interval=0.25, epsilon=1e-3)
        rows = ex.linear_norm_series(cfg)
        assert len(rows) == 5 and len(rows[0]) == len(ex.LINEAR_COLUMNS)
        assert [r[0] for r in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
        ex.write_rows(tmp_path / "lin.csv", ex.LINEAR_COLUMNS, rows)
        assert (tmp_path / "lin.csv").read_text().startswith("t,u0bar_l2")
