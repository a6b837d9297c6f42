import csv

import numpy as np

from rotcouette.figures import FigureKind, eigen_curve, emit_figure_data


def read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestEigenCurve:
    def test_unstable_then_decaying(self, tmp_path):
        path = emit_figure_data(FigureKind.EIGEN_CURVE, {"beta": 0.5, "nu": 1e-3, "l": 2}, tmp_path / "e.csv")
        rows = read(path)
        assert len(rows) == 601
        rate = np.array([float(r["rate"]) for r in rows])
        eta = np.array([float(r["eta"]) for r in rows])
        assert eta[0] == 0.0 and eta[-1] == 30.0
        assert rate[0] > 0 and rate[-1] < 0
        assert np.all(np.diff(rate) <= 0)

    def test_strong_viscosity_everywhere_negative(self):
        eta, rate = eigen_curve(0.5, 1.0, 1, eta_max=30.0, steps=301)
        assert np.all(rate < 0)

    def test_string_kind(self, tmp_path):
        emit_figure_data("EigenCurve", {"beta": 0.5, "nu": 1e-4, "l": 2, "steps": 11}, tmp_path / "e.csv")
        assert len(read(tmp_path / "e.csv")) == 11


class TestInstabilityMap:
    def test_s_prime_strictly_inside_s(self, tmp_path):
        path = emit_figure_data(FigureKind.INSTABILITY_MAP,
                                {"beta": 0.5, "nu": 1e-3, "eta_max": 10.0, "eta_steps": 81, "l_max": 6},
                                tmp_path / "m.csv")
        rows = read(path)
        assert list(rows[0]) == ["eta", "l", "rate", "in_S", "in_Sprime"]
        s = {(r["eta"], r["l"]) for r in rows if r["in_S"] == "1"}
        sp = {(r["eta"], r["l"]) for r in rows if r["in_Sprime"] == "1"}
        assert sp and sp < s

    def test_deterministic(self, tmp_path):
        params = {"beta": 0.1, "nu": 1e-3, "eta_steps": 21, "l_max": 3}
        a = emit_figure_data(FigureKind.INSTABILITY_MAP, params, tmp_path / "a.csv").read_bytes()
        b = emit_figure_data(FigureKind.INSTABILITY_MAP, params, tmp_path / "b.csv").read_bytes()
        assert a == b
