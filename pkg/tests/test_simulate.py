from __future__ import annotations

import numpy as np
import pytest

from gvarkit import DataError, NumericalError, check_magnitude, make_dgp, simulate
from gvarkit.gvar import residual_covariance


class TestMakeDgp:
    def test_deterministic(self):
        d1 = make_dgp(seed=42)
        d2 = make_dgp(seed=42)
        np.testing.assert_array_equal(d1.s_true, d2.s_true)
        np.testing.assert_array_equal(d1.solution.G0, d2.solution.G0)
        assert d1.specs == d2.specs

    def test_stability(self):
        for seed in range(5):
            dgp = make_dgp(n_countries=4, k_vars=3, seed=seed, x_common=1)
            assert dgp.solution.max_modulus < 0.95

    @pytest.mark.parametrize("target", [None, "C2"])
    def test_planted_margin_holds(self, target):
        margin = 2.5
        dgp = make_dgp(seed=8, margin=margin, target_country=target)
        s = dgp.s_true
        sig = np.sqrt(np.diag(s @ s.T))
        positions = dgp.target().shock_positions
        for own in positions:
            scaled = np.abs(s[:, own]) / sig
            others = np.delete(scaled, own)
            assert scaled[own] / others.max() >= margin
        assert check_magnitude(s[:, list(positions)], dgp.target(), sig)

    def test_omega_matches_factorization(self):
        dgp = make_dgp(seed=9)
        np.testing.assert_allclose(
            dgp.solution.omega_u, dgp.s_true @ dgp.s_true.T, atol=1e-12
        )

    def test_diagonal_mix(self):
        dgp = make_dgp(seed=10, mix="diagonal")
        np.testing.assert_array_equal(dgp.s_true, np.diag(np.diag(dgp.s_true)))
        assert np.all(np.diag(dgp.s_true) > 0)

    def test_target_country_selectable(self):
        dgp = make_dgp(seed=11, target_country="C2")
        assert dgp.target_country == "C2"
        pos = dgp.target().shock_positions
        assert dgp.index.entries[pos[0]] == ("C2", "EPU")
        assert dgp.index.entries[pos[1]] == ("C2", "CISS")

    def test_dominant_unit_optional(self):
        with_dom = make_dgp(seed=12, x_common=2, feedback_vars=("EPU",))
        without = make_dgp(seed=12, x_common=0)
        assert with_dom.dominant_spec is not None
        assert with_dom.index.entries[-1] == ("CB", "X2")
        assert without.dominant_spec is None
        assert all(c == f"C{i + 1}" for i, (c, _) in enumerate([]))

    def test_infeasible_margin(self):
        with pytest.raises(DataError, match="margin"):
            make_dgp(margin=float("inf"))
        with pytest.raises(DataError, match="margin"):
            make_dgp(margin=0.5)

    def test_domain_errors(self):
        with pytest.raises(DataError, match="two countries"):
            make_dgp(n_countries=1)
        with pytest.raises(DataError, match="uncertainty variables"):
            make_dgp(k_vars=1)
        with pytest.raises(DataError, match="unknown mix"):
            make_dgp(mix="sparse")

    def test_true_irf_columns(self):
        dgp = make_dgp(seed=13)
        cols = dgp.true_irf_columns()
        a, b = dgp.target().shock_positions
        np.testing.assert_array_equal(cols[:, 0], dgp.s_true[:, a])
        np.testing.assert_array_equal(cols[:, 1], dgp.s_true[:, b])


class TestSimulate:
    def test_shapes_dates_roles(self, small_dgp):
        panel = simulate(small_dgp, 120, seed=3)
        assert panel.n_periods == 120
        assert panel.dates[0] == "2003-01" and panel.dates[-1] == "2012-12"
        assert panel.n_series == len(small_dgp.index)
        dominant = [m for m in panel.meta if m.role == "dominant-unit"]
        assert {m.country for m in dominant} == {"CB"}
        assert all(m.transform == "none" for m in panel.meta)

    def test_deterministic(self, small_dgp):
        p1 = simulate(small_dgp, 100, seed=5)
        p2 = simulate(small_dgp, 100, seed=5)
        np.testing.assert_array_equal(p1.values, p2.values)
        p3 = simulate(small_dgp, 100, seed=6)
        assert not np.array_equal(p1.values, p3.values)

    def test_minimum_length(self, small_dgp):
        with pytest.raises(DataError, match="at least 50"):
            simulate(small_dgp, 49, seed=0)
        with pytest.raises(DataError, match="burn_in"):
            simulate(small_dgp, 100, seed=0, burn_in=-1)

    def test_long_sample_covariance_close_to_truth(self):
        # reduced-form innovations are S eps, so the innovation
        # covariance should approach S S' in a long simulation
        dgp = make_dgp(seed=14, coupling=0.05)
        panel = simulate(dgp, 4000, seed=15)
        data = panel.block(list(dgp.index.entries))
        sol = dgp.solution
        p = len(sol.H)
        t = data.shape[0]
        resid = data[p:] - sol.h0
        for j in range(1, p + 1):
            resid = resid - data[p - j : t - j] @ sol.H[j - 1].T
        est = residual_covariance(resid)
        scale = np.abs(np.diag(dgp.solution.omega_u)).max()
        assert np.abs(est - dgp.solution.omega_u).max() < 0.15 * scale

    def test_custom_start(self, small_dgp):
        panel = simulate(small_dgp, 60, seed=7, start="1999-07")
        assert panel.dates[0] == "1999-07"
        assert panel.dates[5] == "1999-12"
        assert panel.dates[6] == "2000-01"
