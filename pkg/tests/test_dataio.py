from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvarkit import (
    CountrySpec,
    DataError,
    DominantSpec,
    Panel,
    SeriesMeta,
    WeightMatrix,
    apply_transforms,
    bis_symmetrize,
    build_weights,
    country_specs,
    foreign_series,
    load_panel,
    yield_adjust,
)
from gvarkit.dataio import (
    counterpart_weights,
    load_exposures,
    member_feedback_weights,
    month_range,
    write_exposures,
    write_panel,
)


def meta(country, name, role="domestic", transform="none", applied=False):
    return SeriesMeta(country=country, name=name, role=role, transform=transform, applied=applied)


def tiny_panel(values, metas, start="2003-01"):
    values = np.asarray(values, dtype=float)
    return Panel(month_range(start, values.shape[0]), values, metas)


class TestMonthRange:
    def test_spans_year_boundary(self):
        assert month_range("2003-11", 4) == ("2003-11", "2003-12", "2004-01", "2004-02")

    def test_rejects_garbage(self):
        with pytest.raises(DataError, match="unparseable date"):
            month_range("March 2003", 2)

    def test_rejects_month_13(self):
        with pytest.raises(DataError, match="month out of range"):
            month_range("2003-13", 2)


class TestSeriesMeta:
    def test_unknown_role(self):
        with pytest.raises(DataError, match="unknown role"):
            meta("DE", "EPU", role="global")

    def test_unknown_transform(self):
        with pytest.raises(DataError, match="unknown transform"):
            meta("DE", "EPU", transform="boxcox")


class TestPanel:
    def test_shape_mismatch(self):
        with pytest.raises(DataError, match="dates"):
            Panel(("2003-01",), np.zeros((2, 1)), (meta("DE", "EPU"),))

    def test_non_monthly_spacing(self):
        with pytest.raises(DataError, match="non-monthly"):
            Panel(("2003-01", "2003-03"), np.zeros((2, 1)), (meta("DE", "EPU"),))

    def test_duplicate_series(self):
        with pytest.raises(DataError, match="duplicate series"):
            tiny_panel(np.zeros((1, 2)), (meta("DE", "EPU"), meta("DE", "EPU")))

    def test_missing_value(self):
        with pytest.raises(DataError, match="non-finite"):
            tiny_panel([[1.0], [np.nan]], (meta("DE", "EPU"),))

    def test_common_name_clash(self):
        metas = (meta("US", "VIX", role="common"), meta("DE", "VIX"))
        with pytest.raises(DataError, match="clashes"):
            tiny_panel(np.ones((1, 2)), metas)

    def test_values_are_frozen(self):
        p = tiny_panel(np.ones((2, 1)), (meta("DE", "EPU"),))
        with pytest.raises(ValueError):
            p.values[0, 0] = 2.0

    def test_lookup_and_select(self):
        p = tiny_panel([[1.0, 2.0], [3.0, 4.0]], (meta("DE", "EPU"), meta("IT", "EPU")))
        assert p.index_of("IT", "EPU") == 1
        np.testing.assert_array_equal(p.column("DE", "EPU"), [1.0, 3.0])
        sub = p.select([("IT", "EPU")])
        assert sub.n_series == 1 and sub.meta[0].country == "IT"
        with pytest.raises(DataError, match="no series"):
            p.column("FR", "EPU")


class TestLoadPanel:
    def test_golden_shapes(self, golden_csv, golden_meta):
        p = load_panel(golden_csv, golden_meta)
        assert p.n_periods == 186 and p.n_series == 6
        assert p.dates[0] == "2003-01" and p.dates[-1] == "2018-06"
        assert p.meta_for("DE", "spread").transform == "yield-adjust"

    def test_golden_round_trip_exact(self, golden_csv, golden_meta, tmp_path):
        p = load_panel(golden_csv, golden_meta)
        csv_out = tmp_path / "panel.csv"
        meta_out = tmp_path / "meta.json"
        write_panel(p, str(csv_out), str(meta_out))
        back = load_panel(str(csv_out), str(meta_out))
        assert back.dates == p.dates
        assert np.array_equal(back.values, p.values)
        assert back.meta == p.meta

    def test_missing_column(self, golden_csv, tmp_path):
        bad = tmp_path / "meta.json"
        bad.write_text(json.dumps({"columns": {"DE.GONE": {"country": "DE", "name": "GONE"}}}))
        with pytest.raises(DataError, match="lacks declared column"):
            load_panel(golden_csv, str(bad))

    def test_ragged_row(self, tmp_path, golden_meta):
        csv_path = tmp_path / "ragged.csv"
        csv_path.write_text("date,DE.EPU\n2003-01,1.0\n2003-02\n")
        meta_path = tmp_path / "meta.json"
        meta_path.write_text(json.dumps({"columns": {"DE.EPU": {"country": "DE", "name": "EPU"}}}))
        with pytest.raises(DataError, match="ragged row"):
            load_panel(str(csv_path), str(meta_path))

    def test_blank_cell(self, tmp_path):
        csv_path = tmp_path / "gap.csv"
        csv_path.write_text("date,DE.EPU\n2003-01,1.0\n2003-02,\n")
        meta_path = tmp_path / "meta.json"
        meta_path.write_text(json.dumps({"columns": {"DE.EPU": {"country": "DE", "name": "EPU"}}}))
        with pytest.raises(DataError, match="missing value"):
            load_panel(str(csv_path), str(meta_path))

    def test_undeclared_csv_columns_ignored(self, tmp_path):
        csv_path = tmp_path / "extra.csv"
        csv_path.write_text("date,DE.EPU,JUNK\n2003-01,1.0,9\n2003-02,2.0,9\n")
        meta_path = tmp_path / "meta.json"
        meta_path.write_text(json.dumps({"columns": {"DE.EPU": {"country": "DE", "name": "EPU"}}}))
        p = load_panel(str(csv_path), str(meta_path))
        assert p.n_series == 1


class TestYieldAdjust:
    # references computed with 40-digit arithmetic
    def test_frozen_values(self):
        assert yield_adjust(5.0) == pytest.approx(0.004065847014119334, abs=1e-15)
        assert yield_adjust(100.0) == pytest.approx(0.05776226504666211, abs=1e-15)
        assert yield_adjust(2.5) == pytest.approx(0.0020577177158642918, abs=1e-15)
        assert yield_adjust(-0.35) == pytest.approx(-0.0002921782774406369, abs=1e-15)

    def test_zero_yield(self):
        assert yield_adjust(0.0) == 0.0

    def test_array_input(self):
        out = yield_adjust(np.array([5.0, 100.0]))
        np.testing.assert_allclose(out, [0.004065847014119334, 0.05776226504666211], atol=1e-15)

    def test_domain_error(self):
        with pytest.raises(DataError, match="-100"):
            yield_adjust(-100.0)

    @given(st.floats(min_value=-99.0, max_value=500.0, allow_nan=False))
    @settings(max_examples=100, deadline=None)
    def test_inverts_to_annual_yield(self, y):
        # independent route: undo the monthly compounding
        back = (math.exp(12.0 * yield_adjust(y)) - 1.0) * 100.0
        assert back == pytest.approx(y, abs=1e-10)


class TestApplyTransforms:
    def test_spread_differencing_drops_benchmark(self):
        metas = (
            meta("DE", "spread", transform="yield-adjust"),
            meta("IT", "spread", transform="yield-adjust"),
            meta("DE", "EPU", transform="log"),
        )
        p = tiny_panel([[2.4, 3.6, 100.0], [2.4, 3.6, 110.0]], metas)
        out = apply_transforms(p, benchmark="DE")
        assert out.n_series == 2
        assert not out.has("DE", "spread")
        expected = math.log(1.036) / 12 - math.log(1.024) / 12
        np.testing.assert_allclose(out.column("IT", "spread"), expected, atol=1e-15)
        np.testing.assert_allclose(out.column("DE", "EPU"), np.log([100.0, 110.0]))
        assert all(m.applied for m in out.meta)

    def test_idempotent(self):
        metas = (meta("DE", "EPU", transform="log"), meta("IT", "spread", transform="yield-adjust"))
        p = tiny_panel([[100.0, 2.0], [110.0, 2.5]], metas)
        once = apply_transforms(p)
        twice = apply_transforms(once)
        assert np.array_equal(once.values, twice.values)

    def test_log_rejects_nonpositive(self):
        p = tiny_panel([[0.0]], (meta("DE", "EPU", transform="log"),))
        with pytest.raises(DataError, match="non-positive"):
            apply_transforms(p)

    def test_benchmark_without_series(self):
        p = tiny_panel([[3.0]], (meta("IT", "spread", transform="yield-adjust"),))
        with pytest.raises(DataError, match="benchmark"):
            apply_transforms(p, benchmark="DE")

    def test_no_benchmark_keeps_all_columns(self):
        metas = (
            meta("DE", "spread", transform="yield-adjust"),
            meta("IT", "spread", transform="yield-adjust"),
        )
        p = tiny_panel([[2.0, 3.0]], metas)
        out = apply_transforms(p)
        assert out.n_series == 2
        np.testing.assert_allclose(out.column("DE", "spread"), math.log(1.02) / 12)


class TestWeights:
    def test_hand_case(self):
        w = build_weights(["A", "B", "C"], [[0, 3, 1], [2, 0, 2], [5, 0, 0]])
        np.testing.assert_allclose(
            w.w, [[0, 0.75, 0.25], [0.5, 0, 0.5], [1.0, 0, 0]], atol=1e-15
        )

    def test_diagonal_is_ignored(self):
        w = build_weights(["A", "B"], [[9.0, 1.0], [2.0, 9.0]])
        np.testing.assert_allclose(w.w, [[0, 1], [1, 0]])

    def test_isolated_country(self):
        with pytest.raises(DataError, match="zero total exposure"):
            build_weights(["A", "B"], [[0, 0], [1, 0]])

    def test_negative_exposure(self):
        with pytest.raises(DataError, match="nonnegative"):
            build_weights(["A", "B"], [[0, -1], [1, 0]])

    @given(
        st.integers(min_value=2, max_value=8),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_rows_sum_to_one(self, n, seed):
        rng = np.random.default_rng(seed)
        expo = rng.uniform(0.1, 5.0, size=(n, n))
        w = build_weights([f"C{i}" for i in range(n)], expo)
        np.testing.assert_allclose(w.w.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(np.diag(w.w) == 0.0)

    def test_weight_matrix_validates_row_sums(self):
        with pytest.raises(DataError, match="sums to"):
            WeightMatrix(("A", "B"), np.array([[0.0, 0.5], [1.0, 0.0]]))

    def test_weight_matrix_validates_diagonal(self):
        with pytest.raises(DataError, match="diagonal"):
            WeightMatrix(("A", "B"), np.array([[0.5, 0.5], [1.0, 0.0]]))


class TestBisSymmetrize:
    def test_hand_case(self):
        claims = np.array([[0.0, 4.0], [2.0, 0.0]])
        liabilities = np.array([[0.0, 6.0], [8.0, 0.0]])
        # exposure(i, j) averages i's claims on j with j's claims on i,
        # the latter reported as i's liabilities to j
        np.testing.assert_allclose(
            bis_symmetrize(claims, liabilities), [[0.0, 6.0], [4.0, 0.0]]
        )

    def test_shape_mismatch(self):
        with pytest.raises(DataError, match="square"):
            bis_symmetrize(np.zeros((2, 2)), np.zeros((3, 3)))


class TestExposureFiles:
    def test_round_trip_and_averaging(self, tmp_path):
        countries = ("A", "B")
        m1 = np.array([[0.0, 2.0], [4.0, 0.0]])
        m2 = np.array([[0.0, 4.0], [2.0, 0.0]])
        p1, p2 = tmp_path / "e1.csv", tmp_path / "e2.csv"
        write_exposures(countries, m1, str(p1))
        write_exposures(countries, m2, str(p2))
        got_countries, avg = load_exposures([str(p1), str(p2)])
        assert got_countries == countries
        np.testing.assert_allclose(avg, [[0.0, 3.0], [3.0, 0.0]])

    def test_label_mismatch(self, tmp_path):
        p1, p2 = tmp_path / "e1.csv", tmp_path / "e2.csv"
        write_exposures(("A", "B"), np.zeros((2, 2)), str(p1))
        write_exposures(("A", "C"), np.zeros((2, 2)), str(p2))
        with pytest.raises(DataError, match="labels differ"):
            load_exposures([str(p1), str(p2)])

    def test_row_label_mismatch(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text(",A,B\nA,0,1\nX,1,0\n")
        with pytest.raises(DataError, match="row label"):
            load_exposures(str(p))


def three_country_panel():
    metas = (
        meta("A", "EPU"),
        meta("A", "spread"),
        meta("B", "EPU"),
        meta("B", "spread"),
        meta("C", "spread"),
        meta("US", "VIX", role="common"),
    )
    values = np.array(
        [
            [1.0, 10.0, 2.0, 20.0, 30.0, 5.0],
            [4.0, 11.0, 6.0, 21.0, 31.0, 6.0],
        ]
    )
    return tiny_panel(values, metas)


class TestForeignSeries:
    def test_weighted_aggregate_hand_case(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], [[0, 3, 1], [2, 0, 2], [5, 0, 0]])
        spec = CountrySpec(country="A", domestic_vars=("EPU", "spread"), foreign_vars=("spread",), p=1)
        out = foreign_series(p, spec, w)
        np.testing.assert_allclose(out[:, 0], 0.75 * np.array([20.0, 21.0]) + 0.25 * np.array([30.0, 31.0]))

    def test_subset_renormalization(self):
        # C has no EPU, so A's EPU aggregate loads entirely on B
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], [[0, 3, 1], [2, 0, 2], [5, 0, 0]])
        spec = CountrySpec(country="A", domestic_vars=("spread",), foreign_vars=("EPU",), p=1)
        out = foreign_series(p, spec, w)
        np.testing.assert_allclose(out[:, 0], [2.0, 6.0])

    def test_common_series_resolves_by_name(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], np.ones((3, 3)))
        spec = CountrySpec(country="A", domestic_vars=("EPU",), foreign_vars=("VIX",), p=1)
        out = foreign_series(p, spec, w)
        np.testing.assert_allclose(out[:, 0], [5.0, 6.0])

    def test_unresolvable_variable(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], np.ones((3, 3)))
        spec = CountrySpec(country="A", domestic_vars=("EPU",), foreign_vars=("CISS",), p=1)
        with pytest.raises(DataError, match="no counterparty"):
            foreign_series(p, spec, w)

    def test_zero_total_weight(self):
        # B's only weight on a spread holder is zero after C drops out
        p = tiny_panel(
            [[1.0, 2.0, 3.0]],
            (meta("A", "spread"), meta("B", "EPU"), meta("C", "EPU")),
        )
        w = WeightMatrix(("A", "B", "C"), np.array([[0.0, 0.5, 0.5], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]]))
        spec = CountrySpec(country="B", domestic_vars=("EPU",), foreign_vars=("spread",), p=1)
        with pytest.raises(DataError, match="zero total weight"):
            foreign_series(p, spec, w)

    def test_counterpart_weights_order(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], [[0, 3, 1], [2, 0, 2], [5, 0, 0]])
        pairs = counterpart_weights(p, "A", "spread", w)
        assert [c for c, _ in pairs] == ["B", "C"]
        np.testing.assert_allclose([x for _, x in pairs], [0.75, 0.25])


class TestFeedbackWeights:
    def test_aggregated_member_weights(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], [[0, 3, 1], [2, 0, 2], [5, 0, 0]])
        pairs = member_feedback_weights(p, w, ["A", "B"], "EPU")
        # A receives B's weight on A (0.5), B receives A's weight on B (0.75)
        assert [c for c, _ in pairs] == ["A", "B"]
        np.testing.assert_allclose([x for _, x in pairs], [0.5 / 1.25, 0.75 / 1.25])

    def test_missing_everywhere(self):
        p = three_country_panel()
        w = build_weights(["A", "B", "C"], np.ones((3, 3)))
        with pytest.raises(DataError, match="no member country"):
            member_feedback_weights(p, w, ["A", "B"], "CISS")


class TestCountrySpec:
    def test_lag_order_validation(self):
        with pytest.raises(DataError, match="0 <= q <= p"):
            CountrySpec(country="A", domestic_vars=("EPU",), p=1, q=2)

    def test_empty_domestic(self):
        with pytest.raises(DataError, match="empty domestic"):
            CountrySpec(country="A", domestic_vars=())

    def test_json_round_trip(self):
        spec = CountrySpec(country="A", domestic_vars=("EPU", "CISS"), foreign_vars=("spread",), p=2, q=1)
        assert CountrySpec.from_json(spec.to_json()) == spec


class TestDominantSpec:
    def test_feedback_needs_members(self):
        with pytest.raises(DataError, match="no member countries"):
            DominantSpec(label="CB", variables=("X1",), feedback=("EPU",), member_countries=())

    def test_json_round_trip(self):
        spec = DominantSpec(
            label="CB", variables=("X1", "X2"), feedback=("EPU",), member_countries=("A", "B")
        )
        assert DominantSpec.from_json(spec.to_json()) == spec


class TestCountryMenus:
    def build_panel(self):
        metas = (
            meta("DE", "EPU"),
            meta("DE", "CISS"),
            meta("FR", "EPU"),
            meta("FR", "CISS"),
            meta("FR", "spread"),
            meta("PT", "CISS"),
            meta("PT", "spread"),
            meta("UK", "EPU"),
            meta("UK", "CISS"),
            meta("UK", "spread"),
            meta("RU", "EPU"),
            meta("RU", "spread"),
            meta("US", "EPU"),
            meta("US", "spread"),
            meta("US", "VIX"),
            meta("ECB", "CMP", role="dominant-unit"),
            meta("ECB", "UMP", role="dominant-unit"),
        )
        return tiny_panel(np.ones((2, len(metas))), metas)

    def dominant(self):
        return DominantSpec(
            label="ECB",
            variables=("CMP", "UMP"),
            feedback=("EPU",),
            member_countries=("DE", "FR", "PT"),
        )

    def test_member_menus_include_instruments(self):
        p = self.build_panel()
        specs = {
            s.country: s
            for s in country_specs(
                p,
                member_countries=["DE", "FR", "PT"],
                other_eu=["UK"],
                non_eu=["RU"],
                us="US",
                dominant=self.dominant(),
                q_overrides={"DE": 1},
            )
        }
        assert specs["FR"].domestic_vars == ("EPU", "CISS", "spread")
        assert specs["FR"].foreign_vars == ("EPU", "CISS", "spread", "CMP", "UMP", "VIX")
        # DE has no spread series and a deeper foreign lag
        assert specs["DE"].domestic_vars == ("EPU", "CISS")
        assert specs["DE"].q == 1 and specs["FR"].q == 0
        # PT lacks EPU domestically but still sees the foreign aggregate
        assert specs["PT"].domestic_vars == ("CISS", "spread")
        assert "EPU" in specs["PT"].foreign_vars
        assert specs["UK"].foreign_vars == ("EPU", "CISS", "spread", "VIX")
        assert specs["RU"].domestic_vars == ("EPU", "spread")
        assert specs["RU"].foreign_vars == ("spread", "VIX")
        assert specs["US"].domestic_vars == ("EPU", "spread", "VIX")
        assert specs["US"].foreign_vars == ()

    def test_unknown_country_fails(self):
        p = self.build_panel()
        with pytest.raises(DataError, match="none of the menu"):
            country_specs(p, member_countries=["XX"])
