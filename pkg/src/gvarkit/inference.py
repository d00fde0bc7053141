"""Per-equation F-tests for the relevance of regressor blocks.

Each country equation is refit without the block under test; the usual
F statistic compares restricted and unrestricted residual sums of
squares, with the 5 percent critical value from the F distribution at
(dropped columns, T_eff - r_u) degrees of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .dataio import CountrySpec, Panel, WeightMatrix, foreign_series, split_foreign, validate_spec
from .errors import DataError, NumericalError
from .varx import build_design, ols_fit


@dataclass(frozen=True)
class FTestResult:
    """One equation's test of a regressor block."""

    country: str
    equation: str
    tested: str
    f_stat: float
    df_num: int
    df_den: int
    critical_5pct: float
    reject: bool
    level: float


def critical_value(df_num: int, df_den: int, level: float = 0.05) -> float:
    """Upper critical value of the F distribution."""
    if df_num < 1 or df_den < 1:
        raise DataError(f"degrees of freedom ({df_num}, {df_den}) must be positive")
    if not 0.0 < level < 1.0:
        raise DataError(f"level must lie in (0, 1), got {level}")
    return float(scipy.stats.f.ppf(1.0 - level, df_num, df_den))


def _block_test(
    panel: Panel,
    spec: CountrySpec,
    weights: WeightMatrix,
    common: np.ndarray | None,
    drop_group: str,
    tested: str,
    level: float,
) -> list[FTestResult]:
    validate_spec(spec, panel)
    stars, dom_names = split_foreign(panel, spec)
    domestic = panel.block([(spec.country, n) for n in spec.domestic_vars])
    foreign = foreign_series(panel, spec, weights)
    if dom_names and common is None:
        label = panel.dominant_label()
        common = panel.block([(label, n) for n in dom_names])
    elif not dom_names:
        common = None
    y, z, labels, groups = build_design(
        domestic,
        foreign,
        common,
        spec.p,
        spec.q,
        domestic_names=spec.domestic_vars,
        foreign_names=stars,
        common_names=dom_names,
    )
    keep = [j for j, g in enumerate(groups) if g != drop_group]
    dropped = len(groups) - len(keep)
    if dropped == 0:
        raise DataError(f"country {spec.country} has no {tested} regressors to test")
    fit_u = ols_fit(y, z, labels)
    fit_r = ols_fit(y, z[:, keep], tuple(labels[j] for j in keep))
    crit = critical_value(dropped, fit_u.dof, level)
    out = []
    for i, name in enumerate(spec.domestic_vars):
        diff = fit_r.rss[i] - fit_u.rss[i]
        if diff < -1e-8 * max(fit_u.rss[i], 1.0):
            raise NumericalError(
                f"restricted fit beats unrestricted for {spec.country}.{name}"
            )
        f_stat = max(diff, 0.0) / dropped / (fit_u.rss[i] / fit_u.dof)
        out.append(
            FTestResult(
                country=spec.country,
                equation=name,
                tested=tested,
                f_stat=float(f_stat),
                df_num=dropped,
                df_den=fit_u.dof,
                critical_5pct=crit,
                reject=bool(f_stat > crit),
                level=level,
            )
        )
    return out


def f_test_common(
    panel: Panel,
    spec: CountrySpec,
    weights: WeightMatrix,
    common: np.ndarray | None = None,
    level: float = 0.05,
) -> list[FTestResult]:
    """Test whether the dominant unit's instruments enter a country's equations."""
    return _block_test(panel, spec, weights, common, "common", "common", level)


def f_test_foreign(
    panel: Panel,
    spec: CountrySpec,
    weights: WeightMatrix,
    common: np.ndarray | None = None,
    level: float = 0.05,
) -> list[FTestResult]:
    """Test whether the foreign aggregates enter a country's equations."""
    return _block_test(panel, spec, weights, common, "foreign", "foreign", level)
