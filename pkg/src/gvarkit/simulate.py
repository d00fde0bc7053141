"""Synthetic multi-country systems with a known structural factorization.

make_dgp draws a stable coefficient set and plants an impact matrix
whose target columns satisfy the magnitude restrictions with a chosen
margin, so estimation, identification, and inference can be checked
against ground truth. simulate generates a monthly panel from the
reduced form after a burn-in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataio import (
    UNCERTAINTY_VARS,
    CountrySpec,
    DominantSpec,
    Panel,
    SeriesMeta,
    WeightMatrix,
    build_weights,
    month_range,
)
from .errors import DataError, NumericalError
from .gvar import (
    GlobalIndex,
    GvarSolution,
    build_index,
    dominant_link,
    link_matrix,
    solve,
    stack,
)
from .ident import IdentTarget, check_magnitude
from .serialize import mat_from_json, mat_to_json
from .varx import DominantEstimate, VarxEstimate

MAX_STABILIZE = 100
MAX_PLANT = 100
STABLE_RADIUS = 0.95
BURN_IN = 200


@dataclass(frozen=True)
class SyntheticDgp:
    """A fully known data generating process."""

    specs: tuple[CountrySpec, ...]
    dominant_spec: DominantSpec | None
    weights: WeightMatrix
    index: GlobalIndex
    blocks: tuple
    links: tuple
    solution: GvarSolution
    s_true: np.ndarray
    target_country: str
    margin: float
    seed: int

    @property
    def n_variables(self) -> int:
        return len(self.index)

    def target(self, scaling: str = "standardized") -> IdentTarget:
        pos = (
            self.index.index_of(self.target_country, UNCERTAINTY_VARS[0]),
            self.index.index_of(self.target_country, UNCERTAINTY_VARS[1]),
        )
        return IdentTarget(country=self.target_country, shock_positions=pos, scaling=scaling)

    def true_irf_columns(self) -> np.ndarray:
        """True impact columns of the two target shocks."""
        a, b = self.target().shock_positions
        return self.s_true[:, [a, b]]

    def to_json(self) -> dict:
        return {
            "specs": [s.to_json() for s in self.specs],
            "dominant_spec": None
            if self.dominant_spec is None
            else self.dominant_spec.to_json(),
            "weights": {
                "countries": list(self.weights.countries),
                "w": mat_to_json(self.weights.w),
            },
            "blocks": [b.to_json() for b in self.blocks],
            "solution": self.solution.to_json(),
            "s_true": mat_to_json(self.s_true),
            "target_country": self.target_country,
            "margin": self.margin,
            "seed": self.seed,
        }


def _var_names(k_vars: int) -> tuple[str, ...]:
    if k_vars < 2:
        raise DataError("each country needs at least the two uncertainty variables")
    names = list(UNCERTAINTY_VARS)
    if k_vars >= 3:
        names.append("spread")
    for j in range(4, k_vars + 1):
        names.append(f"V{j}")
    return tuple(names)


def _dummy_panel(index: GlobalIndex, dominant_label: str | None) -> Panel:
    """One-row panel used only to resolve link-matrix availability."""
    metas = tuple(
        SeriesMeta(
            country=c,
            name=n,
            role="dominant-unit" if c == dominant_label else "domestic",
        )
        for c, n in index.entries
    )
    return Panel(("2000-01",), np.zeros((1, len(index))), metas)


def _empty_residual_fields(k: int) -> dict:
    return {"residuals": np.zeros((0, k)), "rss": np.zeros(k), "dof": 0}


def _plant_impact(
    rng: np.random.Generator,
    owners: tuple[str, ...],
    positions: tuple[int, int],
    margin: float,
    mix: str,
) -> np.ndarray:
    """Impact matrix whose target columns dominate with the given margin.

    Off-target entries of the two shock columns are shrunk iteratively
    until the standardized own impact exceeds every other standardized
    impact by at least the margin.
    """
    k_global = len(owners)
    diag = rng.uniform(0.8, 1.2, size=k_global)
    if mix == "diagonal":
        return np.diag(diag)
    s = 0.2 * rng.standard_normal((k_global, k_global))
    # cross-country loadings enter at a fraction of the domestic scale, so
    # each shock stays primarily a story about its own country
    same = np.array([[a == b for b in owners] for a in owners])
    s[~same] *= 0.3
    s[np.arange(k_global), np.arange(k_global)] = diag
    for col in positions:
        s[col, col] = abs(s[col, col])
    for _ in range(MAX_PLANT):
        sig = np.sqrt(np.diag(s @ s.T))
        done = True
        for col in positions:
            own = abs(s[col, col]) / sig[col]
            for row in range(k_global):
                if row == col:
                    continue
                other = abs(s[row, col]) / sig[row]
                if other * margin >= own:
                    s[row, col] *= 0.95 * own / (margin * max(other, 1e-300))
                    done = False
        if done:
            sig = np.sqrt(np.diag(s @ s.T))
            for col in positions:
                own = abs(s[col, col]) / sig[col]
                others = np.abs(s[:, col]) / sig
                others[col] = 0.0
                if others.max() * margin >= own:
                    done = False
        if done:
            return s
    raise NumericalError(f"could not plant a margin-{margin} impact matrix")


def make_dgp(
    n_countries: int = 3,
    k_vars: int = 2,
    p: int = 2,
    q: int = 1,
    seed: int = 0,
    margin: float = 2.0,
    x_common: int = 0,
    coupling: float = 0.1,
    common_strength: float = 0.15,
    feedback_vars: tuple[str, ...] = (),
    mix: str = "dense",
    target_country: str | None = None,
) -> SyntheticDgp:
    """Draw a stable synthetic system with planted identification structure.

    coupling scales the foreign-aggregate loadings (zero gives a system
    with no cross-country spillover channel); common_strength does the
    same for the dominant unit's instruments. mix="diagonal" makes the
    structural impact matrix diagonal, so blocks are contemporaneously
    uncorrelated.
    """
    if n_countries < 2:
        raise DataError("need at least two countries for foreign aggregates")
    if not (math.isfinite(margin) and margin >= 1.0):
        raise DataError(f"margin must be a finite value >= 1, got {margin}")
    if mix not in ("dense", "diagonal"):
        raise DataError(f"unknown mix {mix!r}")
    rng = np.random.default_rng(seed)
    countries = tuple(f"C{i + 1}" for i in range(n_countries))
    names = _var_names(k_vars)
    exposures = rng.uniform(0.5, 1.5, size=(n_countries, n_countries))
    np.fill_diagonal(exposures, 0.0)
    weights = build_weights(countries, exposures)
    dominant_spec = None
    if x_common > 0:
        dominant_spec = DominantSpec(
            label="CB",
            variables=tuple(f"X{j + 1}" for j in range(x_common)),
            feedback=tuple(feedback_vars),
            member_countries=countries if feedback_vars else (),
            p=p,
            q=q,
        )
    foreign_menu = names + (dominant_spec.variables if dominant_spec else ())
    specs = tuple(
        CountrySpec(country=c, domestic_vars=names, foreign_vars=foreign_menu, p=p, q=q)
        for c in countries
    )
    index = build_index(specs, dominant_spec)
    k = len(names)
    m = len(names)
    x = x_common

    def country_coefs() -> dict:
        b = []
        for j in range(1, p + 1):
            lag = 0.04 * rng.standard_normal((k, k))
            lag[np.arange(k), np.arange(k)] = rng.uniform(0.15, 0.4, size=k) / j
            b.append(lag)
        c = tuple(
            coupling / (j + 1) * rng.standard_normal((k, m)) for j in range(q + 1)
        )
        d = tuple(
            common_strength / (j + 1) * rng.standard_normal((k, x)) for j in range(q + 1)
        )
        return {"b": tuple(b), "c": c, "d": d}

    raw = [country_coefs() for _ in countries]
    intercepts = [0.05 * rng.standard_normal(k) for _ in countries]
    dom_raw = None
    dom_intercept = None
    if dominant_spec is not None:
        f = len(dominant_spec.feedback)
        n_mats = []
        for j in range(1, p + 1):
            lag = 0.03 * rng.standard_normal((x, x))
            lag[np.arange(x), np.arange(x)] = rng.uniform(0.15, 0.35, size=x) / j
            n_mats.append(lag)
        pfb = tuple(0.1 * rng.standard_normal((x, f)) for _ in range(q + 1))
        dom_raw = {"n": tuple(n_mats), "pfb": pfb}
        dom_intercept = 0.05 * rng.standard_normal(x)

    def build_blocks(shrink: float) -> tuple:
        blocks = []
        for spec, coefs, a in zip(specs, raw, intercepts):
            blocks.append(
                VarxEstimate(
                    country=spec.country,
                    domestic_vars=names,
                    foreign_vars=names,
                    common_vars=dominant_spec.variables if dominant_spec else (),
                    p=p,
                    q=q,
                    a=a,
                    b=tuple(shrink * bj for bj in coefs["b"]),
                    c=tuple(
                        (shrink if j else 1.0) * cj for j, cj in enumerate(coefs["c"])
                    ),
                    d=tuple(
                        (shrink if j else 1.0) * dj for j, dj in enumerate(coefs["d"])
                    ),
                    **_empty_residual_fields(k),
                )
            )
        if dominant_spec is not None:
            blocks.append(
                DominantEstimate(
                    label=dominant_spec.label,
                    variables=dominant_spec.variables,
                    feedback=dominant_spec.feedback,
                    p=p,
                    q=q,
                    a=dom_intercept,
                    n=tuple(shrink * nj for nj in dom_raw["n"]),
                    pfb=tuple(
                        (shrink if j else 1.0) * pj
                        for j, pj in enumerate(dom_raw["pfb"])
                    ),
                    **_empty_residual_fields(x),
                )
            )
        return tuple(blocks)

    dummy = _dummy_panel(index, dominant_spec.label if dominant_spec else None)
    links = [link_matrix(spec, weights, index, dummy) for spec in specs]
    if dominant_spec is not None:
        links.append(dominant_link(dominant_spec, weights, index, dummy))
    links = tuple(links)
    shrink = 1.0
    for _ in range(MAX_STABILIZE):
        blocks = build_blocks(shrink)
        g0, big_g0, big_g = stack(blocks, links)
        solution = solve(g0, big_g0, big_g)
        if solution.max_modulus < STABLE_RADIUS:
            break
        shrink *= 0.9
    else:
        raise NumericalError(
            f"could not stabilize the synthetic system below radius {STABLE_RADIUS}"
        )
    target = target_country or countries[0]
    positions = (
        index.index_of(target, UNCERTAINTY_VARS[0]),
        index.index_of(target, UNCERTAINTY_VARS[1]),
    )
    s_true = _plant_impact(rng, tuple(c for c, _ in index.entries), positions, margin, mix)
    sigmas = np.sqrt(np.diag(s_true @ s_true.T))
    check = IdentTarget(country=target, shock_positions=positions, scaling="standardized")
    # check_magnitude reads column j against row shock_positions[j], so
    # hand it the two planted columns rather than the full matrix
    if not check_magnitude(s_true[:, list(positions)], check, sigmas):
        raise NumericalError("planted impact matrix fails its own restriction")
    omega_u = s_true @ s_true.T
    solution = solve(g0, big_g0, big_g, omega_u)
    return SyntheticDgp(
        specs=specs,
        dominant_spec=dominant_spec,
        weights=weights,
        index=index,
        blocks=blocks,
        links=links,
        solution=solution,
        s_true=s_true,
        target_country=target,
        margin=margin,
        seed=seed,
    )


def simulate(
    dgp: SyntheticDgp,
    n_periods: int,
    seed: int | np.random.Generator,
    burn_in: int = BURN_IN,
    start: str = "2003-01",
) -> Panel:
    """Monthly panel drawn from the DGP's reduced form.

    The recursion starts at zero, runs burn_in steps to wash out the
    initial state, and keeps the last n_periods rows.
    """
    if n_periods < 50:
        raise DataError(f"simulation needs at least 50 periods, got {n_periods}")
    if burn_in < 0:
        raise DataError("burn_in must be nonnegative")
    rng = np.random.default_rng(seed)
    sol = dgp.solution
    k = len(dgp.index)
    p = len(sol.H)
    total = burn_in + n_periods
    eps = rng.standard_normal((total, k))
    shocks = eps @ dgp.s_true.T
    path = np.zeros((p + total, k))
    for t in range(total):
        row = sol.h0 + shocks[t]
        for j in range(1, p + 1):
            row = row + sol.H[j - 1] @ path[p + t - j]
        path[p + t] = row
    values = path[p + burn_in :]
    label = dgp.dominant_spec.label if dgp.dominant_spec else None
    metas = tuple(
        SeriesMeta(
            country=c,
            name=n,
            role="dominant-unit" if c == label else "domestic",
        )
        for c, n in dgp.index.entries
    )
    return Panel(month_range(start, n_periods), values, metas)
