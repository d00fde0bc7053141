"""Stacking country blocks into one global system and solving it.

Each country's estimated block is premultiplied by a link matrix that
maps the global vector onto (own variables, foreign aggregates, common
instruments). Stacking gives G0 Y_t = g0 + sum_j G_j Y_{t-j} + v_t;
inverting G0 yields the reduced form used for dynamics and forecasts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataio import (
    CountrySpec,
    DominantSpec,
    Panel,
    WeightMatrix,
    counterpart_weights,
    member_feedback_weights,
    split_foreign,
)
from .errors import DataError, NumericalError
from .serialize import mat_from_json, mat_to_json, mats_from_json, mats_to_json
from .varx import (
    COND_LIMIT,
    DominantEstimate,
    VarxEstimate,
    estimate_dominant,
    estimate_varx,
)
from . import dataio


@dataclass(frozen=True)
class GlobalIndex:
    """Ordered (country, name) entries of the stacked global vector."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        entries = tuple((c, n) for c, n in self.entries)
        if len(set(entries)) != len(entries):
            raise DataError("duplicate entry in global index")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_pos", {e: i for i, e in enumerate(entries)})

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, country: str, name: str) -> int:
        try:
            return self._pos[(country, name)]
        except KeyError:
            raise DataError(f"{country}.{name} is not part of the global vector") from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"{c}.{n}" for c, n in self.entries)


def build_index(
    specs: Sequence[CountrySpec], dominant: DominantSpec | None = None
) -> GlobalIndex:
    """Global ordering: country blocks in given order, dominant unit last."""
    entries = [(s.country, n) for s in specs for n in s.domestic_vars]
    if dominant is not None:
        entries.extend((dominant.label, n) for n in dominant.variables)
    return GlobalIndex(tuple(entries))


@dataclass(frozen=True)
class LinkMatrix:
    """Rows mapping the global vector onto one block's regressand menu.

    The first n_selectors rows pick the block's own variables; the
    remaining rows hold nonnegative weights summing to one (foreign
    aggregates, common-instrument selectors, or feedback aggregates).
    """

    label: str
    matrix: np.ndarray
    n_selectors: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2:
            raise DataError("link matrix must be 2-dimensional")
        if not 0 <= self.n_selectors <= m.shape[0]:
            raise DataError("selector count outside link matrix rows")
        top = m[: self.n_selectors]
        if top.size and (
            np.any((top != 0.0) & (top != 1.0)) or np.any(top.sum(axis=1) != 1.0)
        ):
            raise DataError(f"link for {self.label} has a non-selector top row")
        rest = m[self.n_selectors :]
        if rest.size and (
            np.any(rest < 0) or np.any(np.abs(rest.sum(axis=1) - 1.0) > 1e-9)
        ):
            raise DataError(f"link for {self.label} has a weight row not summing to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def link_matrix(
    spec: CountrySpec,
    weights: WeightMatrix,
    index: GlobalIndex,
    panel: Panel,
) -> LinkMatrix:
    """Selector and weight rows for one country block.

    Row order matches the block's regressand menu: own variables, then
    starred aggregates in menu order, then dominant instruments.
    """
    k_global = len(index)
    stars, dom_names = split_foreign(panel, spec)
    rows = []
    for name in spec.domestic_vars:
        row = np.zeros(k_global)
        row[index.index_of(spec.country, name)] = 1.0
        rows.append(row)
    n_selectors = len(rows)
    for name in stars:
        row = np.zeros(k_global)
        for h, w in counterpart_weights(panel, spec.country, name, weights):
            row[index.index_of(h, name)] = w
        rows.append(row)
    label = panel.dominant_label()
    for name in dom_names:
        row = np.zeros(k_global)
        row[index.index_of(label, name)] = 1.0
        rows.append(row)
    return LinkMatrix(label=spec.country, matrix=np.vstack(rows), n_selectors=n_selectors)


def dominant_link(
    spec: DominantSpec,
    weights: WeightMatrix,
    index: GlobalIndex,
    panel: Panel,
) -> LinkMatrix:
    """Selector rows for the instruments plus member-weighted feedback rows."""
    k_global = len(index)
    rows = []
    for name in spec.variables:
        row = np.zeros(k_global)
        row[index.index_of(spec.label, name)] = 1.0
        rows.append(row)
    n_selectors = len(rows)
    for name in spec.feedback:
        row = np.zeros(k_global)
        for h, w in member_feedback_weights(panel, weights, spec.member_countries, name):
            row[index.index_of(h, name)] = w
        rows.append(row)
    return LinkMatrix(label=spec.label, matrix=np.vstack(rows), n_selectors=n_selectors)


def stack(
    blocks: Sequence[VarxEstimate | DominantEstimate],
    links: Sequence[LinkMatrix],
) -> tuple[np.ndarray, np.ndarray, tuple[np.ndarray, ...]]:
    """Assemble the stacked structural system.

    Returns (g0, G0, G) where row blocks follow the order of `blocks`
    and every lag matrix is padded out to the largest lag order present.
    """
    if len(blocks) != len(links):
        raise DataError(f"{len(blocks)} blocks but {len(links)} link matrices")
    if not blocks:
        raise DataError("nothing to stack")
    k_global = links[0].matrix.shape[1]
    p_global = max(max(b.p, b.q) for b in blocks)
    g0_rows = []
    lag_rows: list[list[np.ndarray]] = [[] for _ in range(p_global)]
    intercepts = []
    for block, link in zip(blocks, links):
        own = block.g0_block()
        if own.shape[1] != link.matrix.shape[0]:
            raise DataError(
                f"block {link.label} has {own.shape[1]} regressand columns but "
                f"link supplies {link.matrix.shape[0]} rows"
            )
        g0_rows.append(own @ link.matrix)
        for j in range(1, p_global + 1):
            lag_rows[j - 1].append(block.gj_block(j) @ link.matrix)
        intercepts.append(np.atleast_1d(block.intercept))
    g0 = np.concatenate(intercepts)
    big_g0 = np.vstack(g0_rows)
    if big_g0.shape != (k_global, k_global):
        raise DataError(
            f"stacked system is {big_g0.shape}, expected square of size {k_global}"
        )
    big_g = tuple(np.vstack(rows) for rows in lag_rows)
    return g0, big_g0, big_g


@dataclass(frozen=True)
class GvarSolution:
    """Structural stacking and its reduced form.

    H[j] solves G0 H[j] = G[j]; h0 solves G0 h0 = g0. Eigenvalues come
    from the companion matrix of the reduced form.
    """

    g0: np.ndarray
    G0: np.ndarray
    G: tuple[np.ndarray, ...]
    h0: np.ndarray
    H: tuple[np.ndarray, ...]
    omega_u: np.ndarray | None
    eigenvalues: np.ndarray
    max_modulus: float

    def __post_init__(self) -> None:
        scale = max(np.abs(self.G0).max(), 1.0)
        for j, (gj, hj) in enumerate(zip(self.G, self.H), start=1):
            err = np.abs(self.G0 @ hj - gj).max()
            if err > 1e-8 * scale:
                raise NumericalError(
                    f"reduced form fails to recompose at lag {j} (error {err:.3e})"
                )

    @property
    def n_variables(self) -> int:
        return self.G0.shape[0]

    @property
    def p(self) -> int:
        return len(self.H)

    @property
    def stable(self) -> bool:
        return self.max_modulus < 1.0

    def to_json(self) -> dict:
        return {
            "g0": mat_to_json(self.g0),
            "G0": mat_to_json(self.G0),
            "G": mats_to_json(self.G),
            "h0": mat_to_json(self.h0),
            "H": mats_to_json(self.H),
            "omega_u": None if self.omega_u is None else mat_to_json(self.omega_u),
            "eigenvalues_re": mat_to_json(self.eigenvalues.real),
            "eigenvalues_im": mat_to_json(self.eigenvalues.imag),
            "max_modulus": self.max_modulus,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GvarSolution":
        eig = mat_from_json(obj["eigenvalues_re"]) + 1j * mat_from_json(obj["eigenvalues_im"])
        return cls(
            g0=mat_from_json(obj["g0"]),
            G0=mat_from_json(obj["G0"]),
            G=mats_from_json(obj["G"]),
            h0=mat_from_json(obj["h0"]),
            H=mats_from_json(obj["H"]),
            omega_u=None if obj.get("omega_u") is None else mat_from_json(obj["omega_u"]),
            eigenvalues=eig,
            max_modulus=float(obj["max_modulus"]),
        )


def solve(
    g0: np.ndarray,
    big_g0: np.ndarray,
    big_g: Sequence[np.ndarray],
    omega_u: np.ndarray | None = None,
) -> GvarSolution:
    """Reduced form of the stacked system.

    Refuses ill-conditioned contemporaneous matrices instead of
    returning garbage.
    """
    big_g0 = np.asarray(big_g0, dtype=float)
    cond = np.linalg.cond(big_g0)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise NumericalError(
            f"contemporaneous matrix is singular or ill conditioned (cond {cond:.3e})"
        )
    h0 = np.linalg.solve(big_g0, g0)
    big_h = tuple(np.linalg.solve(big_g0, gj) for gj in big_g)
    eig = companion_eigenvalues(big_h)
    return GvarSolution(
        g0=np.asarray(g0, dtype=float),
        G0=big_g0,
        G=tuple(np.asarray(g, dtype=float) for g in big_g),
        h0=h0,
        H=big_h,
        omega_u=omega_u,
        eigenvalues=eig.eigenvalues,
        max_modulus=eig.max_modulus,
    )


@dataclass(frozen=True)
class CompanionSpectrum:
    eigenvalues: np.ndarray
    max_modulus: float

    @property
    def stable(self) -> bool:
        return self.max_modulus < 1.0


def companion_matrix(big_h: Sequence[np.ndarray]) -> np.ndarray:
    """Companion form of the reduced-form lag matrices."""
    big_h = [np.asarray(h, dtype=float) for h in big_h]
    if not big_h:
        raise DataError("no lag matrices")
    k = big_h[0].shape[0]
    p = len(big_h)
    comp = np.zeros((k * p, k * p))
    comp[:k] = np.hstack(big_h)
    if p > 1:
        comp[k:, : k * (p - 1)] = np.eye(k * (p - 1))
    return comp


def companion_eigenvalues(big_h: Sequence[np.ndarray]) -> CompanionSpectrum:
    eig = np.linalg.eigvals(companion_matrix(big_h))
    order = np.argsort(-np.abs(eig))
    eig = eig[order]
    return CompanionSpectrum(eigenvalues=eig, max_modulus=float(np.abs(eig[0])))


def reduced_residuals(big_g0: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Map structural residual rows v_t through G0^{-1}."""
    return np.linalg.solve(big_g0, np.asarray(v, dtype=float).T).T


def residual_covariance(u: np.ndarray, ddof: int = 0) -> np.ndarray:
    """Sample covariance of residual rows with divisor T_eff - ddof."""
    u = np.asarray(u, dtype=float)
    t_eff, k = u.shape
    if t_eff <= k:
        raise DataError(f"covariance of {k} series needs more than {t_eff} observations")
    centered = u - u.mean(axis=0)
    return centered.T @ centered / (t_eff - ddof)


def cross_correlation_stats(omega: np.ndarray) -> tuple[float, float]:
    """Largest and mean absolute off-diagonal correlation implied by omega."""
    omega = np.asarray(omega, dtype=float)
    sd = np.sqrt(np.diag(omega))
    corr = omega / np.outer(sd, sd)
    off = corr[~np.eye(omega.shape[0], dtype=bool)]
    if off.size == 0:
        return 0.0, 0.0
    return float(np.abs(off).max()), float(np.abs(off).mean())


@dataclass(frozen=True)
class AutocorrResult:
    """Per-series residual autocorrelations with a two-sigma band."""

    acf: np.ndarray     # (max_lag + 1) x K, lag 0 first
    band: float         # 2 / sqrt(T_eff)


def residual_autocorrelation(residuals: np.ndarray, max_lag: int) -> AutocorrResult:
    u = np.asarray(residuals, dtype=float)
    t_eff = u.shape[0]
    if max_lag < 1 or max_lag >= t_eff / 4:
        raise DataError(f"max_lag {max_lag} must lie in [1, T_eff / 4)")
    centered = u - u.mean(axis=0)
    c0 = np.einsum("ti,ti->i", centered, centered) / t_eff
    acf = np.ones((max_lag + 1, u.shape[1]))
    for lag in range(1, max_lag + 1):
        cl = np.einsum("ti,ti->i", centered[lag:], centered[:-lag]) / t_eff
        acf[lag] = cl / c0
    return AutocorrResult(acf=acf, band=float(2.0 / np.sqrt(t_eff)))


@dataclass(frozen=True)
class GvarModel:
    """Everything the downstream stages need from one estimation pass."""

    index: GlobalIndex
    specs: tuple[CountrySpec, ...]
    dominant_spec: DominantSpec | None
    weights: WeightMatrix
    estimates: tuple[VarxEstimate, ...]
    dominant: DominantEstimate | None
    links: tuple[LinkMatrix, ...]
    solution: GvarSolution
    v: np.ndarray               # structural residuals, common window
    u: np.ndarray               # reduced-form residuals, common window
    dates: tuple[str, ...]      # dates of the common residual window
    panel: Panel | None = None  # modeled subpanel, absent after deserialization

    @property
    def p_global(self) -> int:
        return len(self.solution.H)

    def blocks(self) -> tuple:
        out: tuple = tuple(self.estimates)
        if self.dominant is not None:
            out = out + (self.dominant,)
        return out

    def global_data(self) -> np.ndarray:
        if self.panel is None:
            raise DataError("model was loaded without its panel")
        return self.panel.block(list(self.index.entries))

    def to_json(self) -> dict:
        return {
            "index": [list(e) for e in self.index.entries],
            "specs": [s.to_json() for s in self.specs],
            "dominant_spec": None if self.dominant_spec is None else self.dominant_spec.to_json(),
            "weights": {
                "countries": list(self.weights.countries),
                "w": mat_to_json(self.weights.w),
            },
            "estimates": [e.to_json() for e in self.estimates],
            "dominant": None if self.dominant is None else self.dominant.to_json(),
            "links": [
                {
                    "label": l.label,
                    "matrix": mat_to_json(l.matrix),
                    "n_selectors": l.n_selectors,
                }
                for l in self.links
            ],
            "solution": self.solution.to_json(),
            "v": mat_to_json(self.v),
            "u": mat_to_json(self.u),
            "dates": list(self.dates),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GvarModel":
        dominant_spec = obj.get("dominant_spec")
        dominant = obj.get("dominant")
        return cls(
            index=GlobalIndex(tuple(tuple(e) for e in obj["index"])),
            specs=tuple(CountrySpec.from_json(s) for s in obj["specs"]),
            dominant_spec=None if dominant_spec is None else DominantSpec.from_json(dominant_spec),
            weights=WeightMatrix(
                tuple(obj["weights"]["countries"]), mat_from_json(obj["weights"]["w"])
            ),
            estimates=tuple(VarxEstimate.from_json(e) for e in obj["estimates"]),
            dominant=None if dominant is None else DominantEstimate.from_json(dominant),
            links=tuple(
                LinkMatrix(
                    label=l["label"],
                    matrix=mat_from_json(l["matrix"]),
                    n_selectors=int(l["n_selectors"]),
                )
                for l in obj["links"]
            ),
            solution=GvarSolution.from_json(obj["solution"]),
            v=mat_from_json(obj["v"]),
            u=mat_from_json(obj["u"]),
            dates=tuple(obj["dates"]),
        )


def estimate_gvar(
    panel: Panel,
    specs: Sequence[CountrySpec],
    weights: WeightMatrix,
    dominant: DominantSpec | None = None,
) -> GvarModel:
    """Estimate every block, stack, and solve.

    The panel is first restricted to the modeled series so foreign
    aggregates and link matrices are built from exactly the global
    vector. Residual moments use the common trailing window of length
    T - max_i max(p_i, q_i).
    """
    pending = [
        m.label for m in panel.meta if m.transform != "none" and not m.applied
    ]
    if pending:
        raise DataError(f"apply transforms before estimation (pending: {pending})")
    if not specs:
        raise DataError("no country specs given")
    index = build_index(specs, dominant)
    panel_m = panel.select(list(index.entries))
    estimates = tuple(estimate_varx(panel_m, spec, weights) for spec in specs)
    links = [link_matrix(spec, weights, index, panel_m) for spec in specs]
    dominant_est = None
    if dominant is not None:
        feedback = dataio.feedback_series(panel_m, dominant, weights)
        block = panel_m.block([(dominant.label, n) for n in dominant.variables])
        dominant_est = estimate_dominant(block, feedback, dominant)
        links.append(dominant_link(dominant, weights, index, panel_m))
    blocks: tuple = estimates if dominant_est is None else estimates + (dominant_est,)
    g0, big_g0, big_g = stack(blocks, links)
    p_global = max(max(b.p, b.q) for b in blocks)
    t_eff = panel_m.n_periods - p_global
    v = np.hstack([b.residuals[-t_eff:] for b in blocks])
    u = reduced_residuals(big_g0, v)
    omega_u = residual_covariance(u)
    solution = solve(g0, big_g0, big_g, omega_u)
    return GvarModel(
        index=index,
        specs=tuple(specs),
        dominant_spec=dominant,
        weights=weights,
        estimates=estimates,
        dominant=dominant_est,
        links=tuple(links),
        solution=solution,
        v=v,
        u=u,
        dates=panel_m.dates[-t_eff:],
        panel=panel_m,
    )
