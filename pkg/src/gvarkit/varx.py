"""Country-level VARX estimation by equationwise least squares.

Each country's vector of domestic variables is regressed on an
intercept, its own lags 1..p, the country's foreign aggregates at lags
0..q, and the dominant unit's instruments at lags 0..q. The dominant
unit itself follows the same design with the member feedback aggregates
in place of the foreign block and no common block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dataio import CountrySpec, DominantSpec, Panel, WeightMatrix, foreign_series, split_foreign, validate_spec
from .errors import DataError, NumericalError
from .serialize import mat_from_json, mat_to_json, mats_from_json, mats_to_json

# Relative condition threshold for the normal equations; beyond this the
# design is treated as rank deficient.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class OlsFit:
    """Equationwise least-squares output for one design matrix."""

    coef: np.ndarray        # k x r
    residuals: np.ndarray   # T_eff x k
    rss: np.ndarray         # k
    dof: int                # T_eff - r
    labels: tuple[str, ...]


def ols_fit(y: np.ndarray, z: np.ndarray, labels: tuple[str, ...] | None = None) -> OlsFit:
    """Least squares of every column of y on the common design z.

    Raises when the design is rank deficient, naming the offending
    columns via pivoted QR.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    t_eff, r = z.shape
    if labels is None:
        labels = tuple(f"z{j}" for j in range(r))
    if y.shape[0] != t_eff:
        raise DataError(f"response rows {y.shape[0]} do not match design rows {t_eff}")
    if t_eff <= r:
        raise DataError(f"{t_eff} observations cannot support {r} regressors")
    _, rdiag, piv = scipy.linalg.qr(z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rdiag))
    scale = diag[0] if diag.size else 0.0
    bad = [labels[piv[j]] for j in range(r) if diag[j] <= scale / COND_LIMIT]
    if bad or scale == 0.0:
        raise NumericalError(f"rank-deficient design; collinear column(s): {bad}")
    coef, _, _, _ = np.linalg.lstsq(z, y, rcond=None)
    residuals = y - z @ coef
    rss = np.einsum("ti,ti->i", residuals, residuals)
    return OlsFit(
        coef=coef.T,
        residuals=residuals,
        rss=rss,
        dof=t_eff - r,
        labels=labels,
    )


def build_design(
    domestic: np.ndarray,
    foreign: np.ndarray,
    common: np.ndarray | None,
    p: int,
    q: int,
    domestic_names: tuple[str, ...] = (),
    foreign_names: tuple[str, ...] = (),
    common_names: tuple[str, ...] = (),
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...], tuple[str, ...]]:
    """Stacked regression arrays for one block.

    Returns (y, z, labels, groups) where y holds rows max(p, q)..T-1 of
    the domestic block and z columns are ordered intercept, domestic
    lags 1..p, foreign lags 0..q, common lags 0..q. groups tags each
    column as const, lag, foreign, or common.
    """
    domestic = np.asarray(domestic, dtype=float)
    foreign = np.asarray(foreign, dtype=float)
    if common is None:
        common = np.empty((domestic.shape[0], 0))
    common = np.asarray(common, dtype=float)
    t, k = domestic.shape
    if foreign.shape[0] != t or common.shape[0] != t:
        raise DataError("domestic, foreign, and common blocks must cover the same sample")
    start = max(p, q)
    if t - start <= 0:
        raise DataError(f"sample of {t} observations is too short for lag order {start}")
    if not domestic_names:
        domestic_names = tuple(f"y{j}" for j in range(k))
    if not foreign_names:
        foreign_names = tuple(f"f{j}" for j in range(foreign.shape[1]))
    if not common_names:
        common_names = tuple(f"x{j}" for j in range(common.shape[1]))
    y = domestic[start:]
    cols = [np.ones((t - start, 1))]
    labels = ["const"]
    groups = ["const"]
    for lag in range(1, p + 1):
        cols.append(domestic[start - lag : t - lag])
        labels.extend(f"{n}.l{lag}" for n in domestic_names)
        groups.extend("lag" for _ in domestic_names)
    for lag in range(0, q + 1):
        cols.append(foreign[start - lag : t - lag])
        labels.extend(f"{n}*.l{lag}" for n in foreign_names)
        groups.extend("foreign" for _ in foreign_names)
    for lag in range(0, q + 1):
        cols.append(common[start - lag : t - lag])
        labels.extend(f"{n}.l{lag}" for n in common_names)
        groups.extend("common" for _ in common_names)
    z = np.hstack(cols)
    return y, z, tuple(labels), tuple(groups)


def _unpack(coef: np.ndarray, k: int, m: int, x: int, p: int, q: int):
    """Split a k x r coefficient matrix into intercept and lag blocks."""
    pos = 0
    a = coef[:, pos]
    pos += 1
    b = []
    for _ in range(p):
        b.append(coef[:, pos : pos + k])
        pos += k
    c = []
    for _ in range(q + 1):
        c.append(coef[:, pos : pos + m])
        pos += m
    d = []
    for _ in range(q + 1):
        d.append(coef[:, pos : pos + x])
        pos += x
    return a, tuple(b), tuple(c), tuple(d)


@dataclass(frozen=True)
class VarxEstimate:
    """Estimated country block.

    B holds own-lag matrices 1..p, C the foreign-aggregate matrices
    0..q, D the dominant-instrument matrices 0..q (k x 0 when the
    country sees no instruments).
    """

    country: str
    domestic_vars: tuple[str, ...]
    foreign_vars: tuple[str, ...]
    common_vars: tuple[str, ...]
    p: int
    q: int
    a: np.ndarray
    b: tuple[np.ndarray, ...]
    c: tuple[np.ndarray, ...]
    d: tuple[np.ndarray, ...]
    residuals: np.ndarray
    rss: np.ndarray
    dof: int

    @property
    def k(self) -> int:
        return len(self.domestic_vars)

    @property
    def m(self) -> int:
        return len(self.foreign_vars)

    @property
    def x(self) -> int:
        return len(self.common_vars)

    @property
    def intercept(self) -> np.ndarray:
        return self.a

    def g0_block(self) -> np.ndarray:
        """Contemporaneous block [I, -C0, -D0] over (own, foreign, common)."""
        parts = [np.eye(self.k)]
        parts.append(-self.c[0] if self.c else np.empty((self.k, 0)))
        parts.append(-self.d[0] if self.d else np.empty((self.k, 0)))
        return np.hstack(parts)

    def gj_block(self, j: int) -> np.ndarray:
        """Lag-j block [B_j, C_j, D_j], zero padded beyond each order."""
        if j < 1:
            raise DataError("lag blocks start at j = 1")
        bj = self.b[j - 1] if j <= self.p else np.zeros((self.k, self.k))
        cj = self.c[j] if j <= self.q else np.zeros((self.k, self.m))
        dj = self.d[j] if j <= self.q else np.zeros((self.k, self.x))
        return np.hstack([bj, cj, dj])

    def to_json(self) -> dict:
        return {
            "country": self.country,
            "domestic_vars": list(self.domestic_vars),
            "foreign_vars": list(self.foreign_vars),
            "common_vars": list(self.common_vars),
            "p": self.p,
            "q": self.q,
            "a": mat_to_json(self.a),
            "b": mats_to_json(self.b),
            "c": mats_to_json(self.c),
            "d": mats_to_json(self.d),
            "residuals": mat_to_json(self.residuals),
            "rss": mat_to_json(self.rss),
            "dof": self.dof,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "VarxEstimate":
        return cls(
            country=obj["country"],
            domestic_vars=tuple(obj["domestic_vars"]),
            foreign_vars=tuple(obj["foreign_vars"]),
            common_vars=tuple(obj["common_vars"]),
            p=int(obj["p"]),
            q=int(obj["q"]),
            a=mat_from_json(obj["a"]),
            b=mats_from_json(obj["b"]),
            c=mats_from_json(obj["c"]),
            d=mats_from_json(obj["d"]),
            residuals=mat_from_json(obj["residuals"]),
            rss=mat_from_json(obj["rss"]),
            dof=int(obj["dof"]),
        )


@dataclass(frozen=True)
class DominantEstimate:
    """Estimated dominant-unit block.

    N holds own-lag matrices 1..p and P the feedback matrices 0..q, so
    the unit reacts to member developments both on impact and with a
    lag.
    """

    label: str
    variables: tuple[str, ...]
    feedback: tuple[str, ...]
    p: int
    q: int
    a: np.ndarray
    n: tuple[np.ndarray, ...]
    pfb: tuple[np.ndarray, ...]
    residuals: np.ndarray
    rss: np.ndarray
    dof: int

    @property
    def x(self) -> int:
        return len(self.variables)

    @property
    def f(self) -> int:
        return len(self.feedback)

    @property
    def intercept(self) -> np.ndarray:
        return self.a

    def g0_block(self) -> np.ndarray:
        """Contemporaneous block [I, -P0] over (own, feedback)."""
        p0 = self.pfb[0] if self.pfb else np.empty((self.x, 0))
        return np.hstack([np.eye(self.x), -p0])

    def gj_block(self, j: int) -> np.ndarray:
        if j < 1:
            raise DataError("lag blocks start at j = 1")
        nj = self.n[j - 1] if j <= self.p else np.zeros((self.x, self.x))
        pj = self.pfb[j] if j <= self.q else np.zeros((self.x, self.f))
        return np.hstack([nj, pj])

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "variables": list(self.variables),
            "feedback": list(self.feedback),
            "p": self.p,
            "q": self.q,
            "a": mat_to_json(self.a),
            "n": mats_to_json(self.n),
            "pfb": mats_to_json(self.pfb),
            "residuals": mat_to_json(self.residuals),
            "rss": mat_to_json(self.rss),
            "dof": self.dof,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DominantEstimate":
        return cls(
            label=obj["label"],
            variables=tuple(obj["variables"]),
            feedback=tuple(obj["feedback"]),
            p=int(obj["p"]),
            q=int(obj["q"]),
            a=mat_from_json(obj["a"]),
            n=mats_from_json(obj["n"]),
            pfb=mats_from_json(obj["pfb"]),
            residuals=mat_from_json(obj["residuals"]),
            rss=mat_from_json(obj["rss"]),
            dof=int(obj["dof"]),
        )


def estimate_varx(
    panel: Panel,
    spec: CountrySpec,
    weights: WeightMatrix,
    common: np.ndarray | None = None,
) -> VarxEstimate:
    """Fit one country's VARX block.

    Dominant-unit names in the foreign menu become the common block;
    when `common` is not given their columns are read off the panel.
    """
    validate_spec(spec, panel)
    stars, dom_names = split_foreign(panel, spec)
    domestic = panel.block([(spec.country, n) for n in spec.domestic_vars])
    foreign = foreign_series(panel, spec, weights)
    if dom_names and common is None:
        label = panel.dominant_label()
        common = panel.block([(label, n) for n in dom_names])
    elif not dom_names:
        common = None
    y, z, labels, _ = build_design(
        domestic,
        foreign,
        common,
        spec.p,
        spec.q,
        domestic_names=spec.domestic_vars,
        foreign_names=stars,
        common_names=dom_names,
    )
    fit = ols_fit(y, z, labels)
    a, b, c, d = _unpack(fit.coef, len(spec.domestic_vars), len(stars), len(dom_names), spec.p, spec.q)
    return VarxEstimate(
        country=spec.country,
        domestic_vars=spec.domestic_vars,
        foreign_vars=stars,
        common_vars=dom_names,
        p=spec.p,
        q=spec.q,
        a=a,
        b=b,
        c=c,
        d=d,
        residuals=fit.residuals,
        rss=fit.rss,
        dof=fit.dof,
    )


def estimate_dominant(
    common_panel: np.ndarray,
    feedback: np.ndarray,
    spec: DominantSpec,
) -> DominantEstimate:
    """Fit the dominant unit's block on its instruments and feedback."""
    common_panel = np.asarray(common_panel, dtype=float)
    feedback = np.asarray(feedback, dtype=float)
    if common_panel.ndim != 2 or common_panel.shape[1] != len(spec.variables):
        raise DataError(
            f"dominant block expects {len(spec.variables)} columns, got shape {common_panel.shape}"
        )
    if feedback.ndim != 2 or feedback.shape[1] != len(spec.feedback):
        raise DataError(
            f"feedback block expects {len(spec.feedback)} columns, got shape {feedback.shape}"
        )
    y, z, labels, _ = build_design(
        common_panel,
        feedback,
        None,
        spec.p,
        spec.q,
        domestic_names=spec.variables,
        foreign_names=spec.feedback,
    )
    fit = ols_fit(y, z, labels)
    a, n, pfb, _ = _unpack(fit.coef, len(spec.variables), len(spec.feedback), 0, spec.p, spec.q)
    return DominantEstimate(
        label=spec.label,
        variables=spec.variables,
        feedback=spec.feedback,
        p=spec.p,
        q=spec.q,
        a=a,
        n=n,
        pfb=pfb,
        residuals=fit.residuals,
        rss=fit.rss,
        dof=fit.dof,
    )
