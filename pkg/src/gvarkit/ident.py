"""Identification of paired uncertainty shocks by magnitude restrictions.

The reduced-form covariance is factored as S = chol(omega) Q_tilde with
Q_tilde orthogonal. Candidate rotations combine a random 2x2 block over
the target country's two uncertainty variables (identity elsewhere)
with a Cayley-transform perturbation of the whole space. A candidate is
kept when, in each target shock's column of S, the own variable's
impact strictly dominates every other variable's impact in absolute
value. Accepted draws carry the target shocks in columns 0 and 1,
signed so the own-variable impact is positive.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, IdentificationError, NumericalError
from .gvar import GlobalIndex
from .dataio import UNCERTAINTY_VARS

log = logging.getLogger(__name__)

SCALINGS = ("standardized", "raw")
SCHEMES = ("block", "multi", "naive")


@dataclass(frozen=True)
class IdentTarget:
    """Which two variables carry the shocks, and how impacts are compared.

    shock_positions give the rows of the two uncertainty variables in
    whatever ordering the S matrix at hand uses; column j of S is
    matched against row shock_positions[j]. Standardized scaling
    divides each row of |S| by that variable's residual standard
    deviation before comparison; raw compares absolute impacts as is.
    """

    country: str
    shock_positions: tuple[int, int]
    scaling: str = "standardized"

    def __post_init__(self) -> None:
        a, b = self.shock_positions
        if a == b or a < 0 or b < 0:
            raise DataError(f"target positions {self.shock_positions} must be distinct")
        if self.scaling not in SCALINGS:
            raise DataError(f"unknown scaling {self.scaling!r}")


def target_for(
    index: GlobalIndex,
    country: str,
    names: Sequence[str] = UNCERTAINTY_VARS,
    scaling: str = "standardized",
) -> IdentTarget:
    """Locate a country's uncertainty pair in the global ordering."""
    if len(names) != 2:
        raise DataError(f"a target needs exactly two variables, got {list(names)}")
    pos = (index.index_of(country, names[0]), index.index_of(country, names[1]))
    return IdentTarget(country=country, shock_positions=pos, scaling=scaling)


def uncertainty_pairs(
    index: GlobalIndex, names: Sequence[str] = UNCERTAINTY_VARS
) -> list[tuple[int, int]]:
    """Position pairs of every country carrying both uncertainty series."""
    by_country: dict[str, dict[str, int]] = {}
    for i, (c, n) in enumerate(index.entries):
        if n in names:
            by_country.setdefault(c, {})[n] = i
    pairs = []
    for c, found in by_country.items():
        if len(found) == 2:
            pairs.append((found[names[0]], found[names[1]]))
    return pairs


def chol_lower(omega: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor after forcing exact symmetry."""
    omega = np.asarray(omega, dtype=float)
    sym = 0.5 * (omega + omega.T)
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        smallest = float(np.linalg.eigvalsh(sym)[0])
        raise NumericalError(
            f"covariance is not positive definite (smallest eigenvalue {smallest:.3e})"
        ) from None


def draw_block_q(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform 2x2 orthogonal matrix.

    QR of a standard normal matrix with the R diagonal forced positive;
    without the sign fix the distribution is not uniform.
    """
    a = rng.standard_normal((2, 2))
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def assemble_q(q_block: np.ndarray, k: int, target: IdentTarget) -> np.ndarray:
    """Embed a 2x2 block at the target positions of a K x K identity."""
    q_block = np.asarray(q_block, dtype=float)
    if q_block.shape != (2, 2):
        raise DataError(f"expected a 2x2 block, got shape {q_block.shape}")
    a, b = target.shock_positions
    if a >= k or b >= k:
        raise DataError(f"target positions {target.shock_positions} exceed dimension {k}")
    q = np.eye(k)
    q[a, a] = q_block[0, 0]
    q[a, b] = q_block[0, 1]
    q[b, a] = q_block[1, 0]
    q[b, b] = q_block[1, 1]
    return q


def cayley_perturb(rng: np.random.Generator, k: int, sigma_h: float) -> np.ndarray:
    """Orthogonal matrix (I - H)(I + H)^{-1} for hemisymmetric noise H.

    Upper-triangle entries of H are N(0, sigma_h^2). A skew H keeps
    I + H nonsingular in exact arithmetic; the redraw loop guards the
    numerical edge anyway. sigma_h = 0 returns the identity.
    """
    if sigma_h < 0:
        raise DataError(f"sigma_h must be nonnegative, got {sigma_h}")
    eye = np.eye(k)
    for attempt in range(10):
        h = np.zeros((k, k))
        iu = np.triu_indices(k, 1)
        h[iu] = sigma_h * rng.standard_normal(len(iu[0]))
        h -= h.T
        try:
            return np.linalg.solve(eye + h, eye - h)
        except np.linalg.LinAlgError:
            log.warning("singular I + H on attempt %d, redrawing", attempt + 1)
    raise NumericalError("Cayley perturbation failed after 10 redraws")


def check_magnitude(
    s: np.ndarray,
    target: IdentTarget,
    sigmas: np.ndarray | None = None,
) -> bool:
    """Do both target columns satisfy the own-dominance restriction?

    Column j passes when the (scaled) absolute impact on its own
    variable strictly exceeds the impact on every other variable. Ties
    fail.
    """
    s = np.asarray(s, dtype=float)
    impact = np.abs(s)
    if target.scaling == "standardized":
        if sigmas is None:
            raise DataError("standardized scaling needs residual standard deviations")
        impact = impact / np.asarray(sigmas, dtype=float)[:, None]
    for col, own in enumerate(target.shock_positions):
        column = impact[:, col]
        others = np.delete(column, own)
        if not column[own] > others.max():
            return False
    return True


@dataclass(frozen=True)
class StructuralDraw:
    """One accepted candidate factorization."""

    s: np.ndarray
    q_tilde: np.ndarray
    accepted: bool
    draw_index: int
    bootstrap_index: int


@dataclass(frozen=True)
class IdentResult:
    """Accepted draws and bookkeeping for one identification run."""

    target: IdentTarget
    accepted: tuple[StructuralDraw, ...]
    n_draws: int
    scheme: str

    @property
    def success_rate(self) -> float:
        return len(self.accepted) / self.n_draws if self.n_draws else 0.0


def identify(
    omega_u: np.ndarray,
    target: IdentTarget,
    rng: np.random.Generator | int,
    max_draws: int = 100,
    sigma_h: float = 0.1,
    scheme: str = "block",
    extra_pairs: Sequence[tuple[int, int]] = (),
    bootstrap_index: int = 0,
) -> IdentResult:
    """Search rotations of the Cholesky factor for admissible S matrices.

    Work happens in a permuted frame with the target pair first, so the
    Cholesky factor gives the pair maximal freedom; accepted draws are
    mapped back to the original variable order with the target shocks
    in columns 0 and 1. The multi scheme adds independent 2x2 blocks
    for the uncertainty pairs in extra_pairs; the naive scheme draws a
    full K x K orthogonal matrix instead of the structured rotation.
    """
    rng = np.random.default_rng(rng)
    if scheme not in SCHEMES:
        raise DataError(f"unknown scheme {scheme!r}")
    if max_draws < 1:
        raise DataError("max_draws must be positive")
    omega_u = np.asarray(omega_u, dtype=float)
    k = omega_u.shape[0]
    c0, c1 = target.shock_positions
    if c0 >= k or c1 >= k:
        raise DataError(f"target positions {target.shock_positions} exceed dimension {k}")
    perm = [c0, c1] + [j for j in range(k) if j not in (c0, c1)]
    omega_p = omega_u[np.ix_(perm, perm)]
    chol = chol_lower(omega_p)
    sigmas_p = np.sqrt(np.diag(omega_p))
    target_p = IdentTarget(country=target.country, shock_positions=(0, 1), scaling=target.scaling)
    pairs_p: list[tuple[int, int]] = []
    if scheme == "multi":
        inv = np.empty(k, dtype=int)
        inv[perm] = np.arange(k)
        for a, b in extra_pairs:
            if {a, b} == {c0, c1}:
                continue
            if {a, b} & {c0, c1}:
                raise DataError(f"extra pair ({a}, {b}) overlaps the target pair")
            pairs_p.append((int(inv[a]), int(inv[b])))
        flat = [p for pair in pairs_p for p in pair]
        if len(set(flat)) != len(flat):
            raise DataError("extra pairs must be disjoint")
    accepted: list[StructuralDraw] = []
    for draw in range(max_draws):
        if scheme == "naive":
            a = rng.standard_normal((k, k))
            q, r = np.linalg.qr(a)
            d = np.sign(np.diag(r))
            d[d == 0] = 1.0
            q_tilde = q * d
        else:
            q_diag = assemble_q(draw_block_q(rng), k, target_p)
            for pair in pairs_p:
                q_diag = q_diag @ assemble_q(
                    draw_block_q(rng),
                    k,
                    IdentTarget(country=target.country, shock_positions=pair,
                                scaling=target.scaling),
                )
            q_tilde = q_diag @ cayley_perturb(rng, k, sigma_h)
        s_p = chol @ q_tilde
        if not check_magnitude(s_p, target_p, sigmas_p):
            continue
        s_p = s_p.copy()
        q_tilde = q_tilde.copy()
        for col in (0, 1):
            if s_p[col, col] < 0:
                s_p[:, col] *= -1.0
                q_tilde[:, col] *= -1.0
        s = np.empty_like(s_p)
        s[perm, :] = s_p
        accepted.append(
            StructuralDraw(
                s=s,
                q_tilde=q_tilde,
                accepted=True,
                draw_index=draw,
                bootstrap_index=bootstrap_index,
            )
        )
    return IdentResult(
        target=target,
        accepted=tuple(accepted),
        n_draws=max_draws,
        scheme=scheme,
    )


def require_accepted(result: IdentResult) -> IdentResult:
    """Raise when a run produced no admissible draw."""
    if not result.accepted:
        raise IdentificationError(
            f"no accepted draw for {result.target.country} in {result.n_draws} attempts"
        )
    return result


def recover_shocks(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Structural shock series epsilon_t solving S epsilon_t = u_t."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DataError(f"impact matrix must be square, got shape {s.shape}")
    cond = np.linalg.cond(s)
    if not np.isfinite(cond) or cond >= 1e12:
        raise NumericalError(f"impact matrix is singular or ill conditioned (cond {cond:.3e})")
    return np.linalg.solve(s, np.asarray(u, dtype=float).T).T
