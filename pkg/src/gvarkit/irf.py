"""Impulse responses, bootstrap bands, and direct-versus-spillover splits.

Responses follow the reduced-form recursion Phi_0 = S, Phi_h =
sum_{j<=min(h,p)} H_j Phi_{h-j}. Bands come from residual-bootstrap
replications: residual rows are resampled jointly, the global system is
regenerated from the actual initial observations, every block is
re-estimated, and identification is run afresh on each replication.
Accepted draws are pooled; the point estimate is the pooled median.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np

from .dataio import Panel
from .errors import DataError, IdentificationError, NumericalError
from .gvar import GvarModel, GvarSolution, estimate_gvar, solve, stack
from .ident import IdentTarget, identify, require_accepted
from .varx import DominantEstimate, VarxEstimate


@dataclass(frozen=True)
class IrfSet:
    """Point responses and optional percentile bands.

    responses has shape (h_max + 1, K, n_shocks); bands, when present,
    share it and bracket the point estimate.
    """

    responses: np.ndarray
    shock_labels: tuple[str, ...]
    response_labels: tuple[str, ...]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    coverage: float | None = None

    def __post_init__(self) -> None:
        r = np.asarray(self.responses, dtype=float)
        if r.ndim != 3:
            raise DataError(f"responses must be (horizons, variables, shocks), got {r.shape}")
        if r.shape[1] != len(self.response_labels) or r.shape[2] != len(self.shock_labels):
            raise DataError("response label counts do not match the response array")
        object.__setattr__(self, "responses", r)
        if (self.lower is None) != (self.upper is None):
            raise DataError("bands need both a lower and an upper surface")
        if self.lower is not None:
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if lo.shape != r.shape or hi.shape != r.shape:
                raise DataError("band surfaces must match the response array shape")
            if np.any(lo > r + 1e-12) or np.any(hi < r - 1e-12):
                raise DataError("bands fail to bracket the point estimate")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)

    @property
    def h_max(self) -> int:
        return self.responses.shape[0] - 1


def irf(
    solution: GvarSolution | Sequence[np.ndarray],
    s_cols: np.ndarray,
    h_max: int,
) -> np.ndarray:
    """Responses of every variable to the shock columns in s_cols."""
    big_h = solution.H if isinstance(solution, GvarSolution) else tuple(solution)
    s_cols = np.asarray(s_cols, dtype=float)
    if s_cols.ndim != 2:
        raise DataError(f"shock columns must be 2-dimensional, got shape {s_cols.shape}")
    if h_max < 0:
        raise DataError("h_max must be nonnegative")
    k, n = s_cols.shape
    if big_h and big_h[0].shape[0] != k:
        raise DataError(
            f"shock columns have {k} rows but the system has {big_h[0].shape[0]} variables"
        )
    phi = np.empty((h_max + 1, k, n))
    phi[0] = s_cols
    p = len(big_h)
    for h in range(1, h_max + 1):
        acc = np.zeros((k, n))
        for j in range(1, min(h, p) + 1):
            acc += big_h[j - 1] @ phi[h - j]
        phi[h] = acc
    return phi


def restricted_solution(
    blocks: Sequence[VarxEstimate | DominantEstimate],
    links: Sequence,
    omega_u: np.ndarray | None = None,
) -> GvarSolution:
    """Re-solve with every country's foreign-aggregate coefficients zeroed.

    Dominant-instrument loadings and the dominant unit's own block are
    untouched, so what remains is each economy's interaction with the
    common policy variables plus its own dynamics.
    """
    cut: list[VarxEstimate | DominantEstimate] = []
    for b in blocks:
        if isinstance(b, VarxEstimate):
            cut.append(replace(b, c=tuple(np.zeros_like(cj) for cj in b.c)))
        else:
            cut.append(b)
    g0, big_g0, big_g = stack(cut, links)
    return solve(g0, big_g0, big_g, omega_u)


def restricted_model_solution(model: GvarModel) -> GvarSolution:
    return restricted_solution(model.blocks(), model.links, model.solution.omega_u)


@dataclass(frozen=True)
class Decomposition:
    """Peak responses split into a direct part and a spillover remainder."""

    total_peak: np.ndarray      # K x n_shocks
    direct_peak: np.ndarray
    spillover: np.ndarray
    window: int
    shock_labels: tuple[str, ...]
    response_labels: tuple[str, ...]


def peak_responses(responses: np.ndarray, window: int) -> np.ndarray:
    """Signed extreme response of each (variable, shock) over 0..window."""
    responses = np.asarray(responses, dtype=float)
    if window < 0 or window >= responses.shape[0]:
        raise DataError(
            f"window {window} must lie within the computed horizons 0..{responses.shape[0] - 1}"
        )
    head = responses[: window + 1]
    idx = np.abs(head).argmax(axis=0)
    k, n = idx.shape
    return head[idx, np.arange(k)[:, None], np.arange(n)[None, :]]


def decompose(total: IrfSet, direct: IrfSet, window: int = 6) -> Decomposition:
    """Split peak effects into direct and spillover components.

    The direct part comes from the restricted system; the spillover is
    the remainder, so the two add up to the total by construction.
    """
    if total.shock_labels != direct.shock_labels:
        raise DataError("total and direct responses cover different shocks")
    if total.response_labels != direct.response_labels:
        raise DataError("total and direct responses cover different variables")
    if total.responses.shape != direct.responses.shape:
        raise DataError("total and direct responses have different shapes")
    total_peak = peak_responses(total.responses, window)
    direct_peak = peak_responses(direct.responses, window)
    return Decomposition(
        total_peak=total_peak,
        direct_peak=direct_peak,
        spillover=total_peak - direct_peak,
        window=window,
        shock_labels=total.shock_labels,
        response_labels=total.response_labels,
    )


@dataclass(frozen=True)
class BootstrapResult:
    """Pooled bootstrap responses for one target country."""

    total: IrfSet
    direct: IrfSet | None
    n_replications: int
    max_draws: int
    accepted_per_rep: tuple[int, ...]
    draws: np.ndarray | None = None
    direct_draws: np.ndarray | None = None

    @property
    def success_rate(self) -> float:
        return sum(self.accepted_per_rep) / (self.n_replications * self.max_draws)

    @property
    def replication_success_rate(self) -> float:
        return sum(1 for n in self.accepted_per_rep if n) / self.n_replications


def _regenerate(model: GvarModel, rng: np.random.Generator) -> Panel:
    """One resampled panel: actual initial rows, then the recursion."""
    data = model.global_data()
    t, k = data.shape
    p = model.p_global
    t_eff = t - p
    idx = rng.integers(0, t_eff, size=t_eff)
    u_star = model.u[idx]
    sol = model.solution
    sim = np.empty_like(data)
    sim[:p] = data[:p]
    for t_now in range(p, t):
        acc = sol.h0 + u_star[t_now - p]
        for j in range(1, p + 1):
            acc = acc + sol.H[j - 1] @ sim[t_now - j]
        sim[t_now] = acc
    return Panel(model.panel.dates, sim, model.panel.meta)


def _replicate(
    task: tuple[int, np.random.SeedSequence],
    model: GvarModel,
    target: IdentTarget,
    max_draws: int,
    h_max: int,
    sigma_h: float,
    scheme: str,
    extra_pairs: tuple[tuple[int, int], ...],
    with_direct: bool,
) -> tuple[int, np.ndarray | None, np.ndarray | None]:
    """One bootstrap replication; empty on numerical or identification failure.

    A resample can push the regenerated panel outside what estimation
    tolerates (non-finite paths, rank problems); those replications
    count as failures rather than aborting the run, since the point
    model already estimated cleanly.
    """
    b_index, seed = task
    rng = np.random.default_rng(seed)
    try:
        panel_b = _regenerate(model, rng)
        model_b = estimate_gvar(panel_b, model.specs, model.weights, model.dominant_spec)
        result = identify(
            model_b.solution.omega_u,
            target,
            rng,
            max_draws=max_draws,
            sigma_h=sigma_h,
            scheme=scheme,
            extra_pairs=extra_pairs,
            bootstrap_index=b_index,
        )
        if not result.accepted:
            return b_index, None, None
        direct_sol = restricted_model_solution(model_b) if with_direct else None
        totals = []
        directs = []
        for d in result.accepted:
            s_cols = d.s[:, :2]
            totals.append(irf(model_b.solution, s_cols, h_max))
            if direct_sol is not None:
                directs.append(irf(direct_sol, s_cols, h_max))
        return (
            b_index,
            np.stack(totals),
            np.stack(directs) if directs else None,
        )
    except (NumericalError, DataError):
        return b_index, None, None


def _band_set(
    draws: np.ndarray,
    coverage: float,
    shock_labels: tuple[str, ...],
    response_labels: tuple[str, ...],
) -> IrfSet:
    lo_q = 100.0 * (1.0 - coverage) / 2.0
    return IrfSet(
        responses=np.percentile(draws, 50.0, axis=0),
        lower=np.percentile(draws, lo_q, axis=0),
        upper=np.percentile(draws, 100.0 - lo_q, axis=0),
        coverage=coverage,
        shock_labels=shock_labels,
        response_labels=response_labels,
    )


def bootstrap_irf(
    model: GvarModel,
    target: IdentTarget,
    seed: int | np.random.SeedSequence,
    n_replications: int = 500,
    max_draws: int = 100,
    h_max: int = 24,
    sigma_h: float = 0.1,
    coverage: float = 0.68,
    scheme: str = "block",
    extra_pairs: Sequence[tuple[int, int]] = (),
    jobs: int = 1,
    with_direct: bool = False,
    keep_draws: bool = False,
    shock_names: Sequence[str] = ("EPU", "CISS"),
) -> BootstrapResult:
    """Residual-bootstrap responses to one country's uncertainty shocks.

    Replications are seeded from a spawned sequence per index, so
    results are bit-identical for a given seed regardless of the worker
    count. Fails upfront when the point model itself cannot be
    identified, and afterwards when more than half the replications
    produce no accepted draw.
    """
    if not 0.0 < coverage < 1.0:
        raise DataError(f"coverage must lie in (0, 1), got {coverage}")
    if n_replications < 1:
        raise DataError("need at least one replication")
    if model.panel is None:
        raise DataError("bootstrap needs the model's panel; re-estimate before resampling")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(n_replications + 1)
    point = identify(
        model.solution.omega_u,
        target,
        np.random.default_rng(children[0]),
        max_draws=max_draws,
        sigma_h=sigma_h,
        scheme=scheme,
        extra_pairs=extra_pairs,
    )
    require_accepted(point)
    worker = partial(
        _replicate,
        model=model,
        target=target,
        max_draws=max_draws,
        h_max=h_max,
        sigma_h=sigma_h,
        scheme=scheme,
        extra_pairs=tuple(tuple(p) for p in extra_pairs),
        with_direct=with_direct,
    )
    tasks = [(b, children[b + 1]) for b in range(n_replications)]
    if jobs <= 1:
        outcomes = [worker(t) for t in tasks]
    else:
        chunk = max(1, n_replications // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(worker, tasks, chunksize=chunk))
    accepted_counts = []
    total_draws = []
    direct_draws = []
    for _, totals, directs in outcomes:
        accepted_counts.append(0 if totals is None else totals.shape[0])
        if totals is not None:
            total_draws.append(totals)
            if directs is not None:
                direct_draws.append(directs)
    n_empty = sum(1 for n in accepted_counts if n == 0)
    if n_empty > n_replications / 2:
        raise IdentificationError(
            f"{n_empty} of {n_replications} replications produced no accepted draw"
        )
    pooled = np.concatenate(total_draws)
    shock_labels = tuple(f"{target.country}.{n}" for n in shock_names)
    response_labels = model.index.labels
    total = _band_set(pooled, coverage, shock_labels, response_labels)
    direct = None
    pooled_direct = None
    if with_direct:
        pooled_direct = np.concatenate(direct_draws)
        direct = _band_set(pooled_direct, coverage, shock_labels, response_labels)
    return BootstrapResult(
        total=total,
        direct=direct,
        n_replications=n_replications,
        max_draws=max_draws,
        accepted_per_rep=tuple(accepted_counts),
        draws=pooled if keep_draws else None,
        direct_draws=pooled_direct if keep_draws else None,
    )
