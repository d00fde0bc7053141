"""Multi-country uncertainty spillover toolkit.

Builds country VARX blocks into one global system with a dominant
policy unit, identifies paired uncertainty shocks through magnitude
restrictions on the impact matrix, and reports bootstrapped impulse
responses, direct-versus-spillover splits, and block relevance tests.
"""
from .dataio import (
    CountrySpec,
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
from .errors import DataError, IdentificationError, NumericalError
from .gvar import (
    GlobalIndex,
    GvarModel,
    GvarSolution,
    LinkMatrix,
    companion_eigenvalues,
    estimate_gvar,
    link_matrix,
    residual_autocorrelation,
    residual_covariance,
    solve,
    stack,
)
from .ident import (
    IdentResult,
    IdentTarget,
    StructuralDraw,
    assemble_q,
    cayley_perturb,
    check_magnitude,
    chol_lower,
    draw_block_q,
    identify,
    recover_shocks,
    require_accepted,
    target_for,
)
from .inference import FTestResult, critical_value, f_test_common, f_test_foreign
from .irf import (
    BootstrapResult,
    Decomposition,
    IrfSet,
    bootstrap_irf,
    decompose,
    irf,
    restricted_solution,
)
from .simulate import SyntheticDgp, make_dgp, simulate
from .varx import DominantEstimate, VarxEstimate, build_design, estimate_dominant, estimate_varx, ols_fit

__version__ = "0.1.0"

__all__ = [
    "CountrySpec",
    "DominantSpec",
    "Panel",
    "SeriesMeta",
    "WeightMatrix",
    "apply_transforms",
    "bis_symmetrize",
    "build_weights",
    "country_specs",
    "foreign_series",
    "load_panel",
    "yield_adjust",
    "DataError",
    "IdentificationError",
    "NumericalError",
    "GlobalIndex",
    "GvarModel",
    "GvarSolution",
    "LinkMatrix",
    "companion_eigenvalues",
    "estimate_gvar",
    "link_matrix",
    "residual_autocorrelation",
    "residual_covariance",
    "solve",
    "stack",
    "IdentResult",
    "IdentTarget",
    "StructuralDraw",
    "assemble_q",
    "cayley_perturb",
    "check_magnitude",
    "chol_lower",
    "draw_block_q",
    "identify",
    "recover_shocks",
    "require_accepted",
    "target_for",
    "FTestResult",
    "critical_value",
    "f_test_common",
    "f_test_foreign",
    "BootstrapResult",
    "Decomposition",
    "IrfSet",
    "bootstrap_irf",
    "decompose",
    "irf",
    "restricted_solution",
    "SyntheticDgp",
    "make_dgp",
    "simulate",
    "DominantEstimate",
    "VarxEstimate",
    "build_design",
    "estimate_dominant",
    "estimate_varx",
    "ols_fit",
]
