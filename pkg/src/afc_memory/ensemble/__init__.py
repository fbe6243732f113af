"""Er ion ensemble: absorption profiles, comb construction and hole burning."""

from .burning import (
    IntegratorError,
    NegativePopulationError,
    burn_comb,
    burn_segments,
    complement_pump,
    hole_area_decay,
    integrate_populations,
)
from .comb import (
    GridTooCoarseError,
    GridTooNarrowError,
    NoPeaksFoundError,
    ToothFitError,
    absorption_line,
    comb_grid,
    detuning_grid,
    extract_comb_params,
    ideal_comb_profile,
)
from .models import (
    BurnSchedule,
    CombSpec,
    Environment,
    GridNotUniformError,
    IonEnsembleParams,
    PopulationHistory,
    SpectralProfile,
)

__all__ = [
    "BurnSchedule",
    "CombSpec",
    "Environment",
    "GridNotUniformError",
    "GridTooCoarseError",
    "GridTooNarrowError",
    "IntegratorError",
    "IonEnsembleParams",
    "NegativePopulationError",
    "NoPeaksFoundError",
    "PopulationHistory",
    "SpectralProfile",
    "ToothFitError",
    "absorption_line",
    "burn_comb",
    "burn_segments",
    "comb_grid",
    "complement_pump",
    "detuning_grid",
    "extract_comb_params",
    "hole_area_decay",
    "ideal_comb_profile",
    "integrate_populations",
]
