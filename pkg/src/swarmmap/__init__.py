"""Artificial ant colonies on grey-level image habitats."""

from .engine import (
    MetricsRecord,
    SimulationState,
    init_state,
    on_target_ratio,
    run,
    spatial_entropy,
    step,
    swap_habitat,
)
from .errors import ConfigError, DomainError, FormatError, SwarmError
from .habitats import generate_cross
from .model import (
    AntState,
    Direction,
    Habitat,
    Params,
    PheromoneField,
    directional_weight,
    pheromone_weight,
    sample_move,
    transition_probabilities,
)
from .similarity import (
    Window,
    ordinal_rank,
    stat_similarity,
    ulam_distance,
    ulam_similarity,
    window_extract,
)

__version__ = "0.1.0"
