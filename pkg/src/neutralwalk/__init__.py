"""Neutral networks and evolvability of redundant and degenerate fleets."""

from .adaptation import AdaptationOutcome, adapt, candidate_moves
from .config import ExperimentConfig, dump_config, parse_config
from .experiments import RunAggregate, run_batch, sweep_alpha, sweep_fleet_size
from .explorer import (
    ExplorationResult,
    FleetNode,
    TopologyReport,
    evolvability,
    exhaustive_explore,
    explore,
    innovation_series,
    nn_size,
    topology_metrics,
)
from .genotypes import (
    ConfigError,
    FleetConfig,
    ModelKind,
    MutationExhausted,
    MutationMode,
    admissible_replacements,
    init_allocation,
    init_degenerate,
    init_redundant,
    mutate,
)
from .model import (
    Allocation,
    Genotype,
    ParameterError,
    StructureError,
    canonical_form,
    compute_phenotype,
    fitness,
    is_neutral,
    neutrality_threshold,
    validate,
)
from .oracle import oracle_check
from .output import write_outputs

__version__ = "0.1.0"
