"""Pareto analysis of bit allocation across the resolutions of a scalable coder."""

from .config import ExperimentConfig, load_fixture, parse_config
from .distortion import (
    BitAllocation,
    LayeredExponentialModel,
    RdEnvelope,
    TabulatedModel,
    distortion_vector,
    inverse_rate,
    rd_envelope,
)
from .graph import LayerDag, ResolutionSubgraph, build_dag, parents, resolution_subgraph
from .pareto import Cloud, Order, ParetoFront, compare, enumerate_grid, filter_front
from .scalarize import (
    S0Set,
    ScalarizationResult,
    WeightVector,
    scalarize_continuous,
    scalarize_discrete,
    sweep_s0,
    weight_lattice,
)

__all__ = [
    "BitAllocation", "Cloud", "ExperimentConfig", "LayerDag", "LayeredExponentialModel",
    "Order", "ParetoFront", "RdEnvelope", "ResolutionSubgraph", "S0Set", "ScalarizationResult",
    "TabulatedModel", "WeightVector", "build_dag", "compare", "distortion_vector",
    "enumerate_grid", "filter_front", "inverse_rate", "load_fixture", "parents",
    "parse_config", "rd_envelope", "resolution_subgraph", "scalarize_continuous",
    "scalarize_discrete", "sweep_s0", "weight_lattice",
]
