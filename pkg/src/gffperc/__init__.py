"""Monte Carlo and potential-theory toolkit for GFF percolation on metric graphs."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .lattice import BoxGeometry, MetricCoordinate, make_box
from .gff import FieldConfig, sample_dgff
from .metric_edges import OpenEdgeSet, edge_open_probability, open_edges
from .clusters import ClusterLabeling, label_clusters, min_distance
from .experiments import ExperimentSpec, RunResult, fit_exponent, run_experiment

__all__ = [
    "BACKEND", "BoxGeometry", "MetricCoordinate", "make_box", "FieldConfig",
    "sample_dgff", "OpenEdgeSet", "edge_open_probability", "open_edges",
    "ClusterLabeling", "label_clusters", "min_distance", "ExperimentSpec",
    "RunResult", "fit_exponent", "run_experiment",
]
