"""Wave graph networks, a graph-convolution baseline, and exact oracles for
path finding, maze images and DC circuit voltages."""

from .graphcore import UGraph, bfs_schedule, graph_center, grid_graph, hop_distances
from .models import (GraphBatch, GraphConvModel, MiniGruCell, MixNetwork,
                     PackedGraph, WaveModel, parameter_count)
from .numcore import Adam, DenseLayer, Tensor, backward, grad_check

__all__ = [
    "Adam", "DenseLayer", "GraphBatch", "GraphConvModel", "MiniGruCell",
    "MixNetwork", "PackedGraph", "Tensor", "UGraph", "WaveModel", "backward",
    "bfs_schedule", "grad_check", "graph_center", "grid_graph", "hop_distances",
    "parameter_count",
]
