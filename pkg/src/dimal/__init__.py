"""Isometric manifold embeddings from sparse landmark geodesics."""

from dimal.estimators import DIMAL, SMACOF, ClassicalScaling, LandmarkIsomap
from dimal.geodesics import (
    DisconnectedGraphError,
    LandmarkSet,
    conformal_rescale,
    dijkstra_from,
    farthest_point_sampling,
    landmark_geodesics,
)
from dimal.geometry import NeighborGraph, PointCloud, build_knn_graph
from dimal.mds import Embedding, StressSpec, classical_scaling, relative_stress, smacof, stress
from dimal.neuralnet import NetworkSpec, TrainConfig, train_siamese

__version__ = "0.1.0"

__all__ = [
    "DIMAL",
    "SMACOF",
    "ClassicalScaling",
    "LandmarkIsomap",
    "DisconnectedGraphError",
    "LandmarkSet",
    "conformal_rescale",
    "dijkstra_from",
    "farthest_point_sampling",
    "landmark_geodesics",
    "NeighborGraph",
    "PointCloud",
    "build_knn_graph",
    "Embedding",
    "StressSpec",
    "classical_scaling",
    "relative_stress",
    "smacof",
    "stress",
    "NetworkSpec",
    "TrainConfig",
    "train_siamese",
]
