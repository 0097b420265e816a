"""Consensus-representation learning for heterogeneous clustering ensembles.

Submodules: ``data`` (loading, generators, sampling), ``metrics`` (NMI, ARI,
agreement), ``ensemble`` (k-means, GMM, agglomerative, spectral), ``neural``
(numpy autoencoder, classifiers, losses, SGD), ``algorithm`` (the DECCS loop),
``config``/``experiment``/``cli`` (runs from JSON configs).
"""
from .algorithm import DeccsConfig, DeccsResult, run_ablation, run_deccs
from .data import DataMatrix, load_dataset, make_collision, make_synth, make_two_rings, z_transform
from .ensemble import EnsembleSpec, MemberSpec, default_ensemble
from .metrics import agreement, ari, nmi
from .neural import AutoEncoder, LinearClassifier

__version__ = "0.1.0"

__all__ = [
    "AutoEncoder", "DataMatrix", "DeccsConfig", "DeccsResult", "EnsembleSpec", "LinearClassifier",
    "MemberSpec", "agreement", "ari", "default_ensemble", "load_dataset", "make_collision",
    "make_synth", "make_two_rings", "nmi", "run_ablation", "run_deccs", "z_transform",
]
