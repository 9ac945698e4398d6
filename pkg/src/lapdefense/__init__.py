"""Robust node classification by p-Laplacian graph denoising.

Stage 1 recovers a denoised graph Laplacian from a perturbed graph with a
majorization-minimization solver (:mod:`lapdefense.denoise`); stage 2 trains a
two-layer GCN on the recovered adjacency (:mod:`lapdefense.gcn`).
"""
__version__ = "0.1.0"

from ._accel import backend_name
from .data import Dataset, SynthSpec, generate_planted_partition, load_dataset, save_dataset
from .denoise import (DenoiseConfig, DenoiseResult, feature_distances, gradient, mm_step,
                      objective, precompute_c, run_denoise)
from .gcn import GcnParams, LabelVector, TrainConfig, evaluate, forward, loss_and_grads, normalize_adjacency, train
from .graph import (adjacency_from_weights, adjoint_op, dirichlet_energy, edge_index, edge_pair,
                    laplacian_op, normalized_energy_curve, p_dirichlet_energy)
from .perturb import PerturbationSpec, dissimilar_edge_insertion, perturbation_stats, random_edge_insertion
