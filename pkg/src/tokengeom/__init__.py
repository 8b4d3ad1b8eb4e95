"""Geometry of layerwise token-representation point clouds.

Core objects: binary TGEO/TGLO dumps, exact nearest-neighbor graphs,
ratio-based intrinsic-dimension estimators, adjacent-layer neighborhood
overlap, block shuffling, and the entropy bridge between logits geometry
and next-token prediction uncertainty.
"""

from .entropy import (
    EntropyReport,
    ToyResult,
    avg_cross_entropy,
    contextual_entropy_report,
    dirichlet_expected_entropy,
    dirichlet_mc_entropy,
    softmax_entropy,
    unit_box_expected_entropy,
)
from .id_estimators import IdEstimate, ScaleSweep, gride, scale_sweep, twonn
from .io import (
    LayerStack,
    LogitRecord,
    ManifestEntry,
    read_layerstack,
    read_logitrecord,
    read_manifest,
    write_layerstack,
    write_logitrecord,
    write_manifest,
)
from .neighbors import (
    AngleStats,
    NeighborGraph,
    RatioSet,
    knn,
    mean_cosine_similarity,
    mu_ratios,
    nn_angles,
)
from .overlap import OverlapProfile, neighborhood_overlap, overlap_profile
from .correlation import CorrelationReport, pearson, permutation_pvalue, spearman
from .profiles import GeometryProfile, LayerGeometry, layerwise_id_loss_correlation
from .shuffle import ShuffleSpec, full_shuffle_index, prompt_seed, shuffle_tokens
from .synthetic import SyntheticSpec, generate_synthetic, synthetic_layerstack

__version__ = "0.1.0"
