"""Screen linear-system matrices for HHL suitability under a circuit-depth budget."""

from .matrices import (GenSpec, NotSymmetricError, SingularMatrixError, Spectrum,
                       SystemMatrix, condition_number, dilate, eigendecomposition,
                       generate_random_sparse, gram_transform, ideal_matrix,
                       normalize, sparsity, spectrum)
from .circuits import Circuit, Gate, depth, inverse, simulate
from .synthesis import controlled, matrix_exponential, synthesize
from .hhl import (HhlConfig, HhlResult, build_hhl, classical_solve, full_depth,
                  pe_register_size, post_selected_fidelity, prepare_b)
from .features import FEATURE_REGISTRY, FeatureVector, extract, variant_names
from .dataset import (DepthCutoff, DepthRecord, KappaHistogram, LabeledSample,
                      build_corpus, compute_depths, distribution_match,
                      iris_matrices, kappa_histogram, label_corpus, split)
from .mlp import (MlpModel, TrainConfig, best_balanced_threshold, forward,
                  init_model, load_model, predict, save_model, train, tune_threshold)
from .metrics import ConfusionMatrix, ScoreReport, confusion, learning_curve, report

__version__ = "0.1.0"
