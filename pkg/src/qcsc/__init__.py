"""Sentence classification by closest-vector search over compositional meanings."""
from .closest_vector import (ClosestVectorInstance, NNResult, OracleCounter, nn_direct, nn_monte_carlo,
                             nn_quantum_sim, query_bound, run_backend, swap_test_probability, swap_test_sim)
from .deferred import ClassSet, DeferredInstance, Sentence, build_deferred, classify_deferred, classify_direct, noise_perturb
from .kernels import BACKEND as KERNEL_BACKEND
from .pregroup import CupMatching, DerivationTree, Layering, Lexicon, build_tree, parse_type, reduce, two_coloring
from .tensor import MeaningTensor, ProductVector, evaluate_sentence, storage_estimate

__version__ = "0.1.0"
