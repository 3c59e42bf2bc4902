"""unsatgen: hard UNSAT CNF generation by core refinement.

Generates new unsatisfiable instances from seed instances by embedding the
seed's unsatisfiable core, adding randomly sampled clauses, and iteratively
breaking the easy cores this creates, guided by a trainable clause-core
predictor. Ships an embedded CDCL solver, an exact core oracle, and an
evaluation harness for hardness preservation, distribution similarity, and
augmentation benefit.
"""

__version__ = "0.1.0"

from .cnf import Cnf, from_clauses, parse_dimacs, serialize_dimacs
from .gnn import CorePredictor, GnnConfig, GnnModel, init_model, load_model, predict_core, save_model, train
from .generate import KsatParams, PsParams, RefineConfig, generate, refine, sample_ksat
from .metrics import HardnessVector, hardness_ratio, hardness_vector, mmd, wilcoxon_signed_rank
from .mus import CoreLabel, extract_mus, verify_mus
from .solver import PORTFOLIO, SolveResult, Solver, SolverConfig, is_unsat, solve

__all__ = [
    "Cnf",
    "CoreLabel",
    "CorePredictor",
    "GnnConfig",
    "GnnModel",
    "HardnessVector",
    "KsatParams",
    "PORTFOLIO",
    "PsParams",
    "RefineConfig",
    "SolveResult",
    "Solver",
    "SolverConfig",
    "extract_mus",
    "from_clauses",
    "generate",
    "hardness_ratio",
    "hardness_vector",
    "init_model",
    "is_unsat",
    "load_model",
    "mmd",
    "parse_dimacs",
    "predict_core",
    "refine",
    "sample_ksat",
    "save_model",
    "serialize_dimacs",
    "solve",
    "train",
    "verify_mus",
    "wilcoxon_signed_rank",
]
