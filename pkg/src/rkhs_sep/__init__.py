"""Numerical separation analysis for reproducing kernel Hilbert spaces."""
import json
from importlib import resources

from ._core import BACKEND
from .constructions import (ConstructionCase, VerificationReport, gen_bidisk, gen_rho_relation,
                            gen_roots_of_unity, gen_thm8, generate, verify)
from .gram import (GramMatrix, SeparationReport, SingularSpanError, dist_to_span_det,
                   dist_to_span_proj, gram, n_weak_separation, pseudo_distance, riesz_bounds)
from .kernels import (BallEmbedding, BergmanTailError, Constant, Dirichlet, DomainError,
                      FiniteRank, Fock, Kernel, KernelError, PolyMap, Power, Product, Pullback,
                      Sum, Szego, TableMap, Tensor, WeightedBergman, construct)
from .linalg import PSDResult, psd_check, schur_product
from .moments import MomentTable, QuadratureError, build_moment_table, get_table
from .pick import (PickProblem, factor_monotonicity_check, pick_matrix, separation_epsilon,
                   solve)

__version__ = "0.1.0"

SCHEMAS = ("case", "distance", "gram", "moments", "pick", "pick_problem", "report", "separation")


def load_schema(name: str) -> dict:
    """JSON schema for a CLI output document (one of ``SCHEMAS``)."""
    if name not in SCHEMAS:
        raise KeyError(name)
    return json.loads(resources.files(__package__).joinpath("schemas", f"{name}.schema.json").read_text())
