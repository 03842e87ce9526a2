"""Hyperbolic regularization of Grad's moment system: assembly, eigenstructure,
rotation invariance, wave structure and a first-order solver."""
from .indexing import count, indices_upto, key, parse_key, position_map
from .hermite import InadmissibleState, char_poly, hermite_eval, hermite_roots
from .state import (ConstraintViolation, MomentState, from_w_vector, load_state, make_state,
                    maxwellian, random_state, to_w_vector)
from .assembly import (SystemMatrix, assemble_directional, assemble_grad_1d,
                       assemble_regularized_1d, scaled_matrix)
from .spectral import (analytic_eigenvalues, analytic_eigenvector, analytic_spectrum, decompose,
                       hyperbolicity_report)
from .rotation import rotate_state, rotation_invariance_residual, rotation_operator
from .waves import all_fields, classify_elementary_wave, make_field
from .fvsolver import SimConfig, SimulationError, simulate

__version__ = "0.1.0"
