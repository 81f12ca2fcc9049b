"""Reducing subspaces of powers of weighted shifts on Laurent-series spaces."""
from .commutant import (CommutantBasis, commutant_basis, extract_symbols, rebuild_from_symbols,
                        star_commutant_basis, symbols_to_twist, twist_apply, twist_to_symbols)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .geometry import (curvature_field, kernel, kernel_nullspace_check, restriction_curvatures_distinct,
                       restriction_weights, spectrum_estimate, weights_align)
from .lattice import (CONTINUUM, DISCRETE, ReducingLattice, match_minimal_to_residues, reducing_lattice,
                      verify_reducing)
from .operators import (BasisMode, TruncatedOperator, multiplier_matrix, power_matrix, shift_matrix,
                        shift_power, to_monomial, to_orthonormal)
from .spaces import (LaurentSeries, SpaceKind, WeightSequence, classify_weights, make_weights,
                     residue_decompose)

__version__ = "0.1.0"
