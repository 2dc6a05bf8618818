"""Finite-difference magneto-elasticity on rectangles: operators, semigroup
time stepping, spectra and numerical audits of contraction and decay."""

from .errors import ConfigError, DimensionError, NumericalError
from .field import (BetaMode, DomainConfig, FieldState, PhysicsConfig, build_domain,
                    energy_norm, inner_product, make_initial)
from .operators import (SparseOperator, assemble_generator, assemble_L0, assemble_V,
                        coupling_backward, coupling_forward, gradient, laplacian_dirichlet)
from .semigroup import (EvolutionSpec, RealBetaStepper, exact_exponential_step, real_beta_step,
                        resolvent_solve, simulate, trotter_step)
from .spectral import dirichlet_eigs, kernel_projector, predicted_rate, v_spectrum

__version__ = "0.1.0"
