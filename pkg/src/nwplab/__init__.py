"""Numerical laboratory for the conformal group of the free massless scalar field.

The package realizes the conformal generators on grid-sampled one-particle
and truncated Fock states, in both the momentum and the position (NWP)
representations, verifies the commutator algebra, kernel formulas and
covariance laws, and computes localization probability amplitudes.
"""

from .lattice import (CoordinateState, DomainError, FockSum, GridMismatchError,
                      GridSpec, MomentumState, check_margins, convert_normalization,
                      inner_product, load_state, make_gaussian_ring, random_state,
                      save_state)
from .spectral import (MultiplyCoordinate, MultiplyMomentum, OperatorSum, Pipeline,
                       Scale, Symbol, apply_pipeline, rescale, rotate, to_coordinate,
                       to_momentum)
from .kernels import (Kernel, bessel_k2, bessel_limit_check, convolve_coordinate,
                      gamma_value, gs_coefficient, omega_kernel, omega_tilde_kernel,
                      radial_quadrature_oracle, time_kernel, time_translation_kernel,
                      velocity_tilde_kernel)
from .generators import (D, K, K0, Mboost, Mrot, N, P, P0, V, X, Generator,
                         UnsupportedDimensionError, apply, apply_dgamma, commutator,
                         generator_from_name, identity, pipeline_of, product_form)
from .actions import (PoincareElement, combined_action, dilate, evolve_time,
                      named_rotation, rotate_state, time_conjugated_D,
                      time_conjugated_K, translate)
from .localization import (SpacetimePoint, amplitude_k, amplitude_one,
                           covariance_check, density_total, nwp_eigenfunction,
                           position_density)
from .harness import (Report, default_config, load_config, run_algebra_suite,
                      run_all, run_covariance_suite, run_identity_suite,
                      run_kernel_suite)

__version__ = "0.1.0"
