"""Bound states of renormalized point interactions on flat, spherical and
hyperbolic spaces, computed from heat-kernel quadrature of the principal matrix."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .bounds import (BoundCertificate, BoundConstants, DegenerateFormulaError, NoCertificateError,
                     analytic_bound_for, analytic_lower_bound, calibrate_constants, certified_lower_bound_numeric,
                     default_constants, exact_constants, gershgorin_certificate)
from .manifold import ManifoldSpec, free_resolvent, geodesic_distance, heat_kernel, kernel_bound_envelope
from .perturb import PerturbationReport, compare_with_exact, delta_nu, tunneling_offdiag_asymptotic
from .principal import (CenterSet, PrincipalMatrix, assemble, phi_derivative_nu, phi_diagonal, phi_offdiagonal,
                        resolvent_difference_check)
from .quadrature import DEFAULT_QUAD, QuadratureConfig
from .rgflow import (LandauPoleError, RGState, beta, flow_coupling, renormalized_phi, scaling_covariance_check,
                     scheme_for, sigma_offsets, solve_renormalized)
from .specfun import bessel_bound, bessel_k, lambert_w0, legendre_p
from .spectral import BoundState, EigenSystem, check_interlacing, eigen_derivative_fh, eigensystem, solve_spectrum
from .wavefield import WaveField, build_wavefield, decay_rate_fit, evaluate_psi, l2_norm, l2_norm_state

import types as _types

__all__ = sorted(name for name, obj in globals().items()
                 if not name.startswith("_") and not isinstance(obj, _types.ModuleType))
