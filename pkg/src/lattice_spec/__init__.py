"""Spectral analysis of ``H = L + v δ_0`` on ``Z^d`` in its momentum picture.

``L`` is the nearest-neighbour average with spectrum ``[-1, 1]``; on the torus
it becomes multiplication by ``g(θ) = (1/d) Σ cos θ_j`` and the impurity
becomes the rank-one term ``v (φ, ·) φ``.
"""
from .config import QuadratureConfig, config_from_env
from .errors import (BracketFailure, DomainError, InsufficientDecay, IterationLimit,
                     LatticeSpecError, NonConvergence)
from .green import (GreenValue, Integrability, TorusPoint, divergence_certificate,
                    greens_I, greens_J, integrability_class, laplace_bessel_I,
                    laplace_bessel_J, site_green, symbol, tensor_quadrature_I,
                    tensor_quadrature_J)
from .oracle import (EigenPair, LatticeHamiltonian, apply, convergence_study, decay_rate,
                     extremal_eigenpair)
from .simon_wolff import (DosValue, SetMembership, classify_point, dos, im_ladder,
                          im_resolvent, sc_evidence_report)
from .solver import (CriticalCoupling, EigenSolution, SpectrumReport, classify_spectrum,
                     coupling_for_energy, critical_coupling, eigenvalue, eigenvector_momentum,
                     eigenvector_position, point_mass_weight)

__version__ = "0.1.0"
