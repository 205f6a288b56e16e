"""Quadrature configuration and environment overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

ENV_TOL = "LATTICE_SPEC_TOL"
ENV_THREADS = "LATTICE_SPEC_THREADS"

BACKENDS = ("auto", "direct", "laplace")


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and resolution knobs for every integral in the package.

    Parameters
    ----------
    rel_tol : float
        Target relative accuracy of Green's integrals.
    laplace_truncation : float or None
        Upper limit of the Laplace variable. ``None`` picks it adaptively from
        the analytic tail bound.
    grid_points_per_axis : int
        Resolution cap per axis for tensor quadratures (periodic trapezoid and
        the per-axis Gauss rules of the direct backend).
    epsilon_floor : float
        Smallest imaginary shift used when extrapolating the resolvent.
    backend : {'auto', 'direct', 'laplace'}
        Quadrature route for Green's integrals.
    threads : int or None
        Worker count for grid-level parallel loops; never changes results.
    """

    rel_tol: float = 1e-10
    laplace_truncation: float | None = None
    grid_points_per_axis: int = 256
    epsilon_floor: float = 1e-6
    backend: str = "auto"
    threads: int | None = None

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.grid_points_per_axis < 8 or self.grid_points_per_axis % 2:
            raise ValueError("grid_points_per_axis must be even and >= 8")
        if self.laplace_truncation is not None and not self.laplace_truncation > 0:
            raise ValueError("laplace_truncation must be positive")
        if not self.epsilon_floor > 0:
            raise ValueError("epsilon_floor must be positive")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")

    def with_tol(self, rel_tol: float) -> "QuadratureConfig":
        return replace(self, rel_tol=rel_tol)


def config_from_env(**overrides) -> QuadratureConfig:
    """Build a config with precedence: explicit overrides > environment > defaults.

    Overrides whose value is ``None`` are treated as absent.
    """
    values = {}
    if os.environ.get(ENV_TOL):
        values["rel_tol"] = float(os.environ[ENV_TOL])
    if os.environ.get(ENV_THREADS):
        values["threads"] = int(os.environ[ENV_THREADS])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return QuadratureConfig(**values)
