"""Critical coupling, bound-state energy, eigenvector and spectral report.

The transformed operator is ``H = g + v (φ, ·) φ`` with ``φ`` the normalized
constant function. A number ``E >= 1`` is an eigenvalue iff ``1/(E - g)`` is
square integrable and ``v * I_d(E) == 1``; the eigenvector is then
``1/(E - g)`` and the eigenvalue is simple.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import QuadratureConfig
from .errors import BracketFailure, DomainError, NonConvergence
from .green import (TorusPoint, greens_I, greens_J, integrability_class,
                    site_green, symbol)

DISCRETE = "discrete"
THRESHOLD_EMBEDDED = "threshold_embedded"

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"

ROOT_RESIDUAL = 1e-12
# Green's integrals inside the root search are resolved below the residual target.
ROOT_QUAD_TOL = 1e-13

BAND = (-1.0, 1.0)


@dataclass(frozen=True)
class CriticalCoupling:
    dim: int
    v_c: float
    err_estimate: float = 0.0


@dataclass(frozen=True)
class EigenSolution:
    """Point of the pure point spectrum together with its spectral weight."""

    dim: int
    E: float
    v: float
    kind: str
    weight: float
    residual: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class SpectrumReport:
    """Full spectral picture of ``H(v)`` in dimension ``dim``."""

    dim: int
    v: float
    v_c: float
    regime: str
    pp: tuple = ()
    ac_interval: tuple = BAND
    ess_interval: tuple = BAND
    sc_empty: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pp"] = [dict(E=p.E, kind=p.kind, weight=p.weight, residual=p.residual) for p in self.pp]
        out["ac_interval"] = list(self.ac_interval)
        out["ess_interval"] = list(self.ess_interval)
        return out


def critical_coupling(d: int, cfg: QuadratureConfig | None = None) -> CriticalCoupling:
    """``v_c = 1 / I_d(1)``, exactly zero when ``I_d(1)`` diverges (``d <= 2``)."""
    if not integrability_class(d, 1.0).I_finite:
        return CriticalCoupling(d, 0.0, 0.0)
    gv = greens_I(d, 1.0, cfg)
    v_c = 1.0 / gv.value
    return CriticalCoupling(d, v_c, v_c * gv.err_estimate / gv.value)


def is_critical(v: float, v_c: float, cfg: QuadratureConfig | None = None) -> bool:
    cfg = cfg or QuadratureConfig()
    return abs(v - v_c) <= max(1e-12, cfg.rel_tol * v_c)


def regime(d: int, v: float, cfg: QuadratureConfig | None = None, v_c: float | None = None) -> str:
    if v_c is None:
        v_c = critical_coupling(d, cfg).v_c
    if is_critical(v, v_c, cfg):
        return CRITICAL
    return SUPERCRITICAL if v > v_c else SUBCRITICAL


def _root_cfg(cfg):
    cfg = cfg or QuadratureConfig()
    return cfg.with_tol(min(cfg.rel_tol, ROOT_QUAD_TOL))


def point_mass_weight(d: int, E: float, cfg: QuadratureConfig | None = None) -> float:
    """Spectral mass of the eigenvalue: ``|(φ, ψ)|^2 / ||ψ||^2 = I_d(E)^2 / J_d(E)``."""
    if E < 1:
        raise DomainError(f"no eigenvector below the band edge, E={E}")
    gi = greens_I(d, E, cfg)
    gj = greens_J(d, E, cfg)
    if not gj.is_finite:
        raise DomainError(f"1/(E-g) is not square integrable for d={d}, E={E}")
    return gi.value ** 2 / gj.value


def eigenvalue(d: int, v: float, cfg: QuadratureConfig | None = None) -> EigenSolution | None:
    """Unique eigenvalue of ``H(v)`` or ``None`` when the point spectrum is empty.

    Raises
    ------
    DomainError
        For ``v < 0``.
    BracketFailure
        If ``v * I_d(E) - 1`` keeps its sign on the search bracket.
    NonConvergence
        If the root cannot be resolved in double precision (``d <= 2`` with a
        coupling so weak that ``E - 1`` underflows).
    """
    if v < 0:
        raise DomainError("only repulsive couplings v >= 0 are supported")
    if v == 0:
        return None
    rcfg = _root_cfg(cfg)
    vc = critical_coupling(d, cfg).v_c
    if d >= 3 and (v < vc or is_critical(v, vc, cfg)):
        if d >= 5 and is_critical(v, vc, cfg):
            w = point_mass_weight(d, 1.0, rcfg)
            return EigenSolution(d, 1.0, v, THRESHOLD_EMBEDDED, w,
                                 residual=abs(v / vc - 1.0), diagnostics={"v_c": vc})
        return None

    def f(E):
        return v * greens_I(d, E, rcfg).value - 1.0

    lo, f_lo = _lower_bracket(d, f)
    hi = 1.0 + v
    f_hi = f(hi)
    grow = 0
    while f_hi >= 0:
        grow += 1
        if grow > 60:
            raise BracketFailure(f"no sign change above E=1 for d={d}, v={v}")
        hi = 1.0 + v * 2.0 ** grow
        f_hi = f(hi)
    if f_lo <= 0:
        raise BracketFailure(f"f(lo)={f_lo} is not positive for d={d}, v={v}")
    E, info = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                     maxiter=200, full_output=True)
    res = abs(f(E))
    jv = greens_J(d, E, rcfg).value
    # |f| cannot fall below the change of f across one ulp of E
    floor = 4.0 * v * jv * math.ulp(E)
    if res > max(ROOT_RESIDUAL, floor):
        raise NonConvergence(f"root residual {res:.3g} above target", {"E": E, "residual": res})
    w = greens_I(d, E, rcfg).value ** 2 / jv
    return EigenSolution(d, E, v, DISCRETE, w, residual=res,
                         diagnostics={"iterations": info.iterations, "bracket": [lo, hi],
                                      "v_c": vc, "residual_floor": floor})


def _lower_bracket(d, f):
    if integrability_class(d, 1.0).I_finite:
        return 1.0, f(1.0)
    delta = 1e-2
    while True:
        lo = 1.0 + delta
        if lo == 1.0:
            raise NonConvergence("bound state lies within one ulp of the band edge")
        f_lo = f(lo)
        if f_lo > 0:
            return lo, f_lo
        delta /= 16.0


def coupling_for_energy(d: int, E: float, cfg: QuadratureConfig | None = None) -> float:
    """Inverse map ``v = 1 / I_d(E)``."""
    if E < 1:
        raise DomainError(f"eigenvalues lie at E >= 1, got {E}")
    gv = greens_I(d, E, cfg)
    if not gv.is_finite:
        raise DomainError(f"I_d diverges at E={E} for d={d}; no coupling binds there")
    return 1.0 / gv.value


def _check_eigenvector_domain(d, E):
    if E < 1 or (E == 1 and not integrability_class(d, 1.0).J_finite):
        raise DomainError(f"1/(E-g) is not in L^2 for d={d}, E={E}")


def eigenvector_momentum(d: int, E: float, theta) -> float:
    """``ψ(θ) = 1/(E - g(θ))``; ``inf`` at the singular point of a threshold state."""
    _check_eigenvector_domain(d, E)
    if not isinstance(theta, TorusPoint):
        theta = TorusPoint(theta)
    if theta.dim != d:
        raise DomainError(f"torus point has dimension {theta.dim}, expected {d}")
    gap = E - symbol(theta)
    return math.inf if gap == 0 else 1.0 / gap


def eigenvector_position(d: int, E: float, x, cfg: QuadratureConfig | None = None) -> float:
    """Position-space eigenvector, normalized so that ``ψ(0) = I_d(E)``."""
    _check_eigenvector_domain(d, E)
    x = tuple(int(n) for n in np.atleast_1d(x))
    return site_green(d, E, x, cfg)[0]


def classify_spectrum(d: int, v: float, cfg: QuadratureConfig | None = None) -> SpectrumReport:
    """Spectral data of ``H(v)``: ac and essential spectrum ``[-1, 1]``, empty
    singular continuous part, and the point spectrum from :func:`eigenvalue`."""
    if v < 0:
        raise DomainError("only repulsive couplings v >= 0 are supported")
    vc = critical_coupling(d, cfg).v_c
    sol = eigenvalue(d, v, cfg)
    return SpectrumReport(dim=d, v=float(v), v_c=vc, regime=regime(d, v, cfg, vc),
                          pp=(sol,) if sol is not None else ())
