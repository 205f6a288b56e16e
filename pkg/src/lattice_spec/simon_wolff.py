r"""Boundary values of the resolvent and the Simon-Wolff partition of the real line.

For ``ε > 0`` the imaginary part of the free resolvent at the cyclic vector is

.. math::

    \operatorname{Im} (φ, (g - x - iε)^{-1} φ)
        = \int_0^\infty e^{-εt} \cos(tx)\, J_0(t/d)^d \, dt,

because the torus average of ``exp(-i t g)`` is ``J_0(t/d)^d``. The limit
``ε -> 0`` equals ``π ρ_d(x)``. It is obtained here by evaluating a geometric
ladder of shifts on one shared Gauss grid and extrapolating polynomially in
``ε``. Each real ``x`` is then sorted into

* ``X``: positive boundary value (absolutely continuous support),
* ``Y``: finite ``∫ |x - g|^{-2}`` (candidate eigenvalues),
* ``Z``: neither (candidate singular continuous support).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import j0

from .config import QuadratureConfig
from .density import density, van_hove_points
from .errors import DomainError
from .green import GreenValue, greens_J, integrability_class
from .special import gauss_legendre, richardson_limit

SET_X = "X"
SET_Y = "Y"
SET_Z = "Z"

LADDER_LEVELS = 6
LADDER_START = 1e-2
# shifts never start below LADDER_START / 2**MAX_START_HALVINGS
MAX_START_HALVINGS = 4
MIN_GRID = 16
# truncation keeps e^{-ε t} below e^{-36} times the largest shift weight
_TAIL_NATS = 36.0
_PANEL = 4.0
_PANEL_NODES = 16
_BLOCK = 1 << 20


@dataclass(frozen=True)
class ImLadder:
    """Shifts, the corresponding ``Im`` values and the extrapolated limit."""

    eps: tuple
    values: tuple
    limit: float
    err_estimate: float


@dataclass(frozen=True)
class SetMembership:
    """Classification of a single energy."""

    x: float
    member_of: str
    im_limit: float | None = None
    im_err: float | None = None
    J_value: GreenValue | None = None
    note: str = ""

    def to_dict(self) -> dict:
        out = dict(x=self.x, member_of=self.member_of, im_limit=self.im_limit,
                   im_err=self.im_err, note=self.note)
        if self.J_value is not None:
            out["J_kind"] = self.J_value.kind
            out["J_value"] = self.J_value.value
        return out


@dataclass(frozen=True)
class DosValue:
    x: float
    rho: float
    singular: bool = False


@dataclass
class SwReport:
    """Grid scan of the partition together with every inconsistency found."""

    dim: int
    points: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def z_points(self) -> list:
        return [p.x for p in self.points if p.member_of == SET_Z]

    @property
    def finding(self) -> str:
        if not self.points:
            return "empty grid"
        if self.violations:
            return f"{len(self.violations)} violation(s)"
        return "Z contained in {-1, 1} on tested grid"


@lru_cache(maxsize=2)
def _bessel_grid(d: int, npan: int, nodes: int):
    gx, gw = gauss_legendre(nodes)
    t = (np.arange(npan)[:, None] * _PANEL + _PANEL * gx[None, :]).ravel()
    w = np.tile(_PANEL * gw, npan)
    bw = j0(t / d) ** d * w
    t.flags.writeable = False
    bw.flags.writeable = False
    return t, bw


def _im_values(d: int, x: float, eps) -> list:
    eps = [float(e) for e in eps]
    emin = min(eps)
    T = (math.log(1.0 / emin) + _TAIL_NATS) / emin
    # enough nodes per panel for the cos(tx) oscillation
    nodes = max(_PANEL_NODES, int(math.ceil(4.0 * _PANEL * (abs(x) + 1.0) / math.pi)))
    t, bw = _bessel_grid(d, int(math.ceil(T / _PANEL)), nodes)
    out = np.zeros(len(eps))
    # blocks bound the temporaries held by each worker thread
    for start in range(0, t.size, _BLOCK):
        tb = t[start:start + _BLOCK]
        base = bw[start:start + _BLOCK] * np.cos(tb * x)
        for i, e in enumerate(eps):
            out[i] += np.sum(base * np.exp(-e * tb))
    return out.tolist()


def _check(d, eps=None):
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    if eps is not None and not eps > 0:
        raise DomainError(f"the imaginary shift must be positive, got {eps}")


def im_resolvent(d: int, x: float, eps: float, cfg: QuadratureConfig | None = None) -> float:
    """``Im (φ, (H_0 - x - iε)^{-1} φ)`` for a single shift ``ε > 0``."""
    _check(d, eps)
    return _im_values(d, float(x), [eps])[0]


def _ladder_start(d: int, x: float) -> float:
    dist = float(np.min(np.abs(van_hove_points(d) - x)))
    start = LADDER_START
    for _ in range(MAX_START_HALVINGS):
        if start <= dist / 4:
            break
        start /= 2
    return start


def im_ladder(d: int, x: float, cfg: QuadratureConfig | None = None,
              levels: int = LADDER_LEVELS) -> ImLadder:
    """Extrapolate ``Im (φ, (H_0 - x - iε)^{-1} φ)`` to ``ε = 0``.

    The ladder ``ε_k = ε_0 / 2^k`` starts at ``ε_0 <= 1e-2``, lowered near van
    Hove points, and never goes below ``cfg.epsilon_floor``.
    """
    cfg = cfg or QuadratureConfig()
    _check(d)
    x = float(x)
    start = max(_ladder_start(d, x), cfg.epsilon_floor * 2 ** (levels - 1))
    eps = [start / 2 ** k for k in range(levels)]
    vals = _im_values(d, x, eps)
    lim, err, _ = richardson_limit(eps, vals)
    # cancellation floor of the oscillatory sum
    err = max(err, 64 * np.finfo(float).eps * max(1.0, abs(vals[0])))
    return ImLadder(tuple(eps), tuple(vals), lim, err)


def dos(d: int, x: float, cfg: QuadratureConfig | None = None) -> DosValue:
    """Density of states ``ρ_d(x)`` for ``|x| < 1``; ``inf`` flagged at ``d=2, x=0``."""
    _check(d)
    x = float(x)
    if not abs(x) < 1:
        raise DomainError(f"the density is evaluated inside the open band, got x={x}")
    rho = float(density(d, x))
    return DosValue(x, rho, singular=math.isinf(rho))


def classify_point(d: int, x: float, cfg: QuadratureConfig | None = None) -> SetMembership:
    """Assign ``x`` to ``X``, ``Y`` or ``Z`` (checked in that order).

    Inside the band the extrapolated boundary value must exceed three times
    its error estimate to count as positive. At the band edges the verdict
    follows the analytic integrability of ``|1 - g|^{-2}``. The extrapolated
    number is still reported there without being used.
    """
    _check(d)
    x = float(x)
    if abs(x) < 1:
        if d == 2 and x == 0:
            return SetMembership(x, SET_X, math.inf, 0.0,
                                 note="logarithmic van Hove singularity")
        lad = im_ladder(d, x, cfg)
        if lad.limit > 3 * lad.err_estimate:
            return SetMembership(x, SET_X, lad.limit, lad.err_estimate)
        return SetMembership(x, SET_Z, lad.limit, lad.err_estimate,
                             note="boundary value not resolved above its error")
    jv = greens_J(d, abs(x), cfg)
    if abs(x) > 1:
        return SetMembership(x, SET_Y, 0.0, 0.0, J_value=jv)
    lad = im_ladder(d, x, cfg)
    member = SET_Y if integrability_class(d, 1.0).J_finite else SET_Z
    return SetMembership(x, member, lad.limit, lad.err_estimate, J_value=jv,
                         note="band edge, extrapolated value reported only")


def _violation(p: SetMembership):
    if abs(p.x) < 1 and p.member_of != SET_X:
        return f"x={p.x!r} inside the band is {p.member_of}, expected X"
    if abs(p.x) > 1 and p.member_of != SET_Y:
        return f"x={p.x!r} outside the band is {p.member_of}, expected Y"
    return None


def sc_evidence_report(d: int, grid_size: int, cfg: QuadratureConfig | None = None,
                       margin: float = 0.5, energy: float | None = None,
                       threads: int | None = None) -> SwReport:
    """Classify a uniform grid on ``[-1 - margin, 1 + margin]`` plus ``±1``.

    ``energy`` (for instance a bound-state energy) is added to the grid when
    given. Points are processed in parallel but reported in grid order.
    """
    _check(d)
    cfg = cfg or QuadratureConfig()
    if grid_size == 0:
        return SwReport(d)
    if grid_size < MIN_GRID:
        raise DomainError(f"grid_size must be 0 or >= {MIN_GRID}, got {grid_size}")
    xs = np.linspace(-1.0 - margin, 1.0 + margin, grid_size).tolist() + [-1.0, 1.0]
    if energy is not None:
        xs.append(float(energy))
    xs = sorted(set(xs))
    workers = threads or cfg.threads or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        points = list(pool.map(lambda x: classify_point(d, x, cfg), xs))
    report = SwReport(d, points)
    report.violations = [v for v in map(_violation, points) if v]
    return report
