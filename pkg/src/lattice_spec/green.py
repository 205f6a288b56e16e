r"""Lattice Green's function integrals of the hypercubic symbol.

The symbol of the normalized nearest-neighbour Laplacian on :math:`\mathbb{Z}^d`
is

.. math:: g(θ) = \frac{1}{d} \sum_{j=1}^{d} \cos θ_j ∈ [-1, 1].

All integrals are normalized by the torus volume, so

.. math::

    I_d(E) = (2π)^{-d} ∫ \frac{dθ}{E - g(θ)}, \qquad
    J_d(E) = (2π)^{-d} ∫ \frac{dθ}{(E - g(θ))^2},

and a coupling ``v`` binds a state at ``E`` exactly when ``v * I_d(E) == 1``.

Two independent numerical routes are provided:

* ``laplace``: :math:`I_d(E) = ∫_0^∞ e^{-tE} I_0(t/d)^d dt`, evaluated with the
  substitution ``t = exp(s)`` and a trapezoid rule in ``s``. The integrand
  decays exponentially at both ends in ``s`` (also at ``E = 1``), so the rule
  converges geometrically.
* ``direct``: one torus axis is integrated in closed form,
  :math:`π^{-1}∫_0^π dθ/(A - b\cos θ) = (A^2-b^2)^{-1/2}`, and the remaining
  ``d - 1`` axes are integrated on the cube :math:`[0, π]^{d-1}` with a Duffy
  (pyramid) map around the singular corner and graded Gauss-Legendre panels.
  The Jacobian cancels the threshold singularity, so the rule stays spectral
  even at ``E = 1``.

Integrability at the band edges is decided analytically by
:func:`integrability_class`; quadrature is never asked to vote on divergence.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special as sp

from .config import QuadratureConfig
from .errors import DomainError, NonConvergence
from .special import ellipk, gauss_legendre

FINITE = "finite"
DIVERGENT = "divergent"

# Energies at or above this use the direct backend under ``backend='auto'``.
DIRECT_MIN_ENERGY = 1.1
DIRECT_MAX_DIM = 4

_EVAL_BUDGET = 60_000_000
_CHUNK = 2_000_000


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus :math:`[-π, π]^d`."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        if not coords:
            raise DomainError("a torus point needs at least one coordinate")
        if any(not (-math.pi <= c <= math.pi) for c in coords):
            raise DomainError(f"torus coordinates must lie in [-pi, pi]: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class GreenValue:
    """Outcome of a Green's integral: a finite value or a certified divergence.

    ``divergence_exponent`` is the radial power ``d - 1 - 2k`` of the integrand
    near the band edge (``k = 1`` for ``I``, ``k = 2`` for ``J``); the integral
    diverges when it is ``<= -1``.
    """

    kind: str
    value: float | None = None
    err_estimate: float | None = None
    divergence_exponent: float | None = None
    method: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind == FINITE:
            if self.value is None or not self.value > 0:
                raise ValueError("finite Green value must be positive")
            if self.err_estimate is None or not 0 <= self.err_estimate < self.value:
                raise ValueError("finite Green value needs 0 <= err_estimate < value")
        elif self.kind == DIVERGENT:
            if self.value is not None:
                raise ValueError("a divergent Green value carries no value")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE


class Integrability(NamedTuple):
    I_finite: bool
    J_finite: bool


def symbol(theta) -> float:
    """Evaluate ``g(θ) = mean(cos θ_j)`` at a :class:`TorusPoint` or sequence."""
    if not isinstance(theta, TorusPoint):
        theta = TorusPoint(theta)
    return float(np.mean(np.cos(theta.coords)))


def divergence_exponent(d: int, power: int) -> int:
    """Radial exponent ``d - 1 - 2*power`` of ``r^{d-1} / r^{2 power}`` at threshold."""
    return d - 1 - 2 * power


def _edge_finite(d: int, power: int) -> bool:
    return divergence_exponent(d, power) > -1


def integrability_class(d: int, E: float) -> Integrability:
    """Analytic integrability of ``1/(E-g)`` and ``1/(E-g)^2`` on the torus.

    Outside the band both are bounded. At ``|E| = 1`` the quadratic expansion
    ``1 - g ~ |θ|^2/(2d)`` gives ``I`` finite iff ``d >= 3`` and ``J`` finite
    iff ``d >= 5``. Inside the band the singular set is a hypersurface and
    neither is integrable.

    Examples
    --------
    >>> integrability_class(3, 1.0)
    Integrability(I_finite=True, J_finite=False)
    >>> integrability_class(7, 0.3)
    Integrability(I_finite=False, J_finite=False)
    """
    _check_dim(d)
    E = float(E)
    if abs(E) > 1:
        return Integrability(True, True)
    if abs(E) == 1:
        return Integrability(_edge_finite(d, 1), _edge_finite(d, 2))
    return Integrability(False, False)


def closed_form_I(d: int, E: float) -> float:
    """Closed forms of ``I_d(E)`` for ``d`` in {1, 2} and ``E > 1``.

    ``d = 1``: ``1/sqrt(E^2 - 1)``; ``d = 2``: ``2 K(1/E) / (π E)`` with ``K``
    evaluated through the arithmetic-geometric mean.
    """
    if d not in (1, 2) or not E > 1:
        raise DomainError(f"closed form needs d in (1, 2) and E > 1, got d={d}, E={E}")
    if d == 1:
        return 1.0 / math.sqrt((E - 1.0) * (E + 1.0))
    return 2.0 * ellipk(1.0 / E) / (math.pi * E)


def closed_form_J(d: int, E: float) -> float:
    """``J_1(E) = E / (E^2 - 1)^{3/2}``; only ``d = 1`` has an elementary form."""
    if d != 1 or not E > 1:
        raise DomainError("closed form J is available for d = 1, E > 1 only")
    return E / ((E - 1.0) * (E + 1.0)) ** 1.5


# ---------------------------------------------------------------------------
# Laplace-Bessel backend
# ---------------------------------------------------------------------------

def _bessel_product(t, d, site):
    z = t / d
    if site is None or not any(site):
        return sp.i0e(z) ** d
    out = np.ones_like(t)
    for n in site:
        out = out * sp.ive(abs(int(n)), z)
    return out


def _laplace_upper_tail(T, a, d, power):
    """Rigorous bound of the integrand mass beyond ``t = T`` (T >= d).

    Uses ``i0e(z) <= (1 + 1/(4z)) / sqrt(2π z)`` for ``z >= 1``.
    """
    c = (d / (2 * math.pi)) ** (d / 2) * (1 + d / (4 * T)) ** d
    q = power - 1 - d / 2
    if a <= 0:
        if q >= -1:
            return math.inf
        return c * T ** (q + 1) / (-(q + 1))
    if q > -1:
        tail = sp.gammaincc(q + 1, a * T) * math.gamma(q + 1) / a ** (q + 1)
    else:
        tail = T ** q * math.exp(-a * T) / a
        if q < -1:
            tail = min(tail, T ** (q + 1) / (-(q + 1)))
    return c * tail


def _choose_truncation(a, d, power, target):
    T = max(4.0 * d, 40.0 / a if a > 0 else 1e3)
    for _ in range(400):
        bound = _laplace_upper_tail(T, a, d, power) / math.factorial(power - 1)
        if bound <= target:
            return T, bound
        T *= 2.0
    raise NonConvergence("no Laplace truncation meets the tail target",
                         {"T": T, "tail_bound": bound})


def _laplace(d, E, power, cfg, site=None):
    a = E - 1.0
    if a < 0:
        raise DomainError("Laplace representation needs E >= 1")
    if a == 0 and not _edge_finite(d, power):
        raise DomainError(f"integral diverges at E=1 for d={d}, power={power}")
    nsite = sum(abs(int(n)) for n in site) if site else 0
    lo_exp = power + nsite
    tol = cfg.rel_tol
    # 1/(E+1)^power bounds the site-0 value from below; refined after one pass
    scale = 1.0 / (E + 1.0) ** power
    prev = None
    h = 0.5
    for _ in range(16):
        if cfg.laplace_truncation is None:
            T, upper = _choose_truncation(a, d, power, 0.1 * tol * scale)
        else:
            T = cfg.laplace_truncation
            upper = _laplace_upper_tail(T, a, d, power) / math.factorial(power - 1)
            if upper > 0.1 * tol * scale:
                raise NonConvergence(
                    f"Laplace truncation T={T:g} leaves tail bound {upper:.3g}",
                    {"tail_bound": upper, "T": T})
        t_lo = (1e-3 * tol * scale * lo_exp) ** (1.0 / lo_exp)
        s = np.arange(math.log(t_lo), math.log(T) + h, h)
        t = np.exp(s)
        f = t ** power * np.exp(-a * t) * _bessel_product(t, d, site)
        val = h * float(np.sum(f)) / math.factorial(power - 1)
        if prev is not None and val > 0:
            diff = abs(val - prev)
            if diff <= 0.5 * tol * val and upper <= 0.1 * tol * val:
                lower = t_lo ** lo_exp / lo_exp
                err = diff + upper + lower
                return val, err, {"h": h, "T": T, "t_lo": t_lo, "nodes": int(s.size),
                                  "tail_bound": upper}
        if val > 0:
            scale = min(scale, val)
        prev = val
        h *= 0.5
    raise NonConvergence(
        f"Laplace quadrature did not reach rel_tol={tol:g} (d={d}, E={E})",
        {"h": h, "last": prev})


def laplace_bessel_I(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    r"""``I_d(E)`` from :math:`∫_0^∞ e^{-tE} I_0(t/d)^d dt`.

    Valid for ``E > 1`` and, when ``d >= 3``, at ``E = 1`` where the integrand
    decays like :math:`t^{-d/2}`. The truncation error is bounded analytically
    and included in ``err_estimate``.
    """
    return _laplace_green(d, E, 1, cfg)


def laplace_bessel_J(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    r"""``J_d(E)`` from :math:`∫_0^∞ t e^{-tE} I_0(t/d)^d dt`."""
    return _laplace_green(d, E, 2, cfg)


def _laplace_green(d, E, power, cfg):
    cfg = cfg or QuadratureConfig()
    _check_dim(d)
    _check_energy(E)
    if E == 1 and not _edge_finite(d, power):
        return _divergent(d, power, "laplace")
    val, err, diag = _laplace(d, float(E), power, cfg)
    return GreenValue(FINITE, val, err, method="laplace", diagnostics=diag)


def site_green(d: int, E: float, site: Sequence[int], cfg: QuadratureConfig | None = None):
    r"""Position-space lattice Green's function :math:`(2π)^{-d}∫ e^{i x·θ}/(E-g) dθ`.

    Computed as :math:`∫_0^∞ e^{-tE} \prod_j I_{x_j}(t/d) dt`. Returns
    ``(value, err_estimate)``; at ``site = 0`` this is ``I_d(E)``.
    """
    cfg = cfg or QuadratureConfig()
    _check_dim(d)
    site = tuple(int(n) for n in site)
    if len(site) != d:
        raise DomainError(f"site {site} does not have dimension {d}")
    _check_energy(E)
    if E == 1 and not _edge_finite(d, 1):
        raise DomainError(f"Green's function diverges at E=1 in d={d}")
    val, err, _ = _laplace(d, float(E), 1, cfg, site=site)
    return val, err


# ---------------------------------------------------------------------------
# Direct torus backend
# ---------------------------------------------------------------------------

_LEVELS = ((8, 6), (12, 8), (16, 10), (20, 12), (24, 14), (32, 18), (40, 22),
           (48, 26), (64, 32), (80, 40), (96, 48), (128, 64))


def _duffy_sum(d, a, power, mu, mv, n_grade, ratio=0.15):
    k = d - 1
    b = 1.0 / d
    xg, wg = gauss_legendre(mu)
    edges = [math.pi * ratio ** j for j in range(n_grade + 1)] + [0.0]
    u = np.concatenate([lo + (hi - lo) * xg for hi, lo in zip(edges[:-1], edges[1:])])
    wu = np.concatenate([(hi - lo) * wg for hi, lo in zip(edges[:-1], edges[1:])])
    xv, wv = gauss_legendre(mv)
    if k > 1:
        v = np.array(list(itertools.product(xv, repeat=k - 1)))
        wv_all = np.prod(np.array(list(itertools.product(wv, repeat=k - 1))), axis=1)
    else:
        v = np.zeros((1, 0))
        wv_all = np.ones(1)
    rows = max(1, _CHUNK // max(1, v.shape[0]))
    partial = []
    for start in range(0, u.size, rows):
        uu = u[start:start + rows, None]
        # 1 - cos x = 2 sin^2(x/2) avoids cancellation near the corner
        s = 2.0 * np.sin(uu / 2.0) ** 2
        if k > 1:
            s = s + np.sum(2.0 * np.sin(uu[:, :, None] * v[None, :, :] / 2.0) ** 2, axis=2)
        s = b * s
        minus = a + s          # A - b
        plus = minus + 2 * b   # A + b
        if power == 1:
            F = 1.0 / np.sqrt(minus * plus)
        else:
            F = (minus + b) / (minus * plus) ** 1.5
        jac = (wu[start:start + rows] * u[start:start + rows] ** (k - 1))[:, None]
        partial.append(np.sum(jac * F * wv_all[None, :], axis=1))
    return k / math.pi ** k * float(np.sum(np.concatenate(partial)))


def _direct(d, E, power, cfg):
    a = E - 1.0
    if d == 1:
        # the analytic axis is the whole torus
        val = 1.0 / math.sqrt(a * (E + 1.0)) if power == 1 else closed_form_J(1, E)
        return val, 0.0, {"levels": 0}
    if a == 0 and not _edge_finite(d, power):
        raise DomainError(f"integral diverges at E=1 for d={d}, power={power}")
    if a > 0:
        n_grade = int(np.clip(math.ceil(math.log(0.1 * math.sqrt(a) / math.pi) / math.log(0.15)), 2, 40))
    else:
        n_grade = 2
    prev = None
    for mu, mv in _LEVELS:
        if mv > cfg.grid_points_per_axis:
            break
        evals = (n_grade + 1) * mu * mv ** (d - 2)
        if evals > _EVAL_BUDGET:
            break
        val = _duffy_sum(d, a, power, mu, mv, n_grade)
        if prev is not None:
            diff = abs(val - prev)
            if diff <= cfg.rel_tol * val:
                return val, diff, {"mu": mu, "mv": mv, "grading_levels": n_grade,
                                   "evaluations": evals}
        prev = val
    raise NonConvergence(
        f"direct torus quadrature did not reach rel_tol={cfg.rel_tol:g} (d={d}, E={E})",
        {"last": prev})


def tensor_quadrature_I(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    """``I_d(E)`` by direct torus quadrature (analytic axis + Duffy-Gauss)."""
    return _direct_green(d, E, 1, cfg)


def tensor_quadrature_J(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    """``J_d(E)`` by direct torus quadrature (analytic axis + Duffy-Gauss)."""
    return _direct_green(d, E, 2, cfg)


def _direct_green(d, E, power, cfg):
    cfg = cfg or QuadratureConfig()
    _check_dim(d)
    _check_energy(E)
    if E == 1 and not _edge_finite(d, power):
        return _divergent(d, power, "direct")
    val, err, diag = _direct(d, float(E), power, cfg)
    return GreenValue(FINITE, val, err, method="direct", diagnostics=diag)


def torus_trapezoid(func, d: int, n: int, half: bool = False) -> float:
    """Periodic trapezoid average of ``func(theta)`` over the torus.

    ``func`` receives an array of shape ``(m, d)``. With ``half=True`` the rule
    runs on the midpoint grid of :math:`[0, π]^d` only, which equals the full
    average for integrands even in every coordinate.
    """
    if half:
        axis = (np.arange(n) + 0.5) * math.pi / n
    else:
        axis = -math.pi + 2 * math.pi * np.arange(n) / n
    total = []
    for chunk in itertools.islice(_grid_chunks(axis, d), None):
        total.append(np.sum(func(chunk)))
    return float(np.sum(total)) / n ** d


def _grid_chunks(axis, d, size=1_000_000):
    n = axis.size
    count = n ** d
    for start in range(0, count, size):
        idx = np.arange(start, min(count, start + size))
        pts = np.empty((idx.size, d))
        for j in range(d - 1, -1, -1):
            pts[:, j] = axis[idx % n]
            idx = idx // n
        yield pts


# ---------------------------------------------------------------------------
# Public dispatch
# ---------------------------------------------------------------------------

def _pick_backend(d, E, cfg):
    if cfg.backend != "auto":
        return cfg.backend
    if E < DIRECT_MIN_ENERGY or d > DIRECT_MAX_DIM:
        return "laplace"
    return "direct"


def _green(d, E, power, cfg):
    cfg = cfg or QuadratureConfig()
    _check_dim(d)
    _check_energy(E)
    E = float(E)
    if E == 1 and not _edge_finite(d, power):
        return _divergent(d, power, _pick_backend(d, E, cfg))
    if _pick_backend(d, E, cfg) == "direct":
        return _direct_green(d, E, power, cfg)
    return _laplace_green(d, E, power, cfg)


def greens_I(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    r"""Normalized Green's integral :math:`I_d(E) = (2π)^{-d}∫ dθ/(E-g)`.

    Parameters
    ----------
    d : int
        Lattice dimension, ``d >= 1``.
    E : float
        Energy, ``E >= 1``. Inside the band the integral is not defined; use
        :func:`integrability_class` there.
    cfg : QuadratureConfig, optional
        Tolerance and backend selection.

    Returns
    -------
    GreenValue
        Finite with ``err_estimate <= rel_tol * value`` for ``E > 1`` (and
        ``E = 1`` when ``d >= 3``); divergent at ``E = 1`` for ``d <= 2``.

    Raises
    ------
    DomainError
        If ``E < 1``.
    NonConvergence
        If the configured resources cannot reach ``rel_tol``.

    Examples
    --------
    >>> round(greens_I(1, 2.0).value, 10)
    0.5773502692
    >>> greens_I(1, 1.0).kind
    'divergent'
    """
    return _green(d, E, 1, cfg)


def greens_J(d: int, E: float, cfg: QuadratureConfig | None = None) -> GreenValue:
    r"""Normalized second moment :math:`J_d(E) = (2π)^{-d}∫ dθ/(E-g)^2 = -I_d'(E)`.

    Finite for ``E > 1``; at ``E = 1`` finite exactly when ``d >= 5``.
    """
    return _green(d, E, 2, cfg)


def _divergent(d, power, method):
    return GreenValue(DIVERGENT, divergence_exponent=float(divergence_exponent(d, power)),
                      method=method)


def _check_dim(d):
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")


def _check_energy(E):
    if not np.isfinite(E) or E < 1:
        raise DomainError(f"Green's integrals are evaluated for E >= 1, got {E}")


# ---------------------------------------------------------------------------
# Divergence certificates by shrinking exclusion windows
# ---------------------------------------------------------------------------

# (nodes per panel, grading levels) of the density inside certificates
CERTIFICATE_RULE = (8, 5)


@dataclass(frozen=True)
class DivergenceCertificate:
    """Partial integrals of ``|E - g|^{-power}`` outside shrinking neighbourhoods.

    ``partials[j]`` is the integral over ``{θ : δ_j <= |g(θ) - E|}`` minus the
    one at ``δ_0``, i.e. the cumulative sum of ``increments``. ``unbounded`` is
    set when every increment is positive and none shrinks below
    ``floor_ratio`` times its predecessor, so the increments stay bounded away
    from zero and the partial integrals grow without bound.
    """

    d: int
    E: float
    power: int
    deltas: tuple
    increments: tuple
    partials: tuple
    unbounded: bool


def divergence_certificate(d: int, E: float, power: int = 2, delta0: float = 1e-2,
                           halvings: int = 5, nodes: int = 8,
                           floor_ratio: float = 0.9, rule=CERTIFICATE_RULE) -> DivergenceCertificate:
    """Shell integrals ``∫_{δ/2 <= |y-E| < δ} ρ_d(y) |y-E|^{-power} dy`` for ``δ = δ0 / 2^j``.

    The density ``ρ_d`` of ``g`` turns the torus integral over a tubular
    neighbourhood of the singular set ``{g = E}`` into a one-dimensional one.
    Shells are split at van Hove points and band edges so every Gauss panel
    sees a smooth integrand. ``rule`` is the density quadrature rule; the
    verdict only needs a few correct digits, so the default is coarse.
    """
    from .density import density, van_hove_points

    _check_dim(d)
    if power not in (1, 2):
        raise DomainError("power must be 1 or 2")
    if not -1 <= E <= 1:
        raise DomainError("divergence certificates are for energies in [-1, 1]")
    xg, wg = gauss_legendre(nodes)
    deltas = [delta0 / 2 ** j for j in range(halvings + 1)]
    cuts = np.concatenate([van_hove_points(d), [-1.0, 1.0]])
    ys, ws, owner = [], [], []
    for j in range(halvings):
        outer, inner = deltas[j], deltas[j + 1]
        for sign in (-1.0, 1.0):
            lo, hi = sorted((E + sign * inner, E + sign * outer))
            lo, hi = max(lo, -1.0), min(hi, 1.0)
            if not hi > lo:
                continue
            pts = np.unique(np.concatenate([[lo, hi], cuts[(cuts > lo) & (cuts < hi)]]))
            for a, b in zip(pts[:-1], pts[1:]):
                ys.append(a + (b - a) * xg)
                ws.append((b - a) * wg)
                owner.append(np.full(nodes, j))
    if ys:
        y = np.concatenate(ys)
        w = np.concatenate(ws)
        idx = np.concatenate(owner)
        vals = w * density(d, y, rule) / np.abs(y - E) ** power
        increments = np.array([float(np.sum(vals[idx == j])) for j in range(halvings)])
    else:
        increments = np.zeros(halvings)
    partials = np.concatenate([[0.0], np.cumsum(increments)])
    unbounded = bool(np.all(increments > 0)
                     and np.all(increments[1:] >= floor_ratio * increments[:-1]))
    return DivergenceCertificate(d, float(E), power, tuple(deltas), tuple(increments.tolist()),
                                 tuple(partials.tolist()), unbounded)
