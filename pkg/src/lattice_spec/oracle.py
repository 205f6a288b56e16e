"""Finite-box ground truth: ``L + v δ_0`` on ``{-N..N}^d`` without an assembled matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import DomainError, InsufficientDecay, IterationLimit

DIRICHLET = "dirichlet"
PERIODIC = "periodic"
BOUNDARY_CONDITIONS = (DIRICHLET, PERIODIC)

# boxes up to this many sites are diagonalized densely
DENSE_LIMIT = 256
MAX_SITES = 50_000_000
DECAY_FLOOR = 1e-12


@dataclass(frozen=True)
class LatticeHamiltonian:
    """Nearest-neighbour average on the box ``{-N..N}^d`` plus ``v`` at the origin."""

    dim: int
    half_width: int
    v: float = 0.0
    bc: str = DIRICHLET

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        if self.half_width < 1:
            raise DomainError("half_width must be >= 1")
        if self.v < 0:
            raise DomainError("v must be >= 0")
        object.__setattr__(self, "bc", str(self.bc).lower())
        if self.bc not in BOUNDARY_CONDITIONS:
            raise DomainError(f"bc must be one of {BOUNDARY_CONDITIONS}")
        if self.size > MAX_SITES:
            raise DomainError(f"{self.size} sites exceed the memory cap")

    @property
    def side(self) -> int:
        return 2 * self.half_width + 1

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.dim

    @property
    def size(self) -> int:
        return self.side ** self.dim

    @property
    def origin(self) -> int:
        """Flat index of the site ``0``."""
        return int(np.ravel_multi_index((self.half_width,) * self.dim, self.shape))


@dataclass(frozen=True)
class EigenPair:
    lam: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int = 0


def apply(h: LatticeHamiltonian, psi) -> np.ndarray:
    """``(Hψ)(x) = (1/2d) Σ_{|y-x|=1} ψ(y) + v δ_0(x) ψ(x)``.

    Dirichlet drops neighbours outside the box; periodic wraps them.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.size != h.size:
        raise DomainError(f"vector has {psi.size} entries, box has {h.size} sites")
    grid = psi.reshape(h.shape)
    out = np.zeros_like(grid)
    for ax in range(h.dim):
        if h.bc == PERIODIC:
            out += np.roll(grid, 1, axis=ax) + np.roll(grid, -1, axis=ax)
        else:
            lo = [slice(None)] * h.dim
            hi = [slice(None)] * h.dim
            lo[ax] = slice(None, -1)
            hi[ax] = slice(1, None)
            out[tuple(lo)] += grid[tuple(hi)]
            out[tuple(hi)] += grid[tuple(lo)]
    out /= 2 * h.dim
    flat = out.reshape(-1)
    flat[h.origin] += h.v * psi.reshape(-1)[h.origin]
    return flat


def start_vector(h: LatticeHamiltonian) -> np.ndarray:
    """Normalized ``1 + 10 δ_0``: overlaps the band top and any bound state."""
    x = np.ones(h.size)
    x[h.origin] += 10.0
    return x / np.linalg.norm(x)


def _finish(h, lam, vec, iterations):
    vec = vec / np.linalg.norm(vec)
    # fix the sign so the origin entry is non-negative
    if vec[h.origin] < 0:
        vec = -vec
    lam = float(vec @ apply(h, vec))
    res = float(np.linalg.norm(apply(h, vec) - lam * vec))
    return EigenPair(lam, vec, res, iterations)


def extremal_eigenpair(h: LatticeHamiltonian, tol: float = 1e-10, maxiter: int | None = None) -> EigenPair:
    """Largest eigenvalue of the box operator with ``‖Hψ - λψ‖ <= tol``.

    Uses implicitly restarted Lanczos (ARPACK) seeded with :func:`start_vector`,
    so repeated runs are identical. Small boxes are diagonalized densely.

    Raises
    ------
    IterationLimit
        If the residual target is not met; ``.last`` carries the final iterate.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if h.size <= DENSE_LIMIT:
        mat = np.column_stack([apply(h, e) for e in np.eye(h.size)])
        w, vecs = eigh(mat)
        pair = _finish(h, w[-1], vecs[:, -1], 0)
    else:
        counter = {"n": 0}

        def matvec(x):
            counter["n"] += 1
            return apply(h, x)

        op = LinearOperator((h.size, h.size), matvec=matvec, dtype=float)
        try:
            w, vecs = eigsh(op, k=1, which="LA", v0=start_vector(h), tol=0.1 * tol,
                            maxiter=maxiter or 100 * h.size)
            pair = _finish(h, w[0], vecs[:, 0], counter["n"])
        except ArpackNoConvergence as exc:
            if len(exc.eigenvalues):
                last = _finish(h, exc.eigenvalues[0], exc.eigenvectors[:, 0], counter["n"])
            else:
                last = None
            raise IterationLimit("Lanczos iteration did not converge", last=last) from exc
    if pair.residual > tol:
        raise IterationLimit(f"residual {pair.residual:.3g} above tolerance {tol:.3g}", last=pair)
    return pair


def axis_profile(pair: EigenPair, h: LatticeHamiltonian) -> np.ndarray:
    """``|ψ(k e_1)|`` for ``k = 0..N``."""
    grid = np.abs(pair.vector.reshape(h.shape))
    idx = (slice(h.half_width, None),) + (h.half_width,) * (h.dim - 1)
    return grid[idx]


def decay_rate(pair: EigenPair, h: LatticeHamiltonian, tol: float = 1e-10,
               floor: float = DECAY_FLOOR, min_sites: int = 5) -> float:
    """Least-squares slope of ``-log|ψ|`` along the first axis.

    The fit starts at ``|x| = 1`` and keeps the sites with ``|ψ| > floor``
    that lie in the inner half of the box, away from boundary reflections.

    Raises
    ------
    InsufficientDecay
        Without a bound state (``λ <= 1 + 10 tol``) or with fewer than
        ``min_sites`` usable sites.
    """
    if not pair.lam > 1 + 10 * tol:
        raise InsufficientDecay(f"λ={pair.lam} is not above the band; no decay to fit")
    prof = axis_profile(pair, h)
    k = np.arange(prof.size)
    keep = (k >= 1) & (prof > floor) & (k <= max(h.half_width // 2, min_sites + 1))
    if keep.sum() < min_sites:
        raise InsufficientDecay(f"only {int(keep.sum())} sites in the fit window")
    slope, _ = np.polyfit(k[keep], -np.log(prof[keep]), 1)
    return float(slope)


def origin_weight(pair: EigenPair, h: LatticeHamiltonian) -> float:
    """Squared overlap ``|ψ(0)|^2`` of the unit eigenvector with the impurity site."""
    return float(pair.vector[h.origin] ** 2)


@dataclass(frozen=True)
class StudyRow:
    N: int
    lam: float
    residual: float
    diff: float | None


@dataclass
class ConvergenceTable:
    dim: int
    v: float
    bc: str
    E_analytic: float | None
    rows: list = field(default_factory=list)

    def to_records(self) -> list:
        return [dict(N=r.N, lam=r.lam, residual=r.residual, diff=r.diff) for r in self.rows]


def convergence_study(d: int, v: float, Ns, bc: str = DIRICHLET, tol: float = 1e-10,
                      E_analytic: float | None = None) -> ConvergenceTable:
    """Extremal eigenvalue for increasing box sizes.

    ``diff`` is ``λ_N - E_analytic`` when an analytic eigenvalue is supplied.
    """
    Ns = [int(n) for n in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise DomainError("box sizes must be strictly increasing")
    table = ConvergenceTable(d, float(v), bc, E_analytic)
    for n in Ns:
        h = LatticeHamiltonian(d, n, v, bc)
        pair = extremal_eigenpair(h, tol)
        diff = None if E_analytic is None else pair.lam - E_analytic
        table.rows.append(StudyRow(n, pair.lam, pair.residual, diff))
    return table


def dirichlet_band_top(N: int) -> float:
    """Largest eigenvalue of the free Dirichlet box, ``cos(π / (2N + 2))``."""
    return math.cos(math.pi / (2 * N + 2))
