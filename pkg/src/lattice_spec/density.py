r"""Density of the symbol values ``g(θ)`` under the uniform torus measure.

With :math:`S_d = \sum_j \cos θ_j` the density :math:`p_d` of :math:`S_d` obeys

* :math:`p_1(s) = 1/(π\sqrt{1-s^2})` (arcsine law),
* :math:`p_2(s) = 1/(2π\,\mathrm{AGM}(1, |s|/2))` (elliptic law, log peak at 0),
* :math:`p_3(s) = π^{-1}∫_0^π p_2(s - \cos φ)\,dφ`,
* :math:`p_d = p_2 * p_{d-2}` for ``d >= 4``,

and the density of ``g = S_d / d`` is :math:`ρ_d(x) = d\,p_d(d x)`. Every
convolution runs on Gauss panels graded toward the non-smooth points of the
factors (band edges and van Hove points ``s = d - 2j``), evaluated row-wise so
whole arrays of abscissae are handled in one call.
"""
from __future__ import annotations

import numpy as np

from .special import agm, graded_rule

# (nodes per panel, grading levels)
DEFAULT_RULE = (12, 10)
COARSE_RULE = (10, 8)


def van_hove_points(d: int) -> np.ndarray:
    """Critical values ``(d - 2j)/d`` of ``g``; includes the band edges."""
    return np.arange(d, -d - 1, -2) / d


def _p1(s):
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = 1.0 / (np.pi * np.sqrt((1.0 - s[m]) * (1.0 + s[m])))
    return out


def _p2(s):
    out = np.zeros_like(s)
    m = np.abs(s) < 2
    # exact zeros hit the log singularity; AGM(1, 0) would then stall
    out[m] = 1.0 / (2.0 * np.pi * agm(1.0, np.maximum(0.5 * np.abs(s[m]), 1e-300)))
    return out


def _row_rule(lo, hi, breaks, ref_x, ref_w):
    pts = np.concatenate([lo[:, None], np.clip(breaks, lo[:, None], hi[:, None]), hi[:, None]], axis=1)
    pts.sort(axis=1)
    a = pts[:, :-1]
    width = pts[:, 1:] - a
    x = (a[:, :, None] + width[:, :, None] * ref_x).reshape(len(lo), -1)
    w = (width[:, :, None] * ref_w).reshape(len(lo), -1)
    return x, w


def sum_density(d: int, s, rule=DEFAULT_RULE) -> np.ndarray:
    """Density ``p_d`` of ``cos θ_1 + ... + cos θ_d`` (array in, array out)."""
    s = np.asarray(s, dtype=float)
    shape = s.shape
    s = s.ravel()
    if d == 1:
        return _p1(s).reshape(shape)
    if d == 2:
        return _p2(s).reshape(shape)
    ref_x, ref_w = graded_rule(0.0, 1.0, *rule)
    if d == 3:
        lo = np.zeros_like(s)
        hi = np.full_like(s, np.pi)
        breaks = np.arccos(np.clip(np.stack([s + 2, s, s - 2], axis=1), -1, 1))
        x, w = _row_rule(lo, hi, breaks, ref_x, ref_w)
        out = np.sum(w * _p2(s[:, None] - np.cos(x)), axis=1) / np.pi
        return out.reshape(shape)
    m = d - 2
    lo = np.maximum(-2.0, s - m)
    hi = np.maximum(np.minimum(2.0, s + m), lo)
    inner_points = np.arange(-m, m + 1, 2, dtype=float)
    breaks = np.concatenate([np.zeros((s.size, 1)), s[:, None] - inner_points], axis=1)
    x, w = _row_rule(lo, hi, breaks, ref_x, ref_w)
    inner = sum_density(m, (s[:, None] - x).ravel(), rule).reshape(x.shape)
    return np.sum(w * _p2(x) * inner, axis=1).reshape(shape)


def density(d: int, x, rule=None) -> np.ndarray:
    """Density ``ρ_d(x)`` of ``g`` on ``[-1, 1]``; zero outside.

    Returns ``inf`` at the logarithmic van Hove point ``x = 0`` of ``d = 2``.
    Large arrays are processed in blocks to bound memory for ``d >= 5``.
    """
    if rule is None:
        rule = DEFAULT_RULE if d <= 4 else COARSE_RULE
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    block = 4096 if d <= 4 else 16
    out = np.empty_like(flat)
    for start in range(0, flat.size, block):
        sl = slice(start, start + block)
        out[sl] = d * sum_density(d, d * flat[sl], rule)
    if d == 2:
        out[flat == 0] = np.inf
    return out.reshape(x.shape)
