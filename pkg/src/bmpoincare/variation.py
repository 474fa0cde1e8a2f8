"""Volume functional on support functions and its first two variations."""

from dataclasses import dataclass

import numpy as np

from .body import InvalidBodyError, require_valid, volume, weingarten_from_jet

DEFAULT_POINTS = 33


@dataclass(frozen=True)
class VariationResult:
    """``f(s) = F(h + s phi)`` and ``g(s) = f(s)^(1/n)`` differentiated at s=0."""

    dim: int
    f0: float
    f1: float
    f2: float
    g2: float
    safe_step: float

    @staticmethod
    def concavity(dim, f0, f1, f2):
        n = dim
        return (1 / n) * (1 / n - 1) * f0 ** (1 / n - 2) * f1**2 + (1 / n) * f0 ** (1 / n - 1) * f2


def F(h, quad):
    """Volume functional; alias of :func:`bmpoincare.body.volume`."""
    return volume(h, quad)


def first_variation(h, phi, quad):
    """f'(0) = integral of phi det(Q)."""
    w = require_valid(h, quad)
    return float(quad.integrate(phi.jet(quad).value * w.detQ))


def _second(w, pj, quad):
    M = pj.shifted_hessian()
    return float(quad.integrate(pj.value * np.einsum("pij,pij->p", w.C, M)))


def second_variation(h, phi, quad):
    """f''(0) = integral of phi * sum_ij C_ij (phi_ij + phi delta_ij)."""
    w = require_valid(h, quad)
    return _second(w, phi.jet(quad), quad)


def safe_step(w, phi_jet):
    """Step bound keeping h + s phi in the C^2_+ cone on the grid.

    min-eig(Q) over the nodes divided by the largest spectral norm of
    ``phi_ij + phi delta_ij``; infinite when phi has vanishing shifted Hessian.
    """
    M = phi_jet.shifted_hessian()
    norm = float(np.max(np.abs(np.linalg.eigvalsh(M)))) if len(M) else 0.0
    if norm == 0.0:
        return float("inf")
    return w.min_eigenvalue / norm


def variation_profile(h, phi, quad):
    hj = h.jet(quad)
    w = require_valid(h, quad, weingarten_from_jet(hj))
    pj = phi.jet(quad)
    n = quad.dim
    f0 = float(quad.integrate(hj.value * w.detQ)) / n
    f1 = float(quad.integrate(pj.value * w.detQ))
    f2 = _second(w, pj, quad)
    g2 = VariationResult.concavity(n, f0, f1, f2)
    return VariationResult(dim=n, f0=f0, f1=f1, f2=f2, g2=g2, safe_step=safe_step(w, pj))


def fd_first_variation(h, phi, quad, eps=1e-4):
    """Central difference (F(h + eps phi) - F(h - eps phi)) / (2 eps)."""
    return (volume(h + eps * phi, quad) - volume(h - eps * phi, quad)) / (2 * eps)


def fd_second_variation(h, phi, quad, eps=1e-3):
    """Second difference (F(h + eps phi) - 2F(h) + F(h - eps phi)) / eps^2."""
    return (volume(h + eps * phi, quad) - 2 * volume(h, quad) + volume(h - eps * phi, quad)) / eps**2


@dataclass(frozen=True)
class ConcavityScan:
    t: np.ndarray
    g: np.ndarray
    margins: dict  # (i, j) -> g(mid) - (g_i + g_j) / 2
    min_margin: float
    argmin: tuple


def bm_concavity_scan(h0, h1, quad, t_grid=None):
    """g(t) = F((1-t) h0 + t h1)^(1/n) on a grid, with midpoint-concavity margins.

    Margins cover every grid pair whose midpoint is itself a grid point.
    """
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, DEFAULT_POINTS)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 3 or np.any(t < 0) or np.any(t > 1):
        raise ValueError("t_grid must be at least three points in [0, 1]")
    n = quad.dim
    require_valid(h0, quad)
    require_valid(h1, quad)
    g = np.empty(len(t))
    for k, tk in enumerate(t):
        try:
            g[k] = volume((1 - tk) * h0 + tk * h1, quad) ** (1 / n)
        except InvalidBodyError as exc:
            raise RuntimeError(f"convex combination left the C^2_+ cone at t={tk}: {exc}") from exc
    margins = {}
    scale = max(1.0, float(np.max(np.abs(t))))
    for i in range(len(t)):
        for j in range(i + 2, len(t)):
            mid = 0.5 * (t[i] + t[j])
            k = int(np.argmin(np.abs(t - mid)))
            if abs(t[k] - mid) <= 1e-12 * scale:
                margins[(i, j)] = g[k] - 0.5 * (g[i] + g[j])
    if not margins:
        raise ValueError("t_grid has no pair with a grid midpoint")
    argmin = min(margins, key=margins.get)
    return ConcavityScan(t=t, g=g, margins=margins, min_margin=float(margins[argmin]), argmin=argmin)


def weak_divergence_check(h, f, g, quad):
    """|S(f, g) - S(g, f)| with S(f, g) = integral of f * sum_ij C_ij g_ij.

    S is symmetric because the rows of the cofactor matrix are divergence
    free; the defect measures how well the discrete integrals honour that.
    """
    w = require_valid(h, quad)
    fj, gj = f.jet(quad), g.jet(quad)
    s_fg = quad.integrate(fj.value * np.einsum("pij,pij->p", w.C, gj.hessian))
    s_gf = quad.integrate(gj.value * np.einsum("pij,pij->p", w.C, fj.hessian))
    return float(abs(s_fg - s_gf))


def weak_divergence_matrix(w, jets, quad):
    """S(phi_a, phi_b) for all basis pairs; antisymmetric part is the defect."""
    CH = np.einsum("pij,bpij->bp", w.C, jets.hessians)
    return np.einsum("p,ap,bp->ab", quad.weights, jets.values, CH)
