"""Galerkin forms of the Poincare-type inequality and their certification.

For a support function ``h`` with reverse Weingarten matrix ``Q``, cofactor
matrix ``C`` and a harmonic basis ``phi_m``:

    A_mn = int  C grad(phi_m) . grad(phi_n)
    B_mn = int  tr(C) phi_m phi_n
    l_m  = int  phi_m det(Q)

The inequality ``B(phi, phi) <= A(phi, phi)`` whenever ``l(phi) = 0`` is
certified by the smallest eigenvalue of the pencil (A, B) on ker(l).  The
boundary form is evaluated through the Gauss map: for ``psi = phi o nu``
the boundary gradient is ``Q^-1 grad(phi)`` and the boundary measure is
``det(Q)`` times the sphere measure.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .body import min_principal_curvature, require_valid, spec_to_dict
from .sphere import LinearField

DEFAULT_TOL = 1e-7
MULTIPLICITY_TOL = 1e-7


class IndefiniteFormError(ValueError):
    """The mass form is not positive definite, typically from an under-resolved quadrature."""


@dataclass(frozen=True, eq=False)
class PoincareForms:
    """Sphere-side forms (A, B, ell) plus boundary mass G and Dirichlet D."""

    A: np.ndarray
    B: np.ndarray
    ell: np.ndarray
    G: np.ndarray
    D: np.ndarray

    @property
    def scale(self):
        return float(np.max(np.diag(self.B)))

    def as_dict(self):
        return {"A": self.A, "B": self.B, "ell": self.ell, "G": self.G, "D": self.D}


@dataclass(frozen=True, eq=False)
class BoundaryForms:
    """The three integrals of the boundary inequality, pulled back to the sphere."""

    A: np.ndarray  # int ((D nu)^-1 grad psi_m, grad psi_n)
    B: np.ndarray  # int tr(D nu) psi_m psi_n
    ell: np.ndarray  # int psi_m


@dataclass
class VerificationReport:
    name: str
    body: dict
    basis_degree: int
    resolution: int
    scalars: dict = field(default_factory=dict)
    multiplicities: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.flags.values())


def _sym(M):
    return 0.5 * (M + M.T)


def _pair(X, Y, weight):
    """sum_p weight_p <X[a, p], Y[b, p]> over the trailing axes, as one matmul."""
    M = X.shape[0]
    Xw = X * weight.reshape((1, -1) + (1,) * (X.ndim - 2))
    return Xw.reshape(M, -1) @ Y.reshape(M, -1).T


def assemble_forms(h, basis, quad):
    w = require_valid(h, quad)
    J = basis.jets(quad)
    wt = quad.weights
    detQ = w.detQ
    trC = np.trace(w.C, axis1=1, axis2=2)
    A = _pair(J.gradients, np.einsum("pij,bpj->bpi", w.C, J.gradients), wt)
    B = _pair(J.values, J.values, wt * trC)
    ell = J.values @ (wt * detQ)
    G = _pair(J.values, J.values, wt * detQ)
    bg = np.einsum("pij,apj->api", w.Qinv, J.gradients)
    D = _pair(bg, bg, wt * detQ)
    return PoincareForms(A=_sym(A), B=_sym(B), ell=ell, G=_sym(G), D=_sym(D))


def boundary_forms(h, basis, quad):
    """Boundary-side integrals via the Weingarten map ``D nu = Q^-1``.

    Uses only ``Q^-1``, its inverse and det Q (never the cofactor matrix),
    so agreement with :func:`assemble_forms` checks the change of variables.
    """
    w = require_valid(h, quad)
    J = basis.jets(quad)
    dmu = quad.weights * w.detQ
    weingarten = w.Qinv
    weingarten_inv = np.linalg.inv(weingarten)
    grad_psi = np.einsum("pij,apj->api", weingarten, J.gradients)
    A = _pair(grad_psi, np.einsum("pij,bpj->bpi", weingarten_inv, grad_psi), dmu)
    B = _pair(J.values, J.values, dmu * np.trace(weingarten, axis1=1, axis2=2))
    ell = J.values @ dmu
    return BoundaryForms(A=_sym(A), B=_sym(B), ell=ell)


def constraint_kernel(ell):
    """Orthonormal basis (columns) of ``{c : ell . c = 0}`` via one Householder reflection."""
    ell = np.asarray(ell, dtype=float)
    norm = np.linalg.norm(ell)
    if norm == 0.0:
        raise ValueError("constraint vector is zero")
    v = ell.copy()
    v[0] += np.copysign(norm, ell[0])
    v /= np.linalg.norm(v)
    H = np.eye(len(ell)) - 2.0 * np.outer(v, v)
    return H[:, 1:]


@dataclass(frozen=True, eq=False)
class RayleighResult:
    lambda_min: float
    multiplicity: int
    witness: np.ndarray  # coefficients in the full basis, B-normalized
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, full-basis coefficients


def constrained_pencil(A, B, ell, multiplicity_tol=MULTIPLICITY_TOL):
    """Eigenpairs of A c = lambda B c restricted to ker(ell), ascending."""
    Z = constraint_kernel(ell)
    Az = _sym(Z.T @ A @ Z)
    Bz = _sym(Z.T @ B @ Z)
    try:
        L = np.linalg.cholesky(Bz)
    except np.linalg.LinAlgError:
        raise IndefiniteFormError("B is not positive definite on the constraint subspace") from None
    X = solve_triangular(L, Az, lower=True)
    M = _sym(solve_triangular(L, X.T, lower=True))
    lam, Y = np.linalg.eigh(M)
    vecs = Z @ solve_triangular(L.T, Y, lower=False)
    mult = int(np.sum(lam <= lam[0] + multiplicity_tol))
    return RayleighResult(lambda_min=float(lam[0]), multiplicity=mult, witness=vecs[:, 0],
                          eigenvalues=lam, eigenvectors=vecs)


def min_constrained_rayleigh(forms, multiplicity_tol=MULTIPLICITY_TOL):
    """Smallest A/B Rayleigh quotient on ker(ell): returns (lambda, multiplicity, witness)."""
    r = constrained_pencil(forms.A, forms.B, forms.ell, multiplicity_tol)
    return r.lambda_min, r.multiplicity, r.witness


def restricted_eigenvalues(M, ell):
    """Ascending eigenvalues of the symmetric matrix M on ker(ell) (orthonormal basis)."""
    Z = constraint_kernel(ell)
    return np.linalg.eigvalsh(_sym(Z.T @ M @ Z))


def linear_coefficients(basis, quad):
    """Rows: basis coefficients of ``u -> u_k`` for k = 1..n (by exact projection)."""
    J = basis.jets(quad)
    coords = quad.nodes.T  # (n, N)
    return np.einsum("p,kp,ap->ka", quad.weights, coords, J.values)


def _base_report(name, h, basis, quad, tol):
    return VerificationReport(name=name, body=_describe(h), basis_degree=basis.max_degree,
                              resolution=quad.resolution, tolerances={"tol": tol})


def _describe(h):
    spec = getattr(h, "spec", None)
    return spec_to_dict(spec) if spec is not None else {"field": repr(h)}


def verify_T2(h, basis, quad, tol=DEFAULT_TOL, forms=None):
    """Certify ``int tr(C) phi^2 <= int C grad phi . grad phi`` on ker(ell)."""
    forms = assemble_forms(h, basis, quad) if forms is None else forms
    report = _base_report("sphere_form", h, basis, quad, tol)
    return _certify(report, forms.A, forms.B, forms.ell, basis, quad, tol)


def _certify(report, A, B, ell, basis, quad, tol):
    scale = float(np.max(np.diag(B)))
    res = constrained_pencil(A, B, ell)
    gap = restricted_eigenvalues(A - B, ell)
    n = quad.dim
    lin = linear_coefficients(basis, quad)
    lin /= np.linalg.norm(lin, axis=1)[:, None]
    ell_res = np.abs(lin @ ell) / np.linalg.norm(ell)
    ker_res = np.linalg.norm(lin @ (A - B), axis=1) / scale
    above = res.eigenvalues[res.eigenvalues > res.lambda_min + MULTIPLICITY_TOL]
    report.scalars.update({
        "lambda_min": res.lambda_min,
        "lambda_next": float(above[0]) if len(above) else float("nan"),
        "min_eig_A_minus_B": float(gap[0]),
        "eig_A_minus_B_after_kernel": float(gap[n]) if len(gap) > n else float("nan"),
        "scale": scale,
        "max_linear_ell_residual": float(ell_res.max()),
        "max_linear_kernel_residual": float(ker_res.max()),
    })
    report.multiplicities["lambda_min"] = res.multiplicity
    report.multiplicities["near_kernel_A_minus_B"] = int(np.sum(gap <= tol * scale))
    report.flags.update({
        "lambda_min_ge_1": bool(res.lambda_min >= 1 - tol),
        "A_minus_B_psd": bool(gap[0] >= -tol * scale),
        "linear_functions_in_constraint": bool(ell_res.max() <= tol),
        "linear_functions_in_kernel": bool(ker_res.max() <= tol),
    })
    return report


def _rel_defect(X, Y):
    denom = max(float(np.max(np.abs(X))), float(np.max(np.abs(Y))), np.finfo(float).tiny)
    return float(np.max(np.abs(X - Y)) / denom)


def verify_T1(h, basis, quad, tol=DEFAULT_TOL, forms=None):
    """Check the change of variables to the boundary and re-certify there.

    Compares every boundary-side integral (mean, curvature-weighted mass,
    inverse-Weingarten Dirichlet form) with its sphere-side counterpart,
    checks the equality case ``psi = (nu, e_k)`` and runs the constrained
    eigenproblem on the boundary matrices.
    """
    forms = assemble_forms(h, basis, quad) if forms is None else forms
    bd = boundary_forms(h, basis, quad)
    report = _base_report("boundary_form", h, basis, quad, tol)
    report.scalars.update({
        "mean_defect": _rel_defect(bd.ell, forms.ell),
        "mass_defect": _rel_defect(bd.B, forms.B),
        "dirichlet_defect": _rel_defect(bd.A, forms.A),
    })
    worst_ell, worst_gap = 0.0, 0.0
    for k in range(quad.dim):
        e = np.zeros(quad.dim)
        e[k] = 1.0
        r = equality_case_check(h, e, quad, tol)
        worst_ell = max(worst_ell, r.scalars["ell_residual"])
        worst_gap = max(worst_gap, r.scalars["relative_gap"])
    report.scalars["normal_mean_residual"] = worst_ell
    report.scalars["normal_equality_gap"] = worst_gap
    _certify(report, bd.A, bd.B, bd.ell, basis, quad, tol)
    report.flags.update({
        "pullback_consistent": max(report.scalars[k] for k in ("mean_defect", "mass_defect", "dirichlet_defect")) <= tol,
        "normal_components_mean_zero": worst_ell <= tol,
        "normal_components_equality": worst_gap <= tol,
    })
    return report


def lichnerowicz_check(h, basis, quad, tol=DEFAULT_TOL, forms=None):
    """lambda_1(boundary) >= (n-1) alpha^2 on the Galerkin space."""
    forms = assemble_forms(h, basis, quad) if forms is None else forms
    n = quad.dim
    alpha = min_principal_curvature(h, quad)
    bound = (n - 1) * alpha**2
    scale = float(np.max(np.diag(forms.G)))
    margin = float(restricted_eigenvalues(forms.D - bound * forms.G, forms.ell)[0])
    lam1 = constrained_pencil(forms.D, forms.G, forms.ell).lambda_min
    report = _base_report("lichnerowicz", h, basis, quad, tol)
    report.scalars.update({
        "alpha": alpha,
        "bound": bound,
        "lambda1_estimate": lam1,
        "margin": margin,
        "scale": scale,
    })
    report.flags["bound_holds"] = bool(margin >= -tol * scale)
    return report


def equality_case_check(h, u0, quad, tol=DEFAULT_TOL):
    """Residuals of the constraint and of A - B for phi(u) = (u, u0)."""
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (quad.dim,):
        raise ValueError(f"u0 must have {quad.dim} components")
    if np.linalg.norm(u0) == 0.0:
        raise ValueError("u0 must be a nonzero vector")
    w = require_valid(h, quad)
    pj = LinearField(u0).jet(quad)
    ell = float(quad.integrate(pj.value * w.detQ))
    A = float(quad.integrate(np.einsum("pi,pij,pj->p", pj.gradient, w.C, pj.gradient)))
    B = float(quad.integrate(np.trace(w.C, axis1=1, axis2=2) * pj.value**2))
    gap = abs(A - B) / A
    report = VerificationReport(name="equality_case", body=_describe(h), basis_degree=0,
                                resolution=quad.resolution, tolerances={"tol": tol})
    report.scalars.update({"ell_residual": abs(ell), "A": A, "B": B, "relative_gap": gap})
    report.flags.update({"mean_zero": abs(ell) <= tol, "equality": gap <= tol})
    return report
