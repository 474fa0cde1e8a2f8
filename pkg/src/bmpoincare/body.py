"""Convex bodies of class C^2_+ described by their support functions.

A body is a small recursive :class:`BodySpec` tree (balls, ellipsoids and
their translates, dilates, Minkowski sums and harmonic perturbations).  Its
:class:`SupportFunction` evaluates the 1-homogeneous extension
``H(x) = |x| h(x/|x|)`` together with its exact gradient and Hessian, from
which the reverse Weingarten matrix ``Q = (h_ij + h delta_ij)`` is read off
as the tangent-plane restriction of ``D^2 H``.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .harmonics import harmonic_function
from .sphere import SphereField, covariant_jet, rehomogenize, tangent_frames

VALIDITY_MARGIN = 1e-8


class BodySpecError(ValueError):
    """A body document does not match the schema."""


class InvalidBodyError(ValueError):
    """The support function is not that of a C^2_+ body on the given nodes."""


@dataclass(frozen=True)
class Ball:
    radius: float


@dataclass(frozen=True)
class Ellipsoid:
    semiaxes: tuple


@dataclass(frozen=True)
class Translate:
    inner: object
    vector: tuple


@dataclass(frozen=True)
class Scale:
    inner: object
    factor: float


@dataclass(frozen=True)
class MinkowskiSum:
    parts: tuple


@dataclass(frozen=True)
class HarmonicPerturbation:
    base: object
    coefficients: tuple  # ((key, value), ...) in document order


BodySpec = Ball | Ellipsoid | Translate | Scale | MinkowskiSum | HarmonicPerturbation


def _positive(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BodySpecError(f"{what} must be a number, got {value!r}")
    if not np.isfinite(value) or value <= 0:
        raise BodySpecError(f"{what} must be positive, got {value!r}")
    return float(value)


def _vector(value, what):
    if not isinstance(value, list) or not value:
        raise BodySpecError(f"{what} must be a non-empty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise BodySpecError(f"{what} must contain finite numbers, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _get(doc, name, kind):
    if name not in doc:
        raise BodySpecError(f"'{kind}' body needs field '{name}'")
    return doc[name]


_FIELDS = {
    "ball": {"radius"},
    "ellipsoid": {"semiaxes"},
    "translate": {"inner", "vector"},
    "scale": {"inner", "factor"},
    "minkowski_sum": {"parts"},
    "harmonic_perturbation": {"base", "coefficients"},
}


def _from_dict(doc):
    if not isinstance(doc, dict):
        raise BodySpecError(f"body must be a JSON object, got {type(doc).__name__}")
    kind = doc.get("type")
    if kind not in _FIELDS:
        raise BodySpecError(f"unknown body type {kind!r}; expected one of {sorted(_FIELDS)}")
    extra = set(doc) - _FIELDS[kind] - {"type"}
    if extra:
        raise BodySpecError(f"unexpected fields for '{kind}': {sorted(extra)}")
    if kind == "ball":
        return Ball(_positive(_get(doc, "radius", kind), "radius"))
    if kind == "ellipsoid":
        axes = _vector(_get(doc, "semiaxes", kind), "semiaxes")
        for a in axes:
            _positive(a, "semiaxis")
        return Ellipsoid(axes)
    if kind == "translate":
        return Translate(_from_dict(_get(doc, "inner", kind)), _vector(_get(doc, "vector", kind), "vector"))
    if kind == "scale":
        return Scale(_from_dict(_get(doc, "inner", kind)), _positive(_get(doc, "factor", kind), "factor"))
    if kind == "minkowski_sum":
        parts = _get(doc, "parts", kind)
        if not isinstance(parts, list) or not parts:
            raise BodySpecError("minkowski_sum needs a non-empty list of parts")
        return MinkowskiSum(tuple(_from_dict(p) for p in parts))
    coeffs = _get(doc, "coefficients", kind)
    if not isinstance(coeffs, dict):
        raise BodySpecError("coefficients must be an object mapping harmonic keys to numbers")
    items = []
    for key, value in coeffs.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            raise BodySpecError(f"coefficient for {key!r} must be a finite number")
        items.append((str(key).replace(" ", ""), float(value)))
    spec = HarmonicPerturbation(_from_dict(_get(doc, "base", kind)), tuple(items))
    _harmonic_terms(spec)
    return spec


def parse_body_spec(document):
    """Parse a body from a JSON string, bytes, or an already decoded dict."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise BodySpecError(f"malformed JSON: {exc}") from None
    spec = _from_dict(document)
    body_dim(spec)  # rejects mixed dimensions
    return spec


def spec_to_dict(spec):
    match spec:
        case Ball(r):
            return {"type": "ball", "radius": r}
        case Ellipsoid(a):
            return {"type": "ellipsoid", "semiaxes": list(a)}
        case Translate(inner, v):
            return {"type": "translate", "inner": spec_to_dict(inner), "vector": list(v)}
        case Scale(inner, c):
            return {"type": "scale", "inner": spec_to_dict(inner), "factor": c}
        case MinkowskiSum(parts):
            return {"type": "minkowski_sum", "parts": [spec_to_dict(p) for p in parts]}
        case HarmonicPerturbation(base, coeffs):
            return {"type": "harmonic_perturbation", "base": spec_to_dict(base), "coefficients": dict(coeffs)}
    raise TypeError(f"not a body spec: {spec!r}")


def _key_dim(key):
    return 3 if "," in key else 2


def _harmonic_terms(spec):
    dims = {_key_dim(k) for k, _ in spec.coefficients}
    if len(dims) > 1:
        raise BodySpecError("coefficient keys mix 'l' (n=2) and 'l,m' (n=3) forms")
    try:
        return [(harmonic_function(_key_dim(k), k), c) for k, c in spec.coefficients]
    except ValueError as exc:
        raise BodySpecError(str(exc)) from None


def body_dim(spec):
    """Ambient dimension implied by the body tree, or None if any dimension fits."""
    dims = set()

    def visit(s):
        match s:
            case Ellipsoid(a):
                dims.add(len(a))
            case Translate(inner, v):
                dims.add(len(v))
                visit(inner)
            case Scale(inner, _):
                visit(inner)
            case MinkowskiSum(parts):
                for p in parts:
                    visit(p)
            case HarmonicPerturbation(base, coeffs):
                dims.update(_key_dim(k) for k, _ in coeffs)
                visit(base)

    visit(spec)
    if len(dims) > 1:
        raise BodySpecError(f"body mixes ambient dimensions {sorted(dims)}")
    if dims and not dims <= {2, 3}:
        raise BodySpecError(f"only n = 2 or 3 is supported, body lives in R^{dims.pop()}")
    return dims.pop() if dims else None


def _jet(spec, u):
    """(H, grad H, D^2 H) of the 1-homogeneous support function at unit points."""
    N, n = u.shape
    match spec:
        case Ball(r):
            return np.full(N, r), r * u, r * (np.eye(n) - u[:, :, None] * u[:, None, :])
        case Ellipsoid(a):
            a2 = np.asarray(a) ** 2
            Ax = u * a2
            H = np.sqrt(np.sum(u * Ax, axis=1))
            grad = Ax / H[:, None]
            hess = np.eye(n) * a2 / H[:, None, None] - Ax[:, :, None] * Ax[:, None, :] / H[:, None, None] ** 3
            return H, grad, hess
        case Translate(inner, v):
            H, g, D = _jet(inner, u)
            v = np.asarray(v)
            return H + u @ v, g + v, D
        case Scale(inner, c):
            H, g, D = _jet(inner, u)
            return c * H, c * g, c * D
        case MinkowskiSum(parts):
            H, g, D = _jet(parts[0], u)
            for p in parts[1:]:
                H2, g2, D2 = _jet(p, u)
                H, g, D = H + H2, g + g2, D + D2
            return H, g, D
        case HarmonicPerturbation(base, _):
            H, g, D = _jet(base, u)
            for f, c in _harmonic_terms(spec):
                v2, g2, D2 = rehomogenize(*f.euclidean_jet(u), u, f.degree, 1)
                H, g, D = H + c * v2, g + c * g2, D + c * D2
            return H, g, D
    raise TypeError(f"not a body spec: {spec!r}")


class SupportFunction(SphereField):
    """Support function of a body built from a :class:`BodySpec`."""

    degree = 1

    def __init__(self, spec):
        if isinstance(spec, (str, bytes, dict)):
            spec = parse_body_spec(spec)
        self.spec = spec
        self.dim = body_dim(spec)

    def euclidean_jet(self, points):
        points = np.asarray(points, dtype=float)
        if self.dim is not None and points.shape[1] != self.dim:
            raise ValueError(f"body lives in R^{self.dim}, points in R^{points.shape[1]}")
        return _jet(self.spec, points)

    def to_dict(self):
        return spec_to_dict(self.spec)

    def __repr__(self):
        return f"SupportFunction({spec_to_dict(self.spec)})"


def support_value(h, u):
    """h(u) for one direction or a stack of directions."""
    return h(u)


@dataclass(frozen=True, eq=False)
class WeingartenData:
    """Per-node reverse Weingarten matrix Q and derived quantities.

    ``C`` is the cofactor matrix (entrywise ``d det(Q) / d Q_ij``), computed
    from the adjugate formula; ``Qinv`` comes from a separate inversion and
    is NaN at nodes where Q is singular.
    """

    Q: np.ndarray
    detQ: np.ndarray
    Qinv: np.ndarray
    C: np.ndarray
    min_eigenvalues: np.ndarray
    valid_nodes: np.ndarray

    @property
    def valid(self):
        return bool(np.all(self.valid_nodes))

    @property
    def min_eigenvalue(self):
        return float(self.min_eigenvalues.min())


def cofactor(Q):
    """Cofactor matrices of a stack of 1x1 or 2x2 matrices."""
    k = Q.shape[-1]
    if k == 1:
        return np.ones_like(Q)
    if k == 2:
        C = np.empty_like(Q)
        C[:, 0, 0] = Q[:, 1, 1]
        C[:, 1, 1] = Q[:, 0, 0]
        C[:, 0, 1] = -Q[:, 1, 0]
        C[:, 1, 0] = -Q[:, 0, 1]
        return C
    raise ValueError("cofactor matrices are implemented for n - 1 <= 2")


def weingarten_from_jet(jet, margin=VALIDITY_MARGIN):
    Q = jet.shifted_hessian()
    Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
    eig = np.linalg.eigvalsh(Q)[:, 0]
    valid = eig >= margin
    Qinv = np.full_like(Q, np.nan)
    ok = np.abs(np.linalg.det(Q)) > 0
    if np.any(ok):
        Qinv[ok] = np.linalg.inv(Q[ok])
    return WeingartenData(Q=Q, detQ=np.linalg.det(Q), Qinv=Qinv, C=cofactor(Q), min_eigenvalues=eig, valid_nodes=valid)


def reverse_weingarten(h, quad):
    """Q, det Q, Q^-1 and cofactor matrix of ``h`` at every node of ``quad``."""
    return weingarten_from_jet(h.jet(quad))


def validate_C2plus(h, quad, margin=VALIDITY_MARGIN):
    """Return ``(flag, min_eigenvalue)``; flag is True iff min-eig(Q) >= margin."""
    w = reverse_weingarten(h, quad)
    m = w.min_eigenvalue
    return bool(m >= margin), m


def require_valid(h, quad, w=None):
    w = reverse_weingarten(h, quad) if w is None else w
    if not w.valid:
        raise InvalidBodyError(
            f"support function is not C^2_+ on the grid: min eigenvalue of Q is "
            f"{w.min_eigenvalue:.6g} < {VALIDITY_MARGIN:g} at {int(np.sum(~w.valid_nodes))} node(s)"
        )
    return w


def gauss_preimage(h, u):
    """Boundary point with outer normal ``u``: the gradient of H at ``u``.

    Raises :class:`InvalidBodyError` if Q is not positive definite there.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = np.atleast_2d(u)
    U = U / np.linalg.norm(U, axis=1)[:, None]
    frames = tangent_frames(U)
    if frames.ndim == 2:
        frames = frames[None]
    w = weingarten_from_jet(covariant_jet(h, U, frames))
    if not w.valid:
        raise InvalidBodyError("Gauss map is not invertible at the requested direction(s)")
    x = h.jet_at_degree(U, 1)[1]
    return x[0] if single else x


def volume(h, quad, w=None):
    """(1/n) * integral of h det(Q) over the sphere."""
    jet = h.jet(quad)
    w = require_valid(h, quad, weingarten_from_jet(jet) if w is None else w)
    return float(quad.integrate(jet.value * w.detQ)) / quad.dim


def _max_radius(h, u):
    """Largest eigenvalue of Q at one direction (the largest principal radius)."""
    u = u / np.linalg.norm(u)
    frames = tangent_frames(u[None])
    Q = covariant_jet(h, u[None], frames).shifted_hessian()[0]
    return float(np.linalg.eigvalsh(0.5 * (Q + Q.T))[-1])


def min_principal_curvature(h, quad, refine=True):
    """Smallest principal curvature ``alpha`` of the boundary.

    Starts from the minimum over the nodes of the smallest eigenvalue of
    ``Q^-1``; with ``refine`` the largest principal radius is then maximized
    locally around the best node, so the result never exceeds the node value.
    """
    w = require_valid(h, quad)
    radii = np.linalg.eigvalsh(w.Q)[:, -1]
    p = int(np.argmax(radii))
    best = float(radii[p])
    if refine:
        u0 = quad.nodes[p]
        E = quad.frames[p]

        def neg_radius(s):
            return -_max_radius(h, u0 + E.T @ s)

        res = minimize(neg_radius, np.zeros(quad.dim - 1), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 2000})
        if -res.fun > best:
            u_best = u0 + E.T @ res.x
            frames = tangent_frames(u_best[None] / np.linalg.norm(u_best))
            if weingarten_from_jet(covariant_jet(h, (u_best / np.linalg.norm(u_best))[None], frames)).valid:
                best = -float(res.fun)
    return 1.0 / best
