"""Quadrature, tangent frames and covariant derivatives on S^1 and S^2.

Scalar fields on the sphere are handled through homogeneous extensions to
R^n.  A field of homogeneity ``k`` supplies the value, Euclidean gradient and
Euclidean Hessian of its extension at unit points; covariant derivatives in
an orthonormal tangent frame follow from

    grad_S f = tangential part of grad F
    hess_S f = (D^2 F restricted to the tangent plane) - k f Id

which is the geodesic second derivative of ``F`` along great circles.
"""

from dataclasses import dataclass

import numpy as np

SUPPORTED_DIMS = (2, 3)
MIN_RESOLUTION = 4


def sphere_measure(dim):
    """Total (dim-1)-dimensional measure of the unit sphere in R^dim."""
    _check_dim(dim)
    return 2.0 * np.pi if dim == 2 else 4.0 * np.pi


def _check_dim(dim):
    if dim not in SUPPORTED_DIMS:
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Nodes, positive weights and orthonormal tangent frames on S^{dim-1}.

    ``frames[p]`` has shape ``(dim-1, dim)``; its rows are the tangent
    vectors at ``nodes[p]``.  ``degree`` is the largest harmonic degree
    integrated exactly.
    """

    dim: int
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """Weighted sum over the leading (node) axis of ``values``."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def tangent_frames(nodes):
    """Deterministic orthonormal tangent frames at unit vectors.

    The coordinate axis least aligned with ``u`` is projected onto the
    tangent plane and normalized; in R^3 the second vector is ``u x t1``.

    Parameters
    ----------
    nodes : array, shape (N, n) or (n,)

    Returns
    -------
    frames : array, shape (N, n-1, n) or (n-1, n)
    """
    u = np.asarray(nodes, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    N, n = u.shape
    _check_dim(n)
    k = np.argmin(np.abs(u), axis=1)
    axis = np.zeros_like(u)
    axis[np.arange(N), k] = 1.0
    t1 = axis - u[np.arange(N), k][:, None] * u
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    if n == 2:
        frames = t1[:, None, :]
    else:
        t2 = np.cross(u, t1)
        t2 /= np.linalg.norm(t2, axis=1)[:, None]
        frames = np.stack([t1, t2], axis=1)
    return frames[0] if single else frames


def build_quadrature(dim, resolution):
    """Tensor quadrature on the unit circle (dim=2) or sphere (dim=3).

    dim=2 uses ``resolution`` equispaced angles, exact for trigonometric
    polynomials of degree ``resolution - 1``.  dim=3 uses ``resolution``
    Gauss-Legendre nodes in ``cos(colatitude)`` times ``2 * resolution``
    equispaced longitudes, exact for spherical harmonics of degree
    ``2 * resolution - 1``.  Poles are never nodes.
    """
    _check_dim(dim)
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution!r}")
    resolution = int(resolution)
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(resolution) / resolution
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(resolution, 2.0 * np.pi / resolution)
        degree = resolution - 1
    else:
        z, wz = np.polynomial.legendre.leggauss(resolution)
        n_lon = 2 * resolution
        lon = 2.0 * np.pi * np.arange(n_lon) / n_lon
        s = np.sqrt(1.0 - z**2)
        Z, LON = np.meshgrid(z, lon, indexing="ij")
        S = np.broadcast_to(s[:, None], Z.shape)
        nodes = np.column_stack([(S * np.cos(LON)).ravel(), (S * np.sin(LON)).ravel(), Z.ravel()])
        # renormalize: removes the last ulp of drift from sqrt(1 - z^2)
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.repeat(wz * (2.0 * np.pi / n_lon), n_lon)
        degree = min(2 * resolution - 1, n_lon - 1)
    return SphereQuadrature(
        dim=dim,
        resolution=resolution,
        nodes=_frozen(nodes),
        weights=_frozen(weights),
        frames=_frozen(tangent_frames(nodes)),
        degree=degree,
    )


@dataclass(frozen=True, eq=False)
class CovariantJet:
    """Value, covariant gradient and covariant Hessian of a field at nodes.

    Shapes: ``value`` (N,), ``gradient`` (N, n-1), ``hessian`` (N, n-1, n-1).
    """

    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray

    def __add__(self, other):
        return CovariantJet(self.value + other.value, self.gradient + other.gradient,
                            self.hessian + other.hessian)

    def scaled(self, c):
        return CovariantJet(c * self.value, c * self.gradient, c * self.hessian)

    def shifted_hessian(self):
        """``f_ij + f delta_ij``, the matrix that is Q when f is a support function."""
        k = self.hessian.shape[-1]
        return self.hessian + self.value[:, None, None] * np.eye(k)


def rehomogenize(value, grad, hess, points, from_degree, to_degree):
    """Jet of ``|x|^(to - from) F`` at unit points, given the jet of ``F``."""
    s = to_degree - from_degree
    if s == 0:
        return value, grad, hess
    u = points
    n = u.shape[1]
    new_grad = grad + s * value[:, None] * u
    uu = u[:, :, None] * u[:, None, :]
    cross = grad[:, :, None] * u[:, None, :]
    new_hess = (hess + s * (cross + np.swapaxes(cross, 1, 2))
                + value[:, None, None] * (s * np.eye(n) + s * (s - 2) * uu))
    return value, new_grad, new_hess


class SphereField:
    """Smooth scalar field on the sphere given by a homogeneous extension.

    Subclasses set ``degree`` (the homogeneity of the extension) and
    implement :meth:`euclidean_jet`.  Fields form a vector space under
    ``+``, ``-`` and scalar ``*``.
    """

    degree = 0

    def euclidean_jet(self, points):
        """Return ``(value (N,), grad (N, n), hess (N, n, n))`` at unit points."""
        raise NotImplementedError

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            return self.euclidean_jet(points[None, :])[0][0]
        return self.euclidean_jet(points)[0]

    def jet_at_degree(self, points, degree):
        v, g, H = self.euclidean_jet(points)
        return rehomogenize(v, g, H, points, self.degree, degree)

    def jet(self, quad):
        """:class:`CovariantJet` of this field at the nodes of ``quad``."""
        return covariant_jet(self, quad.nodes, quad.frames)

    def __add__(self, other):
        if not isinstance(other, SphereField):
            return NotImplemented
        return FieldCombination(((1.0, self), (1.0, other)))

    def __sub__(self, other):
        if not isinstance(other, SphereField):
            return NotImplemented
        return FieldCombination(((1.0, self), (-1.0, other)))

    def __mul__(self, c):
        if isinstance(c, SphereField):
            return NotImplemented
        return FieldCombination(((float(c), self),))

    __rmul__ = __mul__

    def __neg__(self):
        return FieldCombination(((-1.0, self),))


class FieldCombination(SphereField):
    """Finite linear combination of fields.

    Terms of different homogeneity are brought to a common 1-homogeneous
    extension, so a combination of support-like fields is again a
    1-homogeneous support-like field.
    """

    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, FieldCombination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((c, f))
        self.terms = tuple(flat)
        degrees = {f.degree for _, f in self.terms}
        self.degree = degrees.pop() if len(degrees) == 1 else 1

    def euclidean_jet(self, points):
        total = None
        for c, f in self.terms:
            v, g, H = f.jet_at_degree(points, self.degree)
            part = (c * v, c * g, c * H)
            total = part if total is None else tuple(a + b for a, b in zip(total, part))
        return total

    def __repr__(self):
        return " + ".join(f"{c:g}*{f!r}" for c, f in self.terms)


class LinearField(SphereField):
    """The restriction of the linear function ``u -> (u, u0)``.

    This is also the support function of the singleton ``{u0}``.
    """

    degree = 1

    def __init__(self, u0):
        self.u0 = np.asarray(u0, dtype=float)
        if self.u0.ndim != 1:
            raise ValueError("u0 must be a vector")

    def euclidean_jet(self, points):
        N, n = points.shape
        if n != len(self.u0):
            raise ValueError(f"field lives in R^{len(self.u0)}, points in R^{n}")
        return (points @ self.u0, np.broadcast_to(self.u0, (N, n)).copy(), np.zeros((N, n, n)))

    def __repr__(self):
        return f"LinearField({self.u0.tolist()})"


def _as_frames(frame, N):
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 2:
        frame = np.broadcast_to(frame, (N,) + frame.shape)
    return frame


def covariant_gradient(f, u, frame):
    """Components ``(f_1, ..., f_{n-1})`` of the spherical gradient in ``frame``.

    ``u`` may be one direction (shape (n,)) or a stack (N, n); ``frame``
    matches with shape (n-1, n) or (N, n-1, n).
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = np.atleast_2d(u)
    _, g, _ = f.euclidean_jet(U)
    E = _as_frames(frame, len(U))
    out = np.einsum("pin,pn->pi", E, g)
    return out[0] if single else out


def covariant_hessian(f, u, frame):
    """Covariant Hessian ``(f_ij)`` in ``frame``; symmetric by construction."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = np.atleast_2d(u)
    v, _, H = f.euclidean_jet(U)
    E = _as_frames(frame, len(U))
    out = _tangent_hessian(E, H, v, f.degree)
    return out[0] if single else out


def _tangent_hessian(E, H, v, degree):
    T = np.einsum("pin,pnm,pjm->pij", E, H, E)
    T = 0.5 * (T + np.swapaxes(T, 1, 2))
    if degree:
        T = T - degree * v[:, None, None] * np.eye(E.shape[1])
    return T


def covariant_jet(f, nodes, frames):
    """Value, covariant gradient and Hessian of ``f`` at a stack of nodes."""
    v, g, H = f.euclidean_jet(nodes)
    grad = np.einsum("pin,pn->pi", frames, g)
    return CovariantJet(v, grad, _tangent_hessian(frames, H, v, f.degree))
