"""Real circular (n=2) and spherical (n=3) harmonics as harmonic polynomials.

Each basis element is ``c * P(x)`` with ``P`` a homogeneous harmonic
polynomial of degree ``l``, normalized so the basis is orthonormal in
L^2(S^{n-1}).  Polynomials are stored as ``{exponent tuple: coefficient}``
dicts, which makes every derivative exact.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, pi, sqrt

import numpy as np

from .sphere import SphereField, _check_dim, covariant_jet


def poly_add(p, q, c=1.0):
    out = dict(p)
    for e, a in q.items():
        out[e] = out.get(e, 0.0) + c * a
    return {e: a for e, a in out.items() if a != 0.0}


def poly_mul(p, q):
    out = {}
    for e1, a in p.items():
        for e2, b in q.items():
            e = tuple(i + j for i, j in zip(e1, e2))
            out[e] = out.get(e, 0.0) + a * b
    return {e: a for e, a in out.items() if a != 0.0}


def poly_pow(p, k, n):
    out = {(0,) * n: 1.0}
    for _ in range(k):
        out = poly_mul(out, p)
    return out


def poly_diff(p, axis):
    out = {}
    for e, a in p.items():
        if e[axis]:
            d = list(e)
            d[axis] -= 1
            out[tuple(d)] = out.get(tuple(d), 0.0) + a * e[axis]
    return out


def poly_eval(p, points, powers=None):
    """Evaluate ``p`` at ``points`` (N, n); ``powers`` caches ``x_k ** j``."""
    N, n = points.shape
    if powers is None:
        powers = {}
    out = np.zeros(N)
    for e, a in p.items():
        term = np.full(N, a)
        for k, j in enumerate(e):
            if j:
                key = (k, j)
                if key not in powers:
                    powers[key] = points[:, k] ** j
                term = term * powers[key]
        out += term
    return out


def _re_im_power(m, n):
    """Real and imaginary parts of ``(x + i y)^m`` as polynomials in R^n."""
    re, im = {}, {}
    pad = (0,) * (n - 2)
    for j in range(m + 1):
        e = (m - j, j) + pad
        c = float(comb(m, j))
        if j % 2 == 0:
            re[e] = c * (-1) ** (j // 2)
        else:
            im[e] = c * (-1) ** ((j - 1) // 2)
    return re, im


def _legendre_derivative_coeffs(l, m):
    """Coefficients ``{power: c}`` of ``d^m/dt^m P_l(t)``."""
    out = {}
    for k in range(l // 2 + 1):
        p = l - 2 * k
        if p < m:
            continue
        c = (-1) ** k * factorial(2 * l - 2 * k) / (2**l * factorial(k) * factorial(l - k) * factorial(l - 2 * k))
        out[p - m] = c * factorial(p) / factorial(p - m)
    return out


def _solid_harmonic(l, m):
    """Unnormalized ``r^l P_l^|m|(z/r) cos/sin(|m| phi)`` and its squared L^2 norm."""
    am = abs(m)
    r2 = {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0}
    radial = {}
    for p, c in _legendre_derivative_coeffs(l, am).items():
        k = (l - am - p) // 2
        term = poly_mul({(0, 0, p): c}, poly_pow(r2, k, 3))
        radial = poly_add(radial, term)
    re, im = _re_im_power(am, 3)
    poly = poly_mul(radial, re if m >= 0 else im)
    norm2 = 2.0 / (2 * l + 1) * factorial(l + am) / factorial(l - am) * (2 * pi if m == 0 else pi)
    return poly, norm2


class HarmonicFunction(SphereField):
    """One orthonormal harmonic; its extension is the degree-l polynomial itself."""

    def __init__(self, dim, l, m, poly):
        self.dim = dim
        self.l = l
        self.m = m
        self.degree = l
        self.poly = poly
        self.grad_polys = [poly_diff(poly, a) for a in range(dim)]
        self.hess_polys = [[poly_diff(g, b) for b in range(dim)] for g in self.grad_polys]

    @property
    def key(self):
        return str(self.m) if self.dim == 2 else f"{self.l},{self.m}"

    def euclidean_jet(self, points, powers=None):
        N, n = points.shape
        if n != self.dim:
            raise ValueError(f"harmonic on S^{self.dim - 1} evaluated at points in R^{n}")
        if powers is None:
            powers = {}
        v = poly_eval(self.poly, points, powers)
        g = np.column_stack([poly_eval(q, points, powers) for q in self.grad_polys])
        H = np.empty((N, n, n))
        for a in range(n):
            for b in range(a, n):
                H[:, a, b] = H[:, b, a] = poly_eval(self.hess_polys[a][b], points, powers)
        return v, g, H

    def __repr__(self):
        return f"HarmonicFunction(dim={self.dim}, key={self.key!r})"


@lru_cache(maxsize=None)
def harmonic_function(dim, key):
    """Orthonormal harmonic named by ``key``.

    dim=2: ``"k"`` with k>0 for ``cos k theta``, k<0 for ``sin |k| theta``,
    ``"0"`` for the constant.  dim=3: ``"l,m"`` with ``|m| <= l``; m<0 uses
    ``sin(|m| phi)``.
    """
    _check_dim(dim)
    key = str(key).replace(" ", "")
    try:
        parts = [int(s) for s in key.split(",")]
    except ValueError:
        raise ValueError(f"malformed harmonic key {key!r}") from None
    if dim == 2:
        if len(parts) != 1:
            raise ValueError(f"harmonic keys on S^1 are single signed integers, got {key!r}")
        (m,) = parts
        l = abs(m)
        if m == 0:
            return HarmonicFunction(2, 0, 0, {(0, 0): 1.0 / sqrt(2 * pi)})
        re, im = _re_im_power(l, 2)
        poly = re if m > 0 else im
        return HarmonicFunction(2, l, m, {e: c / sqrt(pi) for e, c in poly.items()})
    if len(parts) != 2:
        raise ValueError(f"harmonic keys on S^2 have the form 'l,m', got {key!r}")
    l, m = parts
    if l < 0 or abs(m) > l:
        raise ValueError(f"harmonic key {key!r} needs l >= 0 and |m| <= l")
    poly, norm2 = _solid_harmonic(l, m)
    s = 1.0 / sqrt(norm2)
    return HarmonicFunction(3, l, m, {e: c * s for e, c in poly.items()})


def basis_keys(dim, max_degree):
    if dim == 2:
        keys = ["0"]
        for k in range(1, max_degree + 1):
            keys += [str(k), str(-k)]
        return keys
    return [f"{l},{m}" for l in range(max_degree + 1) for m in range(-l, l + 1)]


@dataclass(frozen=True, eq=False)
class BasisJets:
    """Covariant jets of every basis element: (M, N), (M, N, n-1), (M, N, n-1, n-1)."""

    values: np.ndarray
    gradients: np.ndarray
    hessians: np.ndarray


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    dim: int
    max_degree: int
    functions: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    def __iter__(self):
        return iter(self.functions)

    @property
    def keys(self):
        return [f.key for f in self.functions]

    @property
    def degrees(self):
        return np.array([f.l for f in self.functions])

    def index(self, key):
        return self.keys.index(harmonic_function(self.dim, key).key)

    def jets(self, quad):
        """Jets of all elements at the nodes of ``quad`` (cached per quadrature)."""
        if quad.dim != self.dim:
            raise ValueError(f"basis on S^{self.dim - 1}, quadrature on S^{quad.dim - 1}")
        cached = self._cache.get(id(quad))
        if cached is not None and cached[0] is quad:
            return cached[1]
        vals, grads, hess = [], [], []
        for f in self.functions:
            j = covariant_jet(f, quad.nodes, quad.frames)
            vals.append(j.value)
            grads.append(j.gradient)
            hess.append(j.hessian)
        out = BasisJets(np.array(vals), np.array(grads), np.array(hess))
        self._cache[id(quad)] = (quad, out)
        return out


def build_basis(dim, max_degree):
    """Orthonormal harmonics of degree 0..max_degree (2L+1 or (L+1)^2 of them)."""
    _check_dim(dim)
    if int(max_degree) != max_degree or max_degree < 1:
        raise ValueError(f"max_degree must be an integer >= 1, got {max_degree!r}")
    max_degree = int(max_degree)
    funcs = tuple(harmonic_function(dim, k) for k in basis_keys(dim, max_degree))
    return HarmonicBasis(dim, max_degree, funcs)
