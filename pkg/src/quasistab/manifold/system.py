"""Finite-dimensional quasilinear systems ``u' = A(u) u + f(u)``."""

import json

import numpy as np

from ..errors import ConfigurationError, SchemaError

__all__ = ["QuasilinearSystem", "fd_step", "polynomial_system", "system_from_json"]

_EPS13 = np.finfo(float).eps ** (1.0 / 3.0)


def fd_step(u):
    """Central-difference step ``eps^(1/3) (1 + |u|)``."""
    return _EPS13 * (1.0 + np.linalg.norm(u))


class QuasilinearSystem:
    """Pair ``(A, f)`` on R^d with optional analytic derivatives.

    Parameters
    ----------
    dim : int
    A : callable
        ``u -> (d, d)`` array.
    f : callable, optional
        ``u -> (d,)`` array; zero when omitted.
    dA : callable, optional
        ``(u, w) -> (d, d)`` directional derivative of ``A`` at ``u`` along
        ``w``.  Central differences are used when omitted.
    df : callable, optional
        ``u -> (d, d)`` Jacobian of ``f``.  Central differences when omitted.
    domain_radius : float
        Radius of the ball around ``center`` on which A and f are trusted.
    """

    def __init__(self, dim, A, f=None, dA=None, df=None, domain_radius=1.0,
                 center=None, name="system"):
        if int(dim) != dim or dim < 1:
            raise ConfigurationError(f"dim must be a positive integer, got {dim!r}")
        self.dim = int(dim)
        self._A = A
        self._f = f
        self._dA = dA
        self._df = df
        self.domain_radius = float(domain_radius)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float)
        self.name = name

    def __repr__(self):
        return f"QuasilinearSystem({self.name!r}, dim={self.dim})"

    @property
    def has_analytic_derivatives(self):
        return self._dA is not None and (self._df is not None or self._f is None)

    def A(self, u):
        return np.asarray(self._A(np.asarray(u, float)), dtype=float).reshape(self.dim, self.dim)

    def f(self, u):
        if self._f is None:
            return np.zeros(self.dim)
        return np.asarray(self._f(np.asarray(u, float)), dtype=float).reshape(self.dim)

    def vector_field(self, u):
        u = np.asarray(u, float)
        return self.A(u) @ u + self.f(u)

    def residual(self, u):
        return float(np.linalg.norm(self.vector_field(u)))

    def dA(self, u, w):
        """Directional derivative ``dA(u)[w]``."""
        u = np.asarray(u, float)
        w = np.asarray(w, float)
        if self._dA is not None:
            return np.asarray(self._dA(u, w), dtype=float).reshape(self.dim, self.dim)
        return self.dA_fd(u, w)

    def dA_fd(self, u, w):
        h = fd_step(u)
        return (self.A(u + h * w) - self.A(u - h * w)) / (2 * h)

    def df(self, u):
        u = np.asarray(u, float)
        if self._f is None:
            return np.zeros((self.dim, self.dim))
        if self._df is not None:
            return np.asarray(self._df(u), dtype=float).reshape(self.dim, self.dim)
        return self.df_fd(u)

    def df_fd(self, u):
        return _fd_jacobian(self.f, u)

    def jacobian(self, u):
        """Jacobian of ``u -> A(u)u + f(u)``: ``A(u) + (dA(u)[.])u + df(u)``."""
        u = np.asarray(u, float)
        J = self.A(u) + self.df(u)
        eye = np.eye(self.dim)
        for i in range(self.dim):
            J[:, i] += self.dA(u, eye[i]) @ u
        return J

    def jacobian_fd(self, u):
        """Finite-difference Jacobian of the full vector field (oracle)."""
        return _fd_jacobian(self.vector_field, u)

    def in_domain(self, u):
        return np.linalg.norm(np.asarray(u, float) - self.center) <= self.domain_radius


def _fd_jacobian(func, u):
    u = np.asarray(u, float)
    h = fd_step(u)
    cols = []
    for e in np.eye(u.size):
        cols.append((np.asarray(func(u + h * e)) - np.asarray(func(u - h * e))) / (2 * h))
    return np.column_stack(cols)


# -- polynomial systems -------------------------------------------------------
#
# A polynomial in u is a list of terms ``[coef, [p_1, ..., p_d]]`` meaning
# ``coef * u_1^p_1 * ... * u_d^p_d``; a bare number is a constant.


def _parse_poly(spec, dim, key):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [(float(spec), np.zeros(dim, dtype=int))]
    if not isinstance(spec, list):
        raise SchemaError(f"{key}: polynomial must be a number or a list of terms", key)
    terms = []
    for i, term in enumerate(spec):
        tkey = f"{key}[{i}]"
        if (not isinstance(term, list) or len(term) != 2
                or not isinstance(term[0], (int, float)) or not isinstance(term[1], list)):
            raise SchemaError(f"{tkey}: term must be [coef, [powers...]]", tkey)
        powers = term[1]
        if len(powers) != dim or any((not isinstance(p, int)) or p < 0 for p in powers):
            raise SchemaError(f"{tkey}: need {dim} non-negative integer powers", tkey)
        terms.append((float(term[0]), np.array(powers, dtype=int)))
    return terms


def _poly_eval(terms, u):
    return sum(c * np.prod(u**p) for c, p in terms) if terms else 0.0


def _poly_grad(terms, u):
    g = np.zeros(u.size)
    for c, p in terms:
        for j in range(u.size):
            if p[j] == 0:
                continue
            q = p.copy()
            q[j] -= 1
            g[j] += c * p[j] * np.prod(u**q)
    return g


def polynomial_system(A_polys, f_polys=None, domain_radius=1.0, name="polynomial"):
    """System whose matrix and forcing entries are polynomials in ``u``.

    Derivatives are exact.  ``A_polys`` is a ``d x d`` nested list of
    polynomial specs and ``f_polys`` a length-``d`` list (or ``None``).
    """
    if not isinstance(A_polys, list) or not A_polys:
        raise SchemaError("A: must be a non-empty square nested list", "A")
    dim = len(A_polys)
    A_terms = []
    for i, row in enumerate(A_polys):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError(f"A[{i}]: row must have {dim} entries", f"A[{i}]")
        A_terms.append([_parse_poly(e, dim, f"A[{i}][{j}]") for j, e in enumerate(row)])
    f_terms = None
    if f_polys is not None:
        if not isinstance(f_polys, list) or len(f_polys) != dim:
            raise SchemaError(f"f: must list {dim} polynomials", "f")
        f_terms = [_parse_poly(e, dim, f"f[{i}]") for i, e in enumerate(f_polys)]

    def A(u):
        return np.array([[_poly_eval(t, u) for t in row] for row in A_terms])

    def dA(u, w):
        return np.array([[_poly_grad(t, u) @ w for t in row] for row in A_terms])

    f = df = None
    if f_terms is not None:
        def f(u):
            return np.array([_poly_eval(t, u) for t in f_terms])

        def df(u):
            return np.array([_poly_grad(t, u) for t in f_terms])

    return QuasilinearSystem(dim, A, f, dA=dA, df=df, domain_radius=domain_radius, name=name)


def system_from_json(doc):
    """Build a polynomial system from a parsed JSON mapping or a JSON string.

    Expected keys: ``A`` (required), ``f`` (optional), ``domain_radius``
    (optional), ``name`` (optional).
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise SchemaError("system: expected an object", "system")
    if "A" not in doc:
        raise SchemaError("system: missing key 'A'", "A")
    unknown = set(doc) - {"A", "f", "domain_radius", "name", "dim"}
    if unknown:
        key = sorted(unknown)[0]
        raise SchemaError(f"system: unknown key {key!r}", key)
    sys_ = polynomial_system(doc["A"], doc.get("f"), doc.get("domain_radius", 1.0),
                             doc.get("name", "polynomial"))
    if "dim" in doc and doc["dim"] != sys_.dim:
        raise SchemaError(f"dim: declared {doc['dim']} but A is {sys_.dim}x{sys_.dim}", "dim")
    return sys_
