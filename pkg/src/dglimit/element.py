"""Tensor-product polynomial elements on the reference box ``[0, 1]^d``.

Nodal coefficients live on Gauss-Lobatto nodes ordered lexicographically
(first coordinate slowest). The modal form uses monomials shifted to the
element center, ``prod_k (x_k - 1/2)^{i_k}``, with the same multi-index
ordering.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

#: Tolerance for points slightly outside the reference box.
BOX_SLACK = 1e-12

#: Default finite-difference step in reference coordinates.
FD_STEP = 1e-5


class NonFiniteDerivativeError(ArithmeticError):
    """Raised when a finite-difference stencil hits a non-finite value."""


def gauss_lobatto_nodes(p: int) -> np.ndarray:
    """Gauss-Lobatto nodes of degree ``p`` on ``[0, 1]``, endpoints included.

    The interior nodes are the roots of the derivative of the Legendre
    polynomial of degree ``p``, polished by Newton iteration and symmetrized.
    """
    if p < 1:
        raise ValueError(f"Gauss-Lobatto nodes need degree >= 1, got {p}")
    dP = legendre.Legendre.basis(p).deriv()
    ddP = dP.deriv()
    inner = np.sort(dP.roots().real) if p > 1 else np.empty(0)
    for _ in range(3):
        inner = inner - dP(inner) / ddP(inner)
    t = np.concatenate([[-1.0], inner, [1.0]])
    t = 0.5 * (t - t[::-1])
    return 0.5 * (t + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product rule on ``[0, 1]^d``; exact through 1D degree
    ``strength`` in every coordinate."""

    points: np.ndarray
    weights: np.ndarray
    strength: int

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def gauss_legendre_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def gauss_legendre_rule(n: int, dim: int = 1) -> QuadratureRule:
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got {n}")
    x, w = gauss_legendre_1d(n)
    pts = np.array(list(itertools.product(x, repeat=dim)))
    wts = np.array([np.prod(c) for c in itertools.product(w, repeat=dim)])
    return QuadratureRule(pts, wts, 2 * n - 1)


def tensor_points(x1d: np.ndarray, dim: int) -> np.ndarray:
    return np.array(list(itertools.product(x1d, repeat=dim)), dtype=float).reshape(-1, dim)


def monomial_vandermonde(x: np.ndarray, p: int, dim: int) -> np.ndarray:
    """Shifted-monomial basis values; ``x`` has shape ``(..., dim)`` and the
    result ``(..., (p+1)**dim)``."""
    s = np.asarray(x, dtype=float) - 0.5
    powers = s[..., None] ** np.arange(p + 1)
    V = powers[..., 0, :]
    for k in range(1, dim):
        V = (V[..., :, None] * powers[..., k, None, :]).reshape(V.shape[:-1] + (-1,))
    return V


def monomial_vandermonde_grad(x: np.ndarray, p: int, dim: int) -> np.ndarray:
    """Gradient of the shifted-monomial basis, shape ``(..., dim, nbasis)``."""
    s = np.asarray(x, dtype=float) - 0.5
    i = np.arange(p + 1)
    powers = s[..., None] ** i
    dpowers = np.zeros_like(powers)
    dpowers[..., 1:] = i[1:] * s[..., None] ** (i[1:] - 1)
    out = []
    for j in range(dim):
        V = dpowers[..., 0, :] if j == 0 else powers[..., 0, :]
        for k in range(1, dim):
            fac = dpowers[..., k, :] if k == j else powers[..., k, :]
            V = (V[..., :, None] * fac[..., None, :]).reshape(V.shape[:-1] + (-1,))
        out.append(V)
    return np.stack(out, axis=-2)


class Reference:
    """Precomputed operators for one (degree, dimension) pair."""

    def __init__(self, p: int, dim: int):
        if dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {dim}")
        self.p = p
        self.dim = dim
        self.nodes_1d = gauss_lobatto_nodes(p)
        self.nodes = tensor_points(self.nodes_1d, dim)
        self.nb = (p + 1) ** dim
        V = monomial_vandermonde(self.nodes, p, dim)
        self.vandermonde = V
        self.vandermonde_1d = monomial_vandermonde(self.nodes_1d[:, None], p, 1)
        self.vinv_1d = np.linalg.inv(self.vandermonde_1d)
        # Kronecker form keeps the 2D inverse as well conditioned as 1D.
        self.vinv = self.vinv_1d if dim == 1 else np.kron(self.vinv_1d, self.vinv_1d)
        quad = gauss_legendre_rule(p + 1, dim)
        self.quad = quad
        # Nodal-to-mean weights: quadrature of the Lagrange interpolant.
        self.mean_weights = quad.weights @ self.lagrange(quad.points)

    def lagrange(self, x: np.ndarray) -> np.ndarray:
        """Nodal Lagrange basis values at ``x``, shape ``(..., nbasis)``."""
        return monomial_vandermonde(x, self.p, self.dim) @ self.vinv

    def lagrange_grad(self, x: np.ndarray) -> np.ndarray:
        return monomial_vandermonde_grad(x, self.p, self.dim) @ self.vinv

    def face_points(self) -> np.ndarray:
        """Gauss-Legendre points on every face of the reference box."""
        if self.dim == 1:
            return np.array([[0.0], [1.0]])
        x, _ = gauss_legendre_1d(self.p + 1)
        faces = []
        for k in range(self.dim):
            for side in (0.0, 1.0):
                pts = np.empty((x.size, 2))
                pts[:, k] = side
                pts[:, 1 - k] = x
                faces.append(pts)
        return np.concatenate(faces)


@functools.lru_cache(maxsize=None)
def reference(p: int, dim: int) -> Reference:
    return Reference(p, dim)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ElementSolution:
    """Nodal polynomial solution of one element.

    ``coeffs`` has shape ``((degree+1)**dim, dim+2)``; ``lo`` and ``hi`` are
    the corners of the element's bounding box in physical space.
    """

    degree: int
    dim: int
    coeffs: np.ndarray
    lo: np.ndarray = field(default=None)
    hi: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if self.degree < 1:
            raise ValueError(f"degree must be at least 1, got {self.degree}")
        lo = np.zeros(self.dim) if self.lo is None else self.lo
        hi = np.ones(self.dim) if self.hi is None else self.hi
        object.__setattr__(self, "coeffs", _readonly(self.coeffs))
        object.__setattr__(self, "lo", _readonly(np.broadcast_to(lo, (self.dim,))))
        object.__setattr__(self, "hi", _readonly(np.broadcast_to(hi, (self.dim,))))
        expected = ((self.degree + 1) ** self.dim, self.dim + 2)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape}, expected {expected}")
        if np.any(self.hi <= self.lo):
            raise ValueError("element extent must be positive in every direction")

    @property
    def ref(self) -> Reference:
        return reference(self.degree, self.dim)

    @property
    def nodes(self) -> np.ndarray:
        """Gauss-Lobatto nodes in reference coordinates."""
        return self.ref.nodes

    @property
    def measure(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def to_reference(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def with_coeffs(self, coeffs) -> "ElementSolution":
        return ElementSolution(self.degree, self.dim, coeffs, self.lo, self.hi)

    @classmethod
    def from_function(cls, f, degree: int, dim: int, lo=None, hi=None) -> "ElementSolution":
        """Interpolate ``f`` (mapping physical points ``(n, dim)`` to states
        ``(n, dim+2)``) on the Gauss-Lobatto nodes."""
        lo = np.zeros(dim) if lo is None else np.asarray(lo, dtype=float)
        hi = np.ones(dim) if hi is None else np.asarray(hi, dtype=float)
        x = lo + reference(degree, dim).nodes * (hi - lo)
        return cls(degree, dim, f(x), lo, hi)


@dataclass(frozen=True)
class ModalForm:
    """Shifted-monomial coefficients, shape ``((degree+1)**dim, dim+2)``."""

    degree: int
    dim: int
    coeffs: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return eval_at(self, x)


def nodal_to_modal(e: ElementSolution) -> ModalForm:
    ref = e.ref
    if e.dim == 1:
        coeffs = np.linalg.solve(ref.vandermonde_1d, e.coeffs)
    else:
        n = ref.p + 1
        U = e.coeffs.reshape(n, n, -1)
        W = np.linalg.solve(ref.vandermonde_1d, U.reshape(n, -1)).reshape(n, n, -1)
        W = np.linalg.solve(ref.vandermonde_1d, W.transpose(1, 0, 2).reshape(n, -1))
        coeffs = W.reshape(n, n, -1).transpose(1, 0, 2).reshape(n * n, -1)
    return ModalForm(e.degree, e.dim, coeffs)


def modal_to_nodal(mf: ModalForm) -> np.ndarray:
    return reference(mf.degree, mf.dim).vandermonde @ mf.coeffs


def horner(c: np.ndarray, x: np.ndarray, p: int, dim: int) -> np.ndarray:
    """Evaluate batched modal coefficients.

    ``c`` has shape ``(K, nbasis, nvar)`` and ``x`` shape ``(K, m, dim)``;
    returns ``(K, m, nvar)``.
    """
    s = x - 0.5
    n = p + 1
    if dim == 1:
        c1 = c[:, None, :, :]
        r = np.broadcast_to(c1[:, :, p, :], s.shape[:2] + c.shape[-1:])
        sx = s[..., 0, None]
        for i in range(p - 1, -1, -1):
            r = r * sx + c1[:, :, i, :]
        return r
    c2 = c.reshape(c.shape[0], 1, n, n, c.shape[-1])
    sy = s[..., 1, None, None]
    r = c2[:, :, :, p, :]
    for j in range(p - 1, -1, -1):
        r = r * sy + c2[:, :, :, j, :]
    sx = s[..., 0, None]
    q = r[:, :, p, :]
    for i in range(p - 1, -1, -1):
        q = q * sx + r[:, :, i, :]
    return q


def eval_at(mf: ModalForm, x) -> np.ndarray:
    """Evaluate the modal form at reference point(s) ``x``.

    ``x`` may be a single point of shape ``(dim,)`` or an array ``(m, dim)``;
    coordinates are clamped to the reference box.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    x = np.clip(np.atleast_1d(x).reshape(-1, mf.dim), -BOX_SLACK, 1.0 + BOX_SLACK)
    out = horner(mf.coeffs[None], x[None], mf.degree, mf.dim)[0]
    return out[0] if single else out


def element_mean(e: ElementSolution) -> np.ndarray:
    """Volume average of the element's polynomial, by Gauss-Legendre
    quadrature with ``degree + 1`` points per direction."""
    return e.ref.mean_weights @ e.coeffs


@functools.lru_cache(maxsize=None)
def _fd_stencil(dim: int) -> np.ndarray:
    offs = [np.zeros(dim)]
    for i in range(dim):
        for s in (1.0, -1.0):
            o = np.zeros(dim)
            o[i] = s
            offs.append(o)
    for i in range(dim):
        for j in range(i + 1, dim):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                o = np.zeros(dim)
                o[i], o[j] = si, sj
                offs.append(o)
    return np.array(offs)


def fd_points(x: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Stencil center (shifted into ``[h, 1-h]^d``) and stencil points with
    shape ``x.shape[:-1] + (nstencil, dim)``."""
    xc = np.clip(x, h, 1.0 - h)
    return xc, xc[..., None, :] + h * _fd_stencil(x.shape[-1])


def fd_derivatives(vals: np.ndarray, h: float, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient and symmetric Hessian from stencil values
    laid out as in :func:`fd_points`."""
    if not np.all(np.isfinite(vals)):
        raise NonFiniteDerivativeError("non-finite value in finite-difference stencil")
    f0 = vals[..., 0]
    grad = np.empty(vals.shape[:-1] + (dim,))
    hess = np.empty(vals.shape[:-1] + (dim, dim))
    for i in range(dim):
        fp, fm = vals[..., 1 + 2 * i], vals[..., 2 + 2 * i]
        grad[..., i] = (fp - fm) / (2 * h)
        hess[..., i, i] = (fp - 2 * f0 + fm) / (h * h)
    k = 1 + 2 * dim
    for i in range(dim):
        for j in range(i + 1, dim):
            fpp, fpm, fmp, fmm = (vals[..., k + q] for q in range(4))
            hess[..., i, j] = hess[..., j, i] = (fpp - fpm - fmp + fmm) / (4 * h * h)
            k += 4
    return grad, hess


def numeric_grad_hess(f, x, h: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Central finite-difference gradient and Hessian of a scalar field.

    Parameters
    ----------
    f : callable
        Maps reference points of shape ``(n, dim)`` to values ``(n,)``.
    x : array_like
        Point of shape ``(dim,)``. Points closer than ``h`` to the box
        boundary use a stencil shifted inward.
    h : float
        Step size in reference coordinates.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xc, pts = fd_points(x, h)
    vals = np.asarray(f(pts), dtype=float)
    grad, hess = fd_derivatives(vals, h, x.shape[-1])
    return shift_gradient(grad, hess, x - xc), hess


def shift_gradient(grad, hess, dx):
    """First-order transport of a gradient from a shifted stencil center
    back to the requested point (``dx = x - center``)."""
    return grad + np.einsum("...ij,...j->...i", hess, dx)
