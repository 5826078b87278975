"""1-D P1 finite elements on the unit interval.

The domain is (0, 1) with the flux boundary part at x = 1 (a single node,
so boundary integrals degenerate to point evaluation with unit weight) and
the Neumann part at x = 0.  Mass and stiffness matrices are assembled
exactly; the V-Gram is mass + stiffness, matching the norm
||u||_V^2 = |u|_H^2 + integral of |u'|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .galerkin import GalerkinSpace, LinearOperatorA

__all__ = [
    "Mesh1D",
    "ForcingSpec",
    "InitialProjection",
    "assemble_space",
    "assemble_forcing",
    "make_initial",
]

_GAUSS3 = np.polynomial.legendre.leggauss(3)
_GAUSS5 = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh of (0, 1) with n_el elements, nodes x_i = i / n_el."""

    n_el: int

    def __post_init__(self) -> None:
        if self.n_el < 1:
            raise ValueError("n_el must be >= 1")

    @property
    def h(self) -> float:
        return 1.0 / self.n_el

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_el + 1)


@dataclass(frozen=True)
class ForcingSpec:
    """Volume source f0(t, x) (vectorized in x) and Neumann datum f_N(t)
    acting at x = 0."""

    f0: Callable[[float, np.ndarray], np.ndarray]
    f_N: Callable[[float], float]


def assemble_space(mesh: Mesh1D) -> tuple[GalerkinSpace, LinearOperatorA]:
    """Mass, stiffness, V-Gram, boundary trace and the elliptic operator.

    The operator carries the exact constants of this bilinear form:
    <Av,v> = ||v||_V^2 - |v|_H^2 and ||Av||_* <= ||v||_V.
    """
    n = mesh.n_el
    h = mesh.h
    dim = n + 1
    mass = np.zeros((dim, dim))
    stiff = np.zeros((dim, dim))
    for e in range(n):
        sl = slice(e, e + 2)
        mass[sl, sl] += (h / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
        stiff[sl, sl] += (1.0 / h) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    trace = np.zeros((1, dim))
    trace[0, n] = 1.0
    space = GalerkinSpace(gram_h=mass, gram_v=mass + stiff, trace=trace, gram_u=np.eye(1))
    op = LinearOperatorA(stiffness=stiff, alpha=1.0, beta=1.0, a_growth=0.0, b_growth=1.0)
    return space, op


def _element_quadrature(mesh: Mesh1D, rule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature points per element, their weights and hat values.

    Returns (x, w, phi) with x of shape (n_el, nq), w of shape (nq,)
    already scaled by h/2, and phi of shape (2, nq) holding the local hat
    functions at the reference points.
    """
    pts, wts = rule
    xi = 0.5 * (pts + 1.0)  # reference element [0, 1]
    left = mesh.nodes[:-1]
    x = left[:, None] + mesh.h * xi[None, :]
    w = 0.5 * mesh.h * wts
    phi = np.vstack([1.0 - xi, xi])
    return x, w, phi


def assemble_forcing(mesh: Mesh1D, spec: ForcingSpec, t: float) -> np.ndarray:
    """Load vector l_i = int f0(t,x) phi_i dx + f_N(t) phi_i(0).

    The volume term uses 3-point Gauss per element, exact for the
    polynomial forcings used in the tests.
    """
    x, w, phi = _element_quadrature(mesh, _GAUSS3)
    f_vals = np.asarray(spec.f0(t, x), dtype=float)
    f_vals = np.broadcast_to(f_vals, x.shape)
    contrib = np.einsum("eq,q,lq->el", f_vals, w, phi)
    load = np.zeros(mesh.n_el + 1)
    np.add.at(load, np.arange(mesh.n_el), contrib[:, 0])
    np.add.at(load, np.arange(1, mesh.n_el + 1), contrib[:, 1])
    load[0] += float(spec.f_N(t))
    return load


class InitialProjection(NamedTuple):
    coeffs: np.ndarray
    vnorm_sqrt_tau: float  # ||u0_h||_V * sqrt(tau), observable across a tau ladder


def make_initial(
    mesh: Mesh1D,
    space: GalerkinSpace,
    u0: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
    tau: float,
) -> InitialProjection:
    """H-orthogonal projection of the initial datum onto the P1 space.

    A coefficient vector is returned unchanged (the projection is the
    identity on the space); a callable is projected by solving the mass
    system against its load vector (5-point Gauss per element).
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    if callable(u0):
        x, w, phi = _element_quadrature(mesh, _GAUSS5)
        vals = np.broadcast_to(np.asarray(u0(x), dtype=float), x.shape)
        contrib = np.einsum("eq,q,lq->el", vals, w, phi)
        load = np.zeros(mesh.n_el + 1)
        np.add.at(load, np.arange(mesh.n_el), contrib[:, 0])
        np.add.at(load, np.arange(1, mesh.n_el + 1), contrib[:, 1])
        coeffs = space.solve_h(load)
    else:
        coeffs = np.array(u0, dtype=float)
        if coeffs.shape != (space.dim,):
            raise ValueError(f"u0 vector has shape {coeffs.shape}, expected ({space.dim},)")
    return InitialProjection(coeffs, space.v_norm(coeffs) * float(np.sqrt(tau)))
