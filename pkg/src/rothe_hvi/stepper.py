"""Two-step implicit time stepping (Rothe scheme) with averaged forcing.

The first step uses the one-step implicit stencil, later steps the two-step
backward differentiation stencil (3/2, -2, 1/2)/tau.  The forcing sequence
combines window integrals with weights matched to the stencils:

    F_1 = (1/tau) * int_{0ends}^{tau} f,
    F_n = (3/(2 tau)) * int_{(n-1)tau}^{n tau} f
        - (1/(2 tau)) * int_{(n-2)tau}^{(n-1)tau} f,   n >= 2.

A one-step (backward Euler) baseline is provided for scheme comparisons;
it consumes the same averaged forcing sequence and differs only in the
time-derivative stencil, so comparisons isolate the stencil's contribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .galerkin import GalerkinSpace, LinearOperatorA
from .inclusion_solver import (
    NonConvergenceError,
    SolveOptions,
    SolveReport,
    StepProblem,
    solve_step_inclusion,
)
from .potentials import BoundaryFunctional

__all__ = [
    "BDF2",
    "BACKWARD_EULER",
    "TimeGrid",
    "RotheProblem",
    "RotheTrajectory",
    "StepFailureError",
    "average_forcing",
    "initial_step",
    "bdf2_step",
    "run_rothe",
    "CoercivityReport",
    "check_step_coercivity",
]

BDF2 = "bdf2"
BACKWARD_EULER = "backward_euler"

_GAUSS5 = np.polynomial.legendre.leggauss(5)


class StepFailureError(RuntimeError):
    """A time step failed to converge; carries the step index, the solver
    report and the completed prefix of the trajectory."""

    def __init__(
        self,
        step: int,
        report: SolveReport,
        partial_u: Optional[np.ndarray] = None,
        partial_xi: Optional[np.ndarray] = None,
        partial_residuals: Optional[np.ndarray] = None,
    ):
        super().__init__(f"time step {step} failed to converge")
        self.step = step
        self.report = report
        self.partial_u = partial_u
        self.partial_xi = partial_xi
        self.partial_residuals = partial_residuals


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of [0, T_final] with N steps of length tau = T_final/N."""

    T_final: float
    N: int

    def __post_init__(self) -> None:
        if not self.T_final > 0:
            raise ValueError("T_final must be > 0")
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def tau(self) -> float:
        return self.T_final / self.N

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T_final, self.N + 1)


@dataclass(frozen=True)
class RotheProblem:
    """Problem instance: space, elliptic operator, boundary flux law,
    time-dependent load f(t) (returned as an assembled action vector) and
    the initial coefficient vector."""

    space: GalerkinSpace
    operator: LinearOperatorA
    boundary: BoundaryFunctional
    forcing: Callable[[float], np.ndarray]
    u0: np.ndarray

    def __post_init__(self) -> None:
        u0 = np.asarray(self.u0, dtype=float)
        if u0.shape != (self.space.dim,):
            raise ValueError("u0 has wrong length")
        if self.boundary.dim_u != self.space.dim_u:
            raise ValueError("boundary weights do not match the trace rows")
        object.__setattr__(self, "u0", u0)


@dataclass(frozen=True)
class RotheTrajectory:
    grid: TimeGrid
    u: np.ndarray          # (N+1, dim) including the initial vector
    xi: np.ndarray         # (N, dim_u) multipliers for steps 1..N
    f_avg: np.ndarray      # (N, dim) averaged forcing actions
    scheme: str
    per_step_residuals: np.ndarray  # (N,) V*-norms of the unscaled step residual

    @property
    def dim(self) -> int:
        return self.u.shape[1]


def _window_integral(forcing: Callable[[float], np.ndarray], a: float, b: float) -> np.ndarray:
    pts, wts = _GAUSS5
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    acc = None
    for x, w in zip(pts, wts):
        val = np.asarray(forcing(mid + half * x), dtype=float) * (w * half)
        acc = val if acc is None else acc + val
    return acc


def average_forcing(
    forcing: Callable[[float], np.ndarray], n: int, grid: TimeGrid
) -> np.ndarray:
    """Stencil-weighted forcing average for step n (5-point Gauss per
    window, exact for polynomial-in-t loads up to degree 9)."""
    if not 1 <= n <= grid.N:
        raise ValueError(f"step index {n} out of range 1..{grid.N}")
    tau = grid.tau
    if n == 1:
        return _window_integral(forcing, 0.0, tau) / tau
    cur = _window_integral(forcing, (n - 1) * tau, n * tau)
    prev = _window_integral(forcing, (n - 2) * tau, (n - 1) * tau)
    return (1.5 * cur - 0.5 * prev) / tau


def _one_step_problem(
    problem: RotheProblem, u_prev: np.ndarray, f_n: np.ndarray, tau: float
) -> StepProblem:
    sp = problem.space
    return StepProblem(
        space=sp,
        mass=sp.gram_h,
        stiff_scaled=tau * problem.operator.stiffness,
        trace=sp.trace,
        weights=problem.boundary.weights,
        potential=problem.boundary.potential,
        rhs=tau * f_n + sp.gram_h @ u_prev,
        c_coef=1.0,
        tau=tau,
    )


def _two_step_problem(
    problem: RotheProblem,
    u_nm1: np.ndarray,
    u_nm2: np.ndarray,
    f_n: np.ndarray,
    tau: float,
) -> StepProblem:
    sp = problem.space
    c = 2.0 / 3.0
    hist = (4.0 / 3.0) * u_nm1 - (1.0 / 3.0) * u_nm2
    return StepProblem(
        space=sp,
        mass=sp.gram_h,
        stiff_scaled=c * tau * problem.operator.stiffness,
        trace=sp.trace,
        weights=problem.boundary.weights,
        potential=problem.boundary.potential,
        rhs=c * tau * f_n + sp.gram_h @ hist,
        c_coef=c,
        tau=tau,
    )


def initial_step(
    problem: RotheProblem,
    u0_vec: np.ndarray,
    f1: np.ndarray,
    tau: float,
    options: Optional[SolveOptions] = None,
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """One-step implicit solve: M u + tau K u + tau trace^T W xi = tau f1 + M u0."""
    p = _one_step_problem(problem, np.asarray(u0_vec, dtype=float), f1, tau)
    return solve_step_inclusion(p, np.asarray(u0_vec, dtype=float), options=options)


def bdf2_step(
    problem: RotheProblem,
    u_nm1: np.ndarray,
    u_nm2: np.ndarray,
    f_n: np.ndarray,
    tau: float,
    options: Optional[SolveOptions] = None,
) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """Two-step stencil solve, warm-started from the extrapolant 2u^{n-1} - u^{n-2}."""
    u_nm1 = np.asarray(u_nm1, dtype=float)
    u_nm2 = np.asarray(u_nm2, dtype=float)
    p = _two_step_problem(problem, u_nm1, u_nm2, f_n, tau)
    return solve_step_inclusion(p, 2.0 * u_nm1 - u_nm2, options=options)


def _unscaled_residual(
    problem: RotheProblem,
    stencil_over_tau: np.ndarray,
    u_n: np.ndarray,
    xi_n: np.ndarray,
    f_n: np.ndarray,
) -> float:
    sp = problem.space
    r = (
        sp.gram_h @ stencil_over_tau
        + problem.operator.stiffness @ u_n
        + sp.trace.T @ (problem.boundary.weights * xi_n)
        - f_n
    )
    return sp.dual_norm(r)


def run_rothe(
    problem: RotheProblem,
    grid: TimeGrid,
    scheme: str = BDF2,
    options: Optional[SolveOptions] = None,
) -> RotheTrajectory:
    """Run the full scheme on the grid.  Deterministic: fixed iteration
    order, no randomness anywhere, so identical inputs give bit-identical
    trajectories."""
    if scheme not in (BDF2, BACKWARD_EULER):
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == BDF2 and grid.N < 2:
        raise ValueError("the two-step scheme needs N >= 2")
    tau = grid.tau
    dim = problem.space.dim
    dim_u = problem.space.dim_u
    u = np.zeros((grid.N + 1, dim))
    xi = np.zeros((grid.N, dim_u))
    f_avg = np.zeros((grid.N, dim))
    residuals = np.zeros(grid.N)
    u[0] = problem.u0
    for n in range(1, grid.N + 1):
        f_avg[n - 1] = average_forcing(problem.forcing, n, grid)
    for n in range(1, grid.N + 1):
        f_n = f_avg[n - 1]
        try:
            if scheme == BDF2 and n >= 2:
                u_n, xi_n, _ = bdf2_step(problem, u[n - 1], u[n - 2], f_n, tau, options)
                stencil = (1.5 * u_n - 2.0 * u[n - 1] + 0.5 * u[n - 2]) / tau
            else:
                u_n, xi_n, _ = initial_step(problem, u[n - 1], f_n, tau, options)
                stencil = (u_n - u[n - 1]) / tau
        except NonConvergenceError as exc:
            raise StepFailureError(
                n, exc.report, u[:n].copy(), xi[: n - 1].copy(), residuals[: n - 1].copy()
            ) from exc
        u[n] = u_n
        xi[n - 1] = xi_n
        residuals[n - 1] = _unscaled_residual(problem, stencil, u_n, xi_n, f_n)
    return RotheTrajectory(grid, u, xi, f_avg, scheme, residuals)


class _FitLine(NamedTuple):
    c1: float
    c2: float
    flagged: bool


@dataclass(frozen=True)
class CoercivityReport:
    """Empirical coercivity certificate for the per-step operators.

    For each stencil factor c the pairing <T v, v> is evaluated with the
    worst-case flux selection (the interval endpoint minimizing the
    pairing) and fitted against tau ||v||_V^2 as c1 * x - c2; a fitted
    slope c1 <= 0 is flagged.
    """

    tau: float
    t1: _FitLine
    t2: _FitLine

    @property
    def flags(self) -> list[str]:
        out = []
        if self.t1.flagged:
            out.append("one-step operator: fitted coercivity slope <= 0")
        if self.t2.flagged:
            out.append("two-step operator: fitted coercivity slope <= 0")
        return out

    @property
    def passed(self) -> bool:
        return not self.flags


def _fit_lower_line(xs: np.ndarray, ys: np.ndarray) -> _FitLine:
    a = np.vstack([xs, -np.ones_like(xs)]).T
    sol, *_ = np.linalg.lstsq(a, ys, rcond=None)
    c1, c2 = float(sol[0]), float(sol[1])
    # lift c2 so the fitted line is a valid lower bound on the samples
    c2 = max(c2, float(np.max(c1 * xs - ys, initial=c2)))
    return _FitLine(c1, c2, c1 <= 0.0)


def check_step_coercivity(
    space: GalerkinSpace,
    operator: LinearOperatorA,
    boundary: BoundaryFunctional,
    tau: float,
    samples: Sequence[np.ndarray],
) -> CoercivityReport:
    samples = [np.asarray(v, dtype=float) for v in samples]
    if not samples:
        raise ValueError("sample list must be non-empty")
    fits = []
    for c in (1.0, 2.0 / 3.0):
        xs = np.empty(len(samples))
        ys = np.empty(len(samples))
        for k, v in enumerate(samples):
            s = space.trace @ v
            lo, hi = boundary.potential.interval_arrays(s)
            worst = np.minimum(lo * s, hi * s)  # endpoint minimizing the pairing
            pair = (
                space.h_norm(v) ** 2
                + c * tau * float(v @ operator.stiffness @ v)
                + c * tau * float(boundary.weights @ worst)
            )
            xs[k] = tau * space.v_norm(v) ** 2
            ys[k] = pair
        fits.append(_fit_lower_line(xs, ys))
    return CoercivityReport(tau, fits[0], fits[1])
