"""Numerical diagnostics for the two-step scheme: discrete-energy
identities, a-priori estimate quantities, time interpolants and their gap,
and ladder studies across a family of step sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .galerkin import GalerkinSpace
from .inclusion_solver import SolveOptions
from .stepper import BDF2, RotheProblem, RotheTrajectory, TimeGrid, run_rothe

__all__ = [
    "EstimateReport",
    "Interpolants",
    "LadderRow",
    "LadderStudy",
    "bdf2_identity_gap",
    "bdf2_inequality_slack",
    "build_interpolants",
    "estimate_report",
    "tau_ladder_study",
]

_GAUSS5 = np.polynomial.legendre.leggauss(5)

QUANTITY_FIELDS = ("q3", "q4", "q5", "q6", "q7", "q75")


@dataclass(frozen=True)
class EstimateReport:
    """The six a-priori estimate quantities of one trajectory plus the
    interpolant-gap measures.

    q3  : tau * sum_n ||u^n||_V^2            (n = 0..N)
    q4  : max_n |u^n|_H
    q5  : tau * sum_n ||xi^n||_{U*}^2        (n = 1..N)
    q6  : tau * ||(u^1 - u^0)/tau||_{V*}^2
    q7  : tau * sum_n ||(1.5 u^n - 2 u^{n-1} + 0.5 u^{n-2})/tau||_{V*}^2
    q75 : sum_n |u^n - 2 u^{n-1} + u^{n-2}|_H^2
    gap_closed_form : closed-form upper bound on the squared L2(0,T;V*)
        distance between the piecewise-linear and piecewise-constant
        reconstructions,
    gap_quadrature  : the same distance by composite Gauss quadrature,
    u1_u0_gap       : |u^1 - u^0|_H,
    bv_bound        : tau * sum_i ||(u^i - u^{i-1})/tau||_{V*}^2 (upper
        bound for the squared BV^2 seminorm of the piecewise-constant
        reconstruction, up to the factor T).
    """

    q3: float
    q4: float
    q5: float
    q6: float
    q7: float
    q75: float
    gap_closed_form: float
    gap_quadrature: float
    u1_u0_gap: float
    bv_bound: float

    def __post_init__(self) -> None:
        for f in fields(self):
            val = getattr(self, f.name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ValueError(f"{f.name} must be finite and >= 0, got {val}")
        if self.gap_quadrature > self.gap_closed_form * (1.0 + 1e-8) + 1e-300:
            raise ValueError("quadrature gap exceeds its closed-form bound")


def _h_inner(space: GalerkinSpace, a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ space.gram_h @ b)


def bdf2_identity_gap(a, b, c, space: GalerkinSpace) -> float:
    """|(1.5a - 2b + 0.5c, a)_H - 0.25(|a|^2 + |2a-b|^2 - |b|^2 - |2b-c|^2
    + |a-2b+c|^2)|; zero up to roundoff for every triple."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not a.shape == b.shape == c.shape == (space.dim,):
        raise ValueError("triple must share the space dimension")
    lhs = _h_inner(space, 1.5 * a - 2.0 * b + 0.5 * c, a)
    rhs = 0.25 * (
        _h_inner(space, a, a)
        + _h_inner(space, 2.0 * a - b, 2.0 * a - b)
        - _h_inner(space, b, b)
        - _h_inner(space, 2.0 * b - c, 2.0 * b - c)
        + _h_inner(space, a - 2.0 * b + c, a - 2.0 * b + c)
    )
    return abs(lhs - rhs)


def bdf2_inequality_slack(a, b, c, space: GalerkinSpace) -> float:
    """(1.5a - 2b + 0.5c, a-2b+c)_H - (0.5|a-b|^2 - 0.5|b-c|^2); equals
    |a-2b+c|_H^2, so it is nonnegative and vanishes exactly when the second
    difference does."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not a.shape == b.shape == c.shape == (space.dim,):
        raise ValueError("triple must share the space dimension")
    lhs = _h_inner(space, 1.5 * a - 2.0 * b + 0.5 * c, a - 2.0 * b + c)
    rhs = 0.5 * _h_inner(space, a - b, a - b) - 0.5 * _h_inner(space, b - c, b - c)
    return lhs - rhs


class Interpolants:
    """Piecewise-constant and piecewise-linear time reconstructions of a
    trajectory, plus the derivative of the linear one.

    The constant reconstruction takes the new value on each window
    ((n-1)tau, n tau] (right-continuous there, with the initial vector at
    t = 0).  The linear reconstruction interpolates so that its slope on
    each window is the scheme's difference stencil.
    """

    def __init__(self, traj: RotheTrajectory):
        self._u = traj.u
        self._grid = traj.grid
        self._N = traj.grid.N

    def _check_t(self, t: float) -> float:
        T = self._grid.T_final
        if t < -1e-12 * T or t > T * (1.0 + 1e-12):
            raise ValueError(f"t={t} outside the time domain [0, {T}]")
        return min(max(t, 0.0), T)

    def _window(self, t: float) -> int:
        # index n with t in ((n-1) tau, n tau]; n = 0 only at t = 0
        n = int(np.ceil(t / self._grid.tau - 1e-12))
        return min(max(n, 0), self._N)

    def piecewise_constant(self, t: float) -> np.ndarray:
        t = self._check_t(t)
        return self._u[self._window(t)].copy()

    def piecewise_linear(self, t: float) -> np.ndarray:
        t = self._check_t(t)
        u = self._u
        tau = self._grid.tau
        if t <= tau:
            return 1.5 * u[1] - 0.5 * u[0] + (u[1] - u[0]) * ((t - tau) / tau)
        n = self._window(t)
        stencil = 1.5 * u[n] - 2.0 * u[n - 1] + 0.5 * u[n - 2]
        return 1.5 * u[n] - 0.5 * u[n - 1] + stencil * ((t - n * tau) / tau)

    def derivative(self, t: float) -> np.ndarray:
        t = self._check_t(t)
        u = self._u
        tau = self._grid.tau
        if t <= tau:
            return (u[1] - u[0]) / tau
        n = self._window(t)
        return (1.5 * u[n] - 2.0 * u[n - 1] + 0.5 * u[n - 2]) / tau

    def gap(self, t: float) -> np.ndarray:
        """Difference (linear - constant), in its explicit branch form."""
        t = self._check_t(t)
        u = self._u
        tau = self._grid.tau
        if t <= tau:
            return (u[1] - u[0]) * ((t - 0.5 * tau) / tau)
        n = self._window(t)
        stencil = 1.5 * u[n] - 2.0 * u[n - 1] + 0.5 * u[n - 2]
        second = u[n] - 2.0 * u[n - 1] + u[n - 2]
        return stencil * ((t - (n - 0.5) * tau) / tau) - 0.25 * second


def build_interpolants(traj: RotheTrajectory) -> Interpolants:
    return Interpolants(traj)


def _dual_sq(space: GalerkinSpace, h_vec: np.ndarray) -> float:
    """Squared V*-norm of an H-element (embedded through the H-Gram)."""
    w = space.gram_h @ h_vec
    return space.dual_norm(w) ** 2


def _gap_quadrature(space: GalerkinSpace, traj: RotheTrajectory) -> float:
    interp = Interpolants(traj)
    tau = traj.grid.tau
    pts, wts = _GAUSS5
    total = 0.0
    for n in range(1, traj.grid.N + 1):
        a, b = (n - 1) * tau, n * tau
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        for x, w in zip(pts, wts):
            total += w * half * _dual_sq(space, interp.gap(mid + half * x))
    return total


def estimate_report(
    traj: RotheTrajectory,
    space: GalerkinSpace,
    weights: Optional[np.ndarray] = None,
) -> EstimateReport:
    """Compute every estimate quantity of the trajectory by direct
    summation.  ``weights`` are the boundary quadrature weights used to
    lift nodal multipliers to boundary functionals (all ones by default).
    """
    u = traj.u
    xi = traj.xi
    N = traj.grid.N
    tau = traj.grid.tau
    if weights is None:
        weights = np.ones(space.dim_u)
    w = np.asarray(weights, dtype=float)

    q3 = tau * sum(space.v_norm(u[n]) ** 2 for n in range(N + 1))
    q4 = max(space.h_norm(u[n]) for n in range(N + 1))
    q5 = tau * sum(space.dual_u_norm(w * xi[n - 1]) ** 2 for n in range(1, N + 1))
    first_diff = u[1] - u[0]
    q6 = tau * _dual_sq(space, first_diff / tau)
    q7 = 0.0
    q75 = 0.0
    gap_cf = tau / 12.0 * _dual_sq(space, first_diff)
    for n in range(2, N + 1):
        stencil = 1.5 * u[n] - 2.0 * u[n - 1] + 0.5 * u[n - 2]
        second = u[n] - 2.0 * u[n - 1] + u[n - 2]
        q7 += tau * _dual_sq(space, stencil / tau)
        sec_h = space.h_norm(second) ** 2
        q75 += sec_h
        gap_cf += tau / 6.0 * _dual_sq(space, stencil)
        gap_cf += tau / 8.0 * space.trace_operator_norm * sec_h
    bv = tau * sum(_dual_sq(space, (u[i] - u[i - 1]) / tau) for i in range(1, N + 1))
    return EstimateReport(
        q3=q3,
        q4=q4,
        q5=q5,
        q6=q6,
        q7=q7,
        q75=q75,
        gap_closed_form=gap_cf,
        gap_quadrature=_gap_quadrature(space, traj),
        u1_u0_gap=space.h_norm(first_diff),
        bv_bound=bv,
    )


@dataclass(frozen=True)
class LadderRow:
    tau: float
    report: EstimateReport
    error_at_T: float  # H-norm error vs the reference at t = T (nan if none)
    trajectory: RotheTrajectory


@dataclass(frozen=True)
class LadderStudy:
    scheme: str
    rows: tuple[LadderRow, ...]

    def taus(self) -> np.ndarray:
        return np.array([r.tau for r in self.rows])

    def series(self, name: str) -> np.ndarray:
        if name == "error_at_T":
            return np.array([r.error_at_T for r in self.rows])
        return np.array([getattr(r.report, name) for r in self.rows])

    def max_min_ratio(self, name: str) -> float:
        s = self.series(name)
        lo = s.min()
        return float("inf") if lo == 0.0 else float(s.max() / lo)

    def growth_factor(self, name: str) -> float:
        """Largest value along the ladder relative to the coarsest rung;
        near 1 (and never large) when the quantity stays bounded as the
        step size decreases."""
        s = self.series(name)
        if s[0] == 0.0:
            return 1.0 if s.max() == 0.0 else float("inf")
        return float(s.max() / s[0])

    def halving_ratios(self, name: str) -> np.ndarray:
        s = self.series(name)
        with np.errstate(divide="ignore", invalid="ignore"):
            return s[1:] / s[:-1]

    def fitted_order(self) -> float:
        """Least-squares slope of log(error) vs log(tau)."""
        taus = self.taus()
        errs = self.series("error_at_T")
        mask = np.isfinite(errs) & (errs > 0)
        if mask.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(taus[mask]), np.log(errs[mask]), 1)[0])


def tau_ladder_study(
    problem: RotheProblem,
    t_final: float,
    taus: Sequence[float],
    scheme: str = BDF2,
    options: Optional[SolveOptions] = None,
    reference: Optional[RotheTrajectory] = None,
) -> LadderStudy:
    """Run the scheme once per step size (decreasing, each dividing the
    horizon) and collect per-run estimate reports, plus the terminal-time
    error against a reference trajectory when one is supplied."""
    taus = [float(t) for t in taus]
    if not taus:
        raise ValueError("tau ladder must be non-empty")
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau ladder must be strictly decreasing")
    rows = []
    weights = problem.boundary.weights
    for tau in taus:
        n = round(t_final / tau)
        if abs(n * tau - t_final) > 4.0 * np.finfo(float).eps * t_final:
            raise ValueError(f"tau={tau} does not divide T={t_final}")
        traj = run_rothe(problem, TimeGrid(t_final, n), scheme, options)
        rep = estimate_report(traj, problem.space, weights)
        err = float("nan")
        if reference is not None:
            err = problem.space.h_norm(traj.u[-1] - reference.u[-1])
        rows.append(LadderRow(tau, rep, err, traj))
    return LadderStudy(scheme, tuple(rows))
