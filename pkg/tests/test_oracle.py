from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import random_spd
from rothe_hvi import (
    BoundaryFunctional,
    ForcingSpec,
    GalerkinSpace,
    LinearOperatorA,
    LinearRobin,
    Mesh1D,
    NonconvexPiecewise,
    PaperExponential,
    RotheProblem,
    SolveOptions,
    StepProblem,
    TimeGrid,
    ZeroPotential,
    assemble_forcing,
    assemble_space,
    make_initial,
    minimize_energy_convex,
    reference_solution,
    run_rothe,
    scan_roots_1d,
    scan_roots_reduced,
    step_energy,
)


def scalar_problem(potential, b, tau=1.0, c=1.0, m=1.0, k=1.0, w=1.0):
    space = GalerkinSpace(gram_h=[[m]], gram_v=[[m + k]], trace=[[1.0]], gram_u=[[1.0]])
    return StepProblem(
        space=space, mass=np.array([[m]]), stiff_scaled=np.array([[c * tau * k]]),
        trace=np.array([[1.0]]), weights=np.array([w]), potential=potential,
        rhs=np.array([float(b)]), c_coef=c, tau=tau,
    )


def test_scan_linear_flux_single_root():
    k = 2.0
    tau, c, m, kk, w, b = 0.5, 1.0, 1.0, 1.0, 1.0, 3.0
    p = scalar_problem(LinearRobin(k), b, tau=tau, c=c, m=m, k=kk, w=w)
    roots = scan_roots_1d(p, -10.0, 10.0)
    expected = b / (m + c * tau * kk + c * tau * w * k)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(expected, abs=1e-9)


def test_scan_flux_at_kink_zero_rhs():
    p = scalar_problem(PaperExponential(1.0), 0.0, tau=0.5)
    assert scan_roots_1d(p, -5.0, 5.0) == pytest.approx([0.0], abs=1e-9)


def test_scan_nonconvex_multiple_roots():
    # total map 2u + z(u) descends on (0, 1): three roots at b = 0.5
    p = scalar_problem(NonconvexPiecewise(), 0.5)
    roots = scan_roots_1d(p, -5.0, 5.0)
    assert len(roots) == 3
    assert roots == pytest.approx([0.0, 0.25, 1.5], abs=1e-9)


def test_scan_empty_when_range_misses_root():
    p = scalar_problem(LinearRobin(1.0), 100.0)
    assert scan_roots_1d(p, -1.0, 1.0) == []


def test_scan_validation():
    p = scalar_problem(LinearRobin(1.0), 1.0)
    with pytest.raises(ValueError):
        scan_roots_1d(p, -1.0, 1.0, grid_n=100)


def test_scan_reduced_matches_full_solution_dim2():
    rng = np.random.default_rng(42)
    for _ in range(20):
        mass = random_spd(rng, 2, shift=0.5)
        stiff = random_spd(rng, 2, shift=0.0)
        tau = 0.3
        trace = rng.uniform(0.5, 1.5, size=(1, 2))
        space = GalerkinSpace(gram_h=mass, gram_v=mass + stiff, trace=trace, gram_u=np.eye(1))
        p = StepProblem(space=space, mass=mass, stiff_scaled=tau * stiff, trace=trace,
                        weights=np.array([1.3]), potential=PaperExponential(1.0),
                        rhs=rng.normal(size=2) * 2.0, c_coef=1.0, tau=tau)
        roots = scan_roots_reduced(p, -20.0, 20.0, 4000)
        assert roots
        for u in roots:
            # the implied flux must close the equation and be admissible
            r = p.rhs - p.system @ u
            xi = float(np.linalg.lstsq(p.flux_matrix, r, rcond=None)[0][0])
            s = float((p.trace @ u)[0])
            lo, hi = p.potential.membership_interval(s, 1e-9 * (1 + abs(s)))
            assert lo - 1e-7 <= xi <= hi + 1e-7
            closed = p.system @ u + p.flux_matrix @ np.array([xi]) - p.rhs
            assert np.max(np.abs(closed)) < 1e-7


def test_minimize_energy_smooth_case_equals_linear_solve():
    rng = np.random.default_rng(17)
    mass = random_spd(rng, 2, shift=1.0)
    stiff = random_spd(rng, 2, shift=0.1)
    trace = np.array([[1.0, 0.0]])
    space = GalerkinSpace(gram_h=mass, gram_v=mass + stiff, trace=trace, gram_u=np.eye(1))
    p = StepProblem(space=space, mass=mass, stiff_scaled=0.2 * stiff, trace=trace,
                    weights=np.ones(1), potential=ZeroPotential(),
                    rhs=np.array([1.0, -0.5]), c_coef=1.0, tau=0.2)
    u = minimize_energy_convex(p, tol=1e-10)
    direct = np.linalg.solve(p.system, p.rhs)
    assert u == pytest.approx(direct, abs=1e-7)


def test_minimize_energy_scalar_toy():
    p = scalar_problem(PaperExponential(1.0), 3.0 + math.exp(-1.0))
    u = minimize_energy_convex(p)
    assert u[0] == pytest.approx(1.0, abs=1e-7)


def test_minimize_energy_zero_rhs():
    p = scalar_problem(PaperExponential(1.0), 0.0)
    u = minimize_energy_convex(p)
    assert u[0] == pytest.approx(0.0, abs=1e-7)


def test_minimize_energy_rejects_nonmonotone():
    p = scalar_problem(NonconvexPiecewise(), 0.5)
    with pytest.raises(ValueError):
        minimize_energy_convex(p)


def test_step_energy_definition():
    p = scalar_problem(LinearRobin(2.0), 1.0, tau=0.5)
    u = np.array([0.7])
    expected = 0.5 * 0.7**2 * (1 + 0.5) + 0.5 * (0.5 * 2.0 * 0.7**2) - 0.7
    assert step_energy(p, u) == pytest.approx(expected)


def fem_problem(n_el, potential, f0, f_N, u0_fun):
    mesh = Mesh1D(n_el)
    space, op = assemble_space(mesh)
    spec = ForcingSpec(f0, f_N)
    u0 = make_initial(mesh, space, u0_fun, 0.1).coeffs
    return RotheProblem(space, op, BoundaryFunctional(potential, np.ones(1)),
                        lambda t: assemble_forcing(mesh, spec, t), u0)


def test_reference_matches_scalar_closed_form():
    # m u' + g u = f with constant f: u(t) = f/g + (u0 - f/g) e^{-g t / m}
    g_coef = 1.0
    space = GalerkinSpace(gram_h=[[1.0]], gram_v=[[2.0]], trace=[[1.0]], gram_u=[[1.0]])
    op = LinearOperatorA([[g_coef]], alpha=0.5, beta=1.0, a_growth=0.0, b_growth=1.0)
    problem = RotheProblem(space, op, BoundaryFunctional(ZeroPotential(), np.ones(1)),
                           lambda t: np.array([1.0]), np.array([1.2]))
    ref = reference_solution(problem, 1.0, 1.0 / 4096)
    exact = 1.0 + (1.2 - 1.0) * math.exp(-1.0)
    assert abs(ref.u[-1, 0] - exact) < 1e-8


def test_reference_matches_fem_closed_form():
    # linear flux problem: M u' + (K + k e e^T) u = F, propagated exactly
    # through the matrix exponential
    problem = fem_problem(4, LinearRobin(1.0),
                          lambda t, x: np.ones_like(x), lambda t: 0.0,
                          lambda x: 0.1 * np.cos(np.pi * x))
    M = problem.space.gram_h
    G = problem.operator.stiffness + problem.space.trace.T @ problem.space.trace
    F = problem.forcing(0.0)
    u_inf = np.linalg.solve(G, F)
    propagator = sla.expm(-np.linalg.solve(M, G))
    exact = u_inf + propagator @ (problem.u0 - u_inf)
    ref = reference_solution(problem, 1.0, 1.0 / 8192)
    assert problem.space.h_norm(ref.u[-1] - exact) < 1e-8


def test_reference_zero_data():
    problem = fem_problem(4, ZeroPotential(),
                          lambda t, x: np.zeros_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    ref = reference_solution(problem, 1.0, 1.0 / 64)
    assert np.all(ref.u == 0.0)


def test_reference_self_consistency_under_halving():
    problem = fem_problem(16, PaperExponential(1.0),
                          lambda t, x: np.ones_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    a = reference_solution(problem, 1.0, 1.0 / 1024)
    b = reference_solution(problem, 1.0, 1.0 / 2048)
    assert problem.space.h_norm(a.u[-1] - b.u[-1]) < 1e-6


def test_reference_validates_step():
    problem = fem_problem(2, ZeroPotential(),
                          lambda t, x: np.zeros_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    with pytest.raises(ValueError):
        reference_solution(problem, 1.0, 0.3)
