from __future__ import annotations

import numpy as np
import pytest

from conftest import make_space, random_spd
from rothe_hvi import (
    BoundaryFunctional,
    ForcingSpec,
    GalerkinSpace,
    LinearOperatorA,
    LinearRobin,
    Mesh1D,
    PaperExponential,
    RotheProblem,
    RotheTrajectory,
    SolveOptions,
    TimeGrid,
    ZeroPotential,
    assemble_forcing,
    assemble_space,
    bdf2_identity_gap,
    bdf2_inequality_slack,
    build_interpolants,
    estimate_report,
    make_initial,
    run_rothe,
    tau_ladder_study,
)


def scalar_traj(u_values, T=1.0):
    """Hand-made trajectory on the 1-d space with unit Grams."""
    space = GalerkinSpace(gram_h=[[1.0]], gram_v=[[1.0]], trace=[[1.0]], gram_u=[[1.0]])
    u = np.asarray(u_values, dtype=float).reshape(-1, 1)
    N = u.shape[0] - 1
    return space, RotheTrajectory(
        grid=TimeGrid(T, N),
        u=u,
        xi=np.zeros((N, 1)),
        f_avg=np.zeros((N, 1)),
        scheme="bdf2",
        per_step_residuals=np.zeros(N),
    )


def fem_problem(n_el, potential, f0, f_N, u0_fun):
    mesh = Mesh1D(n_el)
    space, op = assemble_space(mesh)
    spec = ForcingSpec(f0, f_N)
    u0 = make_initial(mesh, space, u0_fun, 0.1).coeffs
    return RotheProblem(space, op, BoundaryFunctional(potential, np.ones(1)),
                        lambda t: assemble_forcing(mesh, spec, t), u0)


def test_identity_scalar_examples(scalar_space):
    a, b, c = np.array([1.0]), np.array([0.0]), np.array([0.0])
    assert bdf2_identity_gap(a, b, c, scalar_space) == pytest.approx(0.0, abs=1e-15)
    v = np.array([2.7])
    assert bdf2_identity_gap(v, v, v, scalar_space) == pytest.approx(0.0, abs=1e-14)


def test_identity_fuzz_r5():
    rng = np.random.default_rng(21)
    for _ in range(1000):
        space = make_space(random_spd(rng, 5))
        a, b, c = rng.normal(size=(3, 5))
        scale = 1.0 + sum(space.h_norm(v) ** 2 for v in (a, b, c))
        assert bdf2_identity_gap(a, b, c, space) <= 1e-12 * scale


def test_slack_tight_case(scalar_space):
    # a - 2b + c = 0 makes the inequality an equality
    slack = bdf2_inequality_slack(np.array([2.0]), np.array([1.0]), np.array([0.0]), scalar_space)
    assert slack == pytest.approx(0.0, abs=1e-14)


def test_slack_direct_arithmetic(scalar_space):
    slack = bdf2_inequality_slack(np.array([1.0]), np.array([0.0]), np.array([0.0]), scalar_space)
    assert slack == pytest.approx(1.0)
    v = np.array([3.3])
    assert bdf2_inequality_slack(v, v, v, scalar_space) == pytest.approx(0.0, abs=1e-14)


def test_slack_equals_second_difference_norm():
    rng = np.random.default_rng(22)
    for _ in range(300):
        dim = int(rng.integers(1, 7))
        space = make_space(random_spd(rng, dim))
        a, b, c = rng.normal(size=(3, dim))
        slack = bdf2_inequality_slack(a, b, c, space)
        expected = space.h_norm(a - 2.0 * b + c) ** 2
        assert slack == pytest.approx(expected, rel=1e-9, abs=1e-11)
        assert slack >= -1e-12 * (1.0 + expected)


def test_identity_dimension_mismatch(scalar_space):
    with pytest.raises(ValueError):
        bdf2_identity_gap(np.ones(2), np.ones(1), np.ones(1), scalar_space)


def test_interpolant_values_at_knots():
    space, traj = scalar_traj([0.0, 1.0, 3.0, 4.0], T=3.0)
    interp = build_interpolants(traj)
    u = traj.u
    for n in (2, 3):
        expected = 1.5 * u[n] - 0.5 * u[n - 1]
        assert interp.piecewise_linear(n * 1.0) == pytest.approx(expected)
    assert interp.piecewise_linear(1.0) == pytest.approx(1.5 * u[1] - 0.5 * u[0])


def test_interpolant_continuity_at_interior_knots():
    rng = np.random.default_rng(8)
    space, traj = scalar_traj(rng.normal(size=6), T=1.0)
    interp = build_interpolants(traj)
    tau = traj.grid.tau
    for n in range(1, 5):
        left = interp.piecewise_linear(n * tau - 1e-12)
        right = interp.piecewise_linear(n * tau + 1e-12)
        assert left == pytest.approx(right, abs=1e-9)


def test_interpolant_constant_trajectory():
    space, traj = scalar_traj([2.0] * 5)
    interp = build_interpolants(traj)
    for t in (0.0, 0.3, 0.77, 1.0):
        assert interp.piecewise_constant(t) == pytest.approx([2.0])
        assert interp.piecewise_linear(t) == pytest.approx([2.0])
        assert interp.derivative(t) == pytest.approx([0.0])


def test_interpolant_right_continuity_of_constant_branch():
    space, traj = scalar_traj([0.0, 1.0, 2.0])
    interp = build_interpolants(traj)
    assert interp.piecewise_constant(0.0) == pytest.approx([0.0])
    assert interp.piecewise_constant(1e-9) == pytest.approx([1.0])
    assert interp.piecewise_constant(0.5) == pytest.approx([1.0])
    assert interp.piecewise_constant(0.5 + 1e-9) == pytest.approx([2.0])


def test_interpolant_domain_error():
    space, traj = scalar_traj([0.0, 1.0, 2.0])
    interp = build_interpolants(traj)
    with pytest.raises(ValueError):
        interp.piecewise_linear(-0.1)
    with pytest.raises(ValueError):
        interp.piecewise_constant(1.1)


def test_interpolant_gap_matches_difference():
    rng = np.random.default_rng(12)
    space, traj = scalar_traj(rng.normal(size=7))
    interp = build_interpolants(traj)
    for t in rng.uniform(1e-6, 1.0, 40):
        direct = interp.piecewise_linear(t) - interp.piecewise_constant(t)
        assert interp.gap(t) == pytest.approx(direct, abs=1e-12)


def test_estimate_report_hand_computed_scalar_case():
    space, traj = scalar_traj([0.0, 1.0, 2.0], T=1.0)  # tau = 0.5
    rep = estimate_report(traj, space)
    assert rep.q3 == pytest.approx(0.5 * (0 + 1 + 4))
    assert rep.q4 == pytest.approx(2.0)
    assert rep.q5 == pytest.approx(0.0)
    assert rep.q6 == pytest.approx(0.5 * (1.0 / 0.5) ** 2)
    assert rep.q7 == pytest.approx(0.5 * ((1.5 * 2 - 2 + 0) / 0.5) ** 2)
    assert rep.q75 == pytest.approx(0.0)
    assert rep.u1_u0_gap == pytest.approx(1.0)
    assert rep.bv_bound == pytest.approx(0.5 * ((1 / 0.5) ** 2 + (1 / 0.5) ** 2))
    # both windows contribute ||diff||^2 integrals of tau/12 each
    assert rep.gap_quadrature == pytest.approx(1.0 / 12.0, rel=1e-12)
    assert rep.gap_closed_form == pytest.approx(0.5 / 12.0 + 0.5 / 6.0, rel=1e-12)


def test_estimate_report_zero_trajectory():
    space, traj = scalar_traj([0.0, 0.0, 0.0, 0.0])
    rep = estimate_report(traj, space)
    for name in ("q3", "q4", "q5", "q6", "q7", "q75", "gap_closed_form",
                 "gap_quadrature", "u1_u0_gap", "bv_bound"):
        assert getattr(rep, name) == 0.0


def test_estimate_report_linear_in_time_second_differences_vanish():
    taus = np.linspace(0.0, 1.0, 9)
    space, traj = scalar_traj(3.0 * taus)
    rep = estimate_report(traj, space)
    assert rep.q75 == pytest.approx(0.0, abs=1e-26)


def test_gap_bound_holds_on_real_run():
    problem = fem_problem(16, PaperExponential(1.0),
                          lambda t, x: np.ones_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    traj = run_rothe(problem, TimeGrid(1.0, 16), "bdf2", SolveOptions(tol=1e-12))
    rep = estimate_report(traj, problem.space, problem.boundary.weights)
    assert rep.gap_quadrature <= rep.gap_closed_form * (1.0 + 1e-8)


def test_ladder_study_smooth_problem_gaps_shrink():
    problem = fem_problem(8, LinearRobin(1.0),
                          lambda t, x: np.ones_like(x) * np.sin(np.pi * t),
                          lambda t: 0.0, lambda x: np.zeros_like(x))
    taus = [1.0 / n for n in (8, 16, 32, 64)]
    study = tau_ladder_study(problem, 1.0, taus, "bdf2", SolveOptions(tol=1e-12))
    u1 = study.series("u1_u0_gap")
    ratios = u1[1:] / u1[:-1]
    assert np.all(ratios <= 0.75)
    gq = study.series("gap_quadrature")
    assert np.all(gq[1:] / gq[:-1] <= 0.75)


def test_ladder_study_zero_data_all_rows_zero():
    problem = fem_problem(4, ZeroPotential(),
                          lambda t, x: np.zeros_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    study = tau_ladder_study(problem, 1.0, [0.25, 0.125], "bdf2")
    for row in study.rows:
        assert row.report.q3 == 0.0
        assert row.report.gap_quadrature == 0.0


def test_ladder_study_validation():
    problem = fem_problem(4, ZeroPotential(),
                          lambda t, x: np.zeros_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    with pytest.raises(ValueError):
        tau_ladder_study(problem, 1.0, [0.125, 0.25], "bdf2")
    with pytest.raises(ValueError):
        tau_ladder_study(problem, 1.0, [0.3], "bdf2")
    with pytest.raises(ValueError):
        tau_ladder_study(problem, 1.0, [], "bdf2")


def test_peak_h_norm_stable_across_ladder():
    problem = fem_problem(16, PaperExponential(1.0),
                          lambda t, x: np.ones_like(x), lambda t: 0.0,
                          lambda x: np.zeros_like(x))
    taus = [1.0 / n for n in (8, 16, 32)]
    study = tau_ladder_study(problem, 1.0, taus, "bdf2", SolveOptions(tol=1e-12))
    q4 = study.series("q4")
    assert q4.max() / q4.min() < 1.001
