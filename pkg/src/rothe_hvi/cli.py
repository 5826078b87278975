"""Configuration-driven command line front end.

Subcommands
-----------
run      : one trajectory at the coarsest ladder step; writes the
           trajectory and its estimate report.
study    : full tau ladder with a fine reference run; writes the ladder
           table, terminal-time errors, fitted order and plot series.
compare  : both schemes on the same ladder against both a two-step and a
           one-step fine reference; writes side-by-side order tables.
check    : hypothesis certificates (operator bounds, flux growth, step
           coercivity, discrete identities); nonzero exit on violation.

Configs are flat INI files with typed keys (documented in docs/config.md);
`render_config` emits the canonical form whose serialize/parse round trip
is byte-identical.  All CSV output starts with a `# schema_version=1`
comment line and uses 17-significant-digit floats.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .diagnostics import (
    QUANTITY_FIELDS,
    LadderRow,
    LadderStudy,
    bdf2_identity_gap,
    bdf2_inequality_slack,
    estimate_report,
    tau_ladder_study,
)
from .fem1d import ForcingSpec, Mesh1D, assemble_forcing, assemble_space, make_initial
from .galerkin import GalerkinSpace, LinearOperatorA, check_hypotheses_A
from .inclusion_solver import SolveOptions
from .oracle import reference_solution
from .potentials import (
    BoundaryFunctional,
    LinearRobin,
    NonconvexPiecewise,
    PaperExponential,
    ScalarPotential,
    ZeroPotential,
    check_growth,
)
from .stepper import (
    BACKWARD_EULER,
    BDF2,
    RotheProblem,
    RotheTrajectory,
    StepFailureError,
    TimeGrid,
    check_step_coercivity,
    run_rothe,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "render_config",
    "build_problem",
    "cmd_run",
    "cmd_study",
    "cmd_compare",
    "cmd_check",
    "main",
]

SCHEMA_VERSION = 1
ENV_OUT = "ROTHE_HVI_OUT"


class ConfigError(ValueError):
    """Malformed configuration; message names the offending section/key."""


@dataclass(frozen=True)
class ExperimentConfig:
    # [problem]
    n_el: int = 64
    t_final: float = 1.0
    forcing: str = "zero"
    f0_value: float = 1.0
    fn_value: float = 0.0
    f0_t_coeffs: tuple[float, ...] = (1.0,)
    f0_x_coeffs: tuple[float, ...] = (1.0,)
    fn_t_coeffs: tuple[float, ...] = (0.0,)
    potential: str = "zero"
    potential_d: float = 1.0
    potential_k: float = 1.0
    paper_literal_subdiff: bool = False
    ncvx_jump: float = 1.0
    ncvx_drop_slope: float = 4.0
    ncvx_drop_width: float = 1.0
    ncvx_tail_slope: float = 1.0
    u0: str = "zero"
    u0_value: float = 0.0
    u0_coeffs: tuple[float, ...] = (0.0,)
    alpha: Optional[float] = None
    beta: Optional[float] = None
    a_growth: Optional[float] = None
    b_growth: Optional[float] = None
    # [scheme]
    scheme: str = BDF2
    # [ladder]
    taus: tuple[float, ...] = (0.125, 0.0625, 0.03125)
    tau_ref: Optional[float] = None  # None -> min(taus) / 32
    # [solver]
    tol: float = 1e-10
    eps0: float = 1e-2
    eps_min: float = 1e-10
    max_iter: int = 100
    # [check]
    n_samples: int = 1000
    n_fuzz: int = 2000
    coercivity_taus: tuple[float, ...] = (0.1, 0.05, 0.01)
    # [output]
    output_dir: str = ""

    def solver_options(self) -> SolveOptions:
        return SolveOptions(
            tol=self.tol, eps0=self.eps0, eps_min=self.eps_min, max_iter=self.max_iter
        )

    def reference_tau(self) -> float:
        return self.tau_ref if self.tau_ref is not None else min(self.taus) / 32.0


_FORCING_NAMES = ("zero", "constant", "smooth", "poly")
_POTENTIAL_NAMES = ("zero", "paper_exponential", "linear_robin", "nonconvex_piecewise")
_U0_NAMES = ("zero", "constant", "poly")

# canonical section/key layout; also drives parsing and validation
_SCHEMA: dict[str, tuple[str, ...]] = {
    "problem": (
        "n_el",
        "t_final",
        "forcing",
        "f0_value",
        "fn_value",
        "f0_t_coeffs",
        "f0_x_coeffs",
        "fn_t_coeffs",
        "potential",
        "potential_d",
        "potential_k",
        "paper_literal_subdiff",
        "ncvx_jump",
        "ncvx_drop_slope",
        "ncvx_drop_width",
        "ncvx_tail_slope",
        "u0",
        "u0_value",
        "u0_coeffs",
        "alpha",
        "beta",
        "a_growth",
        "b_growth",
    ),
    "scheme": ("kind",),
    "ladder": ("taus", "tau_ref"),
    "solver": ("tol", "eps0", "eps_min", "max_iter"),
    "check": ("n_samples", "n_fuzz", "coercivity_taus"),
    "output": ("dir",),
}
_KEY_TO_FIELD = {("scheme", "kind"): "scheme", ("output", "dir"): "output_dir"}


def _field_name(section: str, key: str) -> str:
    return _KEY_TO_FIELD.get((section, key), key)


def _fmt_value(val) -> str:
    if val is None:
        return "default"
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, tuple):
        return ",".join(repr(float(x)) for x in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical text form: fixed section and key order, one value per key."""
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            if key == "tau_ref":
                val = "auto" if cfg.tau_ref is None else repr(cfg.tau_ref)
            else:
                val = _fmt_value(getattr(cfg, _field_name(section, key)))
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def _parse_typed(section: str, key: str, raw: str, template):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if key == "tau_ref":
            return None if raw.lower() in ("auto", "none") else float(raw)
        if template is None or (key in ("alpha", "beta", "a_growth", "b_growth")):
            return None if raw.lower() == "default" else float(raw)
        if isinstance(template, bool):
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        if isinstance(template, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(source) -> ExperimentConfig:
    """Parse a config file path or string into an ExperimentConfig.

    Unknown sections or keys are rejected so typos fail loudly."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        if isinstance(source, (str, Path)) and os.path.exists(str(source)):
            with open(source, "r", encoding="utf-8") as fh:
                cp.read_file(fh)
        else:
            cp.read_string(str(source))
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        loc = f" (line {lineno})" if lineno else ""
        raise ConfigError(f"cannot parse config{loc}: {exc.message}") from None
    defaults = ExperimentConfig()
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
            fname = _field_name(section, key)
            template = getattr(defaults, fname)
            values[fname] = _parse_typed(section, key, cp[section][key], template)
    cfg = replace(defaults, **values)
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: ExperimentConfig) -> None:
    if cfg.n_el < 1:
        raise ConfigError("[problem] n_el: must be >= 1")
    if not cfg.t_final > 0:
        raise ConfigError("[problem] t_final: must be > 0")
    if cfg.forcing not in _FORCING_NAMES:
        raise ConfigError(f"[problem] forcing: unknown preset {cfg.forcing!r}")
    if cfg.potential not in _POTENTIAL_NAMES:
        raise ConfigError(f"[problem] potential: unknown kind {cfg.potential!r}")
    if cfg.u0 not in _U0_NAMES:
        raise ConfigError(f"[problem] u0: unknown preset {cfg.u0!r}")
    if cfg.scheme not in (BDF2, BACKWARD_EULER):
        raise ConfigError(f"[scheme] kind: unknown scheme {cfg.scheme!r}")
    if not cfg.taus:
        raise ConfigError("[ladder] taus: must be non-empty")
    for tau in cfg.taus:
        n = round(cfg.t_final / tau)
        if n < 1 or abs(n * tau - cfg.t_final) > 4.0 * np.finfo(float).eps * cfg.t_final:
            raise ConfigError(f"[ladder] taus: {tau} does not divide t_final={cfg.t_final}")
    if any(b >= a for a, b in zip(cfg.taus, cfg.taus[1:])):
        raise ConfigError("[ladder] taus: must be strictly decreasing")
    if not (cfg.tol > 0 and cfg.eps0 > 0 and cfg.eps_min > 0):
        raise ConfigError("[solver] tol/eps0/eps_min: must be > 0")


# ---------------------------------------------------------------------------
# problem construction


def build_potential(cfg: ExperimentConfig) -> ScalarPotential:
    if cfg.potential == "zero":
        return ZeroPotential()
    if cfg.potential == "paper_exponential":
        return PaperExponential(cfg.potential_d, literal_branch=cfg.paper_literal_subdiff)
    if cfg.potential == "linear_robin":
        return LinearRobin(cfg.potential_k)
    return NonconvexPiecewise(
        cfg.ncvx_jump, cfg.ncvx_drop_slope, cfg.ncvx_drop_width, cfg.ncvx_tail_slope
    )


def _poly(coeffs: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    c = np.asarray(coeffs, dtype=float)

    def p(x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), c)

    return p


def build_forcing_spec(cfg: ExperimentConfig) -> ForcingSpec:
    if cfg.forcing == "zero":
        return ForcingSpec(lambda t, x: np.zeros_like(x), lambda t: 0.0)
    if cfg.forcing == "constant":
        c0, cn = cfg.f0_value, cfg.fn_value
        return ForcingSpec(lambda t, x: np.full_like(x, c0), lambda t: cn)
    if cfg.forcing == "smooth":
        # smooth in time and space with f(0) = f'(0) = 0, so the startup is
        # compatible with a zero initial state and order measurements stay clean
        return ForcingSpec(
            lambda t, x: (1.0 - np.cos(np.pi * t)) * 0.5 * (1.0 + x),
            lambda t: 0.5 * t * t * np.exp(-t),
        )
    pt, px, pn = _poly(cfg.f0_t_coeffs), _poly(cfg.f0_x_coeffs), _poly(cfg.fn_t_coeffs)
    return ForcingSpec(lambda t, x: pt(t) * px(x), lambda t: float(pn(t)))


def build_u0(cfg: ExperimentConfig) -> Callable[[np.ndarray], np.ndarray]:
    if cfg.u0 == "zero":
        return lambda x: np.zeros_like(x)
    if cfg.u0 == "constant":
        c = cfg.u0_value
        return lambda x: np.full_like(x, c)
    return _poly(cfg.u0_coeffs)


def build_problem(cfg: ExperimentConfig) -> tuple[Mesh1D, RotheProblem]:
    mesh = Mesh1D(cfg.n_el)
    space, op = assemble_space(mesh)
    overrides = {}
    for name in ("alpha", "beta", "a_growth", "b_growth"):
        val = getattr(cfg, name)
        if val is not None:
            overrides[name] = val
    if overrides:
        op = LinearOperatorA(op.stiffness, **{
            "alpha": op.alpha, "beta": op.beta,
            "a_growth": op.a_growth, "b_growth": op.b_growth,
            **overrides,
        })
    boundary = BoundaryFunctional(build_potential(cfg), np.ones(1))
    spec = build_forcing_spec(cfg)
    u0 = make_initial(mesh, space, build_u0(cfg), min(cfg.taus)).coeffs
    problem = RotheProblem(
        space=space,
        operator=op,
        boundary=boundary,
        forcing=lambda t: assemble_forcing(mesh, spec, t),
        u0=u0,
    )
    return mesh, problem


# ---------------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _trajectory_rows(traj: RotheTrajectory) -> tuple[list[str], list[list]]:
    dim, dim_u = traj.u.shape[1], traj.xi.shape[1]
    header = (
        ["t"]
        + [f"u{i}" for i in range(dim)]
        + [f"xi{i}" for i in range(dim_u)]
        + ["residual"]
    )
    rows = []
    times = traj.grid.times()
    for n in range(traj.grid.N + 1):
        xi = traj.xi[n - 1] if n >= 1 else np.zeros(dim_u)
        res = traj.per_step_residuals[n - 1] if n >= 1 else 0.0
        rows.append([times[n], *traj.u[n], *xi, res])
    return header, rows


_ESTIMATE_COLS = (
    "tau",
    *QUANTITY_FIELDS,
    "gap_closed_form",
    "gap_quadrature",
    "u1_u0_gap",
    "bv_bound",
)


def _estimate_row(tau: float, rep) -> list:
    return [tau] + [getattr(rep, name) for name in _ESTIMATE_COLS[1:]]


def _write_summary(out: Path, rows: list[tuple[str, bool, str]]) -> None:
    _write_csv(
        out / "summary.csv",
        ["name", "status", "detail"],
        [[name, "PASS" if ok else "FAIL", detail] for name, ok, detail in rows],
    )


def _resolve_out(cli_out: Optional[str], cfg: ExperimentConfig) -> Path:
    if cli_out:
        return Path(cli_out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    env = os.environ.get(ENV_OUT)
    if env:
        return Path(env)
    return Path("rothe_out")


def _ladder(
    problem: RotheProblem,
    cfg: ExperimentConfig,
    scheme: str,
    reference: Optional[RotheTrajectory],
    jobs: int,
) -> LadderStudy:
    opts = cfg.solver_options()
    if jobs <= 1:
        return tau_ladder_study(problem, cfg.t_final, cfg.taus, scheme, opts, reference)

    def one(tau: float) -> LadderRow:
        n = round(cfg.t_final / tau)
        traj = run_rothe(problem, TimeGrid(cfg.t_final, n), scheme, opts)
        rep = estimate_report(traj, problem.space, problem.boundary.weights)
        err = float("nan")
        if reference is not None:
            err = problem.space.h_norm(traj.u[-1] - reference.u[-1])
        return LadderRow(tau, rep, err, traj)

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        rows = tuple(pool.map(one, cfg.taus))
    return LadderStudy(scheme, rows)


def _write_series(out: Path, name: str, taus: np.ndarray, values: np.ndarray) -> None:
    path = out / f"series_{name}.dat"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n# tau {name}\n")
        for t, v in zip(taus, values):
            fh.write(f"{_fmt(t)} {_fmt(v)}\n")


_GNUPLOT_STUB = """# gnuplot script stub for the emitted two-column series
set logscale xy
set xlabel 'tau'
set key left top
plot \\
"""


def _write_plots(out: Path, series_names: list[str]) -> None:
    lines = [_GNUPLOT_STUB]
    parts = [f"  'series_{n}.dat' using 1:2 with linespoints title '{n}'" for n in series_names]
    lines.append(", \\\n".join(parts) + "\n")
    with open(out / "plots.gp", "w", encoding="utf-8") as fh:
        fh.writelines(lines)


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: ExperimentConfig, out: Path, seed: int, quiet: bool, jobs: int = 1) -> int:
    _, problem = build_problem(cfg)
    tau = cfg.taus[0]
    grid = TimeGrid(cfg.t_final, round(cfg.t_final / tau))
    try:
        traj = run_rothe(problem, grid, cfg.scheme, cfg.solver_options())
    except StepFailureError as exc:
        dim, dim_u = problem.space.dim, problem.space.dim_u
        header = (
            ["t"]
            + [f"u{i}" for i in range(dim)]
            + [f"xi{i}" for i in range(dim_u)]
            + ["residual"]
        )
        rows = []
        if exc.partial_u is not None:
            for n in range(exc.partial_u.shape[0]):
                xi = exc.partial_xi[n - 1] if n >= 1 else np.zeros(dim_u)
                res = exc.partial_residuals[n - 1] if n >= 1 else 0.0
                rows.append([n * grid.tau, *exc.partial_u[n], *xi, res])
        _write_csv(out / "trajectory.csv.partial", header, rows)
        _write_summary(out, [("run", False, f"step {exc.step} failed")])
        if not quiet:
            print(f"run failed at step {exc.step}", file=sys.stderr)
        return 1
    header, rows = _trajectory_rows(traj)
    _write_csv(out / "trajectory.csv", header, rows)
    rep = estimate_report(traj, problem.space, problem.boundary.weights)
    _write_csv(out / "estimates.csv", list(_ESTIMATE_COLS), [_estimate_row(tau, rep)])
    worst = float(np.max(traj.per_step_residuals, initial=0.0))
    _write_summary(out, [("run", True, f"worst step residual {worst:.3e}")])
    if not quiet:
        print(f"run ok: {grid.N} steps, worst residual {worst:.3e}, output in {out}")
    return 0


def cmd_study(cfg: ExperimentConfig, out: Path, seed: int, quiet: bool, jobs: int = 1) -> int:
    _, problem = build_problem(cfg)
    try:
        reference = reference_solution(problem, cfg.t_final, cfg.reference_tau())
        study = _ladder(problem, cfg, cfg.scheme, reference, jobs)
    except StepFailureError as exc:
        _write_summary(out, [("study", False, f"step {exc.step} failed")])
        return 1
    taus = study.taus()
    _write_csv(
        out / "ladder.csv",
        list(_ESTIMATE_COLS),
        [_estimate_row(r.tau, r.report) for r in study.rows],
    )
    _write_csv(
        out / "errors.csv",
        ["scheme", "tau", "error_at_T"],
        [[cfg.scheme, r.tau, r.error_at_T] for r in study.rows],
    )
    order = study.fitted_order()
    _write_csv(out / "orders.csv", ["scheme", "fitted_order"], [[cfg.scheme, order]])
    series = ["error_at_T", "u1_u0_gap", "gap_quadrature", *QUANTITY_FIELDS]
    for name in series:
        _write_series(out, name, taus, study.series(name))
    _write_plots(out, series)
    _write_summary(out, [("study", True, f"fitted order {order:.3f}")])
    if not quiet:
        print(f"study ok: fitted order {order:.3f}, output in {out}")
    return 0


def cmd_compare(cfg: ExperimentConfig, out: Path, seed: int, quiet: bool, jobs: int = 1) -> int:
    _, problem = build_problem(cfg)
    tau_ref = cfg.reference_tau()
    opts = SolveOptions(tol=1e-12)
    try:
        ref_two = reference_solution(problem, cfg.t_final, tau_ref)
        n_ref = round(cfg.t_final / tau_ref)
        ref_one = run_rothe(problem, TimeGrid(cfg.t_final, n_ref), BACKWARD_EULER, opts)
        studies = {
            scheme: _ladder(problem, cfg, scheme, ref_two, jobs)
            for scheme in (BDF2, BACKWARD_EULER)
        }
    except StepFailureError as exc:
        _write_summary(out, [("compare", False, f"step {exc.step} failed")])
        return 1
    err_rows = []
    order_rows = []
    for scheme, study in studies.items():
        errs_one = [
            problem.space.h_norm(r.trajectory.u[-1] - ref_one.u[-1]) for r in study.rows
        ]
        for r, e1 in zip(study.rows, errs_one):
            err_rows.append([scheme, r.tau, r.error_at_T, e1])
        taus = study.taus()
        order_two = study.fitted_order()
        order_one = float(np.polyfit(np.log(taus), np.log(errs_one), 1)[0])
        order_rows.append([scheme, order_two, order_one])
        _write_series(out, f"error_{scheme}", taus, study.series("error_at_T"))
    _write_csv(
        out / "errors.csv",
        ["scheme", "tau", "error_vs_two_step_ref", "error_vs_one_step_ref"],
        err_rows,
    )
    _write_csv(
        out / "orders.csv",
        ["scheme", "order_vs_two_step_ref", "order_vs_one_step_ref"],
        order_rows,
    )
    _write_plots(out, [f"error_{s}" for s in studies])
    detail = "; ".join(f"{r[0]}: {r[1]:.2f}" for r in order_rows)
    _write_summary(out, [("compare", True, detail)])
    if not quiet:
        print(f"compare ok: {detail}; output in {out}")
    return 0


def _fuzz_identities(rng: np.random.Generator, n_fuzz: int) -> tuple[float, float]:
    """Largest relative identity gap and most negative relative slack over
    random triples in random SPD inner products, dims 1..8."""
    worst_gap = 0.0
    worst_slack = 0.0
    for _ in range(n_fuzz):
        dim = int(rng.integers(1, 9))
        b_mat = rng.normal(size=(dim, dim))
        gram_h = b_mat @ b_mat.T + 0.1 * np.eye(dim)
        space = GalerkinSpace(
            gram_h=gram_h,
            gram_v=gram_h + np.eye(dim),
            trace=np.eye(1, dim),
            gram_u=np.eye(1),
        )
        a, b, c = rng.normal(size=(3, dim)) * rng.choice([0.1, 1.0, 10.0])
        scale = 1.0 + sum(space.h_norm(v) ** 2 for v in (a, b, c))
        worst_gap = max(worst_gap, bdf2_identity_gap(a, b, c, space) / scale)
        worst_slack = min(worst_slack, bdf2_inequality_slack(a, b, c, space) / scale)
    return worst_gap, worst_slack


def cmd_check(cfg: ExperimentConfig, out: Path, seed: int, quiet: bool, jobs: int = 1) -> int:
    rng = np.random.default_rng(seed)
    _, problem = build_problem(cfg)
    space, op = problem.space, problem.operator
    rows: list[tuple[str, bool, str]] = []

    scales = 10.0 ** rng.uniform(-1, 2, cfg.n_samples)
    samples = [rng.normal(size=space.dim) * s for s in scales]
    rep_a = check_hypotheses_A(space, op, samples)
    rows.append(
        (
            "operator_bounds",
            rep_a.passed,
            f"growth slack {rep_a.growth_worst_slack:.3e}, "
            f"coercivity slack {rep_a.coercivity_worst_slack:.3e}",
        )
    )

    growth_targets = {
        "configured": problem.boundary.potential,
        "paper_exponential": PaperExponential(cfg.potential_d),
        "nonconvex_piecewise": NonconvexPiecewise(
            cfg.ncvx_jump, cfg.ncvx_drop_slope, cfg.ncvx_drop_width, cfg.ncvx_tail_slope
        ),
    }
    s_samples = rng.uniform(-50.0, 50.0, 10_000)
    for name, pot in growth_targets.items():
        rep_g = check_growth(pot, s_samples, problem.boundary.weights)
        rows.append(
            (
                f"growth_{name}",
                rep_g.passed,
                f"worst margin {rep_g.worst_margin:.3e}, lifted d {rep_g.lifted_d:.6g}",
            )
        )

    coerc_samples = [rng.normal(size=space.dim) * s for s in 10.0 ** rng.uniform(-1, 2, 200)]
    for tau in cfg.coercivity_taus:
        rep_c = check_step_coercivity(space, op, problem.boundary, tau, coerc_samples)
        rows.append(
            (
                f"coercivity_tau_{tau:g}",
                rep_c.passed,
                f"c1(one-step) {rep_c.t1.c1:.4g}, c1(two-step) {rep_c.t2.c1:.4g}",
            )
        )

    gap, slack = _fuzz_identities(rng, cfg.n_fuzz)
    rows.append(("identity_fuzz", gap <= 1e-12, f"worst relative gap {gap:.3e}"))
    rows.append(("inequality_fuzz", slack >= -1e-12, f"worst relative slack {slack:.3e}"))

    _write_csv(
        out / "checks.csv",
        ["name", "status", "detail"],
        [[n, "PASS" if ok else "FAIL", d] for n, ok, d in rows],
    )
    _write_summary(out, rows)
    ok = all(r[1] for r in rows)
    if not quiet:
        for name, good, detail in rows:
            print(f"{'PASS' if good else 'FAIL'}  {name}: {detail}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------


_COMMANDS = {"run": cmd_run, "study": cmd_study, "compare": cmd_compare, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rothe-hvi",
        description="two-step implicit time stepping with set-valued boundary flux laws",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config_path", nargs="?", default=None, help="config file")
        sp.add_argument("--config", dest="config_flag", default=None, help="config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    path = args.config_flag or args.config_path
    if not path or (args.config_flag and args.config_path):
        print("error: provide exactly one config file (positional or --config)", file=sys.stderr)
        return 2
    if not os.path.exists(path):
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _resolve_out(args.out, cfg)
    out.mkdir(parents=True, exist_ok=True)
    return _COMMANDS[args.command](cfg, out, args.seed, args.quiet, max(1, args.jobs))


if __name__ == "__main__":
    raise SystemExit(main())
