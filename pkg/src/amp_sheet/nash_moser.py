"""Smoothed Newton iteration for the full nonlinear problem.

The solve is organized around the lifting: for Cauchy data (phi0, phi1) a
compactly supported approximate solution phi^a is built analytically, and
the equation for the correction u = phi - phi^a reads

    L[u] := u_tt - mu u_xx - (N(phi^a + u) - N(phi^a)) = F^a,

with F^a the lifting forcing (supported in t >= 0, vanishing again beyond
the ramp).  Each sweep solves the linearization of L at the current
iterate for a correction v, then applies a frequency cutoff S_theta before
accepting it, with theta growing geometrically so the mollification
disappears in the limit.  The loss of derivatives of the linearized solve
(solution order 7 against forcing order 9 in the underlying estimates) is
what the smoothing compensates; the iteration itself only ever sees the
discrete trajectories.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .operators import (
    FieldSeries,
    Trajectory,
    build_lifting,
    lifting_forcing,
    quadratic_rhs,
    stability_coefficient,
)
from .solver import SimConfig, field_evaluator, solve_linearized
from .spectral import SpectralField, TorusGrid, derivative, zeros
from .analysis import WeightedNormSpec, xm_norm, ym_norm

__all__ = [
    "IterationConfig",
    "IterationReport",
    "IterationDiverged",
    "IterationAborted",
    "smooth_cutoff",
    "iterate",
    "iterate_auto",
]

#: Sobolev orders of the solution and forcing spaces in the underlying
#: quantitative scheme; recorded in every report for downstream tooling.
SOLUTION_SPACE_ORDER = 7
FORCING_SPACE_ORDER = 9


class IterationDiverged(RuntimeError):
    """Residual norms rose three sweeps in a row.  Carries the partial
    report as .report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class IterationAborted(RuntimeError):
    """The working profile lost the stability margin delta/2.  Carries the
    partial report as .report."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class IterationConfig:
    """Knobs of the smoothed Newton solve.

    theta0 is the initial cutoff frequency and theta_growth the geometric
    ratio; residual_tol is the target for the forcing-space (H^2 weighted)
    norm of the residual.
    """

    sim: SimConfig
    theta0: float = 4.0
    theta_growth: float = 1.5
    max_iters: int = 20
    residual_tol: float = 1e-8

    def __post_init__(self):
        if self.theta0 < 1.0:
            raise ValueError("theta0 must be at least 1")
        if not 1.0 < self.theta_growth <= 4.0:
            raise ValueError("theta_growth must lie in (1, 4]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")


@dataclass
class IterationReport:
    """Per-sweep diagnostics of one smoothed Newton run.

    residual_norms has one entry per residual evaluation; the correction
    and theta lists have one entry per accepted correction (one fewer on a
    converged run).
    """

    residual_norms: list = field(default_factory=list)
    correction_norms: list = field(default_factory=list)
    stability_mins: list = field(default_factory=list)
    theta_values: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        import json

        return json.dumps(
            {
                "residual_norms": [float(x) for x in self.residual_norms],
                "correction_norms": [float(x) for x in self.correction_norms],
                "stability_mins": [float(x) for x in self.stability_mins],
                "theta_values": [float(x) for x in self.theta_values],
                "converged": self.converged,
                "iterations": self.iterations,
                "metadata": self.metadata,
            },
            sort_keys=True,
            default=float,
        )


def _cut_field(f, theta):
    coeffs = f.coeffs.copy()
    coeffs[np.abs(f.grid.modes) > theta] = 0.0
    return SpectralField(f.grid, coeffs, f.real_flag)


def smooth_cutoff(obj, theta):
    """Frequency truncation S_theta: modes with |k| > theta are dropped.

    Acts on a single field, a FieldSeries, or a whole Trajectory (the
    second-derivative record included).  On the analytic scale this family
    satisfies ||S_theta f - f||_{H^m} <= theta^{m-s} ||f||_{H^s} for
    m <= s with constant one, which is the only property the iteration
    uses.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    if isinstance(obj, SpectralField):
        return _cut_field(obj, theta)
    if isinstance(obj, FieldSeries):
        return FieldSeries(obj.times, [_cut_field(f, theta) for f in obj.fields])
    if isinstance(obj, Trajectory):
        phitts = None
        if obj.phitts is not None:
            phitts = [_cut_field(f, theta) for f in obj.phitts]
        return Trajectory(
            obj.times,
            [_cut_field(f, theta) for f in obj.phis],
            [_cut_field(f, theta) for f in obj.phits],
            phitts,
        )
    raise TypeError(f"cannot apply the cutoff to {type(obj).__name__}")


def _metadata(cfg):
    sim = cfg.sim
    return {
        "solution_space_order": SOLUTION_SPACE_ORDER,
        "forcing_space_order": FORCING_SPACE_ORDER,
        "mu": sim.mu,
        "delta": sim.delta,
        "gamma": sim.gamma,
        "grid_n": sim.grid_n,
        "galerkin_N": sim.galerkin_N,
        "dt": sim.dt,
        "t_final": sim.t_final,
        "theta0": cfg.theta0,
        "theta_growth": cfg.theta_growth,
        "residual_tol": cfg.residual_tol,
    }


def iterate(cfg, data):
    """Run the smoothed Newton solve from the given Cauchy data.

    Returns (trajectory, report) where the trajectory is phi^a + u on the
    solver mesh.  Raises IterationDiverged after three consecutive
    residual increases and IterationAborted if the stability coefficient
    of the working profile falls below delta/2; a run that merely exhausts
    max_iters comes back with report.converged False.
    """
    sim = cfg.sim
    grid = TorusGrid(sim.grid_n)
    if data.grid.n != grid.n:
        raise ValueError("data grid does not match the configured grid")

    lift = build_lifting(data, sim.mu, sim.delta)
    steps = sim.num_steps()
    times = np.arange(steps + 1) * sim.dt
    lift_states = [lift.at(float(t)) for t in times]
    forcing_a = lifting_forcing(lift, sim.mu, times)

    z = zeros(grid)
    u_phis = [z] * len(times)
    u_phits = [z] * len(times)
    u_phitts = [z] * len(times)

    spec = WeightedNormSpec(sim.gamma)
    theta = cfg.theta0
    report = IterationReport(metadata=_metadata(cfg))

    for _ in range(cfg.max_iters + 1):
        # residual of L[u] = F^a and stability of phi^a + u, node by node
        r_fields = []
        stab_min = np.inf
        for i in range(len(times)):
            phi_a = lift_states[i][0]
            phi_tot = phi_a + u_phis[i]
            _, mn = stability_coefficient(phi_tot, sim.mu)
            stab_min = min(stab_min, mn)
            nonlin = quadratic_rhs(phi_tot, sim.dealias) - quadratic_rhs(
                phi_a, sim.dealias
            )
            applied = u_phitts[i] - sim.mu * derivative(u_phis[i], 2) - nonlin
            r_fields.append(forcing_a.fields[i] - applied)
        r_series = FieldSeries(times, r_fields)
        r_norm = ym_norm(r_series, spec, 2)
        report.residual_norms.append(float(r_norm))
        report.stability_mins.append(float(stab_min))

        if stab_min < 0.5 * sim.delta:
            raise IterationAborted(
                f"stability coefficient fell to {stab_min:.6g} "
                f"(threshold {0.5 * sim.delta:.6g})",
                report,
            )
        if r_norm < cfg.residual_tol:
            report.converged = True
            break
        rs = report.residual_norms
        if len(rs) >= 4 and rs[-1] > rs[-2] > rs[-3] > rs[-4]:
            raise IterationDiverged(
                f"residual rose three sweeps in a row ({rs[-4]:.3e} -> {rs[-1]:.3e})",
                report,
            )
        if len(report.correction_norms) >= cfg.max_iters:
            break

        # linearize at phi^a + u and solve for the correction
        u_traj = Trajectory(times, u_phis, u_phits, u_phitts)
        u_eval = field_evaluator(u_traj, grid, sim.t_final)

        def base_profile(t, _u_eval=u_eval):
            return lift.at(t)[0] + _u_eval(t)

        v_traj, _ = solve_linearized(sim, base=base_profile, forcing=r_series)
        v_cut = smooth_cutoff(v_traj, theta)
        report.correction_norms.append(float(xm_norm(v_traj, spec, 2)["total"]))
        report.theta_values.append(float(theta))

        u_phis = [a + b for a, b in zip(u_phis, v_cut.phis)]
        u_phits = [a + b for a, b in zip(u_phits, v_cut.phits)]
        u_phitts = [a + b for a, b in zip(u_phitts, v_cut.phitts)]
        theta *= cfg.theta_growth

    report.iterations = len(report.correction_norms)
    traj = Trajectory(
        times,
        [s[0] + u for s, u in zip(lift_states, u_phis)],
        [s[1] + u for s, u in zip(lift_states, u_phits)],
        [s[2] + u for s, u in zip(lift_states, u_phitts)],
    )
    return traj, report


def iterate_auto(cfg, data, max_halvings=6):
    """iterate with automatic horizon reduction.

    On divergence the time horizon is halved (keeping the node count an
    integer by adjusting dt with it) and the solve restarted, up to
    max_halvings times; the last IterationDiverged is re-raised if none of
    the shorter horizons settles.
    """
    current = cfg
    last = None
    for _ in range(max_halvings + 1):
        try:
            return iterate(current, data)
        except IterationDiverged as exc:
            last = exc
            sim = current.sim
            steps = max(2, sim.num_steps() // 2)
            half = sim.t_final / 2.0
            current = replace(current, sim=replace(sim, t_final=half, dt=half / steps))
    raise last
