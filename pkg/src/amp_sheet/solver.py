"""Galerkin pseudospectral time integration.

The state (phi, phi_t) is advanced with the classical fourth-order
Runge-Kutta scheme on the modes |k| <= N (the Galerkin cutoff); the
nonlinearity is evaluated pseudospectrally on a padded grid and projected
back.  Two right-hand sides are provided: the full quadratically nonlinear
equation, and its linearization around a prescribed time-dependent base
profile with an optional forcing term.

Both solvers return the trajectory together with a monitor dictionary
holding the node times, the pointwise minimum of the stability
coefficient mu - 2 (H phi)_x, and any flags raised.  The nonlinear solver
truncates the run when the coefficient drops below delta/2 or the state
blows up; the linearized solver records the base coefficient but only
aborts on blow-up, since ill-posed constant-coefficient runs (mu < 0) are
a legitimate diagnostic and are merely flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import (
    FieldSeries,
    Lifting,
    Trajectory,
    apply_linearized_operator,
    quadratic_rhs,
    stability_coefficient,
)
from .spectral import SpectralField, TorusGrid, derivative, zeros

BLOW_UP_THRESHOLD = 1e12


class CflError(RuntimeError):
    """The requested time step exceeds the advective stability limit."""


@dataclass(frozen=True)
class SimConfig:
    """Discretization and problem parameters shared by the solvers."""

    mu: float
    delta: float
    grid_n: int = 64
    galerkin_N: int = 21
    dt: float = 1e-3
    t_final: float = 1.0
    gamma: float = 1.0
    dealias: bool = True
    cfl_safety: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.grid_n < 4 or self.grid_n % 2:
            raise ValueError("grid_n must be even and at least 4")
        if not 1 <= self.galerkin_N <= self.grid_n // 2 - 1:
            raise ValueError("galerkin_N must lie in [1, grid_n/2 - 1]")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def num_steps(self):
        m_real = self.t_final / self.dt
        m = int(round(m_real))
        if m < 1 or abs(m_real - m) > 1e-8 * max(1.0, m):
            raise ValueError("t_final must be an integer multiple of dt")
        return m

    def cfl_limit(self, sup_c2):
        """Largest admissible dt for wave speed sqrt(max(1, sup c^2))."""
        return self.cfl_safety / (self.galerkin_N * math.sqrt(max(1.0, sup_c2)))


def _band_mask(grid, cutoff):
    return (np.abs(grid.modes) <= cutoff).astype(float)


def _lagrange_weights(nodes, t):
    w = np.ones(len(nodes))
    for j, tj in enumerate(nodes):
        for m, tm in enumerate(nodes):
            if m != j:
                w[j] *= (t - tm) / (tj - tm)
    return w


class _SeriesEvaluator:
    """Piecewise cubic (4-point Lagrange) interpolation of a field series.

    Exact at the sample times; O(h^4) between them, matching the
    integrator's order so interpolated forcing does not degrade it.
    """

    def __init__(self, times, fields):
        self.times = np.asarray(times, float)
        self.grid = fields[0].grid
        self.rows = np.vstack([f.coeffs for f in fields])
        self.real = all(f.real_flag for f in fields)

    def __call__(self, t):
        ts = self.times
        n = ts.size
        if n == 1:
            return SpectralField(self.grid, self.rows[0], self.real)
        i = int(np.searchsorted(ts, t)) - 1
        width = min(4, n)
        j0 = min(max(i - 1, 0), n - width)
        sel = slice(j0, j0 + width)
        w = _lagrange_weights(ts[sel], t)
        return SpectralField(self.grid, w @ self.rows[sel], self.real)


def field_evaluator(source, grid, t_final=None):
    """Coerce a base/forcing description into a callable t -> SpectralField.

    Accepts None (zero field), a SpectralField (frozen in time), a Lifting
    (analytic evaluation), a Trajectory or FieldSeries (cubic interpolation;
    must cover [0, t_final] when a horizon is given), or any callable.
    """
    if source is None:
        z = zeros(grid)
        return lambda t: z
    if isinstance(source, SpectralField):
        if source.grid.n != grid.n:
            raise ValueError("field grid does not match the solver grid")
        return lambda t: source
    if isinstance(source, Lifting):
        if source.data.grid.n != grid.n:
            raise ValueError("lifting grid does not match the solver grid")
        return lambda t: source.at(t)[0]
    if isinstance(source, (Trajectory, FieldSeries)):
        fields = source.phis if isinstance(source, Trajectory) else source.fields
        if fields[0].grid.n != grid.n:
            raise ValueError("series grid does not match the solver grid")
        times = source.times
        if t_final is not None and (times[0] > 1e-9 or times[-1] < t_final - 1e-9):
            raise ValueError(
                f"series covers [{times[0]:.6g}, {times[-1]:.6g}] "
                f"but the solve needs [0, {t_final:.6g}]"
            )
        return _SeriesEvaluator(times, fields)
    if callable(source):
        def wrapped(t):
            f = source(t)
            if not isinstance(f, SpectralField) or f.grid.n != grid.n:
                raise TypeError("base/forcing callable must return a field on the solver grid")
            return f
        return wrapped
    raise TypeError(f"cannot interpret {type(source).__name__} as a field source")


@dataclass(frozen=True)
class StepState:
    """The pair (phi, phi_t) as coefficient vectors at one instant."""

    phi_hat: np.ndarray
    phit_hat: np.ndarray


def semidiscrete_rhs_nonlinear(state, cfg):
    """Galerkin right-hand side of the nonlinear system.

    Returns the state derivative (phi_t, P_N[mu phi_xx + N(phi)]); the
    input is projected to the cutoff first so out-of-band junk cannot
    leak through the product terms.
    """
    grid = TorusGrid(cfg.grid_n)
    mask = _band_mask(grid, cfg.galerkin_N)
    phi = SpectralField(grid, mask * np.asarray(state.phi_hat, complex), True)
    out = cfg.mu * derivative(phi, 2) + quadratic_rhs(phi, cfg.dealias)
    return StepState(mask * np.asarray(state.phit_hat, complex), mask * out.coeffs)


def semidiscrete_rhs_linearized(state, phi0_at_t, g_at_t, cfg):
    """Galerkin right-hand side of the linearization at the frozen base
    phi0_at_t with forcing g_at_t, both fields at a single instant."""
    grid = TorusGrid(cfg.grid_n)
    mask = _band_mask(grid, cfg.galerkin_N)
    phi = SpectralField(grid, mask * np.asarray(state.phi_hat, complex), True)
    out = apply_linearized_operator(phi0_at_t, phi, cfg.mu, cfg.dealias) + g_at_t
    return StepState(mask * np.asarray(state.phit_hat, complex), mask * out.coeffs)


def rk4_step(t, dt, phi, phit, accel, a1=None):
    """One classical RK4 step of phi_tt = accel(t, phi).

    `accel` maps (t, phi_hat) to phi_tt_hat; the velocity equation is
    structural.  `a1` may pass in a precomputed accel(t, phi).
    """
    if a1 is None:
        a1 = accel(t, phi)
    v2 = phit + 0.5 * dt * a1
    a2 = accel(t + 0.5 * dt, phi + 0.5 * dt * phit)
    v3 = phit + 0.5 * dt * a2
    a3 = accel(t + 0.5 * dt, phi + 0.5 * dt * v2)
    v4 = phit + dt * a3
    a4 = accel(t + dt, phi + dt * v3)
    phi_new = phi + (dt / 6.0) * (phit + 2.0 * v2 + 2.0 * v3 + v4)
    phit_new = phit + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return phi_new, phit_new


def _march(cfg, grid, accel, phi, phit, stability_source, abort_on_stability):
    """Shared stepping loop.  Returns (Trajectory, monitor).

    `stability_source(t, phi_hat)` supplies the field whose coefficient
    mu - 2 (H .)_x is monitored: the state itself for the nonlinear
    equation, the base profile for the linearized one.
    """
    mask = _band_mask(grid, cfg.galerkin_N)
    i0 = grid.n // 2 - 1  # band index of the k = 0 mode
    m = cfg.num_steps()
    times = np.arange(m + 1) * cfg.dt
    phi = mask * np.asarray(phi, complex)
    phit = mask * np.asarray(phit, complex)

    flags = []
    if cfg.mu <= 0:
        flags.append({"type": "elliptic_regime", "time": 0.0})

    phis, phits, phitts, stab = [], [], [], []
    kept = 0
    for i, t in enumerate(times):
        t = float(t)
        mon = stability_source(t, phi)
        vals, mn = stability_coefficient(mon, cfg.mu)
        a1 = accel(t, phi)
        phis.append(SpectralField(grid, phi, True))
        phits.append(SpectralField(grid, phit, True))
        # store the projected acceleration so the recorded second
        # derivative is exactly the Galerkin right-hand side at the node
        phitts.append(SpectralField(grid, mask * a1, True))
        stab.append(mn)
        kept = i + 1

        amp = max(np.max(np.abs(phi)), np.max(np.abs(phit)))
        if not np.isfinite(amp) or amp > BLOW_UP_THRESHOLD:
            flags.append({"type": "blow_up", "time": t})
            break
        if abort_on_stability and mn < 0.5 * cfg.delta:
            flags.append({"type": "stability_below_half_delta", "time": t})
            break
        if i == m:
            break

        limit = cfg.cfl_limit(float(np.max(vals)))
        if cfg.dt > limit * (1.0 + 1e-12):
            raise CflError(
                f"dt = {cfg.dt:.6g} exceeds the CFL limit {limit:.6g} "
                f"at t = {t:.6g} (N = {cfg.galerkin_N})"
            )
        phi, phit = rk4_step(t, cfg.dt, phi, phit, accel, a1)
        phi = mask * phi
        phit = mask * phit
        phi[i0] = 0.0
        phit[i0] = 0.0

    traj = Trajectory(times[:kept], phis, phits, phitts)
    monitor = {
        "t_grid": times[:kept],
        "min_stability_coeff": np.array(stab),
        "flags": flags,
    }
    return traj, monitor


def solve_nonlinear(cfg, data):
    """Integrate phi_tt = mu phi_xx + N(phi) from the given Cauchy data.

    The data must satisfy the stability margin mu - 2 (H phi0)_x >= delta;
    the monitor then tracks the coefficient along the flow and the run is
    truncated (flagged, not raised) if it ever falls below delta/2.
    """
    grid = TorusGrid(cfg.grid_n)
    if data.grid.n != cfg.grid_n:
        raise ValueError("data grid does not match the configured grid")
    _, mn = stability_coefficient(data.phi0, cfg.mu)
    if mn < cfg.delta - 1e-12:
        raise ValueError(
            f"initial data violates the stability margin: min {mn:.6g} < delta {cfg.delta:.6g}"
        )

    def accel(t, phi_hat):
        f = SpectralField(grid, phi_hat, True)
        out = cfg.mu * derivative(f, 2) + quadratic_rhs(f, cfg.dealias)
        return out.coeffs

    def monitor_field(t, phi_hat):
        return SpectralField(grid, phi_hat, True)

    return _march(
        cfg, grid, accel, data.phi0.coeffs, data.phi1.coeffs,
        monitor_field, abort_on_stability=True,
    )


def solve_linearized(cfg, base=None, forcing=None, initial_state=None):
    """Integrate the linearization around `base` with forcing `forcing`.

    phi'_tt = (mu - 2 p0_x) phi'_xx + lower-order terms + g, p0 = H[base].
    `base` and `forcing` accept anything field_evaluator understands.  The
    solve starts from rest unless `initial_state` (CauchyData) is given.
    """
    grid = TorusGrid(cfg.grid_n)
    base_eval = field_evaluator(base, grid, cfg.t_final)
    g_eval = field_evaluator(forcing, grid, cfg.t_final)

    if initial_state is None:
        phi0 = np.zeros(grid.n - 1, complex)
        phi1 = np.zeros(grid.n - 1, complex)
    else:
        if initial_state.grid.n != cfg.grid_n:
            raise ValueError("initial state grid does not match the configured grid")
        phi0 = initial_state.phi0.coeffs
        phi1 = initial_state.phi1.coeffs

    def accel(t, phi_hat):
        f = SpectralField(grid, phi_hat, True)
        out = apply_linearized_operator(base_eval(t), f, cfg.mu, cfg.dealias) + g_eval(t)
        return out.coeffs

    def monitor_field(t, phi_hat):
        return base_eval(t)

    return _march(cfg, grid, accel, phi0, phi1, monitor_field, abort_on_stability=False)


def measure_mode_growth(traj, modes):
    """Least-squares exponential growth rate of |phi_hat(k, t)| per mode.

    The fit uses the second half of the trajectory (transients from mixed
    initial data decay in relative weight there) and drops samples below
    1e-14 of the peak; a mode with fewer than two usable samples gets NaN.
    """
    ts = traj.times
    half = len(ts) // 2
    rates = {}
    for k in modes:
        amps = np.array([abs(f.coeff(k)) for f in traj.phis])[half:]
        tt = ts[half:]
        if amps.size < 2 or np.max(amps) <= 0.0:
            rates[k] = float("nan")
            continue
        keep = amps > 1e-14 * max(1.0, float(np.max(amps)))
        if np.count_nonzero(keep) < 2:
            rates[k] = float("nan")
            continue
        slope = np.polyfit(tt[keep], np.log(amps[keep]), 1)[0]
        rates[k] = float(slope)
    return rates
