"""Joint density-routing dynamics: integration, invariance checks, Lyapunov
diagnostics.

The state couples per-path densities x with routing shares r on the simplex:

    dx/dt = -f(x) + λ r
    dr/dt = -r + σ(u(x))

where f is the per-path outflow, u the information signal and σ the logit
choice map.  Trajectories are integrated with fixed-step classical
Runge-Kutta; the routing rows of the field sum to zero analytically, so any
simplex drift beyond roundoff is renormalized away and reported rather than
silently accumulated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logit import softmax
from .network import Network
from .signals import InformationSignal

__all__ = [
    "SystemState",
    "Trajectory",
    "InvarianceReport",
    "DivergenceError",
    "rhs",
    "integrate",
    "integrate_batch",
    "check_invariance",
    "lyapunov",
    "lyapunov_along",
    "lyapunov_weight",
    "centroid_state",
    "sample_invariant_set",
    "write_trajectory_csv",
]

_SIMPLEX_TOL = 1e-9
_DRIFT_FIX = 1e-12


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, time: float):
        super().__init__(f"non-finite state at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True)
class SystemState:
    """Point (x, r) in density space x routing simplex."""

    x: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)
        if x.shape != r.shape or x.ndim != 1:
            raise ValueError("x and r must be 1-d arrays of equal length")
        if np.any(x < 0):
            raise ValueError(f"negative densities: {x!r}")
        if np.any(r < -_SIMPLEX_TOL) or abs(r.sum() - 1.0) > _SIMPLEX_TOL:
            raise ValueError(f"routing shares off the simplex: {r!r}")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the joint dynamics.

    ``x`` and ``r`` have one row per sample; ``lyapunov`` is filled when the
    integration was given an equilibrium reference.  ``max_simplex_drift`` is
    the largest |sum(r) - 1| seen before renormalization.
    """

    times: np.ndarray
    x: np.ndarray
    r: np.ndarray
    lyapunov: np.ndarray | None = None
    max_simplex_drift: float = 0.0

    def __post_init__(self):
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if len(self.times) != len(self.x) or len(self.times) != len(self.r):
            raise ValueError("sample counts disagree")

    @property
    def final_state(self) -> SystemState:
        return SystemState(x=self.x[-1], r=self.r[-1])


def rhs(
    state: SystemState,
    network: Network,
    signal: InformationSignal,
    eta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Field (dx/dt, dr/dt) at one state; the dr components sum to zero."""
    dx = -network.outflow(state.x) + network.inflow * state.r
    dr = -state.r + softmax(signal.evaluate(state.x), eta)
    return dx, dr


def _make_field(network: Network, signal: InformationSignal, eta: float):
    lam = network.inflow

    def field(x: np.ndarray, r: np.ndarray):
        return (
            lam * r - network.outflow(x),
            softmax(signal.evaluate(x), eta) - r,
        )

    return field


def _rk4_core(field, x, r, dt, n_steps, record, settle_tol=None, check_every=25):
    """Fixed-step RK4 on batched (x, r) arrays of shape (..., p).

    Returns stacked histories when ``record`` is true, otherwise the final
    state, along with the largest simplex drift seen and the number of steps
    taken.  With ``settle_tol`` set, the loop stops once every batch row has
    field norm at or below the tolerance.
    """
    xs = [x.copy()] if record else None
    rs = [r.copy()] if record else None
    max_drift = 0.0
    n_done = 0
    for k in range(n_steps):
        k1x, k1r = field(x, r)
        k2x, k2r = field(x + (dt / 2) * k1x, r + (dt / 2) * k1r)
        k3x, k3r = field(x + (dt / 2) * k2x, r + (dt / 2) * k2r)
        k4x, k4r = field(x + dt * k3x, r + dt * k3r)
        x = x + (dt / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
        r = r + (dt / 6) * (k1r + 2 * k2r + 2 * k3r + k4r)
        total = r.sum(axis=-1, keepdims=True)
        drift = float(np.max(np.abs(total - 1.0)))
        if drift > max_drift:
            max_drift = drift
        if drift > _DRIFT_FIX:
            r = np.clip(r, 0.0, None)
            r = r / r.sum(axis=-1, keepdims=True)
        # densities can graze zero from below by roundoff only
        x = np.maximum(x, 0.0)
        if record:
            xs.append(x.copy())
            rs.append(r.copy())
        n_done = k + 1
        if (k + 1) % check_every == 0 or k + 1 == n_steps:
            if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
                raise DivergenceError((k + 1) * dt)
            if settle_tol is not None:
                fx, fr = field(x, r)
                norms = np.sqrt((fx**2).sum(axis=-1) + (fr**2).sum(axis=-1))
                if np.all(norms <= settle_tol):
                    break
    if record:
        return np.array(xs), np.array(rs), max_drift, n_done
    return x, r, max_drift, n_done


def integrate(
    initial: SystemState,
    network: Network,
    signal: InformationSignal,
    eta: float,
    t_end: float = 50.0,
    dt: float = 0.01,
    reference: SystemState | None = None,
) -> Trajectory:
    """Integrate the joint dynamics from ``initial`` with fixed-step RK4.

    Records every step.  When ``reference`` (an equilibrium) is given, the
    quadratic Lyapunov value is evaluated along the trajectory.  Raises
    :class:`DivergenceError` if the state leaves the finite range.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    n_steps = int(round(t_end / dt))
    field = _make_field(network, signal, eta)
    xs, rs, drift, n_done = _rk4_core(
        field, initial.x.copy(), initial.r.copy(), dt, n_steps, record=True
    )
    times = np.arange(n_done + 1) * dt
    traj = Trajectory(times=times, x=xs, r=rs, max_simplex_drift=drift)
    if reference is not None:
        traj = Trajectory(
            times=traj.times,
            x=traj.x,
            r=traj.r,
            lyapunov=lyapunov_along(traj, reference, network),
            max_simplex_drift=drift,
        )
    return traj


def integrate_batch(
    initials: list[SystemState],
    network: Network,
    signal: InformationSignal,
    eta: float,
    t_end: float = 50.0,
    dt: float = 0.01,
    reference: SystemState | None = None,
) -> list[Trajectory]:
    """Integrate many trajectories of one scenario in a single vectorized run.

    All initial states share the network, signal and η, so the RK4 stages are
    evaluated on a stacked (n, p) state; results match per-trajectory calls
    to :func:`integrate` to floating-point accuracy.
    """
    if not initials:
        return []
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    x0 = np.stack([s.x for s in initials])
    r0 = np.stack([s.r for s in initials])
    n_steps = int(round(t_end / dt))
    field = _make_field(network, signal, eta)
    xs, rs, drift, n_done = _rk4_core(field, x0, r0, dt, n_steps, record=True)
    times = np.arange(n_done + 1) * dt
    out = []
    for i in range(len(initials)):
        traj = Trajectory(times=times, x=xs[:, i], r=rs[:, i], max_simplex_drift=drift)
        if reference is not None:
            traj = Trajectory(
                times=times,
                x=traj.x,
                r=traj.r,
                lyapunov=lyapunov_along(traj, reference, network),
                max_simplex_drift=drift,
            )
        out.append(traj)
    return out


@dataclass(frozen=True)
class InvarianceReport:
    """Where (if anywhere) a trajectory left the invariant box."""

    ok: bool
    n_violations: int
    first_violation_time: float | None
    max_density_excess: float
    max_routing_excess: float


def check_invariance(
    trajectory: Trajectory, network: Network, tol: float = 1e-6
) -> InvarianceReport:
    """Flag samples exceeding x̄ in density or f̄/λ in routing share.

    For a trajectory started inside the invariant set under a signal that
    passes the existence condition, no flags are expected; out-of-class
    signals may produce violations and those are reported, not raised.
    """
    x_excess = trajectory.x - network.critical_density_vec
    r_excess = trajectory.r - network.routing_cap_vec()
    bad = (x_excess > tol).any(axis=1) | (r_excess > tol).any(axis=1)
    n_bad = int(bad.sum())
    first_time = float(trajectory.times[bad.argmax()]) if n_bad else None
    return InvarianceReport(
        ok=n_bad == 0,
        n_violations=n_bad,
        first_violation_time=first_time,
        max_density_excess=float(x_excess.max()),
        max_routing_excess=float(r_excess.max()),
    )


def lyapunov_weight(network: Network) -> float:
    """Density weight α = μ_m / λ² that maximizes the certified decay margin."""
    return network.monotonicity_modulus() / network.inflow**2


def lyapunov(state: SystemState, reference: SystemState, network: Network) -> float:
    """Quadratic Lyapunov value (α/2)‖x - x_eq‖² + (1/2)‖r - r_eq‖²."""
    alpha = lyapunov_weight(network)
    dx = state.x - reference.x
    dr = state.r - reference.r
    return float(0.5 * alpha * dx @ dx + 0.5 * dr @ dr)


def lyapunov_along(
    trajectory: Trajectory, reference: SystemState, network: Network
) -> np.ndarray:
    """Lyapunov value at every sample of a trajectory."""
    alpha = lyapunov_weight(network)
    dx = trajectory.x - reference.x
    dr = trajectory.r - reference.r
    return 0.5 * alpha * (dx**2).sum(axis=1) + 0.5 * (dr**2).sum(axis=1)


def centroid_state(network: Network) -> SystemState:
    """Deterministic interior point of the invariant set.

    Density at half the critical densities; routing shares proportional to
    the critical flows, which keeps every share strictly below its cap
    whenever the caps sum to more than one.
    """
    caps = network.routing_cap_vec()
    return SystemState(x=network.critical_density_vec / 2.0, r=caps / caps.sum())


def sample_invariant_set(
    network: Network, n: int, rng: np.random.Generator
) -> list[SystemState]:
    """Draw ``n`` states uniformly from the invariant box-and-simplex set.

    Routing shares are rejection-sampled from the uniform simplex against the
    per-path caps; if a draw keeps failing (tight caps), it is shrunk toward
    the interior centroid until it fits.
    """
    caps = network.routing_cap_vec()
    if caps.sum() < 1.0:
        raise ValueError("invariant routing set is empty: critical flows sum below inflow")
    center = centroid_state(network).r
    p = network.n_paths
    states = []
    for _ in range(n):
        x = rng.uniform(0.0, network.critical_density_vec)
        r = None
        for _ in range(200):
            cand = rng.dirichlet(np.ones(p))
            if np.all(cand <= caps):
                r = cand
                break
        if r is None:
            cand = rng.dirichlet(np.ones(p))
            # shrink toward the interior point until inside the caps
            for t in np.linspace(1.0, 0.0, 21):
                mix = t * cand + (1.0 - t) * center
                if np.all(mix <= caps):
                    r = mix
                    break
        states.append(SystemState(x=x, r=r))
    return states


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    """Write samples as CSV: t, x_1..x_p, r_1..r_p, V (V empty when absent)."""
    p = trajectory.x.shape[1]
    header = (
        ["t"]
        + [f"x_{j + 1}" for j in range(p)]
        + [f"r_{j + 1}" for j in range(p)]
        + ["V"]
    )
    v = trajectory.lyapunov
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i, t in enumerate(trajectory.times):
            row = [f"{t:.10g}"]
            row += [f"{val:.12g}" for val in trajectory.x[i]]
            row += [f"{val:.12g}" for val in trajectory.r[i]]
            row.append("" if v is None else f"{v[i]:.12g}")
            fh.write(",".join(row) + "\n")
