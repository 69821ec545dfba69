"""Equilibrium computation for the coupled density-routing dynamics.

An equilibrium solves f(x) = λ σ(u(x)) with routing shares r = f(x)/λ.  The
free-flow solver iterates the self-map x -> f⁻¹(clamped λ σ(u(x))), which
stays inside the free-flow box by construction, and falls back to a damped
Newton iteration on the residual when the fixed point stalls.  Equilibria
with congested paths (outside the box, where the outflow is not invertible)
are found by long-horizon simulation instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dynamics import SystemState, _make_field, _rk4_core, centroid_state
from .logit import softmax, softmax_jacobian
from .network import Network
from .signals import AffineSignal, InformationSignal, TravelTimeSignal

__all__ = [
    "EquilibriumResult",
    "SolverError",
    "ProbeReport",
    "solve_free_flow",
    "solve_extended",
    "multistart_uniqueness_probe",
    "total_travel_time",
    "write_equilibrium_csv",
]

_RESIDUAL_TARGET = 1e-10
_RESIDUAL_ACCEPT = 1e-8
_MAX_FP_ITERATIONS = 10_000


class SolverError(RuntimeError):
    """Equilibrium solve failed; carries the best iterate and its residual."""

    def __init__(self, message: str, best_x: np.ndarray, residual: float):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.best_x = best_x
        self.residual = residual


@dataclass(frozen=True)
class EquilibriumResult:
    """Solved equilibrium with its residual certificate and regime labels."""

    x: np.ndarray
    r: np.ndarray
    residual: float
    regimes: tuple[str, ...]
    method: str
    converged: bool
    iterations: int

    @property
    def all_free_flow(self) -> bool:
        return all(reg == "free" for reg in self.regimes)

    @property
    def state(self) -> SystemState:
        # r = f(x)/lam sits off the simplex by up to sqrt(p) * residual;
        # normalize so the state always passes validation
        return SystemState(x=self.x, r=self.r / self.r.sum())


def _residual_vec(network: Network, signal: InformationSignal, eta: float, x: np.ndarray):
    return network.outflow(x) - network.inflow * softmax(signal.evaluate(x), eta)


def _regimes(network: Network, x: np.ndarray) -> tuple[str, ...]:
    return tuple(
        "congested" if xj > xbj else "free"
        for xj, xbj in zip(x, network.critical_density_vec)
    )


def _result(network, signal, eta, x, method, iterations, converged=True):
    g = _residual_vec(network, signal, eta, x)
    return EquilibriumResult(
        x=x,
        r=network.outflow(x) / network.inflow,
        residual=float(np.linalg.norm(g)),
        regimes=_regimes(network, x),
        method=method,
        converged=converged,
        iterations=iterations,
    )


def _signal_slope(signal: InformationSignal, network: Network, x: np.ndarray) -> np.ndarray:
    """Per-path du_j/dx_j, used only to assemble the Newton Jacobian."""
    if isinstance(signal, AffineSignal):
        return signal.a_vec.astype(float)
    if isinstance(signal, TravelTimeSignal):
        t0 = network.free_flow_time_vec
        xb = network.critical_density_vec
        theta = np.array([p.bpr_theta for p in network.paths])
        delta = np.array([p.bpr_delta for p in network.paths])
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = t0 * theta * delta * (x / xb) ** (delta - 1.0) / xb
        return np.where(np.isfinite(slope), slope, 0.0)
    h = 1e-6
    lo = np.maximum(x - h, 0.0)
    return (signal.evaluate(x + h) - signal.evaluate(lo)) / (x + h - lo)


def solve_free_flow(
    network: Network,
    signal: InformationSignal,
    eta: float,
    x0: np.ndarray | None = None,
    damping: float = 0.5,
    tol: float = _RESIDUAL_TARGET,
    max_iterations: int = _MAX_FP_ITERATIONS,
) -> EquilibriumResult:
    """Solve f(x) = λ σ(u(x)) on the free-flow box.

    Damped fixed-point iteration on x -> f⁻¹(λ σ(u(x))) starting from half
    the critical densities (the inner argument is clamped to [0, f̄] per
    path, so iterates never leave the box).  If the iteration stalls above
    the residual target, a damped Newton iteration on the residual polishes
    or replaces the iterate.  Raises :class:`SolverError` when even the
    fallback cannot reach the acceptance residual, e.g. when no free-flow
    equilibrium exists.
    """
    lam = network.inflow
    fbar = network.critical_flow_vec
    x = network.critical_density_vec / 2.0 if x0 is None else np.asarray(x0, dtype=float)
    best_x, best_res = x, np.inf
    for it in range(1, max_iterations + 1):
        q = np.clip(lam * softmax(signal.evaluate(x), eta), 0.0, fbar)
        x_next = (1.0 - damping) * x + damping * network.inverse_outflow(q)
        res = float(np.linalg.norm(_residual_vec(network, signal, eta, x_next)))
        if res < best_res:
            best_x, best_res = x_next, res
        step = float(np.max(np.abs(x_next - x))) / max(1.0, float(np.max(np.abs(x))))
        x = x_next
        if res <= tol:
            return _result(network, signal, eta, x, "fixed_point", it)
        if step <= 1e-14 and res > tol:
            break  # stalled; go straight to the fallback
    x, newton_iters = _newton_fallback(network, signal, eta, best_x)
    res = float(np.linalg.norm(_residual_vec(network, signal, eta, x)))
    if res <= _RESIDUAL_ACCEPT:
        return _result(network, signal, eta, x, "newton", max_iterations + newton_iters)
    if res > best_res:
        x, res = best_x, best_res
    raise SolverError("free-flow equilibrium solve did not converge", x, res)


def _newton_fallback(network, signal, eta, x0, max_iterations=200):
    lam = network.inflow
    xbar = network.critical_density_vec
    x = x0.copy()
    g = _residual_vec(network, signal, eta, x)
    for it in range(1, max_iterations + 1):
        norm_g = np.linalg.norm(g)
        if norm_g <= _RESIDUAL_TARGET:
            return x, it
        jac_sigma = softmax_jacobian(signal.evaluate(x), eta)
        jac = np.diag(network.outflow_slope(x)) - lam * jac_sigma * _signal_slope(
            signal, network, x
        )
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -g, rcond=None)[0]
        alpha = 1.0
        while alpha > 1e-8:
            x_try = np.clip(x + alpha * step, 0.0, xbar)
            g_try = _residual_vec(network, signal, eta, x_try)
            if np.linalg.norm(g_try) < norm_g:
                x, g = x_try, g_try
                break
            alpha /= 2.0
        else:
            return x, it  # no descent direction left
    return x, max_iterations


def solve_extended(
    network: Network,
    signal: InformationSignal,
    eta: float,
    t_end: float = 500.0,
    dt: float = 0.02,
    settle_tol: float = 1e-9,
    initial: SystemState | None = None,
) -> EquilibriumResult:
    """Find an equilibrium on the extended density domain by simulation.

    Integrates the joint dynamics until the field norm drops to
    ``settle_tol`` and classifies each path's regime; congested paths
    (density above critical) are reachable here because the outflow is
    evaluated, never inverted.  A run that does not settle by ``t_end``
    returns with ``converged=False`` and the final residual (possible
    oscillation), it does not raise.
    """
    state = centroid_state(network) if initial is None else initial
    field = _make_field(network, signal, eta)
    n_steps = int(round(t_end / dt))
    x, r, _, n_done = _rk4_core(
        field,
        state.x.copy(),
        state.r.copy(),
        dt,
        n_steps,
        record=False,
        settle_tol=settle_tol,
        check_every=10,
    )
    fx, fr = field(x, r)
    settled = float(np.sqrt((fx**2).sum() + (fr**2).sum())) <= settle_tol
    return _result(network, signal, eta, x, "simulation", n_done, converged=settled)


@dataclass(frozen=True)
class ProbeReport:
    """Spread of equilibria found from randomized starting points."""

    n_requested: int
    n_converged: int
    max_pairwise_distance: float
    solutions: tuple[np.ndarray, ...]

    @property
    def n_failed(self) -> int:
        return self.n_requested - self.n_converged


def multistart_uniqueness_probe(
    network: Network,
    signal: InformationSignal,
    eta: float,
    n_starts: int = 20,
    seed: int = 0,
) -> ProbeReport:
    """Solve from ``n_starts`` random free-flow starts and measure the spread.

    Under the strict slope condition the equilibrium is unique, so the
    maximum pairwise distance collapses to solver tolerance.  A large spread
    is evidence of multiple equilibria; a small one is not a proof, and
    non-convergent starts are excluded but counted.
    """
    rng = np.random.default_rng(seed)
    solutions = []
    for _ in range(n_starts):
        x0 = rng.uniform(0.0, network.critical_density_vec)
        try:
            res = solve_free_flow(network, signal, eta, x0=x0)
        except SolverError:
            continue
        solutions.append(res.x)
    max_dist = 0.0
    for xa, xb in combinations(solutions, 2):
        max_dist = max(max_dist, float(np.linalg.norm(xa - xb)))
    return ProbeReport(
        n_requested=n_starts,
        n_converged=len(solutions),
        max_pairwise_distance=max_dist,
        solutions=tuple(solutions),
    )


def total_travel_time(network: Network, x: np.ndarray) -> float:
    """Aggregate travel time sum_j f_j(x_j) τ_j(x_j) at densities ``x``."""
    return network.total_travel_time(x)


def write_equilibrium_csv(result: EquilibriumResult, network: Network, path) -> None:
    """Per-path equilibrium rows plus scalar rows for residual and total time."""
    flows = network.outflow(result.x)
    times = network.travel_times(result.x)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("path,x_eq,r_eq,regime,f,tau\n")
        for j in range(network.n_paths):
            fh.write(
                f"{j + 1},{result.x[j]:.12g},{result.r[j]:.12g},"
                f"{result.regimes[j]},{flows[j]:.12g},{times[j]:.12g}\n"
            )
        fh.write(f"residual,{result.residual:.6g},,,,\n")
        fh.write(f"total_travel_time,{network.total_travel_time(result.x):.12g},,,,\n")
