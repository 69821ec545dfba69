"""Affine information-signal design.

Chooses per-path affine signals u_j = a_j x_j + b_j together with a target
free-flow equilibrium x* that minimize

    sum_j f_j(x*_j) τ_j(x*_j)  +  γ sum_j ∫ (a_j y + b_j - τ_j(y))² dy

subject to the signal being admissible (existence condition, slope box
|a_j| <= 2 μ_m / (λ η)) and x* actually being the equilibrium induced by the
signal.  The equilibrium constraint is eliminated exactly: given a target
x* on the flow slice sum_j f_j(x*_j) = λ and slopes a, inverting the logit
choice map pins b up to one scalar shift, and that shift is resolved in
closed form by minimizing the credibility penalty.  The remaining smooth
problem in (x*, a) is minimized by multistart Nelder-Mead with ramped
penalty weights on the admissibility constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .logit import softmax
from .network import Network, Path
from .signals import AffineSignal, ConditionReport, check_class_U
from .equilibrium import EquilibriumResult, solve_free_flow

__all__ = [
    "DesignProblem",
    "DesignResult",
    "DesignError",
    "TargetInversion",
    "GammaPoint",
    "credibility_penalty",
    "credibility_penalty_quadrature",
    "feasible_b_from_target",
    "optimize",
    "gamma_sweep",
    "format_design_result",
]


class DesignError(RuntimeError):
    """No feasible design found; carries the least-infeasible candidate."""

    def __init__(self, message: str, best_params: np.ndarray, violation: float):
        super().__init__(f"{message} (smallest constraint violation {violation:.3e})")
        self.best_params = best_params
        self.violation = violation


def credibility_penalty(path: Path, a: float, b: float) -> float:
    """Squared deviation of the affine signal from the BPR time, integrated
    over the free-flow region: ∫₀^x̄ (a y + b - τ(y))² dy, in closed form.

    With τ(y) = t0 + k (y/x̄)^δ, k = t0 θ, the integrand expands into powers
    of y with elementary antiderivatives for any δ > 0.
    """
    xb = path.critical_density
    t0, th, d = path.free_flow_time, path.bpr_theta, path.bpr_delta
    k = t0 * th
    c0 = b - t0
    poly = a**2 * xb**3 / 3.0 + a * c0 * xb**2 + c0**2 * xb
    cross = -2.0 * k * (a * xb**2 / (d + 2.0) + c0 * xb / (d + 1.0))
    square = k**2 * xb / (2.0 * d + 1.0)
    return float(poly + cross + square)


def credibility_penalty_quadrature(path: Path, a: float, b: float, n: int = 32) -> float:
    """Gauss-Legendre cross-check for :func:`credibility_penalty`."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    xb = path.critical_density
    y = 0.5 * xb * (nodes + 1.0)
    integrand = (a * y + b - path.travel_time(y)) ** 2
    return float(0.5 * xb * np.sum(weights * integrand))


def _credibility_vec(network: Network, a: np.ndarray, b: np.ndarray) -> float:
    xb = network.critical_density_vec
    t0 = network.free_flow_time_vec
    th = np.array([p.bpr_theta for p in network.paths])
    d = np.array([p.bpr_delta for p in network.paths])
    k = t0 * th
    c0 = b - t0
    poly = a**2 * xb**3 / 3.0 + a * c0 * xb**2 + c0**2 * xb
    cross = -2.0 * k * (a * xb**2 / (d + 2.0) + c0 * xb / (d + 1.0))
    square = k**2 * xb / (2.0 * d + 1.0)
    return float(np.sum(poly + cross + square))


def _optimal_shift(network: Network, a: np.ndarray, v: np.ndarray) -> float:
    """Shift c minimizing total credibility of b = v + c (quadratic in c),
    floored so the signal stays nonnegative on the free-flow region."""
    xb = network.critical_density_vec
    t0 = network.free_flow_time_vec
    th = np.array([p.bpr_theta for p in network.paths])
    d = np.array([p.bpr_delta for p in network.paths])
    tau_integral = t0 * xb * (1.0 + th / (d + 1.0))
    c_opt = float(np.sum(tau_integral - v * xb - a * xb**2 / 2.0) / np.sum(xb))
    c_floor = float(-np.min(np.minimum(v, v + a * xb)))
    return max(c_opt, c_floor)


@dataclass(frozen=True)
class TargetInversion:
    """Offsets recovered from a target equilibrium, with the shift used and
    flags for paths whose target flow had to be floored."""

    b: np.ndarray
    shift: float
    floored: np.ndarray
    flow_sum_gap: float


def feasible_b_from_target(
    network: Network,
    eta: float,
    x_star: np.ndarray,
    a: np.ndarray,
    shift: float | None = None,
    flow_floor_rel: float = 1e-6,
    flow_sum_tol: float = 1e-2,
) -> TargetInversion:
    """Offsets b making x_star the equilibrium of the signal A x + b.

    Inverts the logit choice map at the target: u_j(x*_j) must equal
    -(1/η) log(f_j(x*_j)/λ) up to one common shift, hence
    b_j = u_j(x*_j) - a_j x*_j.  When ``shift`` is None it is chosen to
    minimize the total credibility penalty (closed form, see
    :func:`_optimal_shift`).

    Target flows are floored at ``flow_floor_rel * λ`` (exact zeros would
    require vanishing choice shares, which the logit map cannot produce) and
    renormalized onto the flow slice; floored paths are flagged.  Raises
    ValueError if η <= 0 or the target flows miss the inflow by more than
    ``flow_sum_tol`` relative.
    """
    if eta <= 0:
        raise ValueError("softmax inversion needs eta > 0")
    lam = network.inflow
    x_star = np.asarray(x_star, dtype=float)
    a = np.asarray(a, dtype=float)
    q = network.outflow(x_star)
    gap = abs(float(q.sum()) - lam) / lam
    if gap > flow_sum_tol:
        raise ValueError(
            f"target flows sum to {q.sum():.6g}, inflow is {lam:.6g}: "
            "no routing shares can realize this equilibrium"
        )
    floor = flow_floor_rel * lam
    floored = q < floor
    q = np.maximum(q, floor)
    shares = q / q.sum()
    v = -np.log(shares) / eta - a * x_star
    c = _optimal_shift(network, a, v) if shift is None else float(shift)
    return TargetInversion(b=v + c, shift=c, floored=floored, flow_sum_gap=gap)


@dataclass(frozen=True)
class DesignProblem:
    """Instance data and solver options for the signal design."""

    network: Network
    eta: float
    gamma: float
    n_starts: int = 20
    max_evals: int = 5000
    seed: int = 0
    slope_bound: float | None = None
    flow_floor_rel: float = 1e-6
    penalty_weights: tuple[float, ...] = (1e2, 1e4, 1e6)

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("design needs eta > 0 (uniform routing ignores the signal)")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.n_starts < 1 or self.max_evals < 10:
            raise ValueError("need at least one start and a sensible eval budget")
        if self.slope_bound is None:
            bound = 2.0 * self.network.monotonicity_modulus() / (
                self.network.inflow * self.eta
            )
            object.__setattr__(self, "slope_bound", bound)


@dataclass(frozen=True)
class DesignResult:
    """Optimized affine signal with its target equilibrium and certificates."""

    a: np.ndarray
    b: np.ndarray
    x_star: np.ndarray
    r_star: np.ndarray
    objective: float
    efficiency_term: float
    credibility_term: float
    gamma: float
    condition_report: ConditionReport = field(repr=False)
    equilibrium_residual: float
    n_feasible_starts: int

    @property
    def signal(self) -> AffineSignal:
        return AffineSignal(a=tuple(self.a), b=tuple(self.b))


class _Objective:
    """Reduced objective in z = (routing logits s, slopes a)."""

    def __init__(self, problem: DesignProblem):
        net = problem.network
        self.net = net
        self.eta = problem.eta
        self.gamma = problem.gamma
        self.lam = net.inflow
        self.fbar = net.critical_flow_vec
        self.xbar = net.critical_density_vec
        self.floor = problem.flow_floor_rel * self.lam
        self.a_max = problem.slope_bound
        self.p = net.n_paths

    def split(self, z: np.ndarray):
        s = z[: self.p]
        a = np.clip(z[self.p :], -self.a_max, self.a_max)
        return s, a

    def assemble(self, z: np.ndarray):
        """Candidate (x*, a, b, flows) from raw parameters."""
        s, a = self.split(z)
        w = np.exp(s - s.max())
        w /= w.sum()
        q = np.clip(self.lam * w, self.floor, self.fbar * (1.0 - 1e-12))
        q = self.lam * q / q.sum()  # back onto the flow slice after clipping
        q = np.minimum(q, self.fbar)
        x_star = self.net.inverse_outflow(q)
        v = -np.log(q / q.sum()) / self.eta - a * x_star
        c = _optimal_shift(self.net, a, v)
        return x_star, a, v + c, q

    def terms(self, z: np.ndarray):
        x_star, a, b, q = self.assemble(z)
        eff = float(np.sum(q * self.net.travel_times(x_star)))
        cred = _credibility_vec(self.net, a, b)
        return x_star, a, b, q, eff, cred

    def constraint_violation(self, a: np.ndarray, b: np.ndarray) -> float:
        """Total violation of existence, nonnegativity and cap constraints."""
        end = a * self.xbar + b
        lower = np.minimum(b, end)
        upper = np.maximum(b, end)
        spread = upper[None, :] - lower[:, None]
        vals = self.fbar * np.exp(-self.eta * spread).sum(axis=1)
        exist = float(np.maximum(0.0, self.lam - vals).sum())
        nonneg = float(np.maximum(0.0, -lower).sum())
        return exist + nonneg

    def penalized(self, z: np.ndarray, weight: float) -> float:
        _, a, b, _, eff, cred = self.terms(z)
        return eff + self.gamma * cred + weight * self.constraint_violation(a, b)


def _initial_points(obj: _Objective, problem: DesignProblem, warm: list[np.ndarray]):
    rng = np.random.default_rng(problem.seed)
    points = list(warm)
    shares = obj.fbar / obj.fbar.sum()
    points.append(np.concatenate([np.log(shares), np.zeros(obj.p)]))
    while len(points) < problem.n_starts:
        points.append(
            np.concatenate(
                [
                    rng.normal(0.0, 1.0, obj.p),
                    rng.uniform(-obj.a_max, obj.a_max, obj.p),
                ]
            )
        )
    return points[: max(problem.n_starts, len(warm) + 1)]


def optimize(problem: DesignProblem) -> DesignResult:
    """Multistart Nelder-Mead minimization of the reduced design objective.

    Every start is refined through the ramped penalty weights; candidates are
    screened for admissibility (existence passes, slope condition passes or
    sits on the boundary, equilibrium round-trip residual small) and the best
    feasible one wins.  Raises :class:`DesignError` when no start produces a
    feasible candidate.
    """
    result, _ = _optimize_raw(problem)
    return result


def _optimize_raw(
    problem: DesignProblem, warm_starts: list[np.ndarray] | None = None
) -> tuple[DesignResult, np.ndarray]:
    obj = _Objective(problem)
    starts = _initial_points(obj, problem, warm_starts or [])
    evals_per_round = max(100, problem.max_evals // len(problem.penalty_weights))

    best = None
    least_violation = (np.inf, None)
    n_feasible = 0
    for z0 in starts:
        z = np.asarray(z0, dtype=float)
        for weight in problem.penalty_weights:
            res = minimize(
                obj.penalized,
                z,
                args=(weight,),
                method="Nelder-Mead",
                options={
                    "maxfev": evals_per_round,
                    "xatol": 1e-10,
                    "fatol": 1e-12,
                    "adaptive": True,
                },
            )
            z = res.x
        x_star, a, b, q, eff, cred = obj.terms(z)
        violation = obj.constraint_violation(a, b)
        if violation < least_violation[0]:
            least_violation = (violation, z.copy())
        if violation > 1e-9 or np.any(b < 0):
            continue
        signal = AffineSignal(a=tuple(a), b=tuple(np.maximum(b, 0.0)))
        report = check_class_U(signal, problem.network, problem.eta)
        if report.verdict == "out":
            continue
        residual = float(
            np.linalg.norm(
                q - problem.network.inflow * softmax(signal.evaluate(x_star), problem.eta)
            )
        )
        if residual > 1e-6:
            continue
        n_feasible += 1
        value = eff + problem.gamma * cred
        if best is None or value < best[0]:
            best = (value, x_star, a, b, eff, cred, report, z.copy())

    if best is None:
        raise DesignError(
            "no admissible design found", least_violation[1], least_violation[0]
        )

    value, x_star, a, b, eff, cred, report, z = best
    signal = AffineSignal(a=tuple(a), b=tuple(b))
    solved = solve_free_flow(problem.network, signal, problem.eta)
    result = DesignResult(
        a=a,
        b=b,
        x_star=x_star,
        r_star=solved.r,
        objective=value,
        efficiency_term=eff,
        credibility_term=cred,
        gamma=problem.gamma,
        condition_report=report,
        equilibrium_residual=solved.residual,
        n_feasible_starts=n_feasible,
    )
    return result, z


@dataclass(frozen=True)
class GammaPoint:
    """One point of a credibility-weight sweep."""

    gamma: float
    result: DesignResult
    equilibrium: EquilibriumResult
    total_travel_time: float
    credibility_error: float


def gamma_sweep(problem: DesignProblem, gammas) -> list[GammaPoint]:
    """Re-run the design for each γ, warm-starting from the previous winner.

    After the per-γ runs, every winner is re-scored under every other γ
    (admissibility does not depend on γ) and each point adopts the best
    candidate for its own weight.  Selecting from a shared candidate pool
    makes the efficiency and credibility-penalty terms provably monotone in
    γ across the sweep.  Reports, per γ, the total travel time at the solved
    equilibrium of the designed signal and the credibility error
    ‖τ(x_eq) - u(x_eq)‖ there.
    """
    gammas = [float(g) for g in gammas]
    candidates: list[tuple[DesignResult, np.ndarray]] = []
    warm: list[np.ndarray] = []
    for gamma in gammas:
        sub = replace(problem, gamma=gamma)
        result, z = _optimize_raw(sub, warm_starts=warm)
        warm = [z]
        candidates.append((result, z))

    points = []
    for gamma in gammas:
        best = min(
            (c for c, _ in candidates),
            key=lambda c: c.efficiency_term + gamma * c.credibility_term,
        )
        result = replace(
            best,
            gamma=gamma,
            objective=best.efficiency_term + gamma * best.credibility_term,
        )
        signal = result.signal
        eq = solve_free_flow(problem.network, signal, problem.eta)
        tt = problem.network.total_travel_time(eq.x)
        err = float(
            np.linalg.norm(problem.network.travel_times(eq.x) - signal.evaluate(eq.x))
        )
        points.append(
            GammaPoint(
                gamma=gamma,
                result=result,
                equilibrium=eq,
                total_travel_time=tt,
                credibility_error=err,
            )
        )
    return points


def format_design_result(result: DesignResult) -> str:
    """Key-value text block with the designed parameters and certificates."""
    rep = result.condition_report
    lines = [
        f"gamma = {result.gamma:.6g}",
        f"objective = {result.objective:.12g}",
        f"efficiency_term = {result.efficiency_term:.12g}",
        f"credibility_term = {result.credibility_term:.12g}",
        "a = " + ", ".join(f"{v:.12g}" for v in result.a),
        "b = " + ", ".join(f"{v:.12g}" for v in result.b),
        "x_star = " + ", ".join(f"{v:.12g}" for v in result.x_star),
        "r_star = " + ", ".join(f"{v:.12g}" for v in result.r_star),
        f"equilibrium_residual = {result.equilibrium_residual:.6g}",
        f"class_verdict = {rep.verdict}",
        "existence_margins = " + ", ".join(f"{v:.6g}" for v in rep.existence.margins),
        f"slope_bound_used = {rep.uniqueness.lipschitz_max:.6g}",
        f"slope_bound_threshold = {rep.uniqueness.threshold:.6g}",
        f"n_feasible_starts = {result.n_feasible_starts}",
    ]
    return "\n".join(lines) + "\n"
