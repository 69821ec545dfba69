"""Density-dependent information signals and the admissibility checks that
certify a unique, stable free-flow equilibrium.

A signal maps per-path densities to nonnegative per-path values announced to
drivers.  Signals are admissible ("in class") when they satisfy two
conditions against a given network and responsiveness η:

* existence: λ <= f̄_j exp(η u̲_j) Σ_i exp(-η ū_i) for every path j, where
  u̲/ū bound the signal over the free-flow region;
* uniqueness/stability: the largest signal slope ℓ_M stays strictly below
  2 μ_m / (λ η).

The second inequality is strict; signals sitting exactly on it are reported
with a separate "boundary" status instead of pass/fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .network import Network

__all__ = [
    "InformationSignal",
    "AffineSignal",
    "TravelTimeSignal",
    "CustomSignal",
    "SignalBounds",
    "ExistenceReport",
    "UniquenessReport",
    "ConditionReport",
    "check_existence",
    "check_necessity",
    "check_uniqueness_stability",
    "check_class_U",
]

_BOUNDS_GRID = 1000


class InformationSignal:
    """Base class: per-path signal u_j depending on that path's density only."""

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Signal values at densities ``x`` (paths on the last axis)."""
        raise NotImplementedError

    def bounds(self, network: Network) -> "SignalBounds":
        """Lower/upper signal bounds and slope bounds over the free-flow region."""
        raise NotImplementedError


def _check_density_domain(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError(f"negative density: {x!r}")
    return x


@dataclass(frozen=True)
class AffineSignal(InformationSignal):
    """Affine signal u_j(x_j) = a_j x_j + b_j.

    Offsets must be nonnegative (signals are nonnegative information); the
    density-dependent part of the nonnegativity requirement, a_j x̄_j + b_j
    >= 0, is checked against the network in :meth:`bounds`.
    """

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if len(a) != len(b):
            raise ValueError("a and b must have the same length")
        if any(not np.isfinite(v) for v in a + b):
            raise ValueError("affine coefficients must be finite")
        if any(v < 0 for v in b):
            raise ValueError("offsets b must be nonnegative")
        object.__setattr__(self, "_a_arr", np.array(a))
        object.__setattr__(self, "_b_arr", np.array(b))

    @property
    def a_vec(self) -> np.ndarray:
        return self._a_arr

    @property
    def b_vec(self) -> np.ndarray:
        return self._b_arr

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = _check_density_domain(x)
        return self.a_vec * x + self.b_vec

    def bounds(self, network: Network) -> "SignalBounds":
        a, b = self.a_vec, self.b_vec
        if len(self.a) != network.n_paths:
            raise ValueError("signal and network path counts differ")
        end = a * network.critical_density_vec + b
        lower = np.minimum(b, end)
        upper = np.maximum(b, end)
        if np.any(lower < 0):
            raise ValueError(f"signal is negative on the free-flow region: {lower!r}")
        return SignalBounds(lower=lower, upper=upper, deriv_bound=np.abs(a))


@dataclass(frozen=True)
class TravelTimeSignal(InformationSignal):
    """True travel-time information u_j = τ_j (the BPR time of the network)."""

    network: Network

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.network.travel_times(_check_density_domain(x))

    def bounds(self, network: Network) -> "SignalBounds":
        t0 = network.free_flow_time_vec
        theta = np.array([p.bpr_theta for p in network.paths])
        deltas = np.array([p.bpr_delta for p in network.paths])
        upper = t0 * (1.0 + theta)
        # BPR slope peaks at the critical density for delta >= 1; below 1 the
        # slope blows up at zero density and no finite bound exists.
        slope = np.where(
            deltas >= 1.0,
            t0 * theta * deltas / network.critical_density_vec,
            np.inf,
        )
        return SignalBounds(lower=t0.copy(), upper=upper, deriv_bound=slope)


@dataclass(frozen=True)
class CustomSignal(InformationSignal):
    """Per-path scalar functions with declared slope bounds.

    The declared bounds are not trusted: :meth:`bounds` verifies them against
    finite differences on a grid and raises if the sampled slope exceeds the
    declaration.
    """

    functions: tuple[Callable[[np.ndarray], np.ndarray], ...]
    deriv_bounds: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        db = tuple(float(v) for v in np.atleast_1d(self.deriv_bounds))
        object.__setattr__(self, "deriv_bounds", db)
        if len(self.functions) != len(db):
            raise ValueError("one derivative bound per path function required")
        if any(v < 0 for v in db):
            raise ValueError("derivative bounds must be nonnegative")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = _check_density_domain(x)
        out = np.empty_like(x)
        for j, fn in enumerate(self.functions):
            out[..., j] = fn(x[..., j])
        return out

    def bounds(self, network: Network) -> "SignalBounds":
        if len(self.functions) != network.n_paths:
            raise ValueError("signal and network path counts differ")
        lower = np.empty(network.n_paths)
        upper = np.empty(network.n_paths)
        for j, fn in enumerate(self.functions):
            grid = np.linspace(0.0, network.critical_density_vec[j], _BOUNDS_GRID)
            vals = np.asarray(fn(grid), dtype=float)
            lower[j], upper[j] = vals.min(), vals.max()
            slopes = np.abs(np.diff(vals) / np.diff(grid))
            if slopes.max() > self.deriv_bounds[j] + 1e-6:
                raise ValueError(
                    f"path {j}: sampled slope {slopes.max():.6g} exceeds "
                    f"declared bound {self.deriv_bounds[j]:.6g}"
                )
        if lower.min() < 0:
            raise ValueError(f"signal is negative on the free-flow region: {lower!r}")
        return SignalBounds(lower=lower, upper=upper, deriv_bound=np.array(self.deriv_bounds))


@dataclass(frozen=True)
class SignalBounds:
    """Per-path infima/suprema of a signal over the free-flow region plus
    slope bounds."""

    lower: np.ndarray
    upper: np.ndarray
    deriv_bound: np.ndarray

    def __post_init__(self):
        if np.any(self.lower > self.upper + 1e-12):
            raise ValueError("lower bounds exceed upper bounds")

    @property
    def deriv_bound_max(self) -> float:
        """Largest per-path slope bound, the ℓ_M of the uniqueness condition."""
        return float(self.deriv_bound.max())


@dataclass(frozen=True)
class ExistenceReport:
    """Per-path comparison of the inflow against the existence bound.

    ``log_values`` holds log(f̄_j) + logsumexp(-η (ū_i - u̲_j)); ``values``
    is its exponential (may overflow to inf, which simply passes).  The check
    is performed in log space.
    """

    values: np.ndarray
    log_values: np.ndarray
    inflow: float

    @property
    def margins(self) -> np.ndarray:
        return self.values - self.inflow

    @property
    def ok(self) -> bool:
        return bool(np.all(np.log(self.inflow) <= self.log_values))


@dataclass(frozen=True)
class UniquenessReport:
    """Slope bound ℓ_M against the strict threshold 2 μ_m / (λ η)."""

    lipschitz_max: float
    threshold: float

    _BOUNDARY_RTOL = 1e-12

    @property
    def slack(self) -> float:
        return self.threshold - self.lipschitz_max

    @property
    def status(self) -> str:
        """"pass", "boundary" (ℓ_M equals the threshold) or "fail"."""
        if np.isinf(self.threshold):
            return "pass"
        scale = max(1.0, abs(self.threshold))
        if abs(self.lipschitz_max - self.threshold) <= self._BOUNDARY_RTOL * scale:
            return "boundary"
        return "pass" if self.lipschitz_max < self.threshold else "fail"

    @property
    def ok(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class ConditionReport:
    """Joint admissibility report for a signal on a network at a given η."""

    existence: ExistenceReport
    necessity: ExistenceReport
    uniqueness: UniquenessReport
    bounds: SignalBounds = field(repr=False)

    @property
    def existence_ok(self) -> bool:
        return self.existence.ok

    @property
    def necessity_ok(self) -> bool:
        return self.necessity.ok

    @property
    def uniqueness_stability_ok(self) -> bool:
        return self.uniqueness.ok

    @property
    def in_class_U(self) -> bool:
        return self.existence_ok and self.uniqueness_stability_ok

    @property
    def verdict(self) -> str:
        """"in", "boundary" (derivative bound met with equality) or "out"."""
        if not self.existence_ok:
            return "out"
        status = self.uniqueness.status
        if status == "pass":
            return "in"
        return "boundary" if status == "boundary" else "out"


def check_existence(
    signal: InformationSignal, network: Network, eta: float
) -> ExistenceReport:
    """Sufficient condition for a free-flow equilibrium to exist.

    For each path j compares λ against f̄_j exp(η u̲_j) Σ_i exp(-η ū_i),
    evaluated in log space as log f̄_j + logsumexp(-η (ū_i - u̲_j)).
    """
    b = signal.bounds(network)
    return _existence_like(network, eta, lows=b.lower, highs=b.upper)


def check_necessity(
    signal: InformationSignal, network: Network, eta: float
) -> ExistenceReport:
    """Necessary condition (diagnostic): λ <= f̄_j exp(η ū_j) Σ_i exp(-η u̲_i).

    Weaker than the sufficient condition; anything passing
    :func:`check_existence` passes here.  The gap between the two closes as
    the spreads η (ū_i - u̲_j) shrink.
    """
    b = signal.bounds(network)
    return _existence_like(network, eta, lows=b.upper, highs=b.lower)


def _existence_like(network, eta, lows, highs) -> ExistenceReport:
    # log f̄_j + logsumexp_i(-eta * (highs_i - lows_j))
    spread = highs[None, :] - lows[:, None]
    log_values = np.log(network.critical_flow_vec) + logsumexp(-eta * spread, axis=1)
    with np.errstate(over="ignore"):
        values = np.exp(log_values)
    return ExistenceReport(values=values, log_values=log_values, inflow=network.inflow)


def check_uniqueness_stability(
    signal: InformationSignal, network: Network, eta: float
) -> UniquenessReport:
    """Strict slope condition ℓ_M < 2 μ_m / (λ η) for uniqueness and stability.

    Vacuous at η = 0 (uniform routing ignores the signal): the threshold is
    +inf and the check passes for any signal.
    """
    b = signal.bounds(network)
    if eta == 0.0:
        threshold = np.inf
    else:
        threshold = 2.0 * network.monotonicity_modulus() / (network.inflow * eta)
    return UniquenessReport(lipschitz_max=b.deriv_bound_max, threshold=threshold)


def check_class_U(
    signal: InformationSignal, network: Network, eta: float
) -> ConditionReport:
    """Combine the existence and uniqueness/stability checks into one report."""
    b = signal.bounds(network)
    existence = _existence_like(network, eta, lows=b.lower, highs=b.upper)
    necessity = _existence_like(network, eta, lows=b.upper, highs=b.lower)
    if eta == 0.0:
        threshold = np.inf
    else:
        threshold = 2.0 * network.monotonicity_modulus() / (network.inflow * eta)
    uniqueness = UniquenessReport(lipschitz_max=b.deriv_bound_max, threshold=threshold)
    return ConditionReport(
        existence=existence, necessity=necessity, uniqueness=uniqueness, bounds=b
    )
