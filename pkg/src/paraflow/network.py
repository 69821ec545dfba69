"""Parallel-road network model: fundamental diagrams, paths, BPR travel times.

A network is a bundle of parallel paths between one origin-destination pair.
Each path carries a fundamental diagram (density -> outflow map), a critical
density/flow pair marking the edge of the free-flow regime, a strong
monotonicity modulus for the outflow on that regime, and BPR travel-time
parameters.

Density, flow and time units are whatever the caller uses, as long as they
are consistent across parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "FundamentalDiagram",
    "Greenshields",
    "Triangular",
    "ExponentialSaturation",
    "CappedLinear",
    "Path",
    "Network",
    "sampled_modulus",
]

_REL_TOL = 1e-12


class FundamentalDiagram:
    """Density -> outflow map, strictly increasing on the free-flow region.

    Subclasses define the map on the whole nonnegative axis; the free-flow
    region is [0, critical_density] and ``critical_flow`` is the flow at its
    right edge.  ``flow``, ``flow_slope`` and ``inverse_flow`` accept scalars
    or arrays.
    """

    kind: str = ""

    @property
    def critical_density(self) -> float:
        raise NotImplementedError

    @property
    def critical_flow(self) -> float:
        raise NotImplementedError

    @property
    def slope_infimum(self) -> float:
        """Infimum of the outflow slope over the free-flow region.

        The largest valid strong-monotonicity modulus; 0 for diagrams
        (Greenshields) whose slope vanishes at the critical density.
        """
        raise NotImplementedError

    def flow(self, x):
        raise NotImplementedError

    def flow_slope(self, x):
        raise NotImplementedError

    def inverse_flow(self, q):
        """Unique density in [0, critical_density] with flow(x) = q.

        Raises ValueError for q outside [0, critical_flow].
        """
        raise NotImplementedError

    def _check_flow_range(self, q):
        q = np.asarray(q, dtype=float)
        hi = self.critical_flow
        if np.any(q < 0.0) or np.any(q > hi * (1.0 + _REL_TOL)):
            raise ValueError(f"flow outside invertible range [0, {hi}]: {q!r}")
        return np.minimum(q, hi)


def _check_negative_density(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError(f"negative density: {x!r}")
    return x


@dataclass(frozen=True)
class Greenshields(FundamentalDiagram):
    """Parabolic diagram f(x) = (2 f̄/x̄) x (1 - x/(2 x̄)).

    Peaks at the critical density with value ``critical_flow``; beyond twice
    the critical density the parabola would turn negative, so the flow is
    clamped at zero there.
    """

    critical_density_: float
    critical_flow_: float
    kind: str = field(default="greenshields", init=False)

    def __post_init__(self):
        if self.critical_density_ <= 0 or self.critical_flow_ <= 0:
            raise ValueError("critical density and flow must be positive")

    @property
    def critical_density(self) -> float:
        return self.critical_density_

    @property
    def critical_flow(self) -> float:
        return self.critical_flow_

    @property
    def slope_infimum(self) -> float:
        return 0.0  # parabola is flat at the peak

    def flow(self, x):
        x = _check_negative_density(x)
        xb, fb = self.critical_density_, self.critical_flow_
        return np.maximum(0.0, (2.0 * fb / xb) * x * (1.0 - x / (2.0 * xb)))

    def flow_slope(self, x):
        x = np.asarray(x, dtype=float)
        xb, fb = self.critical_density_, self.critical_flow_
        return np.where(x <= 2.0 * xb, (2.0 * fb / xb) * (1.0 - x / xb), 0.0)

    def inverse_flow(self, q):
        q = self._check_flow_range(q)
        xb, fb = self.critical_density_, self.critical_flow_
        # smaller root of the parabola
        return xb * (1.0 - np.sqrt(np.maximum(0.0, 1.0 - q / fb)))


@dataclass(frozen=True)
class Triangular(FundamentalDiagram):
    """Daganzo triangular diagram min{(f̄/x̄) x, f̄ + w (x̄ - x)}, w > 0.

    Linear with slope f̄/x̄ up to the critical density, then decreasing at the
    congestion wave speed ``wave_speed``; clamped at zero where the congested
    branch would go negative.
    """

    critical_density_: float
    critical_flow_: float
    wave_speed: float
    kind: str = field(default="triangular", init=False)

    def __post_init__(self):
        if self.critical_density_ <= 0 or self.critical_flow_ <= 0:
            raise ValueError("critical density and flow must be positive")
        if self.wave_speed <= 0:
            raise ValueError("wave_speed must be positive")

    @property
    def critical_density(self) -> float:
        return self.critical_density_

    @property
    def critical_flow(self) -> float:
        return self.critical_flow_

    @property
    def slope_infimum(self) -> float:
        return self.critical_flow_ / self.critical_density_

    def flow(self, x):
        x = _check_negative_density(x)
        xb, fb = self.critical_density_, self.critical_flow_
        free = (fb / xb) * x
        congested = fb + self.wave_speed * (xb - x)
        return np.maximum(0.0, np.minimum(free, congested))

    def flow_slope(self, x):
        x = np.asarray(x, dtype=float)
        xb, fb = self.critical_density_, self.critical_flow_
        zero_at = xb + fb / self.wave_speed
        return np.where(x <= xb, fb / xb, np.where(x <= zero_at, -self.wave_speed, 0.0))

    def inverse_flow(self, q):
        q = self._check_flow_range(q)
        return q * self.critical_density_ / self.critical_flow_


@dataclass(frozen=True)
class ExponentialSaturation(FundamentalDiagram):
    """Saturating diagram f(x) = F (1 - exp(-θ x)) with asymptote F.

    The same formula extends past the critical density, so the critical flow
    F (1 - exp(-θ x̄)) is strictly below the asymptote ``scale_flow``.
    """

    scale_flow: float
    steepness: float
    critical_density_: float
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        if self.scale_flow <= 0 or self.critical_density_ <= 0:
            raise ValueError("scale flow and critical density must be positive")
        if self.steepness <= 0:
            raise ValueError("steepness must be positive")

    @property
    def critical_density(self) -> float:
        return self.critical_density_

    @property
    def critical_flow(self) -> float:
        return self.scale_flow * (1.0 - float(np.exp(-self.steepness * self.critical_density_)))

    @property
    def slope_infimum(self) -> float:
        return self.scale_flow * self.steepness * float(np.exp(-self.steepness * self.critical_density_))

    def flow(self, x):
        x = _check_negative_density(x)
        return self.scale_flow * -np.expm1(-self.steepness * x)

    def flow_slope(self, x):
        x = np.asarray(x, dtype=float)
        return self.scale_flow * self.steepness * np.exp(-self.steepness * x)

    def inverse_flow(self, q):
        q = self._check_flow_range(q)
        return -np.log1p(-q / self.scale_flow) / self.steepness


@dataclass(frozen=True)
class CappedLinear(FundamentalDiagram):
    """Capped-linear diagram f(x) = min{μ x, μ x̄}."""

    slope: float
    critical_density_: float
    kind: str = field(default="capped_linear", init=False)

    def __post_init__(self):
        if self.slope <= 0 or self.critical_density_ <= 0:
            raise ValueError("slope and critical density must be positive")

    @property
    def critical_density(self) -> float:
        return self.critical_density_

    @property
    def critical_flow(self) -> float:
        return self.slope * self.critical_density_

    @property
    def slope_infimum(self) -> float:
        return self.slope

    def flow(self, x):
        x = _check_negative_density(x)
        return np.minimum(self.slope * x, self.critical_flow)

    def flow_slope(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.critical_density_, self.slope, 0.0)

    def inverse_flow(self, q):
        q = self._check_flow_range(q)
        return q / self.slope


def sampled_modulus(diagram: FundamentalDiagram, n: int = 1000) -> float:
    """Estimate the strong-monotonicity modulus from sampled difference quotients.

    Minimizes (f(x) - f(x')) / (x - x') over adjacent points of an n-point
    grid on the free-flow region.  A result near zero flags a diagram that is
    strictly but not strongly monotone (e.g. Greenshields, whose slope
    vanishes at the critical density).
    """
    grid = np.linspace(0.0, diagram.critical_density, n)
    flows = diagram.flow(grid)
    quotients = np.diff(flows) / np.diff(grid)
    return float(quotients.min())


@dataclass(frozen=True)
class Path:
    """One road of the parallel network.

    Parameters
    ----------
    diagram:
        Fundamental diagram; supplies critical density/flow and the outflow.
    free_flow_time:
        BPR free-flow travel time t0 > 0.
    bpr_theta, bpr_delta:
        BPR shape parameters, both positive.  The customary defaults are
        0.15 and 4.
    modulus:
        Strong-monotonicity modulus of the outflow on the free-flow region.
        Defaults to the diagram's slope infimum; a declared value is verified
        against sampled difference quotients.
    """

    diagram: FundamentalDiagram
    free_flow_time: float
    bpr_theta: float = 0.15
    bpr_delta: float = 4.0
    modulus: float | None = None

    def __post_init__(self):
        if self.free_flow_time <= 0:
            raise ValueError("free_flow_time must be positive")
        if self.bpr_theta <= 0 or self.bpr_delta <= 0:
            raise ValueError("BPR theta and delta must be positive")
        if self.modulus is None:
            object.__setattr__(self, "modulus", self.diagram.slope_infimum)
        else:
            if self.modulus < 0:
                raise ValueError("modulus must be nonnegative")
            sampled = sampled_modulus(self.diagram, n=256)
            if self.modulus > sampled + 1e-9:
                raise ValueError(
                    f"declared modulus {self.modulus} exceeds sampled "
                    f"difference-quotient infimum {sampled}"
                )

    @property
    def critical_density(self) -> float:
        return self.diagram.critical_density

    @property
    def critical_flow(self) -> float:
        return self.diagram.critical_flow

    def outflow(self, x):
        return self.diagram.flow(x)

    def inverse_outflow(self, q):
        return self.diagram.inverse_flow(q)

    def travel_time(self, x):
        """BPR travel time t0 (1 + θ (x/x̄)^δ); defined for all x >= 0."""
        x = _check_negative_density(x)
        ratio = x / self.critical_density
        return self.free_flow_time * (1.0 + self.bpr_theta * ratio**self.bpr_delta)

    def travel_time_slope_bound(self) -> float:
        """Max of |dτ/dx| over the free-flow region: t0 θ δ / x̄ (δ >= 1)."""
        return self.free_flow_time * self.bpr_theta * self.bpr_delta / self.critical_density


class _KindGroup:
    """Column indices of one diagram kind with stacked parameter arrays."""

    def __init__(self, kind: str, cols: list[int], paths: tuple[Path, ...]):
        self.kind = kind
        self.cols = np.array(cols)
        ds = [paths[j].diagram for j in cols]
        self.xb = np.array([d.critical_density for d in ds])
        self.fb = np.array([d.critical_flow for d in ds])
        if kind == "capped_linear":
            self.p1 = np.array([d.slope for d in ds])
        elif kind == "triangular":
            self.p1 = np.array([d.wave_speed for d in ds])
        elif kind == "exponential":
            self.p1 = np.array([d.steepness for d in ds])
            self.p2 = np.array([d.scale_flow for d in ds])

    def flow(self, x):
        if self.kind == "capped_linear":
            return np.minimum(self.p1 * x, self.fb)
        if self.kind == "greenshields":
            return np.maximum(0.0, (2.0 * self.fb / self.xb) * x * (1.0 - x / (2.0 * self.xb)))
        if self.kind == "triangular":
            return np.maximum(0.0, np.minimum((self.fb / self.xb) * x, self.fb + self.p1 * (self.xb - x)))
        return self.p2 * -np.expm1(-self.p1 * x)

    def flow_slope(self, x):
        if self.kind == "capped_linear":
            return np.where(x < self.xb, self.p1, 0.0)
        if self.kind == "greenshields":
            return np.where(x <= 2.0 * self.xb, (2.0 * self.fb / self.xb) * (1.0 - x / self.xb), 0.0)
        if self.kind == "triangular":
            zero_at = self.xb + self.fb / self.p1
            return np.where(x <= self.xb, self.fb / self.xb, np.where(x <= zero_at, -self.p1, 0.0))
        return self.p2 * self.p1 * np.exp(-self.p1 * x)

    def inverse_flow(self, q):
        if np.any(q < 0.0) or np.any(q > self.fb * (1.0 + _REL_TOL)):
            raise ValueError(f"flow outside invertible range: {q!r}")
        q = np.minimum(q, self.fb)
        if self.kind == "capped_linear":
            return q / self.p1
        if self.kind == "greenshields":
            return self.xb * (1.0 - np.sqrt(np.maximum(0.0, 1.0 - q / self.fb)))
        if self.kind == "triangular":
            return q * self.xb / self.fb
        return -np.log1p(-q / self.p2) / self.p1


@dataclass(frozen=True)
class Network:
    """Parallel paths sharing one origin-destination pair, fed by ``inflow``.

    Evaluation methods take densities (or flows) with paths on the last axis
    and broadcast over any leading batch axes.
    """

    paths: tuple[Path, ...]
    inflow: float

    def __post_init__(self):
        if isinstance(self.paths, list):
            object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.paths) < 1:
            raise ValueError("network needs at least one path")
        if self.inflow <= 0:
            raise ValueError("inflow must be positive")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @cached_property
    def critical_density_vec(self) -> np.ndarray:
        return np.array([p.critical_density for p in self.paths])

    @cached_property
    def critical_flow_vec(self) -> np.ndarray:
        return np.array([p.critical_flow for p in self.paths])

    @cached_property
    def modulus_vec(self) -> np.ndarray:
        return np.array([p.modulus for p in self.paths])

    @cached_property
    def free_flow_time_vec(self) -> np.ndarray:
        return np.array([p.free_flow_time for p in self.paths])

    @cached_property
    def _bpr_theta_vec(self) -> np.ndarray:
        return np.array([p.bpr_theta for p in self.paths])

    @cached_property
    def _bpr_delta_vec(self) -> np.ndarray:
        return np.array([p.bpr_delta for p in self.paths])

    @cached_property
    def _groups(self) -> list[_KindGroup]:
        by_kind: dict[str, list[int]] = {}
        for j, p in enumerate(self.paths):
            by_kind.setdefault(p.diagram.kind, []).append(j)
        return [_KindGroup(kind, cols, self.paths) for kind, cols in by_kind.items()]

    def monotonicity_modulus(self) -> float:
        """Smallest per-path modulus, the μ_m entering the uniqueness bound."""
        return float(self.modulus_vec.min())

    def _apply(self, method: str, arr: np.ndarray) -> np.ndarray:
        groups = self._groups
        if len(groups) == 1:
            return getattr(groups[0], method)(arr)
        out = np.empty_like(arr)
        for g in groups:
            out[..., g.cols] = getattr(g, method)(arr[..., g.cols])
        return out

    def outflow(self, x: np.ndarray) -> np.ndarray:
        """Per-path outflow f(x); paths on the last axis of ``x``."""
        return self._apply("flow", _check_negative_density(x))

    def outflow_slope(self, x: np.ndarray) -> np.ndarray:
        return self._apply("flow_slope", np.asarray(x, dtype=float))

    def inverse_outflow(self, q: np.ndarray) -> np.ndarray:
        """Per-path free-flow density with f(x) = q; q in [0, f̄] per path."""
        return self._apply("inverse_flow", np.asarray(q, dtype=float))

    def travel_times(self, x: np.ndarray) -> np.ndarray:
        """Per-path BPR travel time at densities ``x``."""
        x = _check_negative_density(x)
        ratio = x / self.critical_density_vec
        return self.free_flow_time_vec * (1.0 + self._bpr_theta_vec * ratio**self._bpr_delta_vec)

    def total_travel_time(self, x: np.ndarray) -> float:
        """Aggregate travel time sum_j f_j(x_j) τ_j(x_j) at densities ``x``."""
        return float(np.sum(self.outflow(x) * self.travel_times(x), axis=-1))

    def routing_cap_vec(self) -> np.ndarray:
        """Per-path cap f̄_j / λ bounding the invariant routing box."""
        return self.critical_flow_vec / self.inflow
