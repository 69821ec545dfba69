"""Scenario configuration: flat key-value files describing a network, a
signal and run options.

The format is INI-style with one section per path, chosen for easy diffing
in test fixtures:

    [network]
    inflow = 1.0

    [path.1]
    diagram = capped_linear
    slope = 2.0
    critical_density = 0.15
    free_flow_time = 8.0
    bpr_theta = 1.5
    bpr_delta = 2.0

    [signal]
    kind = affine            ; or travel_time
    a = 0.2, -0.19, 0.2, 0.2, 0
    b = 6.84, 6.13, 6.05, 6.06, 6

    [run]
    eta = 20.0
    t_end = 50.0
    dt = 0.01
    initial = centroid       ; or random:SEED, or initial_x/initial_r keys

    [design]
    gamma = 0.1
    multistarts = 20
    max_evals = 5000
    seed = 0

Parsing and serialization round-trip exactly: parse(serialize(parse(text)))
equals parse(text).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .dynamics import SystemState, centroid_state, sample_invariant_set
from .network import (
    CappedLinear,
    ExponentialSaturation,
    Greenshields,
    Network,
    Path,
    Triangular,
)
from .signals import AffineSignal, InformationSignal, TravelTimeSignal

__all__ = ["Scenario", "SweepSpec", "ScenarioError", "parse_scenario", "serialize_scenario"]


class ScenarioError(ValueError):
    """Configuration problem, with the offending section/field in the message."""


@dataclass(frozen=True)
class PathSpec:
    diagram: str
    critical_density: float
    free_flow_time: float
    bpr_theta: float
    bpr_delta: float
    slope: float | None = None          # capped_linear
    critical_flow: float | None = None  # greenshields / triangular
    wave_speed: float | None = None     # triangular
    scale_flow: float | None = None     # exponential
    steepness: float | None = None      # exponential


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: plain values only, so equality is structural."""

    inflow: float
    paths: tuple[PathSpec, ...]
    signal_kind: str
    signal_a: tuple[float, ...] = ()
    signal_b: tuple[float, ...] = ()
    eta: float = 1.0
    t_end: float = 50.0
    dt: float = 0.01
    initial: str = "centroid"
    initial_x: tuple[float, ...] = ()
    initial_r: tuple[float, ...] = ()
    gamma: float = 0.0
    multistarts: int = 20
    max_evals: int = 5000
    seed: int = 0

    def build_network(self) -> Network:
        paths = []
        for i, ps in enumerate(self.paths, start=1):
            try:
                diagram = _build_diagram(ps)
            except (TypeError, ValueError) as exc:
                raise ScenarioError(f"[path.{i}]: {exc}") from exc
            paths.append(
                Path(
                    diagram=diagram,
                    free_flow_time=ps.free_flow_time,
                    bpr_theta=ps.bpr_theta,
                    bpr_delta=ps.bpr_delta,
                )
            )
        return Network(paths=tuple(paths), inflow=self.inflow)

    def build_signal(self, network: Network) -> InformationSignal:
        if self.signal_kind == "affine":
            if len(self.signal_a) != network.n_paths or len(self.signal_b) != network.n_paths:
                raise ScenarioError(
                    "[signal]: a and b must list one value per path"
                )
            return AffineSignal(a=self.signal_a, b=self.signal_b)
        if self.signal_kind == "travel_time":
            return TravelTimeSignal(network)
        raise ScenarioError(f"[signal]: unknown kind {self.signal_kind!r}")

    def initial_state(self, network: Network, seed: int | None = None) -> SystemState:
        if self.initial_x and self.initial_r:
            return SystemState(x=np.array(self.initial_x), r=np.array(self.initial_r))
        if self.initial == "centroid":
            return centroid_state(network)
        if self.initial.startswith("random"):
            _, _, tail = self.initial.partition(":")
            rng_seed = seed if seed is not None else (int(tail) if tail else self.seed)
            rng = np.random.default_rng(rng_seed)
            return sample_invariant_set(network, 1, rng)[0]
        raise ScenarioError(f"[run]: unknown initial state {self.initial!r}")


def _build_diagram(ps: PathSpec):
    if ps.diagram == "capped_linear":
        _need(ps, "slope")
        return CappedLinear(slope=ps.slope, critical_density_=ps.critical_density)
    if ps.diagram == "greenshields":
        _need(ps, "critical_flow")
        return Greenshields(
            critical_density_=ps.critical_density, critical_flow_=ps.critical_flow
        )
    if ps.diagram == "triangular":
        _need(ps, "critical_flow")
        _need(ps, "wave_speed")
        return Triangular(
            critical_density_=ps.critical_density,
            critical_flow_=ps.critical_flow,
            wave_speed=ps.wave_speed,
        )
    if ps.diagram == "exponential":
        _need(ps, "scale_flow")
        _need(ps, "steepness")
        return ExponentialSaturation(
            scale_flow=ps.scale_flow,
            steepness=ps.steepness,
            critical_density_=ps.critical_density,
        )
    raise ValueError(f"unknown diagram kind {ps.diagram!r}")


def _need(ps: PathSpec, name: str):
    if getattr(ps, name) is None:
        raise ValueError(f"diagram {ps.diagram!r} requires field {name!r}")


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one scalar parameter with a per-point task."""

    param: str                      # "eta" or "gamma"
    values: tuple[float, ...]
    task: str = "equilibrium"       # or "design"

    def __post_init__(self):
        if self.param not in ("eta", "gamma"):
            raise ScenarioError(f"sweep parameter must be eta or gamma, got {self.param!r}")
        if self.task not in ("equilibrium", "design"):
            raise ScenarioError(f"sweep task must be equilibrium or design, got {self.task!r}")
        if len(self.values) < 2:
            raise ScenarioError("sweep grid needs at least two points")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ScenarioError("sweep grid values must be strictly increasing")

    @classmethod
    def from_grid(cls, param: str, lo: float, hi: float, count: int, task: str = "equilibrium"):
        if count < 2 or not lo < hi:
            raise ScenarioError("grid needs min < max and count >= 2")
        return cls(param=param, values=tuple(np.linspace(lo, hi, count)), task=task)


_FLOAT_FIELDS = {
    "critical_density",
    "free_flow_time",
    "bpr_theta",
    "bpr_delta",
    "slope",
    "critical_flow",
    "wave_speed",
    "scale_flow",
    "steepness",
}


def parse_scenario(text: str) -> Scenario:
    """Parse a scenario config from a string; raises ScenarioError with the
    failing section and field on any problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"config syntax: {exc}") from exc

    if "network" not in cp:
        raise ScenarioError("missing [network] section")
    inflow = _get_float(cp, "network", "inflow")

    path_sections = sorted(
        (s for s in cp.sections() if s.startswith("path.")),
        key=lambda s: int(s.split(".", 1)[1]),
    )
    if not path_sections:
        raise ScenarioError("no [path.N] sections")
    expected = [f"path.{i}" for i in range(1, len(path_sections) + 1)]
    if path_sections != expected:
        raise ScenarioError(f"path sections must be numbered 1..{len(path_sections)}")

    paths = []
    for sec in path_sections:
        kind = cp.get(sec, "diagram", fallback=None)
        if kind is None:
            raise ScenarioError(f"[{sec}]: missing field 'diagram'")
        kwargs = {"diagram": kind.strip()}
        for key in _FLOAT_FIELDS:
            if cp.has_option(sec, key):
                kwargs[key] = _get_float(cp, sec, key)
        for required in ("critical_density", "free_flow_time", "bpr_theta", "bpr_delta"):
            if required not in kwargs:
                raise ScenarioError(f"[{sec}]: missing field {required!r}")
        paths.append(PathSpec(**kwargs))

    if "signal" not in cp:
        raise ScenarioError("missing [signal] section")
    signal_kind = cp.get("signal", "kind", fallback="").strip()
    a = _get_floats(cp, "signal", "a") if cp.has_option("signal", "a") else ()
    b = _get_floats(cp, "signal", "b") if cp.has_option("signal", "b") else ()
    if signal_kind == "affine" and (not a or not b):
        raise ScenarioError("[signal]: affine kind requires fields 'a' and 'b'")

    run = cp["run"] if "run" in cp else {}
    design = cp["design"] if "design" in cp else {}

    return Scenario(
        inflow=inflow,
        paths=tuple(paths),
        signal_kind=signal_kind,
        signal_a=a,
        signal_b=b,
        eta=_get_float(cp, "run", "eta", fallback=1.0) if run else 1.0,
        t_end=_get_float(cp, "run", "t_end", fallback=50.0) if run else 50.0,
        dt=_get_float(cp, "run", "dt", fallback=0.01) if run else 0.01,
        initial=run.get("initial", "centroid").strip() if run else "centroid",
        initial_x=_get_floats(cp, "run", "initial_x") if run and cp.has_option("run", "initial_x") else (),
        initial_r=_get_floats(cp, "run", "initial_r") if run and cp.has_option("run", "initial_r") else (),
        gamma=_get_float(cp, "design", "gamma", fallback=0.0) if design else 0.0,
        multistarts=_get_int(cp, "design", "multistarts", fallback=20) if design else 20,
        max_evals=_get_int(cp, "design", "max_evals", fallback=5000) if design else 5000,
        seed=_get_int(cp, "design", "seed", fallback=0) if design else 0,
    )


def serialize_scenario(scenario: Scenario) -> str:
    """Render a scenario back to config text (parse -> serialize round-trips)."""
    cp = configparser.ConfigParser()
    cp["network"] = {"inflow": _fmt(scenario.inflow)}
    for i, ps in enumerate(scenario.paths, start=1):
        sec = {}
        sec["diagram"] = ps.diagram
        for key in (
            "critical_density",
            "free_flow_time",
            "bpr_theta",
            "bpr_delta",
            "slope",
            "critical_flow",
            "wave_speed",
            "scale_flow",
            "steepness",
        ):
            val = getattr(ps, key)
            if val is not None:
                sec[key] = _fmt(val)
        cp[f"path.{i}"] = sec
    sig = {"kind": scenario.signal_kind}
    if scenario.signal_a:
        sig["a"] = ", ".join(_fmt(v) for v in scenario.signal_a)
    if scenario.signal_b:
        sig["b"] = ", ".join(_fmt(v) for v in scenario.signal_b)
    cp["signal"] = sig
    run = {
        "eta": _fmt(scenario.eta),
        "t_end": _fmt(scenario.t_end),
        "dt": _fmt(scenario.dt),
        "initial": scenario.initial,
    }
    if scenario.initial_x:
        run["initial_x"] = ", ".join(_fmt(v) for v in scenario.initial_x)
    if scenario.initial_r:
        run["initial_r"] = ", ".join(_fmt(v) for v in scenario.initial_r)
    cp["run"] = run
    cp["design"] = {
        "gamma": _fmt(scenario.gamma),
        "multistarts": str(scenario.multistarts),
        "max_evals": str(scenario.max_evals),
        "seed": str(scenario.seed),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _fmt(value: float) -> str:
    return repr(float(value))


def _get_float(cp, section, key, fallback=None):
    if not cp.has_option(section, key):
        if fallback is not None:
            return fallback
        raise ScenarioError(f"[{section}]: missing field {key!r}")
    raw = cp.get(section, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {key}: not a number: {raw!r}") from exc


def _get_int(cp, section, key, fallback=None):
    if not cp.has_option(section, key):
        if fallback is not None:
            return fallback
        raise ScenarioError(f"[{section}]: missing field {key!r}")
    raw = cp.get(section, key)
    try:
        return int(raw)
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {key}: not an integer: {raw!r}") from exc


def _get_floats(cp, section, key) -> tuple[float, ...]:
    raw = cp.get(section, key)
    try:
        return tuple(float(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ScenarioError(f"[{section}] {key}: not a number list: {raw!r}") from exc
