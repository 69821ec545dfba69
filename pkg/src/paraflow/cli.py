"""Command-line front end.

Verbs: ``check`` (signal admissibility report), ``simulate`` (one trajectory
to CSV), ``equilibrium`` (solve and export), ``sweep`` (grid over eta or
gamma, long-form CSV, with bisection refinement of the congestion onset when
sweeping eta under travel-time information) and ``design`` (affine signal
optimization).

Exit codes: 0 on success, 1 for usage/config errors, 2 for numerical
failures.  All randomness is seeded, so identical scenario + seed yields
bit-identical output files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FilePath

import numpy as np

from . import __version__
from .design import DesignError, DesignProblem, format_design_result, gamma_sweep, optimize
from .dynamics import (
    DivergenceError,
    check_invariance,
    integrate,
    write_trajectory_csv,
)
from .equilibrium import (
    EquilibriumResult,
    SolverError,
    solve_extended,
    solve_free_flow,
    write_equilibrium_csv,
)
from .scenario import Scenario, ScenarioError, SweepSpec, parse_scenario
from .signals import TravelTimeSignal, check_class_U

_PLOT_STUB = '''"""Quick-look plots for the CSV files written next to this script."""
import csv
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def _isnum(v):
    try:
        float(v)
        return True
    except (TypeError, ValueError):
        return False


here = pathlib.Path(__file__).parent
for name in ("trajectory.csv", "sweep.csv", "equilibrium.csv", "conditions.csv"):
    f = here / name
    if not f.exists():
        continue
    with open(f, newline="") as fh:
        rows = list(csv.DictReader(fh))
    numeric = [r for r in rows if r and all(_isnum(v) for v in r.values() if v)]
    if not numeric:
        continue
    keys = [k for k in numeric[0] if k and _isnum(numeric[0][k])]
    if len(keys) < 2:
        continue
    xkey, ykeys = keys[0], keys[1:]
    fig, ax = plt.subplots()
    for k in ykeys:
        ax.plot([float(r[xkey]) for r in numeric], [float(r[k]) for r in numeric], label=k)
    ax.set_xlabel(xkey)
    ax.legend(fontsize=6)
    fig.savefig(f.with_suffix(".png"), dpi=150)
    print("wrote", f.with_suffix(".png"))
'''


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; config/usage is 1 here
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paraflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"paraflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("check", "report signal admissibility conditions"),
        ("simulate", "integrate one trajectory and export it"),
        ("equilibrium", "solve for the equilibrium and export it"),
        ("sweep", "grid sweep over eta or gamma"),
        ("design", "optimize an affine information signal"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--scenario", required=True, help="scenario config file")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override scenario seed")
        if name == "sweep":
            cmd.add_argument(
                "--param", choices=("eta", "gamma"), default="eta", help="swept parameter"
            )
            cmd.add_argument("--grid", required=True, help="grid as min:max:count")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        text = FilePath(args.scenario).read_text(encoding="utf-8")
        scenario = parse_scenario(text)
        out = FilePath(args.out)
        out.mkdir(parents=True, exist_ok=True)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        handler = {
            "check": cmd_check,
            "simulate": cmd_simulate,
            "equilibrium": cmd_equilibrium,
            "sweep": cmd_sweep,
            "design": cmd_design,
        }[args.command]
        handler(scenario, args, out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, DesignError, DivergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    (out / "plot_results.py").write_text(_PLOT_STUB, encoding="utf-8")
    return 0


def cmd_check(scenario: Scenario, args, out: FilePath) -> None:
    network = scenario.build_network()
    signal = scenario.build_signal(network)
    report = check_class_U(signal, network, scenario.eta)
    ex, ne, un = report.existence, report.necessity, report.uniqueness
    print(f"signal admissibility at eta = {scenario.eta:g}")
    print("path  existence_bound  necessity_bound  inflow")
    for j in range(network.n_paths):
        print(
            f"{j + 1:>4}  {ex.values[j]:>15.6g}  {ne.values[j]:>15.6g}  "
            f"{network.inflow:>6.4g}"
        )
    print(f"existence: {'ok' if ex.ok else 'FAIL'}   necessity: {'ok' if ne.ok else 'FAIL'}")
    print(
        f"slope bound: l_M = {un.lipschitz_max:.6g} vs 2*mu_m/(lam*eta) = "
        f"{un.threshold:.6g}  ->  {un.status}"
    )
    print(f"verdict: {report.verdict}")
    with open(out / "conditions.csv", "w", encoding="utf-8") as fh:
        fh.write("path,existence_bound,necessity_bound,inflow\n")
        for j in range(network.n_paths):
            fh.write(f"{j + 1},{ex.values[j]:.12g},{ne.values[j]:.12g},{network.inflow:.12g}\n")
        fh.write(f"lipschitz_max,{un.lipschitz_max:.12g},,\n")
        fh.write(f"threshold,{un.threshold:.12g},,\n")
        fh.write(f"verdict,{report.verdict},,\n")


def _solve_any(network, signal, eta) -> EquilibriumResult:
    try:
        return solve_free_flow(network, signal, eta)
    except SolverError:
        return solve_extended(network, signal, eta)


def cmd_simulate(scenario: Scenario, args, out: FilePath) -> None:
    network = scenario.build_network()
    signal = scenario.build_signal(network)
    initial = scenario.initial_state(network, seed=args.seed)
    eq = _solve_any(network, signal, scenario.eta)
    reference = eq.state if eq.converged else None
    traj = integrate(
        initial,
        network,
        signal,
        scenario.eta,
        t_end=scenario.t_end,
        dt=scenario.dt,
        reference=reference,
    )
    write_trajectory_csv(traj, out / "trajectory.csv")
    inv = check_invariance(traj, network)
    final = traj.final_state
    print(f"final x: {np.array2string(final.x, precision=6)}")
    print(f"final r: {np.array2string(final.r, precision=6)}")
    if reference is not None:
        dist = float(np.linalg.norm(np.concatenate([final.x - eq.x, final.r - eq.r])))
        print(f"distance to solved equilibrium: {dist:.3e}")
    print(
        "invariance: "
        + ("ok" if inv.ok else f"{inv.n_violations} samples outside (first t = {inv.first_violation_time:g})")
    )
    print(f"max simplex drift: {traj.max_simplex_drift:.3e}")


def cmd_equilibrium(scenario: Scenario, args, out: FilePath) -> None:
    network = scenario.build_network()
    signal = scenario.build_signal(network)
    eq = _solve_any(network, signal, scenario.eta)
    write_equilibrium_csv(eq, network, out / "equilibrium.csv")
    print(f"method: {eq.method}   converged: {eq.converged}   residual: {eq.residual:.3e}")
    print(f"x_eq: {np.array2string(eq.x, precision=6)}")
    print(f"r_eq: {np.array2string(eq.r, precision=6)}")
    print(f"regimes: {', '.join(eq.regimes)}")
    print(f"total travel time: {network.total_travel_time(eq.x):.6g}")


def _parse_grid(raw: str) -> tuple[float, float, int]:
    parts = raw.split(":")
    if len(parts) != 3:
        raise ScenarioError(f"--grid must be min:max:count, got {raw!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ScenarioError(f"--grid must be min:max:count, got {raw!r}") from exc
    return lo, hi, count


def _eta_point(network, signal, eta):
    if isinstance(signal, TravelTimeSignal):
        return solve_extended(network, signal, eta)
    return _solve_any(network, signal, eta)


def cmd_sweep(scenario: Scenario, args, out: FilePath) -> None:
    lo, hi, count = _parse_grid(args.grid)
    spec = SweepSpec.from_grid(
        args.param, lo, hi, count, task="design" if args.param == "gamma" else "equilibrium"
    )
    network = scenario.build_network()
    rows: list[str] = []
    onset = None
    if spec.param == "eta":
        signal = scenario.build_signal(network)

        def solve_point(eta):
            try:
                return _eta_point(network, signal, eta), "ok"
            except (SolverError, DivergenceError) as exc:
                return None, f"error: {exc}"

        with ThreadPoolExecutor(max_workers=min(8, len(spec.values))) as pool:
            results = list(pool.map(solve_point, spec.values))
        for eta, (eq, status) in zip(spec.values, results):
            rows.extend(_equilibrium_rows(network, signal, eta, eq, status))
        if isinstance(signal, TravelTimeSignal):
            onset = _refine_onset(network, signal, spec.values, results)
    else:
        seed = args.seed if args.seed is not None else scenario.seed
        problem = DesignProblem(
            network=network,
            eta=scenario.eta,
            gamma=0.0,
            n_starts=scenario.multistarts,
            max_evals=scenario.max_evals,
            seed=seed,
        )
        for point in gamma_sweep(problem, spec.values):
            sig = point.result.signal
            rows.extend(
                _equilibrium_rows(network, sig, point.gamma, point.equilibrium, "ok")
            )
    with open(out / "sweep.csv", "w", encoding="utf-8") as fh:
        fh.write("param_value,path,x_eq,r_eq,regime,total_tt,cred_err,status\n")
        fh.writelines(rows)
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    if onset is not None:
        print(f"congestion onset: eta = {onset:.6g}")
        (out / "sweep_summary.txt").write_text(
            f"congestion_onset_eta = {onset:.10g}\n", encoding="utf-8"
        )


def _equilibrium_rows(network, signal, param_value, eq, status) -> list[str]:
    if eq is None:
        return [f"{param_value:.10g},,,,,,,\"{status}\"\n"]
    tt = network.total_travel_time(eq.x)
    cred = float(np.linalg.norm(network.travel_times(eq.x) - signal.evaluate(eq.x)))
    return [
        f"{param_value:.10g},{j + 1},{eq.x[j]:.12g},{eq.r[j]:.12g},"
        f"{eq.regimes[j]},{tt:.12g},{cred:.12g},{status}\n"
        for j in range(network.n_paths)
    ]


def _refine_onset(network, signal, etas, results, iterations: int = 30):
    """Bisect the smallest eta whose equilibrium leaves the free-flow box."""
    flags = [None if eq is None else not eq.all_free_flow for eq, _ in results]
    bracket = None
    for i in range(len(etas) - 1):
        if flags[i] is False and flags[i + 1] is True:
            bracket = (etas[i], etas[i + 1])
            break
    if bracket is None:
        return None
    lo, hi = bracket
    warm = None
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        eq = solve_extended(network, signal, mid, initial=warm)
        if eq.converged:
            warm = eq.state
        if eq.all_free_flow:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cmd_design(scenario: Scenario, args, out: FilePath) -> None:
    network = scenario.build_network()
    seed = args.seed if args.seed is not None else scenario.seed
    problem = DesignProblem(
        network=network,
        eta=scenario.eta,
        gamma=scenario.gamma,
        n_starts=scenario.multistarts,
        max_evals=scenario.max_evals,
        seed=seed,
    )
    result = optimize(problem)
    block = format_design_result(result)
    (out / "design.txt").write_text(block, encoding="utf-8")
    with open(out / "design.csv", "w", encoding="utf-8") as fh:
        fh.write("gamma,objective,efficiency,credibility,residual,verdict\n")
        fh.write(
            f"{result.gamma:.10g},{result.objective:.12g},{result.efficiency_term:.12g},"
            f"{result.credibility_term:.12g},{result.equilibrium_residual:.6g},"
            f"{result.condition_report.verdict}\n"
        )
    print(block, end="")
    # immediate re-verification: admissibility + equilibrium round trip
    signal = result.signal
    report = check_class_U(signal, network, scenario.eta)
    eq = solve_free_flow(network, signal, scenario.eta)
    roundtrip = float(np.max(np.abs(eq.x - result.x_star)))
    print(f"re-check verdict: {report.verdict}")
    print(f"round-trip |x_eq - x*|: {roundtrip:.3e}   residual: {eq.residual:.3e}")


if __name__ == "__main__":
    raise SystemExit(main())
