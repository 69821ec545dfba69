"""Shared setup for the demo scripts: the five-road case-study network."""

import pathlib

from paraflow import AffineSignal, CappedLinear, Network, Path

OUTPUT_DIR = pathlib.Path(__file__).parent / "output"

ETA = 20.0
DESIGNED_A = (0.2, -0.19, 0.2, 0.2, 0.0)
DESIGNED_B = (6.84, 6.13, 6.05, 6.06, 6.0)


def case_study_network() -> Network:
    """lam = 1 feeding five capped-linear roads with BPR travel times."""
    slopes = (2.0, 2.0, 3.0, 2.5, 4.0)
    crit = (0.15, 0.15, 0.175, 0.2, 0.2)
    t0 = (8.0, 6.0, 5.0, 5.0, 2.0)
    paths = tuple(
        Path(
            diagram=CappedLinear(slope=m, critical_density_=x),
            free_flow_time=t,
            bpr_theta=1.5,
            bpr_delta=2.0,
        )
        for m, x, t in zip(slopes, crit, t0)
    )
    return Network(paths=paths, inflow=1.0)


def designed_signal() -> AffineSignal:
    """Affine signal tuned for eta = 20 on the case-study network."""
    return AffineSignal(a=DESIGNED_A, b=DESIGNED_B)


def ensure_output_dir() -> pathlib.Path:
    OUTPUT_DIR.mkdir(exist_ok=True)
    return OUTPUT_DIR
