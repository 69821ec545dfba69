"""What makes an information signal admissible.

Runs the two certificates (equilibrium existence and the slope bound for
uniqueness plus stability) for three signals on the same network: a constant
announcement, the tuned affine signal, and the true travel times.  The tuned
signal sits exactly on the slope bound, which is reported as its own
"boundary" status rather than a pass or fail.
"""

import numpy as np

from paraflow import AffineSignal, TravelTimeSignal, check_class_U

from common import ETA, case_study_network, designed_signal

net = case_study_network()
signals = {
    "constant": AffineSignal(a=(0.0,) * 5, b=(6.0,) * 5),
    "designed": designed_signal(),
    "travel_time": TravelTimeSignal(net),
}

for name, sig in signals.items():
    rep = check_class_U(sig, net, ETA)
    print(f"--- {name} (eta = {ETA:g}) ---")
    with np.printoptions(precision=4, suppress=False):
        print(f"existence bounds per road: {rep.existence.values}")
    print(f"existence ok: {rep.existence_ok}   necessary condition ok: {rep.necessity_ok}")
    print(
        f"max signal slope {rep.uniqueness.lipschitz_max:g} vs threshold "
        f"{rep.uniqueness.threshold:g} -> {rep.uniqueness.status}"
    )
    print(f"verdict: {rep.verdict}\n")
