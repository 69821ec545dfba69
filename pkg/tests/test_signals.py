"""Information signals: evaluation, bounds, admissibility checks."""

import numpy as np
import pytest

from paraflow import (
    AffineSignal,
    CappedLinear,
    CustomSignal,
    Network,
    Path,
    TravelTimeSignal,
    check_class_U,
    check_existence,
    check_necessity,
    check_uniqueness_stability,
)
from conftest import DESIGNED_A, DESIGNED_B, ETA_DESIGNED, T0, THETA, XBAR


def _affine_bounds_by_hand(a, b, xbar):
    """Independent bounds: evaluate the ends of each path's interval."""
    a, b, xbar = map(np.asarray, (a, b, xbar))
    ends = np.stack([b, a * xbar + b])
    return ends.min(axis=0), ends.max(axis=0)


def _small_net(p=2, slope=1.0, xb=1.0, lam=0.5, t0=1.0):
    paths = tuple(
        Path(diagram=CappedLinear(slope=slope, critical_density_=xb), free_flow_time=t0)
        for _ in range(p)
    )
    return Network(paths=paths, inflow=lam)


class TestEvaluate:
    def test_affine_at_zero_returns_offsets(self, designed_signal):
        assert np.allclose(designed_signal.evaluate(np.zeros(5)), DESIGNED_B, atol=0.0)

    def test_zero_signal(self):
        sig = AffineSignal(a=(0.0, 0.0), b=(0.0, 0.0))
        assert np.allclose(sig.evaluate(np.array([0.3, 0.7])), 0.0, atol=0.0)

    def test_travel_time_at_zero_returns_free_flow_times(self, case_study):
        sig = TravelTimeSignal(case_study)
        assert np.allclose(sig.evaluate(np.zeros(5)), T0, atol=0.0)

    def test_negative_density_rejected(self, designed_signal):
        with pytest.raises(ValueError):
            designed_signal.evaluate(np.array([0.1, -0.1, 0.0, 0.0, 0.0]))

    def test_negative_offsets_rejected(self):
        with pytest.raises(ValueError):
            AffineSignal(a=(0.0,), b=(-1.0,))


class TestBounds:
    def test_affine_negative_slope_closed_form(self, case_study, designed_signal):
        b = designed_signal.bounds(case_study)
        assert b.lower[1] == pytest.approx(6.1015, abs=1e-12)
        assert b.upper[1] == pytest.approx(6.13, abs=1e-12)
        assert b.deriv_bound[1] == pytest.approx(0.19, abs=1e-15)

    def test_constant_signal(self, case_study):
        sig = AffineSignal(a=(0.0,) * 5, b=(5.0,) * 5)
        b = sig.bounds(case_study)
        assert np.allclose(b.lower, 5.0) and np.allclose(b.upper, 5.0)
        assert b.deriv_bound_max == 0.0

    def test_travel_time_bounds_and_slope(self, case_study):
        b = TravelTimeSignal(case_study).bounds(case_study)
        assert b.lower[4] == pytest.approx(2.0)
        assert b.upper[4] == pytest.approx(2.0 * (1.0 + THETA))
        assert b.deriv_bound[4] == pytest.approx(2.0 * THETA * 2.0 / 0.2)  # 30
        assert b.deriv_bound_max == pytest.approx(8.0 * THETA * 2.0 / 0.15)  # 160

    def test_bracket_property_on_grid(self, case_study, designed_signal):
        for sig in (designed_signal, TravelTimeSignal(case_study)):
            b = sig.bounds(case_study)
            for j in range(5):
                grid = np.linspace(0.0, XBAR[j], 1000)
                x = np.zeros((1000, 5))
                x[:, j] = grid
                vals = sig.evaluate(x)[:, j]
                assert np.all(vals >= b.lower[j] - 1e-9)
                assert np.all(vals <= b.upper[j] + 1e-9)
                slopes = np.abs(np.diff(vals) / np.diff(grid))
                assert np.all(slopes <= b.deriv_bound[j] + 1e-6)

    def test_affine_matches_hand_bounds(self, case_study, rng):
        for _ in range(20):
            a = rng.uniform(-0.5, 0.5, 5)
            b = rng.uniform(0.5, 3.0, 5)
            if np.any(a * np.array(XBAR) + b < 0):
                continue
            sig = AffineSignal(a=tuple(a), b=tuple(b))
            got = sig.bounds(case_study)
            lo, hi = _affine_bounds_by_hand(a, b, XBAR)
            assert np.allclose(got.lower, lo, atol=1e-14)
            assert np.allclose(got.upper, hi, atol=1e-14)

    def test_negative_region_rejected(self, case_study):
        sig = AffineSignal(a=(-100.0,) * 5, b=(1.0,) * 5)
        with pytest.raises(ValueError):
            sig.bounds(case_study)

    def test_custom_signal_slope_declaration_verified(self, case_study):
        good = CustomSignal(
            functions=tuple(lambda x: np.sin(x) + 1.0 for _ in range(5)),
            deriv_bounds=(1.0,) * 5,
        )
        b = good.bounds(case_study)
        assert np.all(b.upper <= 2.0)
        lying = CustomSignal(
            functions=tuple(lambda x: 100.0 * x for _ in range(5)),
            deriv_bounds=(1.0,) * 5,
        )
        with pytest.raises(ValueError):
            lying.bounds(case_study)


class TestExistence:
    def test_case_study_designed_signal_value_and_pass(self, case_study, designed_signal):
        report = check_existence(designed_signal, case_study, ETA_DESIGNED)
        # independent arithmetic for path 5: fbar_5 * sum_i exp(-eta (uhi_i - ulo_5))
        lo, hi = _affine_bounds_by_hand(DESIGNED_A, DESIGNED_B, XBAR)
        expected5 = 0.8 * np.sum(np.exp(-ETA_DESIGNED * (hi - lo[4])))
        assert report.values[4] == pytest.approx(expected5, rel=1e-12)
        assert report.values[4] == pytest.approx(1.1138, abs=5e-4)
        assert report.ok  # all five paths pass

    def test_single_path_reduction(self):
        net = _small_net(p=1, slope=2.0, xb=1.0, lam=0.5)
        sig = AffineSignal(a=(1.0,), b=(0.5,))  # spread eta*(uhi-ulo) = eta
        for eta, expect_ok in ((0.1, True), (5.0, False)):
            rep = check_existence(sig, net, eta)
            assert rep.values[0] == pytest.approx(2.0 * np.exp(-eta), rel=1e-12)
            assert rep.ok is expect_ok

    def test_constant_symmetric_threshold(self):
        # equal constant signals: ok iff lam <= p * fbar
        for lam, expect_ok in ((1.9, True), (2.1, False)):
            net = _small_net(p=2, slope=1.0, xb=1.0, lam=lam)
            sig = AffineSignal(a=(0.0, 0.0), b=(3.0, 3.0))
            assert check_existence(sig, net, 2.0).ok is expect_ok

    def test_monotone_in_inflow(self, case_study, designed_signal):
        ref = check_existence(designed_signal, case_study, ETA_DESIGNED)
        assert ref.ok
        smaller = Network(paths=case_study.paths, inflow=0.5)
        assert check_existence(designed_signal, smaller, ETA_DESIGNED).ok

    def test_log_space_matches_direct_evaluation(self, case_study, designed_signal):
        rep = check_existence(designed_signal, case_study, 2.0)
        lo, hi = _affine_bounds_by_hand(DESIGNED_A, DESIGNED_B, XBAR)
        fbar = case_study.critical_flow_vec
        direct = np.array(
            [fbar[j] * np.exp(2.0 * lo[j]) * np.sum(np.exp(-2.0 * hi)) for j in range(5)]
        )
        assert np.allclose(rep.values, direct, rtol=1e-12)

    def test_overflowing_values_still_comparable(self, case_study):
        # travel-time bound spreads at eta=40 overflow exp(); log-space must not
        rep = check_necessity(TravelTimeSignal(case_study), case_study, 40.0)
        assert np.all(np.isfinite(rep.log_values))
        assert np.any(np.isinf(rep.values))
        assert rep.ok


class TestNecessity:
    def test_implied_by_existence_on_random_signals(self, case_study, rng):
        hits = 0
        for _ in range(200):
            a = rng.uniform(-0.3, 0.3, 5)
            b = rng.uniform(0.1, 4.0, 5)
            if np.any(a * np.array(XBAR) + b < 0):
                continue
            sig = AffineSignal(a=tuple(a), b=tuple(b))
            eta = rng.uniform(0.0, 10.0)
            if check_existence(sig, case_study, eta).ok:
                hits += 1
                assert check_necessity(sig, case_study, eta).ok
        assert hits > 10  # the implication was actually exercised

    def test_constant_signal_collapses_gap(self):
        net = _small_net(p=3, slope=1.0, xb=1.0, lam=1.5)
        sig = AffineSignal(a=(0.0,) * 3, b=(2.0,) * 3)
        suff = check_existence(sig, net, 4.0)
        nec = check_necessity(sig, net, 4.0)
        assert np.allclose(suff.values, nec.values, rtol=1e-12)

    def test_designed_signal_passes(self, case_study, designed_signal):
        assert check_necessity(designed_signal, case_study, ETA_DESIGNED).ok


class TestUniquenessStability:
    def test_case_study_boundary(self, case_study, designed_signal):
        rep = check_uniqueness_stability(designed_signal, case_study, ETA_DESIGNED)
        assert rep.threshold == pytest.approx(0.2, rel=1e-15)
        assert rep.lipschitz_max == pytest.approx(0.2, rel=1e-15)
        assert rep.status == "boundary"
        assert not rep.ok

    def test_constant_signal_always_passes(self, case_study):
        sig = AffineSignal(a=(0.0,) * 5, b=(1.0,) * 5)
        for eta in (0.0, 1.0, 100.0):
            assert check_uniqueness_stability(sig, case_study, eta).status == "pass"

    def test_strict_inequality_passes(self, case_study):
        sig = AffineSignal(a=(0.3,) * 5, b=(1.0,) * 5)
        rep = check_uniqueness_stability(sig, case_study, 10.0)
        assert rep.threshold == pytest.approx(0.4)
        assert rep.status == "pass" and rep.slack == pytest.approx(0.1)

    def test_violation_fails(self, case_study):
        sig = AffineSignal(a=(0.5,) * 5, b=(1.0,) * 5)
        assert check_uniqueness_stability(sig, case_study, 10.0).status == "fail"

    def test_eta_zero_vacuous(self, case_study):
        sig = AffineSignal(a=(100.0,) * 5, b=(1.0,) * 5)
        rep = check_uniqueness_stability(sig, case_study, 0.0)
        assert np.isinf(rep.threshold) and rep.status == "pass"


class TestClassU:
    def test_constant_admissible_signal(self, case_study):
        sig = AffineSignal(a=(0.0,) * 5, b=(2.0,) * 5)
        rep = check_class_U(sig, case_study, 1.0)
        assert rep.verdict == "in" and rep.in_class_U
        assert rep.existence_ok and rep.necessity_ok and rep.uniqueness_stability_ok

    def test_designed_signal_boundary(self, case_study, designed_signal):
        rep = check_class_U(designed_signal, case_study, ETA_DESIGNED)
        assert rep.existence_ok
        assert rep.uniqueness.status == "boundary"
        assert rep.verdict == "boundary"
        assert not rep.in_class_U  # strict reading of the slope inequality

    def test_travel_time_signal_out(self, case_study):
        rep = check_class_U(TravelTimeSignal(case_study), case_study, ETA_DESIGNED)
        assert rep.uniqueness.lipschitz_max == pytest.approx(160.0)
        assert rep.verdict == "out"
