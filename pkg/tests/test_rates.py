import numpy as np
import pytest
from scipy import integrate, optimize, stats

from sgproc import rates
from sgproc.rates import NumericalFailure, Schedule, WaitingTimeDistribution


def named_schedules():
    return [
        Schedule.constant(0.5),
        Schedule.rational(2.0, 0.3),
        Schedule.exponential(1.5, 0.8),
    ]


def as_custom(schedule):
    """Same curve, forced through the numerical code path."""
    return Schedule.custom(
        lambda t, s=schedule: rates.eta_at(s, t),
    )


def test_schedule_constructors_validate():
    with pytest.raises(ValueError):
        Schedule.constant(0.0)
    with pytest.raises(ValueError):
        Schedule.rational(-1.0, 1.0)
    with pytest.raises(ValueError):
        Schedule.exponential(1.0, 0.0)
    with pytest.raises(ValueError):
        Schedule(kind="nope")
    with pytest.raises(ValueError):
        Schedule(kind="custom")


def test_eta_and_hazard_pointwise():
    t = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(rates.eta_at(Schedule.constant(0.5), t), 0.5)
    np.testing.assert_allclose(
        rates.eta_at(Schedule.rational(2.0, 0.3), t), 1.0 / (2.0 * t + 0.3)
    )
    np.testing.assert_allclose(
        rates.eta_at(Schedule.exponential(1.5, 0.8), t), 1.5 * np.exp(-0.8 * t)
    )
    for sched in named_schedules():
        np.testing.assert_allclose(
            rates.hazard_at(sched, t), 1.0 / rates.eta_at(sched, t)
        )


def test_eta_rejects_negative_times():
    with pytest.raises(ValueError):
        rates.eta_at(Schedule.constant(1.0), -0.1)


def test_cumulative_hazard_matches_quadrature():
    """Closed forms against scipy.integrate.quad on the same integrand."""
    for sched in named_schedules():
        for t0, t1 in [(0.0, 1.0), (0.3, 0.7), (1.0, 4.0), (2.0, 2.0)]:
            want, err = integrate.quad(
                lambda u: float(rates.hazard_at(sched, u)), t0, t1
            )
            got = rates.cumulative_hazard(sched, t0, t1)
            assert abs(got - want) <= 1e-9 + 10 * err


def test_cumulative_hazard_custom_path():
    sched = Schedule.rational(2.0, 0.3)
    closed = rates.cumulative_hazard(sched, 0.25, 3.5)
    numeric = rates.cumulative_hazard(as_custom(sched), 0.25, 3.5)
    assert abs(numeric - closed) < 1e-10


def test_cumulative_hazard_rejects_reversed_interval():
    with pytest.raises(ValueError):
        rates.cumulative_hazard(Schedule.constant(1.0), 1.0, 0.5)


def test_waiting_time_cdf_shape():
    wt = WaitingTimeDistribution(Schedule.exponential(1.5, 0.8), 3, t0=0.4)
    d = np.linspace(0.0, 5.0, 50)
    cdf = np.array([rates.waiting_time_cdf(wt, x) for x in d])
    assert cdf[0] == 0.0
    assert np.all(np.diff(cdf) >= 0)
    assert np.all((cdf >= 0) & (cdf <= 1))
    # exponential schedule keeps positive mass at infinity only if the
    # total hazard integral converges; with b > 0 it diverges, so the
    # CDF should approach 1
    assert rates.waiting_time_cdf(wt, 200.0) > 1.0 - 1e-12


def test_constant_schedule_wait_is_exponential():
    wt = WaitingTimeDistribution(Schedule.constant(0.5), 3, t0=1.0)
    d = np.array([0.1, 1.0, 3.0])
    np.testing.assert_allclose(
        [rates.waiting_time_cdf(wt, x) for x in d],
        1.0 - np.exp(-d / 0.5),
        rtol=1e-14,
    )


QUANTILE_LEVELS = (1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9)


def test_quantile_round_trip_named():
    # CDF(quantile(s)) == s to 1e-10 for every closed-form family
    for sched in named_schedules():
        for t0 in (0.0, 0.7, 3.0):
            wt = WaitingTimeDistribution(sched, 3, t0=t0)
            for s in QUANTILE_LEVELS:
                d = rates.waiting_time_quantile(wt, s)
                assert d > 0
                assert abs(rates.waiting_time_cdf(wt, d) - s) < 1e-10


def test_quantile_round_trip_custom():
    for sched in named_schedules():
        wt = WaitingTimeDistribution(as_custom(sched), 3, t0=0.7)
        for s in (0.01, 0.3, 0.5, 0.9, 0.999):
            d = rates.waiting_time_quantile(wt, s)
            assert abs(rates.waiting_time_cdf(wt, d) - s) < 1e-10


def test_quantile_against_independent_inversion():
    """Brentq on a quad-integrated survival function as the oracle."""
    sched = Schedule.exponential(1.5, 0.8)
    t0 = 0.6

    def cdf(d):
        integral, _ = integrate.quad(
            lambda u: float(rates.hazard_at(sched, u)), t0, t0 + d
        )
        return -np.expm1(-integral)

    wt = WaitingTimeDistribution(sched, 3, t0=t0)
    for s in (0.1, 0.5, 0.9):
        want = optimize.brentq(lambda d: cdf(d) - s, 1e-12, 50.0, xtol=1e-12)
        got = rates.waiting_time_quantile(wt, s)
        assert abs(got - want) < 1e-8


def test_quantile_rejects_degenerate_levels():
    wt = WaitingTimeDistribution(Schedule.constant(1.0), 2, t0=0.0)
    for s in (0.0, -0.5, 1.0, 1.5, 1.0 - 1e-16):
        with pytest.raises(ValueError):
            rates.waiting_time_quantile(wt, s)


def test_sample_waiting_time_distribution():
    rng = np.random.default_rng(42)
    sched = Schedule.rational(2.0, 0.3)
    wt = WaitingTimeDistribution(sched, 3, t0=0.5)
    draws = np.array([rates.sample_waiting_time(wt, rng) for _ in range(4000)])
    assert np.all(draws > 0)
    res = stats.kstest(draws, lambda d: np.array([rates.waiting_time_cdf(wt, x) for x in d]))
    assert res.pvalue > 0.01


def test_sample_waiting_time_survives_extreme_uniforms():
    class FakeRng:
        def __init__(self, u):
            self.u = u

        def random(self):
            return self.u

    wt = WaitingTimeDistribution(Schedule.constant(1.0), 2, t0=0.0)
    lo = rates.sample_waiting_time(wt, FakeRng(0.0))
    hi = rates.sample_waiting_time(wt, FakeRng(1.0))
    assert 0 < lo < hi < np.inf


def test_growth_condition_values():
    assert rates.validate_growth_condition(Schedule.constant(0.2), 10.0) == 0.0
    # rational: |eta'|/eta = a/(a t + b), largest at t = 0
    got = rates.validate_growth_condition(Schedule.rational(2.0, 0.5), 10.0)
    assert abs(got - 2.0 / 0.5) < 1e-12
    # exponential: constant rate b
    got = rates.validate_growth_condition(Schedule.exponential(1.0, 0.8), 10.0)
    assert abs(got - 0.8) < 1e-12


def test_growth_condition_custom_needs_derivative():
    sched = Schedule.custom(lambda t: np.exp(-np.asarray(t, dtype=float)))
    with pytest.raises(ValueError):
        rates.validate_growth_condition(sched, 5.0)
    with_d = Schedule.custom(
        lambda t: np.exp(-np.asarray(t, dtype=float)),
        deta_fn=lambda t: -np.exp(-np.asarray(t, dtype=float)),
    )
    got = rates.validate_growth_condition(with_d, 5.0)
    assert abs(got - 1.0) < 1e-12
