"""Integrators, trajectory records, summaries, Monte Carlo, circle oracle."""

import dataclasses

import numpy as np
import pytest

from invobs import (
    AnisotropicCost,
    IntegratorSpec,
    SimulationAbort,
    TrajectoryRecord,
    closed_form_deviation,
    fit_rate,
    monte_carlo,
    simulate_circle,
    simulate_cosim,
    simulate_lifted,
    simulate_projected,
    so2_oracle_run,
    summarize,
)

E1, E2, E3 = np.eye(3)

SINUSOID = {"kind": "sinusoid", "amplitude": [1.0, 0.5, 0.8], "frequency": 0.5, "phase": 0.3}
ZERO = {"kind": "constant", "amplitude": [0.0, 0.0, 0.0]}


def test_integrator_spec_validation():
    IntegratorSpec("lie-euler", 0.01)
    with pytest.raises(ValueError):
        IntegratorSpec("euler", 0.001)
    with pytest.raises(ValueError):
        IntegratorSpec("rk4-project", 0.02)
    with pytest.raises(ValueError):
        IntegratorSpec("rk4-project", 0.0)


def test_record_requires_increasing_time():
    t = np.array([0.0, 0.1, 0.1])
    y = np.tile(E3, (3, 1))
    with pytest.raises(ValueError):
        TrajectoryRecord(t=t, y=y, yhat=y, theta=np.zeros(3), drift=np.zeros(3))


def test_fit_rate_recovers_exact_exponential():
    t = np.linspace(0.0, 12.0, 1201)
    theta = 0.09 * np.exp(-1.7 * t)
    rate = fit_rate(t, theta)
    assert rate == pytest.approx(1.7, rel=1e-6)
    assert fit_rate(t[:3], theta[:3]) is None  # too few samples in window


def test_summarize_thresholds(make_scenario):
    sc = make_scenario(mode="projected", k=1.0, input=ZERO, t_end=8.0,
                       init={"plant": "identity", "observer": {"axis_angle": [1.0, 0, 0]}})
    rec = simulate_projected(sc)
    s = summarize(rec, threshold=1e-3)
    assert s.final_angle < 1e-3
    assert s.t_converged is not None and 0.0 < s.t_converged <= 8.0
    assert rec.theta[np.searchsorted(rec.t, s.t_converged)] < 1e-3
    assert s.fitted_rate == pytest.approx(1.0, rel=0.02)
    never = summarize(rec, threshold=1e-12)
    assert never.t_converged is None


def test_projected_diagonal_invariant(make_scenario):
    sc = make_scenario(mode="projected", input=SINUSOID, t_end=5.0,
                       init={"plant": {"direction": [0.0, 0.6, 0.8]},
                             "observer": {"direction": [0.0, 0.6, 0.8]}})
    rec = simulate_projected(sc)
    assert np.max(rec.theta) <= 1e-9
    assert np.max(rec.drift) <= 1e-12


def test_projected_matches_closed_form(make_scenario):
    sc = make_scenario(mode="projected", k=1.0, input=ZERO, t_end=1.0,
                       sample_every=100,
                       init={"plant": "identity", "observer": {"axis_angle": [np.pi / 2, 0, 0]}})
    rec = simulate_projected(sc)
    assert rec.theta[0] == pytest.approx(np.pi / 2, abs=1e-12)
    assert rec.theta[-1] == pytest.approx(2.0 * np.arctan(np.exp(-1.0)), abs=1e-5)
    assert closed_form_deviation(rec, 1.0) <= 1e-9


def test_projected_antipodal_equilibrium(make_scenario):
    sc = make_scenario(mode="projected", input=SINUSOID, t_end=5.0,
                       init={"plant": {"direction": [0.0, 0.6, 0.8]},
                             "observer": {"direction": [0.0, -0.6, -0.8]}})
    rec = simulate_projected(sc)
    assert np.max(np.abs(rec.theta - np.pi)) <= 1e-9


def _order_scenario(make_scenario, method, h):
    return make_scenario(mode="projected", k=2.0, input=ZERO, t_end=3.0, sample_every=1,
                         integrator={"method": method, "h": h},
                         init={"plant": "identity", "observer": {"axis_angle": [2.7, 0, 0]}})


def test_rk4_fourth_order_scaling(make_scenario):
    d1 = closed_form_deviation(simulate_projected(_order_scenario(make_scenario, "rk4-project", 0.01)), 2.0)
    d2 = closed_form_deviation(simulate_projected(_order_scenario(make_scenario, "rk4-project", 0.005)), 2.0)
    assert 12.0 <= d1 / d2 <= 20.0


def test_lie_euler_first_order_scaling(make_scenario):
    d1 = closed_form_deviation(simulate_projected(_order_scenario(make_scenario, "lie-euler", 0.01)), 2.0)
    d2 = closed_form_deviation(simulate_projected(_order_scenario(make_scenario, "lie-euler", 0.005)), 2.0)
    assert 1.7 <= d1 / d2 <= 2.3


def test_lifted_matches_projected_outputs(make_scenario):
    init = {"plant": "identity", "observer": {"axis_angle": [0.0, 2.0, 0.0]}}
    sc = make_scenario(mode="lifted", input=SINUSOID, t_end=3.0, init=init)
    rec = simulate_lifted(sc)
    assert rec.X is not None and rec.Xhat is not None
    assert np.max(rec.drift) <= 1e-12
    sc_p = dataclasses.replace(sc, mode="projected")
    rec_p = simulate_projected(sc_p)
    assert np.max(np.abs(rec.theta - rec_p.theta)) <= 1e-6


def test_lifted_diagonal_and_convergence(make_scenario):
    init = {"plant": {"axis_angle": [0.3, -0.2, 0.5]}, "observer": {"axis_angle": [0.3, -0.2, 0.5]}}
    rec = simulate_lifted(make_scenario(mode="lifted", input=SINUSOID, t_end=2.0, init=init))
    assert np.max(rec.theta) <= 1e-9
    rec2 = simulate_lifted(make_scenario(
        mode="lifted", k=1.0, input=SINUSOID, t_end=10.0,
        init={"plant": "identity", "observer": {"axis_angle": [0.0, 2.2, 0.0]}}))
    assert rec2.theta[-1] < 1e-3  # group error settles into the stabiliser


def test_cosim_consistency(make_scenario):
    sc = make_scenario(mode="co-sim", input=SINUSOID, t_end=3.0,
                       init={"plant": "identity", "observer": {"axis_angle": [1.5, 0.4, 0.0]}})
    rec = simulate_cosim(sc)
    assert rec.consistency is not None
    assert np.max(rec.consistency) <= 1e-6


def test_synchrony_mode_freezes_error(make_scenario):
    sc = make_scenario(mode="synchrony", input=SINUSOID, t_end=5.0,
                       init={"plant": "identity", "observer": {"axis_angle": [1.2, 0.3, 0.0]}})
    rec = simulate_projected(sc)
    assert np.max(np.abs(rec.theta - rec.theta[0])) <= 1e-8


def test_lifted_error_is_input_independent(make_scenario):
    init = {"plant": "identity", "observer": {"axis_angle": [1.4, 0.0, 0.6]}}
    other = {"kind": "piecewise-constant", "times": [1.0, 2.0],
             "values": [[0.4, 0, 0], [-0.3, 0.5, 0.2], [0.1, -0.6, 0.3]]}
    thetas = []
    for inp in (SINUSOID, ZERO, other):
        rec = simulate_lifted(make_scenario(mode="lifted", input=inp, t_end=5.0, init=init))
        thetas.append(rec.theta)
    stack = np.stack(thetas)
    assert np.max(stack.max(axis=0) - stack.min(axis=0)) <= 1e-6


def test_lie_euler_group_drift(make_scenario):
    sc = make_scenario(mode="lifted", input=SINUSOID, t_end=20.0, sample_every=100,
                       integrator={"method": "lie-euler", "h": 0.001},
                       init={"plant": "identity", "observer": {"axis_angle": [0.0, 2.0, 0.0]}})
    rec = simulate_lifted(sc)
    assert np.max(rec.drift) <= 1e-9


def test_simulation_abort_on_overflow(make_scenario):
    sc = make_scenario(mode="projected", input=ZERO, t_end=1.0,
                       init={"plant": "identity", "observer": {"axis_angle": [1.0, 0, 0]}})
    blowup = AnisotropicCost(np.diag([1e200, 1e200, 1e200]))
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(SimulationAbort):
        simulate_projected(sc, cost=blowup)


def test_monte_carlo_deterministic_and_convergent(make_scenario):
    sc = make_scenario(mode="monte-carlo", k=1.0, input=SINUSOID, t_end=15.0,
                       sample_every=20, seed=11,
                       mc={"runs": 50, "space": "projected", "threshold": 1e-3})
    a = monte_carlo(sc)
    b = monte_carlo(sc)
    assert a.convergence_fraction == 1.0
    assert len(a.summaries) == 50
    for s, t in zip(a.summaries, b.summaries):
        assert s == t  # bit-identical replay from the seed
    rates = [s.fitted_rate for s in a.summaries if s.fitted_rate is not None]
    assert rates and all(0.98 <= r <= 1.02 for r in rates)


def test_monte_carlo_group_space(make_scenario):
    sc = make_scenario(mode="monte-carlo", k=1.0, input=SINUSOID, t_end=10.0,
                       sample_every=20, seed=3,
                       mc={"runs": 20, "space": "lifted", "threshold": 2e-2})
    res = monte_carlo(sc)
    assert res.convergence_fraction == 1.0
    assert max(s.max_drift for s in res.summaries) <= 1e-9


def test_monte_carlo_rejects_bad_run_count(make_scenario):
    sc = make_scenario(mode="monte-carlo", input=ZERO, t_end=1.0)
    with pytest.raises(ValueError):
        monte_carlo(sc, n_runs=0)


SO2_BASE = {
    "instance": "so2-s1", "k": 1.0,
    "input": {"kind": "sinusoid", "amplitude": [0.8], "frequency": 0.4, "phase": 0.2},
    "init": {"plant": {"angle": 0.3}, "observer": {"angle": 2.2}},
    "t_end": 10.0,
}


def test_so2_oracle_matched_initial_condition(make_scenario):
    over = dict(SO2_BASE, init={"plant": {"angle": 0.4}, "observer": {"angle": 0.4}},
                integrator={"h": 1e-4}, sample_every=100)
    res = so2_oracle_run(make_scenario(**over))
    assert res.max_deviation <= 1e-10


def test_so2_oracle_random_scenario(make_scenario):
    over = dict(SO2_BASE, integrator={"h": 1e-4}, sample_every=100)
    res = so2_oracle_run(make_scenario(**over))
    assert res.max_deviation <= 1e-8


def test_so2_full_state_convergence(make_scenario):
    over = dict(SO2_BASE, t_end=20.0)
    res = so2_oracle_run(make_scenario(**over))
    assert res.final_state_error <= 1e-6


def test_so2_synchrony_and_cosim(make_scenario):
    rec = simulate_circle(make_scenario(**dict(SO2_BASE, mode="synchrony")))
    assert np.max(np.abs(rec.theta - rec.theta[0])) <= 1e-10
    rec2 = simulate_circle(make_scenario(**dict(SO2_BASE, mode="co-sim")))
    assert rec2.consistency is not None
    assert np.max(rec2.consistency) <= 1e-10


def test_so2_lie_euler_runs(make_scenario):
    over = dict(SO2_BASE, integrator={"method": "lie-euler", "h": 1e-3}, t_end=5.0)
    rec = simulate_circle(make_scenario(**over))
    assert rec.theta[-1] < rec.theta[0]


def test_near_antipodal_perturbation_escapes(make_scenario):
    tilt = 1e-5
    start = np.array([0.0, np.sin(np.pi - tilt), np.cos(np.pi - tilt)])
    sc = make_scenario(mode="projected", k=1.0, input=SINUSOID, t_end=25.0,
                       sample_every=50,
                       init={"plant": {"direction": [0.0, 0.0, 1.0]},
                             "observer": {"direction": start.tolist()}})
    rec = simulate_projected(sc)
    assert rec.theta[0] > np.pi - 2e-5
    assert rec.theta[-1] < 1e-3


def test_monte_carlo_exclusion_cap(rng):
    from invobs.simulate import ANTIPODAL_EXCLUSION, _sample_observer_group, _sample_observer_sphere

    y = np.array([0.0, 0.0, 1.0])
    Y = _sample_observer_sphere(rng, 4000, y)
    angles = 2.0 * np.arctan2(np.linalg.norm(Y - y, axis=1), np.linalg.norm(Y + y, axis=1))
    assert np.max(angles) <= np.pi - ANTIPODAL_EXCLUSION
    X = _sample_observer_group(rng, 500, y, y)
    out = np.einsum("nji,j->ni", X, y)
    angles = 2.0 * np.arctan2(np.linalg.norm(out - y, axis=1), np.linalg.norm(out + y, axis=1))
    assert np.max(angles) <= np.pi - ANTIPODAL_EXCLUSION


def test_right_invariant_error_projects_to_canonical(rng):
    from invobs import canonical_error_from_group, right_invariant_error
    from invobs.sampling import random_rotation
    from invobs.so3 import act

    y0 = np.array([0.0, 0.0, 1.0])
    for _ in range(100):
        Xh, X = random_rotation(rng), random_rotation(rng)
        Er = right_invariant_error(Xh, X)
        Z = random_rotation(rng)
        assert np.allclose(right_invariant_error(Xh @ Z, X @ Z), Er, atol=1e-12)
        assert np.allclose(act(Er, y0), canonical_error_from_group(Xh, X, y0), atol=1e-12)
