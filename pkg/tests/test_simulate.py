import math

import numpy as np
import pytest

import nadirwc as nw
from nadirwc import simulate as sim

from helpers import (
    aligned_indices,
    homogeneous_model,
    random_model,
    ring_laplacian,
    strong_ring_model,
)


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            nw.SimConfig(step=0.0, horizon=1.0)
        with pytest.raises(ValueError):
            nw.SimConfig(step=0.1, horizon=0.05)
        with pytest.raises(ValueError):
            nw.SimConfig(step=0.01, horizon=1.0, method="euler")


class TestStepResponse:
    def test_single_unit_closed_form(self):
        model = nw.NetworkModel.from_buses(
            np.array([1.0]), np.array([1.0]), np.zeros((1, 1)), 50.0
        )
        traj = nw.simulate_step_response(
            model, np.array([1.0]), nw.SimConfig(step=1e-3, horizon=2.0)
        )
        for t, expected in [
            (0.5, 0.3934693402873666),
            (1.0, 0.6321205588285577),
            (2.0, 0.8646647167633873),
        ]:
            k = int(round(t / 1e-3))
            assert traj.omega[0, k] == pytest.approx(expected, abs=1e-8)

    def test_zero_disturbance_stays_at_rest(self):
        model = random_model(4, seed=2)
        traj = nw.simulate_step_response(
            model, np.zeros(4), nw.SimConfig(step=1e-3, horizon=0.5)
        )
        assert np.array_equal(traj.omega, np.zeros_like(traj.omega))

    def test_matches_modal_reconstruction(self):
        model = random_model(6, seed=14)
        basis = nw.modal_basis(model)
        rng = np.random.default_rng(0)
        u0 = rng.standard_normal(6)
        horizon = 5.0 * model.rep_inertia / model.rep_damping
        step = 0.001
        traj = nw.simulate_step_response(
            model, u0, nw.SimConfig(step=step, horizon=horizon)
        )
        coarse = np.arange(1, int(horizon / 0.01)) * 0.01
        modal = nw.frequency_response(
            basis, nw.decompose_disturbance(u0, basis), coarse
        )
        idx = aligned_indices(coarse, step)
        assert np.max(np.abs(modal.omega - traj.omega[:, idx])) <= 1e-6

    def test_works_for_heterogeneous_models(self):
        inertia = np.array([1.0, 5.0, 2.0])
        damping = np.array([2.0, 2.0, 2.0])  # not proportional
        model = nw.NetworkModel.from_buses(
            inertia, damping, ring_laplacian(3, 4.0), 50.0
        )
        assert not model.proportional
        traj = nw.simulate_step_response(
            model, np.array([1.0, 0.0, 0.0]), nw.SimConfig(step=1e-3, horizon=1.0)
        )
        assert np.all(np.isfinite(traj.omega))

    def test_guard_violation_raises(self):
        model = strong_ring_model(4)
        limit = nw.stability_limit(model)
        with pytest.raises(ValueError, match="stability guard"):
            nw.simulate_step_response(
                model, np.zeros(4), nw.SimConfig(step=2.0 * limit, horizon=1.0)
            )

    def test_divergence_detected_when_guard_bypassed(self, monkeypatch):
        model = strong_ring_model(6)
        monkeypatch.setattr(sim, "stability_limit", lambda m, safety=20.0: math.inf)
        u0 = np.zeros(6)
        u0[0] = 1.0  # excites the stiff oscillatory modes
        with pytest.raises(RuntimeError, match="diverged"):
            nw.simulate_step_response(
                model, u0, nw.SimConfig(step=1.0, horizon=300.0)
            )

    def test_dimension_mismatch(self):
        model = random_model(3, seed=1)
        with pytest.raises(ValueError):
            nw.simulate_step_response(
                model, np.zeros(4), nw.SimConfig(step=1e-3, horizon=0.1)
            )

    def test_energy_accounting_is_dissipative(self):
        # kinetic plus coupling energy minus injected work must not grow
        model = random_model(5, seed=33)
        rng = np.random.default_rng(1)
        u0 = rng.standard_normal(5)
        traj = nw.simulate_step_response(
            model, u0, nw.SimConfig(step=5e-4, horizon=1.5)
        )
        omega, angle = traj.omega, traj.angles
        kinetic = 0.5 * np.einsum("i,it,it->t", model.inertia, omega, omega)
        coupling = 0.5 * np.einsum("it,ij,jt->t", angle, model.laplacian, angle)
        injected = u0 @ angle
        balance = kinetic + coupling - injected
        drift = np.diff(balance)
        scale = np.max(np.abs(balance)) + 1e-30
        assert np.all(drift <= 1e-10 * scale)

    def test_step_halving_shows_fourth_order(self):
        model = random_model(4, seed=44)
        basis = nw.modal_basis(model)
        rng = np.random.default_rng(2)
        u0 = rng.standard_normal(4)
        horizon = 1.0
        coarse = np.arange(1, 11) * 0.1
        ref = nw.frequency_response(
            basis, nw.decompose_disturbance(u0, basis), coarse
        ).omega

        steps = [0.01, 0.005, 0.0025, 0.00125]
        errors = []
        for h in steps:
            traj = nw.simulate_step_response(
                model, u0, nw.SimConfig(step=h, horizon=horizon)
            )
            idx = aligned_indices(coarse, h)
            errors.append(np.max(np.abs(traj.omega[:, idx] - ref)))
        for coarse_err, fine_err in zip(errors, errors[1:]):
            if fine_err < 1e-13:
                break
            assert 8.0 < coarse_err / fine_err < 32.0


class TestPerBusNadir:
    def test_monotone_drift_peaks_at_horizon(self):
        model = nw.NetworkModel.from_buses(
            np.array([1.0]), np.array([1.0]), np.zeros((1, 1)), 50.0
        )
        traj = nw.simulate_step_response(
            model, np.array([1.0]), nw.SimConfig(step=1e-3, horizon=1.0)
        )
        values, times = nw.per_bus_nadir(traj)
        assert times[0] == pytest.approx(traj.times[-1])
        assert values[0] == pytest.approx(abs(traj.omega[0, -1]))

    def test_decaying_sinusoid_argmax(self):
        a, b = 0.35, 7.0
        t = np.arange(0.0, 3.0, 1e-3)
        series = np.exp(-a * t) * np.sin(b * t)
        traj = nw.Trajectory(times=t, omega=series[None, :])
        values, times = nw.per_bus_nadir(traj)
        t_star = math.atan2(b, a) / b
        assert abs(times[0] - t_star) <= 1e-3
        assert values[0] == pytest.approx(
            math.exp(-a * t_star) * math.sin(b * t_star), abs=1e-5
        )

    def test_zero_trajectory(self):
        traj = nw.Trajectory(times=np.array([0.0, 0.1]), omega=np.zeros((3, 2)))
        values, times = nw.per_bus_nadir(traj)
        assert np.array_equal(values, np.zeros(3))
        assert np.array_equal(times, np.zeros(3))

    def test_tie_takes_earliest_time(self):
        t = np.array([0.0, 0.1, 0.2, 0.3])
        omega = np.array([[0.0, 1.0, 1.0, 0.5]])
        _, times = nw.per_bus_nadir(nw.Trajectory(times=t, omega=omega))
        assert times[0] == pytest.approx(0.1)


class TestSampleNormBall:
    @pytest.mark.parametrize("kind", ["2", "inf", "1"])
    def test_feasible_boundary_and_deterministic(self, kind):
        rho = 0.5
        sset = nw.sample_norm_ball(kind, rho, 400, n=6, seed=9)
        primal = {"2": 2, "inf": np.inf, "1": 1}[kind]
        norms = np.array([np.linalg.norm(u, ord=primal) for u in sset.u0])
        assert np.all(norms <= rho * (1.0 + 1e-12))
        assert norms.max() == pytest.approx(rho, abs=1e-12)
        assert norms.min() > 0.0
        again = nw.sample_norm_ball(kind, rho, 400, n=6, seed=9)
        assert np.array_equal(sset.u0, again.u0)

    def test_inf_kind_is_coordinatewise_bounded(self):
        sset = nw.sample_norm_ball("inf", 0.3, 200, n=4, seed=3)
        assert np.all(np.abs(sset.u0) <= 0.3 + 1e-15)

    def test_boundary_fraction(self):
        rho = 1.0
        sset = nw.sample_norm_ball("2", rho, 100, n=5, seed=1, boundary_fraction=0.25)
        norms = np.linalg.norm(sset.u0, axis=1)
        assert np.sum(np.abs(norms - rho) <= 1e-12) == 25

    def test_validation(self):
        with pytest.raises(ValueError):
            nw.sample_norm_ball("2", 1.0, 0, n=3, seed=0)
        with pytest.raises(ValueError):
            nw.sample_norm_ball("2", 0.0, 10, n=3, seed=0)
        with pytest.raises(ValueError):
            nw.sample_norm_ball("2", 1.0, 10, n=3, seed=0, boundary_fraction=1.5)


class TestDominance:
    def test_theorem_regime_bound_and_tight_worst_input(self):
        n, m, d, rho = 8, 4.38, 16.0, 0.5
        model = strong_ring_model(n, m, d)
        spec = nw.DisturbanceSpec("2", rho)
        result = nw.worst_case_search(model, spec, dt=0.01, steps=200)
        samples = nw.sample_norm_ball("2", rho, 200, n=n, seed=5)
        report = nw.dominance_report(model, spec, result, None, samples)
        bound = rho / (d * math.sqrt(n))
        assert np.all(report.sample_nadirs <= bound + 1e-6)
        assert report.fraction_dominated == 1.0
        assert report.ok
        # steady-state argmax: the worst input settles onto the analytic value
        assert result.steady_state_attained
        assert report.worst_input_rel_gap <= 0.01

    @pytest.mark.parametrize("kind", ["2", "inf", "1"])
    def test_random_model_dominated(self, kind):
        model = random_model(8, seed=3, weight_scale=5.0)
        spec = nw.DisturbanceSpec(kind, 0.5)
        result = nw.worst_case_search(model, spec, dt=0.01, steps=100)
        samples = nw.sample_norm_ball(kind, spec.rho, 150, n=8, seed=11)
        report = nw.dominance_report(model, spec, result, None, samples)
        assert report.fraction_dominated == 1.0
        assert report.max_excess <= 1e-6

    def test_worst_input_reproduces_value_within_grid_drift(self):
        model = homogeneous_model(3, ring_laplacian(3, 2.0))
        spec = nw.DisturbanceSpec("2", 0.5)
        result = nw.worst_case_search(model, spec, dt=0.01, steps=300)
        assert not result.steady_state_attained
        samples = nw.sample_norm_ball("2", spec.rho, 10, n=3, seed=2)
        report = nw.dominance_report(model, spec, result, None, samples)
        assert report.worst_input_rel_gap <= 1e-3
        assert abs(report.worst_input_time - result.time) <= result.dt + 1e-12

    def test_explicit_config_must_divide_grid(self):
        model = random_model(4, seed=6)
        spec = nw.DisturbanceSpec("2", 0.5)
        result = nw.worst_case_search(model, spec, dt=0.01, steps=20)
        samples = nw.sample_norm_ball("2", 0.5, 5, n=4, seed=0)
        cfg = nw.SimConfig(step=0.0003, horizon=1.0)  # does not divide 0.01
        with pytest.raises(ValueError, match="divide"):
            nw.dominance_report(model, spec, result, cfg, samples)

    def test_mismatched_samples_rejected(self):
        model = random_model(4, seed=6)
        spec = nw.DisturbanceSpec("2", 0.5)
        result = nw.worst_case_search(model, spec, dt=0.01, steps=20)
        wrong_dim = nw.sample_norm_ball("2", 0.5, 5, n=3, seed=0)
        with pytest.raises(ValueError, match="dimension"):
            nw.dominance_report(model, spec, result, None, wrong_dim)
        wrong_kind = nw.sample_norm_ball("1", 0.5, 5, n=4, seed=0)
        with pytest.raises(ValueError, match="norm kind"):
            nw.dominance_report(model, spec, result, None, wrong_kind)


class TestStabilityLimit:
    def test_isolated_buses_limited_by_drift(self):
        model = homogeneous_model(3, np.zeros((3, 3)), m=2.0, d=4.0)
        assert nw.stability_limit(model) == pytest.approx((2.0 / 4.0) / 20.0)

    def test_coupling_tightens_the_limit(self):
        weak = homogeneous_model(4, ring_laplacian(4, 1.0))
        strong = homogeneous_model(4, ring_laplacian(4, 10000.0))
        assert nw.stability_limit(strong) < nw.stability_limit(weak)
