import numpy as np
import pytest

import nadirwc as nw
from nadirwc import kernels

from helpers import random_model

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba unavailable")


class TestBackendSelection:
    def test_resolution_rules(self, monkeypatch):
        monkeypatch.setenv(kernels.ENV_BACKEND, "numpy")
        assert kernels._resolve_backend() == "numpy"
        monkeypatch.setenv(kernels.ENV_BACKEND, "auto")
        assert kernels._resolve_backend() in ("numba", "numpy")
        monkeypatch.delenv(kernels.ENV_BACKEND)
        assert kernels._resolve_backend() in ("numba", "numpy")
        monkeypatch.setenv(kernels.ENV_BACKEND, "something-else")
        with pytest.raises(ValueError):
            kernels._resolve_backend()

    def test_thread_cap_parsing(self, monkeypatch):
        monkeypatch.setenv(kernels.ENV_THREADS, "3")
        assert kernels._resolve_thread_cap() == 3
        monkeypatch.setenv(kernels.ENV_THREADS, "")
        assert kernels._resolve_thread_cap() is None
        monkeypatch.setenv(kernels.ENV_THREADS, "zero")
        with pytest.raises(ValueError):
            kernels._resolve_thread_cap()
        monkeypatch.setenv(kernels.ENV_THREADS, "0")
        with pytest.raises(ValueError):
            kernels._resolve_thread_cap()

    def test_active_backend_reported(self):
        assert nw.backend() in ("numba", "numpy")

    def test_norm_kind_codes(self):
        assert set(kernels.NORM_KIND_CODES) == {"2", "inf", "1"}
        assert sorted(kernels.NORM_KIND_CODES.values()) == [0, 1, 2]


def _table_inputs(seed, n=7, n_times=40):
    model = random_model(n, seed=seed)
    basis = nw.modal_basis(model)
    times = np.arange(1, n_times + 1) * 0.02
    resp = kernels._mode_response_table_numpy(
        basis.eigvals, basis.rep_inertia, basis.rep_damping, times
    )
    return basis, times, resp


class TestBackendEquivalence:
    @needs_numba
    def test_mode_response_table(self):
        basis, times, _ = _table_inputs(seed=42)
        a = kernels._mode_response_table_numpy(
            basis.eigvals, basis.rep_inertia, basis.rep_damping, times
        )
        b = kernels._mode_response_table_numba(
            basis.eigvals, basis.rep_inertia, basis.rep_damping, times
        )
        assert np.allclose(a, b, rtol=1e-13, atol=1e-16)

    @needs_numba
    @pytest.mark.parametrize("kind_code", [0, 1, 2])
    def test_nadir_dual_table(self, kind_code):
        basis, _, resp = _table_inputs(seed=7)
        args = (
            basis.scaled_eigvecs,
            np.ascontiguousarray(basis.eigvecs.T),
            resp,
            1.0 / np.sqrt(basis.r),
            0.5,
            kind_code,
        )
        a = kernels._nadir_dual_table_numpy(*args)
        b = kernels._nadir_dual_table_numba(*args)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-14)

    @needs_numba
    def test_rk4_swing(self, rng):
        model = random_model(6, seed=11)
        u = np.ascontiguousarray(rng.standard_normal((6, 23)))
        args = (model.inertia, model.damping, model.laplacian, u, 1e-3, 500, 5)
        o_np, a_np = kernels._rk4_swing_numpy(*args)
        o_nb, a_nb = kernels._rk4_swing_numba(*args)
        assert np.allclose(o_np, o_nb, rtol=1e-9, atol=1e-14)
        assert np.allclose(a_np, a_nb, rtol=1e-9, atol=1e-14)


class TestKernelContracts:
    def test_mode_response_table_matches_scalar_dispatch(self):
        basis, times, resp = _table_inputs(seed=19)
        for k in range(basis.n):
            kin = basis.kinetics(k)
            row = nw.mode_response(times, kin, basis.rep_inertia, basis.rep_damping)
            assert np.allclose(resp[k], row, rtol=1e-13, atol=1e-16)

    def test_rk4_rejects_bad_step_counts(self):
        model = random_model(3, seed=0)
        u = np.zeros((3, 1))
        with pytest.raises(ValueError):
            kernels.rk4_swing(model.inertia, model.damping, model.laplacian, u, 1e-3, 0)
        with pytest.raises(ValueError):
            kernels.rk4_swing(
                model.inertia, model.damping, model.laplacian, u, 1e-3, 10, 3
            )

    def test_rk4_includes_initial_rest_state(self):
        model = random_model(3, seed=1)
        u = np.ones((3, 2))
        omega, angle = kernels.rk4_swing(
            model.inertia, model.damping, model.laplacian, u, 1e-3, 10, 5
        )
        assert omega.shape == (2, 3, 3)
        assert np.array_equal(omega[:, 0, :], np.zeros((2, 3)))
        assert np.array_equal(angle[:, 0, :], np.zeros((2, 3)))

    def test_overdamped_helper_is_stable_at_extreme_ratio(self):
        # far over-damped: naive pole subtraction would overflow/cancel
        t = np.linspace(0.0, 50.0, 200)
        vals = kernels.response_overdamped(t, 2.0, 10.0, 1e6)
        assert np.all(np.isfinite(vals))
        assert np.all(vals >= 0.0)
