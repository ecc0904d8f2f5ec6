"""Hot numeric kernels, numba-accelerated with a pure-numpy fallback.

Three inner loops dominate runtime: the per-mode step-response table, the
dual-norm objective table filled over the (bus, time) grid, and the
fixed-step RK4 integration of the coupled swing dynamics. Each exists in
two implementations that produce the same values up to rounding:

* a pure-numpy version built from vectorized array expressions, and
* a numba ``@njit`` version with hand-written loops, parallelized with
  ``prange`` over independent work items (time columns, disturbance
  samples).

The backend is fixed once at import. ``NADIR_WC_BACKEND=numpy`` forces
the fallback, ``=numba`` requires numba (ImportError if missing); unset
or ``auto`` tries numba and silently falls back. ``NADIR_WC_THREADS``
caps the numba thread pool; it has no effect on the numpy path, whose
matrix products use whatever BLAS threading is configured.

Run ``python benchmarks/bench_backends.py`` for a side-by-side timing of
both paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

ENV_BACKEND = "NADIR_WC_BACKEND"
ENV_THREADS = "NADIR_WC_THREADS"

# Damping-ratio band treated as critically damped; both neighbouring
# closed forms lose precision as the ratio approaches 1.
CRITICAL_BAND = 1e-9

# Norm kind of the disturbance constraint -> integer code used by the
# table kernels (2-norm, max-norm, 1-norm budgets respectively).
NORM_KIND_CODES = {"2": 0, "inf": 1, "1": 2}

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _resolve_backend() -> str:
    choice = os.environ.get(ENV_BACKEND, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise ImportError(
                f"{ENV_BACKEND}=numba requested but numba is not importable"
            )
        return "numba"
    raise ValueError(
        f"unrecognized {ENV_BACKEND}={choice!r}; use 'numba', 'numpy' or 'auto'"
    )


def _resolve_thread_cap() -> int | None:
    raw = os.environ.get(ENV_THREADS, "").strip()
    if not raw:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{ENV_THREADS} must be >= 1, got {cap}")
    return cap


BACKEND = _resolve_backend()
THREAD_CAP = _resolve_thread_cap()

if HAVE_NUMBA and THREAD_CAP is not None:
    numba.set_num_threads(min(THREAD_CAP, numba.config.NUMBA_NUM_THREADS))


def backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


# ---------------------------------------------------------------------------
# Closed-form step responses of a single mode
#
# A mode with stiffness lam on the representative unit (m, d) responds to a
# unit step with the inverse transform of 1/(m s^2 + d s + lam). These
# helpers accept scalar or array t and are the reference the table kernels
# must reproduce.
# ---------------------------------------------------------------------------


def response_zero_mode(t, m: float, d: float):
    """Rigid-drift response (1/d)(1 - exp(-d t / m)), monotone up to 1/d."""
    return -np.expm1(-(d / m) * t) / d


def response_underdamped(t, m: float, omega_n: float, zeta: float):
    """Decaying sinusoid for damping ratio < 1."""
    omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
    return np.exp(-zeta * omega_n * t) * np.sin(omega_d * t) / (m * omega_d)


def response_critical(t, m: float, omega_n: float):
    """Double-pole response t exp(-omega_n t) / m."""
    return t * np.exp(-omega_n * t) / m


def response_overdamped(t, m: float, omega_n: float, zeta: float):
    """Two-real-pole response for damping ratio > 1.

    Evaluated through the decay rates sig1 >= sig2 > 0 of the poles, with
    sig2 formed from sig1 * sig2 = omega_n**2 and the difference through
    expm1, so large zeta * omega_n * t neither overflows nor cancels.
    """
    root = math.sqrt(zeta * zeta - 1.0)
    sig1 = omega_n * (zeta + root)
    sig2 = omega_n * omega_n / sig1
    gap = sig1 - sig2
    return np.exp(-sig2 * t) * (-np.expm1(-gap * t)) / (m * gap)


def _mode_response_table_numpy(
    eigvals: np.ndarray, m: float, d: float, times: np.ndarray
) -> np.ndarray:
    out = np.empty((eigvals.shape[0], times.shape[0]))
    for k, lam in enumerate(eigvals):
        if lam == 0.0:
            out[k] = response_zero_mode(times, m, d)
            continue
        omega_n = math.sqrt(lam / m)
        zeta = d / (2.0 * math.sqrt(lam * m))
        if abs(zeta - 1.0) <= CRITICAL_BAND:
            out[k] = response_critical(times, m, omega_n)
        elif zeta < 1.0:
            out[k] = response_underdamped(times, m, omega_n, zeta)
        else:
            out[k] = response_overdamped(times, m, omega_n, zeta)
    return out


def _nadir_dual_table_numpy(
    scaled_eigvecs: np.ndarray,
    eigvecs_t: np.ndarray,
    resp: np.ndarray,
    inv_sqrt_r: np.ndarray,
    rho: float,
    kind_code: int,
) -> np.ndarray:
    n = scaled_eigvecs.shape[0]
    n_times = resp.shape[1]
    table = np.empty((n, n_times))
    for j in range(n_times):
        # gain[:, i] is the disturbance-to-deviation gain vector of bus i
        # at this time; its dual norm is the per-bus objective.
        gain = (scaled_eigvecs * resp[:, j]) @ eigvecs_t
        if kind_code == 0:
            red = np.sqrt(np.einsum("ki,ki->i", gain, gain))
        elif kind_code == 1:
            red = np.abs(gain).sum(axis=0)
        else:
            red = np.abs(gain).max(axis=0)
        table[:, j] = rho * inv_sqrt_r * red
    return table


def _rk4_swing_numpy(
    inertia: np.ndarray,
    damping: np.ndarray,
    laplacian: np.ndarray,
    u_cols: np.ndarray,
    step: float,
    n_steps: int,
    stride: int,
) -> tuple[np.ndarray, np.ndarray]:
    n, n_samples = u_cols.shape
    inv_m = (1.0 / inertia)[:, None]
    dmp = damping[:, None]
    n_rec = n_steps // stride + 1
    omega_rec = np.zeros((n_samples, n_rec, n))
    angle_rec = np.zeros((n_samples, n_rec, n))
    angle = np.zeros((n, n_samples))
    omega = np.zeros((n, n_samples))
    rec = 1
    for istep in range(n_steps):
        k1a = omega
        k1o = (u_cols - dmp * omega - laplacian @ angle) * inv_m
        a2 = angle + 0.5 * step * k1a
        o2 = omega + 0.5 * step * k1o
        k2a = o2
        k2o = (u_cols - dmp * o2 - laplacian @ a2) * inv_m
        a3 = angle + 0.5 * step * k2a
        o3 = omega + 0.5 * step * k2o
        k3a = o3
        k3o = (u_cols - dmp * o3 - laplacian @ a3) * inv_m
        a4 = angle + step * k3a
        o4 = omega + step * k3o
        k4a = o4
        k4o = (u_cols - dmp * o4 - laplacian @ a4) * inv_m
        angle = angle + (step / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        omega = omega + (step / 6.0) * (k1o + 2.0 * k2o + 2.0 * k3o + k4o)
        if (istep + 1) % stride == 0:
            omega_rec[:, rec, :] = omega.T
            angle_rec[:, rec, :] = angle.T
            rec += 1
    return omega_rec, angle_rec


if HAVE_NUMBA:

    @njit(cache=True)
    def _mode_response_table_numba(eigvals, m, d, times):  # pragma: no cover
        n_modes = eigvals.shape[0]
        n_times = times.shape[0]
        out = np.empty((n_modes, n_times))
        for k in range(n_modes):
            lam = eigvals[k]
            if lam == 0.0:
                for j in range(n_times):
                    out[k, j] = -math.expm1(-(d / m) * times[j]) / d
                continue
            omega_n = math.sqrt(lam / m)
            zeta = d / (2.0 * math.sqrt(lam * m))
            if abs(zeta - 1.0) <= CRITICAL_BAND:
                for j in range(n_times):
                    out[k, j] = times[j] * math.exp(-omega_n * times[j]) / m
            elif zeta < 1.0:
                omega_d = omega_n * math.sqrt(1.0 - zeta * zeta)
                for j in range(n_times):
                    t = times[j]
                    out[k, j] = (
                        math.exp(-zeta * omega_n * t)
                        * math.sin(omega_d * t)
                        / (m * omega_d)
                    )
            else:
                root = math.sqrt(zeta * zeta - 1.0)
                sig1 = omega_n * (zeta + root)
                sig2 = omega_n * omega_n / sig1
                gap = sig1 - sig2
                for j in range(n_times):
                    t = times[j]
                    out[k, j] = (
                        math.exp(-sig2 * t) * (-math.expm1(-gap * t)) / (m * gap)
                    )
        return out

    @njit(cache=True, parallel=True)
    def _nadir_dual_table_numba(
        scaled_eigvecs, eigvecs_t, resp, inv_sqrt_r, rho, kind_code
    ):  # pragma: no cover
        n = scaled_eigvecs.shape[0]
        n_times = resp.shape[1]
        table = np.empty((n, n_times))
        for j in prange(n_times):
            gain = np.zeros((n, n))
            for row in range(n):
                for k in range(n):
                    s = scaled_eigvecs[row, k] * resp[k, j]
                    for i in range(n):
                        gain[row, i] += s * eigvecs_t[k, i]
            if kind_code == 0:
                for i in range(n):
                    acc = 0.0
                    for row in range(n):
                        acc += gain[row, i] * gain[row, i]
                    table[i, j] = rho * inv_sqrt_r[i] * math.sqrt(acc)
            elif kind_code == 1:
                for i in range(n):
                    acc = 0.0
                    for row in range(n):
                        acc += abs(gain[row, i])
                    table[i, j] = rho * inv_sqrt_r[i] * acc
            else:
                for i in range(n):
                    acc = 0.0
                    for row in range(n):
                        v = abs(gain[row, i])
                        if v > acc:
                            acc = v
                    table[i, j] = rho * inv_sqrt_r[i] * acc
        return table

    @njit(cache=True, parallel=True)
    def _rk4_swing_numba(
        inertia, damping, laplacian, u_cols, step, n_steps, stride
    ):  # pragma: no cover
        n, n_samples = u_cols.shape
        n_rec = n_steps // stride + 1
        omega_rec = np.zeros((n_samples, n_rec, n))
        angle_rec = np.zeros((n_samples, n_rec, n))
        for col in prange(n_samples):
            angle = np.zeros(n)
            omega = np.zeros(n)
            a_eval = np.zeros(n)
            o_eval = np.zeros(n)
            a_sum = np.zeros(n)
            o_sum = np.zeros(n)
            k_ang = np.zeros(n)
            k_omg = np.zeros(n)
            rec = 1
            for istep in range(n_steps):
                for i in range(n):
                    a_eval[i] = angle[i]
                    o_eval[i] = omega[i]
                    a_sum[i] = 0.0
                    o_sum[i] = 0.0
                for stage in range(4):
                    weight = 2.0 if (stage == 1 or stage == 2) else 1.0
                    advance = step if stage == 2 else 0.5 * step
                    # evaluate the full stage before touching the stage state;
                    # the coupling sum must see one consistent a_eval
                    for i in range(n):
                        acc = 0.0
                        for jj in range(n):
                            acc += laplacian[i, jj] * a_eval[jj]
                        k_omg[i] = (
                            u_cols[i, col] - damping[i] * o_eval[i] - acc
                        ) / inertia[i]
                        k_ang[i] = o_eval[i]
                    for i in range(n):
                        a_sum[i] += weight * k_ang[i]
                        o_sum[i] += weight * k_omg[i]
                        if stage < 3:
                            a_eval[i] = angle[i] + advance * k_ang[i]
                            o_eval[i] = omega[i] + advance * k_omg[i]
                for i in range(n):
                    angle[i] += (step / 6.0) * a_sum[i]
                    omega[i] += (step / 6.0) * o_sum[i]
                if (istep + 1) % stride == 0:
                    for i in range(n):
                        omega_rec[col, rec, i] = omega[i]
                        angle_rec[col, rec, i] = angle[i]
                    rec += 1
        return omega_rec, angle_rec


def _as_c(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def mode_response_table(
    eigvals: np.ndarray, m: float, d: float, times: np.ndarray
) -> np.ndarray:
    """Step response of every mode at every time, shape (n_modes, n_times)."""
    eigvals = _as_c(eigvals)
    times = _as_c(times)
    if BACKEND == "numba":
        return _mode_response_table_numba(eigvals, float(m), float(d), times)
    return _mode_response_table_numpy(eigvals, float(m), float(d), times)


def nadir_dual_table(
    scaled_eigvecs: np.ndarray,
    eigvecs_t: np.ndarray,
    resp: np.ndarray,
    inv_sqrt_r: np.ndarray,
    rho: float,
    kind_code: int,
) -> np.ndarray:
    """Worst-deviation table over the (bus, time) grid for one norm budget.

    ``scaled_eigvecs`` is the eigenvector matrix pre-divided by sqrt of the
    per-bus scale, ``eigvecs_t`` its unscaled transpose, ``resp`` the
    per-mode response table. Entry (i, j) is rho / sqrt(r_i) times the dual
    norm of bus i's gain vector at time j.
    """
    args = (
        _as_c(scaled_eigvecs),
        _as_c(eigvecs_t),
        _as_c(resp),
        _as_c(inv_sqrt_r),
        float(rho),
        int(kind_code),
    )
    if BACKEND == "numba":
        return _nadir_dual_table_numba(*args)
    return _nadir_dual_table_numpy(*args)


def rk4_swing(
    inertia: np.ndarray,
    damping: np.ndarray,
    laplacian: np.ndarray,
    u_cols: np.ndarray,
    step: float,
    n_steps: int,
    stride: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 on the coupled second-order bus dynamics.

    Integrates angle' = omega, inertia * omega' = u - damping * omega -
    laplacian @ angle from rest, one column of ``u_cols`` per disturbance
    sample, recording every ``stride``-th step (plus the initial state).
    Returns (omega, angle) arrays of shape (n_samples, n_records, n).
    """
    if n_steps < 1 or stride < 1 or n_steps % stride != 0:
        raise ValueError("n_steps must be a positive multiple of stride")
    args = (
        _as_c(inertia),
        _as_c(damping),
        _as_c(laplacian),
        _as_c(u_cols),
        float(step),
        int(n_steps),
        int(stride),
    )
    if BACKEND == "numba":
        return _rk4_swing_numba(*args)
    return _rk4_swing_numpy(*args)
