"""Independent time-domain oracle for the coupled swing dynamics.

Integrates the closed loop directly in (angle, frequency) coordinates
with fixed-step classical RK4: angle' = omega and
m_i * omega_i' = u_i - d_i * omega_i - (L angle)_i, from rest. This path
deliberately never touches the eigendecomposition, so agreement with the
modal reconstruction is a genuine cross-check rather than a tautology; it
also works for non-proportional models. Monte Carlo sampling of the
disturbance ball and the dominance comparison against the analytic table
live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .modal import Trajectory, coi_frequency
from .nadir import DisturbanceSpec, NadirResult, canonical_norm
from .network import NetworkModel

# The integrator step must stay below the fastest system time scale by
# this factor; see stability_limit.
STABILITY_SAFETY = 20.0

DOMINANCE_SLACK = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    step: float
    horizon: float
    method: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError("step must be finite and > 0")
        if not (math.isfinite(self.horizon) and self.horizon >= self.step):
            raise ValueError("horizon must be >= step")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")


@dataclass(frozen=True)
class SampleSet:
    """Disturbance vectors drawn from one norm ball, deterministic per seed."""

    norm: str
    rho: float
    seed: int
    count: int
    u0: np.ndarray  # (count, n)

    def __post_init__(self):
        arr = np.asarray(self.u0, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "u0", arr)


@dataclass(frozen=True)
class DominanceReport:
    """Simulated nadirs of sampled disturbances against the analytic worst."""

    worst_value: float
    count: int
    fraction_dominated: float
    max_excess: float  # max over samples of (simulated nadir - worst value)
    sample_nadirs: np.ndarray  # (count,)
    slack: float
    worst_input_nadir: float  # simulated nadir under the recovered worst input
    worst_input_time: float
    worst_input_rel_gap: float

    def __post_init__(self):
        arr = np.asarray(self.sample_nadirs, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "sample_nadirs", arr)

    @property
    def ok(self) -> bool:
        return self.fraction_dominated == 1.0


def stability_limit(model: NetworkModel, safety: float = STABILITY_SAFETY) -> float:
    """Largest integrator step the stability guard allows for this model.

    Uses the per-bus drift time constant m_i / d_i and a Gershgorin bound
    on the scaled coupling spectrum (no eigensolve, keeping this path
    independent of the modal one); the bound is conservative, so the
    guard only ever tightens.
    """
    drift = float(np.min(model.inertia / model.damping))
    inv_sqrt_m = 1.0 / np.sqrt(model.inertia)
    coupling = np.abs(model.laplacian) * np.outer(inv_sqrt_m, inv_sqrt_m)
    lam_bound = float(coupling.sum(axis=1).max())
    limit = drift
    if lam_bound > 0:
        limit = min(limit, 2.0 * math.pi / math.sqrt(lam_bound))
    return limit / safety


def simulate_step_response(
    model: NetworkModel, u0: np.ndarray, cfg: SimConfig
) -> Trajectory:
    """Integrate the response to a step disturbance from rest.

    Works for heterogeneous models; raises if the step violates the
    stability guard or the state leaves the finite range (which a stable
    model cannot do, so it signals bad input).
    """
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (model.n,):
        raise ValueError(f"u0 must have length {model.n}, got shape {u0.shape}")
    limit = stability_limit(model)
    if cfg.step > limit:
        raise ValueError(
            f"step {cfg.step:g} s violates the stability guard ({limit:g} s)"
        )
    n_steps = max(1, int(math.ceil(cfg.horizon / cfg.step - 1e-9)))
    omega_rec, angle_rec = kernels.rk4_swing(
        model.inertia, model.damping, model.laplacian, u0[:, None], cfg.step, n_steps
    )
    omega = omega_rec[0].T
    angles = angle_rec[0].T
    if not np.all(np.isfinite(omega)):
        raise RuntimeError("integration diverged; state is not finite")
    times = np.arange(n_steps + 1) * cfg.step
    return Trajectory(
        times=times,
        omega=omega,
        coi=coi_frequency(omega, model.inertia),
        angles=angles,
    )


def per_bus_nadir(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Per-bus max |deviation| and the earliest grid time attaining it."""
    mags = np.abs(traj.omega)
    if mags.shape[1] == 0:
        raise ValueError("trajectory is empty")
    idx = mags.argmax(axis=1)
    values = mags[np.arange(mags.shape[0]), idx]
    return values, traj.times[idx]


def sample_norm_ball(
    kind: str,
    rho: float,
    count: int,
    n: int,
    seed: int,
    boundary_fraction: float = 0.5,
) -> SampleSet:
    """Draw feasible disturbance vectors from the norm ball of radius rho.

    2-norm samples use Gaussian directions; max-norm samples are uniform
    per coordinate; 1-norm samples put Dirichlet weights with random
    signs on the coordinates. The first round(count * boundary_fraction)
    samples are scaled exactly onto the boundary, the rest fill the
    interior. Deterministic for a fixed seed.
    """
    kind = canonical_norm(kind)
    if count < 1 or n < 1:
        raise ValueError("count and n must be >= 1")
    if not (0.0 <= boundary_fraction <= 1.0):
        raise ValueError("boundary_fraction must be in [0, 1]")
    if not (math.isfinite(rho) and rho > 0):
        raise ValueError("rho must be finite and > 0")
    rng = np.random.default_rng(seed)
    n_boundary = int(round(count * boundary_fraction))

    if kind == "2":
        pts = rng.standard_normal((count, n))
        norms = np.linalg.norm(pts, axis=1)
        while np.any(norms == 0.0):
            bad = norms == 0.0
            pts[bad] = rng.standard_normal((int(bad.sum()), n))
            norms = np.linalg.norm(pts, axis=1)
        pts = pts / norms[:, None] * rho
    elif kind == "inf":
        pts = rng.uniform(-rho, rho, size=(count, n))
        peak = np.abs(pts).max(axis=1)
        while np.any(peak == 0.0):
            bad = peak == 0.0
            pts[bad] = rng.uniform(-rho, rho, size=(int(bad.sum()), n))
            peak = np.abs(pts).max(axis=1)
        pts[:n_boundary] *= (rho / peak[:n_boundary])[:, None]
    else:
        weights = rng.dirichlet(np.ones(n), size=count)
        signs = rng.integers(0, 2, size=(count, n)) * 2 - 1
        pts = rho * signs * weights

    if kind in ("2", "1") and n_boundary < count:
        radial = rng.uniform(size=count - n_boundary) ** (1.0 / n)
        pts[n_boundary:] *= radial[:, None]
    return SampleSet(norm=kind, rho=rho, seed=seed, count=count, u0=pts)


def _integration_grid(dt: float, steps: int, model: NetworkModel, cfg):
    """Substep count per output interval honoring the stability guard."""
    if cfg is not None:
        stride = max(1, int(round(dt / cfg.step)))
        if abs(stride * cfg.step - dt) > 1e-9 * dt:
            raise ValueError("cfg.step must divide the output spacing dt")
        return cfg.step, stride
    limit = stability_limit(model)
    stride = max(10, int(math.ceil(dt / limit)))
    return dt / stride, stride


def dominance_report(
    model: NetworkModel,
    spec: DisturbanceSpec,
    result: NadirResult,
    cfg: SimConfig | None,
    samples: SampleSet,
) -> DominanceReport:
    """Simulate every sample on the analysis grid and compare to the worst.

    Every simulated grid nadir must stay below the analytic worst value
    (within slack); the recovered worst input itself must reproduce it.
    When the worst is attained only in the steady-state limit, the worst
    input is simulated over twenty drift time constants and compared at
    the horizon instead.
    """
    if samples.u0.shape[1] != model.n:
        raise ValueError("sample dimension does not match the model")
    if samples.norm != spec.norm:
        raise ValueError("sample set norm kind does not match the spec")

    dt, steps = result.dt, result.steps
    step, stride = _integration_grid(dt, steps, model, cfg)
    omega_rec, _ = kernels.rk4_swing(
        model.inertia,
        model.damping,
        model.laplacian,
        samples.u0.T,
        step,
        steps * stride,
        stride,
    )
    if not np.all(np.isfinite(omega_rec)):
        raise RuntimeError("integration diverged; state is not finite")
    sample_nadirs = np.abs(omega_rec).max(axis=(1, 2))
    excess = sample_nadirs - result.value
    fraction = float(np.mean(excess <= DOMINANCE_SLACK))

    # Tightness of the recovered worst input at its own (bus, time).
    drift_tc = model.rep_inertia / model.rep_damping
    if result.steady_state_attained:
        horizon = 20.0 * drift_tc
        n_steps = int(math.ceil(horizon / (steps * dt))) * steps * stride
        worst_rec, _ = kernels.rk4_swing(
            model.inertia,
            model.damping,
            model.laplacian,
            result.u0[:, None],
            step,
            n_steps,
            stride,
        )
        series = np.abs(worst_rec[0, :, result.bus])
        worst_nadir = float(series[-1])
        worst_time = n_steps * step
    else:
        worst_rec, _ = kernels.rk4_swing(
            model.inertia,
            model.damping,
            model.laplacian,
            result.u0[:, None],
            step,
            steps * stride,
            stride,
        )
        series = np.abs(worst_rec[0, :, result.bus])
        idx = int(series.argmax())
        worst_nadir = float(series[idx])
        worst_time = idx * dt

    rel_gap = abs(worst_nadir - result.value) / result.value
    return DominanceReport(
        worst_value=result.value,
        count=samples.count,
        fraction_dominated=fraction,
        max_excess=float(excess.max()),
        sample_nadirs=sample_nadirs,
        slack=DOMINANCE_SLACK,
        worst_input_nadir=worst_nadir,
        worst_input_time=float(worst_time),
        worst_input_rel_gap=float(rel_gap),
    )
