"""Spectral coordinates of the network and closed-form modal responses.

Scaling the Laplacian symmetrically by the per-bus proportions decouples
the frequency dynamics into n independent second-order modes. Each mode k
responds to a unit step along its eigendirection with a scalar kernel
h(t), the inverse transform of 1 / (m s^2 + d s + lambda_k) on the
representative unit (m, d); the full response is the superposition of the
modes, and the inertia-weighted average of the bus signals (the center of
inertia) is carried entirely by the zero-eigenvalue mode. Only the step
kernel h(t) is materialized here; the frequency-domain form of a mode is
s times its transform and is never needed explicitly.

Zero eigenvalues of any multiplicity use the first-order drift kernel
(1/d)(1 - exp(-d t / m)), which is what the partial-fraction inversion
gives at lambda = 0; this covers disconnected networks up to the fully
isolated-bus limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .network import NetworkModel

REGIME_ZERO = "zero-mode"
REGIME_UNDER = "under"
REGIME_CRITICAL = "critical"
REGIME_OVER = "over"

# |lambda| <= n * EIG_CLAMP_REL * max|L| is clamped to zero: symmetric
# eigensolvers return O(eps * ||L||) noise on the null space.
EIG_CLAMP_REL = 1e-10

# Eigenvalues below -NEG_EIG_REL * max|L| signal a non-PSD input.
NEG_EIG_REL = 1e-8


@dataclass(frozen=True)
class ModeKinetics:
    """Natural frequency, damping ratio and regime tag of one mode."""

    natural_freq: float  # rad/s; 0 for a zero mode
    damping_ratio: float  # dimensionless; inf for a zero mode
    regime: str

    def __post_init__(self):
        if self.regime not in (REGIME_ZERO, REGIME_UNDER, REGIME_CRITICAL, REGIME_OVER):
            raise ValueError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True)
class ModalBasis:
    """Eigen-coordinates of the scaled Laplacian, immutable once built."""

    eigvals: np.ndarray  # (n,) nondecreasing, zero modes clamped to 0
    eigvecs: np.ndarray  # (n, n) orthonormal columns
    r: np.ndarray  # per-bus scale
    rep_inertia: float
    rep_damping: float
    scaled_eigvecs: np.ndarray  # eigvecs row-divided by sqrt(r), cached

    def __post_init__(self):
        for name in ("eigvals", "eigvecs", "r", "scaled_eigvecs"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        gram_err = np.max(np.abs(self.eigvecs.T @ self.eigvecs - np.eye(self.n)))
        if gram_err > 1e-9:
            raise ValueError(f"eigenvector columns not orthonormal ({gram_err:.2e})")
        if np.any(np.diff(self.eigvals) < 0) or self.eigvals[0] < 0:
            raise ValueError("eigenvalues must be nonnegative and nondecreasing")

    @property
    def n(self) -> int:
        return self.eigvals.shape[0]

    @property
    def n_zero_modes(self) -> int:
        return int(np.count_nonzero(self.eigvals == 0.0))

    def kinetics(self, k: int) -> ModeKinetics:
        return mode_kinetics(
            float(self.eigvals[k]), self.rep_inertia, self.rep_damping
        )


@dataclass(frozen=True)
class Trajectory:
    """Per-bus frequency deviations on a time grid, plus optional extras."""

    times: np.ndarray  # (T,) strictly increasing, seconds
    omega: np.ndarray  # (n, T) per-unit deviations
    coi: np.ndarray | None = None  # (T,) inertia-weighted average
    angles: np.ndarray | None = None  # (n, T) integrated deviations

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        omega = np.asarray(self.omega, dtype=np.float64)
        if omega.ndim != 2 or omega.shape[1] != times.shape[0]:
            raise ValueError("omega must be (n, len(times))")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "omega", omega)

    @property
    def n(self) -> int:
        return self.omega.shape[0]


def scaled_laplacian(laplacian: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Symmetrically scale the Laplacian by the inverse square-root scales."""
    lap = np.asarray(laplacian, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("scales must be finite and > 0")
    inv_sqrt = 1.0 / np.sqrt(r)
    scaled = inv_sqrt[:, None] * lap * inv_sqrt[None, :]
    return 0.5 * (scaled + scaled.T)


def eigendecompose(
    scaled_lap: np.ndarray,
    r: np.ndarray,
    rep_inertia: float,
    rep_damping: float,
) -> ModalBasis:
    """Symmetric eigendecomposition with nullspace clamping and sign fixing.

    Eigenvalues within the noise floor of the solver are clamped to zero;
    a genuinely negative eigenvalue raises. Each eigenvector's
    largest-magnitude entry is made positive, and when the zero eigenvalue
    is simple its eigenvector is replaced by the analytic one
    (sqrt(r) / ||sqrt(r)||), whose entries are all positive.
    """
    lap = np.asarray(scaled_lap, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    n = lap.shape[0]
    scale = float(np.max(np.abs(lap)))
    if scale > 0 and float(np.max(np.abs(lap - lap.T))) > 1e-8 * scale:
        raise ValueError("matrix is not symmetric")

    eigvals, eigvecs = np.linalg.eigh(lap)
    if eigvals[0] < -NEG_EIG_REL * scale:
        raise ValueError(
            f"negative eigenvalue {eigvals[0]:.3e}; matrix is not positive"
            " semidefinite"
        )
    clamp = n * EIG_CLAMP_REL * scale
    eigvals = eigvals.copy()
    eigvals[np.abs(eigvals) <= clamp] = 0.0
    eigvals[eigvals < 0.0] = 0.0

    eigvecs = eigvecs.copy()
    for k in range(n):
        lead = int(np.argmax(np.abs(eigvecs[:, k])))
        if eigvecs[lead, k] < 0:
            eigvecs[:, k] = -eigvecs[:, k]

    if int(np.count_nonzero(eigvals == 0.0)) == 1:
        sqrt_r = np.sqrt(r)
        eigvecs[:, 0] = sqrt_r / math.sqrt(float(r.sum()))

    return ModalBasis(
        eigvals=eigvals,
        eigvecs=eigvecs,
        r=r,
        rep_inertia=float(rep_inertia),
        rep_damping=float(rep_damping),
        scaled_eigvecs=eigvecs / np.sqrt(r)[:, None],
    )


def modal_basis(model: NetworkModel) -> ModalBasis:
    """Eigen-coordinates of a network model."""
    return eigendecompose(
        scaled_laplacian(model.laplacian, model.r),
        model.r,
        model.rep_inertia,
        model.rep_damping,
    )


def mode_kinetics(eigval: float, m: float, d: float) -> ModeKinetics:
    """Natural frequency, damping ratio and regime of one mode."""
    if eigval < 0 or m <= 0 or d <= 0:
        raise ValueError("requires eigval >= 0, m > 0, d > 0")
    if eigval == 0.0:
        return ModeKinetics(0.0, math.inf, REGIME_ZERO)
    omega_n = math.sqrt(eigval / m)
    zeta = d / (2.0 * math.sqrt(eigval * m))
    if abs(zeta - 1.0) <= kernels.CRITICAL_BAND:
        regime = REGIME_CRITICAL
    elif zeta < 1.0:
        regime = REGIME_UNDER
    else:
        regime = REGIME_OVER
    return ModeKinetics(omega_n, zeta, regime)


def mode_response(t, kin: ModeKinetics, m: float, d: float):
    """Step response h(t) of one mode; scalar or array t, zero at t = 0."""
    t = np.asarray(t, dtype=np.float64)
    if kin.regime == REGIME_ZERO:
        out = kernels.response_zero_mode(t, m, d)
    elif kin.regime == REGIME_CRITICAL:
        out = kernels.response_critical(t, m, kin.natural_freq)
    elif kin.regime == REGIME_UNDER:
        out = kernels.response_underdamped(t, m, kin.natural_freq, kin.damping_ratio)
    else:
        out = kernels.response_overdamped(t, m, kin.natural_freq, kin.damping_ratio)
    return out if out.ndim else float(out)


def decompose_disturbance(u0: np.ndarray, basis: ModalBasis) -> np.ndarray:
    """Modal coordinates of a step disturbance vector."""
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != (basis.n,):
        raise ValueError(f"u0 must have length {basis.n}, got shape {u0.shape}")
    return basis.eigvecs.T @ (u0 / np.sqrt(basis.r))


def frequency_response(
    basis: ModalBasis, alpha: np.ndarray, times: np.ndarray
) -> Trajectory:
    """Superpose the modal responses on a time grid, with the COI series."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (basis.n,):
        raise ValueError(f"alpha must have length {basis.n}")
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    if np.any(times < 0) or (times.size > 1 and np.any(np.diff(times) <= 0)):
        raise ValueError("times must be nonnegative and strictly increasing")

    resp = kernels.mode_response_table(
        basis.eigvals, basis.rep_inertia, basis.rep_damping, times
    )
    omega = basis.scaled_eigvecs @ (alpha[:, None] * resp)
    coi = coi_frequency(omega, basis.r * basis.rep_inertia)
    return Trajectory(times=times, omega=omega, coi=coi)


def coi_frequency(omega, inertia: np.ndarray) -> np.ndarray:
    """Inertia-weighted average of the per-bus series (center of inertia)."""
    if isinstance(omega, Trajectory):
        omega = omega.omega
    omega = np.asarray(omega, dtype=np.float64)
    inertia = np.asarray(inertia, dtype=np.float64)
    if omega.ndim != 2 or inertia.shape != (omega.shape[0],):
        raise ValueError("inertia length must match the number of bus rows")
    return (inertia @ omega) / inertia.sum()
