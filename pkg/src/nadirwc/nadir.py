"""Worst-case frequency nadir: dual norms, grid search, analytic checks.

For a norm-bounded step disturbance, the largest achievable deviation at
bus i and time t is a dual norm of that bus's gain vector, scaled by the
budget. Filling the (bus, time) table and taking its maximum therefore
solves the nested worst-case problem exactly on the grid; the maximizing
disturbance is recovered in closed form from the gain vector at the
argmax. A finite grid misses maxima reached only in the steady-state
limit (where every damped mode has died out and only the rigid drift
remains), so an explicit limit column is evaluated by default and the
result is flagged when it wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .modal import ModalBasis, modal_basis
from .network import NetworkModel, NonProportionalError

NORM_KINDS = ("2", "inf", "1")

# Aliases accepted for the norm kind, mapped to the canonical spelling.
_NORM_ALIASES = {
    "2": "2",
    "two": "2",
    "inf": "inf",
    "infty": "inf",
    "max": "inf",
    "1": "1",
    "one": "1",
}


def canonical_norm(kind: str) -> str:
    try:
        return _NORM_ALIASES[str(kind).strip().lower()]
    except KeyError:
        raise ValueError(f"unknown norm kind {kind!r}; choose from {NORM_KINDS}")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Uncertainty set: a norm ball of radius rho (per-unit, > 0)."""

    norm: str
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "norm", canonical_norm(self.norm))
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise ValueError("rho must be finite and > 0")

    @property
    def kind_code(self) -> int:
        return kernels.NORM_KIND_CODES[self.norm]


@dataclass(frozen=True)
class NadirTable:
    """Dense objective table over the (bus, time) grid."""

    values: np.ndarray  # (n, N) per-unit
    times: np.ndarray  # (N,) seconds
    bus_ids: np.ndarray  # (n,)

    def __post_init__(self):
        for name, dtype in (("values", np.float64), ("times", np.float64), ("bus_ids", np.int64)):
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class NadirResult:
    """Output of the worst-case search.

    ``time`` is ``math.inf`` when the steady-state column attained the
    maximum; ties with the finite grid resolve to the finite time.
    """

    value: float
    bus: int
    time: float
    u0: np.ndarray
    spec: DisturbanceSpec
    table: NadirTable
    dt: float
    steps: int
    steady_state_evaluated: bool
    steady_state_values: np.ndarray | None
    settled: bool

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=np.float64)
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)

    @property
    def steady_state_attained(self) -> bool:
        return math.isinf(self.time)


@dataclass(frozen=True)
class AsymptoteSweep:
    """Worst values under progressively scaled coupling, with their limit."""

    betas: np.ndarray
    values: np.ndarray
    target: float


def dual_norm(x: np.ndarray, kind: str) -> tuple[float, np.ndarray]:
    """Dual norm of x and a unit-ball maximizer of |x . y|.

    For a 2-norm ball the dual value is the 2-norm (maximizer x/|x|);
    for a max-norm ball it is the 1-norm (maximizer sign(x)); for a
    1-norm ball it is the max-norm (maximizer a signed basis vector at
    the first largest-magnitude entry). The returned maximizer has unit
    primal norm and nonnegative inner product with x; for x = 0 the
    value is 0 and the first basis vector is returned by convention.
    """
    kind = canonical_norm(kind)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")

    def _e1() -> np.ndarray:
        e = np.zeros(x.size)
        e[0] = 1.0
        return e

    if kind == "2":
        value = float(np.linalg.norm(x))
        if value == 0.0:
            return 0.0, _e1()
        return value, x / value
    if kind == "inf":
        value = float(np.abs(x).sum())
        if value == 0.0:
            return 0.0, _e1()
        return value, np.sign(x)
    idx = int(np.argmax(np.abs(x)))
    value = float(abs(x[idx]))
    if value == 0.0:
        return 0.0, _e1()
    y = np.zeros(x.size)
    y[idx] = 1.0 if x[idx] > 0 else -1.0
    return value, y


def _gain_vector(bus: int, time: float, basis: ModalBasis) -> np.ndarray:
    """Disturbance-to-deviation gain vector of one bus at one time.

    time = inf gives the steady-state limit, where only zero modes
    contribute (each at level 1/d).
    """
    if math.isinf(time):
        resp = np.where(
            basis.eigvals == 0.0, 1.0 / basis.rep_damping, 0.0
        )
    else:
        resp = kernels.mode_response_table(
            basis.eigvals,
            basis.rep_inertia,
            basis.rep_damping,
            np.array([time]),
        )[:, 0]
    coeff = basis.eigvecs[bus, :] * resp
    return basis.scaled_eigvecs @ coeff


def objective_column(
    bus: int, time: float, basis: ModalBasis, spec: DisturbanceSpec
) -> float:
    """Largest deviation magnitude achievable at (bus, time) on budget rho."""
    if not 0 <= bus < basis.n:
        raise ValueError(f"bus {bus} out of range")
    if not (time > 0):
        raise ValueError("time must be > 0")
    value, _ = dual_norm(_gain_vector(bus, time, basis), spec.norm)
    return spec.rho / math.sqrt(basis.r[bus]) * value


def _steady_state_values(basis: ModalBasis, spec: DisturbanceSpec) -> np.ndarray:
    resp = np.where(basis.eigvals == 0.0, 1.0 / basis.rep_damping, 0.0)
    gain = (basis.scaled_eigvecs * resp) @ basis.eigvecs.T
    if spec.norm == "2":
        red = np.sqrt(np.einsum("ki,ki->i", gain, gain))
    elif spec.norm == "inf":
        red = np.abs(gain).sum(axis=0)
    else:
        red = np.abs(gain).max(axis=0)
    return spec.rho / np.sqrt(basis.r) * red


def worst_case_search(
    model: NetworkModel,
    spec: DisturbanceSpec,
    dt: float = 0.01,
    steps: int = 100,
    steady_state: bool = True,
) -> NadirResult:
    """Fill the objective table on the grid (dt, ..., steps*dt) and maximize.

    Ties break to the smallest bus index, then the smallest time. With
    ``steady_state`` on (default), an extra t -> infinity column is
    evaluated from the zero modes and wins only if strictly larger than
    every finite entry. ``settled`` reports whether the horizon covers at
    least five drift time constants of the representative unit.
    """
    if not model.proportional:
        raise NonProportionalError(
            "model is non-proportional (damping residual "
            f"{model.proportionality_residual:.3e} exceeds tolerance); the"
            " analytic search requires proportional units"
        )
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError("dt must be finite and > 0")
    if steps < 1:
        raise ValueError("steps must be >= 1")

    basis = modal_basis(model)
    times = np.arange(1, steps + 1) * dt
    resp = kernels.mode_response_table(
        basis.eigvals, basis.rep_inertia, basis.rep_damping, times
    )
    values = kernels.nadir_dual_table(
        basis.scaled_eigvecs,
        np.ascontiguousarray(basis.eigvecs.T),
        resp,
        1.0 / np.sqrt(basis.r),
        spec.rho,
        spec.kind_code,
    )
    table = NadirTable(values=values, times=times, bus_ids=np.arange(model.n))

    flat = int(np.argmax(values))
    bus, tidx = divmod(flat, steps)
    best_value = float(values[bus, tidx])
    best_time = float(times[tidx])

    ss_values = None
    if steady_state:
        ss_values = _steady_state_values(basis, spec)
        if float(ss_values.max()) > best_value:
            bus = int(np.argmax(ss_values))
            best_value = float(ss_values[bus])
            best_time = math.inf

    u0 = recover_worst_disturbance(bus, best_time, basis, spec)
    settled = steps * dt >= 5.0 * model.rep_inertia / model.rep_damping
    return NadirResult(
        value=best_value,
        bus=int(bus),
        time=best_time,
        u0=u0,
        spec=spec,
        table=table,
        dt=float(dt),
        steps=int(steps),
        steady_state_evaluated=bool(steady_state),
        steady_state_values=ss_values,
        settled=bool(settled),
    )


def recover_worst_disturbance(
    bus: int, time: float, basis: ModalBasis, spec: DisturbanceSpec
) -> np.ndarray:
    """Disturbance on the budget boundary maximizing |deviation| at (bus, time).

    The sign is fixed to the representative with nonnegative inner product
    against the gain vector; its negative is equally optimal.
    """
    if not 0 <= bus < basis.n:
        raise ValueError(f"bus {bus} out of range")
    gain = _gain_vector(bus, time, basis)
    value, direction = dual_norm(gain, spec.norm)
    if value == 0.0:
        raise ValueError(
            f"zero gain vector at bus {bus}, t={time}; no disturbance is"
            " recoverable there"
        )
    return spec.rho * direction


def strong_connectivity_check(model: NetworkModel) -> tuple[bool, float, float]:
    """Whether algebraic connectivity clears the even-disturbance threshold.

    Only defined for homogeneous fleets (all scales 1); returns
    (holds, lambda_2, threshold) with threshold (n - 0.75) d^2 / m.
    """
    if model.n < 2:
        raise ValueError("requires n >= 2")
    if float(np.max(np.abs(model.r - 1.0))) > 1e-9:
        raise ValueError("strong connectivity check requires a homogeneous model")
    sym = 0.5 * (model.laplacian + model.laplacian.T)
    eigvals = np.linalg.eigvalsh(sym)
    lam2 = float(eigvals[1])
    threshold = (model.n - 0.75) * model.rep_damping**2 / model.rep_inertia
    return lam2 >= threshold, lam2, threshold


def heterogeneous_asymptote_check(
    model: NetworkModel,
    spec: DisturbanceSpec,
    betas,
    dt: float = 0.01,
    steps: int = 100,
    steady_state: bool = True,
) -> AsymptoteSweep:
    """Worst value as coupling is scaled up, against its analytic limit.

    Under a 2-norm budget the worst value approaches
    rho * sqrt(n) / (d * sum(r)) as connectivity grows; the sweep reruns
    the search on the model with its Laplacian scaled by each beta.
    """
    if spec.norm != "2":
        raise ValueError("asymptote check is defined for the 2-norm budget")
    betas = np.asarray(betas, dtype=np.float64)
    if betas.ndim != 1 or betas.size == 0 or np.any(betas <= 0):
        raise ValueError("betas must be a non-empty 1-d array of positive scales")
    values = np.empty(betas.size)
    for k, beta in enumerate(betas):
        scaled = NetworkModel.from_buses(
            model.inertia, model.damping, beta * model.laplacian, model.f0_hz
        )
        values[k] = worst_case_search(
            scaled, spec, dt=dt, steps=steps, steady_state=steady_state
        ).value
    target = spec.rho * math.sqrt(model.n) / (model.rep_damping * float(model.r.sum()))
    return AsymptoteSweep(betas=betas, values=values, target=target)
