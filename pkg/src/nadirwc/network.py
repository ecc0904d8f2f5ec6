"""Power-network model: construction, JSON ingestion, validation, generation.

A network is n generation units, each a first-order unit with inertia m_i
(seconds) and damping d_i (per-unit), coupled through a weighted graph
Laplacian built from the linearized power flow. Every analytic operation
downstream requires the units to be proportional to a single
representative unit (m, d): m_i = r_i * m and d_i = r_i * d for per-bus
scales r_i > 0. Ingestion derives the representative unit as m = mean(m_i),
r_i = m_i / m, d = mean(d_i / r_i) and records how far the damping column
deviates from exact proportionality; models that deviate beyond tolerance
are loadable but refused by the analytic operations.

Note on units: damping is stored in per-unit on the common system base
even though some published parameter tables quote it in seconds; the
numbers are used identically either way.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

# Relative damping deviation above which a model is flagged non-proportional
# and refused by the analytic path.
PROPORTIONALITY_TOL = 1e-6

# Off-diagonal Laplacian couplings with magnitude below this are treated as
# absent when counting connected components.
CONNECTIVITY_EPS = 1e-12

_REL_TOL = 1e-9

# Representative damping per second of representative inertia used when
# generating random fleets; matches heavily damped, low-inertia systems.
_DEFAULT_DAMPING_RATE = 3.65

TOPOLOGIES = ("ring", "random-tree-plus-edges")


class NetworkFormatError(ValueError):
    """Raised when an input document violates the network JSON schema."""


class NonProportionalError(ValueError):
    """Raised when an analytic operation receives a non-proportional model."""


@dataclass(frozen=True)
class BusParams:
    """One generation unit: strictly positive inertia and damping."""

    index: int
    inertia_s: float
    damping_pu: float

    def __post_init__(self):
        if not (math.isfinite(self.inertia_s) and self.inertia_s > 0):
            raise ValueError(f"bus {self.index}: inertia must be finite and > 0")
        if not (math.isfinite(self.damping_pu) and self.damping_pu > 0):
            raise ValueError(f"bus {self.index}: damping must be finite and > 0")


@dataclass(frozen=True)
class LineData:
    """One transmission line between distinct buses."""

    i: int
    j: int
    susceptance_pu: float
    vi_pu: float = 1.0
    vj_pu: float = 1.0
    angle0_rad: float = 0.0

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"line endpoints must differ, got {{{self.i}, {self.j}}}")
        for name in ("susceptance_pu", "vi_pu", "vj_pu", "angle0_rad"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"line {{{self.i}, {self.j}}}: {name} is not finite")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float


# Checks whose failure means the model is malformed rather than merely
# outside the analytic assumptions.
_FATAL_CHECKS = frozenset(
    {"symmetry", "row_sums", "positive_inertia", "positive_damping", "inertia_scaling"}
)


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    connected: bool
    n_components: int

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.name in _FATAL_CHECKS)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


@dataclass(frozen=True)
class NetworkModel:
    """Immutable network model; arrays are read-only after construction."""

    inertia: np.ndarray  # (n,) seconds
    damping: np.ndarray  # (n,) per-unit
    laplacian: np.ndarray  # (n, n)
    f0_hz: float
    rep_inertia: float
    rep_damping: float
    r: np.ndarray  # per-bus scale: inertia = r * rep_inertia
    proportionality_residual: float = field(default=0.0)

    def __post_init__(self):
        for name in ("inertia", "damping", "laplacian", "r"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.inertia.shape[0]
        if self.laplacian.shape != (n, n):
            raise ValueError(
                f"laplacian shape {self.laplacian.shape} does not match {n} buses"
            )

    @property
    def n(self) -> int:
        return self.inertia.shape[0]

    @property
    def omega0(self) -> float:
        """Nominal angular frequency 2 pi f0 in rad/s."""
        return 2.0 * math.pi * self.f0_hz

    @property
    def proportional(self) -> bool:
        return self.proportionality_residual <= PROPORTIONALITY_TOL

    @property
    def buses(self) -> tuple[BusParams, ...]:
        return tuple(
            BusParams(i, float(m), float(d))
            for i, (m, d) in enumerate(zip(self.inertia, self.damping))
        )

    @classmethod
    def from_buses(
        cls,
        inertia: np.ndarray,
        damping: np.ndarray,
        laplacian: np.ndarray,
        f0_hz: float,
    ) -> "NetworkModel":
        """Build a model, deriving the representative unit and scales."""
        inertia = np.asarray(inertia, dtype=np.float64)
        damping = np.asarray(damping, dtype=np.float64)
        if inertia.ndim != 1 or inertia.shape != damping.shape or inertia.size == 0:
            raise ValueError("inertia and damping must be equal-length 1-d arrays")
        if not np.all(np.isfinite(inertia)) or np.any(inertia <= 0):
            raise ValueError("inertia values must be finite and > 0")
        if not np.all(np.isfinite(damping)) or np.any(damping <= 0):
            raise ValueError("damping values must be finite and > 0")
        if not (math.isfinite(f0_hz) and f0_hz > 0):
            raise ValueError("f0_hz must be finite and > 0")
        rep_m = float(inertia.mean())
        r = inertia / rep_m
        rep_d = float((damping / r).mean())
        residual = float(np.max(np.abs(damping - r * rep_d)) / rep_d)
        return cls(
            inertia=inertia,
            damping=damping,
            laplacian=np.asarray(laplacian, dtype=np.float64),
            f0_hz=float(f0_hz),
            rep_inertia=rep_m,
            rep_damping=rep_d,
            r=r,
            proportionality_residual=residual,
        )


def build_laplacian_from_lines(
    lines: list[LineData], n: int, omega0: float
) -> np.ndarray:
    """Assemble the network Laplacian from line records.

    Each line {i, j} contributes the coupling
    omega0 * |V_i| * |V_j| * B_ij * cos(theta_i0 - theta_j0)
    to the off-diagonal (negated) and to both diagonal entries; parallel
    lines accumulate. The result is symmetric with zero row sums.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lap = np.zeros((n, n))
    for line in lines:
        if not (0 <= line.i < n and 0 <= line.j < n):
            raise ValueError(
                f"line endpoints {{{line.i}, {line.j}}} out of range for n={n}"
            )
        w = (
            omega0
            * line.vi_pu
            * line.vj_pu
            * line.susceptance_pu
            * math.cos(line.angle0_rad)
        )
        if not math.isfinite(w):
            raise ValueError(f"line {{{line.i}, {line.j}}} weight is not finite")
        lap[line.i, line.j] -= w
        lap[line.j, line.i] -= w
        lap[line.i, line.i] += w
        lap[line.j, line.j] += w
    return lap


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise NetworkFormatError(msg)


def _as_number(value, what: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        f"{what} must be a number, got {value!r}",
    )
    return float(value)


def load_network(source, fmt: str = "json") -> NetworkModel:
    """Load a network from a JSON document (path, file object or string).

    The document carries ``f0_hz``, a ``buses`` list of ``{"m_s", "d_pu"}``
    records, and exactly one of ``laplacian`` (full matrix) or ``lines``
    (records ``{"i", "j", "b_pu"[, "vi_pu", "vj_pu", "theta0_rad"]}``;
    voltages default to 1, angles to 0). Indices are 0-based and all
    per-unit values are on one common system base.
    """
    if fmt != "json":
        raise ValueError(f"unsupported format {fmt!r}; only 'json' is implemented")
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from exc
    return _network_from_doc(doc)


def _network_from_doc(doc) -> NetworkModel:
    _require(isinstance(doc, dict), "top-level document must be an object")
    _require("f0_hz" in doc, "missing required field 'f0_hz'")
    f0 = _as_number(doc["f0_hz"], "'f0_hz'")
    _require(f0 > 0, "'f0_hz' must be > 0")

    _require(
        isinstance(doc.get("buses"), list) and len(doc["buses"]) > 0,
        "'buses' must be a non-empty list",
    )
    n = len(doc["buses"])
    inertia = np.empty(n)
    damping = np.empty(n)
    for idx, rec in enumerate(doc["buses"]):
        _require(isinstance(rec, dict), f"bus {idx}: record must be an object")
        _require(
            "m_s" in rec and "d_pu" in rec, f"bus {idx}: needs 'm_s' and 'd_pu'"
        )
        inertia[idx] = _as_number(rec["m_s"], f"bus {idx} 'm_s'")
        damping[idx] = _as_number(rec["d_pu"], f"bus {idx} 'd_pu'")
        _require(inertia[idx] > 0, f"bus {idx}: 'm_s' must be > 0")
        _require(damping[idx] > 0, f"bus {idx}: 'd_pu' must be > 0")

    has_lap = "laplacian" in doc
    has_lines = "lines" in doc
    _require(
        has_lap != has_lines,
        "exactly one of 'laplacian' and 'lines' must be present",
    )

    if has_lap:
        raw = doc["laplacian"]
        _require(
            isinstance(raw, list) and len(raw) == n,
            f"'laplacian' must be a {n}x{n} matrix",
        )
        for row in raw:
            _require(
                isinstance(row, list) and len(row) == n,
                f"'laplacian' must be a {n}x{n} matrix",
            )
        lap = np.asarray(raw, dtype=np.float64)
        _require(bool(np.all(np.isfinite(lap))), "'laplacian' entries must be finite")
    else:
        _require(isinstance(doc["lines"], list), "'lines' must be a list")
        omega0 = 2.0 * math.pi * f0
        lines = []
        for idx, rec in enumerate(doc["lines"]):
            _require(isinstance(rec, dict), f"line {idx}: record must be an object")
            for key in ("i", "j"):
                _require(
                    isinstance(rec.get(key), int) and not isinstance(rec[key], bool),
                    f"line {idx}: '{key}' must be an integer",
                )
            _require("b_pu" in rec, f"line {idx}: missing 'b_pu'")
            try:
                lines.append(
                    LineData(
                        i=rec["i"],
                        j=rec["j"],
                        susceptance_pu=_as_number(rec["b_pu"], f"line {idx} 'b_pu'"),
                        vi_pu=_as_number(rec.get("vi_pu", 1.0), f"line {idx} 'vi_pu'"),
                        vj_pu=_as_number(rec.get("vj_pu", 1.0), f"line {idx} 'vj_pu'"),
                        angle0_rad=_as_number(
                            rec.get("theta0_rad", 0.0), f"line {idx} 'theta0_rad'"
                        ),
                    )
                )
            except ValueError as exc:
                raise NetworkFormatError(f"line {idx}: {exc}") from exc
        try:
            lap = build_laplacian_from_lines(lines, n, omega0)
        except ValueError as exc:
            raise NetworkFormatError(str(exc)) from exc

    return NetworkModel.from_buses(inertia, damping, lap, f0)


def save_network(model: NetworkModel, path) -> None:
    """Write a model as a schema-valid JSON file (laplacian form)."""
    doc = {
        "f0_hz": model.f0_hz,
        "buses": [
            {"m_s": float(m), "d_pu": float(d)}
            for m, d in zip(model.inertia, model.damping)
        ],
        "laplacian": [[float(v) for v in row] for row in model.laplacian],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def validate_network(model: NetworkModel) -> ValidationReport:
    """Evaluate every model invariant; report-only, never raises."""
    lap = model.laplacian
    scale = float(np.max(np.abs(lap)))
    denom = scale if scale > 0 else 1.0

    sym_res = float(np.max(np.abs(lap - lap.T))) / denom
    row_res = float(np.max(np.abs(lap.sum(axis=1)))) / denom

    off = lap - np.diag(np.diag(lap))
    pos_off = float(max(0.0, off.max(initial=0.0)))

    inertia_res = float(
        np.max(np.abs(model.inertia - model.r * model.rep_inertia))
        / model.rep_inertia
    )

    adjacency = np.abs(off) > CONNECTIVITY_EPS
    n_comp, _ = connected_components(adjacency, directed=False)
    n_comp = int(n_comp)

    checks = (
        CheckResult("symmetry", sym_res <= _REL_TOL, sym_res),
        CheckResult("row_sums", row_res <= _REL_TOL, row_res),
        CheckResult(
            "offdiag_nonpositive", pos_off <= CONNECTIVITY_EPS * denom, pos_off
        ),
        CheckResult("positive_inertia", bool(np.all(model.inertia > 0)), 0.0),
        CheckResult("positive_damping", bool(np.all(model.damping > 0)), 0.0),
        CheckResult("inertia_scaling", inertia_res <= 1e-12, inertia_res),
        CheckResult(
            "proportionality",
            model.proportionality_residual <= PROPORTIONALITY_TOL,
            model.proportionality_residual,
        ),
        CheckResult("connectivity", n_comp == 1, float(n_comp - 1)),
    )
    return ValidationReport(checks=checks, connected=n_comp == 1, n_components=n_comp)


def generate_random_network(
    n: int,
    seed: int,
    inertia_range: tuple[float, float] = (0.0, 1000.0),
    weight_scale: float = 1.0,
    topology: str = "ring",
    damping_pu: float | None = None,
    f0_hz: float = 50.0,
) -> NetworkModel:
    """Random proportional model: uniform inertia, exact damping scaling.

    The topology is connected for n >= 2 ('ring' or
    'random-tree-plus-edges'); coupling weights go directly into the
    Laplacian so weight_scale sets its magnitude. Deterministic per seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = inertia_range
    if not (0.0 <= lo < hi) or not math.isfinite(hi):
        raise ValueError(f"invalid inertia range ({lo}, {hi})")
    if weight_scale <= 0 or not math.isfinite(weight_scale):
        raise ValueError("weight_scale must be finite and > 0")
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}; choose from {TOPOLOGIES}")

    rng = np.random.default_rng(seed)
    inertia = rng.uniform(lo, hi, size=n)
    while np.any(inertia <= 0.0):  # the open interval (lo, hi)
        bad = inertia <= 0.0
        inertia[bad] = rng.uniform(lo, hi, size=int(bad.sum()))

    rep_m = float(inertia.mean())
    rep_d = float(damping_pu) if damping_pu is not None else _DEFAULT_DAMPING_RATE * rep_m
    if rep_d <= 0:
        raise ValueError("damping_pu must be > 0")
    damping = (inertia / rep_m) * rep_d

    lap = np.zeros((n, n))

    def couple(a: int, b: int, w: float) -> None:
        lap[a, b] -= w
        lap[b, a] -= w
        lap[a, a] += w
        lap[b, b] += w

    if topology == "ring":
        if n == 2:
            couple(0, 1, weight_scale)
        elif n >= 3:
            for i in range(n):
                couple(i, (i + 1) % n, weight_scale)
    else:
        for v in range(1, n):
            parent = int(rng.integers(0, v))
            couple(parent, v, float(rng.uniform(0.5, 1.5)) * weight_scale)
        for _ in range(n // 3):
            a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
            if a != b:
                couple(a, b, float(rng.uniform(0.5, 1.5)) * weight_scale)

    return NetworkModel.from_buses(inertia, damping, lap, f0_hz)
