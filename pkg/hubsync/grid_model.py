import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from hubsync.errors import ConfigError, DimensionMismatch, GridValidationError, IndexOutOfRange, Violation

TWO_PI = 2.0 * math.pi
CONFIG_SCHEMA_VERSION = 1
OMEGA_REF_UNITS = ("rad/s", "Hz")


class GridSpec(BaseModel):
    """
    Immutable description of a hub-and-spoke network.

    Generator 1 is the hub, generators 2..n are spokes. `coupling[k]` is K_{1,k+2}, i.e. the
    coupling of spoke k+2 to the hub; spokes are never coupled to one another.
    """
    model_config = ConfigDict(frozen=True)

    n: int
    omega_ref: float
    inertia: Tuple[float, ...]
    damping: Tuple[float, ...]
    injection: Tuple[float, ...]
    coupling: Tuple[float, ...]

    def __str__(self):
        return f"GridSpec(n={self.n}, omega_ref={self.omega_ref:.6g} rad/s)"

    @property
    def spokes(self) -> range:
        """1-based indices of the spoke generators."""
        return range(2, self.n + 1)

    def coupling_of(self, spoke: int) -> float:
        """K_{1i} for spoke i (1-based, 2..n)."""
        if spoke not in self.spokes:
            raise IndexOutOfRange(f"spoke index {spoke} outside 2..{self.n}")
        return self.coupling[spoke - 2]

    def masses(self) -> np.ndarray:
        """m_i = 2 H_i / omega_ref for every generator."""
        return 2.0 * np.asarray(self.inertia, dtype=float) / self.omega_ref

    def time_constants(self) -> np.ndarray:
        """Frequency-damping time constants 2 H_i / (omega_ref D_i), seconds."""
        return self.masses() / np.asarray(self.damping, dtype=float)

    def max_time_constant(self) -> float:
        return float(np.max(self.time_constants()))

    def with_value(self, field: str, index: int, value: float) -> "GridSpec":
        """
        Copy of the spec with one per-generator parameter replaced.

        Args:
            field: one of inertia, damping, injection, coupling.
            index: 1-based generator index (for coupling: the spoke index 2..n).
            value: the new value.
        """
        if field == "coupling":
            if index not in self.spokes:
                raise IndexOutOfRange(f"coupling index {index} outside 2..{self.n}")
            position = index - 2
        elif field in ("inertia", "damping", "injection"):
            if not 1 <= index <= self.n:
                raise IndexOutOfRange(f"{field} index {index} outside 1..{self.n}")
            position = index - 1
        else:
            raise ValueError(f"Unknown per-generator field: {field}")
        values = list(getattr(self, field))
        values[position] = float(value)
        return self.model_copy(update={field: tuple(values)})

    def scaled(self, field: str, factor: float, indices: Iterable[int] | None = None) -> "GridSpec":
        """Copy with the given per-generator field multiplied by `factor` (all generators by default)."""
        spec = self
        if indices is None:
            indices = self.spokes if field == "coupling" else range(1, self.n + 1)
        for i in indices:
            current = spec.coupling_of(i) if field == "coupling" else getattr(spec, field)[i - 1]
            spec = spec.with_value(field, i, current * factor)
        return spec


# ------------------------------------------------------------------
# Validation
# ------------------------------------------------------------------

def find_violations(spec: GridSpec) -> List[Violation]:
    """Returns every broken invariant of the spec (empty when valid)."""
    violations: List[Violation] = []

    if spec.n < 2:
        violations.append(Violation(
            kind="TooFewGenerators", field="n", index=None,
            message=f"n must be >= 2, got {spec.n}",
        ))

    if not (math.isfinite(spec.omega_ref) and spec.omega_ref > 0):
        violations.append(Violation(
            kind="NonPositiveParameter", field="omega_ref", index=None,
            message=f"omega_ref must be > 0, got {spec.omega_ref}",
        ))

    expected_lengths = {
        "inertia": spec.n,
        "damping": spec.n,
        "injection": spec.n,
        "coupling": max(spec.n - 1, 0),
    }
    for field, expected in expected_lengths.items():
        actual = len(getattr(spec, field))
        if actual != expected:
            violations.append(Violation(
                kind="LengthMismatch", field=field, index=None,
                message=f"{field} must have {expected} entries, got {actual}",
            ))

    for field in ("inertia", "damping"):
        for position, value in enumerate(getattr(spec, field)):
            if not (math.isfinite(value) and value > 0):
                violations.append(Violation(
                    kind="NonPositiveParameter", field=field, index=position + 1,
                    message=f"{field}[{position + 1}] must be > 0, got {value}",
                ))

    for position, value in enumerate(spec.coupling):
        if not (math.isfinite(value) and value > 0):
            violations.append(Violation(
                kind="NonPositiveParameter", field="coupling", index=position + 2,
                message=f"coupling[{position + 2}] must be > 0, got {value}",
            ))

    for position, value in enumerate(spec.injection):
        if not math.isfinite(value):
            violations.append(Violation(
                kind="NonFiniteParameter", field="injection", index=position + 1,
                message=f"injection[{position + 1}] must be finite, got {value}",
            ))

    return violations


def validate(spec: GridSpec) -> GridSpec:
    """Returns the spec unchanged if valid, otherwise raises GridValidationError with all violations."""
    violations = find_violations(spec)
    if violations:
        raise GridValidationError(violations)
    return spec


def effective_mass(spec: GridSpec, i: int) -> float:
    """m_i = 2 H_i / omega_ref for generator i (1-based)."""
    if not 1 <= i <= spec.n:
        raise IndexOutOfRange(f"generator index {i} outside 1..{spec.n}")
    return 2.0 * spec.inertia[i - 1] / spec.omega_ref


# ------------------------------------------------------------------
# Phase-space points
# ------------------------------------------------------------------

def wrap_phase(phases) -> np.ndarray:
    """Canonicalize angles into [0, 2*pi)."""
    wrapped = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def angle_difference(a, b) -> np.ndarray:
    """Signed difference a - b mapped into (-pi, pi]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(d <= -math.pi, d + TWO_PI, d)


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SystemState:
    """
    A point of the reduced phase space: n-1 phases relative to generator n and n frequency deviations.

    `phases` are kept unwrapped; use `wrapped_phases` for comparisons.
    """
    phases: np.ndarray
    freq_dev: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", _frozen_array(self.phases))
        object.__setattr__(self, "freq_dev", _frozen_array(self.freq_dev))
        if self.phases.ndim != 1 or self.freq_dev.ndim != 1 or self.phases.size != self.freq_dev.size - 1:
            raise DimensionMismatch(
                f"state needs n-1 phases and n frequency deviations, got {self.phases.size} and {self.freq_dev.size}"
            )

    @property
    def n(self) -> int:
        return self.freq_dev.size

    @property
    def dimension(self) -> int:
        return 2 * self.n - 1

    @property
    def wrapped_phases(self) -> np.ndarray:
        return wrap_phase(self.phases)

    def vector(self) -> np.ndarray:
        """Flat state vector (delta_1..delta_{n-1}, dw_1..dw_n) with unwrapped phases."""
        return np.concatenate([self.phases, self.freq_dev])

    @classmethod
    def from_vector(cls, vector, n: int) -> "SystemState":
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (2 * n - 1,):
            raise DimensionMismatch(f"expected a state vector of length {2 * n - 1}, got shape {vector.shape}")
        return cls(phases=vector[:n - 1], freq_dev=vector[n - 1:])

    def distance_to(self, other: "SystemState") -> float:
        """Torus distance of the phases plus Euclidean distance of the frequency deviations."""
        phase_part = float(np.linalg.norm(angle_difference(self.phases, other.phases)))
        freq_part = float(np.linalg.norm(self.freq_dev - other.freq_dev))
        return phase_part + freq_part


def check_dimension(spec: GridSpec, state: SystemState):
    if state.n != spec.n:
        raise DimensionMismatch(f"state has dimension {state.dimension}, grid needs {2 * spec.n - 1}")


# ------------------------------------------------------------------
# Configuration files
# ------------------------------------------------------------------

def grid_to_dict(spec: GridSpec) -> dict:
    """Canonical JSON-ready representation (omega_ref always in rad/s)."""
    return {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "n": spec.n,
        "omega_ref": {"value": float(spec.omega_ref), "unit": "rad/s"},
        "inertia": [float(v) for v in spec.inertia],
        "damping": [float(v) for v in spec.damping],
        "injection": [float(v) for v in spec.injection],
        "coupling": [float(v) for v in spec.coupling],
    }


def grid_from_dict(config_data: dict, source: str = "<dict>") -> GridSpec:
    """Builds a GridSpec from parsed config data. Structural problems raise ConfigError."""
    if not isinstance(config_data, dict):
        raise ConfigError(f"{source}: top-level JSON value must be an object")

    version = config_data.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"{source}: unsupported schema_version {version}, expected {CONFIG_SCHEMA_VERSION}")

    omega = config_data.get("omega_ref")
    if isinstance(omega, dict):
        unit = omega.get("unit", "rad/s")
        if unit not in OMEGA_REF_UNITS:
            raise ConfigError(f"{source}: omega_ref unit must be one of {OMEGA_REF_UNITS}, got {unit!r}")
        value = omega.get("value")
    else:
        raise ConfigError(f"{source}: omega_ref must be an object with 'value' and 'unit'")

    missing = [key for key in ("n", "inertia", "damping", "injection", "coupling") if key not in config_data]
    if missing or value is None:
        raise ConfigError(f"{source}: missing field(s) {missing + (['omega_ref.value'] if value is None else [])}")

    try:
        omega_ref = float(value) * (2.0 * math.pi if unit == "Hz" else 1.0)
        return GridSpec(
            n=config_data["n"],
            omega_ref=omega_ref,
            inertia=tuple(config_data["inertia"]),
            damping=tuple(config_data["damping"]),
            injection=tuple(config_data["injection"]),
            coupling=tuple(config_data["coupling"]),
        )
    except (TypeError, ValueError, ValidationError) as e:
        raise ConfigError(f"{source}: {e}") from e


def canonical_config_text(spec: GridSpec) -> str:
    return json.dumps(grid_to_dict(spec), indent=2) + "\n"


def load_grid_config(config_path: str | Path) -> GridSpec:
    """
    Loads a grid configuration file. The result is not validated; call validate() on it.

    Raises:
        ConfigError: missing file, malformed JSON or wrong structure.
    """
    path = Path(config_path)
    try:
        config_data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Grid configuration not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})") from e
    return grid_from_dict(config_data, source=str(path))


def save_grid_config(spec: GridSpec, config_path: str | Path) -> Path:
    path = Path(config_path)
    path.write_text(canonical_config_text(spec), encoding="utf-8")
    return path


def config_digest(config_path: str | Path) -> str:
    """sha256 of the raw config bytes."""
    return hashlib.sha256(Path(config_path).read_bytes()).hexdigest()


def load_state(state_path: str | Path, n: int) -> SystemState:
    """Reads an initial condition file: {"phases": [...n-1...], "freq_dev": [...n...]}."""
    path = Path(state_path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        state = SystemState(phases=data["phases"], freq_dev=data["freq_dev"])
    except FileNotFoundError as e:
        raise ConfigError(f"Initial condition file not found: {path}") from e
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ConfigError(f"{path}: malformed initial condition ({e})") from e
    if state.n != n:
        raise DimensionMismatch(f"{path}: initial condition is for n={state.n}, grid has n={n}")
    return state
