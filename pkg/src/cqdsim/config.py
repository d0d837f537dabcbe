"""Experiment configuration: JSON schema, validation, defaults.

Complex numbers are written as [re, im] pairs; a schedule piece is a
duration plus a row-major Hermitian matrix.  Validation errors carry the
offending field path and map to exit code 2 in the CLI.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import jsonschema
import numpy as np

from .numerics import is_hermitian
from .segment import EXACT_SEQUENTIAL, TRUNCATED


class ConfigError(ValueError):
    """Invalid experiment configuration."""


_COMPLEX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}

SCHEMA = {
    "type": "object",
    "required": ["n_qubits", "oracle", "schedule", "epsilon"],
    "additionalProperties": False,
    "properties": {
        "n_qubits": {"type": "integer", "minimum": 1},
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "bits": {"type": "array", "items": {"enum": [0, 1]}},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "schedule": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["duration", "hamiltonian"],
                "additionalProperties": False,
                "properties": {
                    "duration": {"type": "number", "exclusiveMinimum": 0},
                    "hamiltonian": _MATRIX,
                },
            },
        },
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": [EXACT_SEQUENTIAL, TRUNCATED]},
        "budget_factor": {"type": "number", "minimum": 1},
        "m_cap": {"type": "integer", "minimum": 1},
        "initial_state": {"type": "array", "minItems": 1, "items": _COMPLEX},
    },
}

DEFAULTS = {
    "trials": 100,
    "seed": 0,
    "mode": TRUNCATED,
    "budget_factor": 2.0,
    "m_cap": 16,
}


@dataclass(frozen=True)
class ExperimentConfig:
    n_qubits: int
    oracle_bits: tuple[int, ...] | None
    oracle_seed: int | None
    pieces: tuple[tuple[float, np.ndarray], ...]
    epsilon: float
    trials: int
    seed: int
    mode: str
    budget_factor: float
    m_cap: int
    initial_state: np.ndarray | None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _as_complex_matrix(rows, path: str) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def parse_config(text) -> ExperimentConfig:
    """Validate a JSON document (text or parsed) into an ExperimentConfig."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"not valid JSON: {e}") from e
    else:
        doc = text
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {e.message}") from e

    n = doc["n_qubits"]
    dim = 1 << n
    oracle = doc["oracle"]
    bits = tuple(oracle["bits"]) if "bits" in oracle else None
    if bits is not None and len(bits) != dim:
        raise ConfigError(f"oracle.bits: expected {dim} entries for n_qubits={n}, got {len(bits)}")

    pieces = []
    for i, piece in enumerate(doc["schedule"]):
        h = _as_complex_matrix(piece["hamiltonian"], f"schedule.{i}.hamiltonian")
        if h.shape != (dim, dim):
            raise ConfigError(
                f"schedule.{i}.hamiltonian: expected a {dim}x{dim} matrix, got {h.shape}"
            )
        if not is_hermitian(h):
            raise ConfigError(f"schedule.{i}.hamiltonian: not Hermitian within 1e-10")
        pieces.append((float(piece["duration"]), h))

    initial = None
    if "initial_state" in doc:
        initial = np.array([complex(re, im) for re, im in doc["initial_state"]], dtype=complex)
        if initial.shape != (dim,):
            raise ConfigError(
                f"initial_state: expected {dim} amplitudes for n_qubits={n}, got {initial.shape[0]}"
            )
        norm = np.linalg.norm(initial)
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError(f"initial_state: norm is {norm}, must be 1 within 1e-9")

    merged = {**DEFAULTS, **{k: doc[k] for k in DEFAULTS if k in doc}}
    return ExperimentConfig(
        n_qubits=n,
        oracle_bits=bits,
        oracle_seed=oracle.get("seed"),
        pieces=tuple(pieces),
        epsilon=float(doc["epsilon"]),
        trials=int(merged["trials"]),
        seed=int(merged["seed"]),
        mode=merged["mode"],
        budget_factor=float(merged["budget_factor"]),
        m_cap=int(merged["m_cap"]),
        initial_state=initial,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_config(text)
