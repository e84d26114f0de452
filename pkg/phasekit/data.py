# Copyright (c) The phasekit authors.
#
# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import torch

from .constants import (
    COMPLEX,
    DEFAULT_GRID_N,
    DEFAULT_QUAD_N,
    DEFAULT_SEED,
    DEFAULT_TAIL_TOL,
    EXPLICIT_NORM_TOL,
    MIN_GRID_N,
    NORM_TOL,
    RELATION_TOL,
    THREADS_ENV,
)
from .errors import InvalidInputError
from . import modes

# Accepted parameter sets per state type; a spec must match one of them exactly.
STATE_FIELDS = {
    "number": [("l",)],
    "wavepacket": [("epsilon", "beta")],
    "two_mode": [("l", "L", "gamma", "beta")],
    "coherent_phase": [("zeta_abs", "zeta_arg"), ("epsilon", "beta")],
    "coherent": [("r", "beta")],
    "two_peak": [("delta",)],
    "explicit": [()],
}


@dataclass(frozen=True)
class StateSpec(object):
    type: str
    params: Dict[str, float] = field(default_factory=dict)
    coeffs: Optional[Tuple[Tuple[int, float, float], ...]] = None

    def __post_init__(self):
        if self.type not in STATE_FIELDS:
            raise InvalidInputError(
                f"unknown state type {self.type!r}, expected one of {', '.join(STATE_FIELDS)}"
            )
        params = {}
        for name, value in self.params.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidInputError(f"field {name!r} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidInputError(f"field {name!r} must be finite, got {value!r}")
            params[name] = value
        object.__setattr__(self, "params", params)

        accepted = STATE_FIELDS[self.type]
        given = set(params)
        if not any(given == set(option) for option in accepted):
            best = min(accepted, key=lambda option: len(given.symmetric_difference(option)))
            missing = sorted(set(best) - given)
            extra = sorted(given - set(best))
            if missing:
                raise InvalidInputError(f"{self.type} spec is missing field {missing[0]!r}")
            raise InvalidInputError(f"{self.type} spec does not take field {extra[0]!r}")

        if self.type == "explicit":
            if not self.coeffs:
                raise InvalidInputError("explicit spec needs a non-empty field 'coeffs'")
            entries = []
            for entry in self.coeffs:
                if len(entry) != 3:
                    raise InvalidInputError(f"coeffs entry {entry!r} is not (l, re, im)")
                try:
                    l, re, im = float(entry[0]), float(entry[1]), float(entry[2])
                except (TypeError, ValueError):
                    raise InvalidInputError(f"coeffs entry {entry!r} is not numeric")
                if not l.is_integer():
                    raise InvalidInputError(f"coeffs mode {l!r} is not an integer")
                entries.append((int(l), re, im))
            object.__setattr__(self, "coeffs", tuple(entries))
        elif self.coeffs is not None:
            raise InvalidInputError(f"{self.type} spec does not take field 'coeffs'")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "type" not in d:
            raise InvalidInputError("state spec is missing field 'type'")
        state_type = d.pop("type")
        coeffs = d.pop("coeffs", None)
        if coeffs is not None:
            coeffs = tuple(tuple(entry) for entry in coeffs)
        return cls(type=state_type, params=d, coeffs=coeffs)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"state spec is not valid JSON: {e}")
        if not isinstance(d, dict):
            raise InvalidInputError("state spec must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def from_file(cls, spec_file):
        with open(spec_file) as infile:
            return cls.from_json(infile.read())

    @classmethod
    def parse(cls, source):
        """Inline JSON if ``source`` looks like an object, else a path to a JSON file."""
        source = str(source)
        if source.lstrip().startswith("{"):
            return cls.from_json(source)
        if not Path(source).is_file():
            raise InvalidInputError(f"state spec file {source!r} does not exist")
        return cls.from_file(source)

    def with_params(self, **overrides):
        params = dict(self.params)
        params.update(overrides)
        return StateSpec(type=self.type, params=params, coeffs=self.coeffs)

    def to_dict(self):
        d = {"type": self.type}
        d.update(self.params)
        if self.coeffs is not None:
            d["coeffs"] = [list(entry) for entry in self.coeffs]
        return d

    def describe(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def build_state(spec, tail_tol=DEFAULT_TAIL_TOL):
    """Construct the ModeExpansion (or piecewise PhaseDensity) a spec describes."""
    p = spec.params
    if spec.type == "number":
        return modes.make_number_state(p["l"])
    if spec.type == "wavepacket":
        return modes.make_rotor_wavepacket(p["epsilon"], p["beta"], tail_tol=tail_tol)
    if spec.type == "two_mode":
        return modes.make_two_mode_superposition(p["l"], p["L"], p["gamma"], p["beta"])
    if spec.type == "coherent_phase":
        if "epsilon" in p:
            if p["epsilon"] <= 0:
                raise InvalidInputError(f"epsilon must be positive, got {p['epsilon']}")
            zeta = math.exp(-p["epsilon"]) * complex(math.cos(p["beta"]), -math.sin(p["beta"]))
        else:
            zeta = p["zeta_abs"] * complex(math.cos(p["zeta_arg"]), math.sin(p["zeta_arg"]))
        return modes.make_coherent_phase_state(zeta, tail_tol=tail_tol)
    if spec.type == "coherent":
        return modes.make_coherent_state(p["r"], p["beta"], tail_tol=tail_tol)
    if spec.type == "two_peak":
        return modes.make_two_peak_density(p["delta"])
    return _explicit_state(spec.coeffs)


def _explicit_state(coeffs):
    state = modes.make_explicit_state([(l, complex(re, im)) for l, re, im in coeffs])
    norm2 = state.norm_squared()
    if abs(norm2 - 1.0) > EXPLICIT_NORM_TOL:
        raise InvalidInputError(
            f"explicit coefficients have norm^2 {norm2!r}, more than {EXPLICIT_NORM_TOL} from 1"
        )
    if abs(norm2 - 1.0) > NORM_TOL:
        warnings.warn(f"renormalising explicit coefficients with norm^2 {norm2!r}")
        state = state.normalized()
    return state


def threads_from_env(environ=None):
    environ = os.environ if environ is None else environ
    raw = environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if threads < 1:
        raise InvalidInputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return threads


@dataclass(frozen=True)
class RunConfig(object):
    grid_n: int = DEFAULT_GRID_N
    quad_n: int = DEFAULT_QUAD_N
    tail_tol: float = DEFAULT_TAIL_TOL
    tolerance: float = RELATION_TOL
    output_format: str = "csv"
    output_path: Path = Path("phasekit_out")
    seed: int = DEFAULT_SEED
    oracle: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.grid_n < MIN_GRID_N:
            raise InvalidInputError(f"grid_n must be >= {MIN_GRID_N}, got {self.grid_n}")
        if self.quad_n < 1:
            raise InvalidInputError(f"quad_n must be positive, got {self.quad_n}")
        if not self.tail_tol > 0:
            raise InvalidInputError(f"tail_tol must be positive, got {self.tail_tol}")
        if not self.tolerance > 0:
            raise InvalidInputError(f"tolerance must be positive, got {self.tolerance}")
        if self.output_format not in ("csv", "jsonl"):
            raise InvalidInputError(f"format must be csv or jsonl, got {self.output_format!r}")
        if self.threads < 1:
            raise InvalidInputError(f"threads must be positive, got {self.threads}")
        object.__setattr__(self, "output_path", Path(self.output_path))

    @classmethod
    def from_args(cls, args, environ=None):
        return cls(
            grid_n=args.grid_n,
            quad_n=args.quad_n,
            tail_tol=args.tail_tol,
            tolerance=args.tol,
            output_format=args.format,
            output_path=args.out,
            seed=args.seed,
            oracle=args.oracle,
            threads=threads_from_env(environ),
        )

    def output_file(self, stem):
        return self.output_path / f"{stem}.{self.output_format}"


class RandomStateDataset(object):
    """Seeded random normalised states; item ``i`` depends only on (seed, i)."""

    def __init__(self, num_states, num_modes, seed=DEFAULT_SEED, l_min=None):
        if num_states < 0 or num_modes < 1:
            raise InvalidInputError(
                f"need num_states >= 0 and num_modes >= 1, got {num_states}, {num_modes}"
            )
        self.num_states = num_states
        self.num_modes = num_modes
        self.seed = seed
        self.l_min = -(num_modes // 2) if l_min is None else l_min

    def __len__(self):
        return self.num_states

    def _generator(self, idx, stream=0):
        return torch.Generator().manual_seed((self.seed * 1_000_003 + idx) * 4 + stream)

    def __getitem__(self, idx):
        if not 0 <= idx < self.num_states:
            raise IndexError(idx)
        coeffs = torch.randn(self.num_modes, dtype=COMPLEX, generator=self._generator(idx))
        coeffs = coeffs / torch.linalg.vector_norm(coeffs)
        return modes.ModeExpansion(self.l_min, self.l_min + self.num_modes - 1, coeffs)

    def angles(self, idx, count):
        """``count`` window origins in [0, 2 pi) for state ``idx``."""
        u = torch.rand(count, dtype=torch.float64, generator=self._generator(idx, stream=1))
        return (2.0 * math.pi * u).tolist()

    def describe(self, idx):
        return f"random(seed={self.seed}, index={idx}, modes={self.num_modes})"

    def get_batch_indices(self, batch_size):
        return [
            list(range(start, min(start + batch_size, self.num_states)))
            for start in range(0, self.num_states, batch_size)
        ]
