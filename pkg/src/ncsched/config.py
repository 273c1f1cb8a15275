"""JSON run configuration: schema, validation and conversion to model objects."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .certificates import DesignGrid, ModeScalars
from .cycles import T_MAX_DEFAULT, Cycle, generate_candidate_cycle, prop4_partner
from .errors import ConfigError
from .plants import NCSConfig, build_config, design_lqr_gains

_matrix = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}
_index_set = {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["plants", "M"],
    "properties": {
        "plants": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["A", "B"],
                "properties": {"A": _matrix, "B": _matrix, "K": _matrix},
            },
        },
        "lqr": {
            "type": "object",
            "additionalProperties": False,
            "required": ["Q", "R"],
            "properties": {"Q": _matrix, "R": _matrix},
        },
        "M": {"type": "integer", "minimum": 1},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h_s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "h_u": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "kappa_min": {"type": "number", "exclusiveMinimum": 0},
                "lmi_tol": {"type": "number", "minimum": 0},
            },
        },
        "cycle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["source"],
            "properties": {
                "source": {"enum": ["explicit", "prop3", "prop4", "random"]},
                "sets": {"type": "array", "minItems": 2, "items": _index_set},
                "v0": _index_set,
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "scalars": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["lambda_s", "lambda_u", "mu_su", "mu_us"],
                "properties": {
                    k: {"type": "number", "exclusiveMinimum": 0}
                    for k in ("lambda_s", "lambda_u", "mu_su", "mu_us")
                },
            },
        },
        "T_max": {"type": "integer", "minimum": 1},
        "horizon": {"type": "integer", "minimum": 0},
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["uniform", "explicit"]},
                "box": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "states": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            },
        },
        "round_robin": {
            "type": "object",
            "additionalProperties": False,
            "required": ["groups"],
            "properties": {
                "groups": {"type": "array", "minItems": 2, "items": _index_set},
                "dwell": {"type": "integer", "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}


@dataclass
class RunConfig:
    ncs: NCSConfig
    grid: DesignGrid
    raw: dict
    T_max: int = T_MAX_DEFAULT
    horizon: int = 60
    scalars: list[ModeScalars] | None = None
    output_dir: str | None = None
    cycle_spec: dict = field(default_factory=dict)

    def cycle(self, seed: int | None = None) -> Cycle:
        """Candidate cycle named by the config; ``seed`` overrides a random source's seed."""
        spec = self.cycle_spec
        if not spec:
            raise ConfigError("config has no 'cycle' section")
        N, M = self.ncs.N, self.ncs.M
        src = spec["source"]
        try:
            if src == "explicit":
                if "sets" not in spec:
                    raise ConfigError("explicit cycle needs 'sets'")
                W = Cycle.from_sets(N, spec["sets"])
            elif src == "prop3":
                if M != 1:
                    raise ConfigError("the rotation cycle needs M = 1")
                W = Cycle.from_sets(N, [(i,) for i in range(1, N + 1)])
            elif src == "prop4":
                if 2 * M < N:
                    raise ConfigError("the two-vertex cycle needs M >= N/2")
                v0 = tuple(spec.get("v0", range(1, M + 1)))
                W = Cycle.from_sets(N, [v0, prop4_partner(N, M, v0)])
            else:
                s = spec.get("seed", 0) if seed is None else seed
                W = generate_candidate_cycle(N, M, s)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad cycle: {exc}") from exc
        if W.M != M:
            raise ConfigError(f"cycle vertices hold {W.M} plants, config has M={M}")
        return W

    def initial_states(self, seed: int | None = None) -> np.ndarray:
        """(N, trials, d) initial states."""
        spec = self.raw.get("initial", {"kind": "uniform"})
        N, d = self.ncs.N, self.ncs.dim
        if spec["kind"] == "explicit":
            x = np.asarray(spec.get("states", []), dtype=float)
            if x.shape != (N, d):
                raise ConfigError(f"explicit initial states must have shape ({N}, {d})")
            return x[:, None, :]
        rng = np.random.default_rng(spec.get("seed", 0) if seed is None else seed)
        box = spec.get("box", 10.0)
        return rng.uniform(-box, box, size=(N, spec.get("count", 100), d))


def _matrix_or_fail(x, what: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ConfigError(f"{what} must be a rectangular matrix")
    return a


def parse_config(obj: dict) -> RunConfig:
    try:
        jsonschema.validate(obj, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    try:
        A = [_matrix_or_fail(p["A"], f"plant {i} A") for i, p in enumerate(obj["plants"], 1)]
        B = [_matrix_or_fail(p["B"], f"plant {i} B") for i, p in enumerate(obj["plants"], 1)]
        have_k = ["K" in p for p in obj["plants"]]
        if all(have_k):
            K = [_matrix_or_fail(p["K"], f"plant {i} K") for i, p in enumerate(obj["plants"], 1)]
        elif not any(have_k) and "lqr" in obj:
            K = design_lqr_gains(A, B, np.asarray(obj["lqr"]["Q"], float), np.asarray(obj["lqr"]["R"], float))
        else:
            raise ConfigError("give K for every plant, or omit all K and supply 'lqr' weights")
        ncs = build_config(A, B, K, obj["M"])
        g = obj.get("grid", {})
        grid = DesignGrid(
            h_s=g.get("h_s", 1e-2),
            h_u=g.get("h_u", 1e-2),
            kappa_min=g.get("kappa_min", 1e-8),
            lmi_tol=g.get("lmi_tol", 1e-9),
        )
        scalars = None
        if "scalars" in obj:
            if len(obj["scalars"]) != ncs.N:
                raise ConfigError(f"'scalars' must list {ncs.N} plants")
            scalars = [ModeScalars(**s) for s in obj["scalars"]]
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        ncs=ncs,
        grid=grid,
        raw=obj,
        T_max=obj.get("T_max", T_MAX_DEFAULT),
        horizon=obj.get("horizon", 60),
        scalars=scalars,
        output_dir=obj.get("output", {}).get("dir"),
        cycle_spec=obj.get("cycle", {}),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(obj)
