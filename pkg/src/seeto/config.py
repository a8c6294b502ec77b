"""Experiment configuration: schema-validated JSON in, frozen dataclasses out."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import jsonschema

from .errors import ConfigError
from .optimizer import MODES, OptimizerConfig

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_POSITIVE_NUM = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "family": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_source": _NONNEG_INT,
                "n_target": _POSITIVE_INT,
                "outlier_targets": _NONNEG_INT,
                "cluster_spread": _POSITIVE_NUM,
                "seed": _NONNEG_INT,
                "dimension": {"type": "integer", "minimum": 2},
                "conflict_offset": {
                    "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                },
                "frame_shape": {
                    "type": "array",
                    "items": _POSITIVE_INT,
                    "minItems": 3,
                    "maxItems": 3,
                },
                "n_frames": _POSITIVE_INT,
                "latent_dim": _POSITIVE_INT,
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_p": _POSITIVE_INT,
                "fe_max": _POSITIVE_INT,
                "gamma": _POSITIVE_INT,
                "temperature": _POSITIVE_NUM,
                "rho": {"type": "number", "minimum": 0, "maximum": 1},
                "tau": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "c_high": {"type": "number", "minimum": 0},
                "c_low": {"type": "number", "minimum": 0},
                "batch_size": _POSITIVE_INT,
                "inner_generations": _POSITIVE_INT,
                "seed": _NONNEG_INT,
                "init_design": _NONNEG_INT,
                "kappa": {"type": "number", "minimum": 0},
                "c_override": {"type": ["number", "null"], "minimum": 0},
                "c_rule_on_raw_similarity": {"type": "boolean"},
                "crossover_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "crossover_eta": _POSITIVE_NUM,
                "mutation_prob": {
                    "type": ["number", "null"], "minimum": 0, "maximum": 1,
                },
                "mutation_eta": _POSITIVE_NUM,
                "noise_floor": _POSITIVE_NUM,
                "eval_workers": _POSITIVE_INT,
            },
        },
        "modes": {
            "type": "array",
            "items": {"enum": list(MODES)},
            "minItems": 1,
            "uniqueItems": True,
        },
        "seeds": {
            "type": "array",
            "items": _NONNEG_INT,
            "minItems": 1,
            "uniqueItems": True,
        },
        "output_dir": {"type": "string", "minLength": 1},
        "workers": _POSITIVE_INT,
        "reference_fe": _POSITIVE_INT,
        "hv_checkpoints": {
            "type": "array", "items": _POSITIVE_INT, "minItems": 1,
        },
    },
}

OUTPUT_DIR_ENV = "SEETO_OUTPUT_DIR"


@dataclass(frozen=True)
class FamilyConfig:
    n_source: int = 20
    n_target: int = 10
    outlier_targets: int = 3
    cluster_spread: float = 0.05
    seed: int = 7
    dimension: int = 5
    conflict_offset: float = 0.3
    frame_shape: Tuple[int, int, int] = (1, 4, 4)
    n_frames: int = 6
    latent_dim: int = 16


@dataclass(frozen=True)
class ExperimentConfig:
    family: FamilyConfig = field(default_factory=FamilyConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    modes: Tuple[str, ...] = ("seeto", "baseline")
    seeds: Tuple[int, ...] = tuple(range(10))
    output_dir: str = "seeto-out"
    workers: int = 1
    reference_fe: int = 20
    hv_checkpoints: Tuple[int, ...] = (20, 40, 60)

    def resolved_output_dir(self) -> Path:
        """Output directory, with the environment override applied."""
        import os

        override = os.environ.get(OUTPUT_DIR_ENV)
        return Path(override) if override else Path(self.output_dir)

    def to_jsonable(self) -> dict:
        d = asdict(self)
        d["family"]["frame_shape"] = list(self.family.frame_shape)
        d["modes"] = list(self.modes)
        d["seeds"] = list(self.seeds)
        d["hv_checkpoints"] = list(self.hv_checkpoints)
        return d


def _first_schema_error(data) -> Optional[str]:
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if not errors:
        return None
    err = errors[0]
    path = ".".join(str(p) for p in err.absolute_path) or "(root)"
    return f"{path}: {err.message}"


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed config mapping and build the dataclasses."""
    problem = _first_schema_error(data)
    if problem is not None:
        raise ConfigError(f"config schema error at {problem}")
    fam_raw = dict(data.get("family", {}))
    if "frame_shape" in fam_raw:
        fam_raw["frame_shape"] = tuple(fam_raw["frame_shape"])
    family = FamilyConfig(**fam_raw)
    optimizer = OptimizerConfig(**data.get("optimizer", {}))
    cfg = ExperimentConfig(
        family=family,
        optimizer=optimizer,
        modes=tuple(data.get("modes", ("seeto", "baseline"))),
        seeds=tuple(int(s) for s in data.get("seeds", range(10))),
        output_dir=str(data.get("output_dir", "seeto-out")),
        workers=int(data.get("workers", 1)),
        reference_fe=int(data.get("reference_fe", 20)),
        hv_checkpoints=tuple(data.get("hv_checkpoints", (20, 40, 60))),
    )
    _semantic_checks(cfg)
    return cfg


def _semantic_checks(cfg: ExperimentConfig) -> None:
    try:
        cfg.optimizer.validate()
    except Exception as exc:
        raise ConfigError(f"optimizer settings invalid: {exc}") from exc
    if cfg.family.outlier_targets > cfg.family.n_target:
        raise ConfigError("family.outlier_targets cannot exceed family.n_target")
    flat = 1
    for v in cfg.family.frame_shape:
        flat *= int(v)
    if cfg.family.latent_dim > flat:
        raise ConfigError("family.latent_dim cannot exceed the flattened frame size")
    if cfg.reference_fe > cfg.optimizer.fe_max:
        raise ConfigError("reference_fe cannot exceed optimizer.fe_max")
    for fe in cfg.hv_checkpoints:
        if fe > cfg.optimizer.fe_max:
            raise ConfigError("hv_checkpoints must not exceed optimizer.fe_max")


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    return config_from_dict(data)
