"""Run configuration: sectioned ``key = value`` text files, echoed back as JSON."""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass, field, fields

from .model import ModelConfig


class ConfigError(ValueError):
    pass


# section -> key -> (type, default, constraint)
_SCHEMA: dict[str, dict[str, tuple]] = {
    "model": {
        "n_layers": (int, 4, "nonneg"),
        "n_heads": (int, 8, "pos"),
        "d_model": (int, 128, "pos"),
        "n_kernels": (int, 16, "pos"),
        "mu_max": (float, 12.0, "pos"),
        "ffn_mult": (int, 4, "pos"),
        "init_distance": (float, 10.0, "pos"),
        "bias_init_scale": (float, 8.0, "nonneg"),
    },
    "loss": {
        "clip": (bool, True, None),
        "d_max": (float, 20.0, "pos"),
        "w_atom": (float, 1.0, "nonneg"),
        "w_motif": (float, 1.0, "nonneg"),
        "w_cond": (float, 1.0, "nonneg"),
        "max_translation": (float, 10.0, "nonneg"),
    },
    "optim": {
        "lr": (float, 3e-3, "nonneg"),
        "beta1": (float, 0.9, "unit"),
        "beta2": (float, 0.999, "unit"),
        "eps": (float, 1e-8, "pos"),
        "max_grad_norm": (float, 1.0, "nonneg"),
        "schedule": (str, "cosine", ("constant", "cosine")),
        "min_lr_ratio": (float, 0.1, "nonneg"),
        "steps": (int, 500, "nonneg"),
        "epochs": (int, 100, "nonneg"),
        "batch_size": (int, 4, "pos"),
        "checkpoint_every": (int, 100, "pos"),
    },
    "run": {
        "seed": (int, None, "required"),
        "dtype": (str, "float64", ("float64", "float32")),
        "mode": (str, "pretrain", ("pretrain", "finetune", "scratch")),
    },
    "paths": {
        "manifest": (str, "", "path"),
        "val_manifest": (str, "", "path"),
        "checkpoint_dir": (str, "checkpoints", "path"),
        "report_dir": (str, "reports", "path"),
    },
}


def _coerce(section: str, key: str, raw):
    typ, _, rule = _SCHEMA[section][key]
    try:
        if typ is bool:
            if isinstance(raw, bool):
                value = raw
            elif str(raw).strip().lower() in ("1", "true", "yes", "on"):
                value = True
            elif str(raw).strip().lower() in ("0", "false", "no", "off"):
                value = False
            else:
                raise ValueError(raw)
        elif typ is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            value = int(raw)
        else:
            value = typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}") from None
    if rule == "pos" and not value > 0:
        raise ConfigError(f"[{section}] {key} must be positive, got {value}")
    if rule == "nonneg" and value < 0:
        raise ConfigError(f"[{section}] {key} must be non-negative, got {value}")
    if rule == "unit" and not 0 <= value < 1:
        raise ConfigError(f"[{section}] {key} must lie in [0, 1), got {value}")
    if isinstance(rule, tuple) and value not in rule:
        raise ConfigError(f"[{section}] {key} must be one of {rule}, got {value!r}")
    return value


@dataclass
class RunConfig:
    values: dict[str, dict] = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    @property
    def model(self) -> ModelConfig:
        m = self.values["model"]
        return ModelConfig(**{f.name: m[f.name] for f in fields(ModelConfig)})

    @property
    def d_max(self) -> float | None:
        loss = self.values["loss"]
        return loss["d_max"] if loss["clip"] else None

    def to_dict(self) -> dict:
        return json.loads(json.dumps(self.values))

    def to_json(self) -> str:
        return json.dumps(self.values, indent=2, sort_keys=True) + "\n"

    def replace(self, section: str, **kw) -> "RunConfig":
        new = {s: dict(v) for s, v in self.values.items()}
        for k, v in kw.items():
            new[section][k] = _coerce(section, k, v)
        return RunConfig(new)


def build_config(raw: dict[str, dict], base_dir: str = ".") -> RunConfig:
    """Validate a {section: {key: value}} mapping and fill defaults."""
    unknown_sections = sorted(set(raw) - set(_SCHEMA))
    if unknown_sections:
        raise ConfigError(f"unknown section(s): {unknown_sections}")
    values: dict[str, dict] = {}
    for section, schema in _SCHEMA.items():
        given = raw.get(section, {}) or {}
        unknown = sorted(set(given) - set(schema))
        if unknown:
            raise ConfigError(f"[{section}] unknown key(s): {unknown}")
        out = {}
        for key, (typ, default, rule) in schema.items():
            if key in given:
                out[key] = _coerce(section, key, given[key])
            elif rule == "required":
                raise ConfigError(f"[{section}] {key} is required")
            else:
                out[key] = default
            if rule == "path" and out[key] and not os.path.isabs(out[key]):
                out[key] = os.path.normpath(os.path.join(os.path.abspath(base_dir), out[key]))
        values[section] = out
    return RunConfig(values)


def parse_config_text(text: str, base_dir: str = ".") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return build_config(raw, base_dir)


def load_config(path) -> RunConfig:
    path = str(path)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    base = os.path.dirname(os.path.abspath(path))
    if path.lower().endswith(".json"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc.msg}") from None
        return build_config(raw, base)
    return parse_config_text(text, base)


def write_config_text(cfg: RunConfig) -> str:
    lines = []
    for section, values in cfg.values.items():
        lines.append(f"[{section}]")
        for k, v in values.items():
            lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v}")
        lines.append("")
    return "\n".join(lines)
