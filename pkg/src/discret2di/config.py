"""Pipeline configuration: defaults, JSON loading, overrides and hashing.

Configuration is a nested plain dict so command-line --set key=value
overrides can address any field by dotted path. Typed views (CatVaeConfig)
are constructed on demand. Artifacts persist the config hash and the seed so
stale mixtures of outputs are detectable.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os

from .catvae import CatVaeConfig

SEED_ENV_VAR = "DISCRET2DI_SEED"


class ConfigFileError(ValueError):
    pass


def default_config() -> dict:
    return {
        "seed": 0,
        "channels": ["h1", "h2", "h3"],
        "train_fraction": 0.7,
        "catvae": {
            "categories": 10,
            "temperature": 0.3,
            "beta": 0.2,
            "batch_size": 64,
            "max_epochs": 400,
            "patience": 40,
            "learning_rate": 1e-3,
            "encoder_hidden": [256, 256, 8],
            "decoder_hidden": [256, 256, 16],
        },
        "gmm": {"n_components": 7, "max_iters": 200, "tol": 1e-6},
        "thresholds": {
            "likelihood": -50.0,
            "rule_confidence": 0.005,
            "min_support": 0.01,
        },
        "simulation": {"samples_per_state": 50, "noise_sigma": 0.1, "cycles": 15},
        "diagnosis": {"max_diagnosis_size": 3},
        "health_map": {"occupancy_threshold": 0.05},
    }


def synthetic_config(categories: int, seed: int = 0) -> dict:
    """Smaller defaults for the 2-D synthetic benchmarks."""
    cfg = default_config()
    cfg["seed"] = seed
    cfg["channels"] = ["x1", "x2"]
    cfg["catvae"].update(
        {
            "categories": categories,
            "temperature": 0.5,
            "beta": 0.1,
            "max_epochs": 300,
            "encoder_hidden": [64, 64, 8],
            "decoder_hidden": [64, 64, 8],
        }
    )
    cfg["gmm"]["n_components"] = categories
    return cfg


def _deep_update(base: dict, extra: dict) -> dict:
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply "dotted.path=value" overrides; values parse as JSON, else string."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigFileError(f"override {item!r} is not of the form key=value")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        keys = path.split(".")
        for key in keys[:-1]:
            if key not in node or not isinstance(node[key], dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = value
    return cfg


def load_config(path=None, overrides=None, env=None) -> dict:
    """Defaults, then the file, then DISCRET2DI_SEED, then --set overrides."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigFileError(f"no such config file: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigFileError(f"invalid JSON in {path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigFileError(f"{path}: top level must be an object")
        _deep_update(cfg, file_cfg)
    env = os.environ if env is None else env
    if env.get(SEED_ENV_VAR):
        try:
            cfg["seed"] = int(env[SEED_ENV_VAR])
        except ValueError:
            raise ConfigFileError(
                f"{SEED_ENV_VAR} must be an integer, got {env[SEED_ENV_VAR]!r}"
            ) from None
    apply_overrides(cfg, overrides)
    return cfg


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def artifact_metadata(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "seed": int(cfg["seed"])}


def catvae_config(cfg: dict, input_dim: int, seed: int | None = None) -> CatVaeConfig:
    """Typed CatVAE view of the pipeline config for the given input width."""
    c = cfg["catvae"]
    k = int(c["categories"])
    return CatVaeConfig(
        input_dim=input_dim,
        categories=k,
        encoder_layers=tuple([input_dim, *c["encoder_hidden"]]),
        decoder_layers=tuple([k, *c["decoder_hidden"]]),
        temperature=float(c["temperature"]),
        beta=float(c["beta"]),
        batch_size=int(c["batch_size"]),
        max_epochs=int(c["max_epochs"]),
        patience=int(c["patience"]),
        learning_rate=float(c["learning_rate"]),
        seed=int(cfg["seed"] if seed is None else seed),
    )


def clone(cfg: dict) -> dict:
    return copy.deepcopy(cfg)
