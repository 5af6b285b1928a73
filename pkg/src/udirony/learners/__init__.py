"""Classical classifiers over sparse feature matrices.

All hyperparameter defaults live in the config dataclasses imported here;
``make_config`` builds one from a plain dict of overrides.
"""

from __future__ import annotations

from dataclasses import asdict, fields

from ._common import TrainingError
from .artifact import ModelArtifact, predict
from .forest import ForestConfig, ForestModel, train_forest
from .linear import LinearModel, LogRegConfig, SvmConfig, train_logreg, train_svm
from .mlp import MlpConfig, MlpModel, train_mlp

MODELS = ("svm", "logreg", "rf", "mlp")

_REGISTRY = {
    "svm": (SvmConfig, train_svm),
    "logreg": (LogRegConfig, train_logreg),
    "rf": (ForestConfig, train_forest),
    "mlp": (MlpConfig, train_mlp),
}


def make_config(kind: str, overrides: dict | None = None):
    """Config dataclass for ``kind`` with string or typed overrides applied."""
    cls = _REGISTRY[kind][0]
    overrides = dict(overrides or {})
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for key, value in overrides.items():
        if key not in known:
            raise ValueError(f"unknown {kind} option {key!r}")
        kw[key] = _coerce(value, getattr(cls(), key))
    return cls(**kw)


def _coerce(value, default):
    if not isinstance(value, str):
        return value
    if value.lower() in ("none", "null"):
        return None
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if default is None or isinstance(default, str):
        try:
            return int(value)
        except ValueError:
            return value
    return value


def train(kind: str, X, y, config=None, seed: int = 0):
    if kind not in _REGISTRY:
        raise ValueError(f"unknown model {kind!r}; choose from {', '.join(MODELS)}")
    if config is None or isinstance(config, dict):
        config = make_config(kind, config)
    return _REGISTRY[kind][1](X, y, config, seed=seed)


def config_dict(config) -> dict:
    return asdict(config)


__all__ = [
    "MODELS",
    "ForestConfig",
    "ForestModel",
    "LinearModel",
    "LogRegConfig",
    "MlpConfig",
    "MlpModel",
    "ModelArtifact",
    "SvmConfig",
    "TrainingError",
    "config_dict",
    "make_config",
    "predict",
    "train",
    "train_forest",
    "train_logreg",
    "train_mlp",
    "train_svm",
]
