"""Self-describing model files.

An artifact is a single UTF-8 JSON document with sorted keys. Numeric arrays
are stored as ``{"dtype": "<f8", "shape": [...], "b64": ...}`` holding the
raw little-endian bytes, so parameters round-trip bit-exactly.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import __version__
from .._io import atomic_write_text
from ..features import FeatureSpec
from ..vectorizer import Vocabulary
from .forest import ForestModel, Tree
from .linear import LinearModel
from .mlp import MlpModel

FORMAT_VERSION = 1


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a)
    dtype = a.dtype.newbyteorder("<")
    return {
        "dtype": dtype.str,
        "shape": list(a.shape),
        "b64": base64.b64encode(a.astype(dtype).tobytes()).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    raw = base64.b64decode(d["b64"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).astype(np.dtype(d["dtype"]).newbyteorder("="))


def model_kind(model) -> str:
    if isinstance(model, LinearModel):
        return "svm" if model.loss == "hinge" else "logreg"
    if isinstance(model, ForestModel):
        return "rf"
    if isinstance(model, MlpModel):
        return "mlp"
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_to_dict(model) -> dict:
    kind = model_kind(model)
    if kind in ("svm", "logreg"):
        return {
            "kind": kind,
            "weights": encode_array(model.weights),
            "bias": model.bias,
            "loss": model.loss,
            "l2_strength": model.l2_strength,
            "normalize": model.normalize,
        }
    if kind == "rf":
        return {
            "kind": kind,
            "dim": model.dim,
            "seeds": [str(s) for s in model.seeds],
            "trees": [
                {name: encode_array(getattr(t, name)) for name in ("feature", "threshold", "left", "right", "counts")}
                for t in model.trees
            ],
        }
    return {
        "kind": kind,
        "W1": encode_array(model.W1),
        "b1": encode_array(model.b1),
        "w2": encode_array(model.w2),
        "b2": model.b2,
    }


def model_from_dict(d: dict):
    kind = d["kind"]
    if kind in ("svm", "logreg"):
        return LinearModel(decode_array(d["weights"]), d["bias"], d["loss"], d["l2_strength"], d["normalize"])
    if kind == "rf":
        trees = [Tree(**{k: decode_array(v) for k, v in t.items()}) for t in d["trees"]]
        return ForestModel(trees, d["dim"], [int(s) for s in d["seeds"]])
    if kind == "mlp":
        return MlpModel(decode_array(d["W1"]), decode_array(d["b1"]), decode_array(d["w2"]), d["b2"])
    raise ValueError(f"unknown model kind {kind!r}")


def predict(model, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels and scores; a score exactly on the threshold is labeled 0."""
    scores = np.asarray(model.scores(X), dtype=np.float64)
    return (scores > model.threshold).astype(np.int64), scores


def predictions_digest(labels) -> str:
    return hashlib.sha256(np.asarray(labels, dtype=np.int8).tobytes()).hexdigest()


@dataclass
class ModelArtifact:
    model: object
    vocab: Vocabulary
    spec: FeatureSpec
    config: dict = field(default_factory=dict)
    seed: int = 0
    train_accuracy: float | None = None
    train_digest: str | None = None
    run_config: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return model_kind(self.model)

    def record_training(self, X, y) -> None:
        labels, _ = predict(self.model, X)
        self.train_accuracy = float(np.mean(labels == np.asarray(y)))
        self.train_digest = predictions_digest(labels)

    def verify_training(self, X, y) -> bool:
        labels, _ = predict(self.model, X)
        return predictions_digest(labels) == self.train_digest and float(np.mean(labels == np.asarray(y))) == self.train_accuracy

    def to_dict(self) -> dict:
        spec = asdict(self.spec)
        spec["enabled"] = list(spec["enabled"])
        return {
            "format": "udirony-model",
            "format_version": FORMAT_VERSION,
            "toolkit_version": __version__,
            "kind": self.kind,
            "seed": self.seed,
            "config": self.config,
            "run_config": self.run_config,
            "feature_spec": spec,
            "vocabulary": {
                "namespaces": list(self.vocab.namespaces),
                "digest": self.vocab.digest(),
                "entries": [list(e) for e in self.vocab.entries],
            },
            "training": {"accuracy": self.train_accuracy, "predictions_sha256": self.train_digest},
            "model": model_to_dict(self.model),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> ModelArtifact:
        if d.get("format") != "udirony-model":
            raise ValueError("not a model artifact")
        if d["format_version"] > FORMAT_VERSION:
            raise ValueError(f"artifact format {d['format_version']} is newer than supported {FORMAT_VERSION}")
        v = d["vocabulary"]
        vocab = Vocabulary([tuple(e) for e in v["entries"]], tuple(v["namespaces"]))
        if vocab.digest() != v["digest"]:
            raise ValueError("vocabulary digest mismatch; artifact is corrupt")
        fs = dict(d["feature_spec"])
        fs["enabled"] = tuple(fs["enabled"])
        return cls(
            model=model_from_dict(d["model"]),
            vocab=vocab,
            spec=FeatureSpec(**fs),
            config=d["config"],
            seed=d["seed"],
            train_accuracy=d["training"]["accuracy"],
            train_digest=d["training"]["predictions_sha256"],
            run_config=d.get("run_config", {}),
        )

    @classmethod
    def loads(cls, text: str) -> ModelArtifact:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        atomic_write_text(path, self.dumps())

    @classmethod
    def load(cls, path) -> ModelArtifact:
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read())
