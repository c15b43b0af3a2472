"""JSON model files carrying every parameter plus the feature layout.

Python's float repr round-trips exactly, so saved models reload bit-identical.
"""

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from .dbn import DbnConfig, DbnModel
from .forest import DecisionTree, ForestModel
from .logreg import LinearModel
from .svm import KernelModel

FORMAT_VERSION = 1


def _arr(a):
    return np.asarray(a).tolist()


def model_to_dict(model):
    if isinstance(model, LinearModel):
        return {"model_type": "linear", "w": _arr(model.w), "intercept": model.intercept,
                "C": model.C, "fit_intercept": model.fit_intercept,
                "converged": model.converged, "n_iter": model.n_iter,
                "residual": model.residual}
    if isinstance(model, KernelModel):
        return {"model_type": "kernel", "support_vectors": _arr(model.support_vectors),
                "dual_coef": _arr(model.dual_coef), "intercept": model.intercept,
                "gamma": model.gamma, "C": model.C, "n_iter": model.n_iter,
                "violation": model.violation}
    if isinstance(model, ForestModel):
        trees = [{k: _arr(getattr(t, k)) for k in ("feature", "threshold", "left", "right",
                                                    "value")} for t in model.trees]
        return {"model_type": "forest", "n_estimators": model.n_estimators,
                "seed": model.seed, "n_features": model.n_features, "trees": trees}
    if isinstance(model, DbnModel):
        cfg = asdict(model.config)
        cfg["sizes"] = list(cfg["sizes"])
        return {"model_type": "dbn", "weights": [_arr(w) for w in model.weights],
                "biases": [_arr(b) for b in model.biases], "head_W": _arr(model.head_W),
                "head_b": _arr(model.head_b), "config": cfg}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d):
    kind = d.get("model_type")
    if kind == "linear":
        return LinearModel(np.array(d["w"], dtype=float), d["intercept"], d["C"],
                           d["fit_intercept"], d["converged"], d["n_iter"], d["residual"])
    if kind == "kernel":
        sv = np.array(d["support_vectors"], dtype=float)
        return KernelModel(sv.reshape(len(d["dual_coef"]), -1), np.array(d["dual_coef"]),
                           d["intercept"], d["gamma"], d["C"], None, d["n_iter"],
                           d["violation"])
    if kind == "forest":
        trees = [DecisionTree(np.array(t["feature"], dtype=int),
                              np.array(t["threshold"], dtype=float),
                              np.array(t["left"], dtype=int), np.array(t["right"], dtype=int),
                              np.array(t["value"], dtype=int)) for t in d["trees"]]
        return ForestModel(trees, d["n_estimators"], d["seed"], d["n_features"])
    if kind == "dbn":
        cfg = dict(d["config"])
        cfg["sizes"] = tuple(cfg["sizes"])
        return DbnModel([np.array(w, dtype=float) for w in d["weights"]],
                        [np.array(b, dtype=float) for b in d["biases"]],
                        np.array(d["head_W"], dtype=float), np.array(d["head_b"], dtype=float),
                        DbnConfig(**cfg))
    raise SchemaError(f"unknown model_type {kind!r}")


def save_model(model, path, columns, provenance=None):
    doc = {"format_version": FORMAT_VERSION, "columns": list(columns),
           **model_to_dict(model)}
    if provenance:
        doc["provenance"] = provenance
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    return path


def load_model(path, columns=None):
    """Load a model file; if ``columns`` is given the stored layout must match."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: cannot read model file: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"{path}: unsupported model format {doc.get('format_version')!r}")
    stored = tuple(doc.get("columns", ()))
    if columns is not None and tuple(columns) != stored:
        raise SchemaError(f"{path}: model was trained on a different feature layout "
                          f"({len(stored)} columns vs {len(tuple(columns))})")
    return model_from_dict(doc), stored
