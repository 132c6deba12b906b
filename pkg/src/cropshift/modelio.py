"""Versioned model serialization.

Models round-trip losslessly through JSON: Python emits shortest-round-trip
float literals, so every float64 is preserved exactly. Output bytes are
deterministic (sorted keys, fixed separators).
"""

import json

import numpy as np
from scipy.linalg import cho_factor

from cropshift.classify import ForestModel, ForestParams, LdaModel
from cropshift.classify.forest import Tree
from cropshift.dataset import ClassPriors
from cropshift.errors import ParseError

MODEL_FORMAT = "cropshift-model"
MODEL_SCHEMA_VERSION = 1


def _priors_to_obj(priors: ClassPriors) -> dict:
    return {
        "region_id": priors.region_id,
        "classes": list(priors.classes),
        "values": priors.values.tolist(),
    }


def _priors_from_obj(obj) -> ClassPriors:
    return ClassPriors(obj["region_id"], tuple(obj["classes"]), np.array(obj["values"]))


def model_to_obj(model) -> dict:
    base = {"format": MODEL_FORMAT, "schema_version": MODEL_SCHEMA_VERSION}
    if isinstance(model, LdaModel):
        base.update(
            kind="lda",
            class_list=list(model.class_list),
            class_means=model.class_means.tolist(),
            covariance=model.covariance.tolist(),
            train_priors=_priors_to_obj(model.train_priors),
            ridge=model.ridge,
        )
        return base
    if isinstance(model, ForestModel):
        base.update(
            kind="rf",
            class_list=list(model.class_list),
            n_features=model.n_features,
            params={
                "n_trees": model.params.n_trees,
                "features_per_split": model.params.features_per_split,
                "min_leaf": model.params.min_leaf,
                "max_depth": model.params.max_depth,
                "seed": model.params.seed,
            },
            trees=[
                {
                    "feature": tree.feature.tolist(),
                    "threshold": tree.threshold.tolist(),
                    "left": tree.left.tolist(),
                    "right": tree.right.tolist(),
                    "counts": tree.counts.tolist(),
                }
                for tree in model.trees
            ],
        )
        return base
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_obj(obj):
    if obj.get("format") != MODEL_FORMAT:
        raise ParseError("not a model file (bad format tag)")
    if obj.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ParseError(
            f"unsupported model schema version {obj.get('schema_version')!r}"
        )
    kind = obj.get("kind")
    if kind == "lda":
        covariance = np.array(obj["covariance"])
        return LdaModel(
            tuple(obj["class_list"]),
            np.array(obj["class_means"]),
            covariance,
            _priors_from_obj(obj["train_priors"]),
            float(obj["ridge"]),
            cho_factor(covariance, lower=True),
        )
    if kind == "rf":
        params = ForestParams(**obj["params"])
        trees = [
            Tree(
                np.array(t["feature"], dtype=np.int32),
                np.array(t["threshold"], dtype=np.float64),
                np.array(t["left"], dtype=np.int32),
                np.array(t["right"], dtype=np.int32),
                np.array(t["counts"], dtype=np.int64),
            )
            for t in obj["trees"]
        ]
        return ForestModel(trees, params, tuple(obj["class_list"]), int(obj["n_features"]))
    raise ParseError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_obj(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"model file is not valid JSON: {exc}") from exc
    return model_from_obj(obj)
