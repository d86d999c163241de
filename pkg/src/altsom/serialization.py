"""Lossless text serialization of trained maps.

Models are stored as self-describing JSON: the hyperparameters, the
input dimensionality, every node's vectors and counters, and the edge
list.  Floats round-trip exactly (json emits shortest-repr doubles, 17
significant digits), comfortably above the 15 required for inference
equivalence.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .core import Node, Params, Phase, SomModel

FORMAT_NAME = "altsom-model"
FORMAT_VERSION = 1


def model_to_dict(model: SomModel) -> dict:
    """JSON-ready tree describing the full model state."""
    edges = sorted(
        (a, b)
        for a, peers in model.connections.items()
        for b in peers
        if a < b
    )
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "m": model.m,
        "phase": model.phase.value,
        "nwins": model.nwins,
        "next_id": model.next_id,
        "params": dataclasses.asdict(model.params),
        "class_names": list(model.class_names) if model.class_names is not None else None,
        "nodes": [
            {
                "id": node.id,
                "c": node.c.tolist(),
                "omega": node.omega.tolist(),
                "delta": node.delta.tolist(),
                "delta_hat": node.delta_hat.tolist(),
                "t": node.t,
                "wins": node.wins,
                "class": node.class_label,
            }
            for node in model.nodes
        ],
        "edges": [list(edge) for edge in edges],
    }


def model_from_dict(payload: dict) -> SomModel:
    """Rebuild a model from :func:`model_to_dict` output."""
    if payload.get("format") != FORMAT_NAME:
        raise ValueError("not a model document")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')}")
    params = Params(**payload["params"])
    model = SomModel(m=payload["m"], params=params)
    for entry in sorted(payload["nodes"], key=lambda e: e["id"]):
        node = Node(
            id=entry["id"],
            c=np.array(entry["c"], dtype=np.float64),
            omega=np.array(entry["omega"], dtype=np.float64),
            delta=np.array(entry["delta"], dtype=np.float64),
            delta_hat=np.array(entry["delta_hat"], dtype=np.float64),
            t=entry["t"],
            wins=entry["wins"],
            class_label=entry["class"],
        )
        model.add_node(node)
    for a, b in payload["edges"]:
        try:
            model.connect(a, b)
        except (KeyError, ValueError):
            raise ValueError(
                f"edge ({a}, {b}) does not join two distinct live nodes") from None
    model.phase = Phase(payload["phase"])
    model.nwins = payload["nwins"]
    model.next_id = max(model.next_id, payload["next_id"])
    names = payload.get("class_names")
    model.class_names = tuple(names) if names is not None else None
    return model


def save_model(model: SomModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path: str | Path) -> SomModel:
    return model_from_dict(json.loads(Path(path).read_text()))
