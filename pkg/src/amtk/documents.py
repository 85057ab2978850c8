"""JSON model documents for Kripke and action models.

    {"agents": ["a"], "kind": "action",
     "nodes": [{"id": "x1", "pre": "[a]p1 | [a]p2"}, ...],
     "relations": {"a": [["x1", "x2"]]},
     "actual": ["x1"]}

Kripke documents use "val": [propositions] instead of "pre".
"""

from __future__ import annotations

import json
from pathlib import Path

from .action import ActionModel, sort_key
from .formula import parse, render
from .kripke import KripkeModel


class DocumentError(ValueError):
    pass


def _node_id(x) -> str:
    return x if isinstance(x, str) else sort_key(x)


def model_from_dict(doc: dict) -> ActionModel | KripkeModel:
    try:
        kind = doc["kind"]
        nodes = doc["nodes"]
        agents = frozenset(doc.get("agents", ()))
        relations = {a: [tuple(e) for e in edges] for a, edges in doc.get("relations", {}).items()}
        actual = frozenset(doc.get("actual", ()))
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed model document: {exc}") from None
    for a, edges in relations.items():
        for e in edges:
            if len(e) != 2:
                raise DocumentError(f"edge {list(e)} of agent {a} is not a pair")
    ids = [n.get("id") for n in nodes]
    if any(not isinstance(i, str) for i in ids):
        raise DocumentError("every node needs a string id")
    try:
        if kind == "action":
            pre = {n["id"]: parse(n.get("pre", "top")) for n in nodes}
            return ActionModel(tuple(ids), pre, relations, actual, agents)
        if kind == "kripke":
            val = {n["id"]: frozenset(n.get("val", ())) for n in nodes}
            return KripkeModel(tuple(ids), val, relations, actual, agents)
    except ValueError as exc:
        raise DocumentError(str(exc)) from None
    raise DocumentError(f"unknown model kind {kind!r}")


def model_to_dict(model: ActionModel | KripkeModel) -> dict:
    if isinstance(model, ActionModel):
        kind = "action"
        items = model.events
        nodes = [{"id": _node_id(x), "pre": render(model.pre[x])} for x in items]
    else:
        kind = "kripke"
        items = model.worlds
        nodes = [{"id": _node_id(w), "val": sorted(model.valuation[w])} for w in items]
    relations = {
        a: sorted([_node_id(u), _node_id(v)] for u, v in model.relations.get(a, ()))
        for a in sorted(model.agents)
    }
    return {
        "agents": sorted(model.agents),
        "kind": kind,
        "nodes": nodes,
        "relations": relations,
        "actual": sorted(_node_id(x) for x in model.actual),
    }


def load_model(path: str | Path) -> ActionModel | KripkeModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(model: ActionModel | KripkeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def fixture_path(name: str) -> Path:
    return Path(__file__).with_name("fixtures") / name
