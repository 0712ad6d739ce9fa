"""Audit and table reports, and the JSON schema every emitted report satisfies."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from . import __version__

DESIGN_DECISIONS = {
    "rng": "splitmix64 counter streams",
    "optimizer_default": "adam",
    "training_marginal": "uniform in-batch permutation",
    "evaluation_marginal_default": "derangement",
    "epoch_estimate": "mean of batch estimates",
    "short_batch": "dropped",
    "bit_map_default": "01",
    "tie_break": "output equal to threshold guesses 0",
    "verdict_gate_sigmas": 4,
    "test_index_offset": "test sample indices continue after the train indices",
    "huncc_code": "seeded-invertible",
    "same_key_train_test": True,
}

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_STR = {"type": "string"}

MINE_SCHEMA = {
    "type": "object",
    "required": ["kind", "scheme", "test_mi_nats", "best_train_mi_nats", "config", "evaluation"],
    "properties": {
        "kind": {"const": "mine"},
        "scheme": _STR,
        "test_mi_nats": _NUM,
        "best_train_mi_nats": _NUM,
        "last_train_mi_nats": _NUM,
        "epochs_run": {"type": "integer", "minimum": 1},
        "config": {"type": "object"},
        "dataset_fingerprint": _STR,
        "evaluation": {"type": "object"},
    },
}

CPA_SCHEMA = {
    "type": "object",
    "required": ["kind", "scheme", "trials", "correct", "accuracy", "confusion", "verdict"],
    "properties": {
        "kind": {"const": "cpa"},
        "scheme": _STR,
        "trials": {"type": "integer", "minimum": 1},
        "correct": {"type": "integer", "minimum": 0},
        "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "confusion": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "integer", "minimum": 0}},
        },
        "threshold": _NUM,
        "verdict": {"enum": ["BROKEN", "SECURE-CONSISTENT"]},
        "verdict_threshold": _NUM,
        "train_accuracy": _NUM,
        "train_test_gap": _NUM,
        "final_train_bce_nats": _NUM,
        "config": {"type": "object"},
        "dataset_fingerprint": _STR,
    },
}

AUDIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cryptaudit audit report",
    "type": "object",
    "required": ["kind", "toolkit_version", "scheme", "net", "scale", "dataset", "config",
                 "design_decisions", "wall_seconds"],
    "properties": {
        "kind": {"const": "audit"},
        "toolkit_version": _STR,
        "scheme": _STR,
        "faults": {"type": "object"},
        "net": {"enum": ["small", "big", "custom"]},
        "scale": {"enum": ["desk", "full", "custom"]},
        "dataset": {
            "type": "object",
            "required": ["fingerprint", "n_train", "n_test", "seed", "key_seed"],
            "properties": {
                "fingerprint": _STR,
                "n_train": {"type": "integer"},
                "n_test": {"type": "integer"},
                "seed": {"type": "integer", "minimum": 0},
                "key_seed": {"type": "integer", "minimum": 0},
            },
        },
        "config": {"type": "object"},
        "design_decisions": {"type": "object"},
        "mine": {"oneOf": [{"type": "null"}, MINE_SCHEMA]},
        "cpa": {"oneOf": [{"type": "null"}, CPA_SCHEMA]},
        "wall_seconds": {"type": "number", "minimum": 0},
    },
}

TABLE_ROW_SCHEMA = {
    "type": "object",
    "required": ["row", "scheme", "metric", "published", "value", "check", "passed"],
    "properties": {
        "row": _STR,
        "scheme": _STR,
        "metric": {"enum": ["test_mi_nats", "accuracy", "verdict"]},
        "published": {"type": ["number", "string", "null"]},
        "value": {"type": ["number", "string", "null"]},
        "check": _STR,
        "passed": {"type": ["boolean", "null"]},
        "error": {"type": ["string", "null"]},
        "report": {"type": ["string", "null"]},
    },
}

TABLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cryptaudit table reproduction",
    "type": "object",
    "required": ["kind", "toolkit_version", "table", "scale", "rows", "all_passed", "wall_seconds"],
    "properties": {
        "kind": {"const": "table"},
        "toolkit_version": _STR,
        "table": {"type": "integer", "minimum": 1, "maximum": 4},
        "caption": _STR,
        "scale": {"enum": ["desk", "full"]},
        "net": _STR,
        "seed": {"type": "integer", "minimum": 0},
        "rows": {"type": "array", "items": TABLE_ROW_SCHEMA},
        "all_passed": {"type": "boolean"},
        "errors": {"type": "integer", "minimum": 0},
        "config": {"type": "object"},
        "wall_seconds": {"type": "number", "minimum": 0},
    },
}

SCHEMAS = {"audit": AUDIT_SCHEMA, "table": TABLE_SCHEMA, "mine": MINE_SCHEMA, "cpa": CPA_SCHEMA}


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` unless ``doc`` matches the schema for its kind."""
    schema = SCHEMAS.get(doc.get("kind"))
    if schema is None:
        raise jsonschema.ValidationError(f"unknown report kind {doc.get('kind')!r}")
    jsonschema.validate(doc, schema)


@dataclass
class AuditReport:
    scheme: str
    net: str
    scale: str
    dataset: dict
    config: dict
    faults: dict = field(default_factory=dict)
    mine: dict | None = None
    cpa: dict | None = None
    wall_seconds: float = 0.0
    design_decisions: dict = field(default_factory=lambda: dict(DESIGN_DECISIONS))

    def to_dict(self) -> dict:
        return {
            "kind": "audit",
            "toolkit_version": __version__,
            "scheme": self.scheme,
            "faults": self.faults,
            "net": self.net,
            "scale": self.scale,
            "dataset": self.dataset,
            "config": self.config,
            "design_decisions": self.design_decisions,
            "mine": self.mine,
            "cpa": self.cpa,
            "wall_seconds": self.wall_seconds,
        }


def write_json(doc: dict, path) -> None:
    validate_report(doc)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def dump_schema(path, kind="audit") -> None:
    with open(path, "w") as fh:
        json.dump(SCHEMAS[kind], fh, indent=2)
        fh.write("\n")
