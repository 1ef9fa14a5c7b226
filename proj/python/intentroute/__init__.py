"""Python bindings for the intent validator, grounding and routing core."""

import json as _json

from . import _intentroute as _core
from ._intentroute import (
    ConfigError,
    EndpointError,
    EntityError,
    GroundingError,
    RESULTS_SCHEMA_VERSION,
    TransportError,
)

__all__ = [
    "ConfigError",
    "EndpointError",
    "EntityError",
    "GroundingError",
    "RESULTS_SCHEMA_VERSION",
    "TransportError",
    "adversarial",
    "benchmark",
    "compile_intent",
    "confusion",
    "corruption_audit",
    "ground",
    "latitude_edge_removal",
    "parse_program",
    "route",
    "snapshot",
    "validate",
]


def _text(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else _json.dumps(obj)


def validate(program, *, topology=None, time_s=0.0, events=(), mode="universal",
             max_pairs=400, fallback=False):
    """Run the eight passes. `program` is a dict or JSON text."""
    return _json.loads(_core.validate(_text(program), _text(topology), time_s,
                                      list(events), mode, max_pairs, fallback))


def ground(program, *, topology=None, time_s=0.0, events=()):
    return _json.loads(_core.ground(_text(program), _text(topology), time_s,
                                    list(events)))


def route(src, dst, *, program=None, topology=None, time_s=0.0, events=()):
    """Shortest path, optionally on the graph constrained by `program`."""
    return _json.loads(_core.route(src, dst, _text(program), _text(topology),
                                   time_s, list(events)))


def compile_intent(intent, *, backend="rule_based", script=(), max_retries=None,
                   config=None, topology=None, time_s=0.0):
    """Compile natural language to a program. `script` feeds the mock backend."""
    retries = -1 if max_retries is None else max_retries
    return _json.loads(_core.compile(intent, backend, list(script), retries,
                                     _text(config), _text(topology), time_s))


def parse_program(program):
    return _json.loads(_core.parse_program(_text(program)))


def snapshot(*, topology=None, time_s=0.0):
    return _json.loads(_core.snapshot(_text(topology), time_s))


def benchmark():
    return _json.loads(_core.benchmark())


def corruption_audit(n=100, seed=0, *, benchmark=None, topology=None, time_s=0.0):
    return _json.loads(_core.corruption_audit(n, seed, _text(benchmark),
                                              _text(topology), time_s))


def adversarial(*, topology=None, time_s=0.0):
    return _json.loads(_core.adversarial(_text(topology), time_s))


def confusion(*, benchmark=None, topology=None, time_s=0.0):
    return _json.loads(_core.confusion(_text(benchmark), _text(topology), time_s))


def latitude_edge_removal(thresholds, snapshots=20, *, topology=None):
    return _json.loads(_core.latitude_edge_removal(list(thresholds), snapshots,
                                                   _text(topology)))
