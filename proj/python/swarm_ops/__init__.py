"""Python access to the swarm_ops core: headless runs, the wire protocol and study scoring."""

import json

from . import _core
from ._core import PROTOCOL_VERSION, SwarmOpsError

__all__ = [
    "PROTOCOL_VERSION",
    "SwarmOpsError",
    "allocate_waypoints",
    "bearing_distance",
    "check_group_means",
    "decode_message",
    "encode_message",
    "run_headless",
    "score_report",
    "validate_hypotheses",
]


def _doc(value):
    return value if isinstance(value, str) else json.dumps(value)


def run_headless(scenario, seed=None, loss=0.0, latency_ms=0.0, jitter_ms=0.0, consoles=1):
    """Returns (events, deliveries, session_record) with the logs as lists of dicts."""
    events, deliveries, record = _core.run_headless(
        _doc(scenario), seed, loss, latency_ms, jitter_ms, consoles
    )
    return (
        [json.loads(line) for line in events.splitlines()],
        [json.loads(line) for line in deliveries.splitlines()],
        json.loads(record),
    )


def score_report(report, scenario):
    return json.loads(_core.score_report(_doc(report), _doc(scenario)))


def decode_message(line):
    return json.loads(_core.decode_message(line))


def encode_message(message):
    return _core.encode_message(_doc(message))


def validate_hypotheses(means):
    return json.loads(_core.validate_hypotheses(_doc(means)))


def check_group_means(doc, tolerance=0.01):
    return json.loads(_core.check_group_means(_doc(doc), tolerance))


def allocate_waypoints(waypoints, drones):
    return {int(k): v for k, v in json.loads(_core.allocate_waypoints(_doc(waypoints), _doc(drones))).items()}


def bearing_distance(observer, target):
    return json.loads(_core.bearing_distance(_doc(observer), _doc(target)))
