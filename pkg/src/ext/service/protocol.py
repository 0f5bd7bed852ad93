"""Wire message schema and codec shared by the server and the browser client.

Messages are JSON objects in WebSocket text frames with a common envelope:
``type``, ``session``, ``step``, ``payload``. Field-by-field documentation
with a framed hex example lives in docs/protocol.md.
"""

from __future__ import annotations

import json

PROTOCOL_VERSION = 1
TYPES = ("hello", "state", "action", "takeover", "episode_done", "error")

_PAYLOAD_FIELDS = {
    "hello": {"version", "mode", "task", "tick_hz"},
    "state": {"observation", "joints", "terrain", "fill", "stall", "authority",
              "obstacle", "status", "last_action_clamped"},
    "action": {"values"},
    "takeover": {"reason"},
    "episode_done": {"success", "status", "steps", "takeover_step", "recorded"},
    "error": {"message", "authority"},
}


class ProtocolError(ValueError):
    pass


def encode_message(msg: dict) -> str:
    validate_message(msg)
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


def decode_message(text: str) -> dict:
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"not JSON: {e}") from e
    validate_message(msg)
    return msg


def validate_message(msg) -> None:
    if not isinstance(msg, dict):
        raise ProtocolError("message must be an object")
    mtype = msg.get("type")
    if mtype not in TYPES:
        raise ProtocolError(f"unknown message type {mtype!r}")
    for req in ("session", "step"):
        if req not in msg:
            raise ProtocolError(f"missing field {req!r}")
    if not isinstance(msg["step"], int) or msg["step"] < 0:
        raise ProtocolError("step must be a non-negative integer")
    payload = msg.get("payload")
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object")
    unknown = set(payload) - _PAYLOAD_FIELDS[mtype]
    if unknown:
        raise ProtocolError(f"unknown payload fields for {mtype}: {sorted(unknown)}")
    if mtype == "action":
        vals = payload.get("values")
        if (not isinstance(vals, list) or len(vals) != 5
                or not all(isinstance(v, (int, float)) for v in vals)):
            raise ProtocolError("action payload needs 5 numeric values")
    if mtype == "hello" and payload.get("version") != PROTOCOL_VERSION:
        raise ProtocolError(f"protocol version mismatch: {payload.get('version')}")


def make(mtype: str, session: str, step: int, **payload) -> dict:
    return {"type": mtype, "session": session, "step": step, "payload": payload}
