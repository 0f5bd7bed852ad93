"""Minimal WebSocket framing (RFC 6455 subset): text frames, ping/pong, close.

Single-frame messages only (fin always set); client-to-server frames are
masked as the RFC requires. Enough for browsers and the loopback clients
used in tests; no fragmentation, extensions, or subprotocols.
"""

from __future__ import annotations

import base64
import hashlib
import os
import socket
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WSError(ConnectionError):
    pass


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise WSError("connection closed mid-frame")
        buf += chunk
    return buf


def accept_key(key: str) -> str:
    return base64.b64encode(hashlib.sha1((key + GUID).encode()).digest()).decode()


def server_handshake(sock: socket.socket) -> dict:
    """Read the HTTP upgrade request and complete the switch."""
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise WSError("client closed during handshake")
        data += chunk
        if len(data) > 65536:
            raise WSError("oversized handshake")
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get("sec-websocket-key")
    if not key or "websocket" not in headers.get("upgrade", "").lower():
        raise WSError("not a websocket upgrade request")
    resp = ("HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n")
    sock.sendall(resp.encode("latin-1"))
    return headers


def client_handshake(sock: socket.socket, host: str, path: str = "/") -> None:
    key = base64.b64encode(os.urandom(16)).decode()
    req = (f"GET {path} HTTP/1.1\r\n"
           f"Host: {host}\r\n"
           "Upgrade: websocket\r\n"
           "Connection: Upgrade\r\n"
           f"Sec-WebSocket-Key: {key}\r\n"
           "Sec-WebSocket-Version: 13\r\n\r\n")
    sock.sendall(req.encode("latin-1"))
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = sock.recv(4096)
        if not chunk:
            raise WSError("server closed during handshake")
        data += chunk
    status = data.split(b"\r\n", 1)[0].decode("latin-1")
    if "101" not in status:
        raise WSError(f"handshake rejected: {status}")
    expect = accept_key(key)
    if expect.encode() not in data:
        raise WSError("bad Sec-WebSocket-Accept")


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 65536:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + masked
    return head + payload


def send_text(sock: socket.socket, text: str, mask: bool = False) -> None:
    sock.sendall(_encode_frame(OP_TEXT, text.encode("utf-8"), mask))


def send_close(sock: socket.socket, mask: bool = False) -> None:
    try:
        sock.sendall(_encode_frame(OP_CLOSE, b"", mask))
    except OSError:
        pass


def recv_text(sock: socket.socket, reply_mask: bool = False) -> str | None:
    """Next text message; None on a clean close. Answers pings inline."""
    while True:
        b0, b1 = _read_exact(sock, 2)
        fin = b0 & 0x80
        opcode = b0 & 0x0F
        masked = b1 & 0x80
        n = b1 & 0x7F
        if not fin:
            raise WSError("fragmented frames unsupported")
        if n == 126:
            (n,) = struct.unpack(">H", _read_exact(sock, 2))
        elif n == 127:
            (n,) = struct.unpack(">Q", _read_exact(sock, 8))
        key = _read_exact(sock, 4) if masked else None
        payload = _read_exact(sock, n) if n else b""
        if key:
            payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        if opcode == OP_TEXT:
            return payload.decode("utf-8")
        if opcode == OP_CLOSE:
            send_close(sock, mask=reply_mask)
            return None
        if opcode == OP_PING:
            sock.sendall(_encode_frame(OP_PONG, payload, reply_mask))
            continue
        if opcode == OP_PONG:
            continue
        raise WSError(f"unsupported opcode {opcode}")
