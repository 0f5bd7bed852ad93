from . import protocol, ws
from .protocol import PROTOCOL_VERSION, ProtocolError, decode_message, encode_message
from .server import Session, TeleopServer, serve

__all__ = ["PROTOCOL_VERSION", "ProtocolError", "Session", "TeleopServer",
           "decode_message", "encode_message", "protocol", "serve", "ws"]
