"""Canonical JSON and strict byte encodings shared by all on-disk formats.

Everything that gets hashed or signed goes through :func:`canonical_bytes`:
UTF-8, object keys sorted by code point, no insignificant whitespace, no
NaN/Infinity.  Two processes serializing the same logical value must produce
identical bytes, otherwise chain hashes stop being comparable across
replicas.

The hex/base64 decoders are deliberately strict (lowercase hex only,
canonical base64 only) so that a value round-trips to the exact byte string
it was parsed from.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from typing import Any

_HEX_RE = re.compile(r"\A(?:[0-9a-f]{2})*\Z")


def canonical_dumps(obj: Any) -> str:
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    """Decode lowercase hex; rejects uppercase, whitespace and odd length."""
    if not isinstance(text, str) or not _HEX_RE.match(text):
        raise ValueError(f"not canonical lowercase hex: {text!r}")
    return bytes.fromhex(text)


def to_b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def from_b64(text: str) -> bytes:
    """Decode standard padded base64; rejects any non-canonical encoding."""
    if not isinstance(text, str):
        raise ValueError("base64 value must be a string")
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise ValueError(f"invalid base64: {text!r}") from exc
    if base64.b64encode(raw).decode("ascii") != text:
        raise ValueError(f"non-canonical base64: {text!r}")
    return raw
