"""Minimal HTTP front door for a competition host.

Wire contract (HTTP/1.1, canonical JSON on every response body):

    POST /changesets   team changeset in the body
                       201 {"hash": ..., "index": ...} on accept
                       422 {"code": ..., "message": ..., "outcome": "REJECT"}
    GET  /challenges   200, list of challenge descriptors
    GET  /scoreboard   200, scoreboard rows
    GET  /ledger       200, full NDJSON ledger (application/x-ndjson)

Malformed request bodies get 400, bodies over 1 MiB get 413.  Appends are
serialized by the host; reads come from a consistent snapshot.  Transient
5xx answers are safe to retry because duplicate submissions are rejected
deterministically.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .canonical import canonical_bytes, to_hex
from .competition import scoreboard_bytes
from .ledger import Changeset
from .validator import CompetitionHost, ValidationVerdict

MAX_BODY_BYTES = 1 << 20

log = logging.getLogger(__name__)


class _Handler(BaseHTTPRequestHandler):
    server_version = "flagless"
    protocol_version = "HTTP/1.1"
    host: CompetitionHost  # set by make_server on the handler subclass

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s %s", self.address_string(), fmt % args)

    def _respond(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _respond_json(self, status: int, obj) -> None:
        self._respond(status, canonical_bytes(obj))

    def do_GET(self) -> None:
        if self.path == "/scoreboard":
            self._respond(200, scoreboard_bytes(self.host.scoreboard()))
        elif self.path == "/challenges":
            self._respond_json(
                200, [d.to_json_dict() for d in self.host.challenges()]
            )
        elif self.path == "/ledger":
            self._respond(200, self.host.ledger_bytes(), "application/x-ndjson")
        else:
            self._respond_json(404, {"error": "not found"})

    def do_POST(self) -> None:
        if self.path != "/changesets":
            self._respond_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._respond_json(400, {"error": "missing or invalid Content-Length"})
            return
        if length > MAX_BODY_BYTES:
            self._respond_json(413, {"error": "body exceeds 1 MiB"})
            return
        body = self.rfile.read(length)
        try:
            changeset = Changeset.from_json_dict(json.loads(body.decode("utf-8")))
        except (ValueError, UnicodeDecodeError) as exc:
            self._respond_json(400, {"error": f"malformed changeset: {exc}"})
            return
        result = self.host.apply(changeset)
        if isinstance(result, ValidationVerdict):
            self._respond_json(
                422,
                {
                    "code": result.code.name,
                    "message": result.message,
                    "outcome": "REJECT",
                },
            )
        else:
            self._respond_json(
                201, {"hash": to_hex(result.hash), "index": result.index}
            )


def make_server(host: CompetitionHost, address: tuple[str, int]) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"host": host})
    server = ThreadingHTTPServer(address, handler)
    server.daemon_threads = True
    return server


def serve(host: CompetitionHost, address: tuple[str, int]) -> None:
    """Run until interrupted."""
    server = make_server(host, address)
    log.info("serving on http://%s:%d", *server.server_address)
    try:
        server.serve_forever()
    finally:
        server.server_close()


class BackgroundService:
    """Service running on its own thread; used by tests and the CLI demo."""

    def __init__(self, host: CompetitionHost, address: tuple[str, int] = ("127.0.0.1", 0)):
        self.server = make_server(host, address)
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        addr, port = self.server.server_address[:2]
        return f"http://{addr}:{port}"

    def __enter__(self) -> "BackgroundService":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)
