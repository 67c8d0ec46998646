"""flagless: a jeopardy CTF platform where nobody ever submits a flag.

Solvers derive a signing key pair from the flag and publish a nested
signature proving they hold both their team key and the challenge key.
Every state change lives in a hash-chained append-only ledger, so any
spectator can replay the competition and recompute the scoreboard.
"""

from .ed25519 import BACKEND as ED25519_BACKEND

__version__ = "0.1.0"

__all__ = ["ED25519_BACKEND", "__version__"]
