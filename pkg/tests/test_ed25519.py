"""Signature conformance: published test vectors, kernel parity, and an
independent-library oracle."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagless import _ed25519_core as core
from flagless import ed25519

# RFC 8032 section 7.1, TEST 1-3: (seed, public key, message, signature)
RFC8032_VECTORS = [
    (
        "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
        "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a",
        "",
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
        "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b",
    ),
    (
        "4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
        "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c",
        "72",
        "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
        "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00",
    ),
    (
        "c5aa8df43f9f837bedb7442f31dcb7b166d38535076f094b85ce3a2e0b4458f7",
        "fc51cd8e6218a1a38da47ed00230f0580816ed13ba3303ac5deb911548908025",
        "af82",
        "6291d657deec24024827e69c3abe01a30ce548a284743a445e3680d7db5ac3ac"
        "18ff9b538d16f290ae67f760984dc6594a7c15e9716ed28dc027beceea1ec40a",
    ),
]


@pytest.mark.parametrize("seed_hex,public_hex,msg_hex,sig_hex", RFC8032_VECTORS)
def test_rfc8032_vectors(kernel, seed_hex, public_hex, msg_hex, sig_hex):
    seed = bytes.fromhex(seed_hex)
    message = bytes.fromhex(msg_hex)
    assert core.public_from_seed(seed, kernel).hex() == public_hex
    signature = core.sign(seed, message, kernel)
    assert signature.hex() == sig_hex
    assert core.verify(bytes.fromhex(public_hex), signature, message, kernel)


def test_bit_flips_rejected(kernel):
    rng = random.Random(1)
    seed = rng.randbytes(32)
    message = b"the quick brown fox"
    public = core.public_from_seed(seed, kernel)
    signature = core.sign(seed, message, kernel)
    for _ in range(32):
        pos = rng.randrange(64)
        bit = 1 << rng.randrange(8)
        bad = bytearray(signature)
        bad[pos] ^= bit
        assert not core.verify(public, bytes(bad), message, kernel)
    for _ in range(16):
        pos = rng.randrange(len(message))
        bad_msg = bytearray(message)
        bad_msg[pos] ^= 1
        assert not core.verify(public, signature, bytes(bad_msg), kernel)


def test_wrong_key_rejected(kernel):
    rng = random.Random(2)
    seed_a, seed_b = rng.randbytes(32), rng.randbytes(32)
    message = b"ownership matters"
    signature = core.sign(seed_a, message, kernel)
    public_b = core.public_from_seed(seed_b, kernel)
    assert not core.verify(public_b, signature, message, kernel)


def test_scalar_range_enforced(kernel):
    seed = bytes(32)
    public = core.public_from_seed(seed, kernel)
    signature = core.sign(seed, b"m", kernel)
    # bump s by the group order: same point equation, non-canonical scalar
    s = int.from_bytes(signature[32:], "little") + core.L
    forged = signature[:32] + s.to_bytes(32, "little")
    assert not core.verify(public, forged, b"m", kernel)


def test_non_canonical_public_key_rejected(kernel):
    # y = p encodes the same point as y = 0 but is not a canonical encoding
    encoded = core.P.to_bytes(32, "little")
    assert core.decompress(encoded) is None
    signature = core.sign(bytes(32), b"m", kernel)
    assert not core.verify(encoded, signature, b"m", kernel)


def test_malformed_lengths_raise(kernel):
    with pytest.raises(ValueError):
        core.public_from_seed(b"short", kernel)
    with pytest.raises(ValueError):
        core.sign(b"short", b"m", kernel)
    with pytest.raises(ValueError):
        core.verify(b"short", bytes(64), b"m", kernel)
    with pytest.raises(ValueError):
        core.verify(bytes(32), bytes(63), b"m", kernel)


@pytest.mark.skipif(
    "compiled" not in ed25519.available_backends(),
    reason="compiled kernel not built",
)
class TestKernelParity:
    """The two kernels must be byte-for-byte interchangeable."""

    @settings(max_examples=80, deadline=None)
    @given(seed=st.binary(min_size=32, max_size=32), message=st.binary(max_size=96))
    def test_sign_and_keys_agree(self, seed, message):
        backends = ed25519.available_backends()
        pure, compiled = backends["pure"], backends["compiled"]
        assert core.public_from_seed(seed, pure) == core.public_from_seed(seed, compiled)
        assert core.sign(seed, message, pure) == core.sign(seed, message, compiled)

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.binary(min_size=32, max_size=32),
        message=st.binary(max_size=64),
        corrupt=st.integers(min_value=0, max_value=64 * 8 - 1),
    )
    def test_verdicts_agree_on_corrupted_signatures(self, seed, message, corrupt):
        backends = ed25519.available_backends()
        pure, compiled = backends["pure"], backends["compiled"]
        public = core.public_from_seed(seed, pure)
        signature = bytearray(core.sign(seed, message, pure))
        signature[corrupt // 8] ^= 1 << (corrupt % 8)
        signature = bytes(signature)
        assert core.verify(public, signature, message, pure) == core.verify(
            public, signature, message, compiled
        )


class TestLibraryOracle:
    """Cross-check against an unrelated Ed25519 implementation."""

    @pytest.fixture(autouse=True)
    def _pyca(self):
        pytest.importorskip("cryptography")

    def test_agrees_with_pyca(self, kernel):
        from cryptography.hazmat.primitives import serialization
        from cryptography.hazmat.primitives.asymmetric.ed25519 import (
            Ed25519PrivateKey,
            Ed25519PublicKey,
        )

        rng = random.Random(3)
        for _ in range(20):
            seed = rng.randbytes(32)
            message = rng.randbytes(rng.randrange(0, 120))
            their_key = Ed25519PrivateKey.from_private_bytes(seed)
            their_public = their_key.public_key().public_bytes(
                serialization.Encoding.Raw, serialization.PublicFormat.Raw
            )
            assert core.public_from_seed(seed, kernel) == their_public
            ours = core.sign(seed, message, kernel)
            assert ours == their_key.sign(message)
            Ed25519PublicKey.from_public_bytes(their_public).verify(ours, message)
            assert core.verify(their_public, their_key.sign(message), message, kernel)


def test_backend_selection_reports_available():
    backends = ed25519.available_backends()
    assert "pure" in backends
    assert ed25519.BACKEND in backends


def test_env_var_forces_backend(tmp_path):
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import flagless; print(flagless.ED25519_BACKEND)"],
        env={"PATH": "/usr/bin:/bin", "FLAGLESS_ED25519_BACKEND": "pure"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "pure"
