"""Node identities and trust-on-first-use fingerprint pinning.

An identity is an Ed25519 keypair plus an X25519 exchange key derived
deterministically from it. The fingerprint is the SHA-256 hex digest of the
raw Ed25519 public key, so a fingerprint self-certifies the key it names.
The trust store is the persisted pin set: fingerprint -> public key +
first-seen timestamp, as written to disk by peers and the gateway.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from base64 import b64decode, b64encode

from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import FingerprintMismatch


def fingerprint_of(public_key_raw: bytes) -> str:
    return hashlib.sha256(public_key_raw).hexdigest()


class Identity:
    """Long-term signing identity of a node."""

    def __init__(self, name: str, private_key: Ed25519PrivateKey):
        self.name = name
        self._key = private_key
        self.public_raw = private_key.public_key().public_bytes_raw()
        self.fingerprint = fingerprint_of(self.public_raw)

    @classmethod
    def generate(cls, name: str, seed: bytes | None = None) -> "Identity":
        """Fresh identity; a 32-byte seed makes key material reproducible."""
        if seed is not None:
            material = hashlib.sha256(b"smcnet-identity|" + seed).digest()
            return cls(name, Ed25519PrivateKey.from_private_bytes(material))
        return cls(name, Ed25519PrivateKey.generate())

    @classmethod
    def from_seed_string(cls, name: str, seed: str) -> "Identity":
        return cls.generate(name, seed.encode("utf-8"))

    @classmethod
    def load(cls, name: str, path: str) -> "Identity":
        with open(path, "rb") as fh:
            return cls(name, Ed25519PrivateKey.from_private_bytes(fh.read()))

    def save(self, path: str) -> None:
        data = self._key.private_bytes_raw()
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(data)

    def sign(self, data: bytes) -> bytes:
        return self._key.sign(data)

    @property
    def public_b64(self) -> str:
        return b64encode(self.public_raw).decode("ascii")


def verify_signature(public_key_raw: bytes, signature: bytes, data: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key_raw).verify(signature, data)
        return True
    except Exception:
        return False


class TrustStore:
    """Pinned fingerprints with their public keys.

    Pins are keyed by fingerprint; adding the same fingerprint twice is a
    no-op (set semantics), and a key whose hash does not match the claimed
    fingerprint is rejected outright.
    """

    def __init__(self, path: str | None = None):
        self._path = path
        self._pins: dict[str, dict] = {}
        if path and os.path.exists(path):
            with open(path) as fh:
                self._pins = json.load(fh)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self._pins

    def __len__(self) -> int:
        return len(self._pins)

    def fingerprints(self) -> list[str]:
        return sorted(self._pins)

    def pin(self, fingerprint: str, public_key_raw: bytes) -> None:
        if fingerprint_of(public_key_raw) != fingerprint:
            raise FingerprintMismatch(
                f"public key does not hash to claimed fingerprint {fingerprint[:16]}")
        if fingerprint in self._pins:
            return
        self._pins[fingerprint] = {
            "public_key": b64encode(public_key_raw).decode("ascii"),
            "first_seen": time.time(),
        }
        self._flush()

    def public_key(self, fingerprint: str) -> bytes | None:
        entry = self._pins.get(fingerprint)
        return b64decode(entry["public_key"]) if entry else None

    def verify(self, fingerprint: str, public_key_raw: bytes) -> None:
        """Raise FingerprintMismatch unless the presented key is the pinned one."""
        pinned = self.public_key(fingerprint)
        if pinned is None:
            raise FingerprintMismatch(f"fingerprint {fingerprint[:16]} is not pinned")
        if pinned != public_key_raw:
            raise FingerprintMismatch(
                f"pinned key for {fingerprint[:16]} differs from the presented one")

    def _flush(self) -> None:
        if not self._path:
            return
        os.makedirs(os.path.dirname(self._path) or ".", exist_ok=True)
        tmp = self._path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self._pins, fh, indent=1, sort_keys=True)
        os.replace(tmp, self._path)
