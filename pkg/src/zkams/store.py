"""Content-addressed object store with signed, sequenced name pointers.

Objects are addressed by a domain-separated SHA-256 of their bytes. Name
pointers are per-owner mutable references signed with Ed25519; an update is
accepted only with a strictly larger sequence number. With ``root`` set the
store mirrors everything to disk as ``objects/<hex>`` and an append-only
``names/<owner>.log``.
"""

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from nacl.exceptions import BadSignatureError
from nacl.signing import SigningKey, VerifyKey

from .encoding import digest, encode_int, frame
from .errors import IntegrityError, StaleUpdate, Unauthorized

_OBJECT_DOMAIN = "zkams/store/object"
_POINTER_DOMAIN = b"zkams/store/pointer/v1"
_SAFE_NAME = re.compile(r"[A-Za-z0-9_.-]{1,64}")


@dataclass(frozen=True, order=True)
class ContentAddress:
    digest: bytes

    @property
    def hex(self):
        return self.digest.hex()

    def __str__(self):
        return self.hex


def address_of(data):
    return ContentAddress(digest(_OBJECT_DOMAIN, bytes(data)))


@dataclass(frozen=True)
class NamePointer:
    owner: str
    target: ContentAddress
    sequence: int
    signature: bytes
    verify_key: bytes

    def to_json(self):
        return json.dumps({"owner": self.owner, "target": self.target.hex, "sequence": self.sequence,
                           "signature": self.signature.hex(), "verify_key": self.verify_key.hex()},
                          sort_keys=True)

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        return cls(d["owner"], ContentAddress(bytes.fromhex(d["target"])), d["sequence"],
                   bytes.fromhex(d["signature"]), bytes.fromhex(d["verify_key"]))


def pointer_message(owner, target, sequence):
    return frame(_POINTER_DOMAIN, owner.encode(), target.digest, encode_int(sequence, 8))


class PointerSigner:
    """An owner identity able to sign pointer updates."""

    def __init__(self, owner, signing_key=None):
        self.owner = owner
        self._key = signing_key or SigningKey.generate()

    @classmethod
    def from_seed(cls, owner, seed):
        return cls(owner, SigningKey(digest("zkams/store/owner-seed", owner.encode(), seed)))

    @property
    def verify_key(self):
        return bytes(self._key.verify_key)

    def sign(self, target, sequence):
        sig = self._key.sign(pointer_message(self.owner, target, sequence)).signature
        return NamePointer(self.owner, target, sequence, sig, self.verify_key)


class ContentStore:
    def __init__(self, root=None):
        self._objects = {}
        self._pointers = {}
        self._owner_keys = {}
        self._lock = threading.RLock()
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            (self.root / "objects").mkdir(parents=True, exist_ok=True)
            (self.root / "names").mkdir(parents=True, exist_ok=True)
            self._load_names()

    # objects
    def put(self, data):
        data = bytes(data)
        addr = address_of(data)
        with self._lock:
            if addr not in self._objects:
                self._objects[addr] = data
                if self.root is not None:
                    path = self.root / "objects" / addr.hex
                    if not path.exists():
                        path.write_bytes(data)
        return addr

    def get(self, addr):
        with self._lock:
            data = self._objects.get(addr)
        if self.root is not None:
            path = self.root / "objects" / addr.hex
            if path.exists():
                data = path.read_bytes()
        if data is None:
            raise KeyError(addr.hex)
        if address_of(data) != addr:
            raise IntegrityError(f"object {addr.hex[:16]} does not match its address")
        return data

    def __contains__(self, addr):
        with self._lock:
            if addr in self._objects:
                return True
        return self.root is not None and (self.root / "objects" / addr.hex).exists()

    # name pointers
    def publish(self, pointer):
        with self._lock:
            known = self._owner_keys.get(pointer.owner)
            if known is not None and known != pointer.verify_key:
                raise Unauthorized(f"pointer for {pointer.owner} signed by a foreign key")
            try:
                VerifyKey(pointer.verify_key).verify(
                    pointer_message(pointer.owner, pointer.target, pointer.sequence), pointer.signature)
            except (BadSignatureError, ValueError) as exc:
                raise Unauthorized(f"bad pointer signature for {pointer.owner}") from exc
            history = self._pointers.setdefault(pointer.owner, [])
            if history and pointer.sequence <= history[-1].sequence:
                raise StaleUpdate(f"sequence {pointer.sequence} is not above {history[-1].sequence}")
            history.append(pointer)
            self._owner_keys[pointer.owner] = pointer.verify_key
            if self.root is not None:
                with open(self._log_path(pointer.owner), "a") as fh:
                    fh.write(pointer.to_json() + "\n")
        return True

    def resolve(self, owner):
        with self._lock:
            history = self._pointers.get(owner)
            return history[-1].target if history else None

    def history(self, owner):
        with self._lock:
            return list(self._pointers.get(owner, ()))

    def _log_path(self, owner):
        name = owner if _SAFE_NAME.fullmatch(owner) else digest("zkams/store/owner", owner.encode()).hex()
        return self.root / "names" / (name + ".log")

    def _load_names(self):
        for log in sorted((self.root / "names").glob("*.log")):
            for line in log.read_text().splitlines():
                if line.strip():
                    p = NamePointer.from_json(line)
                    self._pointers.setdefault(p.owner, []).append(p)
                    self._owner_keys[p.owner] = p.verify_key
