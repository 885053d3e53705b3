"""Canonical byte encodings and domain-separated hashing.

Format version 1: every residue is written little-endian with a fixed width of
``ceil(bits(modulus) / 8)`` bytes; composite objects are framed by prefixing
each part with its length as a 4-byte little-endian integer. All digests,
Fiat-Shamir challenges and content addresses are taken over these bytes.
"""

import hashlib
import struct

ENCODING_VERSION = 1
DIGEST_SIZE = 32


def int_width(modulus):
    return (modulus.bit_length() + 7) // 8


def encode_int(value, width):
    return int(value).to_bytes(width, "little")


def decode_int(data):
    return int.from_bytes(data, "little")


def encode_residues(values, modulus):
    width = int_width(modulus)
    return b"".join(int(v).to_bytes(width, "little") for v in values)


def decode_residues(data, modulus):
    width = int_width(modulus)
    if len(data) % width:
        raise ValueError("residue block is not a multiple of the word width")
    out = []
    for i in range(0, len(data), width):
        v = int.from_bytes(data[i:i + width], "little")
        if v >= modulus:
            raise ValueError("non-canonical residue")
        out.append(v)
    return out


def frame(*parts):
    """Length-prefix and concatenate byte strings."""
    return b"".join(struct.pack("<I", len(p)) + p for p in parts)


def unframe(data):
    parts = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise ValueError("truncated frame header")
        (size,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + size > len(data):
            raise ValueError("truncated frame body")
        parts.append(data[pos:pos + size])
        pos += size
    return parts


def digest(domain, *parts):
    """SHA-256 over a framed (domain, parts...) tuple."""
    h = hashlib.sha256()
    h.update(frame(domain.encode(), *parts))
    return h.digest()


def xof(domain, *parts, length):
    """SHAKE-256 expansion of a framed input."""
    return hashlib.shake_256(frame(domain.encode(), *parts)).digest(length)
