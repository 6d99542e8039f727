"""Deterministic 64-bit hashing and seed derivation used across the toolkit.

Feature hashing uses FNV-1a over a canonical little-endian byte encoding of
code tuples, so fingerprints and derived seeds are identical across platforms,
runs, and thread counts.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def code_bytes(value) -> bytes:
    """Serialize a code tuple (nested ints/strs/bools/None) to canonical bytes.

    Integers are 8-byte little-endian two's complement, strings are
    length-prefixed UTF-8, containers are count-prefixed. Type tags keep
    distinct shapes from colliding.
    """
    if isinstance(value, bool):
        return b"\x03" + (b"\x01" if value else b"\x00")
    if isinstance(value, int):
        return b"\x01" + (value & _MASK64).to_bytes(8, "little")
    if isinstance(value, str):
        raw = value.encode("utf-8")
        return b"\x02" + len(raw).to_bytes(2, "little") + raw
    if isinstance(value, (tuple, list)):
        parts = [b"\x04", len(value).to_bytes(2, "little")]
        parts.extend(code_bytes(v) for v in value)
        return b"".join(parts)
    if value is None:
        return b"\x05"
    raise TypeError(f"unhashable code element: {type(value).__name__}")


def hash_code(value) -> int:
    """64-bit feature id for a code tuple."""
    return fnv1a64(code_bytes(value))


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; the named PRNG step for seed streams."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *tags) -> int:
    """Derive an independent 64-bit child seed from a base seed and tags."""
    h = splitmix64(seed & _MASK64)
    for tag in tags:
        h = splitmix64(h ^ hash_code(tag))
    return h
