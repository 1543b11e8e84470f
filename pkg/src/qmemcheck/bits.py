"""Bit-vector helpers shared across the package.

A bit vector is a 1-D numpy array of dtype uint8 holding only 0s and 1s.
Messages, codewords, raw memory contents, and fingerprint phase patterns
all use this representation.
"""

from __future__ import annotations

from typing import Iterable, Union

import numpy as np

BitsLike = Union[str, Iterable[int], np.ndarray]


def as_bits(value: BitsLike, *, name: str = "bits") -> np.ndarray:
    """Coerce a bitstring / sequence / array into a fresh uint8 bit vector.

    Accepts strings like "0101", iterables of 0/1, or numpy arrays.
    Raises ValueError for anything that is not a flat sequence of 0s and 1s.
    """
    if isinstance(value, str):
        if not value or any(ch not in "01" for ch in value):
            raise ValueError(f"{name}: expected a nonempty string of 0s and 1s, got {value!r}")
        return np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(value)
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a 1-D bit vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name}: empty bit vector")
    if arr.dtype == np.uint8:
        if int(arr.max()) > 1:
            raise ValueError(f"{name}: entries must be 0 or 1")
    elif arr.dtype != np.bool_ and not ((arr == 0) | (arr == 1)).all():
        raise ValueError(f"{name}: entries must be 0 or 1")
    return arr.astype(np.uint8)


def bits_to_str(bits: np.ndarray) -> str:
    """Render a bit vector as a compact "0101..." string."""
    return "".join("1" if b else "0" for b in bits)


def bits_to_int(bits: np.ndarray) -> int:
    """Read a bit vector as a binary number, first entry most significant."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Inverse of bits_to_int: binary expansion of *value*, MSB first."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Number of positions where the two equal-length bit vectors differ."""
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def random_bits(length: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random bit vector of the given length."""
    return rng.integers(0, 2, size=length, dtype=np.uint8)
