"""Bit-vector helpers shared across the circuit and protocol layers.

Convention: integers map to bit lists/arrays in big-endian order
(index 0 is the most significant bit).
"""

from __future__ import annotations

import numpy as np


def int_to_bits(value: int, width: int) -> list[int]:
    """Big-endian bit list of `value`, exactly `width` bits."""
    if value < 0 or value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits) -> int:
    """Inverse of int_to_bits; accepts any iterable of 0/1."""
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def ints_to_bit_array(values, width: int) -> np.ndarray:
    """Stack big-endian bit rows: shape (len(values), width), dtype uint8."""
    arr = np.empty((len(values), width), dtype=np.uint8)
    for i, v in enumerate(values):
        arr[i] = int_to_bits(int(v), width)
    return arr


def bit_array_to_ints(arr: np.ndarray) -> list[int]:
    """Rows of a (k, width) 0/1 array back to integers."""
    return [bits_to_int(row) for row in arr]
