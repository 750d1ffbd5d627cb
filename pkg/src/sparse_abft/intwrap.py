"""Two's-complement arithmetic helpers for width-bounded registers.

Every register in the simulated datapath has a declared bit width and wraps
on overflow. Values are carried as Python/numpy signed integers; these
helpers map between the signed reading and the raw w-bit pattern.
"""

from __future__ import annotations

import numpy as np


def int_min(width: int) -> int:
    return -(1 << (width - 1))


def int_max(width: int) -> int:
    return (1 << (width - 1)) - 1


def wrap(value, width: int):
    """Wrap an integer (or ndarray) into signed two's-complement range.

    Works on Python ints and int64 ndarrays alike; the bias-and-mask form
    keeps numpy from tripping over negative operands of ``&``.
    """
    bias = 1 << (width - 1)
    mask = (1 << width) - 1
    return ((value + bias) & mask) - bias


def fits(value: int, width: int) -> bool:
    return int_min(width) <= value <= int_max(width)


def to_unsigned(value: int, width: int) -> int:
    """Raw w-bit pattern of a signed value."""
    if not fits(value, width):
        raise ValueError(f"value {value} does not fit in {width} signed bits")
    return value & ((1 << width) - 1)


def from_unsigned(pattern: int, width: int) -> int:
    """Signed reading of a raw w-bit pattern."""
    if not 0 <= pattern < (1 << width):
        raise ValueError(f"pattern {pattern} is not a {width}-bit value")
    if pattern >= 1 << (width - 1):
        return pattern - (1 << width)
    return pattern


def flip_bit(value: int, bit: int, width: int) -> int:
    """XOR one bit of a signed w-bit register value."""
    if not 0 <= bit < width:
        raise ValueError(f"bit {bit} out of range for width {width}")
    return from_unsigned(to_unsigned(value, width) ^ (1 << bit), width)


def check_ndarray_width(data: np.ndarray, width: int, what: str = "element") -> None:
    """Raise if any array element falls outside signed w-bit range."""
    lo, hi = int_min(width), int_max(width)
    if data.size and (data.min() < lo or data.max() > hi):
        bad = data[(data < lo) | (data > hi)].flat[0]
        raise ValueError(f"{what} {bad} outside signed {width}-bit range [{lo}, {hi}]")
