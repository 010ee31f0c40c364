"""Bitmask helpers. Item e is bit e; subsets are plain ints."""
from __future__ import annotations

from functools import lru_cache


def mask_of(items) -> int:
    m = 0
    for e in items:
        m |= 1 << e
    return m


def items_of(mask: int) -> list[int]:
    out = []
    e = 0
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@lru_cache(maxsize=4096)
def submasks(mask: int) -> tuple[int, ...]:
    """All submasks of `mask` in ascending order (so the first maximum is the smallest)."""
    out = []
    sub = mask
    while True:
        out.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & mask
    out.reverse()
    return tuple(out)


def to_local(mask: int, items: tuple[int, ...]) -> int:
    """Project a global mask onto a group's local bit numbering."""
    loc = 0
    for j, e in enumerate(items):
        if mask >> e & 1:
            loc |= 1 << j
    return loc


def from_local(loc: int, items: tuple[int, ...]) -> int:
    m = 0
    for j, e in enumerate(items):
        if loc >> j & 1:
            m |= 1 << e
    return m


def fmt_set(mask: int, names: str | None = None) -> str:
    if names:
        return "{" + ",".join(names[e] for e in items_of(mask)) + "}"
    return "{" + ",".join(str(e) for e in items_of(mask)) + "}"
