"""Flat storage layout for truncated tensors.

All levels of an element of T^N(R^d) live in one contiguous float64 vector.
Level k occupies ``offsets[k]:offsets[k+1]`` and holds d**k coefficients in
lexicographic word order: the word i_1...i_k (letters 1-based) sits at
position sum_j (i_j - 1) * d**(k - j) inside its level block.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _offsets(dim: int, depth: int) -> tuple:
    out = [0]
    for k in range(depth + 1):
        out.append(out[-1] + dim**k)
    return tuple(out)


def offsets(dim: int, depth: int) -> np.ndarray:
    return np.array(_offsets(dim, depth), dtype=np.int64)


def total_size(dim: int, depth: int) -> int:
    return _offsets(dim, depth)[-1]


def level_slice(dim: int, depth: int, k: int) -> slice:
    off = _offsets(dim, depth)
    return slice(off[k], off[k + 1])


def word_to_index(word, dim: int) -> int:
    """Position of a word (tuple of 1-based letters) inside its level block."""
    idx = 0
    for letter in word:
        if not 1 <= letter <= dim:
            raise ValueError(f"letter {letter} outside 1..{dim}")
        idx = idx * dim + (letter - 1)
    return idx


def index_to_word(level: int, index: int, dim: int) -> tuple:
    if not 0 <= index < dim**level:
        raise ValueError(f"index {index} outside level {level} block of size {dim**level}")
    letters = []
    for _ in range(level):
        index, rem = divmod(index, dim)
        letters.append(rem + 1)
    return tuple(reversed(letters))


def flat_position(word, dim: int, depth: int) -> int:
    """Position of a word inside the full flat vector."""
    if len(word) > depth:
        raise ValueError(f"word of length {len(word)} exceeds depth {depth}")
    return _offsets(dim, depth)[len(word)] + word_to_index(word, dim)
