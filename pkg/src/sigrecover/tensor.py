"""Truncated tensor algebra T^N(R^d).

Elements are stored densely as one flat coefficient vector (see
:mod:`sigrecover._layout`). Instances are immutable; every operation returns
a new tensor.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import _layout, kernels


class ShapeMismatchError(ValueError):
    pass


class TruncatedTensor:
    """Element of T^N(R^d) with dense per-level coefficients.

    Level 0 is a scalar; level k holds d**k coefficients in lexicographic
    word order.
    """

    __slots__ = ("dim", "depth", "coeffs")

    def __init__(self, dim: int, depth: int, coeffs):
        if dim < 1 or depth < 1:
            raise ValueError(f"need dim >= 1 and depth >= 1, got dim={dim}, depth={depth}")
        arr = np.array(coeffs, dtype=float).ravel()
        if arr.size != _layout.total_size(dim, depth):
            raise ShapeMismatchError(
                f"expected {_layout.total_size(dim, depth)} coefficients for dim={dim}, depth={depth}, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor coefficients must be finite")
        arr.flags.writeable = False
        self.dim = dim
        self.depth = depth
        self.coeffs = arr

    @classmethod
    def from_levels(cls, levels) -> "TruncatedTensor":
        levels = [np.asarray(lv, dtype=float).ravel() for lv in levels]
        if len(levels) < 2:
            raise ValueError("need at least levels 0 and 1")
        dim = levels[1].size
        depth = len(levels) - 1
        for k, lv in enumerate(levels):
            if lv.size != dim**k:
                raise ShapeMismatchError(f"level {k} has {lv.size} entries, expected {dim**k}")
        return cls(dim, depth, np.concatenate(levels))

    @classmethod
    def zeros(cls, dim: int, depth: int) -> "TruncatedTensor":
        return cls(dim, depth, np.zeros(_layout.total_size(dim, depth)))

    @classmethod
    def from_vector(cls, v, depth: int) -> "TruncatedTensor":
        """Pure level-1 element with coordinates ``v``."""
        v = np.asarray(v, dtype=float).ravel()
        out = np.zeros(_layout.total_size(v.size, depth))
        out[1:1 + v.size] = v
        return cls(v.size, depth, out)

    def level(self, k: int) -> np.ndarray:
        return self.coeffs[_layout.level_slice(self.dim, self.depth, k)]

    @property
    def levels(self) -> list:
        return [self.level(k) for k in range(self.depth + 1)]

    def __getitem__(self, word) -> float:
        """Coefficient of a word given as a tuple of 1-based letters; ``()`` is level 0."""
        return float(self.coeffs[_layout.flat_position(tuple(word), self.dim, self.depth)])

    def with_coeff(self, word, value: float) -> "TruncatedTensor":
        arr = self.coeffs.copy()
        arr[_layout.flat_position(tuple(word), self.dim, self.depth)] = value
        return TruncatedTensor(self.dim, self.depth, arr)

    def _check(self, other):
        if not isinstance(other, TruncatedTensor):
            raise TypeError(f"expected TruncatedTensor, got {type(other).__name__}")
        if (self.dim, self.depth) != (other.dim, other.depth):
            raise ShapeMismatchError(
                f"shape mismatch: (dim={self.dim}, depth={self.depth}) vs (dim={other.dim}, depth={other.depth})"
            )

    def __add__(self, other):
        self._check(other)
        return TruncatedTensor(self.dim, self.depth, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return TruncatedTensor(self.dim, self.depth, self.coeffs - other.coeffs)

    def __neg__(self):
        return TruncatedTensor(self.dim, self.depth, -self.coeffs)

    def __mul__(self, scalar):
        return TruncatedTensor(self.dim, self.depth, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return tensor_product(self, other)

    def __eq__(self, other):
        if not isinstance(other, TruncatedTensor):
            return NotImplemented
        return (self.dim, self.depth) == (other.dim, other.depth) and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=rtol))

    def __repr__(self):
        body = ", ".join(np.array2string(lv, precision=6, separator=",") for lv in self.levels)
        return f"TruncatedTensor(dim={self.dim}, depth={self.depth}, levels=[{body}])"


# A group element is a TruncatedTensor with level 0 equal to 1; no separate class.
GroupElement = TruncatedTensor


def unit(dim: int, depth: int) -> TruncatedTensor:
    if dim < 1 or depth < 1:
        raise ValueError(f"need dim >= 1 and depth >= 1, got dim={dim}, depth={depth}")
    arr = np.zeros(_layout.total_size(dim, depth))
    arr[0] = 1.0
    return TruncatedTensor(dim, depth, arr)


def basis_vector(i: int, dim: int, depth: int) -> TruncatedTensor:
    """e_i at level 1 (1-based index)."""
    if not 1 <= i <= dim:
        raise IndexError(f"basis index {i} outside 1..{dim}")
    arr = np.zeros(_layout.total_size(dim, depth))
    arr[i] = 1.0
    return TruncatedTensor(dim, depth, arr)


def tensor_product(g: TruncatedTensor, h: TruncatedTensor) -> TruncatedTensor:
    g._check(h)
    return TruncatedTensor(g.dim, g.depth, kernels.tensor_mul(g.coeffs, h.coeffs, g.dim, g.depth))


def _power_series(x: TruncatedTensor, coefficients) -> TruncatedTensor:
    # sum_{k>=1} c_k x^k, x with zero level 0, so x^k vanishes beyond depth
    total = np.zeros_like(x.coeffs)
    power = x
    for k in range(1, x.depth + 1):
        total += coefficients(k) * power.coeffs
        power = tensor_product(power, x)
    return TruncatedTensor(x.dim, x.depth, total)


def exp(v: TruncatedTensor) -> TruncatedTensor:
    """Truncated exponential 1 + sum_k v^k / k! of an element with zero scalar part."""
    if v.coeffs[0] != 0.0:
        raise ValueError(f"exp needs level-0 coefficient 0, got {v.coeffs[0]}")
    series = _power_series(v, lambda k: 1.0 / math.factorial(k))
    return unit(v.dim, v.depth) + series


def exp_vector(v, depth: int) -> TruncatedTensor:
    """Fast path for exp of a pure level-1 element given as coordinates."""
    v = np.asarray(v, dtype=float).ravel()
    return TruncatedTensor(v.size, depth, kernels.exp_level1(v, v.size, depth))


def log(g: TruncatedTensor) -> TruncatedTensor:
    if abs(g.coeffs[0] - 1.0) > 1e-12:
        raise ValueError(f"log needs level-0 coefficient 1, got {g.coeffs[0]}")
    x = g - unit(g.dim, g.depth)
    x = x.with_coeff((), 0.0)
    return _power_series(x, lambda k: (-1.0) ** (k + 1) / k)


def bracket(g: TruncatedTensor, h: TruncatedTensor) -> TruncatedTensor:
    return tensor_product(g, h) - tensor_product(h, g)


def add(g: TruncatedTensor, h: TruncatedTensor) -> TruncatedTensor:
    return g + h


def scale(g: TruncatedTensor, c: float) -> TruncatedTensor:
    return g * c


def inner_product(g: TruncatedTensor, h: TruncatedTensor) -> float:
    g._check(h)
    return float(g.coeffs @ h.coeffs)


def euclidean_norm(g: TruncatedTensor) -> float:
    return float(np.sqrt(g.coeffs @ g.coeffs))


def is_group_like(g: TruncatedTensor, tol: float = 1e-9) -> bool:
    """Level 0 equals 1 and sym(pi_2) = pi_1 (x) pi_1 / 2, both to max-abs ``tol``."""
    if abs(g.coeffs[0] - 1.0) > tol:
        return False
    if g.depth < 2:
        return True
    d = g.dim
    lvl1 = g.level(1)
    lvl2 = g.level(2).reshape(d, d)
    sym = 0.5 * (lvl2 + lvl2.T)
    return bool(np.max(np.abs(sym - 0.5 * np.outer(lvl1, lvl1))) <= tol)


def _shuffles(u: tuple, w: tuple):
    if not u:
        yield w
        return
    if not w:
        yield u
        return
    for s in _shuffles(u[:-1], w):
        yield s + (u[-1],)
    for s in _shuffles(u, w[:-1]):
        yield s + (w[-1],)


def shuffle_defect(g: TruncatedTensor) -> float:
    """Largest violation of <g,u><g,w> = <g, u sh w> over word pairs with |u|+|w| <= N.

    Full characterisation of group-likeness; cost grows like d**N squared, so
    only meant as a slow diagnostic for small depth.
    """
    if g.depth > 3:
        raise ValueError("shuffle_defect is limited to depth <= 3")
    worst = abs(g.coeffs[0] - 1.0)
    letters = range(1, g.dim + 1)
    for lu in range(1, g.depth):
        for lw in range(1, g.depth - lu + 1):
            for u in itertools.product(letters, repeat=lu):
                for w in itertools.product(letters, repeat=lw):
                    rhs = sum(g[s] for s in _shuffles(u, w))
                    worst = max(worst, abs(g[u] * g[w] - rhs))
    return worst
