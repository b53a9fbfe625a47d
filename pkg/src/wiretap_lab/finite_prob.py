"""Exact finite-alphabet probability.

All information quantities are in bits. Product alphabets are enumerated
lexicographically with the first position as the most significant digit,
so the sequence ``(x1, ..., xn)`` sits at index ``sum(x_i * k**(n - i))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, ResourceLimitError, ValidationError

SUM_TOL = 1e-12
TABLE_CAP = 2**24

Axes = Union[int, Sequence[int]]


def _as_float_array(values, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("probabilities must be finite")
    if np.any(arr < 0):
        raise ValidationError("probabilities must be nonnegative")
    arr.setflags(write=False)
    return arr


def _check_mass(arr: np.ndarray, what: str, tol: float = SUM_TOL) -> None:
    total = math.fsum(arr.ravel())
    if abs(total - 1.0) > tol:
        raise ValidationError(f"{what} sums to {total!r}, not 1")


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.probs, ndim=1)
        if arr.size == 0:
            raise ValidationError("empty distribution")
        _check_mass(arr, "distribution")
        object.__setattr__(self, "probs", arr)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "Distribution":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def bernoulli(cls, p: float) -> "Distribution":
        """Law of a binary variable with P(1) = p."""
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"Bernoulli parameter {p} outside [0, 1]")
        return cls([1.0 - p, p])

    @classmethod
    def point(cls, k: int, symbol: int) -> "Distribution":
        probs = np.zeros(k)
        probs[symbol] = 1.0
        return cls(probs)

    def __repr__(self):
        return f"Distribution({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix; ``rows[x, y] = p(y | x)``."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.rows, ndim=2)
        if arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValidationError("empty channel")
        for i, row in enumerate(arr):
            total = math.fsum(row)
            if abs(total - 1.0) > SUM_TOL:
                raise ValidationError(f"channel row {i} sums to {total!r}, not 1")
        object.__setattr__(self, "rows", arr)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def row(self, x: int) -> Distribution:
        return Distribution(self.rows[x])

    def output_distribution(self, p: Distribution) -> Distribution:
        if p.alphabet_size != self.input_size:
            raise ValidationError("input distribution does not match channel input size")
        return Distribution(_renormalize(p.probs @ self.rows))

    @classmethod
    def identity(cls, k: int) -> "Channel":
        return cls(np.eye(k))

    @classmethod
    def bsc(cls, crossover: float) -> "Channel":
        if not 0.0 <= crossover <= 1.0:
            raise DomainError(f"crossover {crossover} outside [0, 1]")
        q = crossover
        return cls([[1.0 - q, q], [q, 1.0 - q]])

    @classmethod
    def erasure(cls, k: int, erasure_prob: float) -> "Channel":
        """Erasure channel on ``k`` symbols; output ``k`` is the erasure."""
        if not 0.0 <= erasure_prob <= 1.0:
            raise DomainError(f"erasure probability {erasure_prob} outside [0, 1]")
        rows = np.zeros((k, k + 1))
        rows[:, :k] = np.eye(k) * (1.0 - erasure_prob)
        rows[:, k] = erasure_prob
        return cls(rows)

    @classmethod
    def constant(cls, k: int, output: Distribution) -> "Channel":
        """Channel whose output ignores the input."""
        return cls(np.tile(output.probs, (k, 1)))

    def __repr__(self):
        return f"Channel({self.input_size}x{self.output_size})"


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint law of several variables stored as an n-d table, one axis per variable."""

    table: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.table)
        if arr.ndim == 0 or arr.size == 0:
            raise ValidationError("joint table needs at least one nonempty axis")
        _check_mass(arr, "joint distribution")
        object.__setattr__(self, "table", arr)

    @property
    def axis_sizes(self) -> tuple:
        return self.table.shape

    @property
    def probs(self) -> np.ndarray:
        """Flat table in lexicographic order of the product alphabet."""
        return self.table.ravel()

    @property
    def ndim(self) -> int:
        return self.table.ndim

    def marginal(self, axes: Axes) -> "JointDistribution":
        """Marginal over ``axes``, with the result's axes in the order given."""
        axes = _normalize_axes(axes, self.ndim)
        return JointDistribution(_marginal_table(self.table, axes))

    def marginal_distribution(self, axis: int) -> Distribution:
        return Distribution(_renormalize(_marginal_table(self.table, (axis,))))

    @classmethod
    def from_channel(cls, p: Distribution, channel: Channel) -> "JointDistribution":
        """Joint (X, Y) with X ~ p and Y drawn through ``channel``."""
        if p.alphabet_size != channel.input_size:
            raise ValidationError("input distribution does not match channel input size")
        return cls(p.probs[:, None] * channel.rows)

    @classmethod
    def independent(cls, *dists: Distribution) -> "JointDistribution":
        table = np.array(1.0)
        for d in dists:
            table = np.multiply.outer(table, d.probs)
        return cls(table)


def _renormalize(arr: np.ndarray) -> np.ndarray:
    # Absorb last-bit drift from sums of products; callers only use this on exact laws.
    total = math.fsum(arr.ravel())
    return arr / total if total > 0 else arr


def _normalize_axes(axes: Axes, ndim: int) -> tuple:
    if isinstance(axes, (int, np.integer)):
        axes = (int(axes),)
    axes = tuple(int(a) for a in axes)
    for a in axes:
        if not 0 <= a < ndim:
            raise ValidationError(f"axis {a} out of range for a {ndim}-variable joint")
    if len(set(axes)) != len(axes):
        raise ValidationError(f"repeated axis in {axes}")
    return axes


def _marginal_table(table: np.ndarray, axes: tuple) -> np.ndarray:
    other = tuple(a for a in range(table.ndim) if a not in axes)
    marg = table.sum(axis=other) if other else table
    kept = [a for a in range(table.ndim) if a in axes]
    return np.transpose(marg, [kept.index(a) for a in axes])


def _entropy_bits(arr: np.ndarray) -> float:
    p = np.asarray(arr, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _probs_of(p) -> np.ndarray:
    if isinstance(p, Distribution):
        return p.probs
    if isinstance(p, JointDistribution):
        return p.table
    return np.asarray(p, dtype=float)


# -- information measures ---------------------------------------------------


def entropy(p: Distribution) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    if not isinstance(p, (Distribution, JointDistribution)):
        p = Distribution(p)
    return max(0.0, _entropy_bits(_probs_of(p)))


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _pair(p, q):
    a, b = _probs_of(p), _probs_of(q)
    if a.shape != b.shape:
        raise ValidationError(f"alphabet mismatch: {a.shape} vs {b.shape}")
    return a.ravel(), b.ravel()


def total_variation(p, q) -> float:
    """Half the L1 distance; accepts distributions or joints of equal shape."""
    a, b = _pair(p, q)
    return 0.5 * math.fsum(np.abs(a - b))


def kl_divergence(p, q) -> float:
    """Relative entropy D(p || q) in bits; ``math.inf`` when p is not dominated by q."""
    a, b = _pair(p, q)
    support = a > 0
    if np.any(b[support] == 0):
        return math.inf
    # difference of logs: the ratio overflows when q holds subnormal masses
    terms = a[support] * (np.log2(a[support]) - np.log2(b[support]))
    return max(0.0, math.fsum(terms))


def _joint_entropy(j: JointDistribution, axes: tuple) -> float:
    if not axes:
        return 0.0
    return _entropy_bits(_marginal_table(j.table, axes))


def _disjoint(j: JointDistribution, *groups: Axes) -> list:
    out = [_normalize_axes(g, j.ndim) for g in groups]
    seen = set()
    for g in out:
        if seen & set(g):
            raise ValidationError("axis sets must be disjoint")
        seen |= set(g)
    return out


def mutual_information(j: JointDistribution, axes_a: Axes, axes_b: Axes) -> float:
    a, b = _disjoint(j, axes_a, axes_b)
    value = _joint_entropy(j, a) + _joint_entropy(j, b) - _joint_entropy(j, a + b)
    return max(0.0, value)


def conditional_mutual_information(
    j: JointDistribution, axes_a: Axes, axes_b: Axes, axes_c: Axes
) -> float:
    """I(A; B | C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
    a, b, c = _disjoint(j, axes_a, axes_b, axes_c)
    value = (
        _joint_entropy(j, a + c)
        + _joint_entropy(j, b + c)
        - _joint_entropy(j, a + b + c)
        - _joint_entropy(j, c)
    )
    return max(0.0, value)


def markov_joint(p_ux: JointDistribution, main: Channel, wtp: Channel) -> JointDistribution:
    """Joint over (U, X, Y, V) with p(u,x) p(y|x) p(v|x)."""
    if p_ux.ndim != 2:
        raise ValidationError("p_UX must have exactly two axes")
    x_size = p_ux.axis_sizes[1]
    if main.input_size != x_size or wtp.input_size != x_size:
        raise ValidationError(
            f"channel input sizes ({main.input_size}, {wtp.input_size}) "
            f"do not match |X| = {x_size}"
        )
    table = np.einsum("ux,xy,xv->uxyv", p_ux.table, main.rows, wtp.rows)
    return JointDistribution(table)


# -- n-letter extensions ----------------------------------------------------


def _check_cap(size: int, cap: int, what: str) -> None:
    if size > cap:
        raise ResourceLimitError(f"{what} needs {size} table entries, cap is {cap}")


@dataclass(frozen=True)
class SequenceDistribution:
    """i.i.d. n-fold product of ``base`` (a Distribution or JointDistribution)."""

    base: Union[Distribution, JointDistribution]
    n: int
    cap: int = TABLE_CAP

    def materialize(self):
        """Return the n-letter law.

        A Distribution base yields a Distribution over ``k**n`` sequences. A
        JointDistribution base yields a JointDistribution whose axis ``i``
        enumerates the sequences of the i-th variable.
        """
        if isinstance(self.base, Distribution):
            return Distribution(_kron_power(self.base.probs, self.n))
        sizes = self.base.axis_sizes
        k = len(sizes)
        table = np.array(1.0)
        for _ in range(self.n):
            table = np.multiply.outer(table, self.base.table)
        # axes are (pos1: v1..vk, pos2: v1..vk, ...); regroup by variable
        order = [pos * k + var for var in range(k) for pos in range(self.n)]
        table = np.transpose(table, order).reshape([s**self.n for s in sizes])
        return JointDistribution(table)


def _kron_power(vec: np.ndarray, n: int) -> np.ndarray:
    out = np.array([1.0])
    for _ in range(n):
        out = np.kron(out, vec)
    return out


def iid_extend(base, n: int, cap: int = TABLE_CAP) -> SequenceDistribution:
    if n < 1:
        raise ValidationError(f"blocklength must be >= 1, got {n}")
    size = base.alphabet_size if isinstance(base, Distribution) else base.table.size
    _check_cap(size**n, cap, f"{n}-fold extension")
    return SequenceDistribution(base, n, cap)


def channel_power(channel: Channel, n: int, cap: int = TABLE_CAP) -> Channel:
    """Memoryless n-letter channel from X^n to Y^n."""
    _check_cap((channel.input_size * channel.output_size) ** n, cap, f"{n}-letter channel")
    rows = np.array([[1.0]])
    for _ in range(n):
        rows = np.kron(rows, channel.rows)
    return Channel(rows)


def sequence_digits(index: int, k: int, n: int) -> tuple:
    """Symbols of the sequence at ``index`` (most significant first)."""
    digits = []
    for _ in range(n):
        index, d = divmod(index, k)
        digits.append(d)
    return tuple(reversed(digits))


def sequence_index(digits: Iterable[int], k: int) -> int:
    index = 0
    for d in digits:
        index = index * k + d
    return index
