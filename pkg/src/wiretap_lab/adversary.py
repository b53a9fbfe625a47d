"""Tapped-subset machinery.

Observation channels use a compact tagged alphabet: position ``i`` of the
wiretapper's output ranges over X when ``i`` is tapped (a *perfect* symbol)
and over V otherwise (a *noisy* symbol). Because the subset is known to the
wiretapper this is informationally equivalent to the merged alphabet
``X ∪ V`` while never letting an X-symbol collide with a V-symbol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .finite_prob import TABLE_CAP, Channel, sequence_digits

SUBSET_CAP = 10**5

PERFECT = "perfect"
NOISY = "noisy"
ERASED = "erased"


@dataclass(frozen=True)
class SubsetSpec:
    """Tapped positions, stored 1-based and strictly increasing."""

    n: int
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError(f"subset indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 1 or idx[-1] > self.n):
            raise ValidationError(f"subset indices {idx} outside [1, {self.n}]")
        object.__setattr__(self, "indices", idx)

    @property
    def mu(self) -> int:
        return len(self.indices)

    @property
    def alpha(self) -> float:
        return self.mu / self.n

    def contains(self, position: int) -> bool:
        return position in self.indices

    def format(self) -> str:
        return ",".join(str(i) for i in self.indices)

    @classmethod
    def parse(cls, text: str, n: int) -> "SubsetSpec":
        text = text.strip()
        if not text:
            return cls(n, ())
        try:
            return cls(n, tuple(int(t) for t in text.split(",")))
        except ValueError as exc:
            raise ValidationError(f"bad subset {text!r}") from exc

    def __str__(self):
        return "{" + self.format() + "}"


@dataclass(frozen=True)
class TappedSymbol:
    tag: str
    value: Optional[int] = None

    def __post_init__(self):
        if self.tag not in (PERFECT, NOISY, ERASED):
            raise ValidationError(f"unknown tag {self.tag!r}")
        if (self.tag == ERASED) != (self.value is None):
            raise ValidationError("erased symbols carry no value; others must")


def mu_from_alpha(alpha: float, n: int) -> int:
    """Tap count for a model-level fraction; floors when alpha*n is fractional."""
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha {alpha} outside [0, 1]")
    return int(math.floor(alpha * n + 1e-9))


def enumerate_subsets(n: int, mu: int, cap: int = SUBSET_CAP) -> list:
    if not 0 <= mu <= n:
        raise ValidationError(f"need 0 <= mu <= n, got mu={mu}, n={n}")
    count = math.comb(n, mu)
    if count > cap:
        raise ResourceLimitError(f"C({n},{mu}) = {count} subsets exceeds cap {cap}")
    return [SubsetSpec(n, c) for c in combinations(range(1, n + 1), mu)]


def _position_kron(blocks) -> np.ndarray:
    rows = np.array([[1.0]])
    for b in blocks:
        rows = np.kron(rows, b)
    return rows


def _output_sizes(S: SubsetSpec, x_size: int, other_size: int) -> list:
    return [x_size if S.contains(i) else other_size for i in range(1, S.n + 1)]


def observation_channel(S: SubsetSpec, wtp: Channel, cap: int = TABLE_CAP) -> Channel:
    """Channel X^n -> Z_S^n: tapped positions copy x_i, the rest pass through ``wtp``."""
    x_size, v_size = wtp.input_size, wtp.output_size
    out = math.prod(_output_sizes(S, x_size, v_size))
    if x_size**S.n * out > cap:
        raise ResourceLimitError(f"observation channel needs {x_size**S.n * out} entries, cap {cap}")
    eye = np.eye(x_size)
    return Channel(_position_kron(eye if S.contains(i) else wtp.rows for i in range(1, S.n + 1)))


def wiretap2_observation_channel(S: SubsetSpec, x_size: int, cap: int = TABLE_CAP) -> Channel:
    """Deterministic erasure view of X^n: tapped positions copy x_i, others are erased.

    Erased positions contribute a single (erasure) output symbol, so the
    output alphabet has ``x_size ** mu`` elements.
    """
    if x_size**S.n * x_size**S.mu > cap:
        raise ResourceLimitError("wiretap-II observation channel exceeds cap")
    eye = np.eye(x_size)
    erase = np.ones((x_size, 1))
    return Channel(_position_kron(eye if S.contains(i) else erase for i in range(1, S.n + 1)))


def decode_observation(S: SubsetSpec, index: int, x_size: int, v_size: int) -> tuple:
    """Tagged symbols of output ``index`` of :func:`observation_channel`."""
    sizes = _output_sizes(S, x_size, v_size)
    out = []
    for i, size in reversed(list(enumerate(sizes, start=1))):
        index, d = divmod(index, size)
        out.append(TappedSymbol(PERFECT if S.contains(i) else NOISY, d))
    return tuple(reversed(out))


def decode_wiretap2_observation(S: SubsetSpec, index: int, x_size: int) -> tuple:
    digits = iter(sequence_digits(index, x_size, S.mu))
    return tuple(
        TappedSymbol(PERFECT, next(digits)) if S.contains(i) else TappedSymbol(ERASED)
        for i in range(1, S.n + 1)
    )
