"""Exact small-n realization of the dual random-binning key agreement.

A source sequence ``x^n`` is binned into a key index ``m`` and a public
index ``c``. Everything below is computed by exhaustive enumeration of the
source sequences, so the only error source is floating-point rounding.
Bin indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

from .adversary import SubsetSpec, enumerate_subsets, observation_channel
from .errors import DomainError, ResourceLimitError, ValidationError
from .finite_prob import (
    Channel,
    Distribution,
    JointDistribution,
    channel_power,
    iid_extend,
    kl_divergence,
    mutual_information,
    total_variation,
)

BINNING_CAP = 2**20
LEAKAGE_CAP = 2**24
TIE_RTOL = 1e-12

SELECTION_NOTE = "c* = argmin(error + leakage/log2(M)); fixed-n stand-in for the asymptotic public-index selection"


@dataclass(frozen=True)
class BinningConfig:
    n: int
    rate_key: float
    rate_public: float

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("blocklength must be >= 1")
        if self.rate_key < 0 or self.rate_public < 0:
            raise ValidationError("rates must be nonnegative")

    @property
    def key_bits(self) -> int:
        return _bits(self.n, self.rate_key)

    @property
    def public_bits(self) -> int:
        return _bits(self.n, self.rate_public)

    @property
    def key_bins(self) -> int:
        return 2**self.key_bits

    @property
    def public_bins(self) -> int:
        return 2**self.public_bits

    @property
    def realized_rate_key(self) -> float:
        return self.key_bits / self.n

    @property
    def realized_rate_public(self) -> float:
        return self.public_bits / self.n


def _bits(n: int, rate: float) -> int:
    # tolerate float fuzz such as 6 * 0.5000000001
    return max(0, math.ceil(n * rate - 1e-9))


@dataclass(frozen=True, eq=False)
class BinningRealization:
    config: BinningConfig
    b1: np.ndarray
    b2: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        b1 = np.asarray(self.b1, dtype=np.int64)
        b2 = np.asarray(self.b2, dtype=np.int64)
        if b1.shape != b2.shape or b1.ndim != 1:
            raise ValidationError("bin maps must be 1-d arrays of equal length")
        cfg = self.config
        if b1.size and (b1.min() < 0 or b1.max() >= cfg.key_bins):
            raise ValidationError("key bin index out of range")
        if b2.size and (b2.min() < 0 or b2.max() >= cfg.public_bins):
            raise ValidationError("public bin index out of range")
        b1.setflags(write=False)
        b2.setflags(write=False)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)

    @property
    def cells(self) -> np.ndarray:
        """Flattened (m, c) cell index ``m * C + c`` for every sequence."""
        return self.b1 * self.config.public_bins + self.b2


def sample_binning(cfg: BinningConfig, x_size: int, seed: int, cap: int = BINNING_CAP) -> BinningRealization:
    """Assign every sequence of X^n an independent uniform (m, c)."""
    size = x_size**cfg.n
    if size > cap:
        raise ResourceLimitError(f"|X|^n = {size} exceeds binning cap {cap}")
    rng = np.random.default_rng(seed)
    b1 = rng.integers(0, cfg.key_bins, size=size)
    b2 = rng.integers(0, cfg.public_bins, size=size)
    return BinningRealization(cfg, b1, b2, seed)


# -- cached n-letter tables (shared across binning realizations) -------------


def _key(arr: np.ndarray) -> tuple:
    return arr.shape, arr.tobytes()


def _unkey(key: tuple) -> np.ndarray:
    shape, raw = key
    return np.frombuffer(raw, dtype=float).reshape(shape)


@lru_cache(maxsize=32)
def _sequence_probs(source_key, n: int) -> np.ndarray:
    seq = iid_extend(Distribution(_unkey(source_key)), n).materialize().probs
    return seq


@lru_cache(maxsize=16)
def _joint_xy(source_key, main_key, n: int) -> np.ndarray:
    px = _sequence_probs(source_key, n)
    w = channel_power(Channel(_unkey(main_key)), n).rows
    return px[:, None] * w


@lru_cache(maxsize=256)
def _joint_xz(source_key, wtp_key, n: int, indices: tuple, cap: int) -> np.ndarray:
    px = _sequence_probs(source_key, n)
    w = observation_channel(SubsetSpec(n, indices), Channel(_unkey(wtp_key)), cap=cap).rows
    return px[:, None] * w


@dataclass(frozen=True, eq=False)
class ProtocolInstance:
    source: Distribution
    main: Channel
    wtp: Channel
    binning: BinningRealization

    def __post_init__(self):
        k = self.source.alphabet_size
        if np.any(self.source.probs <= 0):
            raise ValidationError("source symbols must all have positive probability")
        if self.main.input_size != k or self.wtp.input_size != k:
            raise ValidationError("channel input sizes must match the source alphabet")
        if self.binning.b1.size != k**self.n:
            raise ValidationError("binning does not cover X^n")

    @property
    def n(self) -> int:
        return self.binning.config.n

    @property
    def key_bins(self) -> int:
        return self.binning.config.key_bins

    @property
    def public_bins(self) -> int:
        return self.binning.config.public_bins

    @cached_property
    def sequence_probs(self) -> np.ndarray:
        return _sequence_probs(_key(self.source.probs), self.n)

    def joint_xy(self, cap: int = LEAKAGE_CAP) -> np.ndarray:
        if (self.source.alphabet_size * self.main.output_size) ** self.n > cap:
            raise ResourceLimitError("|X|^n |Y|^n exceeds cap")
        return _joint_xy(_key(self.source.probs), _key(self.main.rows), self.n)

    def joint_xz(self, S: SubsetSpec, cap: int = LEAKAGE_CAP) -> np.ndarray:
        """Table ``p(x^n) p(z | x^n)`` for the observation Z_S."""
        if S.n != self.n:
            raise ValidationError(f"subset blocklength {S.n} != {self.n}")
        k, v = self.source.alphabet_size, self.wtp.output_size
        if k**self.n * v ** (self.n - S.mu) > cap:
            raise ResourceLimitError("|X|^n |V|^(n-mu) exceeds leakage cap")
        return _joint_xz(_key(self.source.probs), _key(self.wtp.rows), self.n, S.indices, cap * k**S.mu)


def make_instance(source, main, wtp, cfg: BinningConfig, seed: int) -> ProtocolInstance:
    return ProtocolInstance(source, main, wtp, sample_binning(cfg, source.alphabet_size, seed))


# -- key uniformity ----------------------------------------------------------


def _grouped_fsum(keys: np.ndarray, weights: np.ndarray, size: int) -> np.ndarray:
    """Per-key compensated sums."""
    order = np.argsort(keys, kind="stable")
    sk, sw = keys[order], weights[order]
    out = np.zeros(size)
    bounds = np.flatnonzero(np.diff(sk)) + 1
    for lo, hi in zip(np.r_[0, bounds], np.r_[bounds, sk.size]):
        out[sk[lo]] = math.fsum(sw[lo:hi])
    return out


def induced_key_distribution(inst: ProtocolInstance) -> JointDistribution:
    """Exact law of (M, C)."""
    M, C = inst.key_bins, inst.public_bins
    flat = _grouped_fsum(inst.binning.cells, inst.sequence_probs, M * C)
    return JointDistribution(flat.reshape(M, C))


def tv_key_uniformity(inst: ProtocolInstance) -> float:
    p = induced_key_distribution(inst)
    return total_variation(p.probs, np.full(p.probs.size, 1.0 / p.probs.size))


# -- Slepian-Wolf decoding ----------------------------------------------------


def _argmax_first(sub: np.ndarray) -> np.ndarray:
    """Row index of each column's maximum, ties (up to rounding) to the smallest row."""
    colmax = sub.max(axis=0)
    return np.argmax(sub >= colmax * (1.0 - TIE_RTOL), axis=0)


def in_bin_map_decoder(inst: ProtocolInstance) -> np.ndarray:
    """``xhat[c, y]``: MAP estimate of x^n within public bin ``c`` given y^n (-1 for empty bins)."""
    pxy = inst.joint_xy()
    b2 = inst.binning.b2
    xhat = np.full((inst.public_bins, pxy.shape[1]), -1, dtype=np.int64)
    for c in np.unique(b2):
        rows = np.flatnonzero(b2 == c)
        xhat[c] = rows[_argmax_first(pxy[rows])]
    return xhat


def slepian_wolf_error(inst: ProtocolInstance) -> float:
    """Exact P(xhat != X) of the in-bin MAP decoder."""
    pxy = inst.joint_xy()
    xhat = in_bin_map_decoder(inst)
    cols = np.arange(pxy.shape[1])
    correct = [pxy[xhat[c], cols] for c in np.unique(inst.binning.b2)]
    return max(0.0, 1.0 - math.fsum(np.concatenate(correct)))


# -- leakage ------------------------------------------------------------------


def _cell_rows(cells: np.ndarray, table: np.ndarray):
    """Sum the rows of ``table`` per cell; returns (occupied cell ids, summed rows)."""
    order = np.argsort(cells, kind="stable")
    sc = cells[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sc)) + 1]
    return sc[starts], np.add.reduceat(table[order], starts, axis=0)


def joint_mc_z(inst: ProtocolInstance, S: SubsetSpec):
    """(occupied cells, P(cell, z)) for the observation Z_S; empty cells carry no mass."""
    return _cell_rows(inst.binning.cells, inst.joint_xz(S))


def leakage_divergence(inst: ProtocolInstance, S: SubsetSpec) -> float:
    """D(P_{MCZ_S} || uniform_M x uniform_C x P_{Z_S}) in bits."""
    _, P = joint_mc_z(inst, S)
    pz = P.sum(axis=0)
    mc = inst.key_bins * inst.public_bins
    mask = P > 0
    ratio = (P * mc) / pz[None, :]
    return max(0.0, math.fsum(P[mask] * np.log2(ratio[mask])))


def leakage_decomposition(inst: ProtocolInstance, S: SubsetSpec) -> tuple:
    """(I(MC; Z_S), D(P_MC || uniform)); their sum equals the leakage divergence."""
    _, P = joint_mc_z(inst, S)
    info = mutual_information(JointDistribution(P / math.fsum(P.ravel())), 0, 1)
    pmc = induced_key_distribution(inst).probs
    key_gap = kl_divergence(pmc, np.full(pmc.size, 1.0 / pmc.size))
    return info, key_gap


def conditional_key_leakage(inst: ProtocolInstance, S: SubsetSpec) -> float:
    """I(M; Z_S | C) under the binning law."""
    cells, P = joint_mc_z(inst, S)
    C = inst.public_bins
    c_of = cells % C
    _, Pcz = _cell_rows(c_of, P)
    pmc = P.sum(axis=1)
    pc = Pcz.sum(axis=1)
    h = _entropy
    return max(0.0, h(pmc) + h(Pcz) - h(P) - h(pc))


def _entropy(a: np.ndarray) -> float:
    p = a[a > 0]
    return -math.fsum(p * np.log2(p))


def per_subset_leakage(inst: ProtocolInstance, mu: int, subsets=None) -> list:
    subsets = subsets if subsets is not None else enumerate_subsets(inst.n, mu)
    return [(S, leakage_divergence(inst, S)) for S in subsets]


def max_leakage(inst: ProtocolInstance, mu: int) -> tuple:
    """Worst-case subset of size ``mu`` and its leakage; ties go to the lexicographically first."""
    best = None
    for S, d in per_subset_leakage(inst, mu):
        if best is None or d > best[1]:
            best = (S, d)
    return best


# -- channel code extraction ----------------------------------------------------


@dataclass
class ChannelCode:
    c_star: int
    encoder: np.ndarray  # (M, |X|^n): law of x^n given message m and C = c*
    decoder_x: np.ndarray  # (|Y|^n,): sequence estimate
    decoder_m: np.ndarray  # (|Y|^n,): message estimate b1(xhat)
    message_error: float
    leakage: dict  # subset string -> I(M; Z_S | C = c*)
    empty_messages: int
    note: str = SELECTION_NOTE

    @property
    def max_leakage(self) -> float:
        return max(self.leakage.values()) if self.leakage else 0.0


def extract_channel_code(inst: ProtocolInstance, c_star: int, mu: int = 0, subsets=None) -> ChannelCode:
    """Condition the binning on public index ``c_star`` to obtain a wiretap channel code.

    Messages whose cell (m, c_star) holds no sequence have no conditional
    law; they are encoded with the source law restricted to bin ``c_star``.
    """
    b1, b2 = inst.binning.b1, inst.binning.b2
    px = inst.sequence_probs
    in_bin = b2 == c_star
    pc = math.fsum(px[in_bin])
    if not 0 <= c_star < inst.public_bins or pc <= 0:
        raise DomainError(f"public index {c_star} has zero probability")
    M = inst.key_bins
    encoder = np.zeros((M, px.size))
    fallback = np.where(in_bin, px, 0.0) / pc
    empty = 0
    for m in range(M):
        cell = in_bin & (b1 == m)
        mass = math.fsum(px[cell])
        if mass > 0:
            encoder[m] = np.where(cell, px, 0.0) / mass
        else:
            encoder[m] = fallback
            empty += 1

    xhat = in_bin_map_decoder(inst)[c_star]
    mhat = b1[xhat]
    w_main = channel_power(inst.main, inst.n).rows
    decode = np.zeros((mhat.size, M))
    decode[np.arange(mhat.size), mhat] = 1.0
    confusion = encoder @ w_main @ decode
    error = max(0.0, 1.0 - math.fsum(np.diag(confusion)) / M)

    subsets = subsets if subsets is not None else enumerate_subsets(inst.n, mu)
    leakage = {}
    for S in subsets:
        w = observation_channel(S, inst.wtp).rows
        pmz = (encoder @ w) / M
        leakage[S.format()] = mutual_information(JointDistribution(pmz / math.fsum(pmz.ravel())), 0, 1)
    return ChannelCode(c_star, encoder, xhat, mhat, error, leakage, empty)


def select_public_index(inst: ProtocolInstance, mu: int = 0) -> ChannelCode:
    """Pick c* minimizing message error plus normalized worst-case leakage."""
    scale = max(1.0, math.log2(inst.key_bins))
    subsets = enumerate_subsets(inst.n, mu)
    best, best_score = None, math.inf
    for c in np.unique(inst.binning.b2):
        code = extract_channel_code(inst, int(c), subsets=subsets)
        score = code.message_error + code.max_leakage / scale
        if score < best_score:
            best, best_score = code, score
    return best
