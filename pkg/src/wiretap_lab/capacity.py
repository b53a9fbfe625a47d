"""Secrecy capacity of the tapped-subset wiretap channel.

The objective ``I(U;Y) - I(U;V) - alpha * I(U;X|V)`` is a difference of
mutual informations and is not concave in ``p_UX``. The optimizer seeds a
multi-start projected-gradient ascent from a coarse simplex grid; only the
exhaustive grid (:func:`exhaustive_grid_capacity`) certifies a global
optimum, and only up to its resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .finite_prob import (
    Channel,
    Distribution,
    JointDistribution,
    conditional_mutual_information,
    markov_joint,
    mutual_information,
)
from .parallel import ordered_map

GRAD_STEP = 1e-5
LINE_SEARCH_START = 0.1
LINE_SEARCH_FLOOR = 1e-8


@dataclass(frozen=True)
class WiretapModel:
    main: Channel
    wtp: Channel
    alpha: float = 0.0

    def __post_init__(self):
        if self.main.input_size != self.wtp.input_size:
            raise ValidationError(
                f"main and wiretapper channels disagree on |X|: "
                f"{self.main.input_size} vs {self.wtp.input_size}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha {self.alpha} outside [0, 1]")

    @property
    def x_size(self) -> int:
        return self.main.input_size

    def with_alpha(self, alpha: float) -> "WiretapModel":
        return replace(self, alpha=alpha)


@dataclass(frozen=True)
class AuxiliaryInput:
    """Joint law of the auxiliary U and the channel input X (axes U, X)."""

    p_ux: JointDistribution

    def __post_init__(self):
        if self.p_ux.ndim != 2:
            raise ValidationError("p_UX must have exactly two axes (U, X)")
        u_size, x_size = self.p_ux.axis_sizes
        if u_size > x_size:
            raise ValidationError(f"|U| = {u_size} exceeds |X| = {x_size}")

    @property
    def u_size(self) -> int:
        return self.p_ux.axis_sizes[0]

    @property
    def x_size(self) -> int:
        return self.p_ux.axis_sizes[1]

    @classmethod
    def from_array(cls, table) -> "AuxiliaryInput":
        return cls(JointDistribution(np.asarray(table, dtype=float)))

    @classmethod
    def identity(cls, p_x: Distribution) -> "AuxiliaryInput":
        """U = X with X ~ p_x."""
        return cls(JointDistribution(np.diag(p_x.probs)))


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    grid_step: float = 0.05
    max_iters: int = 500
    tol: float = 1e-10
    seed: int = 0
    grid_cap: int = 20000
    agree_tol: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if not 0.0 < self.grid_step <= 0.5:
            raise ValidationError("grid_step must lie in (0, 0.5]")
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


@dataclass
class Diagnostics:
    iterations: int
    restarts_used: int
    best_restart: int
    trace: list
    grid_points: int
    grid_step_used: float
    grid_value: float
    phases_agree: bool
    converged: bool


@dataclass
class CapacityResult:
    value: float
    argmax: AuxiliaryInput
    objective: float
    diagnostics: Diagnostics = field(repr=False)


def _check_sizes(aux: AuxiliaryInput, model: WiretapModel) -> None:
    if aux.x_size != model.x_size:
        raise ValidationError(f"aux |X| = {aux.x_size} but model |X| = {model.x_size}")


# -- objectives on a single point -------------------------------------------

U, X, Y, V = 0, 1, 2, 3


def secrecy_objective(aux: AuxiliaryInput, model: WiretapModel) -> float:
    """``I(U;Y) - I(U;V) - alpha I(U;X|V)``, unclamped."""
    _check_sizes(aux, model)
    j = markov_joint(aux.p_ux, model.main, model.wtp)
    return (
        mutual_information(j, U, Y)
        - mutual_information(j, U, V)
        - model.alpha * conditional_mutual_information(j, U, X, V)
    )


def secrecy_objective_alt(aux: AuxiliaryInput, model: WiretapModel) -> float:
    """Weighted form ``I(U;Y) - alpha I(U;X) - (1 - alpha) I(U;V)``."""
    _check_sizes(aux, model)
    j = markov_joint(aux.p_ux, model.main, model.wtp)
    a = model.alpha
    return mutual_information(j, U, Y) - a * mutual_information(j, U, X) - (
        1.0 - a
    ) * mutual_information(j, U, V)


def erasure_augmented_joint(aux: AuxiliaryInput, model: WiretapModel) -> JointDistribution:
    """Joint over (U, X, Y, V, Z) where Z is X erased with probability 1 - alpha."""
    _check_sizes(aux, model)
    erasure = Channel.erasure(model.x_size, 1.0 - model.alpha)
    table = np.einsum(
        "ux,xy,xv,xz->uxyvz", aux.p_ux.table, model.main.rows, model.wtp.rows, erasure.rows
    )
    return JointDistribution(table)


def eq2_objective(aux: AuxiliaryInput, model: WiretapModel) -> float:
    """Classical wiretap objective ``I(U;Y) - I(U;V,Z)`` with the erasure-augmented eavesdropper."""
    j = erasure_augmented_joint(aux, model)
    return mutual_information(j, 0, 2) - mutual_information(j, 0, (3, 4))


def secrecy_costs(aux: AuxiliaryInput, model: WiretapModel) -> tuple:
    """(tap cost ``alpha I(U;X|V)``, noisy cost ``(1 - alpha) I(U;V)``)."""
    _check_sizes(aux, model)
    j = markov_joint(aux.p_ux, model.main, model.wtp)
    tap = model.alpha * conditional_mutual_information(j, U, X, V)
    noisy = (1.0 - model.alpha) * mutual_information(j, U, V)
    return tap, noisy


# -- batched evaluation -----------------------------------------------------


def _h(a: np.ndarray, axes: tuple) -> np.ndarray:
    safe = np.where(a > 0, a, 1.0)
    return -np.sum(np.where(a > 0, a * np.log2(safe), 0.0), axis=axes)


def batch_objective(P: np.ndarray, main: np.ndarray, wtp: np.ndarray, alpha: float) -> np.ndarray:
    """Objective for a stack of p_UX tables ``P`` of shape (B, U, X).

    Rows are renormalized first, so slightly off-simplex points (finite
    difference probes) are evaluated as their normalized counterparts.
    """
    P = P / P.sum(axis=(1, 2), keepdims=True)
    pu = P.sum(axis=2)
    px = P.sum(axis=1)
    puy = P @ main
    puv = P @ wtp
    py = px @ main
    pv = px @ wtp
    puxv = P[..., None] * wtp
    pxv = px[..., None] * wtp
    h_u = _h(pu, (1,))
    h_v = _h(pv, (1,))
    h_uv = _h(puv, (1, 2))
    i_uy = h_u + _h(py, (1,)) - _h(puy, (1, 2))
    i_uv = h_u + h_v - h_uv
    i_ux_v = h_uv + _h(pxv, (1, 2)) - _h(puxv, (1, 2, 3)) - h_v
    return i_uy - i_uv - alpha * i_ux_v


# -- simplex tools ----------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / k > 0)[0][-1]
    theta = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def simplex_grid_size(dim: int, step: float) -> int:
    m = int(round(1.0 / step))
    return math.comb(m + dim - 1, dim - 1)


def simplex_grid(dim: int, step: float) -> np.ndarray:
    """All points of the simplex whose coordinates are multiples of ``1/round(1/step)``."""
    m = int(round(1.0 / step))
    points = []
    for bars in combinations(range(m + dim - 1), dim - 1):
        edges = (-1,) + bars + (m + dim - 1,)
        points.append([edges[i + 1] - edges[i] - 1 for i in range(dim)])
    return np.asarray(points, dtype=float) / m


def _coarsen(dim: int, step: float, cap: int) -> float:
    m = int(round(1.0 / step))
    while m > 1 and math.comb(m + dim - 1, dim - 1) > cap:
        m -= 1
    return 1.0 / m


# -- projected gradient ascent ----------------------------------------------


@dataclass
class _Ascent:
    x: np.ndarray
    value: float
    trace: list
    iterations: int
    converged: bool


def numerical_gradient(f_batch: Callable, x: np.ndarray, h: float = GRAD_STEP) -> np.ndarray:
    """Central differences, one-sided forward where a coordinate is within ``h`` of zero."""
    d = x.size
    eye = np.eye(d) * h
    central = x >= h
    probes = np.concatenate([x + eye, x - eye, x[None]])
    vals = f_batch(np.maximum(probes, 0.0))
    plus, minus, base = vals[:d], vals[d : 2 * d], vals[-1]
    return np.where(central, (plus - minus) / (2 * h), (plus - base) / h)


def ascend(f_batch: Callable, x0: np.ndarray, max_iters: int, tol: float) -> _Ascent:
    """Projected gradient ascent on the simplex with halving backtracking."""
    x = project_simplex(np.asarray(x0, dtype=float))
    fx = float(f_batch(x[None])[0])
    trace = [fx]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g = numerical_gradient(f_batch, x)
        t = LINE_SEARCH_START
        accepted = None
        while t >= LINE_SEARCH_FLOOR:
            y = project_simplex(x + t * g)
            fy = float(f_batch(y[None])[0])
            if fy > fx:
                accepted = (y, fy)
                break
            t *= 0.5
        if accepted is None:
            converged = True
            break
        gain = accepted[1] - fx
        x, fx = accepted
        trace.append(fx)
        if gain < tol:
            converged = True
            break
    return _Ascent(x, fx, trace, it, converged)


def _maximize_on_simplex(f_batch, dim: int, cfg: OptimizerConfig, extra_starts=()):
    step = cfg.grid_step
    if simplex_grid_size(dim, step) > cfg.grid_cap:
        step = _coarsen(dim, step, cfg.grid_cap)
    grid = simplex_grid(dim, step)
    grid_vals = np.concatenate([f_batch(chunk) for chunk in np.array_split(grid, max(1, len(grid) // 4096))])
    best_grid = int(np.argmax(grid_vals))
    grid_value = float(grid_vals[best_grid])

    rng = np.random.default_rng(cfg.seed)
    starts = [grid[best_grid]] + [np.asarray(s, dtype=float) for s in extra_starts]
    while len(starts) < cfg.restarts:
        starts.append(rng.dirichlet(np.ones(dim)))
    starts = starts[: cfg.restarts]

    runs = ordered_map(lambda s: ascend(f_batch, s, cfg.max_iters, cfg.tol), starts, cfg.workers)
    best = 0
    for i, r in enumerate(runs):
        if r.value > runs[best].value:
            best = i
    winner = runs[best]
    diag = Diagnostics(
        iterations=sum(r.iterations for r in runs),
        restarts_used=len(runs),
        best_restart=best,
        trace=winner.trace,
        grid_points=len(grid),
        grid_step_used=step,
        grid_value=grid_value,
        phases_agree=abs(winner.value - grid_value) <= cfg.agree_tol,
        converged=all(r.converged for r in runs),
    )
    if grid_value > winner.value:
        return grid[best_grid], grid_value, diag
    return winner.x, winner.value, diag


def optimize_capacity(model: WiretapModel, cfg: Optional[OptimizerConfig] = None) -> CapacityResult:
    """Maximize the secrecy objective over p_UX with |U| = |X|; report ``max(0, best)``."""
    cfg = cfg or OptimizerConfig()
    k = model.x_size
    main, wtp, alpha = model.main.rows, model.wtp.rows, model.alpha

    def f_batch(flat):
        return batch_objective(flat.reshape(-1, k, k), main, wtp, alpha)

    identity_uniform = (np.eye(k) / k).ravel()
    x, _, diag = _maximize_on_simplex(f_batch, k * k, cfg, extra_starts=[identity_uniform])
    aux = AuxiliaryInput.from_array(_clean(x).reshape(k, k))
    objective = secrecy_objective(aux, model)
    return CapacityResult(max(0.0, objective), aux, objective, diag)


def _clean(x: np.ndarray) -> np.ndarray:
    x = np.where(x < 1e-15, 0.0, x)
    return x / math.fsum(x)


def exhaustive_grid_capacity(model: WiretapModel, step: float = 1 / 200, chunk: int = 200_000):
    """Oracle mode: best objective over every grid point of the p_UX simplex.

    Returns ``(clamped value, AuxiliaryInput)``. Intended for |X| <= 3.
    """
    k = model.x_size
    dim = k * k
    main, wtp = model.main.rows, model.wtp.rows
    m = int(round(1.0 / step))
    best_val, best_x = -math.inf, None
    for block in _grid_blocks(dim, m, chunk):
        vals = batch_objective(block.reshape(-1, k, k), main, wtp, model.alpha)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_x = float(vals[i]), block[i]
    return max(0.0, best_val), AuxiliaryInput.from_array(best_x.reshape(k, k))


def _grid_blocks(dim: int, m: int, chunk: int):
    buf = []
    for bars in combinations(range(m + dim - 1), dim - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(m + dim - 2 - prev)
        buf.append(row)
        if len(buf) >= chunk:
            yield np.asarray(buf, dtype=float) / m
            buf = []
    if buf:
        yield np.asarray(buf, dtype=float) / m


def main_channel_capacity(channel: Channel, cfg: Optional[OptimizerConfig] = None):
    """max over p_X of I(X;Y) with the same grid + ascent machinery; returns (value, p_X)."""
    cfg = cfg or OptimizerConfig()
    k = channel.input_size
    rows = channel.rows

    def f_batch(px):
        px = px / px.sum(axis=1, keepdims=True)
        py = px @ rows
        pxy = px[..., None] * rows
        return _h(px, (1,)) + _h(py, (1,)) - _h(pxy, (1, 2))

    x, value, _ = _maximize_on_simplex(f_batch, k, cfg, extra_starts=[np.full(k, 1.0 / k)])
    return value, Distribution(_clean(x))


@dataclass
class SweepPoint:
    alpha: float
    result: CapacityResult
    cost_tap: float
    cost_noisy: float


def sweep_alpha(model: WiretapModel, alphas, cfg: Optional[OptimizerConfig] = None) -> list:
    cfg = cfg or OptimizerConfig()
    alphas = sorted(float(a) for a in alphas)
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ValidationError(f"alpha {a} outside [0, 1]")
    out = []
    for a in alphas:
        m = model.with_alpha(a)
        res = optimize_capacity(m, cfg)
        tap, noisy = secrecy_costs(res.argmax, m)
        out.append(SweepPoint(a, res, tap, noisy))
    return out
