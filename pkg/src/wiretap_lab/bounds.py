"""Numerical checks of the key-agreement, concentration and converse bounds.

Each check returns a :class:`BoundReport`. Information terms are in bits;
exponentials that appear as ``exp(.)`` in a bound are kept natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .adversary import (
    SubsetSpec,
    enumerate_subsets,
    mu_from_alpha,
    observation_channel,
    wiretap2_observation_channel,
)
from .binning import (
    BinningConfig,
    leakage_divergence,
    make_instance,
    tv_key_uniformity,
)
from .capacity import AuxiliaryInput, WiretapModel, erasure_augmented_joint
from .errors import DomainError, ValidationError
from .finite_prob import (
    Channel,
    Distribution,
    JointDistribution,
    binary_entropy,
    channel_power,
    conditional_mutual_information,
    entropy,
    iid_extend,
    kl_divergence,
    mutual_information,
)
from .parallel import ordered_map, trial_seed

EXACT_SLACK = 1e-12
MC_SIGMAS = 3.0
CONVERSE_TOL = 1e-10
ERASURE_TOL = 1e-9
ATOM_CAP = 2**20


@dataclass
class BoundReport:
    suite: str
    lhs: float
    rhs: float
    lhs_kind: str = "exact"
    trials: int = 0
    stderr: float = 0.0
    hypothesis_ok: bool = True
    probability_bound: bool = True
    terms: dict = field(default_factory=dict)
    note: str = ""
    tag: str = ""

    @property
    def holds(self) -> bool:
        if self.lhs_kind == "monte-carlo":
            return self.lhs <= self.rhs + MC_SIGMAS * self.stderr
        return self.lhs <= self.rhs + EXACT_SLACK

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def vacuous(self) -> bool:
        """A probability bound at or above 1 asserts nothing."""
        return self.probability_bound and self.rhs >= 1.0

    @property
    def verdict(self) -> str:
        if not self.hypothesis_ok:
            return "hypothesis-failed"
        if not self.holds:
            return "fail"
        if self.vacuous:
            return "vacuous"
        return "pass"

    @property
    def failed(self) -> bool:
        return self.verdict == "fail"

    def line(self) -> str:
        kind = self.lhs_kind if self.lhs_kind == "exact" else f"monte-carlo({self.trials},{self.stderr:.6e})"
        name = f"{self.suite}[{self.tag}]" if self.tag else self.suite
        return f"{name} {self.lhs:.6e} {kind} {self.rhs:.6e} {self.margin:.6e} {self.verdict}"


@dataclass(frozen=True)
class GammaConfig:
    """Threshold ``gamma`` (bits) plus the slack parameters of the leakage bound.

    ``delta=None`` picks the smallest delta for which the high-probability
    hypothesis holds.
    """

    gamma: float
    epsilon1: float = 0.5
    delta: Optional[float] = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if not 0.0 <= self.epsilon1 <= 1.0:
            raise ValidationError("epsilon1 must lie in [0, 1]")
        if self.delta is not None and not 0.0 < self.delta < 0.5:
            raise ValidationError("delta must lie in (0, 0.5)")


@dataclass(frozen=True)
class SanovConfig:
    lam: float
    nu: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValidationError("lambda must lie in (0, 1)")
        if not self.lam < self.nu <= 1.0:
            raise ValidationError("need lambda < nu <= 1")
        if self.n < 1:
            raise ValidationError("n must be >= 1")


def conditional_entropy_x_given_v(source: Distribution, wtp: Channel) -> float:
    j = JointDistribution.from_channel(source, wtp)
    return max(0.0, entropy(j) - entropy(j.marginal_distribution(1)))


def gamma_lemma1(source: Distribution, n: int, eps2: float = 0.1) -> float:
    """(1 - eps2) n H(X)."""
    return (1.0 - eps2) * n * entropy(source)


def gamma_lemma2(source: Distribution, wtp: Channel, alpha: float, n: int, eps2: float = 0.1) -> float:
    """(1 - eps2) (1 - alpha) n H(X|V)."""
    return (1.0 - eps2) * (1.0 - alpha) * n * conditional_entropy_x_given_v(source, wtp)


def _mean_stderr(values: Sequence[float]) -> tuple:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()) if arr.size else 0.0, 0.0
    return math.fsum(arr) / arr.size, float(arr.std(ddof=1) / math.sqrt(arr.size))


# -- key uniformity (suite "lemma1") ------------------------------------------


def low_surprisal_mass(source: Distribution, n: int, gamma: float) -> float:
    """P(log2 1/p(X^n) <= gamma), the mass outside the high-surprisal set."""
    px = iid_extend(source, n).materialize().probs
    surprisal = -np.log2(px)
    return math.fsum(px[surprisal <= gamma + 1e-9])


def lemma1_check(
    source: Distribution,
    cfg: BinningConfig,
    g: GammaConfig,
    trials: int = 500,
    seed: int = 0,
    main: Optional[Channel] = None,
    wtp: Optional[Channel] = None,
    workers: int = 1,
) -> BoundReport:
    """Mean TV of the key law from uniform vs ``P(surprisal <= gamma) + sqrt(MC 2^-gamma)/2``."""
    k = source.alphabet_size
    main = main or Channel.identity(k)
    wtp = wtp or Channel.identity(k)

    def one(t):
        inst = make_instance(source, main, wtp, cfg, trial_seed(seed, t))
        return tv_key_uniformity(inst)

    values = ordered_map(one, range(trials), workers)
    mean, se = _mean_stderr(values)
    term1 = low_surprisal_mass(source, cfg.n, g.gamma)
    term2 = 0.5 * math.sqrt(cfg.key_bins * cfg.public_bins * 2.0 ** (-g.gamma))
    return BoundReport(
        "lemma1",
        mean,
        term1 + term2,
        lhs_kind="monte-carlo",
        trials=trials,
        stderr=se,
        terms={"low_surprisal_mass": term1, "bin_term": term2, "gamma": g.gamma},
    )


# -- leakage concentration (suite "lemma2") -----------------------------------


def high_posterior_surprisal_mass(source: Distribution, wtp: Channel, S: SubsetSpec, gamma: float) -> float:
    """P(log2 1/p(x|z) > gamma) under the law of (X^n, Z_S), by exact enumeration."""
    px = iid_extend(source, S.n).materialize().probs
    pxz = px[:, None] * observation_channel(S, wtp).rows
    pz = pxz.sum(axis=0)
    mask = pxz > 0
    post = np.where(mask, pxz / np.where(pz > 0, pz, 1.0)[None, :], 1.0)
    inside = mask & (-np.log2(post) > gamma + 1e-9)
    return math.fsum(pxz[inside])


def posterior_by_factorization(source: Distribution, wtp: Channel, S: SubsetSpec) -> np.ndarray:
    """p(x^n | z) = prod over untapped i of p(x_i | v_i), zero when tapped symbols disagree."""
    k = source.alphabet_size
    pxv = source.probs[:, None] * wtp.rows
    pv = pxv.sum(axis=0)
    x_given_v = (pxv / np.where(pv > 0, pv, 1.0)).T  # (V, X)
    blocks = [np.eye(k) if S.contains(i) else x_given_v.T for i in range(1, S.n + 1)]
    out = np.array([[1.0]])
    for b in blocks:
        out = np.kron(out, b)
    return out  # (X^n, Z)


def lemma2_check(
    source: Distribution,
    wtp: Channel,
    cfg: BinningConfig,
    mu: int,
    g: GammaConfig,
    trials: int = 500,
    seed: int = 0,
    main: Optional[Channel] = None,
    workers: int = 1,
) -> BoundReport:
    """Frequency of ``max_S D >= eps_tilde`` over random binnings vs the union-bound RHS."""
    n = cfg.n
    main = main or Channel.identity(source.alphabet_size)
    subsets = enumerate_subsets(n, mu)
    inside = min(high_posterior_surprisal_mass(source, wtp, S, g.gamma) for S in subsets)
    delta_sq_needed = max(0.0, 1.0 - inside)
    if g.delta is None:
        delta = max(math.sqrt(delta_sq_needed), 1e-12)
        hypothesis = delta < 0.5
    else:
        delta = g.delta
        hypothesis = delta_sq_needed <= delta**2 + EXACT_SLACK
    mc = cfg.key_bins * cfg.public_bins
    eps_tilde = g.epsilon1 + (delta + delta**2) * math.log2(mc) + binary_entropy(min(delta**2, 1.0))
    z_size = (source.alphabet_size + wtp.output_size) ** n
    exponent = -(g.epsilon1**2) * (1.0 - delta) * 2.0**g.gamma / (3.0 * mc)
    rhs = len(subsets) * z_size * math.exp(exponent)

    def one(t):
        inst = make_instance(source, main, wtp, cfg, trial_seed(seed, t))
        worst = max(leakage_divergence(inst, S) for S in subsets)
        return 1.0 if worst >= eps_tilde else 0.0

    hits = ordered_map(one, range(trials), workers)
    freq = math.fsum(hits) / trials
    se = math.sqrt(freq * (1.0 - freq) / trials)
    return BoundReport(
        "lemma2",
        freq,
        rhs,
        lhs_kind="monte-carlo",
        trials=trials,
        stderr=se,
        hypothesis_ok=hypothesis,
        terms={
            "gamma": g.gamma,
            "delta": delta,
            "delta_sq_achieved": delta_sq_needed,
            "eps_tilde": eps_tilde,
            "n_subsets": len(subsets),
            "z_size": z_size,
        },
    )


# -- concentration inequalities --------------------------------------------------


def binomial_pmf(n: int, p: float) -> np.ndarray:
    return np.array([math.comb(n, k) * p**k * (1.0 - p) ** (n - k) for k in range(n + 1)])


def binomial_lower_tail(n: int, p: float, threshold: float) -> float:
    """P(Binomial(n, p) <= threshold)."""
    kmax = math.floor(threshold + 1e-9)
    if kmax < 0:
        return 0.0
    return min(1.0, math.fsum(binomial_pmf(n, p)[: kmax + 1]))


def binomial_upper_tail(n: int, p: float, threshold: float) -> float:
    """P(Binomial(n, p) >= threshold)."""
    kmin = max(0, math.ceil(threshold - 1e-9))
    if kmin > n:
        return 0.0
    return min(1.0, math.fsum(binomial_pmf(n, p)[kmin:]))


def hoeffding_check(p: float, epsilon: float, n_list) -> list:
    """Exact Bernoulli(p) lower tail vs ``exp(-2 eps^2 p^2 n)`` (range width 1)."""
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    out = []
    for n in n_list:
        lhs = binomial_lower_tail(n, p, (1.0 - epsilon) * n * p)
        rhs = math.exp(-2.0 * epsilon**2 * p**2 * n)
        out.append(BoundReport("hoeffding", lhs, rhs, terms={"p": p, "epsilon": epsilon, "n": n}))
    return out


def chernoff_variant_check(
    variables,
    bound_b: float,
    epsilon: float,
    m_bar: Optional[float] = None,
    trials: int = 100_000,
    seed: int = 0,
    atom_cap: int = ATOM_CAP,
) -> BoundReport:
    """P(sum U_i >= (1 + eps) m_bar) vs ``exp(-eps^2 m_bar / (3 b))``.

    ``variables`` is a sequence of ``(values, probs)`` finite laws with
    values in ``[0, b]``. The tail is exact when the joint support has at
    most ``atom_cap`` atoms and Monte Carlo otherwise.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError("epsilon must lie in [0, 1]")
    laws = []
    for values, probs in variables:
        values = np.asarray(values, dtype=float)
        probs = Distribution(probs).probs
        if values.shape != probs.shape:
            raise ValidationError("values and probabilities differ in length")
        if np.any(values < 0) or np.any(values > bound_b):
            raise DomainError(f"support outside [0, {bound_b}]")
        laws.append((values, probs))
    means = math.fsum(math.fsum(v * p) for v, p in laws)
    m_bar = means if m_bar is None else m_bar
    if means > m_bar + EXACT_SLACK:
        raise ValidationError(f"sum of means {means} exceeds m_bar {m_bar}")
    threshold = (1.0 + epsilon) * m_bar
    rhs = math.exp(-(epsilon**2) * m_bar / (3.0 * bound_b))
    atoms = math.prod(len(v) for v, _ in laws)
    terms = {"m_bar": m_bar, "b": bound_b, "epsilon": epsilon, "atoms": atoms}
    if atoms <= atom_cap:
        sums, mass = np.array([0.0]), np.array([1.0])
        for v, p in laws:
            sums = np.add.outer(sums, v).ravel()
            mass = np.multiply.outer(mass, p).ravel()
        lhs = min(1.0, math.fsum(mass[sums >= threshold - 1e-12]))
        return BoundReport("chernoff", lhs, rhs, terms=terms)
    rng = np.random.default_rng(seed)
    total = np.zeros(trials)
    for v, p in laws:
        total += rng.choice(v, size=trials, p=p)
    hits = total >= threshold - 1e-12
    freq = float(hits.mean())
    se = math.sqrt(freq * (1.0 - freq) / trials)
    return BoundReport("chernoff", freq, rhs, lhs_kind="monte-carlo", trials=trials, stderr=se, terms=terms)


def bernoulli_kl(xi: float, lam: float) -> float:
    return kl_divergence(Distribution.bernoulli(xi), Distribution.bernoulli(lam))


def sanov_minimizer(cfg: SanovConfig) -> float:
    """Exhaustive scan of the admissible types xi = l/n, l = ceil(nu n)..n; returns the argmin xi."""
    n = cfg.n
    lo = math.ceil(cfg.nu * n - 1e-9)
    best_l = min(range(lo, n + 1), key=lambda l: (bernoulli_kl(l / n, cfg.lam), l))
    return best_l / n


def sanov_erasure_check(cfg: SanovConfig) -> BoundReport:
    """Exact P(#non-erasures >= nu n) under Bern(lambda) vs ``(n+1)^2 2^(-n D(nu || lambda))``."""
    n = cfg.n
    lhs = binomial_upper_tail(n, cfg.lam, cfg.nu * n)
    d = bernoulli_kl(cfg.nu, cfg.lam)
    rhs = (n + 1) ** 2 * 2.0 ** (-n * d)
    xi = sanov_minimizer(cfg)
    smallest_type = math.ceil(cfg.nu * n - 1e-9) / n
    return BoundReport(
        "sanov",
        lhs,
        rhs,
        terms={
            "n": n,
            "divergence_bits": d,
            "xi_star": xi,
            "xi_is_smallest_type": xi == smallest_type,
            "divergence_at_xi_star": bernoulli_kl(xi, cfg.lam),
        },
    )


# -- converse identities ---------------------------------------------------------


def _mi_of_product(p_m: np.ndarray, encoder: np.ndarray, channel: np.ndarray) -> float:
    joint = p_m[:, None] * (encoder @ channel)
    return mutual_information(JointDistribution(joint / math.fsum(joint.ravel())), 0, 1)


def wiretap2_with_noisy_channel(S: SubsetSpec, wtp: Channel) -> np.ndarray:
    """Channel X^n -> (erasure view on S, V^n): both views side by side."""
    a = wiretap2_observation_channel(S, wtp.input_size).rows
    b = channel_power(wtp, S.n).rows
    return (a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1)


def converse_equivalence_check(encoder, p_m: Distribution, wtp: Channel, S: SubsetSpec) -> BoundReport:
    """|I(M; Z_S) - I(M; erasure view, V^n)| against 1e-10."""
    encoder = np.asarray(encoder, dtype=float)
    if encoder.shape != (p_m.alphabet_size, wtp.input_size**S.n):
        raise ValidationError(f"encoder shape {encoder.shape} does not match (|M|, |X|^n)")
    i_tapped = _mi_of_product(p_m.probs, encoder, observation_channel(S, wtp).rows)
    i_equiv = _mi_of_product(p_m.probs, encoder, wiretap2_with_noisy_channel(S, wtp))
    return BoundReport(
        "converse",
        abs(i_tapped - i_equiv),
        CONVERSE_TOL,
        probability_bound=False,
        terms={"I_tapped": i_tapped, "I_erasure_plus_noisy": i_equiv, "subset": S.format()},
    )


def erasure_decomposition_check(aux: AuxiliaryInput, model: WiretapModel) -> BoundReport:
    """|I(U;Z|V) - alpha I(U;X|V)| against 1e-9, Z being X erased w.p. 1 - alpha."""
    j = erasure_augmented_joint(aux, model)
    lhs = conditional_mutual_information(j, 0, 4, 3)
    rhs = model.alpha * conditional_mutual_information(j, 0, 1, 3)
    return BoundReport(
        "erasure",
        abs(lhs - rhs),
        ERASURE_TOL,
        probability_bound=False,
        terms={"I_UZ_given_V": lhs, "alpha_I_UX_given_V": rhs},
    )


def random_encoder(rng: np.random.Generator, messages: int, x_size: int, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(x_size**n), size=messages)


# -- suite runner ----------------------------------------------------------------

SUITES = ("lemma1", "lemma2", "hoeffding", "chernoff", "sanov", "converse")

HOEFFDING_P = (0.1, 0.3, 0.5, 0.7, 0.9)
HOEFFDING_EPS = (0.1, 0.25, 0.5, 0.75, 1.0)
CHERNOFF_Q = (0.1, 0.3, 0.5)
CHERNOFF_B = (1.0, 2.0)
CHERNOFF_COUNTS = (5, 10, 20)
CHERNOFF_EPS = (0.25, 0.5, 1.0)
SANOV_PAIRS = ((0.2, 0.4), (0.1, 0.3))
MAX_N = 64


@dataclass(frozen=True)
class VerifyParams:
    """Knobs of :func:`run_verify_suite`; ``None`` selects the per-suite default."""

    n: Optional[int] = None
    rate_key: Optional[float] = None
    rate_public: Optional[float] = None
    mu: Optional[int] = None
    gamma: Optional[float] = None
    eps2: float = 0.1
    trials: int = 500
    seed: int = 0
    workers: int = 1


def _fmt(x: float) -> str:
    return f"{x:g}"


def _lemma1_suite(model: WiretapModel, source: Distribution, prm: VerifyParams) -> list:
    n = prm.n or 6
    cfg = BinningConfig(n, 0.2 if prm.rate_key is None else prm.rate_key, 0.2 if prm.rate_public is None else prm.rate_public)
    gamma = prm.gamma if prm.gamma is not None else gamma_lemma1(source, n, prm.eps2)
    r = lemma1_check(source, cfg, GammaConfig(gamma), prm.trials, prm.seed, model.main, model.wtp, prm.workers)
    r.tag = f"n={n}"
    return [r]


def _lemma2_suite(model: WiretapModel, source: Distribution, prm: VerifyParams) -> list:
    n = prm.n or 8
    budget = (1.0 - model.alpha) * conditional_entropy_x_given_v(source, model.wtp)
    rk = budget / 4 if prm.rate_key is None else prm.rate_key
    rp = budget / 4 if prm.rate_public is None else prm.rate_public
    mu = mu_from_alpha(model.alpha, n) if prm.mu is None else prm.mu
    gamma = prm.gamma if prm.gamma is not None else gamma_lemma2(source, model.wtp, model.alpha, n, prm.eps2)
    if gamma <= 0:
        raise DomainError("lemma2 threshold is not positive; the secrecy budget is zero")
    r = lemma2_check(
        source, model.wtp, BinningConfig(n, rk, rp), mu, GammaConfig(gamma), prm.trials, prm.seed, model.main, prm.workers
    )
    r.tag = f"n={n},mu={mu}"
    return [r]


def _hoeffding_suite() -> list:
    out = []
    for p in HOEFFDING_P:
        for eps in HOEFFDING_EPS:
            for r in hoeffding_check(p, eps, range(1, MAX_N + 1)):
                r.tag = f"p={_fmt(p)},eps={_fmt(eps)},n={r.terms['n']}"
                out.append(r)
    return out


def _chernoff_suite(seed: int) -> list:
    out = []
    for q in CHERNOFF_Q:
        for b in CHERNOFF_B:
            for m in CHERNOFF_COUNTS:
                for eps in CHERNOFF_EPS:
                    r = chernoff_variant_check([([0.0, b], [1 - q, q])] * m, b, eps)
                    r.tag = f"q={_fmt(q)},b={_fmt(b)},m={m},eps={_fmt(eps)}"
                    out.append(r)
    # 3^30 joint atoms: beyond enumeration, so the tail is sampled
    rng = np.random.default_rng(seed)
    laws = [(rng.uniform(0.0, 1.0, size=3), rng.dirichlet(np.ones(3))) for _ in range(30)]
    r = chernoff_variant_check(laws, 1.0, 0.2, trials=100_000, seed=seed)
    r.tag = "random-supports,m=30,eps=0.2"
    out.append(r)
    return out


def _sanov_suite() -> list:
    out = []
    for lam, nu in SANOV_PAIRS:
        for n in range(1, MAX_N + 1):
            r = sanov_erasure_check(SanovConfig(lam, nu, n))
            r.tag = f"lam={_fmt(lam)},nu={_fmt(nu)},n={n}"
            out.append(r)
    return out


def _converse_suite(model: WiretapModel, prm: VerifyParams) -> list:
    rng = np.random.default_rng(prm.seed)
    k = model.x_size
    out = []
    n_max = prm.n or 3
    for n in range(1, n_max + 1):
        subsets = [S for mu in range(n + 1) for S in enumerate_subsets(n, mu)]
        for e in range(5):
            encoder = random_encoder(rng, 4, k, n)
            p_m = Distribution(rng.dirichlet(np.ones(4)))
            reports = [converse_equivalence_check(encoder, p_m, model.wtp, S) for S in subsets]
            worst = max(reports, key=lambda r: r.lhs)
            worst.tag = f"n={n},encoder={e},worst={worst.terms['subset'] or '-'}"
            out.append(worst)
    for d in range(10):
        aux = AuxiliaryInput.from_array(rng.dirichlet(np.ones(k * k)).reshape(k, k))
        r = erasure_decomposition_check(aux, model)
        r.tag = f"draw={d},alpha={_fmt(model.alpha)}"
        out.append(r)
    return out


def run_verify_suite(suite: str, model: WiretapModel, source: Optional[Distribution] = None, params=None) -> list:
    """Run one suite (or ``"all"``) and return its reports in a fixed order."""
    prm = params or VerifyParams()
    source = source or Distribution.uniform(model.x_size)
    if source.alphabet_size != model.x_size:
        raise ValidationError("source alphabet does not match the channel input alphabet")
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name == "lemma1":
            out += _lemma1_suite(model, source, prm)
        elif name == "lemma2":
            out += _lemma2_suite(model, source, prm)
        elif name == "hoeffding":
            out += _hoeffding_suite()
        elif name == "chernoff":
            out += _chernoff_suite(prm.seed)
        elif name == "sanov":
            out += _sanov_suite()
        elif name == "converse":
            out += _converse_suite(model, prm)
        else:
            raise ValidationError(f"unknown suite {name!r}")
    return out
