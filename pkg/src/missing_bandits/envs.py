"""Generative bandit environments with missing observations.

Each environment owns the ground-truth law of (mediator, reward, masks)
per arm and exposes three things: `step` to draw one masked round,
`true_mean` for exact per-arm means, and `optimal_arm`. Constructors for
adversarial and lower-bound instance families plus a dataset-replay
environment live here as well.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import ArmId, ObservedRound, OutcomeAlphabet, RngStream, as_generator

Rng = Union[RngStream, np.random.Generator]


class IngestError(ValueError):
    """Raised when a dataset file cannot be turned into an environment."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _cumsums(row: Sequence[float]) -> List[float]:
    # cumulative sums for bisect-based categorical draws; last entry forced to 1
    acc, out = 0.0, []
    for v in row:
        acc += v
        out.append(acc)
    out[-1] = 1.0
    return out


def _argmax_lowest(values: Sequence[float]) -> int:
    best, best_v = 0, values[0]
    for i in range(1, len(values)):
        if values[i] > best_v:
            best, best_v = i, values[i]
    return best


def _check_rows_stochastic(p: np.ndarray, name: str, tol: float = 1e-12) -> None:
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise ValueError(f"every {name} row must sum to 1 (tolerance {tol})")


class McarEnv:
    """Gaussian-reward arms whose rewards go missing independently of everything.

    mu: length-n vector of means in [0, 1]; gamma: single observation
    probability shared by all arms; noise_std: reward noise (default 1).
    """

    kind = "mcar"

    def __init__(self, mu, gamma: float, noise_std: float = 1.0):
        mu = _readonly(np.atleast_1d(mu))
        if mu.ndim != 1 or mu.size < 1:
            raise ValueError("mu must be a nonempty vector")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mu entries must lie in [0, 1]")
        if not (0.0 < gamma <= 1.0):
            raise ValueError("gamma must lie in (0, 1]")
        if noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        self.mu = mu
        self.gamma = float(gamma)
        self.noise_std = float(noise_std)
        self.n = mu.size
        self._mu_list = [float(v) for v in mu]

    def true_mean(self, arm: ArmId) -> float:
        return self._mu_list[arm]

    def optimal_arm(self) -> ArmId:
        return _argmax_lowest(self._mu_list)

    def _draw(self, arm: ArmId, gen) -> Tuple[int, float, bool]:
        y = self._mu_list[arm]
        if self.noise_std:
            y += self.noise_std * gen.standard_normal()
        return 0, y, gen.random() < self.gamma

    def step(self, arm: ArmId, rng: Rng) -> ObservedRound:
        gen = as_generator(rng)
        m, y, o_y = self._draw(arm, gen)
        return ObservedRound(arm, m, True, y if o_y else None, o_y)


class MarEnv:
    """Mediated Gaussian arms; the reward mask depends on (arm, mediator) only.

    mu, gamma, p are all n x K: per-cell means in [0, 1], per-cell
    observation probabilities in (0, 1], and row-stochastic mediator
    frequencies with every entry positive.
    """

    kind = "mar"

    def __init__(self, mu, gamma, p, noise_std: float = 1.0):
        mu = _readonly(np.atleast_2d(mu))
        gamma = _readonly(np.atleast_2d(gamma))
        p = _readonly(np.atleast_2d(p))
        if mu.shape != gamma.shape or mu.shape != p.shape:
            raise ValueError("mu, gamma, p must share the same n x K shape")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mu entries must lie in [0, 1]")
        if np.any(gamma <= 0) or np.any(gamma > 1):
            raise ValueError("gamma entries must lie in (0, 1]")
        if np.any(p <= 0):
            raise ValueError("all mediator probabilities must be positive")
        _check_rows_stochastic(p, "p")
        if noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        self.mu, self.gamma, self.p = mu, gamma, p
        self.noise_std = float(noise_std)
        self.n, self.K = mu.shape
        self._p_cum = [_cumsums(row) for row in p.tolist()]
        self._mu_rows = mu.tolist()
        self._gamma_rows = gamma.tolist()
        self._means = [float(np.dot(p[a], mu[a])) for a in range(self.n)]

    def true_mean(self, arm: ArmId) -> float:
        return self._means[arm]

    def optimal_arm(self) -> ArmId:
        return _argmax_lowest(self._means)

    def _draw(self, arm: ArmId, gen) -> Tuple[int, float, bool]:
        m = bisect_right(self._p_cum[arm], gen.random())
        y = self._mu_rows[arm][m]
        if self.noise_std:
            y += self.noise_std * gen.standard_normal()
        return m, y, gen.random() < self._gamma_rows[arm][m]

    def step(self, arm: ArmId, rng: Rng) -> ObservedRound:
        gen = as_generator(rng)
        m, y, o_y = self._draw(arm, gen)
        return ObservedRound(arm, m, True, y if o_y else None, o_y)


class MnarEnv:
    """Categorical-reward arms whose reward mask depends on the reward itself.

    alphabet: the L reward values; p: n x K mediator frequencies;
    q: n x K x L reward distributions per (arm, mediator) cell;
    gamma_y: n x L observation probabilities indexed by the reward value.
    """

    kind = "mnar"

    def __init__(self, alphabet: OutcomeAlphabet, p, q, gamma_y):
        p = _readonly(np.atleast_2d(p))
        q = _readonly(np.asarray(q))
        gamma_y = _readonly(np.atleast_2d(gamma_y))
        if q.ndim != 3:
            raise ValueError("q must have shape n x K x L")
        n, K, L = q.shape
        if len(alphabet) != L:
            raise ValueError("alphabet length must match q's last dimension")
        if p.shape != (n, K):
            raise ValueError("p must have shape n x K")
        if gamma_y.shape != (n, L):
            raise ValueError("gamma_y must have shape n x L")
        if np.any(p <= 0):
            raise ValueError("all mediator probabilities must be positive")
        _check_rows_stochastic(p, "p")
        _check_rows_stochastic(q, "q")
        if np.any(q < 0):
            raise ValueError("q entries must be nonnegative")
        if np.any(gamma_y <= 0) or np.any(gamma_y > 1):
            raise ValueError("gamma_y entries must lie in (0, 1]")
        self.alphabet = alphabet
        self.p, self.q, self.gamma_y = p, q, gamma_y
        self.n, self.K, self.L = n, K, L
        self._values = list(alphabet.values)
        self._p_cum = [_cumsums(row) for row in p.tolist()]
        self._q_cum = [[_cumsums(cell) for cell in q[a].tolist()] for a in range(n)]
        self._gamma_rows = gamma_y.tolist()
        yv = np.array(alphabet.values)
        self._means = [float(np.dot(p[a], q[a] @ yv)) for a in range(n)]

    def true_mean(self, arm: ArmId) -> float:
        return self._means[arm]

    def optimal_arm(self) -> ArmId:
        return _argmax_lowest(self._means)

    def theta_matrix(self, arm: ArmId) -> np.ndarray:
        """Ground-truth K x L joint table P(m, y, reward observed | arm)."""
        return self.p[arm][:, None] * self.q[arm] * self.gamma_y[arm][None, :]

    def outcome_marginal(self, arm: ArmId) -> np.ndarray:
        """Ground-truth P(y | arm) over the alphabet."""
        return self.p[arm] @ self.q[arm]

    def _draw(self, arm: ArmId, gen) -> Tuple[int, float, bool]:
        m = bisect_right(self._p_cum[arm], gen.random())
        yi = bisect_right(self._q_cum[arm][m], gen.random())
        return m, self._values[yi], gen.random() < self._gamma_rows[arm][yi]

    def step(self, arm: ArmId, rng: Rng) -> ObservedRound:
        gen = as_generator(rng)
        m, y, o_y = self._draw(arm, gen)
        return ObservedRound(arm, m, True, y if o_y else None, o_y)


class MissingMedEnv:
    """Wraps a mediated environment and additionally masks the mediator.

    lam is either a length-n vector (mediator mask independent of the
    mediator value, base must be MarEnv) or an n x K matrix (mask depends
    on the mediator value, base must be MnarEnv).
    """

    def __init__(self, base: Union[MarEnv, MnarEnv], lam):
        lam = _readonly(np.asarray(lam))
        if lam.ndim == 1:
            if not isinstance(base, MarEnv):
                raise ValueError("vector lam requires a MarEnv base")
            if lam.shape != (base.n,):
                raise ValueError("lam must have length n")
            self.variant = "mar"
        elif lam.ndim == 2:
            if not isinstance(base, MnarEnv):
                raise ValueError("matrix lam requires an MnarEnv base")
            if lam.shape != (base.n, base.K):
                raise ValueError("lam must have shape n x K")
            self.variant = "mnar"
        else:
            raise ValueError("lam must be a vector or an n x K matrix")
        if np.any(lam <= 0) or np.any(lam > 1):
            raise ValueError("lam entries must lie in (0, 1]")
        self.base = base
        self.lam = lam
        self.n = base.n
        self.K = base.K
        self._lam_rows = lam.tolist()
        self.kind = "missing_med_" + self.variant

    def true_mean(self, arm: ArmId) -> float:
        return self.base.true_mean(arm)

    def optimal_arm(self) -> ArmId:
        return self.base.optimal_arm()

    def step(self, arm: ArmId, rng: Rng) -> ObservedRound:
        gen = as_generator(rng)
        m, y, o_y = self.base._draw(arm, gen)
        lam = self._lam_rows[arm] if self.variant == "mar" else self._lam_rows[arm][m]
        o_m = gen.random() < lam
        return ObservedRound(arm, m if o_m else None, o_m, y if o_y else None, o_y)


class BootstrapEnv:
    """Replays per-arm record pools with synthetic reward masking.

    pools: one list of (outcome, mediator) records per arm, outcomes in
    [0, 1]; synthetic_gamma: n x K observation probabilities applied to
    uniformly resampled records.
    """

    kind = "bootstrap"

    def __init__(self, pools: Sequence[Sequence[Tuple[float, int]]], synthetic_gamma):
        if not pools or any(len(pool) == 0 for pool in pools):
            raise ValueError("every arm pool must be nonempty")
        self.pools = [list(pool) for pool in pools]
        for pool in self.pools:
            for y, m in pool:
                if not (0.0 <= y <= 1.0):
                    raise ValueError("pool outcomes must lie in [0, 1]")
                if m < 0:
                    raise ValueError("pool mediators must be nonnegative ints")
        self.n = len(self.pools)
        self.K = 1 + max(m for pool in self.pools for _, m in pool)
        gamma = _readonly(np.atleast_2d(synthetic_gamma))
        if gamma.shape != (self.n, self.K):
            raise ValueError("synthetic_gamma must have shape n x K")
        if np.any(gamma <= 0) or np.any(gamma > 1):
            raise ValueError("synthetic_gamma entries must lie in (0, 1]")
        self.synthetic_gamma = gamma
        self._gamma_rows = gamma.tolist()
        self._means = [sum(y for y, _ in pool) / len(pool) for pool in self.pools]

    def true_mean(self, arm: ArmId) -> float:
        return self._means[arm]

    def optimal_arm(self) -> ArmId:
        return _argmax_lowest(self._means)

    def step(self, arm: ArmId, rng: Rng) -> ObservedRound:
        gen = as_generator(rng)
        pool = self.pools[arm]
        y, m = pool[int(gen.integers(len(pool)))]
        o_y = gen.random() < self._gamma_rows[arm][m]
        return ObservedRound(arm, m, True, y if o_y else None, o_y)


# ---------------------------------------------------------------------------
# Samplers for the standard experiment suites.


def sample_mcar_config(n: int, rng: Rng) -> McarEnv:
    """Means uniform on [0, 1], one shared observation probability on [0.5, 1]."""
    gen = as_generator(rng)
    mu = gen.uniform(0.0, 1.0, n)
    gamma = float(gen.uniform(0.5, 1.0))
    return McarEnv(mu, gamma)


def sample_mar_config(n: int, K: int, peaked: bool, rng: Rng) -> MarEnv:
    """Cell means uniform on [0, 0.4] with a +0.6 bonus on arm 0 (making it
    optimal), observation probabilities uniform on [0.8, 1], and mediator
    rows drawn from a flat Dirichlet. With peaked=True each arm's row is
    instead drawn with concentration 5 on that arm's hardest mediator (the
    one with the smallest observation probability), which concentrates
    traffic where rewards are most often missing."""
    gen = as_generator(rng)
    mu = gen.uniform(0.0, 0.4, (n, K))
    mu[0] += 0.6
    gamma = gen.uniform(0.8, 1.0, (n, K))
    p = np.empty((n, K))
    for a in range(n):
        conc = np.ones(K)
        if peaked:
            conc[int(np.argmin(gamma[a]))] = 5.0
        p[a] = gen.dirichlet(conc)
    return MarEnv(mu, gamma, p)


def sample_mnar_config(n: int, K: int, L: int, rng: Rng) -> MnarEnv:
    """Evenly spaced normalized alphabet, flat-Dirichlet mediator rows and
    reward cells, observation probabilities uniform on [0.5, 1]. Arm 0's
    reward cells get a concentration bonus of 5 on the largest alphabet
    value so that it is the designated high-mean arm."""
    gen = as_generator(rng)
    raw = np.linspace(-1.0, 1.0, L) if L > 1 else np.array([1.0])
    alphabet = OutcomeAlphabet(tuple(raw)).normalized()
    p = np.empty((n, K))
    q = np.empty((n, K, L))
    for a in range(n):
        p[a] = gen.dirichlet(np.ones(K))
        conc = np.ones(L)
        if a == 0:
            conc[L - 1] += 5.0
        for m in range(K):
            q[a, m] = gen.dirichlet(conc)
    gamma_y = gen.uniform(0.5, 1.0, (n, L))
    return MnarEnv(alphabet, p, q, gamma_y)


def build_ignoremed_instance(K: int, epsilon: float, noise_std: float = 0.0) -> MarEnv:
    """Two arms that look identical to any mediator-blind observer.

    Both arms reward 1 on mediator 0 and 0 elsewhere. Arm 0 visits mediator
    0 with probability 1 - epsilon; arm 1 sends that mass to mediator 1
    instead. Observation probabilities are inverse to visit frequencies,
    which makes the observed-reward law and the observation rate exactly
    equal across arms even though the true means differ by
    1 - epsilon - epsilon/(K-1).
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie strictly between 0 and 1")
    rest = epsilon / (K - 1)
    p = np.full((2, K), rest)
    p[0, 0] = 1.0 - epsilon
    p[1, 1] = 1.0 - epsilon
    p /= p.sum(axis=1, keepdims=True)
    mu = np.zeros((2, K))
    mu[:, 0] = 1.0
    inv = 1.0 / p
    gamma = inv / inv.sum(axis=1, keepdims=True)
    return MarEnv(mu, gamma, p, noise_std=noise_std)


def build_minimax_family(
    kind: str,
    n: int,
    delta: float,
    *,
    gamma: float = 0.5,
    p=None,
    gamma_mat=None,
    noise_std: float = 1.0,
) -> List[Union[McarEnv, MarEnv]]:
    """Hard instance family: instance 0 has all-zero means; instance k
    (k = 1..n) raises exactly one arm's mean to delta. Used as worst-case
    fixtures for lower-bound style comparisons."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    kind = kind.lower()
    if kind == "mcar":
        if delta > 1:
            raise ValueError("delta must keep means inside [0, 1]")
        family = [McarEnv(np.zeros(n), gamma, noise_std)]
        for k in range(1, n + 1):
            mu = np.zeros(n)
            mu[k - 1] = delta
            family.append(McarEnv(mu, gamma, noise_std))
        return family
    if kind == "mar":
        if p is None or gamma_mat is None:
            raise ValueError("the mar family needs p and gamma_mat")
        p = np.atleast_2d(np.asarray(p, dtype=float))
        gamma_mat = np.atleast_2d(np.asarray(gamma_mat, dtype=float))
        if p.shape != gamma_mat.shape or p.shape[0] != n:
            raise ValueError("p and gamma_mat must both have shape n x K")
        P = (p / gamma_mat).sum(axis=1)
        family = [MarEnv(np.zeros_like(p), gamma_mat, p, noise_std)]
        for k in range(1, n + 1):
            mu = np.zeros_like(p)
            mu[k - 1] = delta / (P[k - 1] * gamma_mat[k - 1])
            if np.any(mu > 1.0):
                raise ValueError("delta too large: cell means leave [0, 1]")
            family.append(MarEnv(mu, gamma_mat, p, noise_std))
        return family
    raise ValueError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# Dataset ingestion.

_REQUIRED_COLUMNS = ("Z1", "X", "D")


def ingest_pbc(
    csv_path,
    synthetic_gamma=None,
    rng: Optional[Rng] = None,
) -> BootstrapEnv:
    """Build a replay environment from a trial CSV.

    Expects a header with columns Z1 (treatment group, 1-based, becomes the
    arm), X (nonnegative outcome, normalized by the pool-wide max) and D
    (mediator value); extra columns are ignored and header matching is
    case-insensitive. synthetic_gamma may be an explicit n x K matrix;
    when absent, entries are drawn uniformly from [0.8, 1].
    """
    try:
        fh = open(csv_path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise IngestError(f"cannot read {csv_path}: {e}") from e
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty file: no header row") from None
        lookup = {name.strip().lower(): i for i, name in enumerate(header)}
        cols = {}
        for name in _REQUIRED_COLUMNS:
            if name.lower() not in lookup:
                raise IngestError(f"missing required column {name}")
            cols[name] = lookup[name.lower()]
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not cell.strip() for cell in rec):
                continue
            parsed = {}
            for name in _REQUIRED_COLUMNS:
                idx = cols[name]
                if idx >= len(rec):
                    raise IngestError(f"row {lineno}, column {name}: missing value")
                cell = rec[idx].strip()
                try:
                    parsed[name] = float(cell)
                except ValueError:
                    raise IngestError(
                        f"row {lineno}, column {name}: could not parse {cell!r}"
                    ) from None
            z1, x, d = parsed["Z1"], parsed["X"], parsed["D"]
            if z1 != int(z1) or int(z1) < 1:
                raise IngestError(f"row {lineno}, column Z1: expected a positive integer")
            if x < 0:
                raise IngestError(f"row {lineno}, column X: outcomes must be nonnegative")
            if d != int(d) or int(d) < 0:
                raise IngestError(f"row {lineno}, column D: expected a nonnegative integer")
            rows.append((int(z1) - 1, x, int(d)))
    if not rows:
        raise IngestError("no data rows")
    n = 1 + max(arm for arm, _, _ in rows)
    x_max = max(x for _, x, _ in rows)
    if x_max == 0:
        raise IngestError("column X is identically zero; cannot normalize")
    pools: List[List[Tuple[float, int]]] = [[] for _ in range(n)]
    for arm, x, d in rows:
        pools[arm].append((x / x_max, d))
    for arm, pool in enumerate(pools):
        if not pool:
            raise IngestError(f"arm {arm} has an empty pool")
    K = 1 + max(m for pool in pools for _, m in pool)
    if synthetic_gamma is None:
        gen = as_generator(rng if rng is not None else RngStream(0))
        synthetic_gamma = gen.uniform(0.8, 1.0, (n, K))
    elif np.ndim(synthetic_gamma) == 0:
        synthetic_gamma = np.full((n, K), float(synthetic_gamma))
    return BootstrapEnv(pools, synthetic_gamma)
