"""Per-arm mean estimators that correct for missing observations.

The estimators consume either a SufficientStats tally (the policies' view)
or a raw list of rounds. All of them return an EstimatorFit carrying the
point estimate and a confidence-radius width; a not_ready flag marks fits
whose cells are still empty, which callers treat as infinite width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import ObservedRound, OutcomeAlphabet


class PositivityError(ValueError):
    """An observation probability of zero makes reweighting undefined."""


class IllConditionedError(ValueError):
    """The solve's probability table is numerically rank-deficient."""

    def __init__(self, kappa: float):
        super().__init__(f"table is numerically rank-deficient (kappa={kappa:g})")
        self.kappa = kappa


class SufficientStats:
    """Running per-arm tallies, enough for every estimator in this module.

    t_a: pulls; t_a_o: pulls with the reward observed; sum_y_o: sum of all
    observed rewards; s[m]: mediator-m observations; t_mo[m]: mediator-m
    rounds with the reward observed; sum_y[m]: their reward sum;
    joint[m][y]: finite-alphabet counts of (m, y, reward observed);
    b_m[m]: mediator observed but reward missing; b_y[y]: reward observed
    but mediator missing; t_a_om / t_a_om_oy: rounds with the mediator
    observed / with both observed. Counters only ever increase.
    """

    __slots__ = (
        "n_mediators",
        "n_outcomes",
        "t_a",
        "t_a_o",
        "sum_y_o",
        "s",
        "t_mo",
        "sum_y",
        "joint",
        "b_m",
        "b_y",
        "t_a_om",
        "t_a_om_oy",
    )

    def __init__(self, n_mediators: int, n_outcomes: int = 0):
        if n_mediators < 1:
            raise ValueError("need at least one mediator cell")
        self.n_mediators = n_mediators
        self.n_outcomes = n_outcomes
        self.t_a = 0
        self.t_a_o = 0
        self.sum_y_o = 0.0
        self.s = [0] * n_mediators
        self.t_mo = [0] * n_mediators
        self.sum_y = [0.0] * n_mediators
        self.b_m = [0] * n_mediators
        self.joint = [[0] * n_outcomes for _ in range(n_mediators)]
        self.b_y = [0] * n_outcomes
        self.t_a_om = 0
        self.t_a_om_oy = 0

    @property
    def t_m_oy(self) -> List[int]:
        # alias: mediator-m rounds with the reward observed
        return self.t_mo

    def update(self, rnd: ObservedRound, y_index: Optional[int] = None) -> None:
        self.t_a += 1
        m = rnd.m
        if rnd.o_m:
            self.t_a_om += 1
            self.s[m] += 1
        if rnd.o_y:
            y = rnd.y
            self.t_a_o += 1
            self.sum_y_o += y
            if rnd.o_m:
                self.t_a_om_oy += 1
                self.t_mo[m] += 1
                self.sum_y[m] += y
                if y_index is not None:
                    self.joint[m][y_index] += 1
            elif y_index is not None:
                self.b_y[y_index] += 1
        elif rnd.o_m:
            self.b_m[m] += 1


@dataclass
class EstimatorFit:
    """Point estimate plus confidence radius and optional by-products."""

    mu_hat: float
    width: float
    gamma_hat: Optional[float] = None
    gamma_y_hat: Optional[Tuple[float, ...]] = None
    p_hat: Optional[Tuple[float, ...]] = None
    kappa_hat: Optional[float] = None
    not_ready: bool = False
    clip_count: int = 0

    def __post_init__(self):
        if not self.width >= 0.0:
            raise ValueError("width must be nonnegative")


def _check_alpha_T(alpha: float, T: int) -> None:
    if not alpha > 1.0:
        raise ValueError("alpha must exceed 1")
    if T < 1:
        raise ValueError("T must be at least 1")


def mcar_mean(stats: SufficientStats) -> EstimatorFit:
    """Plain mean of the observed rewards; flagged not-ready when there are
    none (the caller's index then treats the arm as unexplored)."""
    if stats.t_a_o == 0:
        return EstimatorFit(0.0, 0.0, not_ready=True)
    return EstimatorFit(stats.sum_y_o / stats.t_a_o, 0.0)


def mar_plugin(
    stats: SufficientStats,
    alpha: float,
    T: int,
    p: Optional[Sequence[float]] = None,
    inflation: Optional[float] = None,
) -> EstimatorFit:
    """Mediator-weighted mean: per-mediator observed averages combined with
    either the known mediator distribution p or its empirical frequencies.

    The width is inflation * sqrt((alpha log T / 2) * sum_m p_m^2 / t_mo[m]);
    the default inflation is 1 with known p and 8 without (the constant the
    concentration argument for the estimated frequencies asks for).
    """
    _check_alpha_T(alpha, T)
    K = stats.n_mediators
    if p is not None:
        p_vec = [float(v) for v in p]
        if len(p_vec) != K:
            raise ValueError("p must have one entry per mediator")
        if any(v < 0 for v in p_vec) or abs(sum(p_vec) - 1.0) > 1e-9:
            raise ValueError("p must be a probability vector")
        if inflation is None:
            inflation = 1.0
    else:
        if stats.t_a == 0:
            return EstimatorFit(0.0, math.inf, not_ready=True)
        p_vec = [sm / stats.t_a for sm in stats.s]
        if inflation is None:
            inflation = 8.0
    mu = 0.0
    width_sq = 0.0
    not_ready = False
    for m in range(K):
        pm = p_vec[m]
        if pm == 0.0:
            continue
        if stats.t_mo[m] == 0:
            not_ready = True
            continue
        mu += pm * (stats.sum_y[m] / stats.t_mo[m])
        width_sq += pm * pm / stats.t_mo[m]
    if not_ready:
        return EstimatorFit(mu, math.inf, p_hat=tuple(p_vec), not_ready=True)
    width = inflation * math.sqrt((alpha * math.log(T) / 2.0) * width_sq)
    return EstimatorFit(mu, width, p_hat=tuple(p_vec))


def ht_estimate(rounds: Sequence[ObservedRound], gamma: Sequence[float]) -> EstimatorFit:
    """Inverse-probability reweighting of the observed rewards by the
    per-mediator observation probabilities; averages over all pulls."""
    gamma = [float(g) for g in gamma]
    for m, g in enumerate(gamma):
        if g <= 0.0:
            raise PositivityError(f"gamma[{m}] must be positive")
    T_a = len(rounds)
    if T_a == 0:
        return EstimatorFit(0.0, 0.0, not_ready=True)
    total = 0.0
    for rnd in rounds:
        if rnd.o_y and rnd.o_m:
            total += rnd.y / gamma[rnd.m]
    return EstimatorFit(total / T_a, 0.0)


def aipw_estimate(
    rounds: Sequence[ObservedRound],
    gamma_model: Sequence[float],
    outcome_model: Sequence[float],
) -> EstimatorFit:
    """Augmented reweighting: combines a missingness model and an outcome
    model; exact at the population whenever either model is correct."""
    gamma_model = [float(g) for g in gamma_model]
    outcome_model = [float(v) for v in outcome_model]
    for m, g in enumerate(gamma_model):
        if g <= 0.0:
            raise PositivityError(f"gamma_model[{m}] must be positive")
    if len(outcome_model) != len(gamma_model):
        raise ValueError("models must have one entry per mediator")
    T_a = len(rounds)
    if T_a == 0:
        return EstimatorFit(0.0, 0.0, not_ready=True)
    total = 0.0
    for rnd in rounds:
        if not rnd.o_m:
            continue
        g = gamma_model[rnd.m]
        mu_t = outcome_model[rnd.m]
        if rnd.o_y:
            total += (rnd.y - (1.0 - g) * mu_t) / g
        else:
            total += mu_t
    return EstimatorFit(total / T_a, 0.0)


_RANK_RTOL = 1e-12


def pinv_solve_infnorm(theta: np.ndarray, b: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Least-squares minimum-norm solve x = pinv(theta) @ b, returning the
    max-row-sum condition number kappa = ||theta||_inf * ||pinv(theta)||_inf.

    Raises IllConditionedError (carrying kappa) when the smallest singular
    value falls below 1e-12 times the largest.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2:
        raise ValueError("theta must be a matrix")
    b = np.asarray(b, dtype=float)
    if b.shape != (theta.shape[0],):
        raise ValueError("b must have one entry per theta row")
    if not np.any(theta):
        raise IllConditionedError(math.inf)
    u, sing, vt = np.linalg.svd(theta, full_matrices=False)
    if sing[-1] < _RANK_RTOL * sing[0]:
        if sing[-1] == 0.0:
            raise IllConditionedError(math.inf)
        pinv = (vt.T / sing) @ u.T
        raise IllConditionedError(
            float(np.abs(theta).sum(axis=1).max() * np.abs(pinv).sum(axis=1).max())
        )
    pinv = (vt.T / sing) @ u.T
    kappa = float(np.abs(theta).sum(axis=1).max() * np.abs(pinv).sum(axis=1).max())
    x = pinv @ b
    return x, kappa


def _norm_inf(mat: np.ndarray) -> float:
    return float(np.abs(mat).sum(axis=1).max())


def mnar_estimate(
    stats: SufficientStats,
    C_a: float,
    alpha: float,
    T: int,
    alphabet: OutcomeAlphabet,
) -> EstimatorFit:
    """Reward-dependent-missingness estimator over a finite alphabet.

    Solves the linear system relating the observed (m, y) table to the
    missing-reward margins; the solution (after +1) estimates the inverse
    observation probability of each reward value, which both debiases the
    mean and yields gamma_hat. C_a is the caller's bound on the table's
    condition number, used by the contracted width term.
    """
    _check_alpha_T(alpha, T)
    if not alphabet.is_normalized:
        raise ValueError("alphabet must be normalized (sum |y| = 1)")
    K, L = stats.n_mediators, stats.n_outcomes
    if L != len(alphabet):
        raise ValueError("stats alphabet size must match the alphabet")
    if stats.t_a == 0 or stats.t_a_o == 0:
        return EstimatorFit(0.0, math.inf, not_ready=True)
    t_a = stats.t_a
    theta_hat = np.asarray(stats.joint, dtype=float) / t_a
    b_hat = np.asarray(stats.b_m, dtype=float) / t_a
    x, kappa = pinv_solve_infnorm(theta_hat, b_hat)
    clip_count = int(np.sum(x < 0.0))
    if clip_count:
        x = np.clip(x, 0.0, None)
    inv_gamma = x + 1.0
    top = float(inv_gamma.max())
    if top <= 0.0:
        return EstimatorFit(0.0, math.inf, kappa_hat=kappa, not_ready=True, clip_count=clip_count)
    gamma_hat = 1.0 / top
    gamma_y = tuple(float(1.0 / v) for v in inv_gamma)
    y_marginal = theta_hat.sum(axis=0)
    mu = float(np.dot(np.array(alphabet.values), inv_gamma * y_marginal))
    log_T = math.log(T)
    width = 8.0 * (L * C_a / (_norm_inf(theta_hat) * gamma_hat)) * math.sqrt(alpha * log_T / t_a)
    width += (K / gamma_hat) * math.sqrt(alpha * log_T / stats.t_a_o)
    return EstimatorFit(
        mu, width, gamma_hat=gamma_hat, gamma_y_hat=gamma_y,
        kappa_hat=kappa, clip_count=clip_count,
    )


def missing_med_mar_estimate(
    stats: SufficientStats,
    alpha: float,
    T: int,
    inflation: Optional[float] = None,
) -> EstimatorFit:
    """Mediator-weighted mean restricted to rounds whose mediator was seen;
    the mediator frequencies are estimated among those rounds only."""
    _check_alpha_T(alpha, T)
    if stats.t_a_om == 0:
        return EstimatorFit(0.0, math.inf, not_ready=True)
    if inflation is None:
        inflation = 8.0
    p_vec = [sm / stats.t_a_om for sm in stats.s]
    mu = 0.0
    width_sq = 0.0
    not_ready = False
    for m in range(stats.n_mediators):
        pm = p_vec[m]
        if pm == 0.0:
            continue
        if stats.t_mo[m] == 0:
            not_ready = True
            continue
        mu += pm * (stats.sum_y[m] / stats.t_mo[m])
        width_sq += pm * pm / stats.t_mo[m]
    if not_ready:
        return EstimatorFit(mu, math.inf, p_hat=tuple(p_vec), not_ready=True)
    width = inflation * math.sqrt((alpha * math.log(T) / 2.0) * width_sq)
    return EstimatorFit(mu, width, p_hat=tuple(p_vec))


def missing_med_mnar_estimate(
    stats: SufficientStats,
    C_a: float,
    alpha: float,
    T: int,
) -> EstimatorFit:
    """Mediator-dependent mediator-missingness estimator.

    Solves the transposed system relating the fully observed (m, y) table
    to the mediator-missing margins; 1 + x[m] estimates the inverse
    mediator-observation probability, which reweights the observed
    mediator frequencies before the usual per-mediator averaging.
    """
    _check_alpha_T(alpha, T)
    K = stats.n_mediators
    if stats.t_a == 0:
        return EstimatorFit(0.0, math.inf, not_ready=True)
    t_a = stats.t_a
    theta_hat = np.asarray(stats.joint, dtype=float) / t_a
    b_hat = np.asarray(stats.b_y, dtype=float) / t_a
    x, kappa = pinv_solve_infnorm(theta_hat.T, b_hat)
    clip_count = int(np.sum(x < 0.0))
    if clip_count:
        x = np.clip(x, 0.0, None)
    inv_lam = 1.0 + x
    lam_hat = 1.0 / float(inv_lam.max())
    p_hat = [float(inv_lam[m]) * stats.s[m] / t_a for m in range(K)]
    mu = 0.0
    tail_sq = 0.0
    not_ready = False
    for m in range(K):
        pm = p_hat[m]
        if pm == 0.0:
            continue
        if stats.t_m_oy[m] == 0:
            not_ready = True
            continue
        mu += pm * (stats.sum_y[m] / stats.t_m_oy[m])
        tail_sq += 4.0 * pm * pm / stats.t_m_oy[m]
    if not_ready:
        return EstimatorFit(
            mu, math.inf, gamma_hat=lam_hat, p_hat=tuple(p_hat),
            kappa_hat=kappa, not_ready=True, clip_count=clip_count,
        )
    log_T = math.log(T)
    head = 2.0 * math.sqrt(alpha * log_T / (2.0 * t_a)) * (
        8.0 * (C_a / _norm_inf(theta_hat)) * (K / lam_hat) + 1.0 / lam_hat
    )
    width = head + math.sqrt((alpha * log_T / 2.0) * tail_sq)
    return EstimatorFit(
        mu, width, gamma_hat=lam_hat, p_hat=tuple(p_hat),
        kappa_hat=kappa, clip_count=clip_count,
    )
