"""Stateful UCB bandit policies.

Seven kinds share one skeleton: an optional forced round-robin phase of
ceil((ln T)^2) pulls per arm, then argmax of a per-arm optimistic index.
Arms whose index is still undefined (empty cells) rank above every
finite-index arm; all ties break toward the lowest arm id. Each policy
owns one SufficientStats per arm and refreshes only the pulled arm's
index after an update, which keeps the hot loop cheap.
"""

from __future__ import annotations

import math
from typing import List, Optional, Sequence

import numpy as np

from .core import ObservedRound, OutcomeAlphabet
from .estimators import (
    IllConditionedError,
    SufficientStats,
    mar_plugin,
    missing_med_mar_estimate,
    missing_med_mnar_estimate,
    mnar_estimate,
)

_INF = math.inf

POLICY_KINDS = (
    "McarUcb",
    "MarUcbKnownP",
    "MarUcbUnknownP",
    "MnarUcb",
    "MissingMedMarUcb",
    "MissingMedMnarUcb",
    "NaiveUcb",
)


def argmax_lowest(values: Sequence[float]) -> int:
    """Index of the largest value; the earliest wins ties (inf included)."""
    best, best_v = 0, values[0]
    for i in range(1, len(values)):
        if values[i] > best_v:
            best, best_v = i, values[i]
    return best


class UcbPolicy:
    """Common skeleton; subclasses define the index and the stats gating."""

    kind = "UcbPolicy"
    forced_exploration = False

    def __init__(self, n: int, alpha: float, T: int, K: int = 1, L: int = 0):
        if n < 1:
            raise ValueError("need at least one arm")
        if not alpha > 1.0:
            raise ValueError("alpha must exceed 1")
        if T < 1:
            raise ValueError("T must be at least 1")
        self.n = n
        self.alpha = float(alpha)
        self.T = int(T)
        self.K = K
        self.L = L
        self.t = 0
        self.stats = [SufficientStats(K, L) for _ in range(n)]
        self._log_T = math.log(T)
        self.explore_rounds_per_arm = (
            max(1, math.ceil(self._log_T**2)) if self.forced_exploration else 0
        )
        self._phase_end = self.explore_rounds_per_arm * n
        self._index = [_INF] * n
        self._pending: Optional[int] = None

    # -- selection ---------------------------------------------------------

    def select_arm(self) -> int:
        if self._pending is not None:
            return self._pending
        if self.t >= self.T:
            raise ValueError("horizon exhausted: no rounds left to play")
        if self.t < self._phase_end:
            arm = self.t % self.n
        else:
            arm = argmax_lowest(self._index)
        self._pending = arm
        return arm

    def current_indices(self) -> List[float]:
        return list(self._index)

    # -- updates -----------------------------------------------------------

    def update(self, rnd: ObservedRound) -> None:
        if self._pending is not None and rnd.arm != self._pending:
            raise ValueError(
                f"round is for arm {rnd.arm} but arm {self._pending} was selected"
            )
        if not (0 <= rnd.arm < self.n):
            raise ValueError("round arm out of range")
        self._ingest(rnd)
        self.t += 1
        self._pending = None
        self._refresh(rnd.arm)

    def _ingest(self, rnd: ObservedRound) -> None:
        self.stats[rnd.arm].update(rnd, self._y_index(rnd))

    def _y_index(self, rnd: ObservedRound) -> Optional[int]:
        return None

    def _refresh(self, arm: int) -> None:
        raise NotImplementedError


class McarUcb(UcbPolicy):
    """Observed-mean UCB; the width uses the observed-reward count only."""

    kind = "McarUcb"

    def _refresh(self, arm: int) -> None:
        st = self.stats[arm]
        if st.t_a_o == 0:
            self._index[arm] = _INF
        else:
            self._index[arm] = st.sum_y_o / st.t_a_o + math.sqrt(
                self.alpha * self._log_T / (2.0 * st.t_a_o)
            )


class NaiveUcb(McarUcb):
    """Same index as McarUcb, run regardless of the true missingness
    mechanism: ignores the mediator and simply drops missing rewards."""

    kind = "NaiveUcb"


class MarUcbKnownP(UcbPolicy):
    """Mediator-weighted UCB with the true mediator distribution supplied."""

    kind = "MarUcbKnownP"
    forced_exploration = True

    def __init__(self, n, alpha, T, K, known_p, width_inflation: float = 1.0):
        super().__init__(n, alpha, T, K)
        known_p = np.asarray(known_p, dtype=float)
        if known_p.shape != (n, K):
            raise ValueError("known_p must have shape n x K")
        self.known_p = [tuple(row) for row in known_p.tolist()]
        self.width_inflation = float(width_inflation)

    def _refresh(self, arm: int) -> None:
        fit = mar_plugin(
            self.stats[arm],
            self.alpha,
            self.T,
            p=self.known_p[arm],
            inflation=self.width_inflation,
        )
        self._index[arm] = _INF if fit.not_ready else fit.mu_hat + fit.width


class MarUcbUnknownP(UcbPolicy):
    """Mediator-weighted UCB with empirical mediator frequencies.

    The default width carries the x8 constant the estimated-frequency
    analysis prescribes; width_inflation=1.0 gives the tighter practical
    calibration at the cost of the formal guarantee.
    """

    kind = "MarUcbUnknownP"
    forced_exploration = True

    def __init__(self, n, alpha, T, K, width_inflation: float = 8.0):
        super().__init__(n, alpha, T, K)
        self.width_inflation = float(width_inflation)

    def _refresh(self, arm: int) -> None:
        fit = mar_plugin(
            self.stats[arm],
            self.alpha,
            self.T,
            inflation=self.width_inflation,
        )
        self._index[arm] = _INF if fit.not_ready else fit.mu_hat + fit.width


class MnarUcb(UcbPolicy):
    """Odds-ratio-corrected UCB for reward-dependent missingness.

    C is the per-arm condition-number bound consumed by the default
    "contracted" width. width_mode="practical" swaps in
    (alphabet spread / gamma_hat) * the usual observed-count radius,
    which keeps exploration at a usable scale on short horizons.
    """

    kind = "MnarUcb"
    forced_exploration = True

    def __init__(self, n, alpha, T, K, alphabet: OutcomeAlphabet, C, width_mode: str = "contracted"):
        super().__init__(n, alpha, T, K, len(alphabet))
        if width_mode not in ("practical", "contracted"):
            raise ValueError("width_mode must be 'practical' or 'contracted'")
        C = [float(c) for c in np.atleast_1d(np.asarray(C, dtype=float))]
        if len(C) != n:
            raise ValueError("C must have one entry per arm")
        self.alphabet = alphabet
        self.C = C
        self.width_mode = width_mode
        self._spread = alphabet.values[-1] - alphabet.values[0]

    def _y_index(self, rnd: ObservedRound) -> Optional[int]:
        return self.alphabet.index_of(rnd.y) if rnd.o_y else None

    def _refresh(self, arm: int) -> None:
        st = self.stats[arm]
        try:
            fit = mnar_estimate(st, self.C[arm], self.alpha, self.T, self.alphabet)
        except IllConditionedError:
            self._index[arm] = _INF
            return
        if fit.not_ready:
            self._index[arm] = _INF
            return
        if self.width_mode == "contracted":
            width = fit.width
        else:
            width = (self._spread / fit.gamma_hat) * math.sqrt(
                self.alpha * self._log_T / (2.0 * st.t_a_o)
            )
        self._index[arm] = fit.mu_hat + width


class MissingMedMarUcb(UcbPolicy):
    """Mediator-weighted UCB that discards rounds whose mediator is hidden:
    such a round advances time but updates no counter."""

    kind = "MissingMedMarUcb"
    forced_exploration = True

    def __init__(self, n, alpha, T, K, width_inflation: float = 8.0):
        super().__init__(n, alpha, T, K)
        self.width_inflation = float(width_inflation)

    def _ingest(self, rnd: ObservedRound) -> None:
        if not rnd.o_m:
            return
        self.stats[rnd.arm].update(rnd)

    def _refresh(self, arm: int) -> None:
        fit = missing_med_mar_estimate(
            self.stats[arm], self.alpha, self.T, inflation=self.width_inflation
        )
        self._index[arm] = _INF if fit.not_ready else fit.mu_hat + fit.width


class MissingMedMnarUcb(UcbPolicy):
    """Odds-ratio correction for mediator-dependent mediator missingness."""

    kind = "MissingMedMnarUcb"
    forced_exploration = True

    def __init__(self, n, alpha, T, K, alphabet: OutcomeAlphabet, C, width_mode: str = "contracted"):
        super().__init__(n, alpha, T, K, len(alphabet))
        if width_mode not in ("practical", "contracted"):
            raise ValueError("width_mode must be 'practical' or 'contracted'")
        C = [float(c) for c in np.atleast_1d(np.asarray(C, dtype=float))]
        if len(C) != n:
            raise ValueError("C must have one entry per arm")
        self.alphabet = alphabet
        self.C = C
        self.width_mode = width_mode
        self._spread = alphabet.values[-1] - alphabet.values[0]

    def _y_index(self, rnd: ObservedRound) -> Optional[int]:
        return self.alphabet.index_of(rnd.y) if rnd.o_y else None

    def _refresh(self, arm: int) -> None:
        st = self.stats[arm]
        try:
            fit = missing_med_mnar_estimate(st, self.C[arm], self.alpha, self.T)
        except IllConditionedError:
            self._index[arm] = _INF
            return
        if fit.not_ready:
            self._index[arm] = _INF
            return
        if self.width_mode == "contracted":
            width = fit.width
        else:
            if st.t_a_om_oy == 0:
                self._index[arm] = _INF
                return
            width = (self._spread / fit.gamma_hat) * math.sqrt(
                self.alpha * self._log_T / (2.0 * st.t_a_om_oy)
            )
        self._index[arm] = fit.mu_hat + width


def make_policy(
    kind: str,
    *,
    n: int,
    alpha: float,
    T: int,
    K: int = 1,
    known_p=None,
    alphabet: Optional[OutcomeAlphabet] = None,
    C=None,
    width_inflation: Optional[float] = None,
    width_mode: Optional[str] = None,
) -> UcbPolicy:
    """Construct a policy by kind name, checking kind-specific requirements.

    width_inflation / width_mode left as None fall through to each kind's
    own default (the analysis constants)."""
    if kind in ("McarUcb", "NaiveUcb"):
        cls = McarUcb if kind == "McarUcb" else NaiveUcb
        return cls(n, alpha, T, K)
    if kind == "MarUcbKnownP":
        if known_p is None:
            raise ValueError("MarUcbKnownP needs known_p")
        if width_inflation is None:
            return MarUcbKnownP(n, alpha, T, K, known_p)
        return MarUcbKnownP(n, alpha, T, K, known_p, width_inflation)
    if kind in ("MarUcbUnknownP", "MissingMedMarUcb"):
        cls = MarUcbUnknownP if kind == "MarUcbUnknownP" else MissingMedMarUcb
        if width_inflation is None:
            return cls(n, alpha, T, K)
        return cls(n, alpha, T, K, width_inflation)
    if kind in ("MnarUcb", "MissingMedMnarUcb"):
        if alphabet is None or C is None:
            raise ValueError(f"{kind} needs an alphabet and per-arm C")
        cls = MnarUcb if kind == "MnarUcb" else MissingMedMnarUcb
        if width_mode is None:
            return cls(n, alpha, T, K, alphabet, C)
        return cls(n, alpha, T, K, alphabet, C, width_mode)
    raise ValueError(f"unknown policy kind {kind!r}")
