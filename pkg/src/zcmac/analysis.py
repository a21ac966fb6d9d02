r"""Convergence analysis of the ZC reservation process.

After every cycle of ``N`` virtual slots the number of stations holding a
reservation, :math:`z_n`, moves according to a monotone Markov chain: the
``M - m`` stations still contending pick uniformly among the ``N - m`` free
slots and every station that lands alone in its slot keeps it.

The occupancy probabilities are evaluated with exact integer arithmetic: the
inclusion-exclusion sum alternates over terms that reach ~1e9 for ``N = 128``
so double precision would lose most of its digits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .timing import TimingParameters

DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_CYCLES = 10_000


class NoConvergenceError(RuntimeError):
    """Tail mass of the absorption time did not drop below epsilon within the cycle cap."""


@lru_cache(maxsize=4096)
def _singleton_counts(n_slots: int, n_stations: int) -> tuple[int, ...]:
    """Number of the ``n_slots ** n_stations`` assignments with exactly k lone stations, per k."""
    s, n = n_stations, n_slots
    # a[j] = C(s, j) * n!/(n-j)! * (n-j)^(s-j); zero once j > n
    a = []
    falling = 1
    for j in range(s + 1):
        if j:
            falling *= n - j + 1
        a.append(comb(s, j) * falling * (n - j) ** (s - j) if falling else 0)
    # counts[k] = sum_j (-1)^(j-k) C(j, k) a[j] are the coefficients of
    # sum_j a[j] (x - 1)^j; Horner in (x - 1) needs only additions.
    coeffs = [a[s]]
    for j in range(s - 1, -1, -1):
        shifted = [-coeffs[0] + a[j]]
        shifted.extend(coeffs[i - 1] - coeffs[i] for i in range(1, len(coeffs)))
        shifted.append(coeffs[-1])
        coeffs = shifted
    return tuple(coeffs)


def reservation_probability(N: int, M: int, k: int, exact: bool = False) -> float | Fraction:
    """Probability that exactly ``k`` of ``M`` uniform slot pickers are alone among ``N`` slots.

    Parameters
    ----------
    N : int
        Number of slots, ``N >= 1``.
    M : int
        Number of stations picking, ``M >= 0``.
    k : int
        Number of stations that pick a slot nobody else picked, ``0 <= k <= M``.
    exact : bool
        Return a :class:`fractions.Fraction` instead of a correctly rounded float.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if not 0 <= k <= M:
        raise ValueError(f"k must lie in [0, M={M}], got {k}")
    num = _singleton_counts(N, M)[k]
    den = N ** M
    if exact:
        return Fraction(num, den)
    # int / int true division rounds correctly
    return num / den


def reservation_pmf(N: int, M: int) -> np.ndarray:
    den = N ** M
    return np.array([c / den for c in _singleton_counts(N, M)])


@dataclass(frozen=True)
class ReservationChain:
    """Transition matrix of the reserved-station count, indexed by ``m = 0..M``."""

    N: int
    M: int
    P: np.ndarray

    def __post_init__(self):
        if self.P.shape != (self.M + 1, self.M + 1):
            raise ValueError("P must be (M+1) x (M+1)")

    @property
    def transient(self) -> np.ndarray:
        return self.P[: self.M, : self.M]


def build_chain(N: int, M: int) -> ReservationChain:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if M > N:
        raise ValueError(f"M={M} > N={N}: no zero-collision state exists")
    P = np.zeros((M + 1, M + 1))
    for m in range(M + 1):
        P[m, m:] = reservation_pmf(N - m, M - m)
    return ReservationChain(N, M, P)


def expected_cycles(chain: ReservationChain) -> float:
    """Mean number of cycles until every station holds a reservation, starting from none.

    Solves ``beta(i) = 1 + sum_{j >= i} p_ij beta(j)`` with ``beta(M) = 0`` by
    back-substitution; the self-loop ``p_ii`` is moved to the left-hand side.
    """
    M, P = chain.M, chain.P
    beta = np.zeros(M + 1)
    for i in range(M - 1, -1, -1):
        stay = 1.0 - P[i, i]
        assert stay > 0.0, f"degenerate self-loop at state {i}"
        beta[i] = (1.0 + P[i, i + 1:] @ beta[i + 1:]) / stay
    return float(beta[0])


@dataclass(frozen=True)
class ConvergenceDistributions:
    """Forward distributions ``pi[n] = P(z_n = .)`` up to the truncation point.

    ``absorption_cdf[n]`` is ``P(L <= n) = pi[n][M]``.
    """

    pi: np.ndarray
    absorption_cdf: np.ndarray
    truncation_epsilon: float

    @property
    def cycles(self) -> int:
        return len(self.pi) - 1

    @property
    def absorption_pmf(self) -> np.ndarray:
        pmf = np.empty_like(self.absorption_cdf)
        pmf[0] = self.absorption_cdf[0]
        pmf[1:] = np.diff(self.absorption_cdf)
        return pmf


def convergence_distributions(chain: ReservationChain, epsilon: float = DEFAULT_EPSILON,
                              max_cycles: int = DEFAULT_MAX_CYCLES) -> ConvergenceDistributions:
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    M = chain.M
    pi = np.zeros(M + 1)
    pi[0] = 1.0
    rows = [pi]
    while 1.0 - pi[M] >= epsilon:
        if len(rows) > max_cycles:
            raise NoConvergenceError(f"tail mass {1.0 - pi[M]:.3g} after {max_cycles} cycles")
        pi = pi @ chain.P
        rows.append(pi)
    pis = np.array(rows)
    return ConvergenceDistributions(pis, pis[:, M].copy(), epsilon)


def first_passage_pmfs(chain: ReservationChain, horizon: int) -> np.ndarray:
    """``F[t, k] = P(L = t | z_0 = k)`` for transient ``k`` and ``t = 0..horizon``."""
    M = chain.M
    Q = chain.transient
    r = chain.P[:M, M]
    F = np.zeros((horizon + 1, M + 1))
    if M == 0:
        F[0, 0] = 1.0
        return F
    F[0, M] = 1.0
    f = r.copy()
    for t in range(1, horizon + 1):
        F[t, :M] = f
        f = Q @ f
    return F


def conditioned_distributions(dist: ConvergenceDistributions, F: np.ndarray, l: int) -> np.ndarray:
    """Rows ``n = 0..l`` of ``P(z_n = k | L = l)``.

    For ``n < l`` the event ``L = l`` factors through ``z_n`` (Markov
    property): ``P(z_n = k, L = l) = pi_n(k) F[l - n, k]`` for transient ``k``.
    At ``n = l`` the chain sits in the absorbing state.
    """
    M = F.shape[1] - 1
    weight = dist.absorption_pmf[l]
    out = np.zeros((l + 1, M + 1))
    for n in range(l):
        out[n, :M] = dist.pi[n, :M] * F[l - n, :M]
    out[:l] /= weight
    out[l, M] = 1.0
    return out


def _mean_idle_slots(N: int, M: int) -> np.ndarray:
    # expected number of free slots nobody picks, given k reservations
    k = np.arange(M + 1)
    free = N - k
    v = np.zeros(M + 1)
    live = free > 0
    v[live] = free[live] * (1.0 - 1.0 / free[live]) ** (M - k[live])
    return v


def exact_expected_time(chain: ReservationChain, t: TimingParameters,
                        epsilon: float = DEFAULT_EPSILON,
                        max_cycles: int = DEFAULT_MAX_CYCLES) -> float:
    """Expected wall-clock time (seconds) to reach the zero-collision state.

    Averages the cycle durations over the conditional state distributions
    given the absorption cycle ``L = l``, weighted by ``P(L = l)``; the sum
    over ``l`` stops once the remaining tail mass of ``L`` is below
    ``epsilon``.
    """
    N, M = chain.N, chain.M
    if M == 0:
        return 0.0
    dist = convergence_distributions(chain, epsilon, max_cycles)
    lmax = dist.cycles
    F = first_passage_pmfs(chain, lmax)
    pmf = dist.absorption_pmf
    k = np.arange(M + 1)
    idle = _mean_idle_slots(N, M)
    base = (t.t_s + t.t_b) * N
    total = 0.0
    for l in range(1, lmax + 1):
        if pmf[l] <= 0.0:
            continue
        cond = conditioned_distributions(dist, F, l)
        good = cond[1:] @ k          # E[G_n | L = l], n = 1..l
        empty = cond[:-1] @ idle     # E[V_n | L = l] uses z_{n-1}
        cycles = base * l + (t.t_g - t.t_b) * good.sum() + (t.t_v - t.t_b) * empty.sum()
        total += pmf[l] * cycles
    return float(total) * 1e-6


def upper_bound_time(chain: ReservationChain, t: TimingParameters) -> float:
    """Simple bound (seconds) on the expected convergence time."""
    if chain.M == 0:
        return 0.0
    per_cycle = (t.t_s + t.t_v) * chain.N + (max(t.t_g, t.t_b) - t.t_v) * chain.M
    return per_cycle * expected_cycles(chain) * 1e-6


@dataclass(frozen=True)
class AnalysisRow:
    N: int
    M: int
    expected_cycles: float
    upper_bound_s: float
    exact_expected_s: float


def analyze_pair(N: int, M: int, t: TimingParameters, epsilon: float = DEFAULT_EPSILON) -> AnalysisRow:
    chain = build_chain(N, M)
    return AnalysisRow(N, M, expected_cycles(chain), upper_bound_time(chain, t),
                       exact_expected_time(chain, t, epsilon))
