"""
Closed-form error expressions, Monte-Carlo error metrics, the expected-trace
allocation objective with its exhaustive search, and the empirical rank probe
of non-reference designs.
"""
import logging
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import qr, solve_triangular, svdvals

from .channel_model import SEUCE
from .estimation import COND_LIMIT, assemble_Ck
from .exceptions import FeasibilityError, InstanceTooLargeError, InvalidArgumentError
from .ofdm import partial_dft
from .training import PilotAllocation, check_feasibility

logger = logging.getLogger(__name__)

CSV_FIELDS = (
    "experiment", "scheme", "allocation", "pattern", "snr_db", "kappa_db",
    "K", "trials", "seed", "mse_empirical", "mse_analytic", "stderr",
)


@dataclass(frozen=True)
class MseReport:
    experiment: str
    scheme: str
    allocation: str
    pattern: str
    snr_db: float | None
    kappa_db: float | None
    K: int
    trials: int
    seed: int
    mse_empirical: float | None
    mse_analytic: float | None
    stderr: float | None
    diagnostic: str = field(default="", compare=False)

    @property
    def failed(self):
        return self.mse_empirical is None

    def as_row(self):
        return {name: getattr(self, name) for name in CSV_FIELDS}


def mean_and_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("no trial produced a value")
    stderr = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), stderr


def snr_gain_db(mse_better, mse_worse):
    """SNR shift separating two error levels on curves that fall 10 dB per decade."""
    return 10 * math.log10(mse_worse / mse_better)


def siuce_user_error(pattern, F, P, sigma2):
    """E||Q~^_k - Q~_k||_F^2 of one user: (|J|sigma2/P) tr{(Xi Xi^H)^-1} tr{(F^H F)^-1}."""
    gram = F.gram()
    try:
        trace_f = float(np.real(np.trace(np.linalg.inv(gram))))
        trace_xi = pattern.gram_trace_inverse()
    except np.linalg.LinAlgError as exc:
        raise FeasibilityError("singular training design", constraint="pilot-count") from exc
    return F.size * sigma2 / P * trace_xi * trace_f


def theoretical_siuce_mse(pattern, allocation, P, sigma2, L):
    K, M = allocation.K, pattern.M
    total = sum(
        siuce_user_error(pattern, partial_dft(allocation.N, L, allocation.tones(k, 0)), P, sigma2)
        for k in range(K)
    )
    return total / (K * L * (M + 1))


def siuce_normalized_analytic(pattern, allocation, P, sigma2, L, realization):
    """Per-draw expected normalized error, the analytic companion of the empirical metric."""
    K, M = allocation.K, pattern.M
    total = 0.0
    for k in range(K):
        F = partial_dft(allocation.N, L, allocation.tones(k, 0))
        total += siuce_user_error(pattern, F, P, sigma2) / np.linalg.norm(realization.q_tilde(k)) ** 2
    return total / (K * L * (M + 1))


def theoretical_reference_mse(P, sigma2, N, M):
    return sigma2 * N / (P * (M + 1))


def trace_inverse_gram(C, cond_limit=COND_LIMIT):
    """tr{(C^H C)^-1} as ||R^-1||_F^2 from C = QR; None when C is not full column rank."""
    rows, cols = C.shape
    if rows < cols:
        return None, np.inf
    r = qr(C, mode="r")[0][:cols]
    singular_values = svdvals(r)
    condition = np.inf if singular_values[-1] == 0 else float(singular_values[0] / singular_values[-1])
    if condition > cond_limit:
        return None, condition
    r_inv = solve_triangular(r, np.eye(cols))
    return float(np.sum(np.abs(r_inv) ** 2)), condition


def condition_number_ck(Q1, pattern, allocation, k, P, N, L):
    C = assemble_Ck(Q1, pattern, allocation, k, P, N, L)
    if C.shape[0] < C.shape[1]:
        return np.inf
    return float(np.linalg.cond(C))


def theoretical_seuce_nonref_mse(Q1, allocation, pattern, P, sigma2, N, L, reference=0):
    """sigma2 / ((M+L)(K-1)) * sum_k tr{D_k^-1} for one reference cascaded channel."""
    M = pattern.M
    others = [k for k in range(allocation.K) if k != reference]
    if not others:
        raise InvalidArgumentError("the allocation has no non-reference user")
    total = 0.0
    for k in others:
        trace, condition = trace_inverse_gram(assemble_Ck(Q1, pattern, allocation, k, P, N, L))
        if trace is None:
            raise FeasibilityError(f"D_{k} is singular", user=k, condition=condition)
        total += trace
    return sigma2 * total / ((M + L) * len(others))


def _normalized_user_errors(estimate, realization):
    errors = []
    for k in range(realization.K):
        truth = realization.q_tilde(k)
        energy = np.linalg.norm(truth) ** 2
        if energy == 0:
            return None
        errors.append(np.linalg.norm(estimate[k].Q_tilde - truth) ** 2 / energy)
    return errors


def normalized_trial_error(estimate, realization):
    """Normalized error of one trial, or None when some true channel has zero energy."""
    errors = _normalized_user_errors(estimate, realization)
    if errors is None:
        logger.warning("skipping a trial with a zero-energy channel")
        return None
    L, M1 = realization.q_tilde(0).shape
    return sum(errors) / (realization.K * L * M1)


def raw_trial_error(estimate, realization):
    L, M1 = realization.q_tilde(0).shape
    total = sum(
        np.linalg.norm(estimate[k].Q_tilde - realization.q_tilde(k)) ** 2 for k in range(realization.K)
    )
    return float(total / (realization.K * L * M1))


def empirical_normalized_mse(estimates, truths):
    values = [
        value for value in (normalized_trial_error(e, t) for e, t in zip(estimates, truths, strict=True))
        if value is not None
    ]
    if not values:
        raise InvalidArgumentError("every trial was skipped")
    return float(np.mean(values))


def _require_seuce_feasible(allocation, pattern, N, L):
    report = check_feasibility(allocation, SEUCE, N, pattern.M, L)
    if not report.passed:
        first = report.violations[0]
        raise FeasibilityError(first.message, constraint=first.constraint, user=first.user)


def p2_objective_mc(allocation, pattern, Q1_sampler, n_samples, P=1.0, N=None, L=None, seed=0, reference=0):
    """
    Sample mean over reference channels of sum_k tr{D_k^-1}. The same ``seed``
    replays the same Q_1 draws, so objectives of different allocations share
    their random numbers. Any singular draw makes the objective infinite.
    """
    N = N or allocation.N
    if L is None:
        raise InvalidArgumentError("the channel length L is required")
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be at least 1")
    _require_seuce_feasible(allocation, pattern, N, L)
    rng = np.random.default_rng(seed)
    others = [k for k in range(allocation.K) if k != reference]
    total, singular = 0.0, 0
    for _ in range(n_samples):
        Q1 = Q1_sampler(rng)
        for k in others:
            trace, _ = trace_inverse_gram(assemble_Ck(Q1, pattern, allocation, k, P, N, L))
            if trace is None:
                singular += 1
            else:
                total += trace
    if singular:
        logger.warning("%d of %d D_k samples were singular", singular, n_samples * len(others))
        return math.inf
    return total / n_samples


@dataclass(frozen=True)
class P2Candidate:
    allocation: PilotAllocation
    objective: float
    condition: float


@dataclass(frozen=True)
class P2Result:
    ranking: tuple
    evaluated: int

    @property
    def best(self):
        return self.ranking[0]

    def position(self, allocation):
        """Rank of an allocation with the same tone sets, or None when absent."""
        for index, candidate in enumerate(self.ranking):
            if candidate.allocation.sets == allocation.sets:
                return index
        return None


def allocation_count_estimate(N, M, J_ref, zetas):
    cells = (M + 1) * (N - len(set(J_ref)))
    count = 1
    for zeta in zetas:
        count *= math.comb(cells, zeta)
        cells -= zeta
    return count


def _user_placements(cells, zeta, tau, L, M):
    for chosen in combinations(cells, zeta):
        slots = {t for t, _ in chosen}
        if len(slots) < tau:
            continue
        if len({n for _, n in chosen}) < L or zeta < M + L:
            continue
        yield chosen


def enumerate_allocations(N, M, L, J_ref, zetas):
    """Every disjoint placement of the non-reference tones meeting their rank conditions."""
    tau = M + 1
    J_ref = frozenset(J_ref)
    cells = [(t, n) for t in range(tau) for n in range(N) if n not in J_ref]

    def place(user, remaining, chosen):
        if user == len(zetas):
            yield chosen
            return
        for placement in _user_placements(remaining, zetas[user], tau, L, M):
            taken = set(placement)
            rest = [cell for cell in remaining if cell not in taken]
            yield from place(user + 1, rest, chosen + [placement])

    for placements in place(0, cells, []):
        slot_sets = [[set(J_ref) for _ in range(tau)]]
        for placement in placements:
            per_slot = [set() for _ in range(tau)]
            for t, n in placement:
                per_slot[t].add(n)
            slot_sets.append(per_slot)
        yield PilotAllocation.from_slot_sets(N, slot_sets, kind="search")


def brute_force_p2(N, M, L, J_ref, zetas, pattern, n_samples, Q1_sampler, P=1.0, seed=0, cap=10**6):
    estimate = allocation_count_estimate(N, M, J_ref, zetas)
    if estimate > cap:
        raise InstanceTooLargeError(f"about {estimate} allocations exceed the cap of {cap}", estimate)
    logger.info("enumerating up to %d allocations", estimate)

    probe = Q1_sampler(np.random.default_rng(seed))
    candidates = []
    for allocation in enumerate_allocations(N, M, L, J_ref, zetas):
        objective = p2_objective_mc(allocation, pattern, Q1_sampler, n_samples, P, N, L, seed)
        condition = max(condition_number_ck(probe, pattern, allocation, k, P, N, L) for k in range(1, allocation.K))
        candidates.append(P2Candidate(allocation, objective, condition))
    if not candidates:
        raise FeasibilityError("no allocation satisfies the rank conditions")
    ranking = sorted(candidates, key=lambda candidate: candidate.objective)
    logger.info("evaluated %d allocations, best objective %.6g", len(ranking), ranking[0].objective)
    return P2Result(ranking=tuple(ranking), evaluated=len(ranking))


def rank_probe(allocation, pattern, Q1_sampler, n_draws, N, L, P=1.0, seed=0, reference=0,
               cond_limit=COND_LIMIT):
    """Fraction of reference channel draws for which every D_k is numerically full rank."""
    others = [k for k in range(allocation.K) if k != reference]
    for k in others:
        if any(not allocation.tones(k, t) for t in range(pattern.tau)):
            return 0.0
    rng = np.random.default_rng(seed)
    full = 0
    for _ in range(n_draws):
        Q1 = Q1_sampler(rng)
        ok = True
        for k in others:
            trace, _ = trace_inverse_gram(assemble_Ck(Q1, pattern, allocation, k, P, N, L), cond_limit)
            if trace is None:
                ok = False
                break
        full += ok
    return full / n_draws
