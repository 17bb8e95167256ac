"""
Training designs: pilot tone allocations, IRS reflection patterns, the rank
conditions both estimators need, and the user-capacity formulas.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import dft

from .channel_model import SEUCE, SIUCE, SCHEMES
from .exceptions import CapacityExceededError, InvalidArgumentError, RankDeficientError

logger = logging.getLogger(__name__)

# Labels of the rank conditions reported by check_feasibility.
PILOT_COUNT = "pilot-count"            # |J_k| >= L
SLOT_COUNT = "slot-count"              # tau >= M+1
SLOT_INVARIANCE = "slot-invariance"
DISJOINTNESS = "disjointness"
TONE_PER_SLOT = "tone-per-slot"        # >= 1 tone in every slot
SUBCARRIER_SPAN = "subcarrier-span"    # >= L distinct sub-carriers over all slots
TONE_BUDGET = "tone-budget"            # zeta_k >= M+L

EQUISPACED = "equispaced"
ADJACENT = "adjacent"
TWO_STEP = "two_step"
PERMUTED = "permuted"
ALLOCATION_KINDS = (EQUISPACED, ADJACENT, TWO_STEP, PERMUTED)

DFT = "dft"
ONOFF = "onoff"
RANDOM = "random"
PATTERN_KINDS = (DFT, ONOFF, RANDOM)

# Two-step pool and leftover searches enumerate at most this many candidates.
TWO_STEP_SEARCH_LIMIT = 2000
TIE_TOLERANCE = 1e-9
GRAM_FLOOR = 1e-12


@dataclass(frozen=True)
class PilotAllocation:
    """
    Tone sets J_k^(t) of every user.

    ``sets[k]`` holds one frozenset per training slot, or a single frozenset
    shared by every slot when ``tau`` is None.
    """

    N: int
    sets: tuple
    kind: str = "custom"
    tau: int | None = None

    def __post_init__(self):
        width = 1 if self.tau is None else self.tau
        for k, per_slot in enumerate(self.sets):
            if len(per_slot) != width:
                raise InvalidArgumentError(f"user {k} has {len(per_slot)} slot sets, expected {width}")
            for tones in per_slot:
                if any(n < 0 or n >= self.N for n in tones):
                    raise InvalidArgumentError(f"user {k} has a tone outside [0, {self.N})")

    @classmethod
    def from_user_sets(cls, N, user_sets, kind="custom"):
        return cls(N=N, sets=tuple((frozenset(s),) for s in user_sets), kind=kind)

    @classmethod
    def from_slot_sets(cls, N, slot_sets, kind="custom"):
        """``slot_sets[k][t]`` is the tone set of user k in slot t."""
        sets = tuple(tuple(frozenset(s) for s in per_slot) for per_slot in slot_sets)
        taus = {len(per_slot) for per_slot in sets}
        if len(taus) > 1:
            raise InvalidArgumentError("every user needs the same number of slots")
        return cls(N=N, sets=sets, kind=kind, tau=taus.pop() if taus else 0)

    @property
    def K(self):
        return len(self.sets)

    @property
    def slot_invariant(self):
        return self.tau is None or all(len(set(per_slot)) <= 1 for per_slot in self.sets)

    def tones(self, k, t):
        return self.sets[k][0] if self.tau is None else self.sets[k][t]

    def slots(self, tau=None):
        slots = self.tau if self.tau is not None else tau
        if slots is None:
            raise InvalidArgumentError("a slot-invariant allocation needs an explicit slot count")
        return slots

    def zeta(self, k, tau=None):
        return sum(len(self.tones(k, t)) for t in range(self.slots(tau)))

    def union(self, k):
        return frozenset().union(*self.sets[k])

    def expand(self, tau):
        """The same allocation with one explicit tone set per slot."""
        if self.tau is not None:
            return self
        return PilotAllocation(self.N, tuple(per_slot * tau for per_slot in self.sets), self.kind, tau)

    def collisions(self, tau=None):
        clashes = []
        for t in range(self.slots(tau)):
            owners = {}
            for k in range(self.K):
                for n in self.tones(k, t):
                    owners.setdefault(n, []).append(k)
            clashes.extend((t, n, users) for n, users in sorted(owners.items()) if len(users) > 1)
        return clashes

    def grid(self, tau=None):
        """tau x N array holding user index + 1 on each allocated tone, 0 when free."""
        slots = self.slots(tau)
        out = np.zeros((slots, self.N), dtype=int)
        for t in range(slots):
            for k in range(self.K):
                out[t, sorted(self.tones(k, t))] = k + 1
        return out


@dataclass(frozen=True)
class ReflectionPattern:
    Xi: np.ndarray  # (M+1) x tau, row 0 multiplies the direct path
    kind: str = "custom"

    def __post_init__(self):
        if self.Xi.ndim != 2 or self.Xi.shape[0] < 2:
            raise InvalidArgumentError("a reflection pattern needs at least one sub-surface row")
        if not np.allclose(self.Xi[0], 1.0):
            raise InvalidArgumentError("the first row of a reflection pattern must be all ones")

    @property
    def M(self):
        return self.Xi.shape[0] - 1

    @property
    def tau(self):
        return self.Xi.shape[1]

    def theta(self, t):
        return self.Xi[1:, t]

    def gram_trace_inverse(self):
        """tr{(Xi Xi^H)^-1}, the pattern's factor in the SiUCE error."""
        gram = self.Xi @ self.Xi.conj().T
        return float(np.real(np.trace(np.linalg.inv(gram))))

    def is_scaled_orthogonal(self, atol=1e-10):
        gram = self.Xi @ self.Xi.conj().T
        return self.tau == self.M + 1 and np.allclose(gram, (self.M + 1) * np.eye(self.M + 1), atol=atol)


def _require_positive(**values):
    for name, value in values.items():
        if value < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer")


def equispaced_pilots(N, K, L_p):
    _require_positive(N=N, K=K, L_p=L_p)
    if N % L_p:
        raise InvalidArgumentError(f"N={N} is not divisible by L_p={L_p}")
    spacing = N // L_p
    if K > spacing:
        raise InvalidArgumentError(f"K={K} users do not fit a comb of spacing {spacing}")
    sets = [range(k, N, spacing) for k in range(K)]
    return PilotAllocation.from_user_sets(N, sets, kind=EQUISPACED)


def adjacent_pilots(N, K, L_p):
    _require_positive(N=N, K=K, L_p=L_p)
    if K * L_p > N:
        raise InvalidArgumentError(f"K*L_p={K * L_p} exceeds N={N}")
    sets = [range(k * L_p, (k + 1) * L_p) for k in range(K)]
    return PilotAllocation.from_user_sets(N, sets, kind=ADJACENT)


def _check_seuce_demand(N, M, L, J_ref, zetas):
    J_ref = frozenset(J_ref)
    if not J_ref or max(J_ref) >= N or min(J_ref) < 0:
        raise InvalidArgumentError("the reference tone set must be nonempty and inside [0, N)")
    for k, zeta in enumerate(zetas, start=1):
        if zeta < M + L:
            raise InvalidArgumentError(f"user {k}: zeta={zeta} is below M+L={M + L}")
    free = (M + 1) * (N - len(J_ref))
    demand = 0
    for k, zeta in enumerate(zetas, start=1):
        demand += zeta
        if demand > free:
            raise CapacityExceededError(
                f"user {k}: {demand} pilot tones requested but only {free} are free", user=k
            )
    return J_ref


def step_one_subcarriers(zeta, M, L):
    """Number of sub-carriers a non-reference user holds in every slot."""
    return (zeta - L + 1) // (M + 1)


@lru_cache(maxsize=32)
def _dft_head(N, L):
    return dft(N, scale="sqrtn")[:, :L]


def spread_score(N, L, whole, extra, tau):
    """
    tr{(F^H W F)^-1} of one user's sub-carriers: F stacks their partial DFT
    rows, W counts the tones each carries (tau for a whole sub-carrier, one
    for a leftover). Large values mean closely packed sub-carriers.
    """
    columns = list(whole) + list(extra)
    rows = _dft_head(N, L)[np.asarray(columns, dtype=int)]
    weights = np.r_[np.full(len(whole), float(tau)), np.ones(len(extra))]
    gram = (rows.conj().T * weights) @ rows
    return float(np.sum(1.0 / (np.linalg.eigvalsh(gram) + GRAM_FLOOR)))


def _improves(value, incumbent):
    return value < incumbent * (1 - TIE_TOLERANCE)


def _best_leftovers(candidates, size, score):
    """Lowest-scoring ``size``-subset of ``candidates``; earlier subsets win ties."""
    if math.comb(len(candidates), size) <= TWO_STEP_SEARCH_LIMIT:
        best, best_score = None, math.inf
        for subset in itertools.combinations(candidates, size):
            value = score(subset)
            if _improves(value, best_score):
                best, best_score = subset, value
        return list(best)
    chosen, remaining = [], list(candidates)
    for _ in range(size):
        pick = min(remaining, key=lambda n: score(chosen + [n]))
        chosen.append(pick)
        remaining.remove(pick)
    return sorted(chosen)


def _leftover_pools(open_columns, size):
    # descending, so the first pools leave the lowest sub-carriers to step one
    ordered = sorted(open_columns, reverse=True)
    if math.comb(len(ordered), size) <= TWO_STEP_SEARCH_LIMIT:
        yield from itertools.combinations(ordered, size)
        return
    step = len(ordered) / size
    yield tuple(ordered[int((i + 0.5) * step)] for i in range(size))


def _place_two_step(N, L, tau, J_ref, open_columns, pool, counts, leftovers):
    whole_columns = [n for n in open_columns if n not in pool]
    free = np.zeros((tau, N), dtype=bool)
    free[:, list(pool)] = True
    slot_sets = [[set(J_ref) for _ in range(tau)]]
    total = 0.0
    start = 0
    for k, (count, leftover) in enumerate(zip(counts, leftovers), start=1):
        whole = whole_columns[start:start + count]
        start += count
        slot_sets.append([set(whole) for _ in range(tau)])
        extra = []
        if leftover:
            slot = next((t for t in range(tau) if free[t].sum() >= leftover), None)
            if slot is None:
                raise CapacityExceededError(f"user {k}: no slot has {leftover} free sub-carriers", user=k)
            extra = _best_leftovers(
                np.flatnonzero(free[slot]).tolist(), leftover,
                lambda subset: spread_score(N, L, whole, subset, tau),
            )
            free[slot, extra] = False
            slot_sets[k][slot].update(extra)
        total += spread_score(N, L, whole, extra, tau)
    return slot_sets, total


def seuce_two_step_allocation(N, M, L, J_ref, zetas):
    """
    Reference user 0 holds J_ref in every slot. Each non-reference user first
    gets whole sub-carriers across all M+1 slots, then its leftover tones on
    distinct sub-carriers inside a single slot.

    The sub-carriers kept back for leftover tones (the pool) decide how well
    each user's sub-carrier set is spread, so every candidate pool is scored
    by the sum of spread_score over users and the lowest total wins. Whole
    sub-carriers are handed out in ascending order. A user's leftovers go to
    the first slot with enough free pool sub-carriers, on the lowest-scoring
    subset of them. Ties keep the pool leaving the lowest sub-carriers for
    step one and then the lowest leftover indices. Pools are searched
    exhaustively up to TWO_STEP_SEARCH_LIMIT candidates; above that a single
    pool spread evenly over the free sub-carriers is used.
    """
    J_ref = _check_seuce_demand(N, M, L, J_ref, zetas)
    tau = M + 1
    counts = [step_one_subcarriers(zeta, M, L) for zeta in zetas]
    leftovers = [zeta - count * tau for zeta, count in zip(zetas, counts)]
    open_columns = [n for n in range(N) if n not in J_ref]

    pools = _leftover_pools(open_columns, len(open_columns) - sum(counts))
    if not any(leftovers):
        pools = itertools.islice(pools, 1)
    best, best_total = None, math.inf
    for pool in pools:
        slot_sets, total = _place_two_step(N, L, tau, J_ref, open_columns, pool, counts, leftovers)
        if _improves(total, best_total):
            best, best_total = slot_sets, total
    logger.debug("two-step allocation for %d users, spread score %.6g", len(zetas), best_total)
    return PilotAllocation.from_slot_sets(N, best, kind=TWO_STEP)


def permuted_allocation(N, M, L, J_ref, zetas, rng, attempts=100):
    """Benchmark allocation spreading each user's tones over random sub-carriers and slots."""
    J_ref = _check_seuce_demand(N, M, L, J_ref, zetas)
    tau = M + 1
    for attempt in range(attempts):
        allocation = _permuted_attempt(N, tau, J_ref, zetas, rng)
        if allocation is not None and check_feasibility(allocation, SEUCE, N, M, L).passed:
            if attempt:
                logger.debug("permuted allocation accepted after %d attempts", attempt + 1)
            return allocation
    raise CapacityExceededError(f"no feasible permuted allocation found in {attempts} attempts")


def _permuted_attempt(N, tau, J_ref, zetas, rng):
    free = np.ones((tau, N), dtype=bool)
    free[:, sorted(J_ref)] = False
    slot_sets = [[set(J_ref) for _ in range(tau)]]
    slot_counter = 0
    for zeta in zetas:
        mine = [set() for _ in range(tau)]
        used = set()
        for _ in range(zeta):
            for shift in range(tau):
                t = (slot_counter + shift) % tau
                if free[t].any():
                    break
            else:
                return None
            slot_counter = t + 1
            candidates = np.flatnonzero(free[t])
            fresh = [n for n in candidates if n not in used]
            n = int(rng.choice(fresh if fresh else candidates))
            free[t, n] = False
            mine[t].add(n)
            used.add(n)
        slot_sets.append(mine)
    return PilotAllocation.from_slot_sets(N, slot_sets, kind=PERMUTED)


def dft_pattern(M):
    _require_positive(M=M)
    return ReflectionPattern(dft(M + 1), kind=DFT)


def onoff_pattern(M):
    _require_positive(M=M)
    Xi = np.zeros((M + 1, M + 1), dtype=complex)
    Xi[0] = 1.0
    Xi[np.arange(1, M + 1), np.arange(1, M + 1)] = 1.0
    return ReflectionPattern(Xi, kind=ONOFF)


def random_pattern(M, rng, cond_limit=1e12, attempts=100):
    _require_positive(M=M)
    for _ in range(attempts):
        Xi = np.ones((M + 1, M + 1), dtype=complex)
        Xi[1:] = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=(M, M + 1)))
        condition = np.linalg.cond(Xi)
        if condition < cond_limit:
            return ReflectionPattern(Xi, kind=RANDOM)
    raise RankDeficientError(f"no well-conditioned random pattern in {attempts} draws", condition)


def build_pattern(kind, M, rng=None):
    if kind == DFT:
        return dft_pattern(M)
    if kind == ONOFF:
        return onoff_pattern(M)
    if kind == RANDOM:
        if rng is None:
            raise InvalidArgumentError("a random reflection pattern needs a generator")
        return random_pattern(M, rng)
    raise InvalidArgumentError(f"unknown reflection pattern {kind!r}")


@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str
    user: int | None = None


@dataclass(frozen=True)
class FeasibilityReport:
    scheme: str
    violations: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return not self.violations

    @property
    def constraints(self):
        return {violation.constraint for violation in self.violations}

    def lines(self):
        if self.passed:
            return [f"{self.scheme}: feasible"]
        return [f"{self.scheme}: [{v.constraint}] {v.message}" for v in self.violations]


def check_feasibility(allocation, scheme, N, M, L, reference=0):
    """Rank conditions of the chosen estimator; returns a report, never raises on violations."""
    if scheme not in SCHEMES:
        raise InvalidArgumentError(f"unknown scheme {scheme!r}")
    violations = []
    if allocation.N != N:
        violations.append(Violation(DISJOINTNESS, f"allocation spans N={allocation.N}, expected {N}"))
    tau = allocation.tau if allocation.tau is not None else M + 1
    for t, n, users in allocation.collisions(tau):
        violations.append(Violation(DISJOINTNESS, f"tone {n} in slot {t} is shared by users {users}"))

    if scheme == SIUCE:
        if tau < M + 1:
            violations.append(Violation(SLOT_COUNT, f"{tau} training slots, need at least {M + 1}"))
        for k in range(allocation.K):
            if not _user_slot_invariant(allocation, k, tau):
                violations.append(Violation(SLOT_INVARIANCE, f"user {k} changes tones across slots", k))
                continue
            size = len(allocation.tones(k, 0))
            if size < L:
                violations.append(Violation(PILOT_COUNT, f"user {k} has {size} pilot tones, need {L}", k))
        return FeasibilityReport(scheme, tuple(violations))

    if tau != M + 1:
        violations.append(Violation(SLOT_COUNT, f"{tau} training slots, need exactly {M + 1}"))
    if not _user_slot_invariant(allocation, reference, tau):
        violations.append(Violation(SLOT_INVARIANCE, "the reference user changes tones across slots", reference))
    elif len(allocation.tones(reference, 0)) < L:
        violations.append(Violation(
            PILOT_COUNT, f"reference user has {len(allocation.tones(reference, 0))} tones, need {L}", reference
        ))
    for k in range(allocation.K):
        if k == reference:
            continue
        empty = [t for t in range(tau) if not allocation.tones(k, t)]
        if empty:
            violations.append(Violation(TONE_PER_SLOT, f"user {k} has no tone in slots {empty}", k))
        span = len(allocation.union(k))
        if span < L:
            violations.append(Violation(SUBCARRIER_SPAN, f"user {k} spans {span} sub-carriers, need {L}", k))
        zeta = allocation.zeta(k, tau)
        if zeta < M + L:
            violations.append(Violation(TONE_BUDGET, f"user {k} has {zeta} pilot tones, need {M + L}", k))
    return FeasibilityReport(scheme, tuple(violations))


def _user_slot_invariant(allocation, k, tau):
    first = allocation.tones(k, 0)
    return all(allocation.tones(k, t) == first for t in range(tau))


def _check_dimensions(N, M, L):
    _require_positive(N=N, M=M, L=L)
    if L > N:
        raise InvalidArgumentError(f"L={L} exceeds N={N}")


def k1_max(N, L):
    _check_dimensions(N, 1, L)
    return N // L


def k2_max(N, M, L):
    _check_dimensions(N, M, L)
    return (M + 1) * (N - L) // (M + L) + 1


def recommend_scheme(K, N, M, L):
    if K < 1:
        raise InvalidArgumentError("K must be a positive integer")
    if K <= k1_max(N, L):
        return SIUCE
    if K <= k2_max(N, M, L):
        return SEUCE
    raise CapacityExceededError(f"K={K} exceeds the {k2_max(N, M, L)} users either scheme supports")


def parameter_count(scheme, K, M, L):
    """Unknown channel coefficients estimated for all K users."""
    if scheme == SIUCE:
        return (M + 1) * K * L
    if scheme == SEUCE:
        return L * M + (K - 1) * M + K * L
    raise InvalidArgumentError(f"unknown scheme {scheme!r}")


def min_pilot_tones(scheme, M, L, reference=False):
    if scheme == SIUCE or reference:
        return (M + 1) * L
    if scheme == SEUCE:
        return M + L
    raise InvalidArgumentError(f"unknown scheme {scheme!r}")


def complexity_siuce(M, L):
    """Average complex multiplications per user."""
    return L * (M + 1) * (L + M + 1)


def complexity_seuce(M, L, K):
    nonref = 2 * L * M * (2 * M + L + 1) + (M + 1) ** 3 + 7 * (M + 1) ** 2
    return ((K - 1) * nonref) / (2 * K) + complexity_siuce(M, L) / K


def render_allocation(allocation, tau=None):
    """One line per slot; each sub-carrier shows its 1-based user or '.' when free."""
    grid = allocation.grid(tau)
    return "\n".join(" ".join(str(cell) if cell else "." for cell in row) for row in grid)


def parse_allocation_grid(text, kind="custom"):
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise InvalidArgumentError("an allocation grid needs at least one slot")
    N = len(rows[0])
    if any(len(row) != N for row in rows):
        raise InvalidArgumentError("every slot of the grid must list the same number of sub-carriers")
    cells = []
    for row in rows:
        parsed = []
        for token in row:
            if token == ".":
                parsed.append(0)
            elif token.isdigit() and int(token) >= 1:
                parsed.append(int(token))
            else:
                raise InvalidArgumentError(f"invalid grid cell {token!r}")
        cells.append(parsed)
    K = max((max(row) for row in cells), default=0)
    slot_sets = [
        [{n for n, owner in enumerate(row) if owner == k + 1} for row in cells]
        for k in range(K)
    ]
    return PilotAllocation.from_slot_sets(N, slot_sets, kind=kind)


def render_pattern(pattern, precision=3):
    def cell(value):
        value = complex(value)
        if abs(value.imag) < 10 ** -precision:
            return f"{value.real:.{precision}f}"
        return f"{value.real:.{precision}f}{value.imag:+.{precision}f}j"

    return "\n".join(" ".join(cell(value) for value in row) for row in pattern.Xi)
