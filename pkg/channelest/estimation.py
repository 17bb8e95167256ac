"""
Least-squares channel estimators.

SiUCE estimates [d_k, Q_k] of every user from its own slot-invariant tones.
SeUCE estimates the reference user the same way, then only the normalized
user-IRS gains a_k and direct channel d_k of every other user, reusing the
reference cascaded channel.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, qr, solve, solve_triangular, svdvals

from .channel_model import SEUCE, SIUCE
from .exceptions import FeasibilityError, InvalidArgumentError, RankDeficientError
from .ofdm import partial_dft
from .training import PILOT_COUNT, SLOT_COUNT, TONE_PER_SLOT

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12


@dataclass(frozen=True)
class LstsqResult:
    x: np.ndarray
    condition: float


def lstsq_solve(A, B, cond_limit=COND_LIMIT):
    """argmin ||A x - B|| through an economic QR factorization of A."""
    A = np.atleast_2d(np.asarray(A))
    m, n = A.shape
    if m < n:
        raise InvalidArgumentError(f"under-determined system: {m} equations, {n} unknowns")
    q, r = qr(A, mode="economic")
    singular_values = svdvals(r)
    condition = np.inf if singular_values[-1] == 0 else float(singular_values[0] / singular_values[-1])
    if condition > cond_limit:
        raise RankDeficientError(f"condition number {condition:.3e} exceeds {cond_limit:.0e}", condition)
    return LstsqResult(x=solve_triangular(r, q.conj().T @ np.asarray(B)), condition=condition)


@dataclass(frozen=True)
class UserEstimate:
    d_hat: np.ndarray
    Q_hat: np.ndarray
    a_hat: np.ndarray | None = None
    condition: float = 1.0

    @property
    def Q_tilde(self):
        return np.column_stack([self.d_hat, self.Q_hat])


@dataclass(frozen=True)
class GainEstimate:
    a_hat: np.ndarray
    d_hat: np.ndarray
    condition: float

    @property
    def lambda_hat(self):
        return np.concatenate([self.a_hat, self.d_hat])


@dataclass(frozen=True)
class ChannelEstimate:
    scheme: str
    users: tuple

    @property
    def K(self):
        return len(self.users)

    @property
    def conditions(self):
        return [user.condition for user in self.users]

    def __getitem__(self, k):
        return self.users[k]


def _left_solve(Y, F, fast_path, cond_limit):
    """F^+ Y, the frequency-to-delay step shared by every full estimate."""
    if fast_path and F.is_scaled_orthogonal():
        return (F.N / F.size) * (F.values.conj().T @ Y), 1.0
    try:
        result = lstsq_solve(F.values, Y, cond_limit)
    except (RankDeficientError, InvalidArgumentError) as exc:
        raise FeasibilityError(
            f"partial DFT on {F.size} tones is not full column rank for L={F.L}",
            constraint=PILOT_COUNT,
            condition=getattr(exc, "condition", None),
        ) from exc
    return result.x, result.condition


def _scale(size, P):
    if P <= 0:
        raise InvalidArgumentError("transmit power must be positive to invert the pilots")
    return np.sqrt(size / P)


def siuce_estimate(Y, F, pattern, P, fast_path=True, cond_limit=COND_LIMIT):
    """[d_k, Q_k] from Y_k = |J_k| x tau selected tones: sqrt(|J|/P) F^+ Y Xi^+."""
    X, left_condition = _left_solve(np.asarray(Y), F, fast_path, cond_limit)
    Xi = pattern.Xi
    if fast_path and pattern.is_scaled_orthogonal():
        W, right_condition = X @ Xi.conj().T / (pattern.M + 1), 1.0
    else:
        try:
            result = lstsq_solve(Xi.conj().T, X.conj().T, cond_limit)
        except (RankDeficientError, InvalidArgumentError) as exc:
            raise FeasibilityError(
                f"reflection pattern with {pattern.tau} slots is not full row rank",
                constraint=SLOT_COUNT,
                condition=getattr(exc, "condition", None),
            ) from exc
        W, right_condition = result.x.conj().T, result.condition
    Q_tilde = _scale(F.size, P) * W
    return UserEstimate(
        d_hat=Q_tilde[:, 0], Q_hat=Q_tilde[:, 1:], condition=max(left_condition, right_condition)
    )


def seuce_reference_estimate(Y, F, pattern, P, fast_path=True, cond_limit=COND_LIMIT):
    """Reference user: same as SiUCE but with a square, invertible pattern."""
    Xi = pattern.Xi
    if Xi.shape[0] != Xi.shape[1]:
        raise InvalidArgumentError(f"the reference estimate needs a square pattern, got {Xi.shape}")
    X, left_condition = _left_solve(np.asarray(Y), F, fast_path, cond_limit)
    if fast_path and pattern.is_scaled_orthogonal():
        W, right_condition = X @ Xi.conj().T / (pattern.M + 1), 1.0
    else:
        right_condition = float(np.linalg.cond(Xi))
        if not np.isfinite(right_condition) or right_condition > cond_limit:
            raise InvalidArgumentError(f"reflection pattern is singular (condition {right_condition:.3e})")
        try:
            W = solve(Xi.conj().T, X.conj().T).conj().T
        except LinAlgError as exc:
            raise InvalidArgumentError("reflection pattern is singular") from exc
    Q_tilde = _scale(F.size, P) * W
    return UserEstimate(
        d_hat=Q_tilde[:, 0], Q_hat=Q_tilde[:, 1:], condition=max(left_condition, right_condition)
    )


def assemble_Ck(Q1_hat, pattern, allocation, k, P, N, L):
    """Stack sqrt(P/|J_k^(t)|) F_k^(t) [Q_1 Theta^(t), I_L] over the slots, in slot order."""
    Q1_hat = np.asarray(Q1_hat)
    if Q1_hat.shape != (L, pattern.M):
        raise InvalidArgumentError(f"Q1 has shape {Q1_hat.shape}, expected {(L, pattern.M)}")
    blocks = []
    for t in range(pattern.tau):
        tones = sorted(allocation.tones(k, t))
        if not tones:
            raise FeasibilityError(f"user {k} has no tone in slot {t}", constraint=TONE_PER_SLOT, user=k)
        F = partial_dft(N, L, tones).values
        reflected = (F @ Q1_hat) * pattern.theta(t)[None, :]
        blocks.append(np.sqrt(P / len(tones)) * np.hstack([reflected, F]))
    return np.vstack(blocks)


def seuce_nonref_estimate(z, C, M, cond_limit=COND_LIMIT):
    """lambda_k = C_k^+ z_k split into the M gains a_k and the L direct taps d_k."""
    result = lstsq_solve(C, z, cond_limit)
    return GainEstimate(a_hat=result.x[:M], d_hat=result.x[M:], condition=result.condition)


def recover_cascaded(Q1_hat, a_hat):
    return np.asarray(Q1_hat) * np.asarray(a_hat)[None, :]


def estimate_siuce(block, allocation, pattern, config, fast_path=True):
    users = []
    for k in range(allocation.K):
        tones = allocation.tones(k, 0)
        F = partial_dft(config.N, config.L, tones)
        users.append(siuce_estimate(block.observation_matrix(tones), F, pattern, config.P, fast_path))
    return ChannelEstimate(scheme=SIUCE, users=tuple(users))


def estimate_seuce(block, allocation, pattern, config, reference=0, reference_truth=None, fast_path=True):
    """
    Sequential estimate. ``reference_truth`` replaces the estimated Q_1 inside
    C_k and in the cascaded recovery, which isolates the second-stage error.
    """
    N, L, M = config.N, config.L, config.M
    tones = allocation.tones(reference, 0)
    F = partial_dft(N, L, tones)
    ref = seuce_reference_estimate(block.observation_matrix(tones), F, pattern, config.P, fast_path)
    Q1 = ref.Q_hat if reference_truth is None else np.asarray(reference_truth)

    users = []
    for k in range(allocation.K):
        if k == reference:
            users.append(UserEstimate(ref.d_hat, ref.Q_hat, np.ones(M, dtype=complex), ref.condition))
            continue
        C = assemble_Ck(Q1, pattern, allocation, k, config.P, N, L)
        gains = seuce_nonref_estimate(block.observation_vector(allocation, k), C, M)
        users.append(UserEstimate(gains.d_hat, recover_cascaded(Q1, gains.a_hat), gains.a_hat, gains.condition))
    return ChannelEstimate(scheme=SEUCE, users=tuple(users))


def estimate(block, allocation, pattern, config, **kwargs):
    if config.scheme == SIUCE:
        return estimate_siuce(block, allocation, pattern, config, kwargs.get("fast_path", True))
    return estimate_seuce(block, allocation, pattern, config, **kwargs)
