"""
Frequency-domain OFDM training signals.

The cyclic prefix is assumed long enough (Lcp >= L-1) for the time-domain chain
to reduce to a per-tone product, so received pilots are synthesized directly in
the frequency domain.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import dft

from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def unitary_dft(N):
    matrix = dft(N, scale="sqrtn")
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True)
class PartialDft:
    N: int
    L: int
    rows: tuple
    values: np.ndarray

    @property
    def size(self):
        return len(self.rows)

    def gram(self):
        return self.values.conj().T @ self.values

    def is_scaled_orthogonal(self, atol=1e-10):
        """True when F^H F = (|J|/N) I, which enables the scaled-adjoint inverse."""
        return np.allclose(self.gram(), (self.size / self.N) * np.eye(self.L), atol=atol)


def partial_dft(N, L, J):
    rows = list(J)
    if not rows:
        raise InvalidArgumentError("the tone set is empty")
    if len(set(rows)) != len(rows):
        raise InvalidArgumentError(f"duplicate tone indices in {rows}")
    if min(rows) < 0 or max(rows) >= N:
        raise InvalidArgumentError(f"tone indices must lie in [0, {N})")
    if L > N or L < 1:
        raise InvalidArgumentError(f"L={L} must satisfy 1 <= L <= N={N}")
    rows = sorted(rows)
    values = unitary_dft(N)[np.asarray(rows), :L]
    return PartialDft(N=N, L=L, rows=tuple(rows), values=values)


@dataclass(frozen=True)
class ReceivedBlock:
    y: np.ndarray  # tau x N, one row per training symbol
    sigma2: float
    seed: object = None

    @property
    def tau(self):
        return self.y.shape[0]

    def observation_matrix(self, tones):
        """Y_k: the slot-invariant tones of every symbol, |J| x tau."""
        idx = np.asarray(sorted(tones))
        return self.y[:, idx].T

    def observation_vector(self, allocation, k):
        """z_k: user ``k``'s tones of every symbol concatenated in slot order."""
        parts = [self.y[t, np.asarray(sorted(allocation.tones(k, t)), dtype=int)] for t in range(self.tau)]
        return np.concatenate(parts)


def synthesize_received(config, realization, allocation, pattern, t, rng):
    """y^(t) of every tone for training symbol ``t`` with unit pilot symbols."""
    N, L = config.N, config.L
    if not 0 <= t < pattern.tau:
        raise InvalidArgumentError(f"slot {t} outside the {pattern.tau} training symbols")
    F = unitary_dft(N)[:, :L]
    coefficients = pattern.Xi[:, t]
    y = np.zeros(N, dtype=complex)
    for k in range(realization.K):
        tones = sorted(allocation.tones(k, t))
        if not tones:
            raise InvalidArgumentError(f"user {k} has no pilot tone in slot {t}")
        h = realization.q_tilde(k) @ coefficients
        idx = np.asarray(tones)
        y[idx] += np.sqrt(config.P / len(tones)) * (F[idx] @ h)
    noise = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return y + np.sqrt(config.sigma2 / 2) * noise


def synthesize_block(config, realization, allocation, pattern, rngs, seed=None):
    """Stack all training symbols; ``rngs`` is one generator or one per slot."""
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs] * pattern.tau
    if len(rngs) != pattern.tau:
        raise InvalidArgumentError(f"expected {pattern.tau} noise generators, got {len(rngs)}")
    y = np.stack([
        synthesize_received(config, realization, allocation, pattern, t, rngs[t])
        for t in range(pattern.tau)
    ])
    return ReceivedBlock(y=y, sigma2=config.sigma2, seed=seed)


def trial_seed_sequence(master_seed, grid_index, trial_index):
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(grid_index), int(trial_index)))


def trial_streams(master_seed, grid_index, trial_index, tau):
    """Independent generators for one trial: channel, design, then one per slot."""
    sequence = trial_seed_sequence(master_seed, grid_index, trial_index)
    children = sequence.spawn(2 + tau)
    channel, design, *slots = [np.random.default_rng(child) for child in children]
    return channel, design, slots
