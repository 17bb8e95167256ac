"""
Random multipath channels of the IRS-assisted uplink.

Every link is drawn with unit expected total power; large-scale path loss is
applied afterwards as a separate power gain (see ``LinkGeometry``).
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)

SIUCE = "siuce"
SEUCE = "seuce"
SCHEMES = (SIUCE, SEUCE)


@dataclass(frozen=True)
class SystemConfig:
    N: int = 16
    M: int = 8
    M0: int = 128
    Ld: int = 4
    L1: int = 3
    L2: int = 2
    Lcp: int = 6
    K: int = 4
    P: float = 1.0
    sigma2: float = 1.0
    kappa: float = 10 ** 0.45
    decay: float = 2.0
    scheme: str = SIUCE

    def __post_init__(self):
        for name in ("N", "M", "Ld", "L1", "L2", "K"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer")
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {self.scheme!r}")
        if self.M0 < 0 or self.M0 % self.M:
            raise InvalidArgumentError(f"M0={self.M0} is not a multiple of M={self.M}")
        if self.L2 > 1 and self.L2 >= min(self.L1, self.Ld):
            raise InvalidArgumentError("a multipath user-IRS link needs L2 < min(L1, Ld)")
        if self.scheme == SEUCE and self.L1 + self.L2 - 1 > self.L:
            raise InvalidArgumentError(
                "the cascaded channel does not fit the sequential-user delay spread; "
                "increase Ld so that Ld >= L1 + L2 - 1"
            )
        if self.Lcp < self.L - 1:
            raise InvalidArgumentError(f"cyclic prefix Lcp={self.Lcp} is shorter than L-1={self.L - 1}")
        if self.P < 0 or self.sigma2 < 0:
            raise InvalidArgumentError("power and noise power must be non-negative")
        if self.kappa <= 0 or self.decay <= 0:
            raise InvalidArgumentError("kappa and decay must be positive")

    @property
    def eta(self):
        return self.M0 // self.M

    @property
    def tau(self):
        return self.M + 1

    @property
    def Lr(self):
        # the sequential-user scheme only models the dominant user-IRS tap
        if self.scheme == SEUCE:
            return self.L1
        return self.L1 + self.L2 - 1

    @property
    def L(self):
        return max(self.Lr, self.Ld)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every link; arrays are indexed [user, ...]."""

    d: np.ndarray  # K x L direct channels, zero padded
    G: np.ndarray  # L1 x M IRS-AP channel
    U: np.ndarray  # K x L2 x M user-IRS channels
    Q: np.ndarray  # K x L x M cascaded channels, zero padded

    @property
    def K(self):
        return self.d.shape[0]

    def q_tilde(self, k):
        """[d_k, Q_k] as an L x (M+1) matrix."""
        return np.column_stack([self.d[k], self.Q[k]])

    def normalized_gains(self, k, reference=0):
        """LoS user-IRS gains of user ``k`` divided by the reference user's."""
        return self.U[k, 0, :] / self.U[reference, 0, :]


@dataclass(frozen=True)
class PathGains:
    user_irs: float = 1.0
    irs_ap: float = 1.0
    user_ap: float = 1.0


@dataclass(frozen=True)
class LinkGeometry:
    """IRS at the origin, AP on the x axis, users on a semicircle around the IRS."""

    D1: float = 1.5
    D2: float = 50.0
    user_angle_deg: float = 90.0
    alpha1: float = 2.2
    alpha2: float = 2.4
    alpha3: float = 3.5
    gamma0: float = 1e-3

    @property
    def D3(self):
        phi = math.radians(self.user_angle_deg)
        return math.hypot(self.D2 - self.D1 * math.cos(phi), self.D1 * math.sin(phi))

    def gains(self, config):
        # the eta elements of a sub-surface add their powers on the IRS-AP hop
        return PathGains(
            user_irs=self.gamma0 * self.D1 ** -self.alpha1,
            irs_ap=config.eta * self.gamma0 * self.D2 ** -self.alpha2,
            user_ap=self.gamma0 * self.D3 ** -self.alpha3,
        )

    def snr(self, config):
        return link_budget(config, self.D1, self.D2, self.D3, self.alpha1, self.alpha2, self.alpha3, self.gamma0)

    def power_for_snr(self, config, snr_db):
        """Transmit power that yields ``snr_db`` for the given noise power."""
        unit = link_budget(
            replace(config, P=1.0), self.D1, self.D2, self.D3,
            self.alpha1, self.alpha2, self.alpha3, self.gamma0,
        )
        return 10 ** (snr_db / 10) / unit


def exponential_pdp(taps, decay):
    if taps < 1:
        raise InvalidArgumentError("a power delay profile needs at least one tap")
    if decay <= 0:
        raise InvalidArgumentError("decay must be positive")
    profile = float(decay) ** -np.arange(taps, dtype=float)
    return profile / profile.sum()


def sample_rayleigh_taps(taps, profile, rng, size=None):
    """CSCG taps with per-tap variance ``profile``; ``size`` adds leading draw axes."""
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (taps,):
        raise InvalidArgumentError(f"profile has {profile.size} entries, expected {taps}")
    if abs(profile.sum() - 1.0) > 1e-9:
        raise InvalidArgumentError("profile must sum to 1")
    shape = (taps,) if size is None else tuple(np.atleast_1d(size)) + (taps,)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(profile / 2) * z


def sample_rician_user_irs(L2, M, kappa, rng, decay=2.0):
    """L2 x M user-IRS taps: LoS first row with random phase, Rayleigh NLoS below."""
    if L2 < 1:
        raise InvalidArgumentError("the user-IRS link needs at least one tap")
    if kappa <= 0:
        raise InvalidArgumentError("kappa must be positive")
    los_power = kappa / (kappa + 1) if L2 > 1 else 1.0
    phases = rng.uniform(0.0, 2 * np.pi, size=M)
    U = np.empty((L2, M), dtype=complex)
    U[0] = np.sqrt(los_power) * np.exp(1j * phases)
    if L2 > 1:
        profile = exponential_pdp(L2 - 1, decay)
        nlos = sample_rayleigh_taps(L2 - 1, profile, rng, size=M)  # M x (L2-1)
        U[1:] = np.sqrt(1 / (kappa + 1)) * nlos.T
    return U


def cascade(u_col, g_col, L):
    u_col = np.asarray(u_col)
    g_col = np.asarray(g_col)
    span = u_col.size + g_col.size - 1
    if L < span:
        raise InvalidArgumentError(f"target length {L} is shorter than the cascade span {span}")
    out = np.zeros(L, dtype=complex)
    out[:span] = np.convolve(u_col, g_col)
    return out


def superimpose(Q, theta, d):
    Q = np.asarray(Q)
    theta = np.asarray(theta)
    d = np.asarray(d)
    if Q.ndim != 2 or theta.shape != (Q.shape[1],) or d.shape != (Q.shape[0],):
        raise InvalidArgumentError(
            f"shape mismatch: Q {Q.shape}, theta {theta.shape}, d {d.shape}"
        )
    return Q @ theta + d


def link_budget(config, D1, D2, D3, alpha1, alpha2, alpha3, gamma0):
    """Average received pilot-tone SNR (linear)."""
    if min(D1, D2, D3) <= 0:
        raise InvalidArgumentError("link distances must be positive")
    if min(alpha1, alpha2, alpha3) <= 0 or gamma0 <= 0:
        raise InvalidArgumentError("path-loss exponents and gamma0 must be positive")
    if config.sigma2 <= 0:
        raise InvalidArgumentError("the SNR is undefined without noise")
    reflected = config.M0 * gamma0 ** 2 * D1 ** -alpha1 * D2 ** -alpha2
    direct = gamma0 * D3 ** -alpha3
    return config.P * (reflected + direct) / (config.sigma2 * config.N)


def draw_realization(config, rng, gains=None):
    gains = gains or PathGains()
    K, M, L = config.K, config.M, config.L

    pdp_d = exponential_pdp(config.Ld, config.decay)
    pdp_g = exponential_pdp(config.L1, config.decay)

    d = np.zeros((K, L), dtype=complex)
    d[:, :config.Ld] = np.sqrt(gains.user_ap) * sample_rayleigh_taps(config.Ld, pdp_d, rng, size=K)
    G = np.sqrt(gains.irs_ap) * sample_rayleigh_taps(config.L1, pdp_g, rng, size=M).T
    U = np.stack([
        np.sqrt(gains.user_irs) * sample_rician_user_irs(config.L2, M, config.kappa, rng, config.decay)
        for _ in range(K)
    ])
    Q = np.empty((K, L, M), dtype=complex)
    for k in range(K):
        for m in range(M):
            Q[k, :, m] = cascade(U[k, :, m], G[:, m], L)
    return ChannelRealization(d=d, G=G, U=U, Q=Q)


def q1_sampler(config):
    """Callable drawing a reference cascaded channel Q_1 (L x M) from ``rng``."""
    pdp_g = exponential_pdp(config.L1, config.decay)
    L, M = config.L, config.M

    def sample(rng):
        G = sample_rayleigh_taps(config.L1, pdp_g, rng, size=M).T
        u = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=M))
        Q1 = np.zeros((L, M), dtype=complex)
        Q1[:config.L1] = G * u
        return Q1

    return sample
