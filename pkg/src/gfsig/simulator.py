"""Uplink synthesis for the non-coherent access model.

A trial draws a K-subset of active devices, one symbol index per active
device, a block-fading channel shared by each device's Q signature slots,
and produces Y = sqrt(L) S Gamma^(1/2) H + W. Randomness comes from
counter-based streams keyed on (base_seed, ..., purpose), so trials are
reproducible and order-independent under parallel execution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PURPOSE_ACTIVITY = 1
PURPOSE_CHANNEL = 2
PURPOSE_NOISE = 3
PURPOSE_DETECTOR = 4
PURPOSE_GEN = 5


def trial_rng(base_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (base_seed, *keys); same keys, same stream."""
    entropy = [int(base_seed)] + [int(k) for k in keys]
    if any(k < 0 for k in entropy):
        raise ValueError("seed keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """i.i.d. CN(0, var): two real normals scaled by sqrt(var / 2) each."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ActivityPattern:
    """Per-device indicator vectors, each all-zero or one-hot."""

    indicators: np.ndarray  # (N_d, Q) of {0, 1}
    active_set: np.ndarray  # sorted device indices with a nonzero indicator

    @property
    def n_devices(self) -> int:
        return self.indicators.shape[0]

    @property
    def q_per_device(self) -> int:
        return self.indicators.shape[1]

    @property
    def k(self) -> int:
        return self.active_set.size


@dataclass(frozen=True)
class ChannelRealization:
    """Channel rows grouped Q at a time; rows within a group are identical."""

    H: np.ndarray  # (N_d * Q, M) complex
    g: np.ndarray  # (N_d,) large-scale gains
    q_per_device: int


@dataclass(frozen=True)
class ReceivedSignal:
    Y: np.ndarray  # (L, M) complex
    sigma_w2: float


def draw_activity(n_devices: int, k_active: int, q_per_device: int,
                  rng: np.random.Generator) -> ActivityPattern:
    """Uniform K-subset of active devices, each picking a symbol uniformly."""
    if not 0 <= k_active <= n_devices:
        raise ValueError(f"need 0 <= K <= N_d, got K={k_active}, N_d={n_devices}")
    if q_per_device < 1:
        raise ValueError("q_per_device must be >= 1")
    active = np.sort(rng.choice(n_devices, size=k_active, replace=False))
    indicators = np.zeros((n_devices, q_per_device), dtype=np.int8)
    if k_active:
        qs = rng.integers(0, q_per_device, size=k_active)
        indicators[active, qs] = 1
    return ActivityPattern(indicators, active)


def draw_channel(n_devices: int, n_antennas: int, q_per_device: int,
                 g: np.ndarray | None = None,
                 rng: np.random.Generator | None = None) -> ChannelRealization:
    """One CN(0, I_M) vector per device, replicated across its Q rows."""
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    if rng is None:
        rng = np.random.default_rng()
    if g is None:
        g = np.ones(n_devices)
    else:
        g = np.asarray(g, dtype=float)
        if g.shape != (n_devices,):
            raise ValueError("g must have one entry per device")
    h = complex_normal(rng, (n_devices, n_antennas))
    H = np.repeat(h, q_per_device, axis=0)
    return ChannelRealization(H, g, q_per_device)


def synthesize(S, activity: ActivityPattern, channel: ChannelRealization,
               sigma_w2: float, rng: np.random.Generator) -> ReceivedSignal:
    """Y = sqrt(L) S Gamma^(1/2) H + W for unit-norm signature columns.

    Columns are rescaled to norm sqrt(L) here, never in the stored matrix.
    """
    A = np.asarray(getattr(S, "entries", S))
    L, N = A.shape
    if sigma_w2 < 0:
        raise ValueError("sigma_w2 must be >= 0")
    nd, q = activity.indicators.shape
    if N != nd * q or channel.H.shape[0] != N:
        raise ValueError("shape mismatch between signatures, activity, and channel")
    gamma_sqrt = (channel.g[:, None] * activity.indicators).reshape(N)
    act = np.flatnonzero(gamma_sqrt)
    Y = np.sqrt(L) * (A[:, act] * gamma_sqrt[act]) @ channel.H[act]
    if sigma_w2 > 0:
        Y = Y + complex_normal(rng, (L, channel.H.shape[1]), var=sigma_w2)
    return ReceivedSignal(Y, sigma_w2)
