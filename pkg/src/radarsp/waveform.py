"""Complementary Golay pairs and the multi-pulse transmit train."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RadarConfig, _is_pow2


@dataclass(frozen=True)
class GolayPair:
    """Complementary pair: autocorrelations sum to 2N at lag 0 and cancel elsewhere."""

    a: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class PulseTrain:
    """M x P transmit matrix; each row carries one sequence, zero-padded to P."""

    pulses: np.ndarray        # (M, P) complex
    occupied_len: int         # samples carrying the sequence (N <= P/2)


def golay_pair(n: int) -> GolayPair:
    """Build a length-n complementary Golay pair by recursive doubling.

    Seed ([1], [1]); each step maps (a, b) -> ([a b], [a -b]), which provably
    preserves complementarity.  n must be a power of two.
    """
    if not isinstance(n, (int, np.integer)) or not _is_pow2(int(n)):
        raise ValueError(f"Golay length must be a power of two, got {n!r}")
    a = np.ones(1)
    b = np.ones(1)
    while len(a) < n:
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return GolayPair(a.astype(complex), b.astype(complex))


def combined_autocorrelation(pair: GolayPair) -> np.ndarray:
    """R_aa + R_bb over lags -(N-1)..(N-1); lag 0 sits at index N-1."""
    return (np.correlate(pair.a, pair.a, "full")
            + np.correlate(pair.b, pair.b, "full"))


def build_pulse_train(pair: GolayPair, cfg: RadarConfig, alternate: bool = True) -> PulseTrain:
    """Assemble the M x P pulse matrix from a Golay pair.

    With alternate=True pulses cycle a, b, a, b, ... across slow time (the
    stand-in for a Doppler-resilient ordering); otherwise every pulse repeats
    the a sequence.  The matched filter always uses the per-pulse sequence, so
    downstream processing is policy independent.
    """
    if pair.n > cfg.n_fast // 2:
        raise ValueError(
            f"sequence length {pair.n} exceeds half the pulse ({cfg.n_fast // 2} samples)")
    pulses = np.zeros((cfg.n_pulses, cfg.n_fast), dtype=complex)
    for m in range(cfg.n_pulses):
        seq = pair.b if (alternate and m % 2 == 1) else pair.a
        pulses[m, :pair.n] = seq
    return PulseTrain(pulses=pulses, occupied_len=pair.n)


def freq_domain_sequences(train: PulseTrain) -> np.ndarray:
    """Per-pulse P-point forward DFT of the transmit rows (unnormalized)."""
    return np.fft.fft(train.pulses, axis=1)
