"""Iterative CLEAN: detect the strongest return, model its point spread
response, subtract, repeat until the residue drops below threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pipelines as pl
from .config import RadarConfig
from .scene import ChannelModel, dbm_to_linear
from .waveform import PulseTrain


@dataclass(frozen=True)
class CleanConfig:
    """threshold compares against the raw map-peak magnitude."""

    threshold: float
    max_iters: int = 10

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


def default_threshold(cfg: RadarConfig, chan: ChannelModel, train: PulseTrain,
                      sigma_ref: float = 1.0, margin: float = 0.5) -> float:
    """Stop level: the map peak a minimum-strength target would produce, with margin.

    Ps is a power, the peak search runs on amplitudes, so the calibration is
    sqrt(Ps) times the pipeline's coherent gain (identical for the SARP MF
    output and the MJARP map) times a 0.5 margin.
    """
    ps = chan.amplitude ** 2 * sigma_ref / cfg.r_max ** 4
    return margin * math.sqrt(ps) * pl.coherent_gain(cfg, train)


def psr_synthesize(det: pl.Detection, train: PulseTrain, cfg: RadarConfig) -> np.ndarray:
    """Time-domain dummy return S[p, l] = a-hat * g0[p - r_idx] * e^{j 2pi/lambda l d sin(phi)}."""
    p, l = cfg.n_fast, cfg.n_ant
    if not (0 <= det.r_idx < p):
        raise ValueError("detection range index outside the fast-time window")
    shifted = np.zeros(p, dtype=complex)
    shifted[det.r_idx:] = train.pulses[0, :p - det.r_idx]
    ant_phase = np.exp(1j * 2 * np.pi / cfg.wavelength
                       * np.arange(l) * cfg.spacing * math.sin(math.radians(det.phi_deg)))
    return det.amp * np.outer(shifted, ant_phase)


def _detect_mjarp(work: np.ndarray, cfg: RadarConfig, gain: float) -> pl.Detection:
    i, p_idx, peak = pl.peak_search_2d(work)
    return pl.Detection(amp=peak / gain, peak=peak, r_idx=p_idx, phi_idx=i,
                        r_m=p_idx * cfg.range_bin, phi_deg=float(cfg.grid_deg[i]),
                        source="MJARP")


def _detect_sarp(work: np.ndarray, g_fd0: np.ndarray, cfg: RadarConfig, gain: float,
                 counter: pl.OpCounter | None) -> pl.Detection:
    profile = pl.noncoherent_profile(work, cfg.integration_factor)
    i, _ = pl.peak_search_1d(profile)
    gamma = pl.mf_freq(work[i], g_fd0, counter)
    p_idx, peak = pl.peak_search_1d(gamma)
    return pl.Detection(amp=peak / gain, peak=peak, r_idx=p_idx, phi_idx=i,
                        r_m=p_idx * cfg.range_bin, phi_deg=float(cfg.grid_deg[i]),
                        source="SARP")


def clean_iterate(first_packet: np.ndarray, mode: str, train: PulseTrain,
                  cfg: RadarConfig, clean_cfg: CleanConfig,
                  steer: pl.SteeringMatrix | None = None,
                  counter: pl.OpCounter | None = None) -> list[pl.Detection]:
    """Multi-target extraction on packet 0.

    MJARP works on the full range-azimuth map (PSR re-run through FFT, DBF, MF,
    IFFT); SARP works on the beamformed image (PSR re-run through DBF only).
    Each iteration subtracts the detected target's response from the working
    image; detections come back sorted by decreasing |amp|.
    """
    if mode not in (pl.SARP, pl.MJARP):
        raise ValueError(f"CLEAN supports sarp/mjarp, got {mode!r}")
    steer = steer or pl.steering_matrix(cfg)
    g_fd0 = np.fft.fft(train.pulses[0])
    gain = pl.coherent_gain(cfg, train)

    if mode == pl.MJARP:
        packet_fd = pl.fast_time_fft(first_packet, counter)
        work = pl.jarp_map(packet_fd, steer, g_fd0, counter).vals.copy()
    else:
        work = pl.sarp_dbf(first_packet, steer, counter).vals.copy()

    detections: list[pl.Detection] = []
    for _ in range(clean_cfg.max_iters):
        if mode == pl.MJARP:
            det = _detect_mjarp(work, cfg, gain)
        else:
            det = _detect_sarp(work, g_fd0, cfg, gain, counter)
        if abs(det.peak) < clean_cfg.threshold:
            break
        detections.append(det)
        psr = psr_synthesize(det, train, cfg)
        if mode == pl.MJARP:
            work -= pl.jarp_map(pl.fast_time_fft(psr, counter), steer, g_fd0, counter).vals
        else:
            work -= pl.sarp_dbf(psr, steer, counter).vals
    return sorted(detections, key=lambda d: -abs(d.amp))
