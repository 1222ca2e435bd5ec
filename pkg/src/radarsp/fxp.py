"""Signed <W,Z> fixed-point emulation and quantized pipeline variants.

Quantization is applied per arithmetic result (round-to-nearest-even multiple
of the LSB, silent saturation with per-stage counters), which approximates a
vendor MAC/FFT core without modeling its exact internals.  FFT/IFFT butterflies
use the scaled (halve-per-stage) form: with Z=1 stage formats an unscaled
forward transform would saturate structurally under the sequence's coherent
gain, and the halving realizes the library's 1/P inverse-transform convention
exactly.  All block scalings are powers of two.

Formats wider than ~50 fractional bits are emulated only approximately
(float64 carries the values); the word-length study formats are <= 32 bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import clean as cl
from . import doppler as dp
from . import pipelines as pl
from .config import RadarConfig
from .scene import DataCube
from .waveform import PulseTrain


@dataclass(frozen=True)
class FixedPointFormat:
    """Signed <W,Z>: W total bits, Z integer bits (sign included), W-Z fractional."""

    w: int
    z: int

    def __post_init__(self):
        if not (1 <= self.z <= self.w <= 64):
            raise ValueError(f"need 1 <= Z <= W <= 64, got <{self.w},{self.z}>")

    @property
    def frac(self) -> int:
        return self.w - self.z

    @property
    def lsb(self) -> float:
        return 2.0 ** (-self.frac)

    @property
    def vmin(self) -> float:
        return -(2.0 ** (self.z - 1))

    @property
    def vmax(self) -> float:
        return 2.0 ** (self.z - 1) - self.lsb

    def __str__(self):
        return f"<{self.w},{self.z}>"


def quantize(x, fmt: FixedPointFormat):
    """Round-to-nearest-even multiple of the LSB, saturating to the format range."""
    scaled = np.round(np.asarray(x, dtype=float) / fmt.lsb) * fmt.lsb
    return np.clip(scaled, fmt.vmin, fmt.vmax)


FLOAT32 = "f32"   # single-precision stage marker (SPFL)


@dataclass(frozen=True)
class StageFormats:
    """Per-stage precision: a FixedPointFormat, "f32" for single precision,
    or None for double precision passthrough."""

    dbf: object = FixedPointFormat(22, 2)
    fft: object = FixedPointFormat(24, 1)
    cm: object = FixedPointFormat(26, 6)
    ifft: object = FixedPointFormat(32, 1)
    msg: object = FixedPointFormat(32, 12)

    @staticmethod
    def all_float32() -> "StageFormats":
        return StageFormats(dbf=FLOAT32, fft=FLOAT32, cm=FLOAT32, ifft=FLOAT32, msg=FLOAT32)

    @staticmethod
    def all_double() -> "StageFormats":
        return StageFormats(dbf=None, fft=None, cm=None, ifft=None, msg=None)


class StageArith:
    """Quantized complex arithmetic for one stage, with a saturation tally."""

    def __init__(self, fmt):
        self.fmt = fmt
        self.saturations = 0

    def q(self, x):
        """Quantize a real array into the stage format."""
        if self.fmt is None:
            return np.asarray(x, dtype=float)
        if self.fmt == FLOAT32:
            return np.asarray(x, dtype=np.float32).astype(float)
        scaled = np.round(np.asarray(x, dtype=float) / self.fmt.lsb) * self.fmt.lsb
        self.saturations += int(np.count_nonzero((scaled < self.fmt.vmin)
                                                 | (scaled > self.fmt.vmax)))
        return np.clip(scaled, self.fmt.vmin, self.fmt.vmax)

    def qc(self, x):
        x = np.asarray(x, dtype=complex)
        return self.q(x.real) + 1j * self.q(x.imag)

    def cadd(self, a, b):
        return self.q(a.real + b.real) + 1j * self.q(a.imag + b.imag)

    def csub(self, a, b):
        return self.q(a.real - b.real) + 1j * self.q(a.imag - b.imag)

    def cmul(self, a, b):
        """4 real multiplies + 2 adds, each result requantized."""
        rr = self.q(a.real * b.real)
        ii = self.q(a.imag * b.imag)
        ri = self.q(a.real * b.imag)
        ir = self.q(a.imag * b.real)
        return self.q(rr - ii) + 1j * self.q(ri + ir)

    def cadd_half(self, a, b):
        """Scaled butterfly add: (a+b)/2 rounded once (guard-bit accumulator)."""
        return self.q((a.real + b.real) * 0.5) + 1j * self.q((a.imag + b.imag) * 0.5)

    def csub_half(self, a, b):
        return self.q((a.real - b.real) * 0.5) + 1j * self.q((a.imag - b.imag) * 0.5)


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for i in range(bits):
        rev |= ((idx >> i) & 1) << (bits - 1 - i)
    return rev


def fxp_fft(x: np.ndarray, arith: StageArith, inverse: bool = False,
            scaled: bool = True) -> np.ndarray:
    """Radix-2 DIT transform along axis 0 with every butterfly requantized.

    scaled=True halves each stage, so the forward transform computes FFT/P and
    the inverse computes the 1/P-normalized IFFT used throughout the library.
    """
    n = x.shape[0]
    if n & (n - 1):
        raise ValueError("transform length must be a power of two")
    flat = x.ndim == 1
    work = arith.qc(np.asarray(x, dtype=complex).reshape(n, -1)[_bit_reverse(n)])
    sign = 1j if inverse else -1j
    m = 2
    while m <= n:
        half = m // 2
        tw = arith.qc(np.exp(sign * 2 * np.pi * np.arange(half) / m))
        blocks = work.reshape(n // m, m, -1)
        even = blocks[:, :half, :]
        odd = blocks[:, half:, :]
        t = arith.cmul(odd, tw[None, :, None])
        if scaled:
            new_even = arith.cadd_half(even, t)
            new_odd = arith.csub_half(even, t)
        else:
            new_even = arith.cadd(even, t)
            new_odd = arith.csub(even, t)
        blocks[:, :half, :] = new_even
        blocks[:, half:, :] = new_odd
        m *= 2
    return work[:, 0] if flat else work


def _pow2_ceil(x: float) -> int:
    return int(math.ceil(math.log2(x))) if x > 0 else 0


@dataclass
class QuantizedResult:
    detections: list
    saturations: dict[str, int]
    input_scale: float
    map_gain: float            # quantized-map peak per unit physical amplitude


def _fxp_dbf(packet: np.ndarray, weights: np.ndarray, arith: StageArith) -> np.ndarray:
    """MAC across antennas per angle: out[i, p] = sum_l x[p, l] w[i, l], each
    partial sum requantized; returns (I, P)."""
    p, l = packet.shape
    n_angles = weights.shape[0]
    acc = np.zeros((n_angles, p), dtype=complex)
    xq = arith.qc(packet)
    for li in range(l):
        term = arith.cmul(xq[None, :, li], weights[:, li][:, None])
        acc = arith.cadd(acc, term)
    return acc


def _quantized_weights(steer: pl.SteeringMatrix, arith: StageArith, n_ant: int):
    shift = 2.0 ** (-_pow2_ceil(n_ant))
    return arith.qc(steer.w * shift), shift


def _quantized_reference(g_fd0: np.ndarray, arith: StageArith):
    shift = 2.0 ** (-_pow2_ceil(float(np.abs(g_fd0).max())))
    return arith.qc(np.conj(g_fd0) * shift), shift


def run_quantized_pipeline(cube: DataCube, mode: str, formats: StageFormats,
                           train: PulseTrain, cfg: RadarConfig,
                           clean_cfg: cl.CleanConfig,
                           steer: pl.SteeringMatrix | None = None,
                           extract_slow_time: bool = False):
    """CLEAN-based localization with every RA arithmetic stage quantized.

    The input cube is block-normalized by a power of two so the strongest
    sample sits just under half of full scale, mirroring the input scaling the
    stage word lengths presuppose.  Reported detection amplitudes are restored
    to physical scale.  Returns (QuantizedResult, slow_time_list) when
    extract_slow_time is set, else QuantizedResult.
    """
    if mode not in (pl.SARP, pl.MJARP):
        raise ValueError(f"quantized pipeline supports sarp/mjarp, got {mode!r}")
    steer = steer or pl.steering_matrix(cfg)
    ar = {name: StageArith(getattr(formats, name))
          for name in ("dbf", "fft", "cm", "ifft", "msg")}

    x = cube.x
    peak_abs = max(float(np.abs(x.real).max()), float(np.abs(x.imag).max()))
    s_in = 2.0 ** (-(_pow2_ceil(peak_abs) + 1)) if peak_abs > 0 else 1.0

    g_fd0 = np.fft.fft(train.pulses[0])
    w_q, w_shift = _quantized_weights(steer, ar["dbf"], cfg.n_ant)
    g_q, g_shift = _quantized_reference(g_fd0, ar["cm"])
    n = train.occupied_len
    p = cfg.n_fast
    # quantized-chain gain: fft carries an extra 1/P vs the float convention
    map_gain = cfg.n_ant * n * s_in * w_shift * g_shift / p

    packet0 = x[:, :, 0] * s_in

    def mjarp_image(pkt):
        pkt_fd = fxp_fft(pkt, ar["fft"], inverse=False, scaled=True)
        beam = _fxp_dbf(pkt_fd, w_q, ar["dbf"])                     # (I, P)
        filt = ar["cm"].cmul(ar["cm"].qc(beam), g_q[None, :])
        return fxp_fft(filt.T, ar["ifft"], inverse=True, scaled=True).T

    def sarp_image(pkt):
        return _fxp_dbf(pkt, w_q, ar["dbf"])

    detections = []
    if mode == pl.MJARP:
        work = mjarp_image(packet0)
        for _ in range(clean_cfg.max_iters):
            i, p_idx, peak = pl.peak_search_2d(work)
            if abs(peak) < clean_cfg.threshold * map_gain / pl.coherent_gain(cfg, train):
                break
            amp_phys = peak / map_gain
            det = pl.Detection(amp=amp_phys, peak=peak, r_idx=p_idx, phi_idx=i,
                               r_m=p_idx * cfg.range_bin,
                               phi_deg=float(cfg.grid_deg[i]), source="MJARP-FXP")
            detections.append(det)
            psr = cl.psr_synthesize(replace(det, amp=amp_phys * s_in), train, cfg)
            work = ar["ifft"].csub(work, mjarp_image(psr))
    else:
        work = sarp_image(packet0)
        mag_ar = ar["dbf"]
        inv_if = 2.0 ** (-_pow2_ceil(cfg.integration_factor))
        for _ in range(clean_cfg.max_iters):
            sel = work[:, :cfg.integration_factor]
            mags = mag_ar.q(np.sqrt(mag_ar.q(mag_ar.q(sel.real ** 2)
                                             + mag_ar.q(sel.imag ** 2))))
            profile = np.zeros(work.shape[0])
            for col in range(mags.shape[1]):   # streaming accumulation, prescaled
                profile = mag_ar.q(profile + mag_ar.q(mags[:, col] * inv_if))
            i, _ = pl.peak_search_1d(profile)
            y_fd = fxp_fft(work[i], ar["fft"], inverse=False, scaled=True)
            filt = ar["cm"].cmul(ar["cm"].qc(y_fd), g_q)
            gamma = fxp_fft(filt, ar["ifft"], inverse=True, scaled=True)
            p_idx, peak = pl.peak_search_1d(gamma)
            if abs(peak) < clean_cfg.threshold * map_gain / pl.coherent_gain(cfg, train):
                break
            amp_phys = peak / map_gain
            det = pl.Detection(amp=amp_phys, peak=peak, r_idx=p_idx, phi_idx=i,
                               r_m=p_idx * cfg.range_bin,
                               phi_deg=float(cfg.grid_deg[i]), source="SARP-FXP")
            detections.append(det)
            psr = cl.psr_synthesize(replace(det, amp=amp_phys * s_in), train, cfg)
            work = ar["dbf"].csub(work, sarp_image(psr))

    detections.sort(key=lambda d: -abs(d.amp))
    result = QuantizedResult(detections=detections,
                             saturations={k: a.saturations for k, a in ar.items()},
                             input_scale=s_in, map_gain=map_gain)
    if not extract_slow_time:
        return result

    # Selective per-cell processing of the remaining packets in the same stage
    # formats.  The length-P MAC accumulates at full width (hardware keeps a
    # wide accumulator) with the product terms and the final 1/P-normalized
    # output requantized.
    train_fd = np.fft.fft(train.pulses, axis=1)
    slow = []
    fourier_base = np.arange(p)
    for det in detections:
        zeta = np.empty(cfg.n_pulses, dtype=complex)
        zeta[0] = det.peak
        for m in range(1, cfg.n_pulses):
            pkt_fd = fxp_fft(x[:, :, m] * s_in, ar["fft"], inverse=False, scaled=True)
            beam = _fxp_dbf(pkt_fd, w_q[det.phi_idx:det.phi_idx + 1], ar["dbf"])[0]
            g_m, _ = _quantized_reference(train_fd[m], ar["cm"])
            filt = ar["cm"].cmul(ar["cm"].qc(beam), g_m)
            four = ar["ifft"].qc(np.exp(2j * np.pi * fourier_base * det.r_idx / p))
            prods = ar["ifft"].cmul(ar["ifft"].qc(filt), four)
            zeta[m] = complex(ar["ifft"].qc(prods.sum() / p))
        slow.append(dp.SlowTimeVector(zeta=zeta, detection=det))
    return result, slow


def music_spectrum_quantized(eigvecs: np.ndarray, d: int, grid: dp.VelocityGrid,
                             cfg: RadarConfig, fmt) -> tuple[np.ndarray, int]:
    """MUSIC spectrum generation with every MAC requantized in the MSG format.

    Returns (spectrum, saturation_count).  The reciprocal saturates at the
    format maximum when the projection power underflows the LSB.
    """
    k = eigvecs.shape[0]
    if not (1 <= d < k):
        raise ValueError("signal subspace dimension must satisfy 1 <= D < K")
    ar = StageArith(fmt)
    e_n = ar.qc(eigvecs[:, d:])                      # (K, K-D)
    steer = ar.qc(grid.steering(cfg, k))             # (K, n_v)
    n_v = steer.shape[1]
    proj = np.zeros((e_n.shape[1], n_v), dtype=complex)
    for ki in range(k):                              # MAC over the K taps
        term = ar.cmul(np.conj(e_n[ki])[:, None], steer[ki][None, :])
        proj = ar.cadd(proj, term)
    denom = np.zeros(n_v)
    for col in range(proj.shape[0]):
        denom = ar.q(denom + ar.q(ar.q(proj[col].real ** 2)
                                  + ar.q(proj[col].imag ** 2)))
    vmax = np.inf if fmt in (None, FLOAT32) else fmt.vmax
    with np.errstate(divide="ignore"):
        spec = np.where(denom > 0, 1.0 / np.maximum(denom, 1e-300), vmax)
    spec = ar.q(np.minimum(spec, vmax))
    return spec, ar.saturations
