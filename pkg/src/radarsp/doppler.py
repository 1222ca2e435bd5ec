"""Doppler velocity estimation: slow-time extraction, spatial smoothing,
Givens-rotation QR, the QR eigenvalue iteration, MUSIC, and an FFT baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from . import pipelines as pl
from .config import RadarConfig
from .waveform import PulseTrain


class ConvergenceError(RuntimeError):
    """QR eigenvalue iteration ran out of iterations."""

    def __init__(self, iterations: int, off_diag: float):
        self.iterations = iterations
        self.off_diag = off_diag
        super().__init__(f"EVD did not converge after {iterations} iterations "
                         f"(max off-diagonal {off_diag:.3e})")


@dataclass
class SlowTimeVector:
    zeta: np.ndarray               # (M,) complex
    detection: pl.Detection


@dataclass(frozen=True)
class SmoothedCovariance:
    u: np.ndarray                  # (K, K) Hermitian
    k: int
    n_sub: int


@dataclass(frozen=True)
class QrFactors:
    q: np.ndarray                  # unitary
    r: np.ndarray                  # upper triangular


@dataclass(frozen=True)
class VelocityGrid:
    v_min: float = -50.0
    v_max: float = 50.0
    step: float = 0.3

    def __post_init__(self):
        if self.step <= 0 or self.v_max <= self.v_min:
            raise ValueError("velocity grid must be non-empty with positive step")

    @property
    def velocities(self) -> np.ndarray:
        n = int(math.floor((self.v_max - self.v_min) / self.step + 1e-9)) + 1
        return self.v_min + self.step * np.arange(n)

    def steering(self, cfg: RadarConfig, k: int) -> np.ndarray:
        """a(v)[m] = e^{j 4pi/lambda v m tau_PRI}; shape (k, n_velocities)."""
        m = np.arange(k)
        return np.exp(1j * 4 * np.pi / cfg.wavelength * cfg.pri
                      * np.outer(m, self.velocities))


def slow_time_vectors(cube_fd: np.ndarray, detections: list[pl.Detection],
                      train_fd: np.ndarray, steer: pl.SteeringMatrix, cfg: RadarConfig,
                      counter: pl.OpCounter | None = None) -> list[SlowTimeVector]:
    """Per-detection slow-time vector: zeta[0] from the first-packet map cell,
    zeta[m>=1] by single-cell selective processing of packet m."""
    if not detections:
        raise ValueError("no detections to extract slow-time vectors for")
    out = []
    for det in detections:
        zeta = np.empty(cfg.n_pulses, dtype=complex)
        zeta[0] = det.peak
        for m in range(1, cfg.n_pulses):
            zeta[m] = pl.mjarp_slow_time_sample(cube_fd[:, :, m], steer.w[det.phi_idx],
                                                train_fd[m], det.r_idx, counter)
        out.append(SlowTimeVector(zeta=zeta, detection=det))
    return out


def spatial_smooth(zeta: np.ndarray, k: int) -> SmoothedCovariance:
    """Forward smoothing: average the outer products of all length-k subvectors."""
    m = len(zeta)
    if not (1 < k < m):
        raise ValueError(f"snapshot length must satisfy 1 < K < M, got K={k}, M={m}")
    n_sub = m - k + 1
    snaps = np.lib.stride_tricks.sliding_window_view(zeta, k)   # (n_sub, k)
    u = snaps.T @ snaps.conj() / n_sub                          # sum of z z^H
    u = (u + u.conj().T) / 2
    return SmoothedCovariance(u=u, k=k, n_sub=n_sub)


def complex_sqrt_polar(z: complex) -> complex:
    """Principal square root via the polar half-angle identities:
    sqrt((|z|+Re z)/2) + j*sign(Im z)*sqrt((|z|-Re z)/2)."""
    z = complex(z)
    r = abs(z)
    re = math.sqrt(max((r + z.real) / 2.0, 0.0))
    im = math.sqrt(max((r - z.real) / 2.0, 0.0))
    if z.imag < 0:
        im = -im
    return complex(re, im)


def givens_qr(u: np.ndarray) -> QrFactors:
    """QR factorization by K(K-1)/2 plane rotations applied to row pairs.

    Each rotation zeroes one subdiagonal element using c = u_nn / r and
    s = u_mn / r with r = sqrt(|u_nn|^2 + |u_mn|^2) (complex_sqrt_polar of the
    magnitude sum), updating only the two selected rows.  Rotations whose
    target element is already zero are skipped as identities.
    """
    k = u.shape[0]
    if u.ndim != 2 or u.shape[1] != k:
        raise ValueError("input must be square")
    r_mat = np.array(u, dtype=complex)
    q = np.eye(k, dtype=complex)
    tiny = np.finfo(float).tiny
    for nu in range(k - 1):
        for mu in range(nu + 1, k):
            a = r_mat[nu, nu]
            b = r_mat[mu, nu]
            if abs(b) <= tiny:
                r_mat[mu, nu] = 0.0
                continue
            rot = complex_sqrt_polar(abs(a) ** 2 + abs(b) ** 2)
            c = a / rot
            s = b / rot
            row_n = r_mat[nu].copy()
            row_m = r_mat[mu].copy()
            r_mat[nu] = np.conj(c) * row_n + np.conj(s) * row_m
            r_mat[mu] = -s * row_n + c * row_m
            r_mat[mu, nu] = 0.0
            col_n = q[:, nu].copy()
            col_m = q[:, mu].copy()
            q[:, nu] = col_n * c + col_m * s
            q[:, mu] = -col_n * np.conj(s) + col_m * np.conj(c)
    return QrFactors(q=q, r=r_mat)


def _wilkinson_shift(a: complex, b: complex, c: complex) -> float:
    """Shift from the trailing Hermitian 2x2 [[a, b], [b*, c]]: the eigenvalue
    closer to c."""
    d = (a.real - c.real) / 2.0
    bb = abs(b) ** 2
    if d == 0.0 and bb == 0.0:
        return c.real
    denom = d + math.copysign(1.0, d if d != 0 else 1.0) * math.sqrt(d * d + bb)
    return c.real - bb / denom


def evd_qr_algorithm(u: np.ndarray, tol: float = 1e-12, max_iters: int = 500,
                     shift: str = "wilkinson") -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition by iterated Givens-QR similarity transforms.

    Iterates A <- R Q (plus shift bookkeeping) accumulating V <- V Q until all
    off-diagonal magnitudes fall below tol * ||U||_F.  shift="wilkinson"
    (default) adds the standard trailing-2x2 shift with deflation; the plain
    unshifted sweep of the original description is kept as shift="none" but
    stalls on +/- eigenvalue pairs of equal magnitude.  Returns eigenvalues in
    descending order with the matching unitary eigenvector columns.
    """
    k = u.shape[0]
    scale = np.linalg.norm(u)
    if scale == 0:
        return np.zeros(k), np.eye(k, dtype=complex)
    if np.abs(u - u.conj().T).max() > 1e-8 * scale:
        raise ValueError("input must be Hermitian")
    a = (np.array(u, dtype=complex) + np.array(u, dtype=complex).conj().T) / 2
    v = np.eye(k, dtype=complex)
    thresh = tol * scale
    iters = 0

    if shift == "none":
        while True:
            off = _max_offdiag(a)
            if off < thresh:
                break
            if iters >= max_iters:
                raise ConvergenceError(iters, off)
            fac = givens_qr(a)
            a = fac.r @ fac.q
            a = (a + a.conj().T) / 2
            v = v @ fac.q
            iters += 1
    elif shift == "wilkinson":
        end = k - 1
        while end > 0:
            if np.abs(a[end, :end]).max() < thresh:
                a[end, :end] = 0.0
                a[:end, end] = 0.0
                end -= 1
                continue
            if iters >= max_iters:
                raise ConvergenceError(iters, _max_offdiag(a))
            mu = _wilkinson_shift(a[end - 1, end - 1], a[end - 1, end], a[end, end])
            block = a[:end + 1, :end + 1]
            fac = givens_qr(block - mu * np.eye(end + 1))
            block = fac.r @ fac.q + mu * np.eye(end + 1)
            a[:end + 1, :end + 1] = (block + block.conj().T) / 2
            v[:, :end + 1] = v[:, :end + 1] @ fac.q
            iters += 1
    else:
        raise ValueError(f"unknown shift strategy {shift!r}")

    eigvals = np.real(np.diag(a))
    order = np.argsort(-eigvals)
    return eigvals[order], v[:, order]


def _max_offdiag(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.abs(a[mask]).max()) if a.shape[0] > 1 else 0.0


def music_spectrum(eigvecs: np.ndarray, d: int, grid: VelocityGrid,
                   cfg: RadarConfig) -> np.ndarray:
    """MUSIC pseudo-spectrum over the velocity grid.

    spectrum(v) = 1 / (a(v)^H E_n E_n^H a(v)) with E_n the eigenvector columns
    d..K-1 (noise subspace); eigvecs must be sorted by descending eigenvalue.
    """
    k = eigvecs.shape[0]
    if not (1 <= d < k):
        raise ValueError(f"signal subspace dimension must satisfy 1 <= D < K, got {d}")
    e_n = eigvecs[:, d:]
    steer = grid.steering(cfg, k)                  # (K, n_v)
    proj = e_n.conj().T @ steer                    # (K-D, n_v)
    denom = np.sum(np.abs(proj) ** 2, axis=0)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def spectrum_peaks(spectrum: np.ndarray, grid: VelocityGrid, n_peaks: int | None = None,
                   rel_height: float = 0.0) -> list[tuple[float, float]]:
    """Local maxima as (velocity, value), parabolically interpolated, strongest first."""
    vels = grid.velocities
    idx, _ = find_peaks(spectrum)
    if rel_height > 0 and len(idx):
        idx = idx[spectrum[idx] >= rel_height * spectrum.max()]
    peaks = []
    for i in idx:
        num = spectrum[i - 1] - spectrum[i + 1]
        den = spectrum[i - 1] - 2 * spectrum[i] + spectrum[i + 1]
        frac = 0.5 * num / den if den != 0 else 0.0
        peaks.append((float(vels[i] + frac * grid.step), float(spectrum[i])))
    peaks.sort(key=lambda t: -t[1])
    return peaks[:n_peaks] if n_peaks else peaks


def music_velocity(zeta: np.ndarray, cfg: RadarConfig, grid: VelocityGrid | None = None,
                   k: int | None = None, d: int = 1,
                   evd_kwargs: dict | None = None) -> float:
    """Convenience chain: smooth, EVD, MUSIC spectrum, strongest interpolated peak."""
    grid = grid or VelocityGrid()
    k = k or len(zeta) // 2
    cov = spatial_smooth(zeta, k)
    _, vecs = evd_qr_algorithm(cov.u, **(evd_kwargs or {}))
    spec = music_spectrum(vecs, d, grid, cfg)
    peaks = spectrum_peaks(spec, grid, n_peaks=1)
    if peaks:
        return peaks[0][0]
    return float(grid.velocities[int(np.argmax(spec))])


def fft_doppler(zeta: np.ndarray, grid: VelocityGrid, cfg: RadarConfig,
                return_spectrum: bool = False):
    """Periodogram evaluated on the velocity grid; argmax wins, index 0 on ties.

    Equivalent to a zero-padded FFT sampled at the grid's Doppler frequencies.
    """
    if len(zeta) < 2:
        raise ValueError("need at least two slow-time samples")
    steer = grid.steering(cfg, len(zeta))          # (M, n_v)
    spec = np.abs(steer.conj().T @ zeta) ** 2
    v_hat = float(grid.velocities[int(np.argmax(spec))])
    if return_spectrum:
        return v_hat, spec
    return v_hat


def estimate_velocities(cube_fd: np.ndarray, detections: list[pl.Detection],
                        train: PulseTrain, steer: pl.SteeringMatrix, cfg: RadarConfig,
                        method: str = "fft", grid: VelocityGrid | None = None,
                        d: int = 1) -> list[pl.Detection]:
    """Fill v_mps on each detection from its slow-time vector (in place)."""
    grid = grid or VelocityGrid()
    train_fd = np.fft.fft(train.pulses, axis=1)
    for stv in slow_time_vectors(cube_fd, detections, train_fd, steer, cfg):
        if method == "fft":
            stv.detection.v_mps = fft_doppler(stv.zeta, grid, cfg)
        elif method == "music":
            stv.detection.v_mps = music_velocity(stv.zeta, cfg, grid, d=d)
        else:
            raise ValueError(f"unknown Doppler method {method!r}")
    return detections
