"""Scene synthesis: targets, Rician channel, clutter and the received data cube."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RadarConfig
from .waveform import PulseTrain

SCNR_CAP_DB = 300.0  # returned when the noise+clutter floor is exactly zero


def dbm_to_linear(p_dbm: float) -> float:
    """dBm -> linear mW; -inf maps to 0."""
    if p_dbm == -math.inf:
        return 0.0
    return 10.0 ** (p_dbm / 10.0)


def linear_to_dbm(p_mw: float) -> float:
    if p_mw <= 0.0:
        return -math.inf
    return 10.0 * math.log10(p_mw)


@dataclass(frozen=True)
class Target:
    """Point scatterer at range r (m), azimuth phi (deg), radial speed v (m/s)."""

    r: float
    phi_deg: float
    v: float
    sigma_mean: float        # mean RCS (m^2), Swerling-1
    is_clutter: bool = False

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("target range must be positive")
        if self.sigma_mean <= 0:
            raise ValueError("mean RCS must be positive")
        if self.is_clutter and self.v != 0.0:
            object.__setattr__(self, "v", 0.0)

    def validate(self, cfg: RadarConfig):
        if self.r > cfg.r_max:
            raise ValueError(f"target at {self.r:.1f} m beyond r_max={cfg.r_max:.1f} m")
        if not (cfg.fov_deg[0] <= self.phi_deg <= cfg.fov_deg[1]):
            raise ValueError(f"target azimuth {self.phi_deg} outside field of view")


@dataclass(frozen=True)
class ChannelModel:
    """Path-loss amplitude, Rician LOS/NLOS split, noise and clutter powers.

    `amplitude` lumps transmit power and antenna gains: the LOS echo amplitude
    of a target is amplitude*sqrt(sigma)/r^2.  `kappa` is the linear Rician
    factor; the NLOS coefficient is one complex-Gaussian draw per target per
    cube (block fading) at mean power `clutter_dbm`.
    """

    amplitude: float
    kappa: float = field(default=10 ** (2.0 / 10.0))   # 2 dB
    noise_dbm: float = -98.0
    clutter_dbm: float = -98.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("Rician factor must be non-negative")

    @property
    def los_weight(self) -> float:
        if math.isinf(self.kappa):
            return 1.0
        return math.sqrt(self.kappa / (self.kappa + 1.0))

    @property
    def nlos_weight(self) -> float:
        if math.isinf(self.kappa):
            return 0.0
        return math.sqrt(1.0 / (self.kappa + 1.0))


@dataclass(frozen=True)
class DataCube:
    """Received complex cube X[p, l, m] (fast time x antenna x slow time)."""

    x: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 3:
            raise ValueError("data cube must be 3-D (P, L, M)")


def calibrated_amplitude(cfg: RadarConfig, ps_ref_dbm: float = -90.0) -> float:
    """Amplitude constant making a unit-RCS target at r_max return ps_ref_dbm."""
    return math.sqrt(dbm_to_linear(ps_ref_dbm)) * cfg.r_max ** 2


def make_channel(cfg: RadarConfig, noise_dbm: float, kappa_db: float | None = 2.0,
                 clutter_dbm: float = -98.0, ps_ref_dbm: float = -90.0) -> ChannelModel:
    """Channel with the amplitude calibrated against this radar's r_max.

    kappa_db=None means a pure-LOS channel (kappa -> infinity).
    """
    kappa = math.inf if kappa_db is None else 10 ** (kappa_db / 10.0)
    return ChannelModel(amplitude=calibrated_amplitude(cfg, ps_ref_dbm), kappa=kappa,
                        noise_dbm=noise_dbm, clutter_dbm=clutter_dbm)


def sample_rcs(sigma_mean: float, rng: np.random.Generator) -> float:
    """One Swerling-1 draw: exponential with the given mean."""
    if sigma_mean <= 0:
        raise ValueError("mean RCS must be positive")
    return rng.exponential(sigma_mean)


def target_signal_power(chan: ChannelModel, sigma: float, r: float) -> float:
    """Per-sample LOS echo power A^2*sigma/r^4 (linear mW), before the Rician split."""
    return chan.amplitude ** 2 * sigma / r ** 4


def scnr(cfg: RadarConfig, chan: ChannelModel, sigma_mean: float) -> float:
    """System SCNR in dB: Ps/(Pn+Pc) with Ps = A^2<sigma>/r_max^4.

    Saturates at SCNR_CAP_DB when both noise and clutter power are zero.
    """
    ps = target_signal_power(chan, sigma_mean, cfg.r_max)
    floor = dbm_to_linear(chan.noise_dbm) + dbm_to_linear(chan.clutter_dbm)
    if floor == 0.0:
        return SCNR_CAP_DB
    return min(10.0 * math.log10(ps / floor), SCNR_CAP_DB)


def synthesize_cube(cfg: RadarConfig, targets: list[Target], chan: ChannelModel,
                    train: PulseTrain, rng: np.random.Generator,
                    rcs_draws: list[float] | None = None) -> DataCube:
    """Simulate the received P x L x M cube for one coherent interval.

    Per target: LOS amplitude A*sqrt(sigma)/r^2 weighted sqrt(kappa/(kappa+1))
    plus one NLOS complex-Gaussian coefficient at mean power clutter_dbm
    weighted sqrt(1/(kappa+1)); the per-pulse sequence is delayed by the
    two-way range bin, phased across the ULA by the azimuth and across slow
    time by the Doppler velocity.  White complex noise at noise_dbm is added.

    rcs_draws overrides the Swerling-1 sampling (one sigma per target);
    by default each call redraws every RCS.
    """
    p, l, m = cfg.n_fast, cfg.n_ant, cfg.n_pulses
    if train.pulses.shape != (m, p):
        raise ValueError("pulse train does not match the radar configuration")
    if rcs_draws is not None and len(rcs_draws) != len(targets):
        raise ValueError("rcs_draws must supply one value per target")

    cube = np.zeros((p, l, m), dtype=complex)
    ant_idx = np.arange(l)
    pulse_idx = np.arange(m)
    nlos_sigma = math.sqrt(dbm_to_linear(chan.clutter_dbm))

    for t_i, tgt in enumerate(targets):
        tgt.validate(cfg)
        delay = cfg.delay_bin(tgt.r)
        if delay >= p:
            raise ValueError(
                f"target at {tgt.r:.1f} m maps to fast-time bin {delay} >= {p}")
        sigma = rcs_draws[t_i] if rcs_draws is not None else sample_rcs(tgt.sigma_mean, rng)
        los = chan.amplitude * math.sqrt(sigma) / tgt.r ** 2
        rho = nlos_sigma * (rng.standard_normal() + 1j * rng.standard_normal()) / math.sqrt(2)
        amp = los * chan.los_weight + rho * chan.nlos_weight

        ant_phase = np.exp(1j * 2 * np.pi / cfg.wavelength
                           * ant_idx * cfg.spacing * math.sin(math.radians(tgt.phi_deg)))
        dopp_phase = np.exp(1j * 4 * np.pi / cfg.wavelength * tgt.v * pulse_idx * cfg.pri)
        # delayed copy of each pulse row, truncated at the window edge
        shifted = np.zeros((p, m), dtype=complex)
        shifted[delay:, :] = train.pulses[:, :p - delay].T
        cube += amp * shifted[:, None, :] * ant_phase[None, :, None] * dopp_phase[None, None, :]

    noise_sigma = math.sqrt(dbm_to_linear(chan.noise_dbm))
    if noise_sigma > 0:
        noise = (rng.standard_normal((p, l, m)) + 1j * rng.standard_normal((p, l, m)))
        cube += noise * (noise_sigma / math.sqrt(2))
    return DataCube(cube)


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def load_scenario(source) -> tuple[RadarConfig, list[Target], ChannelModel]:
    """Read a scenario from a JSON path or an already-parsed dict.

    Schema:
      {"targets": [{"r":, "phi":, "v":, "sigma_mean":, "is_clutter":}, ...],
       "channel": {"kappa_db":, "noise_dbm":, "clutter_dbm":, "ps_ref_dbm":},
       "radar":   {"P":, "L":, "M":, "delta_tau":, "tau_pri":, "wavelength":,
                   "spacing":, "grid_step":, "fov":, "integration_factor":}}
    All fields optional; omitted ones take the library defaults.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "read"):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = dict(source)

    radar = doc.get("radar", {})
    kwargs = {}
    mapping = {"P": "n_fast", "L": "n_ant", "M": "n_pulses",
               "delta_tau": "sample_period", "tau_pri": "pri",
               "wavelength": "wavelength", "spacing": "spacing",
               "grid_step": "grid_step_deg", "integration_factor": "integration_factor"}
    for key, attr in mapping.items():
        if key in radar:
            kwargs[attr] = radar[key]
    if "fov" in radar:
        kwargs["fov_deg"] = tuple(radar["fov"])
    cfg = RadarConfig(**kwargs)

    chan_doc = doc.get("channel", {})
    chan = make_channel(cfg,
                        noise_dbm=chan_doc.get("noise_dbm", -98.0),
                        kappa_db=chan_doc.get("kappa_db", 2.0),
                        clutter_dbm=chan_doc.get("clutter_dbm", -98.0),
                        ps_ref_dbm=chan_doc.get("ps_ref_dbm", -90.0))

    targets = [Target(r=t["r"], phi_deg=t["phi"], v=t.get("v", 0.0),
                      sigma_mean=t["sigma_mean"], is_clutter=t.get("is_clutter", False))
               for t in doc.get("targets", [])]
    for tgt in targets:
        tgt.validate(cfg)
    return cfg, targets, chan
