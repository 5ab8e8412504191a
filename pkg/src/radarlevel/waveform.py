"""FMCW chirp model and IF signal synthesis.

Closed-form relations between IF phase, range and radial velocity, plus a
complex-baseband simulator producing one frame of ADC samples for a list of
point scatterers. Velocities are positive for receding targets.
"""

import dataclasses
import enum
import math
from typing import Sequence

import numpy as np
from scipy.constants import speed_of_light as C

from .errors import DimensionError, DomainError, RangeAmbiguityError

__all__ = [
    "C",
    "ChirpConfig",
    "PathClass",
    "ScatterTarget",
    "SampledFrame",
    "delay_to_phase",
    "phase_to_range",
    "phase_diff_to_velocity",
    "synthesize_if_frame",
]


@dataclasses.dataclass(frozen=True)
class ChirpConfig:
    """Parameters of one FMCW frame.

    Defaults describe a 77 GHz sensor sweeping 4 GHz in 50 us with 256
    complex samples per chirp and 64 chirps per frame.
    """

    start_frequency_hz: float = 77e9
    bandwidth_hz: float = 4e9
    chirp_duration_s: float = 50e-6
    samples_per_chirp: int = 256
    chirps_per_frame: int = 64
    frame_rate_hz: float = 10.0

    def __post_init__(self):
        for name in ("start_frequency_hz", "bandwidth_hz", "chirp_duration_s", "frame_rate_hz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if int(self.samples_per_chirp) != self.samples_per_chirp or self.samples_per_chirp < 2:
            raise DomainError("samples_per_chirp must be an integer >= 2")
        if int(self.chirps_per_frame) != self.chirps_per_frame or self.chirps_per_frame < 1:
            raise DomainError("chirps_per_frame must be an integer >= 1")

    @property
    def wavelength_m(self) -> float:
        return C / self.start_frequency_hz

    @property
    def slope_hz_per_s(self) -> float:
        return self.bandwidth_hz / self.chirp_duration_s

    @property
    def sample_rate_hz(self) -> float:
        # samples span the whole chirp
        return self.samples_per_chirp / self.chirp_duration_s

    @property
    def range_bin_width_m(self) -> float:
        return C / (2.0 * self.bandwidth_hz)

    @property
    def max_range_m(self) -> float:
        """Unambiguous range of complex sampling: beat frequency below the sample rate."""
        return self.samples_per_chirp * self.range_bin_width_m

    @property
    def velocity_bin_width_mps(self) -> float:
        return self.wavelength_m / (2.0 * self.chirps_per_frame * self.chirp_duration_s)

    @property
    def in_sensor_band(self) -> bool:
        """True when the start frequency lies in the 76-81 GHz automotive band."""
        return 76e9 <= self.start_frequency_hz <= 81e9

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ChirpConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DomainError(f"unknown ChirpConfig fields: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("samples_per_chirp", "chirps_per_frame"):
            if key in kwargs:
                kwargs[key] = int(kwargs[key])
        return cls(**kwargs)


class PathClass(str, enum.Enum):
    DIRECT_SURFACE = "direct_surface"
    SUBSURFACE = "subsurface"
    NEAR_SENSOR_NOISE = "near_sensor_noise"
    MULTIPATH = "multipath"


@dataclasses.dataclass(frozen=True)
class ScatterTarget:
    """A point scatterer.

    For multipath returns ``range_m`` is the apparent (longer) path length,
    not the geometric distance.
    """

    range_m: float
    radial_velocity_mps: float = 0.0
    amplitude: float = 1.0
    path_class: PathClass = PathClass.DIRECT_SURFACE

    def __post_init__(self):
        if not (math.isfinite(self.range_m) and self.range_m >= 0):
            raise DomainError(f"range_m must be finite and >= 0, got {self.range_m!r}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise DomainError(f"amplitude must be finite and >= 0, got {self.amplitude!r}")
        if not math.isfinite(self.radial_velocity_mps):
            raise DomainError("radial_velocity_mps must be finite")
        object.__setattr__(self, "path_class", PathClass(self.path_class))


@dataclasses.dataclass(frozen=True)
class SampledFrame:
    config: ChirpConfig
    samples: np.ndarray
    frame_timestamp_s: float = 0.0

    def __post_init__(self):
        shape = (self.config.chirps_per_frame, self.config.samples_per_chirp)
        if self.samples.shape != shape:
            raise DimensionError(f"samples shape {self.samples.shape} does not match config {shape}")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("frame contains non-finite samples")


def _check_finite(**values):
    for name, v in values.items():
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")


def delay_to_phase(tau_s: float, f_c_hz: float) -> float:
    """Initial IF phase ``2*pi*f_c*tau`` in radians, not wrapped."""
    _check_finite(tau_s=tau_s, f_c_hz=f_c_hz)
    if tau_s < 0:
        raise DomainError(f"delay must be >= 0, got {tau_s!r}")
    if f_c_hz <= 0:
        raise DomainError(f"start frequency must be > 0, got {f_c_hz!r}")
    return 2.0 * math.pi * f_c_hz * tau_s


def phase_to_range(phi0: float, wavelength_m: float) -> float:
    """Range ``lambda*phi0/(4*pi)`` from an unwrapped IF phase."""
    _check_finite(phi0=phi0, wavelength_m=wavelength_m)
    if wavelength_m <= 0:
        raise DomainError(f"wavelength must be > 0, got {wavelength_m!r}")
    return wavelength_m * phi0 / (4.0 * math.pi)


def phase_diff_to_velocity(delta_phi: float, wavelength_m: float, chirp_duration_s: float) -> float:
    """Radial velocity from the phase step between consecutive chirps.

    Positive phase steps (growing range) give positive, receding velocities.
    """
    _check_finite(delta_phi=delta_phi, wavelength_m=wavelength_m, chirp_duration_s=chirp_duration_s)
    if wavelength_m <= 0 or chirp_duration_s <= 0:
        raise DomainError("wavelength and chirp duration must be > 0")
    return wavelength_m * delta_phi / (4.0 * math.pi * chirp_duration_s)


def synthesize_if_frame(
    config: ChirpConfig,
    targets: Sequence[ScatterTarget],
    noise_std: float = 0.0,
    seed: int = 0,
    frame_timestamp_s: float = 0.0,
) -> SampledFrame:
    """Complex-baseband IF samples of one frame.

    Each target adds a tone at the beat frequency ``2*S*d/c`` with initial
    phase ``4*pi*d/lambda`` and a per-chirp phase advance of
    ``4*pi*v*T_c/lambda``. Ranges are held fixed within the frame. Noise is
    circular complex Gaussian with ``E|n|^2 = noise_std**2``.
    """
    if not (math.isfinite(noise_std) and noise_std >= 0):
        raise DomainError(f"noise_std must be finite and >= 0, got {noise_std!r}")
    n_chirps, n_samples = config.chirps_per_frame, config.samples_per_chirp
    samples = np.zeros((n_chirps, n_samples), dtype=complex)

    lam = config.wavelength_m
    t = np.arange(n_samples) / config.sample_rate_hz
    m = np.arange(n_chirps)[:, None]
    for target in targets:
        if target.range_m >= config.max_range_m:
            raise RangeAmbiguityError(
                f"target at {target.range_m} m is beyond the unambiguous range {config.max_range_m:.4f} m"
            )
        f_beat = 2.0 * config.slope_hz_per_s * target.range_m / C
        phi0 = 4.0 * math.pi * target.range_m / lam
        dphi = 4.0 * math.pi * target.radial_velocity_mps * config.chirp_duration_s / lam
        samples += target.amplitude * np.exp(1j * (2.0 * math.pi * f_beat * t[None, :] + phi0 + dphi * m))

    if noise_std > 0:
        rng = np.random.default_rng(seed)
        scale = noise_std / math.sqrt(2.0)
        samples += rng.normal(0.0, scale, samples.shape) + 1j * rng.normal(0.0, scale, samples.shape)
    return SampledFrame(config, samples, frame_timestamp_s)
