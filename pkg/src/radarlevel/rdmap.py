"""Range and Doppler FFT stages and cell-averaging CFAR detection."""

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError
from .filtering import PointCloud
from .waveform import ChirpConfig, SampledFrame

__all__ = [
    "RangeDopplerMap",
    "CfarParams",
    "Detection",
    "range_fft",
    "doppler_fft",
    "range_doppler_map",
    "cfar_threshold_factor",
    "cfar_detect",
    "refine_range",
    "detections_to_points",
]


@dataclasses.dataclass(frozen=True)
class RangeDopplerMap:
    """Complex map indexed ``[doppler_bin, range_bin]``.

    Doppler bins are FFT-shifted: bin ``n_doppler // 2`` is zero velocity.
    """

    cells: np.ndarray
    range_bin_width_m: float
    velocity_bin_width_mps: float
    frame_timestamp_s: float = 0.0

    def __post_init__(self):
        if self.cells.ndim != 2:
            raise DimensionError("range-Doppler map must be 2-D")
        if not (self.range_bin_width_m > 0 and self.velocity_bin_width_mps > 0):
            raise DomainError("bin widths must be positive")
        if not np.all(np.isfinite(self.cells)):
            raise DomainError("map contains non-finite cells")
        self.cells.setflags(write=False)

    @property
    def shape(self):
        return self.cells.shape

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.cells) ** 2

    @property
    def zero_doppler_bin(self) -> int:
        return self.cells.shape[0] // 2

    def range_of(self, range_bin) -> float:
        return range_bin * self.range_bin_width_m

    def velocity_of(self, doppler_bin) -> float:
        return (doppler_bin - self.zero_doppler_bin) * self.velocity_bin_width_mps


@dataclasses.dataclass(frozen=True)
class CfarParams:
    training_cells: int = 8
    guard_cells: int = 2
    probability_false_alarm: float = 1e-3

    def __post_init__(self):
        if self.training_cells < 1:
            raise ConfigurationError("training_cells must be >= 1")
        if self.guard_cells < 0:
            raise ConfigurationError("guard_cells must be >= 0")
        if not 0 < self.probability_false_alarm < 1:
            raise ConfigurationError("probability_false_alarm must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        return cfar_threshold_factor(2 * self.training_cells, self.probability_false_alarm)


@dataclasses.dataclass(frozen=True)
class Detection:
    range_bin: int
    doppler_bin: int
    range_m: float
    velocity_mps: float
    magnitude: float  # linear power


def range_fft(frame: SampledFrame, window: str = "rectangular") -> np.ndarray:
    """FFT over the samples of every chirp; bin k maps to range ``k*c/(2B)``."""
    n = frame.config.samples_per_chirp
    if window == "rectangular":
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
    else:
        raise ConfigurationError(f"unknown window {window!r}")
    return np.fft.fft(frame.samples * w[None, :], axis=1)


def doppler_fft(
    range_profiles: np.ndarray,
    config: ChirpConfig,
    frame_timestamp_s: float = 0.0,
) -> RangeDopplerMap:
    """FFT across chirps for each range bin, shifted so zero velocity is centered."""
    range_profiles = np.asarray(range_profiles)
    if range_profiles.ndim != 2 or range_profiles.shape[0] < 2:
        raise DimensionError("Doppler FFT needs a 2-D array with at least 2 chirps")
    cells = np.fft.fftshift(np.fft.fft(range_profiles, axis=0), axes=0)
    return RangeDopplerMap(
        cells,
        range_bin_width_m=config.range_bin_width_m,
        velocity_bin_width_mps=config.velocity_bin_width_mps,
        frame_timestamp_s=frame_timestamp_s,
    )


def range_doppler_map(frame: SampledFrame, window: str = "rectangular") -> RangeDopplerMap:
    return doppler_fft(range_fft(frame, window), frame.config, frame.frame_timestamp_s)


def cfar_threshold_factor(n_training: int, pfa: float) -> float:
    """CA-CFAR scale factor, exact for exponentially distributed noise power."""
    return n_training * (pfa ** (-1.0 / n_training) - 1.0)


def cfar_detect(rd_map: RangeDopplerMap, params: CfarParams = CfarParams()) -> list:
    """1-D CA-CFAR along range, run independently on every Doppler row.

    A cell is detected when its power exceeds ``alpha`` times the mean power
    of its ``2*training_cells`` reference cells. Cells without a complete
    reference window on both sides are never detected. Detections come back
    ordered by ``(doppler_bin, range_bin)``.
    """
    n_doppler, n_range = rd_map.shape
    T, G = params.training_cells, params.guard_cells
    reach = T + G
    if n_range <= 2 * reach + 1:
        raise ConfigurationError(
            f"range axis of {n_range} bins too short for {T} training and {G} guard cells per side"
        )
    power = rd_map.power
    csum = np.zeros((n_doppler, n_range + 1))
    np.cumsum(power, axis=1, out=csum[:, 1:])

    cut = np.arange(reach, n_range - reach)
    lead = csum[:, cut - G] - csum[:, cut - reach]
    lag = csum[:, cut + reach + 1] - csum[:, cut + G + 1]
    noise = (lead + lag) / (2 * T)
    hits = power[:, cut] > params.alpha * noise

    rows, cols = np.nonzero(hits)  # row-major, hence already sorted
    out = []
    for d, k in zip(rows.tolist(), (cut[cols]).tolist()):
        out.append(Detection(
            range_bin=k,
            doppler_bin=d,
            range_m=rd_map.range_of(k),
            velocity_mps=rd_map.velocity_of(d),
            magnitude=float(power[d, k]),
        ))
    return out


def refine_range(rd_map: RangeDopplerMap, detection: Detection) -> float:
    """Sub-bin range of a detection by a parabola through the log powers of its neighbours.

    Falls back to the bin center at the map edges or when the detection is
    not a local maximum along range.
    """
    k, d = detection.range_bin, detection.doppler_bin
    row = rd_map.power[d]
    if k <= 0 or k >= row.size - 1:
        return detection.range_m
    a, b, c = row[k - 1], row[k], row[k + 1]
    if min(a, b, c) <= 0 or b < a or b < c:
        return detection.range_m
    la, lb, lc = math.log(a), math.log(b), math.log(c)
    denom = la - 2.0 * lb + lc
    if denom >= 0:
        return detection.range_m
    delta = 0.5 * (la - lc) / denom
    return (k + delta) * rd_map.range_bin_width_m


def detections_to_points(
    detections: Sequence[Detection],
    timestamp_s: float,
    cross_range_offsets_m: Optional[Sequence[float]] = None,
) -> PointCloud:
    """Turn detections into a point cloud with ``y = range`` and intensity normalized to the frame maximum."""
    n = len(detections)
    if cross_range_offsets_m is None:
        x = np.zeros(n)
    else:
        x = np.asarray(cross_range_offsets_m, dtype=float)
        if x.shape != (n,):
            raise DimensionError("one cross-range offset per detection is required")
    if n == 0:
        return PointCloud.empty()
    mags = np.array([det.magnitude for det in detections], dtype=float)
    return PointCloud(
        x=x,
        y=np.array([det.range_m for det in detections], dtype=float),
        z=np.zeros(n),
        p=mags / mags.max(),
        t=np.full(n, float(timestamp_s)),
    )
