"""
From chirps to points
=====================

Synthesize one FMCW frame containing a water surface and a weaker
multipath echo, run the range and Doppler FFTs, detect peaks with CA-CFAR
and turn the detections into an XYZP point cloud.
"""

import numpy as np

from radarlevel import (
    ChirpConfig,
    PathClass,
    ScatterTarget,
    cfar_detect,
    detections_to_points,
    range_doppler_map,
    refine_range,
    synthesize_if_frame,
)

# default chirp: 77 GHz start, 4 GHz sweep, 256 samples by 64 chirps
cfg = ChirpConfig()
print(f"range bin {cfg.range_bin_width_m * 100:.2f} cm, max range {cfg.max_range_m:.1f} m, "
      f"velocity bin {cfg.velocity_bin_width_mps * 100:.2f} cm/s")

# surface at 1.13 m, a multipath return further out and receding at 1.2 m/s
targets = [
    ScatterTarget(1.13, 0.0, 1.0, PathClass.DIRECT_SURFACE),
    ScatterTarget(2.05, 1.2, 0.3, PathClass.MULTIPATH),
]
frame = synthesize_if_frame(cfg, targets, noise_std=0.1, seed=7)

# the Hann window keeps the peak shape smooth enough for sub-bin interpolation
rd = range_doppler_map(frame, window="hann")
print("map shape (doppler, range):", rd.cells.shape)

dets = cfar_detect(rd)
# strong peaks spill into neighbouring cells, so one target yields several detections
print(f"{len(dets)} CFAR detections")
for det in sorted(dets, key=lambda d: -d.magnitude)[:4]:
    print(f"  bin {det.range_bin:3d}  {det.range_m:.4f} m -> refined {refine_range(rd, det):.4f} m, "
          f"v {det.velocity_mps:+.3f} m/s")

cloud = detections_to_points(dets, 0.0)
strongest = np.argmax(cloud.p)
print(f"strongest point y = {cloud.y[strongest]:.4f} m with p = {cloud.p[strongest]:.2f}")
