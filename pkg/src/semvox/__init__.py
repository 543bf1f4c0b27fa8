"""semvox: semantic voxel scenes from simulated LiDAR.

Builds per-instant semantic ground-truth voxel grids of a dynamic scene by
aggregating scans from many randomly placed sensors, provides the sequential
ego-only aggregation baseline (which smears moving objects into trails), and
scores predictions with semantic and geometric completeness metrics.
"""

__version__ = "0.1.0"

from semvox.backend import BACKEND, HAVE_COMPILED

__all__ = ["BACKEND", "HAVE_COMPILED", "__version__"]
