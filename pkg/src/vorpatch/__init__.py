"""Seeded image augmentation by Voronoi patch transport.

The toolkit partitions an image plane into Voronoi cells, transports the
pixel content of randomly chosen bounded cells onto other cell centroids
(optionally smoothing the pasted borders), and ships the companion
analysis metrics (SSIM, entropy, Monte-Carlo patch statistics) plus a
deterministic batch CLI.
"""

from vorpatch.errors import DegenerateGeometryError, VorpatchError

__version__ = "0.1.0"

__all__ = ["DegenerateGeometryError", "VorpatchError", "__version__"]
