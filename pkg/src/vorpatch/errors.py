"""Exception types shared across the toolkit."""


class VorpatchError(Exception):
    """Base class for toolkit-specific failures."""


class DegenerateGeometryError(VorpatchError):
    """Raised when a Voronoi diagram has no usable bounded cell.

    A diagram without a bounded, non-empty cell (e.g. collinear generator
    points) cannot supply patch sources or paste targets. Callers may
    retry with a fresh diagram; the batch pipeline does so a bounded
    number of times.
    """


class PipelineIOError(VorpatchError):
    """Raised for batch-pipeline input/output failures (maps to exit code 2)."""
