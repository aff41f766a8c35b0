"""Periodic two-phase unit-cell geometry on a pixel grid.

The unit cell is [0,1)^2 sampled on an nx-by-ny grid of cell-centered
pixels; a boolean indicator marks the phase-1 (inclusion) pixels.
Builders produce the benchmark microstructures deterministically, and a
plain-text raster format gives bit-exact import/export.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import RasterParseError

RASTER_MAGIC = "P-PHASE"


class PhaseMap:
    """Two-phase indicator on an nx-by-ny periodic pixel grid.

    ``chi[j, i]`` is True when pixel (i, j) belongs to phase 1 (the
    inclusion). Pixel centers sit at ((i + 1/2)/nx, (j + 1/2)/ny), with
    row j = 0 the lowest y. Instances are immutable after construction
    and safe to share between threads.
    """

    __slots__ = ("_chi",)

    def __init__(self, chi):
        chi = np.array(chi, dtype=bool)
        if chi.ndim != 2:
            raise ValueError(f"indicator must be 2-D, got shape {chi.shape}")
        ny, nx = chi.shape
        if nx < 2 or ny < 2 or nx % 2 or ny % 2:
            raise ValueError(f"grid dims must be even and >= 2, got {nx} x {ny}")
        chi.flags.writeable = False
        self._chi = chi

    @property
    def chi(self) -> np.ndarray:
        return self._chi

    @property
    def nx(self) -> int:
        return self._chi.shape[1]

    @property
    def ny(self) -> int:
        return self._chi.shape[0]

    @property
    def volume_fraction(self) -> Fraction:
        """Phase-1 pixel count over total, as an exact rational."""
        return Fraction(int(self._chi.sum()), self._chi.size)

    def __eq__(self, other):
        if not isinstance(other, PhaseMap):
            return NotImplemented
        return self._chi.shape == other._chi.shape and bool(
            np.array_equal(self._chi, other._chi)
        )

    def __hash__(self):
        return hash((self._chi.shape, self._chi.tobytes()))

    def __repr__(self):
        return (
            f"PhaseMap({self.nx}x{self.ny}, "
            f"f={float(self.volume_fraction):.4f})"
        )


def volume_fraction(pmap: PhaseMap) -> Fraction:
    """Exact phase-1 volume fraction of ``pmap``."""
    return pmap.volume_fraction


def build_uniform(n: int, phase1: bool = False) -> PhaseMap:
    """n-by-n map filled with a single phase."""
    return PhaseMap(np.full((n, n), bool(phase1)))


def build_square_array(n: int, side_fraction: float) -> PhaseMap:
    """Centered axis-aligned square inclusion on an n-by-n grid.

    ``side_fraction`` is the square side in cell units; ``side_fraction * n``
    must be an even integer so the inclusion is exactly representable.
    The resulting volume fraction equals ``side_fraction ** 2`` exactly.
    """
    if n < 2 or n % 2:
        raise ValueError(f"grid side must be even and >= 2, got {n}")
    if not 0.0 < side_fraction < 1.0:
        raise ValueError(f"side_fraction must lie in (0, 1), got {side_fraction}")
    m_real = side_fraction * n
    m = int(round(m_real))
    if abs(m_real - m) > 1e-9 * n or m % 2 or m <= 0:
        raise ValueError(
            f"side_fraction * n = {m_real!r} is not an even integer; "
            f"side {side_fraction} is not representable on an n={n} grid"
        )
    chi = np.zeros((n, n), dtype=bool)
    lo = (n - m) // 2
    chi[lo:lo + m, lo:lo + m] = True
    return PhaseMap(chi)


def build_disk_array(n: int, radius: float) -> PhaseMap:
    """Centered disk inclusion on an n-by-n grid.

    A pixel belongs to phase 1 iff its center lies within ``radius`` (cell
    units) of the cell center; the volume fraction tends to pi * radius**2
    as n grows.
    """
    if n < 2 or n % 2:
        raise ValueError(f"grid side must be even and >= 2, got {n}")
    if not 0.0 < radius < 0.5:
        raise ValueError(f"radius must lie in (0, 0.5), got {radius}")
    centers = (np.arange(n) + 0.5) / n - 0.5
    dx = centers[None, :]
    dy = centers[:, None]
    return PhaseMap(dx * dx + dy * dy <= radius * radius)


def save_raster(pmap: PhaseMap) -> str:
    """Serialize to the plain-text bitmap format.

    First line ``P-PHASE <nx> <ny>``, then ny rows of nx space-separated
    0/1 tokens (1 = phase 1), row 0 first. Round-trips bit-exactly with
    :func:`load_raster`.
    """
    lines = [f"{RASTER_MAGIC} {pmap.nx} {pmap.ny}"]
    for row in pmap.chi:
        lines.append(" ".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def load_raster(text: str) -> PhaseMap:
    """Parse the plain-text bitmap format produced by :func:`save_raster`.

    Raises :class:`RasterParseError` (naming line and column) on malformed
    headers, wrong token counts, non-binary tokens or odd dimensions.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise RasterParseError("missing header", line=1)
    header = lines[0].split()
    if header[0] != RASTER_MAGIC:
        raise RasterParseError(f"expected magic {RASTER_MAGIC!r}", line=1, column=1)
    if len(header) != 3:
        raise RasterParseError(
            f"header needs 3 tokens, got {len(header)}", line=1, column=len(header)
        )
    try:
        nx, ny = int(header[1]), int(header[2])
    except ValueError:
        raise RasterParseError("dimensions must be integers", line=1, column=2) from None
    if nx < 2 or ny < 2 or nx % 2 or ny % 2:
        raise RasterParseError(
            f"dims must be even and >= 2, got {nx} x {ny}", line=1, column=2
        )
    rows = []
    for j in range(ny):
        lineno = j + 2
        if j + 1 >= len(lines):
            raise RasterParseError(f"missing data row {j}", line=lineno)
        tokens = lines[j + 1].split()
        if len(tokens) != nx:
            raise RasterParseError(
                f"expected {nx} tokens, got {len(tokens)}",
                line=lineno,
                column=min(len(tokens), nx) + 1,
            )
        row = []
        for i, tok in enumerate(tokens):
            if tok == "0":
                row.append(False)
            elif tok == "1":
                row.append(True)
            else:
                raise RasterParseError(
                    f"token must be 0 or 1, got {tok!r}", line=lineno, column=i + 1
                )
        rows.append(row)
    for extra, line in enumerate(lines[ny + 1:], start=ny + 2):
        if line.strip():
            raise RasterParseError("unexpected trailing content", line=extra)
    return PhaseMap(np.array(rows, dtype=bool))
