"""Sampling lattices, image containers, comparison metrics, and map output.

Maps live on a square lattice over [-1, 1]^2 with nodes kept only inside a
clip radius (default 0.95), so evaluation points stay clear of the boundary
where the imaging kernels lose accuracy. Values are stored as a full raster
with zeros outside the clip mask; metrics only ever look inside the mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FlatMapError
from .geometry import CurveDiscretization, distance_to_curve

_FLAT_TOL = 1e-14


@dataclass(frozen=True)
class Lattice:
    """Square sampling lattice clipped to a disk.

    ``mask[iy, ix]`` flags nodes with radius <= clip_radius; ``points`` lists
    the kept nodes, row-major over (iy, ix).
    """

    xs: np.ndarray
    ys: np.ndarray
    mask: np.ndarray
    points: np.ndarray
    clip_radius: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ys.size, self.xs.size)

    @property
    def spacing(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def same_geometry(self, other: "Lattice") -> bool:
        return (
            self.shape == other.shape
            and self.clip_radius == other.clip_radius
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.ys, other.ys)
        )


def make_lattice(n: int = 128, clip_radius: float = 0.95, extent: float = 1.0) -> Lattice:
    """Build an n-by-n lattice over [-extent, extent]^2 clipped to a disk."""
    if n < 8:
        raise ConfigError(f"lattice needs at least 8 nodes per side, got {n}")
    if not (0.0 < clip_radius <= extent):
        raise ConfigError(f"clip radius must lie in (0, {extent}], got {clip_radius}")
    xs = np.linspace(-extent, extent, n)
    ys = np.linspace(-extent, extent, n)
    gx, gy = np.meshgrid(xs, ys)
    mask = np.hypot(gx, gy) <= clip_radius
    points = np.column_stack([gx[mask], gy[mask]])
    for arr in (xs, ys, mask, points):
        arr.setflags(write=False)
    return Lattice(xs=xs, ys=ys, mask=mask, points=points, clip_radius=clip_radius)


@dataclass(frozen=True)
class ImageMap:
    """Scalar image on a lattice; entries outside the clip mask are zero."""

    lattice: Lattice
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.lattice.shape:
            raise ConfigError(f"values shape {vals.shape} != lattice shape {self.lattice.shape}")
        if not np.all(np.isfinite(vals[self.lattice.mask])):
            raise ConfigError("map values must be finite inside the mask")
        vals = vals.copy()
        vals[~self.lattice.mask] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def inside_values(self) -> np.ndarray:
        return self.values[self.lattice.mask]


def from_point_values(lattice: Lattice, point_values: np.ndarray) -> ImageMap:
    """Assemble an ImageMap from values listed per kept lattice point."""
    pv = np.asarray(point_values, dtype=float)
    if pv.shape != (lattice.points.shape[0],):
        raise ConfigError(
            f"expected {lattice.points.shape[0]} point values, got shape {pv.shape}"
        )
    vals = np.zeros(lattice.shape)
    vals[lattice.mask] = pv
    return ImageMap(lattice=lattice, values=vals)


def masked_correlation(a: ImageMap, b: ImageMap) -> float:
    """Pearson correlation of two maps over the inside-mask nodes."""
    if not a.lattice.same_geometry(b.lattice):
        raise ConfigError("maps live on different lattices")
    va = a.inside_values
    vb = b.inside_values
    da = va - va.mean()
    db = vb - vb.mean()
    na = math.sqrt(float(da @ da))
    nb = math.sqrt(float(db @ db))
    if na < _FLAT_TOL or nb < _FLAT_TOL:
        raise FlatMapError("correlation of a flat map is undefined")
    return float(da @ db) / (na * nb)


def top_quantile_distance(
    imap: ImageMap, disc: CurveDiscretization, quantile: float = 0.01
) -> float:
    """Mean distance to the curve of the brightest quantile of lattice nodes.

    The threshold is the (1 - quantile) level of the inside-mask values;
    nodes at or above it count. Used as the localization score: small means
    the bright set hugs the inclusion.
    """
    if not (0.0 < quantile < 1.0):
        raise ConfigError(f"quantile must lie in (0, 1), got {quantile}")
    vals = imap.inside_values
    thr = float(np.quantile(vals, 1.0 - quantile))
    sel = vals >= thr
    pts = imap.lattice.points[sel]
    dists = distance_to_curve(pts, disc)
    return float(np.mean(dists))


def save_map_csv(imap: ImageMap, path) -> None:
    """Write inside-mask nodes as 'x y value' rows (bit-exact floats)."""
    lines = [
        "# thinimage map v1",
        f"# lattice {imap.lattice.shape[1]} {imap.lattice.shape[0]}",
        f"# clip_radius {float(imap.lattice.clip_radius)!r}",
        "# columns x y value",
    ]
    pts = imap.lattice.points
    vals = imap.inside_values
    for (x, y), v in zip(pts, vals):
        lines.append(f"{float(x)!r} {float(y)!r} {float(v)!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def save_map_pgm(imap: ImageMap, path) -> None:
    """Write a plain (P2) PGM rendering, 255 gray levels.

    Inside values are scaled linearly from [min, max] to [0, 255]; the
    original range is recorded in a header comment so intensities remain
    interpretable. Outside-mask pixels are 0. Rows run top to bottom (y
    decreasing), columns left to right.
    """
    vals = imap.inside_values
    vmin = float(np.min(vals))
    vmax = float(np.max(vals))
    ny, nx = imap.lattice.shape
    pix = np.zeros((ny, nx), dtype=int)
    if vmax > vmin:
        scaled = (imap.values - vmin) / (vmax - vmin)
        pix[imap.lattice.mask] = np.rint(255.0 * scaled[imap.lattice.mask]).astype(int)
    lines = [
        "P2",
        f"# value range {vmin!r} {vmax!r}",
        f"{nx} {ny}",
        "255",
    ]
    for iy in range(ny - 1, -1, -1):
        lines.append(" ".join(str(int(p)) for p in pix[iy]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
