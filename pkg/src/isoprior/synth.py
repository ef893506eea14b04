"""Parametric test shapes with closed-form compactness in the continuum.

Coordinates are (row, col) in pixel units; pixel (r, c) has its center at
(r + 0.5, c + 0.5). Angles are in degrees, counter-clockwise from the +col
axis with rows pointing down the image (so "up" is 90 degrees).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy.special import ellipe

from .raster import BinaryMask, GridShape

Kind = Literal["disk", "ellipse", "annulus", "broken_annulus", "multi_disk"]
KINDS = ("disk", "ellipse", "annulus", "broken_annulus", "multi_disk")

MARGIN = 2.0


@dataclass(frozen=True)
class ShapeSpec:
    """One synthetic shape.

    ``radii`` holds (R,) for a disk, (R, r) for (broken) annuli, the semi-axes
    (a, b) for an ellipse (a along columns, b along rows), and one radius per
    center for multi_disk.
    """

    kind: Kind
    grid: GridShape
    centers: tuple[tuple[float, float], ...]
    radii: tuple[float, ...]
    gap_angle: float = 0.0
    gap_orientation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(tuple(map(float, c)) for c in self.centers))
        object.__setattr__(self, "radii", tuple(map(float, self.radii)))
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")
        expected = {"disk": 1, "ellipse": 2, "annulus": 2, "broken_annulus": 2}
        if self.kind == "multi_disk":
            if len(self.centers) < 1 or len(self.radii) != len(self.centers):
                raise ValueError("multi_disk needs one radius per center")
        else:
            if len(self.centers) != 1 or len(self.radii) != expected[self.kind]:
                raise ValueError(f"{self.kind} needs 1 center and {expected[self.kind]} radii")
        if self.kind in ("annulus", "broken_annulus") and not self.radii[1] < self.radii[0]:
            raise ValueError("annulus needs 0 < r < R")
        if self.kind == "broken_annulus" and not 0.0 < self.gap_angle < 360.0:
            raise ValueError("gap_angle must lie in (0, 360)")
        if self.kind == "multi_disk":
            for i in range(len(self.centers)):
                for j in range(i):
                    d = np.hypot(self.centers[i][0] - self.centers[j][0],
                                 self.centers[i][1] - self.centers[j][1])
                    if d <= self.radii[i] + self.radii[j] + 1.0:
                        raise ValueError("multi_disk disks must be disjoint")

    def extents(self) -> list[tuple[float, float, float, float]]:
        """(row_min, row_max, col_min, col_max) of each part's bounding box."""
        if self.kind == "ellipse":
            (cy, cx), (a, b) = self.centers[0], self.radii
            return [(cy - b, cy + b, cx - a, cx + a)]
        if self.kind == "multi_disk":
            return [(cy - r, cy + r, cx - r, cx + r) for (cy, cx), r in zip(self.centers, self.radii)]
        (cy, cx), big = self.centers[0], self.radii[0]
        return [(cy - big, cy + big, cx - big, cx + big)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = {"height": self.grid.height, "width": self.grid.width}
        d["centers"] = [list(c) for c in self.centers]
        d["radii"] = list(self.radii)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeSpec":
        return cls(kind=d["kind"], grid=GridShape(**d["grid"]),
                   centers=tuple(tuple(c) for c in d["centers"]), radii=tuple(d["radii"]),
                   gap_angle=d.get("gap_angle", 0.0), gap_orientation=d.get("gap_orientation", 0.0))


def _square_grid(radius: float) -> GridShape:
    n = int(np.ceil(2 * radius + 2 * MARGIN + 4))
    return GridShape(n, n)


def _center(grid: GridShape) -> tuple[float, float]:
    return (grid.height / 2.0, grid.width / 2.0)


def disk(radius: float, grid: GridShape | None = None, center=None) -> ShapeSpec:
    grid = grid or _square_grid(radius)
    return ShapeSpec("disk", grid, (center or _center(grid),), (radius,))


def ellipse(a: float, b: float, grid: GridShape | None = None, center=None) -> ShapeSpec:
    grid = grid or _square_grid(max(a, b))
    return ShapeSpec("ellipse", grid, (center or _center(grid),), (a, b))


def annulus(outer: float, inner: float, grid: GridShape | None = None, center=None) -> ShapeSpec:
    grid = grid or _square_grid(outer)
    return ShapeSpec("annulus", grid, (center or _center(grid),), (outer, inner))


def broken_annulus(outer: float, inner: float, gap_angle: float, gap_orientation: float = 0.0,
                   grid: GridShape | None = None, center=None) -> ShapeSpec:
    grid = grid or _square_grid(outer)
    return ShapeSpec("broken_annulus", grid, (center or _center(grid),), (outer, inner),
                     gap_angle=gap_angle, gap_orientation=gap_orientation)


def multi_disk(centers, radii, grid: GridShape) -> ShapeSpec:
    return ShapeSpec("multi_disk", grid, tuple(centers), tuple(radii))


def two_disks(radius: float, separation: float | None = None) -> ShapeSpec:
    """Two equal disks side by side, ``separation`` px of gap between them."""
    sep = 4.0 * MARGIN if separation is None else separation
    h = int(np.ceil(2 * radius + 2 * MARGIN + 4))
    w = int(np.ceil(4 * radius + sep + 2 * MARGIN + 4))
    cy = h / 2.0
    cx0 = w / 2.0 - radius - sep / 2.0
    cx1 = w / 2.0 + radius + sep / 2.0
    return multi_disk(((cy, cx0), (cy, cx1)), (radius, radius), GridShape(h, w))


# --------------------------------------------------------------------------

def _pixel_centers(grid: GridShape) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.mgrid[0:grid.height, 0:grid.width]
    return rows + 0.5, cols + 0.5


def polar_angle(y: np.ndarray, x: np.ndarray, center: tuple[float, float]) -> np.ndarray:
    """Angle in [0, 360) of the offset from ``center``; rows grow downward."""
    return np.degrees(np.arctan2(center[0] - y, x - center[1])) % 360.0


def in_gap(angle: np.ndarray, orientation: float, gap: float) -> np.ndarray:
    return (angle - orientation) % 360.0 < gap


def rasterize(spec: ShapeSpec) -> BinaryMask:
    """Foreground iff the pixel center lies inside the continuous shape."""
    g = spec.grid
    for r0, r1, c0, c1 in spec.extents():
        if r0 < MARGIN or c0 < MARGIN or r1 > g.height - MARGIN or c1 > g.width - MARGIN:
            raise ValueError(f"shape exceeds grid {g.height}x{g.width} (needs {MARGIN:g} px margin)")
    y, x = _pixel_centers(g)
    if spec.kind == "multi_disk":
        m = np.zeros(g.as_tuple(), dtype=bool)
        for (cy, cx), r in zip(spec.centers, spec.radii):
            m |= (y - cy) ** 2 + (x - cx) ** 2 < r * r
        return BinaryMask(m)
    cy, cx = spec.centers[0]
    if spec.kind == "ellipse":
        a, b = spec.radii
        return BinaryMask(((x - cx) / a) ** 2 + ((y - cy) / b) ** 2 < 1.0)
    d2 = (y - cy) ** 2 + (x - cx) ** 2
    if spec.kind == "disk":
        return BinaryMask(d2 < spec.radii[0] ** 2)
    big, small = spec.radii
    m = (d2 < big * big) & (d2 >= small * small)
    if spec.kind == "broken_annulus":
        m &= ~in_gap(polar_angle(y, x, (cy, cx)), spec.gap_orientation, spec.gap_angle)
    return BinaryMask(m)


def ellipse_perimeter(a: float, b: float) -> float:
    """Exact perimeter 4*a*E(m), m = 1 - (b/a)**2, with a the major semi-axis."""
    a, b = max(a, b), min(a, b)
    return float(4.0 * a * ellipe(1.0 - (b / a) ** 2))


def _ratio(area_: float, length: float) -> float:
    return 4.0 * np.pi * area_ / length ** 2


def analytic_mu(spec: ShapeSpec, mode: str = "filled") -> float:
    """Continuum ratio 4*pi*A/L**2 of the shape, per component for multi_disk."""
    if mode not in ("raw", "filled"):
        raise ValueError(f"unknown mode {mode!r}")
    kind = spec.kind
    if kind in ("disk", "multi_disk"):
        return 1.0
    if kind == "ellipse":
        a, b = spec.radii
        return _ratio(np.pi * a * b, ellipse_perimeter(a, b))
    big, small = spec.radii
    if kind == "annulus":
        return 1.0 if mode == "filled" else (big - small) / (big + small)
    # the gap joins the hole to the outside, so filling changes nothing
    keep = 1.0 - spec.gap_angle / 360.0
    band = keep * np.pi * (big * big - small * small)
    length = keep * 2.0 * np.pi * (big + small) + 2.0 * (big - small)
    return _ratio(band, length)


def analytic_global_mu(spec: ShapeSpec, mode: str = "filled") -> float:
    """Ratio of all parts taken as one region (sums of areas and lengths)."""
    if spec.kind != "multi_disk":
        return analytic_mu(spec, mode)
    r = np.asarray(spec.radii)
    return _ratio(float(np.sum(np.pi * r * r)), float(np.sum(2.0 * np.pi * r)))


def min_feature_size(spec: ShapeSpec) -> float:
    if spec.kind in ("annulus", "broken_annulus"):
        return min(spec.radii[1], spec.radii[0] - spec.radii[1])
    return min(spec.radii)
