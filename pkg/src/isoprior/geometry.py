"""Discrete geometry of binary masks: components, hole filling, area,
perimeter estimators, the compactness ratio and its hinge penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import ndimage

from ._json import dumps
from .raster import as_mask_array

Mode = Literal["raw", "filled"]
Estimator = Literal["edge", "isotropic", "crofton", "marching"]
Aggregate = Literal["area_weighted_mean", "min"]

MODES = ("raw", "filled")
ESTIMATORS = ("edge", "isotropic", "crofton", "marching")
AGGREGATES = ("area_weighted_mean", "min")

DEFAULT_TAU = 0.6

# foreground 8-connected, background 4-connected
_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class Component:
    label: int
    pixel_indices: frozenset
    area_px: int
    perimeter_px: float


@dataclass(frozen=True)
class ComponentMeasure:
    label: int
    area: float
    perimeter: float
    mu: float


@dataclass(frozen=True)
class PenaltyConfig:
    tau: float = DEFAULT_TAU
    mode: Mode = "filled"
    estimator: Estimator = "crofton"
    aggregate: Aggregate = "area_weighted_mean"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"unknown aggregate {self.aggregate!r}")


@dataclass(frozen=True)
class RegionReport:
    components: list[ComponentMeasure]
    aggregate_mu: float
    penalty: float
    admissible: bool
    mode: Mode
    estimator: Estimator
    tau: float
    aggregate: Aggregate = "area_weighted_mean"
    raw_mus: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "estimator": self.estimator,
            "tau": self.tau,
            "aggregate_mu": self.aggregate_mu,
            "penalty": self.penalty,
            "admissible": self.admissible,
            "components": [
                {"label": c.label, "area": c.area, "perimeter": c.perimeter, "mu": c.mu}
                for c in self.components
            ],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


# --------------------------------------------------------------------------
# components and holes

def label_components(mask) -> tuple[np.ndarray, int]:
    """Label 8-connected foreground components 1..k in raster-scan order of first pixel."""
    m = as_mask_array(mask)
    labels, k = ndimage.label(m, structure=_EIGHT)
    return labels, k


def connected_components(mask, estimator: Estimator = "crofton") -> list[Component]:
    labels, k = label_components(mask)
    out = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == lab
        rows, cols = np.nonzero(sub)
        pix = frozenset(zip((rows + sl[0].start).tolist(), (cols + sl[1].start).tolist()))
        out.append(Component(lab, pix, int(sub.sum()), perimeter(sub, estimator)))
    return out


def fill_holes(mask) -> np.ndarray:
    """Set every background pixel not 4-connected to the border through background."""
    m = as_mask_array(mask)
    return ndimage.binary_fill_holes(m, structure=_FOUR)


# --------------------------------------------------------------------------
# area and perimeter

def area(mask) -> float:
    return float(np.count_nonzero(as_mask_array(mask)))


def _padded(m: np.ndarray) -> np.ndarray:
    p = np.zeros((m.shape[0] + 2, m.shape[1] + 2), dtype=np.int8)
    p[1:-1, 1:-1] = m
    return p


def edge_perimeter(mask) -> float:
    """Number of foreground/background pixel sides (outside the grid is background)."""
    p = _padded(as_mask_array(mask))
    return float(np.count_nonzero(np.diff(p, axis=0)) + np.count_nonzero(np.diff(p, axis=1)))


def forward_differences(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences along columns (dx) and rows (dy); the difference
    past the last column/row is padded with zero.
    """
    dx = np.zeros_like(u, dtype=np.float64)
    dy = np.zeros_like(u, dtype=np.float64)
    dx[:, :-1] = u[:, 1:] - u[:, :-1]
    dy[:-1, :] = u[1:, :] - u[:-1, :]
    return dx, dy


def isotropic_perimeter(mask) -> float:
    dx, dy = forward_differences(as_mask_array(mask).astype(np.float64))
    return float(np.sum(np.hypot(dx, dy)))


def crofton_perimeter(mask) -> float:
    """Cauchy-Crofton length from boundary crossings along four line families.

    Lines run through pixel centers at 0, 45, 90 and 135 degrees (spacing 1
    and 1/sqrt(2)); the length is pi/8 times the spacing-weighted crossing count.
    """
    p = _padded(as_mask_array(mask))
    n_axis = np.count_nonzero(np.diff(p, axis=0)) + np.count_nonzero(np.diff(p, axis=1))
    n_diag = (np.count_nonzero(p[1:, 1:] != p[:-1, :-1])
              + np.count_nonzero(p[1:, :-1] != p[:-1, 1:]))
    return float(np.pi / 8.0 * (n_axis + n_diag / np.sqrt(2.0)))


# contour length inside one 2x2 cell, by case index tl*8 + tr*4 + br*2 + bl
_H = np.sqrt(2.0) / 2.0
_CELL_LENGTH = np.array([
    0.0, _H, _H, 1.0,
    _H, 2 * _H, 1.0, _H,
    _H, 1.0, 2 * _H, _H,
    1.0, _H, _H, 0.0,
])


def marching_squares_perimeter(mask) -> float:
    """Marching-squares iso-contour length at level 1/2, summed over all contours."""
    p = _padded(as_mask_array(mask))
    case = 8 * p[:-1, :-1] + 4 * p[:-1, 1:] + 2 * p[1:, 1:] + p[1:, :-1]
    counts = np.bincount(case.ravel(), minlength=16)
    return float(counts @ _CELL_LENGTH)


_PERIMETER = {
    "edge": edge_perimeter,
    "isotropic": isotropic_perimeter,
    "crofton": crofton_perimeter,
    "marching": marching_squares_perimeter,
}


def perimeter(mask, estimator: Estimator = "crofton") -> float:
    try:
        fn = _PERIMETER[estimator]
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}") from None
    return fn(mask)


# --------------------------------------------------------------------------
# ratio and penalty

def compactness(area_: float, perimeter_: float) -> float:
    """4*pi*A / L**2, unclamped; zero when the perimeter vanishes."""
    if perimeter_ <= 0.0:
        return 0.0
    return 4.0 * np.pi * area_ / perimeter_ ** 2


def penalty(mu: float, tau: float = DEFAULT_TAU) -> float:
    return max(0.0, tau - mu)


def measure_components(mask, mode: Mode = "filled", estimator: Estimator = "crofton"
                       ) -> list[tuple[int, float, float, float]]:
    """(label, area, perimeter, unclamped mu) per 8-connected component."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    labels, _ = label_components(mask)
    out = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        # one pixel of background margin so crops keep their border context
        sl = tuple(slice(max(s.start - 1, 0), s.stop + 1) for s in sl)
        sub = labels[sl] == lab
        if mode == "filled":
            sub = fill_holes(sub)
        a = area(sub)
        ell = perimeter(sub, estimator)
        out.append((lab, a, ell, compactness(a, ell)))
    return out


def region_report(mask, config: PenaltyConfig | None = None) -> RegionReport:
    cfg = config or PenaltyConfig()
    measured = measure_components(mask, cfg.mode, cfg.estimator)
    comps = [ComponentMeasure(lab, a, ell, min(max(mu, 0.0), 1.0)) for lab, a, ell, mu in measured]
    if not comps:
        agg = 0.0
    elif cfg.aggregate == "min":
        agg = min(c.mu for c in comps)
    else:
        weights = np.array([c.area for c in comps])
        agg = float(np.dot(weights, [c.mu for c in comps]) / weights.sum())
    return RegionReport(
        components=comps,
        aggregate_mu=agg,
        penalty=penalty(agg, cfg.tau),
        admissible=bool(agg > cfg.tau),
        mode=cfg.mode,
        estimator=cfg.estimator,
        tau=cfg.tau,
        aggregate=cfg.aggregate,
        raw_mus=tuple(mu for *_, mu in measured),
    )


def global_mu(mask, mode: Mode = "filled", estimator: Estimator = "crofton") -> float:
    """Ratio of the whole foreground treated as one region (no per-component split)."""
    m = as_mask_array(mask)
    if mode == "filled":
        m = fill_holes(m)
    return min(compactness(area(m), perimeter(m, estimator)), 1.0)
