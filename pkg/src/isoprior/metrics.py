"""Dice overlap and boundary Hausdorff distance between binary masks."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._json import dumps, format_real
from .raster import as_mask_array, threshold_field, load_pgm

log = logging.getLogger(__name__)

_FOUR = ndimage.generate_binary_structure(2, 1)


def _pair(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p, g = as_mask_array(pred), as_mask_array(gt)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    return p, g


def dice(pred, gt) -> float:
    """2|P & G| / (|P| + |G|); 1.0 when both masks are empty."""
    p, g = _pair(pred, gt)
    total = int(p.sum()) + int(g.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.count_nonzero(p & g)) / total


def boundary(mask) -> np.ndarray:
    """Foreground pixels with a 4-neighbour in the background or off the grid."""
    m = as_mask_array(mask)
    return m & ~ndimage.binary_erosion(m, structure=_FOUR, border_value=0)


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """max over boundary(a) of the distance to the nearest pixel of boundary(b)."""
    ba, bb = boundary(a), boundary(b)
    dist = ndimage.distance_transform_edt(~bb)
    return float(dist[ba].max())


def hausdorff(pred, gt) -> float:
    """Symmetric Hausdorff distance between boundary pixel centers, in pixels.

    Returns nan when either mask is empty (the distance is undefined).
    """
    p, g = _pair(pred, gt)
    if not p.any() or not g.any():
        return math.nan
    return max(directed_hausdorff(p, g), directed_hausdorff(g, p))


@dataclass(frozen=True)
class MetricReport:
    dice: float
    hausdorff: float
    pred_area: int
    gt_area: int

    @property
    def hausdorff_defined(self) -> bool:
        return not math.isnan(self.hausdorff)

    def to_dict(self) -> dict:
        return {
            "dice": self.dice,
            "hausdorff": self.hausdorff if self.hausdorff_defined else None,
            "hausdorff_defined": self.hausdorff_defined,
            "pred_area": self.pred_area,
            "gt_area": self.gt_area,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def evaluate(pred, gt) -> MetricReport:
    p, g = _pair(pred, gt)
    return MetricReport(dice(p, g), hausdorff(p, g), int(p.sum()), int(g.sum()))


def evaluate_manifest(rows, lam: float = 0.5, base_dir=None) -> tuple[str, int]:
    """Score each (pred path, gt path) row; returns CSV text and the failure count.

    Unreadable pairs are logged and skipped.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["pred", "gt", "dice", "hausdorff"])
    failures = 0
    for pred_path, gt_path in rows:
        try:
            rp = os.path.join(base_dir, pred_path) if base_dir else pred_path
            rg = os.path.join(base_dir, gt_path) if base_dir else gt_path
            rep = evaluate(threshold_field(load_pgm(rp), lam), threshold_field(load_pgm(rg), lam))
        except (OSError, ValueError) as exc:
            log.warning("skipping %s,%s: %s", pred_path, gt_path, exc)
            failures += 1
            continue
        hd = format_real(rep.hausdorff) if rep.hausdorff_defined else "undefined"
        writer.writerow([pred_path, gt_path, format_real(rep.dice), hd])
    return out.getvalue(), failures


def read_manifest(text: str) -> list[tuple[str, str]]:
    rows = []
    for rec in csv.reader(io.StringIO(text)):
        if not rec or rec[0].startswith("#"):
            continue
        if len(rec) != 2:
            raise ValueError(f"manifest rows need two columns, got {rec!r}")
        if rec[0].strip() == "pred" and rec[1].strip() == "gt":
            continue
        rows.append((rec[0].strip(), rec[1].strip()))
    return rows
