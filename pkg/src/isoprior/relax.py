"""Smooth surrogates of area, perimeter, compactness and the hinge penalty,
plus the Dice / cross-entropy training losses, each with an analytic gradient
with respect to the prediction field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import heapq

import numpy as np
from numba import njit
from scipy.special import expit

from ._json import dumps
from .geometry import DEFAULT_TAU, forward_differences
from .raster import DEFAULT_LAMBDA, Threshold, as_field_array, as_mask_array

DICE_SMOOTH = 1.0
CE_CLAMP = 1e-7
DEGENERATE_PERIMETER = 1e-8


@dataclass(frozen=True)
class SoftConfig:
    beta: float = 50.0
    eps: float = 1e-6
    lam: float = DEFAULT_LAMBDA
    tau: float = DEFAULT_TAU
    mode: str = "raw"

    def __post_init__(self):
        if self.mode not in ("raw", "filled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        Threshold(self.lam)
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")


@dataclass(frozen=True, eq=False)
class LossValueGrad:
    value: float
    grad: np.ndarray
    degenerate: bool = False


def _values(field) -> np.ndarray:
    # relax ops are evaluated slightly outside [0, 1] by finite differences
    if isinstance(field, np.ndarray):
        v = np.asarray(field, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"expected a 2D field, got shape {v.shape}")
        return v
    return as_field_array(field)


def soft_indicator(field, cfg: SoftConfig = SoftConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Logistic relaxation of thresholding and its elementwise derivative."""
    v = _values(field)
    s = expit(cfg.beta * (v - cfg.lam))
    return s, cfg.beta * s * (1.0 - s)


def soft_area(field, cfg: SoftConfig = SoftConfig()) -> LossValueGrad:
    s, ds = soft_indicator(field, cfg)
    return LossValueGrad(float(s.sum()), ds)


def _perimeter_of(s: np.ndarray, eps: float) -> tuple[float, np.ndarray]:
    """Smoothed total variation of ``s`` and its gradient with respect to ``s``."""
    dx, dy = forward_differences(s)
    root = np.sqrt(dx * dx + dy * dy + eps * eps)
    value = float(np.sum(root - eps))
    gx = dx / root
    gy = dy / root
    # adjoint of the forward differences (the zero-padded last row/column carry no weight)
    g = np.zeros_like(s)
    g[:, :-1] -= gx[:, :-1]
    g[:, 1:] += gx[:, :-1]
    g[:-1, :] -= gy[:-1, :]
    g[1:, :] += gy[:-1, :]
    return value, g


def soft_perimeter(field, cfg: SoftConfig = SoftConfig()) -> LossValueGrad:
    s, ds = soft_indicator(field, cfg)
    value, g = _perimeter_of(s, cfg.eps)
    return LossValueGrad(value, g * ds)


@njit(cache=True)
def _minimax_fill(u):
    # priority flood from the border over 4-neighbours: level[x] is the
    # smallest achievable maximum of u along a path from x to the border,
    # source[x] the pixel attaining it
    h, w = u.shape
    n = h * w
    flat = u.ravel()
    level = np.full(n, np.inf)
    source = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    heap = [(0.0, np.int64(0))]
    heap.pop()
    for i in range(n):
        r, c = i // w, i % w
        if r == 0 or c == 0 or r == h - 1 or c == w - 1:
            level[i] = flat[i]
            source[i] = i
            heapq.heappush(heap, (flat[i], np.int64(i)))
    while len(heap) > 0:
        lev, i = heapq.heappop(heap)
        if done[i]:
            continue
        done[i] = True
        r, c = i // w, i % w
        for k in range(4):
            if k == 0:
                rr, cc = r - 1, c
            elif k == 1:
                rr, cc = r + 1, c
            elif k == 2:
                rr, cc = r, c - 1
            else:
                rr, cc = r, c + 1
            if rr < 0 or cc < 0 or rr >= h or cc >= w:
                continue
            j = rr * w + cc
            if done[j]:
                continue
            if flat[j] >= lev:
                new, src = flat[j], j
            else:
                new, src = lev, source[i]
            if new < level[j]:
                level[j] = new
                source[j] = src
                heapq.heappush(heap, (new, np.int64(j)))
    return level.reshape(h, w), source.reshape(h, w)


def soft_fill(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grayscale hole filling and the flat index of the pixel each output copies.

    Thresholding commutes with it: ``soft_fill(u)[0] > t`` equals the binary
    hole fill of ``u > t``.
    """
    return _minimax_fill(np.ascontiguousarray(u, dtype=np.float64))


def _route(grad_filled: np.ndarray, source: np.ndarray) -> np.ndarray:
    """Pull a gradient back through ``soft_fill``: each pixel collects from its copies."""
    return np.bincount(source.ravel(), weights=grad_filled.ravel(),
                       minlength=source.size).reshape(source.shape)


def soft_compactness(field, cfg: SoftConfig = SoftConfig()) -> LossValueGrad:
    """4*pi*A/L**2 on the relaxed indicator; degenerate (0, zero grad) for flat fields.

    In ``filled`` mode the indicator is hole-filled first, so only the
    external contour counts.
    """
    s, ds = soft_indicator(field, cfg)
    if cfg.mode == "filled":
        s, source = soft_fill(s)
    a = float(s.sum())
    ell, g_ell = _perimeter_of(s, cfg.eps)
    if ell <= DEGENERATE_PERIMETER:
        return LossValueGrad(0.0, np.zeros_like(s), degenerate=True)
    mu = 4.0 * np.pi * a / ell ** 2
    g = 4.0 * np.pi * (ell - 2.0 * a * g_ell) / ell ** 3
    if cfg.mode == "filled":
        g = _route(g, source)
    return LossValueGrad(mu, g * ds)


def soft_topology_penalty(field, cfg: SoftConfig = SoftConfig()) -> LossValueGrad:
    """max(0, tau - mu) on the relaxed ratio; zero subgradient at the hinge."""
    mu = soft_compactness(field, cfg)
    if mu.degenerate:
        return LossValueGrad(cfg.tau, mu.grad, degenerate=True)
    gap = cfg.tau - mu.value
    if gap > 0.0:
        return LossValueGrad(gap, -mu.grad)
    return LossValueGrad(0.0, np.zeros_like(mu.grad))


def _check_pair(pred, target) -> tuple[np.ndarray, np.ndarray]:
    p = _values(pred)
    t = as_mask_array(target).astype(np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: prediction {p.shape} vs target {t.shape}")
    return p, t


def soft_dice_loss(pred, target, smooth: float = DICE_SMOOTH) -> LossValueGrad:
    p, t = _check_pair(pred, target)
    inter = float(np.sum(p * t))
    denom = float(p.sum() + t.sum()) + smooth
    num = 2.0 * inter + smooth
    grad = -(2.0 * t * denom - num) / denom ** 2
    return LossValueGrad(1.0 - num / denom, grad)


def cross_entropy_loss(pred, target, clamp: float = CE_CLAMP) -> LossValueGrad:
    p, t = _check_pair(pred, target)
    pc = np.clip(p, clamp, 1.0 - clamp)
    n = p.size
    value = float(-np.mean(t * np.log(pc) + (1.0 - t) * np.log1p(-pc)))
    grad = (-t / pc + (1.0 - t) / (1.0 - pc)) / n
    grad[(p < clamp) | (p > 1.0 - clamp)] = 0.0
    return LossValueGrad(value, grad)


# --------------------------------------------------------------------------
# finite-difference verification

@dataclass(frozen=True)
class GradientCheck:
    op: str
    n: int
    max_abs_err: float
    max_rel_err: float
    passed: bool
    excluded: int = 0

    def to_dict(self) -> dict:
        return {"op": self.op, "n": self.n, "max_abs_err": self.max_abs_err,
                "max_rel_err": self.max_rel_err, "pass": self.passed}

    def to_json(self) -> str:
        return dumps(self.to_dict())


def finite_difference(fn: Callable[[np.ndarray], LossValueGrad], x: np.ndarray,
                      step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of ``fn(x).value``, one coordinate at a time."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + step
        fp = fn(x).value
        x[idx] = orig - step
        fm = fn(x).value
        x[idx] = orig
        g[idx] = (fp - fm) / (2.0 * step)
    return g


def check_gradient(fn: Callable[[np.ndarray], LossValueGrad], field, step: float = 1e-4,
                   tol: float = 1e-5, exclude: np.ndarray | None = None,
                   floor: float = 1e-12, name: str | None = None) -> GradientCheck:
    """Compare the analytic gradient of ``fn`` with central differences.

    Relative error is measured against the gradient's scale,
    ``|a_i - f_i| / max(max|a|, max|f|, floor)``, so coordinates whose
    gradient is a near-cancelling sum or sits in a saturated logistic tail
    are judged by the same yardstick as the rest. Coordinates flagged in
    ``exclude`` (hinge or clamp crossings) are skipped.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x = _values(field).copy()
    analytic = fn(x).grad
    numeric = finite_difference(fn, x, step)
    keep = np.ones(x.shape, dtype=bool) if exclude is None else ~np.asarray(exclude, dtype=bool)
    a, f = analytic[keep], numeric[keep]
    abs_err = np.abs(a - f)
    scale = max(float(np.abs(a).max(initial=0.0)), float(np.abs(f).max(initial=0.0)), floor)
    max_abs = float(abs_err.max(initial=0.0))
    max_rel = max_abs / scale
    return GradientCheck(
        op=name or getattr(fn, "__name__", "loss"),
        n=int(keep.sum()),
        max_abs_err=max_abs,
        max_rel_err=max_rel,
        passed=bool(max_rel < tol),
        excluded=int(x.size - keep.sum()),
    )


def hinge_exclusion(field, cfg: SoftConfig = SoftConfig(), step: float = 1e-4,
                    margin: float = 0.01) -> np.ndarray:
    """Coordinates whose +/- step perturbation puts the ratio on a different
    side of tau (or within ``margin`` of it)."""
    x = _values(field).copy()
    side = np.zeros(x.shape, dtype=bool)
    base = soft_compactness(x, cfg).value - cfg.tau
    if abs(base) <= margin:
        side[:] = True
        return side
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        for h in (step, -step):
            x[idx] = orig + h
            d = soft_compactness(x, cfg).value - cfg.tau
            if np.sign(d) != np.sign(base) or abs(d) <= margin:
                side[idx] = True
        x[idx] = orig
    return side


def clamp_exclusion(field, step: float = 1e-4, clamp: float = CE_CLAMP) -> np.ndarray:
    """Coordinates within one step of the cross-entropy clamp bounds."""
    v = _values(field)
    return (v < clamp + step) | (v > 1.0 - clamp - step)


def random_field(shape, rng: np.random.Generator, low: float = 0.02, high: float = 0.98) -> np.ndarray:
    """Uniform test field kept off 0 and 1, where the log terms of the
    cross-entropy curve too sharply for a 1e-4 central difference."""
    return rng.uniform(low, high, size=shape)


def gradient_op(name: str, cfg: SoftConfig, target, field, step: float = 1e-4):
    """(loss callable, excluded coordinates) for one of the differentiable ops."""
    if name == "soft_area":
        return (lambda f: soft_area(f, cfg)), None
    if name == "soft_perimeter":
        return (lambda f: soft_perimeter(f, cfg)), None
    if name == "soft_topology_penalty":
        return (lambda f: soft_topology_penalty(f, cfg)), hinge_exclusion(field, cfg, step)
    if name == "soft_dice_loss":
        return (lambda f: soft_dice_loss(f, target)), None
    if name == "cross_entropy_loss":
        return (lambda f: cross_entropy_loss(f, target)), clamp_exclusion(field, step)
    raise ValueError(f"unknown op {name!r}")
