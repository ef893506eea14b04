"""Projected gradient descent on a soft field under Dice + cross-entropy +
topology penalty, used to close broken rings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import synth
from .raster import BinaryMask, PredictionField, as_mask_array, threshold_field
from .relax import SoftConfig, cross_entropy_loss, soft_compactness, soft_dice_loss, soft_topology_penalty

DEFAULT_SOFT = SoftConfig(beta=5.0, mode="filled")
DEFAULT_STEP_SIZE = 2.0
MAX_HALVINGS = 20
CONVERGENCE_TOL = 1e-9
CONVERGENCE_RUN = 10


@dataclass(frozen=True)
class Weights:
    dice: float = 1.0
    ce: float = 1.0
    topo: float = 5.0

    def __post_init__(self):
        if min(self.dice, self.ce, self.topo) < 0:
            raise ValueError("loss weights must be non-negative")
        if max(self.dice, self.ce, self.topo) <= 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True, eq=False)
class RepairProblem:
    init_field: PredictionField
    reference: BinaryMask
    weights: Weights = Weights()
    steps: int = 500
    step_size: float = DEFAULT_STEP_SIZE
    soft: SoftConfig = DEFAULT_SOFT
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.init_field, PredictionField):
            object.__setattr__(self, "init_field", PredictionField(self.init_field))
        if not isinstance(self.reference, BinaryMask):
            object.__setattr__(self, "reference", BinaryMask(self.reference))
        if self.init_field.values.shape != self.reference.values.shape:
            raise ValueError("init_field and reference shapes differ")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    total: float
    dice: float
    ce: float
    penalty: float
    mu: float


@dataclass(frozen=True, eq=False)
class RepairTrace:
    records: list[TraceRecord]
    final_field: PredictionField
    final_mask: BinaryMask
    converged: bool = False
    stalled: bool = False

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total for r in self.records])

    def to_csv(self) -> str:
        lines = ["iter,total,dice,ce,penalty,mu"]
        for r in self.records:
            lines.append(f"{r.iteration},{r.total:.6f},{r.dice:.6f},{r.ce:.6f},{r.penalty:.6f},{r.mu:.6f}")
        return "\n".join(lines) + "\n"


def objective(xi: np.ndarray, reference: np.ndarray, weights: Weights, soft: SoftConfig):
    """Weighted loss, its gradient, and the (dice, ce, penalty, mu) components."""
    d = soft_dice_loss(xi, reference)
    c = cross_entropy_loss(xi, reference)
    p = soft_topology_penalty(xi, soft)
    total = weights.dice * d.value + weights.ce * c.value + weights.topo * p.value
    grad = weights.dice * d.grad + weights.ce * c.grad + weights.topo * p.grad
    mu = soft_compactness(xi, soft).value
    return total, grad, (d.value, c.value, p.value, mu)


def repair(problem: RepairProblem) -> RepairTrace:
    """Projected gradient descent with backtracking; every accepted iterate is
    recorded. The step restarts from ``step_size`` each iteration and is halved
    (at most 20 times) until the objective does not increase.
    """
    ref = problem.reference.values
    w, soft = problem.weights, problem.soft
    xi = np.array(problem.init_field.values, dtype=np.float64)
    total, grad, parts = objective(xi, ref, w, soft)
    records = [TraceRecord(0, total, *parts)]
    quiet = 0
    converged = stalled = False
    for it in range(1, problem.steps + 1):
        eta = problem.step_size
        for _ in range(MAX_HALVINGS + 1):
            cand = np.clip(xi - eta * grad, 0.0, 1.0)
            c_total, c_grad, c_parts = objective(cand, ref, w, soft)
            if c_total <= total:
                break
            eta *= 0.5
        else:
            stalled = True
            break
        delta = total - c_total
        xi, total, grad = cand, c_total, c_grad
        records.append(TraceRecord(it, total, *c_parts))
        quiet = quiet + 1 if abs(delta) < CONVERGENCE_TOL else 0
        if quiet >= CONVERGENCE_RUN:
            converged = True
            break
    final = PredictionField(xi)
    return RepairTrace(records, final, threshold_field(final, soft.lam), converged, stalled)


def accepted_loss_monotone(trace) -> bool:
    """True iff the recorded totals never increase."""
    totals = trace.totals if isinstance(trace, RepairTrace) else np.asarray(
        [getattr(r, "total", r) for r in trace], dtype=np.float64)
    return bool(np.all(np.diff(totals) <= 0.0))


def noisy_field(mask, amplitude: float = 0.1, seed: int = 0) -> PredictionField:
    """Mask plus seeded additive uniform noise in [-amplitude, amplitude], clamped."""
    m = as_mask_array(mask).astype(np.float64)
    rng = np.random.default_rng(seed)
    return PredictionField(np.clip(m + rng.uniform(-amplitude, amplitude, m.shape), 0.0, 1.0))


def broken_ring_problem(seed: int, gap_angle: float | None = None, orientation: float | None = None,
                        outer: float = 30.0, inner: float = 24.0, weights: Weights = Weights(),
                        steps: int = 500, noise: float = 0.1) -> tuple[RepairProblem, synth.ShapeSpec]:
    """Noisy broken ring whose own mask is the fidelity target.

    Unset gap angle / orientation are drawn from the seed (gap in [20, 60]
    degrees, orientation in [0, 360)).
    """
    rng = np.random.default_rng(1000 + seed)
    drawn_gap, drawn_orient = rng.uniform(20.0, 60.0), rng.uniform(0.0, 360.0)
    spec = synth.broken_annulus(outer, inner,
                                drawn_gap if gap_angle is None else gap_angle,
                                drawn_orient if orientation is None else orientation)
    mask = synth.rasterize(spec)
    problem = RepairProblem(noisy_field(mask, noise, seed), mask, weights, steps, seed=seed)
    return problem, spec
