import numpy as np
import pytest

from isoprior import geometry, metrics, synth
from isoprior.raster import PredictionField
from isoprior.repair import (
    RepairProblem, TraceRecord, Weights, accepted_loss_monotone, broken_ring_problem, noisy_field,
    repair,
)


@pytest.fixture(scope="module")
def gap40():
    problem, spec = broken_ring_problem(seed=0, gap_angle=40.0, orientation=0.0)
    return problem, spec, repair(problem)


def _closed_truth(spec):
    big, small = spec.radii
    return synth.rasterize(synth.annulus(big, small, spec.grid, spec.centers[0])).values


def test_fidelity_only_at_optimum_converges_at_once():
    ref = synth.rasterize(synth.disk(8)).values
    problem = RepairProblem(ref.astype(float), ref, Weights(1, 1, 0), steps=50)
    trace = repair(problem)
    assert trace.records[0].total < 1e-6
    assert trace.converged
    assert len(trace.records) <= 11
    np.testing.assert_array_equal(trace.final_mask.values, ref)


def test_topology_term_closes_gap(gap40):
    _, _, trace = gap40
    rep = geometry.region_report(trace.final_mask)
    assert rep.penalty == 0.0 and rep.admissible
    assert accepted_loss_monotone(trace)


@pytest.mark.xfail(strict=True, reason="the hinge switches off once a thin chord seals the hole; "
                                        "the seal is cheaper than rebuilding the arc, so overlap with "
                                        "the closed ring drops")
def test_repair_improves_dice_to_closed_ring(gap40):
    problem, spec, trace = gap40
    truth = _closed_truth(spec)
    before = metrics.dice(problem.reference, truth)
    after = metrics.dice(trace.final_mask, truth)
    assert after > before


def test_fidelity_alone_keeps_gap():
    problem, _ = broken_ring_problem(seed=0, gap_angle=40.0, orientation=0.0, weights=Weights(1, 1, 0))
    trace = repair(problem)
    assert geometry.region_report(trace.final_mask).penalty > 0.1


def test_repair_is_deterministic():
    a, _ = broken_ring_problem(seed=3, steps=15)
    b, _ = broken_ring_problem(seed=3, steps=15)
    ta, tb = repair(a), repair(b)
    assert ta.to_csv() == tb.to_csv()
    np.testing.assert_array_equal(ta.final_field.values, tb.final_field.values)


def test_trace_csv_layout(gap40):
    _, _, trace = gap40
    lines = trace.to_csv().splitlines()
    assert lines[0] == "iter,total,dice,ce,penalty,mu"
    assert lines[1].startswith("0,")
    assert len(lines) == len(trace.records) + 1


def test_monotone_helper():
    assert accepted_loss_monotone([3.0, 2.0, 2.0, 1.0])
    assert not accepted_loss_monotone([1.0, 2.0])
    assert accepted_loss_monotone([TraceRecord(0, 1.0, 0, 0, 0, 0)])
    assert accepted_loss_monotone([])


def test_noisy_field_is_seeded_and_bounded():
    m = synth.rasterize(synth.disk(6)).values
    a = noisy_field(m, 0.1, seed=4).values
    assert np.array_equal(a, noisy_field(m, 0.1, seed=4).values)
    assert a.min() >= 0 and a.max() <= 1
    assert np.abs(a - m).max() <= 0.1


def test_problem_validation():
    f = PredictionField(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        RepairProblem(f, np.zeros((4, 5), bool))
    with pytest.raises(ValueError):
        RepairProblem(f, np.zeros((4, 4), bool), steps=0)
    with pytest.raises(ValueError):
        Weights(-1, 1, 1)
    with pytest.raises(ValueError):
        Weights(0, 0, 0)


def test_seeded_family_draws_gap_in_range():
    for seed in range(10):
        _, spec = broken_ring_problem(seed)
        assert 20.0 <= spec.gap_angle <= 60.0
        assert 0.0 <= spec.gap_orientation < 360.0
