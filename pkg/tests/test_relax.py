import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from isoprior import geometry, relax, synth
from isoprior.relax import (
    SoftConfig, check_gradient, cross_entropy_loss, soft_area, soft_compactness, soft_dice_loss,
    soft_fill, soft_indicator, soft_perimeter, soft_topology_penalty,
)


def _disk_field(radius=20):
    return synth.rasterize(synth.disk(radius)).values.astype(float)


# --- indicator, area, perimeter -------------------------------------------

def test_indicator_midpoint_and_slope():
    cfg = SoftConfig(beta=50, lam=0.3)
    s, ds = soft_indicator(np.full((2, 2), 0.3), cfg)
    assert np.all(s == 0.5)
    assert np.allclose(ds, 50 / 4)


def test_indicator_saturates():
    s, _ = soft_indicator(np.ones((1, 1)), SoftConfig(beta=50, lam=0.5))
    assert abs(s[0, 0] - 1.0) < 1e-10


def test_soft_area_examples():
    assert soft_area(np.full((4, 5), 0.5)).value == pytest.approx(10.0)
    n = 64
    expected = n * (1.0 / (1.0 + math.exp(25.0)))
    assert soft_area(np.zeros((8, 8))).value == pytest.approx(expected, rel=1e-9)
    assert expected / n == pytest.approx(1.39e-11, rel=0.01)


def test_soft_perimeter_flat_is_zero():
    assert soft_perimeter(np.full((6, 6), 0.8)).value == 0.0


def test_soft_perimeter_vertical_step():
    f = np.zeros((10, 12))
    f[:, 6:] = 1.0
    cfg = SoftConfig(beta=400)
    soft = soft_perimeter(f, cfg).value
    hard = geometry.perimeter(f > 0.5, "isotropic")
    assert soft == pytest.approx(10.0, rel=0.01)
    assert soft == pytest.approx(hard, rel=0.01)


@settings(max_examples=50, deadline=None)
@given(arrays(bool, st.tuples(st.integers(3, 12), st.integers(3, 12))))
def test_saturated_soft_matches_hard(m):
    # beta -> infinity: soft area and perimeter converge to the hard isotropic values
    cfg = SoftConfig(beta=200, eps=1e-9)
    f = m.astype(float)
    assert soft_area(f, cfg).value == pytest.approx(m.sum(), abs=1e-6)
    assert soft_perimeter(f, cfg).value == pytest.approx(
        geometry.perimeter(m, "isotropic"), rel=1e-5, abs=1e-5)


# --- ratio and penalty ---------------------------------------------------------

def test_penalty_zero_on_saturated_disk():
    for mode in ("raw", "filled"):
        p = soft_topology_penalty(_disk_field(), SoftConfig(mode=mode))
        assert p.value == pytest.approx(0.0, abs=1e-9)
        assert not p.grad.any()


def test_penalty_active_on_broken_annulus_with_gap_gradient():
    spec = synth.broken_annulus(30, 24, 60)
    ring = synth.rasterize(spec).values
    cfg = SoftConfig(beta=5.0, mode="filled")
    p = soft_topology_penalty(ring.astype(float), cfg)
    assert p.value > 0.1
    rows, cols = np.mgrid[0:ring.shape[0], 0:ring.shape[1]] + 0.5
    cy, cx = spec.centers[0]
    rad = np.hypot(rows - cy, cols - cx)
    ang = synth.polar_angle(rows, cols, spec.centers[0])
    gap = synth.in_gap(ang, spec.gap_orientation, spec.gap_angle) & (rad > 24) & (rad < 30)
    assert np.abs(p.grad[gap]).max() > 0
    # descending the gradient raises the gap pixels: it pushes toward closing the ring
    assert (-p.grad[gap]).mean() > 0


def test_degenerate_flat_field():
    cfg = SoftConfig(tau=0.6)
    p = soft_topology_penalty(np.full((8, 8), 0.9), cfg)
    assert p.degenerate and p.value == 0.6 and not p.grad.any()
    mu = soft_compactness(np.full((8, 8), 0.1), cfg)
    assert mu.degenerate and mu.value == 0.0


def test_hard_limit_of_soft_ratio():
    ring = synth.rasterize(synth.annulus(20, 12)).values.astype(float)
    for mode in ("raw", "filled"):
        soft = soft_compactness(ring, SoftConfig(beta=200, eps=1e-9, mode=mode)).value
        m = ring > 0.5
        if mode == "filled":
            m = geometry.fill_holes(m)
        hard = geometry.compactness(m.sum(), geometry.perimeter(m, "isotropic"))
        assert soft == pytest.approx(hard, rel=1e-5)


# --- soft fill --------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 10)),
              elements=st.floats(0, 1)), st.floats(0.05, 0.95))
def test_soft_fill_commutes_with_threshold(u, t):
    filled, source = soft_fill(u)
    np.testing.assert_array_equal(filled > t, geometry.fill_holes(u > t))
    assert np.all(filled >= u)
    np.testing.assert_array_equal(filled.ravel(), u.ravel()[source.ravel()])


def test_soft_fill_ring():
    u = np.zeros((5, 5))
    u[1:4, 1:4] = 0.9
    u[2, 2] = 0.1
    filled, source = soft_fill(u)
    assert filled[2, 2] == 0.9
    assert source[2, 2] != 2 * 5 + 2


# --- data terms --------------------------------------------------------------

def test_dice_examples():
    t = np.zeros((4, 4), bool)
    t[1:3, 1:3] = True
    assert soft_dice_loss(t.astype(float), t).value == 0.0
    assert soft_dice_loss(np.zeros((4, 4)), np.zeros((4, 4), bool)).value == 0.0


def test_ce_examples():
    t = np.zeros((4, 4), bool)
    t[:2] = True
    assert cross_entropy_loss(t.astype(float), t).value < 1e-6
    for target in (t, ~t):
        assert cross_entropy_loss(np.full((4, 4), 0.5), target).value == pytest.approx(math.log(2))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        soft_dice_loss(np.zeros((3, 3)), np.zeros((3, 4), bool))


# --- finite-difference checks ---------------------------------------------------

def test_check_soft_area_8x8():
    rng = np.random.default_rng(0)
    rep = check_gradient(lambda f: soft_area(f), rng.random((8, 8)), step=1e-4, tol=1e-5)
    assert rep.passed, rep


def test_check_soft_perimeter_small_eps():
    rng = np.random.default_rng(1)
    rep = check_gradient(lambda f: soft_perimeter(f, SoftConfig(eps=1e-6)), relax.random_field((12, 12), rng),
                         step=1e-4, tol=1e-4)
    assert rep.passed, rep


@pytest.mark.parametrize("op", ["soft_area", "soft_perimeter", "soft_topology_penalty",
                                "soft_dice_loss", "cross_entropy_loss"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ops_pass_fd_check(op, seed):
    rng = np.random.default_rng(seed)
    field = relax.random_field((10, 10), rng)
    target = rng.random((10, 10)) > 0.5
    cfg = SoftConfig()
    fn, exclude = relax.gradient_op(op, cfg, target, field)
    rep = check_gradient(fn, field, 1e-4, 1e-4, exclude=exclude, name=op)
    assert rep.passed, rep


def test_filled_mode_penalty_gradient():
    # away from fill-source switches the filled ratio is smooth; a blurred ring
    # with its gap partly open keeps every source unique
    spec = synth.broken_annulus(7, 4, 60)
    ring = synth.rasterize(spec).values.astype(float)
    field = np.clip(ndimage.gaussian_filter(ring, 1.0) + 0.05, 0, 1)
    cfg = SoftConfig(beta=5.0, mode="filled")
    fn, exclude = relax.gradient_op("soft_topology_penalty", cfg, None, field)
    rep = check_gradient(fn, field, 1e-5, 1e-4, exclude=exclude)
    assert rep.passed, rep


def test_hinge_at_tau_excludes_everything():
    ring = synth.rasterize(synth.broken_annulus(7, 4, 60)).values.astype(float)
    field = np.clip(ndimage.gaussian_filter(ring, 1.0), 0, 1)
    probe = SoftConfig(beta=5.0)
    mu = soft_compactness(field, probe).value
    assert 0.0 < mu < 1.0
    cfg = SoftConfig(beta=5.0, tau=mu)   # engineered: mu_s == tau exactly
    assert soft_topology_penalty(field, cfg).value == 0.0
    exclude = relax.hinge_exclusion(field, cfg)
    assert exclude.all()
    rep = check_gradient(lambda f: soft_topology_penalty(f, cfg), field, exclude=exclude)
    assert rep.n == 0 and rep.excluded == field.size and rep.passed


def test_clamp_exclusion_marks_saturated_pixels():
    f = np.array([[0.0, 0.5, 1.0]])
    np.testing.assert_array_equal(relax.clamp_exclusion(f), [[True, False, True]])


def test_check_detects_wrong_gradient():
    def bad(f):
        r = soft_area(f)
        return relax.LossValueGrad(r.value, 2.0 * r.grad)
    rng = np.random.default_rng(0)
    assert not check_gradient(bad, rng.random((4, 4))).passed


def test_gradient_check_json():
    rep = relax.GradientCheck("soft_area", 64, 1e-9, 2e-8, True)
    assert rep.to_json() == ('{"op": "soft_area", "n": 64, "max_abs_err": 0.000000, '
                             '"max_rel_err": 0.000000, "pass": true}')


def test_config_validation():
    with pytest.raises(ValueError):
        SoftConfig(beta=0)
    with pytest.raises(ValueError):
        SoftConfig(lam=1.0)
    with pytest.raises(ValueError):
        SoftConfig(mode="hull")
