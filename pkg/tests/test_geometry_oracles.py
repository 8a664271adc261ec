"""Closed-form areas against the independent quadrature and Monte Carlo
routes; the randomized acceptance grid lives in test_acceptance, this file
keeps the targeted and property-based variants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cbapsim import geometry as g
from cbapsim import validation as v
from cbapsim.geometry import BeamGeometry

RADIUS = 23.5
TOTAL = math.pi * RADIUS ** 2


def rel_err(a, b, floor):
    return abs(a - b) / max(abs(b), floor)


@settings(max_examples=60, deadline=None)
@given(d_frac=st.floats(0.01, 1.0), theta_s=st.floats(0.02, math.pi),
       radius=st.floats(1.0, 60.0))
def test_area_uplink_matches_quadrature(d_frac, theta_s, radius):
    d_t = d_frac * radius
    cf = g.area_uplink(d_t, radius, theta_s)
    quad = v.area_uplink_quad(d_t, radius, theta_s)
    assert rel_err(cf, quad, 1e-6 * math.pi * radius ** 2) < 1e-8


@settings(max_examples=40, deadline=None)
@given(d_frac=st.floats(0.01, 1.0), theta_s=st.floats(0.02, math.pi),
       theta_ap=st.floats(0.02, math.pi), phi_frac=st.floats(0.0, 1.0))
def test_area_both_matches_quadrature(d_frac, theta_s, theta_ap, phi_frac):
    d_t = d_frac * RADIUS
    phi_ap = phi_frac * theta_ap
    cf = g.area_both(d_t, phi_ap, RADIUS, theta_s, theta_ap)
    quad = v.area_both_quad(d_t, phi_ap, RADIUS, theta_s, theta_ap)
    assert rel_err(cf, quad, 1e-6 * TOTAL) < 1e-8


@pytest.mark.parametrize("theta_s", [0.15, 0.7, 1.5, 2.6, math.pi])
def test_expected_area_uplink_matches_nested_quadrature(theta_s):
    cf = g.expected_area_uplink(RADIUS, theta_s)
    quad = v.expected_area_uplink_quad(RADIUS, theta_s)
    assert rel_err(cf, quad, 1e-6 * TOTAL) < 1e-8


@pytest.mark.parametrize("theta_s,theta_ap", [
    (2.8, 1.2), (3.0, 2.0), (math.pi, math.pi), (2.2, 2.0), (2.9, 0.5),
])
def test_expected_area_both_matches_raw_quadrature(theta_s, theta_ap):
    semi = g.expected_area_both(RADIUS, theta_s, theta_ap)
    raw = v.expected_area_both_quad(RADIUS, theta_s, theta_ap)
    assert rel_err(semi, raw, 1e-6 * TOTAL) < 1e-8


def test_expected_area_both_widest_beams_against_oracles():
    # no closed literature value: quadrature and Monte Carlo only
    val = g.expected_area_both(RADIUS, math.pi, math.pi)
    raw = v.expected_area_both_quad(RADIUS, math.pi, math.pi)
    assert rel_err(val, raw, 1e-6 * TOTAL) < 1e-8
    geo = BeamGeometry(n_ap_sectors=2, n_sta_sectors=2, coverage_radius=RADIUS)
    est = v.region_areas_mc(geo, 400_000, np.random.default_rng(99))[2]
    assert est.within(val)


def test_uplink_predicate_agrees_with_first_principles_beams():
    rng = np.random.default_rng(123)
    n = 100_000
    theta_s = 2 * math.pi / 5
    d_t = 11.0
    pts = v.sample_disk(rng, n, RADIUS)
    xy = np.column_stack([pts[:, 0] * np.cos(pts[:, 1]),
                          pts[:, 0] * np.sin(pts[:, 1])])
    oracle = v.mutual_beam_hearing(np.array([d_t, 0.0]), xy, theta_s)
    pred = np.array([g.hears_uplink(d_t, r, phi, theta_s)
                     for r, phi in pts])
    assert np.array_equal(oracle, pred)


def test_downlink_fraction_matches_sector_share():
    rng = np.random.default_rng(7)
    n = 100_000
    theta_ap = 2 * math.pi / 7
    phi_ap = 0.31
    est = v.area_downlink_mc(RADIUS, theta_ap, phi_ap, n, rng)
    assert est.within(g.area_downlink(RADIUS, theta_ap))


def test_area_uplink_monte_carlo():
    rng = np.random.default_rng(2024)
    cf = g.area_uplink(9.0, RADIUS, 1.3)
    est = v.area_uplink_mc(9.0, RADIUS, 1.3, 500_000, rng)
    assert est.within(cf)


def test_rotation_invariance_of_areas():
    rng = np.random.default_rng(31)
    cf = g.area_uplink(14.0, RADIUS, 0.9)
    for rot in (0.7, 2.9, 4.4):
        est = v.area_uplink_mc(14.0, RADIUS, 0.9, 400_000, rng,
                               frame_rotation=rot)
        assert est.within(cf)
    geo = BeamGeometry(n_ap_sectors=3, n_sta_sectors=3, coverage_radius=RADIUS)
    ref = g.region_areas(geo)
    ests = v.region_areas_mc(geo, 400_000, rng, frame_rotation=1.234)
    for reference, est in zip(ref.as_tuple(), ests):
        assert est.within(reference)


def test_region_classification_monte_carlo():
    rng = np.random.default_rng(90)
    for n_ap, n_s in [(2, 2), (3, 4), (6, 3)]:
        geo = BeamGeometry(n_ap_sectors=n_ap, n_sta_sectors=n_s,
                           coverage_radius=RADIUS)
        ref = g.region_areas(geo)
        ests = v.region_areas_mc(geo, 500_000, rng)
        for reference, est in zip(ref.as_tuple(), ests):
            assert est.within(reference)
