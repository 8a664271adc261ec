import math

import numpy as np
import pytest

from cbapsim import geometry as g
from cbapsim.geometry import (BeamGeometry, GroupCounts, LinkBudget,
                              coverage_radius, group_counts, noise_power,
                              phi_lim, region_areas,
                              snr_threshold_for_radius)


def make_budget(**overrides):
    kwargs = dict(tx_power_sta=0.1, tx_power_ap=0.1, pathloss_exponent=3.0,
                  pathloss_norm=6.32e6, noise_power=8.65e-11,
                  snr_threshold=10.0)
    kwargs.update(overrides)
    return LinkBudget(**kwargs)


class TestCoverageRadius:
    def test_symmetric_budget_limits_coincide(self):
        # tx_power_sta = tx_power_ap * N_AP makes both link products equal
        b = make_budget(tx_power_sta=0.5, tx_power_ap=0.5 / 8)
        r = coverage_radius(b, n_ap_sectors=8, n_sta_sectors=4)
        common = (0.5 * 4 / (10.0 * 6.32e6 * 8.65e-11)) ** (1 / 3.0)
        assert r == pytest.approx(common, rel=1e-12)

    def test_threshold_scaling(self):
        b1 = make_budget(snr_threshold=5.0)
        b2 = make_budget(snr_threshold=10.0)
        r1 = coverage_radius(b1, 8, 8)
        r2 = coverage_radius(b2, 8, 8)
        assert r2 == pytest.approx(r1 * 2 ** (-1 / 3.0), rel=1e-12)

    def test_takes_most_stringent_link(self):
        b = make_budget(tx_power_ap=1e-6)
        r = coverage_radius(b, 8, 8)
        down = (1e-6 * 64 / (10.0 * 6.32e6 * 8.65e-11)) ** (1 / 3.0)
        assert r == pytest.approx(down, rel=1e-12)

    def test_paper_noise_configuration_round_trip(self):
        # 10 dB noise figure over 2.16 GHz, eta = 3: back-solving the SNR
        # threshold for a 23.5 m disk must reproduce exactly that radius
        n = noise_power(10.0, 2.16e9)
        assert n == pytest.approx(1.380649e-23 * 290 * 10 * 2.16e9, rel=1e-12)
        base = make_budget(noise_power=n, snr_threshold=1.0)
        gamma = snr_threshold_for_radius(23.5, base, 8, 8)
        budget = make_budget(noise_power=n, snr_threshold=gamma)
        assert coverage_radius(budget, 8, 8) == pytest.approx(23.5, rel=1e-12)

    def test_invalid_budget_rejected(self):
        with pytest.raises(ValueError):
            make_budget(noise_power=0.0)
        with pytest.raises(ValueError):
            make_budget(pathloss_exponent=1.5)


class TestPhiLim:
    def test_interferer_at_center(self):
        assert phi_lim(0.0, 5.0, math.pi / 2) == pytest.approx(
            math.pi - math.pi / 4, rel=1e-12)

    def test_equal_radii_identity(self):
        # arcsin(sin(theta_s/2)) = theta_s/2 for theta_s <= pi
        assert phi_lim(3.0, 3.0, math.pi / 2) == pytest.approx(
            math.pi / 2, rel=1e-12)

    def test_half_ratio(self):
        expect = math.pi - math.pi / 6 - math.asin(0.5 * math.sin(math.pi / 6))
        assert phi_lim(1.0, 2.0, math.pi / 3) == pytest.approx(expect,
                                                               rel=1e-12)

    def test_degenerate_input(self):
        with pytest.raises(ValueError):
            phi_lim(0.0, 0.0, 1.0)

    def test_range_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            theta_s = rng.uniform(1e-6, math.pi)
            d_t = rng.uniform(1e-9, 30.0)
            d_i = rng.uniform(0.0, 30.0)
            val = phi_lim(d_i, d_t, theta_s)
            assert math.pi - theta_s - 1e-12 <= val
            assert val <= math.pi - theta_s / 2 + 1e-12


class TestHearingPredicates:
    def test_diametrically_opposite_always_heard(self):
        for theta_s in (0.1, 1.0, math.pi):
            assert g.hears_uplink(5.0, 5.0, math.pi, theta_s)

    def test_collinear_same_side_not_heard(self):
        assert not g.hears_uplink(5.0, 2.0, 0.0, math.pi / 3)

    def test_symmetric_in_endpoint_swap(self):
        rng = np.random.default_rng(17)
        for _ in range(500):
            d_t, d_i = rng.uniform(0.1, 20.0, 2)
            phi = rng.uniform(0, 2 * math.pi)
            theta_s = rng.uniform(0.05, math.pi)
            # swapping roles negates the relative phase
            assert g.hears_uplink(d_t, d_i, phi, theta_s) == \
                g.hears_uplink(d_i, d_t, -phi, theta_s)

    def test_downlink_same_ray(self):
        assert g.hears_downlink(0.3, 0.0, math.pi / 4)

    def test_downlink_outside_sector(self):
        assert not g.hears_downlink(math.pi / 2, 3 * math.pi / 4, math.pi)

    def test_downlink_inside_sector(self):
        assert g.hears_downlink(math.pi / 2, -math.pi / 4, math.pi)


class TestAreas:
    def test_area_uplink_vanishing_beam(self):
        assert g.area_uplink(5.0, 10.0, 1e-9) == pytest.approx(0.0, abs=1e-6)

    def test_area_downlink_full_disk(self):
        assert g.area_downlink(4.0, 2 * math.pi) == pytest.approx(
            math.pi * 16.0, rel=1e-12)

    def test_area_downlink_direct(self):
        assert g.area_downlink(2.0, math.pi / 2) == pytest.approx(math.pi,
                                                                  rel=1e-12)

    def test_expected_area_uplink_scale_invariance(self):
        theta_s = 1.1
        f1 = g.expected_area_uplink(10.0, theta_s) / (math.pi * 100.0)
        f2 = g.expected_area_uplink(23.5, theta_s) / (math.pi * 23.5 ** 2)
        assert f1 == pytest.approx(f2, abs=1e-9)

    def test_expected_area_uplink_monotone_in_beam_width(self):
        vals = [g.expected_area_uplink(10.0, th)
                for th in np.linspace(0.05, math.pi, 40)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_area_both_vanishes_when_indicators_fail(self):
        # both halves below the vanishing threshold
        theta_s, theta_ap = 0.5, 1.0
        phi_ap = 0.4
        assert phi_ap < math.pi - theta_s
        assert theta_ap - phi_ap < math.pi - theta_s
        assert g.area_both(5.0, phi_ap, 10.0, theta_s, theta_ap) == 0.0

    def test_area_both_never_negative_and_bounded(self):
        rng = np.random.default_rng(71)
        for _ in range(300):
            radius = rng.uniform(1.0, 30.0)
            theta_s = rng.uniform(0.05, math.pi)
            theta_ap = rng.uniform(0.05, math.pi)
            d_t = rng.uniform(1e-3, 1.0) * radius
            phi_ap = rng.uniform(0, theta_ap)
            val = g.area_both(d_t, phi_ap, radius, theta_s, theta_ap)
            assert 0.0 <= val
            assert val <= g.area_uplink(d_t, radius, theta_s) + 1e-9
            assert val <= g.area_downlink(radius, theta_ap) + 1e-9

    def test_expected_area_both_bounded_by_components(self):
        geo = BeamGeometry(n_ap_sectors=2, n_sta_sectors=2,
                           coverage_radius=10.0)
        val = g.expected_area_both(10.0, geo.theta_s, geo.theta_ap)
        assert 0.0 < val
        assert val <= g.expected_area_uplink(10.0, geo.theta_s) + 1e-9
        assert val <= g.area_downlink(10.0, geo.theta_ap) + 1e-9


class TestRegions:
    def test_conservation_and_nonnegativity(self):
        for n_ap, n_s in [(2, 2), (2, 3), (3, 2), (4, 8), (8, 4), (16, 16)]:
            geo = BeamGeometry(n_ap_sectors=n_ap, n_sta_sectors=n_s,
                               coverage_radius=23.5)
            areas = region_areas(geo)
            assert min(areas.as_tuple()) >= 0.0
            assert sum(areas.as_tuple()) == pytest.approx(areas.total,
                                                          rel=1e-12)

    def test_overlap_within_margins(self):
        geo = BeamGeometry(n_ap_sectors=2, n_sta_sectors=2,
                           coverage_radius=5.0)
        a = region_areas(geo)
        assert a.r3 <= min(a.r1 + a.r3, a.r2 + a.r3) + 1e-12

    def test_narrow_beams_have_empty_overlap(self):
        geo = BeamGeometry(n_ap_sectors=8, n_sta_sectors=8,
                           coverage_radius=23.5)
        assert region_areas(geo).r3 == 0.0


class TestGroupCounts:
    def test_zero_intensity(self):
        geo = BeamGeometry(n_ap_sectors=4, n_sta_sectors=4,
                           coverage_radius=10.0)
        counts = group_counts(0.0, region_areas(geo))
        assert counts.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_linear_in_intensity(self):
        geo = BeamGeometry(n_ap_sectors=4, n_sta_sectors=4,
                           coverage_radius=10.0)
        areas = region_areas(geo)
        c1 = group_counts(0.01, areas)
        c2 = group_counts(0.02, areas)
        for a, b in zip(c1.as_tuple(), c2.as_tuple()):
            assert b == pytest.approx(2 * a, rel=1e-12)

    def test_total_is_disk_expectation(self):
        geo = BeamGeometry(n_ap_sectors=6, n_sta_sectors=10,
                           coverage_radius=23.5)
        counts = group_counts(0.015, region_areas(geo))
        assert counts.total == pytest.approx(0.015 * math.pi * 23.5 ** 2,
                                             rel=1e-12)

    def test_negative_intensity_rejected(self):
        geo = BeamGeometry(n_ap_sectors=4, n_sta_sectors=4,
                           coverage_radius=10.0)
        with pytest.raises(ValueError):
            group_counts(-1.0, region_areas(geo))


class TestBeamGeometryInvariants:
    def test_sector_minimum(self):
        with pytest.raises(ValueError):
            BeamGeometry(n_ap_sectors=1, n_sta_sectors=4, coverage_radius=5.0)
        with pytest.raises(ValueError):
            BeamGeometry(n_ap_sectors=4, n_sta_sectors=1, coverage_radius=5.0)

    def test_radius_positive(self):
        with pytest.raises(ValueError):
            BeamGeometry(n_ap_sectors=4, n_sta_sectors=4, coverage_radius=0.0)
