import dataclasses
import math

import numpy as np
import pytest

from cbapsim.analytical import (DtiConfig, EdcaParams, collision_system,
                                throughput)
from cbapsim.config import default_frame_timings
from cbapsim.geometry import BeamGeometry, GroupCounts, group_counts, region_areas
from cbapsim.simulator import (BiSchedule, build_schedule,
                               full_hearing_topology, place_stations,
                               replicate, run)


def table_params():
    return EdcaParams(w0=16, m=6, m_prime=6, slot_sigma=5e-6, sifs=3e-6,
                      difs=13e-6, delta=100e-9, **default_frame_timings())


def table_geo(n_ap=8, n_s=8):
    return BeamGeometry(n_ap_sectors=n_ap, n_sta_sectors=n_s,
                        coverage_radius=23.5)


def table_dti(nu=0.5, n_cbap=3, n_sp=3, t_bhi=2e-3):
    return DtiConfig(t_bi=0.1, t_bhi=t_bhi, t_cbap=nu * (0.1 - t_bhi),
                     n_cbap=n_cbap, n_sp=n_sp)


class TestPlaceStations:
    def test_zero_intensity_gives_empty_topology(self):
        topo = place_stations(0.0, table_geo(), seed=1)
        assert topo.n_stations == 0
        assert topo.hears_up.shape == (0, 0)

    def test_matrices_consistent_and_diagonal_true(self):
        topo = place_stations(0.02, table_geo(), seed=3)
        n = topo.n_stations
        assert topo.hears_up.shape == (n, n)
        assert np.all(np.diag(topo.hears_up))
        assert np.all(np.diag(topo.hears_down))
        # uplink hearing is mutual, downlink follows shared sectors
        assert np.array_equal(topo.hears_up, topo.hears_up.T)
        assert np.array_equal(topo.hears_down, topo.hears_down.T)

    def test_poisson_count_moment(self):
        geo = table_geo()
        lam = 0.01
        counts = [place_stations(lam, geo, seed=s).n_stations
                  for s in range(4000)]
        mean = np.mean(counts)
        expect = lam * geo.total_area
        sigma = math.sqrt(expect / len(counts))
        assert abs(mean - expect) < 3 * sigma

    def test_group_counts_match_region_areas(self):
        # ties the sampled hearing matrices to the analytic region split:
        # the typical-station expectation pools stations across topologies
        # (per-topology averaging would under-weight dense draws)
        geo = table_geo(n_ap=4, n_s=4)
        lam = 0.01
        expect = np.array(group_counts(lam, region_areas(geo)).as_tuple())
        sums, sizes = [], []
        for s in range(600):
            topo = place_stations(lam, geo, seed=1000 + s)
            if topo.n_stations == 0:
                sums.append(np.zeros(4))
                sizes.append(0)
                continue
            sums.append(topo.group_counts_per_station().sum(axis=0))
            sizes.append(topo.n_stations)
        sums = np.array(sums)
        sizes = np.array(sizes, float)
        est = sums.sum(axis=0) / sizes.sum()
        # ratio-estimator variance by linearization over topologies
        resid = sums - est[None, :] * sizes[:, None]
        sigma = (resid.std(axis=0, ddof=1) * math.sqrt(len(sizes))
                 / sizes.sum())
        assert np.all(np.abs(est - expect) < 3 * sigma + 1e-9)


class TestSchedule:
    def test_intervals_cover_bi_exactly(self):
        sched = build_schedule(table_dti(nu=0.5, n_cbap=3, n_sp=3))
        assert sched.intervals[0][0] == "BHI"
        total = sum(b - a for _, a, b in sched.intervals)
        assert total == sched.t_bi_ns
        labels = [lab for lab, _, _ in sched.intervals]
        assert labels == ["BHI", "CBAP", "SP", "CBAP", "SP", "CBAP", "SP"]

    def test_cbap_lengths_equal_within_rounding(self):
        dti = table_dti(nu=0.5, n_cbap=3, n_sp=3)
        sched = build_schedule(dti)
        alloc_ns = dti.allocation * 1e9
        for a, b in sched.cbap_windows():
            assert abs((b - a) - alloc_ns) <= 1.0

    def test_full_contention_has_no_reserved_time(self):
        sched = build_schedule(table_dti(nu=1.0, n_cbap=2, n_sp=3))
        labels = {lab for lab, _, _ in sched.intervals}
        assert labels == {"BHI", "CBAP"}

    def test_surplus_class_appended(self):
        sched = build_schedule(table_dti(nu=0.5, n_cbap=1, n_sp=4))
        labels = [lab for lab, _, _ in sched.intervals]
        assert labels == ["BHI", "CBAP", "SP", "SP", "SP", "SP"]


class TestRun:
    def test_lone_station_clean_and_matches_model(self):
        params = table_params()
        dti = DtiConfig(t_bi=0.1, t_bhi=0.0, t_cbap=0.1, n_cbap=1, n_sp=0)
        topo = place_stations(0.001, table_geo(), seed=5, n_override=1)
        m = run(topo, build_schedule(dti), params, p_e=0.0, duration=2.0,
                seed=9)
        assert m.collision_count == 0
        assert m.drop_count == 0
        assert m.tx_attempts == m.success_count
        sol = collision_system(GroupCounts(0, 0, 0, 0), dti, params)
        ana = throughput(sol, 1.0, params.payload_bits)
        assert abs(m.throughput_bps - ana) / ana < 0.02

    def test_lone_station_never_drops_with_clean_channel(self):
        params = table_params()
        topo = place_stations(0.001, table_geo(), seed=5, n_override=1)
        m = run(topo, build_schedule(table_dti(nu=0.25)), params, p_e=0.0,
                duration=3.0, seed=11)
        assert m.drop_count == 0

    def test_seed_determinism(self):
        params = table_params()
        topo = place_stations(0.01, table_geo(), seed=21)
        sched = build_schedule(table_dti(nu=0.5))
        a = run(topo, sched, params, p_e=0.1, duration=0.8, seed=33)
        b = run(topo, sched, params, p_e=0.1, duration=0.8, seed=33)
        assert dataclasses.asdict(a) == dataclasses.asdict(b)

    def test_attempt_conservation(self):
        params = table_params()
        topo = place_stations(0.02, table_geo(), seed=8)
        m = run(topo, build_schedule(table_dti(nu=0.5)), params, p_e=0.08,
                duration=1.0, seed=2)
        assert m.tx_attempts == (m.success_count + m.collision_count
                                 + m.error_count)
        assert m.tx_attempts > 0
        assert m.delivered_bits == m.success_count * params.payload_bits

    def test_delay_samples_at_least_one_exchange(self):
        params = table_params()
        topo = place_stations(0.02, table_geo(), seed=14)
        m = run(topo, build_schedule(table_dti(nu=0.5)), params, p_e=0.0,
                duration=1.0, seed=4)
        assert m.min_delay >= params.t_success - 1e-9

    def test_transmissions_only_in_contention_periods(self):
        params = table_params()
        topo = place_stations(0.02, table_geo(), seed=10)
        lines = []
        run(topo, build_schedule(table_dti(nu=0.25)), params, p_e=0.0,
            duration=0.6, seed=6, trace=lines.append)
        accesses = [ln for ln in lines if ln.endswith("access")]
        assert accesses
        assert all(ln.split()[1] == "CBAP" for ln in accesses)

    def test_channel_errors_follow_p_e(self):
        params = table_params()
        topo = place_stations(0.001, table_geo(), seed=5, n_override=1)
        m = run(topo, build_schedule(table_dti(nu=1.0)), params, p_e=0.3,
                duration=2.0, seed=7)
        frac = m.error_count / m.tx_attempts
        sigma = math.sqrt(0.3 * 0.7 / m.tx_attempts)
        assert abs(frac - 0.3) < 3 * sigma

    def test_empty_topology(self):
        m = run(place_stations(0.0, table_geo(), seed=1),
                build_schedule(table_dti()), table_params(), duration=0.5)
        assert m.throughput_bps == 0.0 and m.tx_attempts == 0

    def test_full_hearing_only_tie_collisions(self):
        # with every station audible, no RTS may overlap an ongoing exchange:
        # collisions come from simultaneous expiries only, so every collision
        # event involves at least two attempts at the same instant
        params = table_params()
        topo = full_hearing_topology(6, table_geo(), seed=3)
        lines = []
        m = run(topo, build_schedule(table_dti(nu=1.0)), params, p_e=0.0,
                duration=0.8, seed=12, warmup_bis=0, trace=lines.append)
        access_times: dict[str, int] = {}
        for ln in lines:
            parts = ln.split()
            if parts[3] == "access":
                access_times[parts[0]] = access_times.get(parts[0], 0) + 1
        overlapped = sum(c for c in access_times.values() if c > 1)
        assert m.collision_count == overlapped


class TestReplicate:
    def test_replication_determinism(self):
        geo = table_geo()
        a = replicate(0.008, geo, table_dti(nu=0.5), table_params(),
                      duration=0.5, n_reps=3, base_seed=77)
        b = replicate(0.008, geo, table_dti(nu=0.5), table_params(),
                      duration=0.5, n_reps=3, base_seed=77)
        assert dataclasses.asdict(a) == dataclasses.asdict(b)

    def test_identical_runs_have_zero_spread(self):
        # the half-width collapses when every replication yields the same
        # value; force that by comparing two identical single runs
        params = table_params()
        topo = place_stations(0.01, table_geo(), seed=50)
        sched = build_schedule(table_dti(nu=0.5))
        vals = [run(topo, sched, params, duration=0.5, seed=91).throughput_bps
                for _ in range(2)]
        assert 1.96 * np.std(vals, ddof=1) / math.sqrt(2) == 0.0

    def test_rejects_single_replication(self):
        with pytest.raises(ValueError):
            replicate(0.01, table_geo(), table_dti(), table_params(),
                      n_reps=1)

    def test_half_width_clt_scaling(self):
        # half-widths over disjoint blocks of a common replication pool must
        # halve per 4x block size, within 30%
        geo = table_geo()
        params = table_params()
        dti = table_dti(nu=0.5, t_bhi=2e-3)
        sched = build_schedule(dti)
        vals = []
        for rep in range(64):
            ss = np.random.SeedSequence([5, rep])
            topo_seed, run_seed = (int(s) for s in ss.generate_state(2))
            topo = place_stations(0.005, geo, topo_seed)
            m = run(topo, sched, params, duration=0.35, seed=run_seed,
                    warmup_bis=1)
            vals.append(m.throughput_bps)
        vals = np.array(vals)

        def mean_hw(block):
            blocks = vals.reshape(-1, block)
            return float(np.mean([1.96 * np.std(b, ddof=1)
                                  / math.sqrt(block) for b in blocks]))

        h4, h16, h64 = mean_hw(4), mean_hw(16), mean_hw(64)
        assert 0.35 < h16 / h4 < 0.65
        assert 0.35 < h64 / h16 < 0.65
