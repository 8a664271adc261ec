"""Slot-level Monte Carlo simulator of saturated directional contention over a
beacon-interval schedule with interleaved contention and reserved periods.

Time is integer nanoseconds. Backoff counters decrement after a full idle slot
of the station's own perceived channel; frame exchanges advance the clock by
their exact durations. Collisions follow the three directional cases: doomed
access (simultaneous accessor, ongoing unheard RTS, or ongoing exchange at the
AP), a vulnerable RTS corrupted by a later accessor that cannot hear it, and
accesses during an ongoing exchange, which fail without harming the exchange.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass

import numpy as np

from .analytical import DtiConfig, EdcaParams
from .geometry import BeamGeometry, hearing_matrices

INF = float("inf")
NS = 1_000_000_000

# event priorities at equal times: frees before boundaries before resumes;
# expiries are handled last so simultaneous accessors form one batch
PRIO_PHASE_END = 0
PRIO_BOUNDARY = 1
PRIO_RESUME = 2


def _ns(seconds: float) -> int:
    return int(math.ceil(seconds * NS - 1e-6))


@dataclass(frozen=True)
class Topology:
    """Station placement and pairwise hearing relations.

    hears_up[i, j]: i overhears j's uplink frames; hears_down[i, j]: i
    overhears downlink frames addressed to j. Diagonals True by convention.
    """

    positions: np.ndarray
    sector: np.ndarray
    hears_up: np.ndarray
    hears_down: np.ndarray
    rng_seed: int

    @property
    def n_stations(self) -> int:
        return len(self.positions)

    def group_counts_per_station(self) -> np.ndarray:
        """Per-station counts of the four overhearing groups (others only)."""
        up = self.hears_up.copy()
        down = self.hears_down.copy()
        np.fill_diagonal(up, False)
        np.fill_diagonal(down, False)
        g1 = np.sum(up & ~down, axis=1)
        g2 = np.sum(~up & down, axis=1)
        g3 = np.sum(up & down, axis=1)
        g4 = np.sum(~up & ~down, axis=1) - 1  # exclude self
        return np.column_stack([g1, g2, g3, g4])


def place_stations(intensity: float, geo: BeamGeometry, seed: int,
                   n_override: int | None = None) -> Topology:
    """Draw a Poisson(intensity * disk area) station set, uniform on the disk,
    and fill the hearing matrices from the beam predicates."""
    rng = np.random.default_rng(seed)
    if n_override is None:
        n = int(rng.poisson(intensity * geo.total_area))
    else:
        n = int(n_override)
    r = geo.coverage_radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    positions = np.column_stack([r, phi]) if n else np.empty((0, 2))
    up, down = hearing_matrices(positions, geo.theta_s, geo.theta_ap)
    sector = (np.floor(phi / geo.theta_ap).astype(int) if n
              else np.empty(0, int))
    return Topology(positions=positions, sector=sector, hears_up=up,
                    hears_down=down, rng_seed=seed)


def full_hearing_topology(n: int, geo: BeamGeometry, seed: int = 0) -> Topology:
    """All-true hearing matrices: the omnidirectional reduction."""
    rng = np.random.default_rng(seed)
    r = geo.coverage_radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    ones = np.ones((n, n), dtype=bool)
    return Topology(positions=np.column_stack([r, phi]),
                    sector=np.zeros(n, int), hears_up=ones.copy(),
                    hears_down=ones.copy(), rng_seed=seed)


@dataclass(frozen=True)
class BiSchedule:
    """One beacon interval as labeled intervals; header first, then contention
    and reserved allocations alternating, starting with a contention block."""

    t_bi_ns: int
    intervals: tuple[tuple[str, int, int], ...]

    def cbap_windows(self) -> list[tuple[int, int]]:
        return [(a, b) for label, a, b in self.intervals if label == "CBAP"]


def build_schedule(dti: DtiConfig) -> BiSchedule:
    t_bi = _ns(dti.t_bi)
    labels: list[str] = []
    durations: list[float] = []
    if dti.t_bhi > 0:
        labels.append("BHI")
        durations.append(dti.t_bhi)
    n_sp = dti.n_sp if dti.t_sp > 1e-12 else 0
    cb, sp = dti.n_cbap, n_sp
    cbap_len = dti.t_cbap / dti.n_cbap
    sp_len = dti.t_sp / n_sp if n_sp else 0.0
    while cb or sp:
        if cb:
            labels.append("CBAP")
            durations.append(cbap_len)
            cb -= 1
        if sp:
            labels.append("SP")
            durations.append(sp_len)
            sp -= 1
    edges = np.concatenate([[0.0], np.cumsum(durations)])
    edge_ns = [min(_ns(e), t_bi) for e in edges]
    edge_ns[-1] = t_bi
    intervals = tuple((lab, a, b) for lab, a, b
                      in zip(labels, edge_ns[:-1], edge_ns[1:]))
    return BiSchedule(t_bi_ns=t_bi, intervals=intervals)


@dataclass
class SimMetrics:
    delivered_bits: float
    sim_time: float
    throughput_bps: float
    mean_delay: float
    drop_count: int
    completed: int
    drop_rate: float
    min_delay: float
    tx_attempts: int
    collision_count: int
    error_count: int
    success_count: int
    throughput_hw: float = 0.0
    delay_hw: float = 0.0
    drop_hw: float = 0.0
    n_reps: int = 1


class _Exchange:
    __slots__ = ("station", "kind", "end", "doomed")

    def __init__(self, station: int, kind: str, end: int):
        self.station = station
        self.kind = kind
        self.end = end
        self.doomed = False


def run(topology: Topology, schedule: BiSchedule, params: EdcaParams,
        p_e: float = 0.0, duration: float = 1.0, seed: int = 0,
        warmup_bis: int = 2, trace=None) -> SimMetrics:
    """Simulate the contention process over `duration` seconds of wall time.

    Statistics exclude the first `warmup_bis` beacon intervals. Deterministic
    for fixed inputs and seed.
    """
    n = topology.n_stations
    horizon = _ns(duration)
    warmup = min(warmup_bis * schedule.t_bi_ns, horizon)
    sim_span = (horizon - warmup) / NS
    if n == 0:
        return SimMetrics(0.0, sim_span, 0.0, 0.0, 0, 0, 0.0, 0.0, 0, 0, 0, 0)

    rng = random.Random(seed)
    sigma = _ns(params.slot_sigma)
    t_rts_phase = _ns(params.delta + params.t_rts)
    t_o_phase = _ns(params.t_cts + params.t_payload + params.t_ack
                    + 3 * params.sifs + 3 * params.delta)
    t_difs = _ns(params.difs)
    t_fit = _ns(params.t_success)

    # absolute interval timeline over the horizon
    timeline: list[tuple[int, str, int]] = []  # (start, label, end)
    n_bis = horizon // schedule.t_bi_ns + 1
    for k in range(int(n_bis)):
        base = k * schedule.t_bi_ns
        for label, a, b in schedule.intervals:
            timeline.append((base + a, label, base + b))

    hearers_up = [np.flatnonzero(topology.hears_up[:, j]
                                 & (np.arange(n) != j)) for j in range(n)]
    down_only = [np.flatnonzero((topology.hears_down[:, j]
                                 & ~topology.hears_up[:, j])
                                & (np.arange(n) != j)) for j in range(n)]

    stage = np.zeros(n, int)
    counter = np.zeros(n, int)
    for i in range(n):
        counter[i] = rng.randrange(params.window(0))
    counting = np.ones(n, bool)
    busy = np.zeros(n, int)
    anchor = np.full(n, -1, dtype=np.int64)
    expiry = np.full(n, INF)
    arrival = np.zeros(n, dtype=np.int64)

    delivered = 0.0
    delays: list[float] = []
    drops = successes = attempts = collisions = errors = 0

    heap: list[tuple[int, int, int, str, int]] = []
    seq = 0

    def push(t: int, prio: int, kind: str, station: int):
        nonlocal seq
        heapq.heappush(heap, (t, prio, seq, kind, station))
        seq += 1

    exchanges: dict[int, _Exchange] = {}

    in_cbap = False
    cbap_end = -1

    def emit(t, station, event):
        if trace is not None:
            trace(f"{t} {'CBAP' if in_cbap else 'OFF'} {station} {event}")

    def bank(i, t):
        # freeze: credit whole elapsed idle slots, drop sub-slot progress
        if anchor[i] >= 0:
            counter[i] = counter[i] - (t - anchor[i]) // sigma
            anchor[i] = -1
        expiry[i] = INF

    def bank_all(idx, t):
        anchored = idx[anchor[idx] >= 0]
        counter[anchored] -= (t - anchor[anchored]) // sigma
        anchor[idx] = -1
        expiry[idx] = INF

    def try_anchor(i, t):
        if counting[i] and in_cbap and busy[i] == 0:
            anchor[i] = t
            expiry[i] = t + counter[i] * sigma

    def anchor_all(idx, t):
        ok = idx[counting[idx] & (busy[idx] == 0)]
        if in_cbap and ok.size:
            anchor[ok] = t
            expiry[ok] = t + counter[ok] * sigma

    def add_busy(idx, t):
        fresh = idx[(busy[idx] == 0) & counting[idx]]
        if fresh.size:
            bank_all(fresh, t)
        busy[idx] += 1

    def remove_busy(idx, t):
        busy[idx] -= 1
        freed = idx[busy[idx] == 0]
        if freed.size:
            anchor_all(freed, t)

    def fail_stage(i, t):
        nonlocal drops
        stage[i] += 1
        if stage[i] > params.m:
            if t >= warmup:
                drops += 1
            stage[i] = 0
            return True  # packet completed (dropped)
        return False

    def begin_contention(i, t, new_packet):
        counting[i] = True
        counter[i] = rng.randrange(params.window(stage[i]))
        if new_packet:
            arrival[i] = t
        anchor[i] = -1
        expiry[i] = INF
        try_anchor(i, t)

    # boundary events come from the timeline; seed the first one
    bound_ptr = 0

    while True:
        t_heap = heap[0][0] if heap else INF
        t_bound = timeline[bound_ptr][0] if bound_ptr < len(timeline) else INF
        if in_cbap:
            t_bound = min(t_bound, cbap_end)
        t_exp = float(np.min(expiry)) if n else INF
        t = min(t_heap, t_bound, t_exp)
        if t == INF or t > horizon:
            break
        t = int(t)

        # 1) phase ends and resumes at t
        while heap and heap[0][0] == t:
            _, prio, _, kind, i = heapq.heappop(heap)
            if kind == "rts_end":
                ex = exchanges.pop(i)
                if ex.doomed:
                    remove_busy(hearers_up[i], t)
                    if t >= warmup:
                        attempts += 1
                        collisions += 1
                    completed = fail_stage(i, t)
                    emit(t, i, "rts_collision")
                    push(t + t_difs, PRIO_RESUME,
                         "resume_new" if completed else "resume", i)
                else:
                    ex.kind = "o"
                    ex.end = t + t_o_phase
                    exchanges[i] = ex
                    add_busy(down_only[i], t)
                    push(ex.end, PRIO_PHASE_END, "o_end", i)
                    emit(t, i, "cts_data")
            elif kind == "o_end":
                ex = exchanges.pop(i)
                remove_busy(hearers_up[i], t)
                remove_busy(down_only[i], t)
                if rng.random() < p_e:
                    if t >= warmup:
                        attempts += 1
                        errors += 1
                    completed = fail_stage(i, t)
                    emit(t, i, "channel_error")
                    push(t + t_difs, PRIO_RESUME,
                         "resume_new" if completed else "resume", i)
                else:
                    if t >= warmup:
                        attempts += 1
                        successes += 1
                        delivered += params.payload_bits
                        delays.append((t - arrival[i]) / NS)
                    stage[i] = 0
                    emit(t, i, "success")
                    push(t + t_difs, PRIO_RESUME, "resume_new", i)
            elif kind in ("resume", "resume_new"):
                begin_contention(i, t, kind == "resume_new")
                emit(t, i, "contend")

        # 2) interval boundaries at t
        while True:
            advanced = False
            if in_cbap and cbap_end == t:
                in_cbap = False
                assert not exchanges, "exchange crossing a CBAP boundary"
                bank_all(np.flatnonzero(counting), t)
                advanced = True
            if (bound_ptr < len(timeline)
                    and timeline[bound_ptr][0] == t):
                start, label, end = timeline[bound_ptr]
                bound_ptr += 1
                if label == "CBAP":
                    in_cbap = True
                    cbap_end = end
                    anchor_all(np.flatnonzero(counting), t)
                advanced = True
            if not advanced:
                break

        # 3) expiries at t: simultaneous accessors form one batch
        batch = np.flatnonzero(expiry == t)
        if batch.size == 0:
            continue
        assert in_cbap, "counter expiry outside a contention period"
        accessors = []
        for i in batch:
            if cbap_end - t < t_fit:
                # not enough allocation left: redraw from the current window;
                # a zero draw counts as one slot so the recheck cannot spin
                counter[i] = max(rng.randrange(params.window(stage[i])), 1)
                anchor[i] = t
                expiry[i] = t + counter[i] * sigma
                emit(t, i, "timeout_redraw")
            else:
                accessors.append(i)
        if not accessors:
            continue
        ongoing_rts = any(ex.kind == "rts" for ex in exchanges.values())
        ongoing_o = any(ex.kind == "o" for ex in exchanges.values())
        doomed_now = len(accessors) > 1 or ongoing_rts or ongoing_o
        # a live vulnerable RTS is corrupted by any new accessor
        for ex in exchanges.values():
            if ex.kind == "rts":
                ex.doomed = True
        for i in accessors:
            counting[i] = False
            anchor[i] = -1
            expiry[i] = INF
            ex = _Exchange(i, "rts", t + t_rts_phase)
            ex.doomed = doomed_now
            exchanges[i] = ex
            add_busy(hearers_up[i], t)
            push(ex.end, PRIO_PHASE_END, "rts_end", i)
            emit(t, i, "access")

    completed_packets = successes + drops
    mean_delay = float(np.mean(delays)) if delays else 0.0
    min_delay = float(np.min(delays)) if delays else 0.0
    return SimMetrics(
        delivered_bits=delivered,
        sim_time=sim_span,
        throughput_bps=delivered / sim_span if sim_span > 0 else 0.0,
        mean_delay=mean_delay,
        drop_count=drops,
        completed=completed_packets,
        drop_rate=drops / completed_packets if completed_packets else 0.0,
        min_delay=min_delay,
        tx_attempts=attempts,
        collision_count=collisions,
        error_count=errors,
        success_count=successes,
    )


def replicate(intensity: float, geo: BeamGeometry, dti: DtiConfig,
              params: EdcaParams, p_e: float = 0.0, duration: float = 1.0,
              n_reps: int = 20, base_seed: int = 0,
              warmup_bis: int = 2) -> SimMetrics:
    """Independent replications over fresh topologies; reports means and 95%
    normal-approximation half-widths. Bit-identical for identical inputs."""
    if n_reps < 2:
        raise ValueError("n_reps must be >= 2")
    schedule = build_schedule(dti)
    thr, dly, drp = [], [], []
    agg = None
    for rep in range(n_reps):
        ss = np.random.SeedSequence([int(base_seed), rep])
        topo_seed, run_seed = (int(s) for s in ss.generate_state(2))
        topo = place_stations(intensity, geo, topo_seed)
        m = run(topo, schedule, params, p_e=p_e, duration=duration,
                seed=run_seed, warmup_bis=warmup_bis)
        thr.append(m.throughput_bps)
        dly.append(m.mean_delay)
        drp.append(m.drop_rate)
        if agg is None:
            agg = m
        else:
            agg.min_delay = min(agg.min_delay, m.min_delay)
            agg.delivered_bits += m.delivered_bits
            agg.drop_count += m.drop_count
            agg.completed += m.completed
            agg.tx_attempts += m.tx_attempts
            agg.collision_count += m.collision_count
            agg.error_count += m.error_count
            agg.success_count += m.success_count

    def hw(vals):
        if len(vals) < 2:
            return 0.0
        return 1.96 * float(np.std(vals, ddof=1)) / math.sqrt(len(vals))

    agg.throughput_bps = float(np.mean(thr))
    agg.mean_delay = float(np.mean(dly))
    agg.drop_rate = float(np.mean(drp))
    agg.throughput_hw = hw(thr)
    agg.delay_hw = hw(dly)
    agg.drop_hw = hw(drp)
    agg.n_reps = n_reps
    return agg
