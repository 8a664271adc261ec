"""Saturation model for contention-based access periods with directional
stations: a backoff macro chain coupled to a six-state transmission chain
through collision, sensing and freezing probabilities, solved as a damped
fixed point, plus throughput / delay / drop evaluators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import GroupCounts

STATE_NAMES = ("A", "Rc", "Rv", "O", "F", "S")


@dataclass(frozen=True)
class EdcaParams:
    """Contention parameters and frame timings (seconds, bits)."""

    w0: int
    m: int
    m_prime: int
    slot_sigma: float
    sifs: float
    difs: float
    delta: float
    t_rts: float
    t_cts: float
    t_ack: float
    t_payload: float
    payload_bits: float

    def __post_init__(self):
        if self.w0 < 2:
            raise ValueError("w0 must be >= 2")
        if self.m < 0 or self.m_prime < 0:
            raise ValueError("m and m_prime must be >= 0")
        for name in ("slot_sigma", "sifs", "difs", "delta", "t_rts", "t_cts",
                     "t_ack", "t_payload"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.payload_bits > 0:
            raise ValueError("payload_bits must be > 0")

    def window(self, stage: int) -> int:
        return min(2 ** stage, 2 ** self.m_prime) * self.w0

    def windows(self) -> np.ndarray:
        return np.array([self.window(i) for i in range(self.m + 1)], float)

    @property
    def t_success(self) -> float:
        """Full RTS/CTS/data/ACK exchange duration."""
        return (self.t_rts + self.t_cts + self.t_payload + self.t_ack
                + 3 * self.sifs + 4 * self.delta)

    @property
    def t_collision(self) -> float:
        return self.t_rts + self.difs + self.delta

    def state_times(self) -> np.ndarray:
        """Dwell times of the transmission-chain states (A, Rc, Rv, O, F, S)."""
        t_o = (self.t_cts + self.t_payload + self.t_ack + 3 * self.sifs
               + 3 * self.delta)
        return np.array([self.delta, self.t_rts, self.t_rts, t_o,
                         self.difs, self.difs])


@dataclass(frozen=True)
class DtiConfig:
    """Split of the beacon interval into header, contention and reserved time."""

    t_bi: float
    t_bhi: float
    t_cbap: float
    n_cbap: int
    n_sp: int

    def __post_init__(self):
        if not self.t_bi > 0 or self.t_bhi < 0:
            raise ValueError("t_bi must be > 0 and t_bhi >= 0")
        if self.t_cbap <= 0 or self.t_cbap > self.t_bi - self.t_bhi + 1e-15:
            raise ValueError("t_cbap must lie in (0, t_bi - t_bhi]")
        if self.n_cbap < 1:
            raise ValueError("n_cbap must be >= 1")
        if self.n_sp < 0:
            raise ValueError("n_sp must be >= 0")

    @property
    def t_dti(self) -> float:
        return self.t_bi - self.t_bhi

    @property
    def nu(self) -> float:
        return self.t_cbap / self.t_dti

    @property
    def t_sp(self) -> float:
        return self.t_dti - self.t_cbap

    @property
    def allocation(self) -> float:
        """Duration of a single contention allocation."""
        return self.t_cbap / self.n_cbap

    @property
    def cbap_share(self) -> float:
        """Fraction of the whole beacon interval open for contention."""
        return self.t_cbap / self.t_bi


def compute_p_t(t_tx_total: float, dti: DtiConfig) -> float:
    """Probability that a counter expiry leaves too little allocation time to
    fit a transmission of duration t_tx_total (residual time ~ uniform)."""
    if t_tx_total < 0:
        raise ValueError("t_tx_total must be >= 0")
    p_t = t_tx_total / dti.allocation
    if p_t > 1.0:
        warnings.warn("transmission cannot fit in a contention allocation; "
                      "clamping p_t to 1", RuntimeWarning, stacklevel=2)
        return 1.0
    return p_t


def _stage_geom_sum(p: float, m: int) -> float:
    """sum_{i=0..m} p^i with the p -> 1 limit."""
    if p >= 1.0:
        return float(m + 1)
    return (1.0 - p ** (m + 1)) / (1.0 - p)


def macro_chain(p: float, p_t: float, params: EdcaParams
                ) -> tuple[float, float]:
    """Stationary root probability and transmission-state probability of the
    backoff macro chain.

    b(i, k) = ((W_i - k) / W_i) * p^i * b(0, 0); b(0, 0) follows from the
    normalization sum_{i,k} b(i,k) = 1, which avoids the ambiguity of the
    closed-form two-branch expression.
    """
    if not 0.0 <= p <= 1.0 or not 0.0 <= p_t <= 1.0:
        raise ValueError("p and p_t must lie in [0, 1]")
    w = params.windows()
    pows = np.ones(params.m + 1) if p >= 1.0 else p ** np.arange(params.m + 1)
    b00 = 1.0 / float(np.dot(pows, (w + 1) / 2))
    tau = _stage_geom_sum(p, params.m) * (1.0 - p_t) * b00
    return b00, tau


def transmission_chain_embedded(p_c1: float, p_c2: float, p_e: float
                                ) -> np.ndarray:
    """Stationary distribution of the embedded six-state chain (A, Rc, Rv, O,
    F, S) with F and S looping back to A.

    Per-cycle visit counts: A = 1, Rc = p_c1, Rv = 1 - p_c1,
    O = (1-p_c1)(1-p_c2), F + S = 1; the normalizer is their sum
    3 + (1-p_c1)(1-p_c2).
    """
    for v in (p_c1, p_c2, p_e):
        if not 0.0 <= v <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
    visits = np.array([
        1.0,
        p_c1,
        1.0 - p_c1,
        (1.0 - p_c1) * (1.0 - p_c2),
        1.0 - (1.0 - p_c1) * (1.0 - p_c2) * (1.0 - p_e),
        (1.0 - p_c1) * (1.0 - p_c2) * (1.0 - p_e),
    ])
    return visits / visits.sum()


def transmission_chain(p_c1: float, p_c2: float, p_e: float,
                       times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Embedded and time-weighted stationary distributions of the
    transmission-state chain."""
    b = transmission_chain_embedded(p_c1, p_c2, p_e)
    weighted = times * b
    return b, weighted / weighted.sum()


def expected_tx_time(p_c1: float, p_c2: float, p_e: float,
                     times: np.ndarray) -> float:
    """Mean dwell time of one pass through the transmission chain, as the
    probability-weighted sum over its four root-to-exit paths."""
    t_a, t_rc, t_rv, t_o, t_f, t_s = times
    return ((t_a + t_rc + t_f) * p_c1
            + (t_a + t_rv + t_f) * (1 - p_c1) * p_c2
            + (t_a + t_rv + t_o + t_f) * (1 - p_c1) * (1 - p_c2) * p_e
            + (t_a + t_rv + t_o + t_s) * (1 - p_c1) * (1 - p_c2) * (1 - p_e))


def expected_ntx_time(sigma: float, p_i: float, p_f: float,
                      e_tx: float) -> float:
    """Mean dwell time of a backoff slot: one idle slot plus, when the channel
    is sensed busy, a heard transmission stretched by the freezing self-loop."""
    return sigma + (1.0 - p_i) * e_tx / (1.0 - p_f)


@dataclass(frozen=True)
class ModelSolution:
    """Converged fixed point of the coupled chains plus derived quantities."""

    p_t: float
    p_f: float
    p_i: float
    q1: float
    q2: float
    q3: float
    p_c1: float
    p_c2: float
    p_e: float
    p: float
    tau: float
    pi_tx: float
    b00: float
    pi: np.ndarray         # time-weighted (A, Rc, Rv, O, F, S)
    b_embedded: np.ndarray
    times: np.ndarray      # state dwell times (A, Rc, Rv, O, F, S)
    e_t_tx: float
    e_t_ntx: float
    t_success: float
    t_collision: float
    p_acc: float
    converged: bool
    iterations: int
    residual: float

    @property
    def pi_a(self) -> float:
        return float(self.pi[0])

    @property
    def pi_rc(self) -> float:
        return float(self.pi[1])

    @property
    def pi_rv(self) -> float:
        return float(self.pi[2])

    @property
    def pi_o(self) -> float:
        return float(self.pi[3])

    @property
    def pi_f(self) -> float:
        return float(self.pi[4])

    @property
    def pi_s(self) -> float:
        return float(self.pi[5])


@dataclass(frozen=True)
class SolverOptions:
    damping: float = 0.5
    tol: float = 1e-12
    max_iter: int = 100_000
    ramp_steps: int = 8


class FixedPointError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _q1(p_acc: float, n: float) -> float:
    """P(another station accesses | the target accesses), via the ratio of
    the two-or-more-accessors probability to the single-access probability."""
    if p_acc <= 0.0:
        return 0.0
    val = (1.0 - (1.0 - p_acc) ** n
           - n * p_acc * (1.0 - p_acc) ** (n - 1.0)) / p_acc
    return _clamp01(val)


def _system_step(x: np.ndarray, counts: GroupCounts, dti: DtiConfig,
                 params: EdcaParams, p_e: float, p_t: float,
                 times: np.ndarray) -> tuple[np.ndarray, dict]:
    """One evaluation of the full system map F(x) for the state vector
    x = (pi_tx, pi_A, pi_Rc, pi_Rv, pi_O, pi_F, pi_S, p_c1, p_c2)."""
    pi_tx, pi_a, pi_rc, pi_rv, pi_o = x[0], x[1], x[2], x[3], x[4]
    n1, n2, n3, n4 = counts.as_tuple()
    n = counts.total
    share = dti.cbap_share
    p_f = 1.0 - share

    p_acc = pi_a * pi_tx
    q1 = _q1(p_acc, n)
    q2 = _clamp01((1.0 - (1.0 - pi_tx * (pi_rv + pi_rc)) ** n2) / share)
    q3 = _clamp01((1.0 - (1.0 - pi_tx * (pi_rv + pi_rc + pi_o)) ** n4) / share)
    p_c1 = 1.0 - (1.0 - q1) * (1.0 - q2) * (1.0 - q3)
    rv_slots = times[2] / times[0]
    p_c2 = _clamp01((1.0 - ((1.0 - p_acc) ** (n2 + n4)) ** rv_slots) / share)
    # nested form of 1 - (1-p_c1)(1-p_c2)(1-p_e): exact when collisions vanish
    p = p_c1 + (1.0 - p_c1) * (p_c2 + (1.0 - p_c2) * p_e)

    b00, tau = macro_chain(p, p_t, params)
    b, pi = transmission_chain(p_c1, p_c2, p_e, times)
    e_tx = expected_tx_time(p_c1, p_c2, p_e, times)
    p_i = ((1.0 - pi_tx * (pi_a + pi_rc + pi_rv + pi_o)) ** (n1 + n3)
           * (1.0 - pi_tx * pi_o) ** n2)
    e_ntx = expected_ntx_time(params.slot_sigma, p_i, p_f, e_tx)
    pi_tx_new = tau * e_tx / (tau * e_tx + (1.0 - tau) * e_ntx)

    x_new = np.concatenate(([pi_tx_new], pi, [p_c1, p_c2]))
    aux = dict(q1=q1, q2=q2, q3=q3, p=p, b00=b00, tau=tau, b=b, e_tx=e_tx,
               e_ntx=e_ntx, p_i=p_i, p_f=p_f, p_acc=p_acc)
    return x_new, aux


def collision_system(counts: GroupCounts, dti: DtiConfig, params: EdcaParams,
                     p_e: float = 0.0,
                     options: SolverOptions | None = None) -> ModelSolution:
    """Solve the coupled nonlinear system by damped Picard iteration.

    The station-count vector is ramped up over a few continuation steps, each
    warm-starting the next, which keeps the iteration on the branch that is
    continuously connected to the sparse-network solution.
    """
    if not 0.0 <= p_e < 1.0:
        raise ValueError("p_e must lie in [0, 1)")
    opts = options or SolverOptions()
    times = params.state_times()
    p_t = compute_p_t(params.t_success, dti)

    x = np.array([0.1, 1 / 6, 1 / 6, 1 / 6, 1 / 6, 1 / 6, 1 / 6, 0.0, 0.0])
    total_iters = 0
    fractions = np.linspace(1.0 / opts.ramp_steps, 1.0, opts.ramp_steps)
    for frac in fractions:
        scaled = GroupCounts(*(frac * c for c in counts.as_tuple()))
        converged = False
        alpha = opts.damping
        best = math.inf
        stall = 0
        for _ in range(opts.max_iter):
            x_new, aux = _system_step(x, scaled, dti, params, p_e, p_t, times)
            resid = float(np.max(np.abs(x_new - x)))
            x = x + alpha * (x_new - x)
            total_iters += 1
            if resid < opts.tol:
                converged = True
                break
            # a limit cycle of the damped iteration shows up as a stalled
            # residual; halving the step always restores contraction there
            if resid < 0.5 * best:
                best = resid
                stall = 0
            else:
                stall += 1
                if stall >= 500:
                    alpha = max(alpha / 2.0, 1.0 / 128.0)
                    best = resid
                    stall = 0
        if not converged and frac == 1.0:
            raise FixedPointError(
                f"fixed point not reached after {opts.max_iter} iterations "
                f"(residual {resid:.3e})", resid)

    x_new, aux = _system_step(x, counts, dti, params, p_e, p_t, times)
    residual = float(np.max(np.abs(x_new - x)))
    return ModelSolution(
        p_t=p_t, p_f=aux["p_f"], p_i=aux["p_i"], q1=aux["q1"], q2=aux["q2"],
        q3=aux["q3"], p_c1=float(x[7]), p_c2=float(x[8]), p_e=p_e, p=aux["p"],
        tau=aux["tau"], pi_tx=float(x[0]), b00=aux["b00"],
        pi=x[1:7].copy(), b_embedded=aux["b"], times=times,
        e_t_tx=aux["e_tx"], e_t_ntx=aux["e_ntx"],
        t_success=params.t_success, t_collision=params.t_collision,
        p_acc=aux["p_acc"], converged=True, iterations=total_iters,
        residual=residual)


def solution_residuals(sol: ModelSolution, counts: GroupCounts,
                       dti: DtiConfig, params: EdcaParams) -> dict[str, float]:
    """Re-evaluate every system equation at the returned solution,
    independently of the solver loop, and report absolute residuals."""
    x = np.concatenate(([sol.pi_tx], sol.pi, [sol.p_c1, sol.p_c2]))
    x_new, aux = _system_step(x, counts, dti, params, sol.p_e, sol.p_t,
                              sol.times)
    names = ["pi_tx", "pi_a", "pi_rc", "pi_rv", "pi_o", "pi_f", "pi_s",
             "p_c1", "p_c2"]
    out = {name: abs(float(a - b)) for name, a, b in zip(names, x_new, x)}
    out["p"] = abs(aux["p"] - sol.p)
    out["tau"] = abs(aux["tau"] - sol.tau)
    out["e_t_ntx"] = abs(aux["e_ntx"] - sol.e_t_ntx) / max(sol.e_t_ntx, 1e-12)
    out["e_t_tx"] = abs(aux["e_tx"] - sol.e_t_tx) / max(sol.e_t_tx, 1e-12)
    return out


def throughput(sol: ModelSolution, n: float, payload_bits: float) -> float:
    """Aggregate saturation throughput in bits/second.

    Renewal-reward over the embedded backoff process: per embedded state a
    station delivers payload_bits with probability tau * (1 - p); states last
    E[T_tx] or E[T_ntx] with the embedded weights.
    """
    denom = sol.tau * sol.e_t_tx + (1.0 - sol.tau) * sol.e_t_ntx
    return n * sol.tau * (1.0 - sol.p) * payload_bits / denom


def _window_slot_sum(params: EdcaParams, i: int) -> float:
    """sum_{j=0..i} (W_j + 1)/2 with the max-window cap."""
    mp = params.m_prime
    capped = min(i, mp)
    tot = params.w0 * (2 ** (capped + 1) - 1)
    if i > mp:
        tot += (i - mp) * 2 ** mp * params.w0
    return (tot + (i + 1)) / 2.0


def delay(sol: ModelSolution, params: EdcaParams) -> float:
    """Mean MAC delay of successfully delivered packets.

    Averages the per-stage delay (backoff slots, prior collisions, final
    exchange) over the stage of first success; counter re-draws on allocation
    timeout stretch the backoff by 1/(1 - p_t).
    """
    if sol.p_t >= 1.0:
        raise ValueError("p_t = 1: delay diverges (no transmission ever fits)")
    m, p = params.m, sol.p
    stages = np.arange(m + 1)
    if p >= 1.0:
        weights = np.full(m + 1, 1.0 / (m + 1))
    else:
        weights = (1.0 - p) * p ** stages / (1.0 - p ** (m + 1))
    slot_sums = np.array([_window_slot_sum(params, i) for i in stages])
    d_i = (stages * sol.t_collision + sol.t_success
           + sol.e_t_ntx / (1.0 - sol.p_t) * slot_sums)
    return float(np.dot(weights, d_i))


def drop_rate(p: float, m: int) -> float:
    """Probability that a packet fails at every one of the m+1 stages."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return p ** (m + 1)


@dataclass(frozen=True)
class Metrics:
    throughput_bps: float
    delay_s: float
    drop_rate: float


def evaluate_metrics(sol: ModelSolution, n: float,
                     params: EdcaParams) -> Metrics:
    return Metrics(throughput_bps=throughput(sol, n, params.payload_bits),
                   delay_s=delay(sol, params),
                   drop_rate=drop_rate(sol.p, params.m))


def per_bit_error_to_p_e(bit_error_rate: float, payload_bits: float) -> float:
    """Map an i.i.d. per-bit error rate to a packet error probability."""
    if not 0.0 <= bit_error_rate <= 1.0:
        raise ValueError("bit_error_rate must lie in [0, 1]")
    return 1.0 - (1.0 - bit_error_rate) ** payload_bits
