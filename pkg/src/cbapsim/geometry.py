"""Directional-interference geometry: coverage radius, hearing predicates and
overhearing-region areas for stations talking to an access point at the origin.

All stations aim their (constant-gain, pizza-slice) beams at the AP. A station
overhears another station's uplink iff each lies in the other's main lobe, and
overhears a downlink iff it sits inside the AP sector that covers the receiver.
Areas are expressed in m^2 over the coverage disk of radius R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class BeamGeometry:
    """Sector counts and derived beam widths for the AP and the stations."""

    n_ap_sectors: int
    n_sta_sectors: int
    coverage_radius: float

    def __post_init__(self):
        if self.n_ap_sectors < 2 or self.n_sta_sectors < 2:
            raise ValueError("sector counts must be >= 2")
        if not self.coverage_radius > 0:
            raise ValueError("coverage_radius must be > 0")

    @property
    def theta_ap(self) -> float:
        return TWO_PI / self.n_ap_sectors

    @property
    def theta_s(self) -> float:
        return TWO_PI / self.n_sta_sectors

    @property
    def total_area(self) -> float:
        return math.pi * self.coverage_radius ** 2


@dataclass(frozen=True)
class LinkBudget:
    """Link-budget terms used to bound the coverage radius.

    pathloss_norm is the normalizing path-loss constant A in
    P_rx = P_tx * g_tx * g_rx / (A * d^eta); noise_power is the receiver
    noise N; snr_threshold is the linear SNR decode threshold.
    """

    tx_power_sta: float
    tx_power_ap: float
    pathloss_exponent: float
    pathloss_norm: float
    noise_power: float
    snr_threshold: float

    def __post_init__(self):
        for name in ("tx_power_sta", "tx_power_ap", "pathloss_exponent",
                     "pathloss_norm", "noise_power", "snr_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.pathloss_exponent < 2:
            raise ValueError("pathloss_exponent must be >= 2")


def noise_power(noise_figure_db: float, bandwidth_hz: float,
                temperature_k: float = 290.0) -> float:
    """Thermal noise N = k*T0*F*W for a receiver noise figure in dB."""
    boltzmann = 1.380649e-23
    return boltzmann * temperature_k * 10.0 ** (noise_figure_db / 10.0) * bandwidth_hz


def coverage_radius(budget: LinkBudget, n_ap_sectors: int,
                    n_sta_sectors: int) -> float:
    """Most stringent of the uplink and downlink maximum decode distances.

    Uplink: station transmits with gain N_S toward the AP, which listens
    quasi-omnidirectionally with unit gain. Downlink: the AP transmits with
    gain N_AP into the steered sector, the station receives with gain N_S.
    """
    denom = budget.snr_threshold * budget.pathloss_norm * budget.noise_power
    up = budget.tx_power_sta * n_sta_sectors * 1.0 / denom
    down = budget.tx_power_ap * n_ap_sectors * n_sta_sectors / denom
    if up <= 0 or down <= 0:
        raise ValueError("non-positive argument under the root")
    eta = budget.pathloss_exponent
    return min(up ** (1.0 / eta), down ** (1.0 / eta))


def snr_threshold_for_radius(radius: float, budget_wo_threshold: LinkBudget,
                             n_ap_sectors: int, n_sta_sectors: int) -> float:
    """Back-solve the SNR threshold that yields a desired coverage radius.

    The snr_threshold field of the input budget is ignored. Useful to pin the
    disk radius when the threshold itself is not known.
    """
    denom = budget_wo_threshold.pathloss_norm * budget_wo_threshold.noise_power
    up = budget_wo_threshold.tx_power_sta * n_sta_sectors / denom
    down = (budget_wo_threshold.tx_power_ap * n_ap_sectors * n_sta_sectors
            / denom)
    return min(up, down) / radius ** budget_wo_threshold.pathloss_exponent


def phi_lim(d_i: float, d_t: float, theta_s: float) -> float:
    """Smallest polar phase at which a station at radius d_i mutually shares
    beams with the target at (d_t, 0); both beams point at the origin.

    Lies in [pi - theta_s, pi - theta_s/2].
    """
    if d_i == 0.0 and d_t == 0.0:
        raise ValueError("degenerate input: target and interferer both at the AP")
    lo, hi = (d_i, d_t) if d_i <= d_t else (d_t, d_i)
    ratio = lo / hi
    return math.pi - theta_s / 2 - math.asin(ratio * math.sin(theta_s / 2))


def hears_uplink(d_t: float, d_i: float, phi: float, theta_s: float) -> bool:
    """True iff a station at polar (d_i, phi) overhears the uplink of the
    target at (d_t, 0), i.e. its phase falls in [phi_lim, 2*pi - phi_lim]."""
    lim = phi_lim(d_i, d_t, theta_s)
    phi = phi % TWO_PI
    return lim <= phi <= TWO_PI - lim


def hears_downlink(phi_ap: float, phi: float, theta_ap: float) -> bool:
    """True iff a station at phase phi overhears downlink traffic to the
    target, i.e. lies in the AP sector [phi_ap - theta_ap, phi_ap] (mod 2*pi).

    phi_ap in [0, theta_ap] is the phase of the sector edge relative to the
    target's own direction.
    """
    rel = (phi - (phi_ap - theta_ap)) % TWO_PI
    return rel <= theta_ap


def _asin_r_over(r, d_t, s):
    # antiderivative of arcsin(s*r/d_t) * r dr, valid for r <= d_t
    x = s * r / d_t
    return (r * r / 2) * math.asin(x) - (d_t * d_t / (4 * s * s)) * (
        math.asin(x) - x * math.sqrt(max(1 - x * x, 0.0)))


def _asin_over_r(r, d_t, s):
    # antiderivative of arcsin(s*d_t/r) * r dr, valid for r >= d_t
    return (r * r / 2) * math.asin(s * d_t / r) + (s * d_t / 2) * math.sqrt(
        max(r * r - s * s * d_t * d_t, 0.0))


def area_uplink(d_t: float, radius: float, theta_s: float) -> float:
    """Closed-form area of the region whose stations overhear the uplink of a
    target located at distance d_t from the AP."""
    if not 0 < d_t <= radius:
        raise ValueError("d_t must satisfy 0 < d_t <= radius")
    s = math.sin(theta_s / 2)
    if s == 0.0:
        return 0.0
    asn = math.asin(s)
    root = math.sqrt(1 - s * s)
    g1 = asn / 2 - (asn - s * root) / (4 * s * s)
    p1 = d_t * d_t * g1
    p2 = (-d_t * d_t * asn / 2 - d_t * d_t * (s / 2) * root
          + (radius * radius / 2) * math.asin(s * d_t / radius)
          + (s * radius * d_t / 2)
          * math.sqrt(1 - s * s * d_t * d_t / (radius * radius)))
    return theta_s / 2 * radius * radius + 2 * (p1 + p2)


def expected_area_uplink(radius: float, theta_s: float) -> float:
    """Closed-form expectation of area_uplink over the target position drawn
    uniformly on the disk (radial density 2*d_t/R^2).

    Scale-free: the result divided by pi*R^2 depends on theta_s only.
    """
    s = math.sin(theta_s / 2)
    if s == 0.0:
        return 0.0
    asn = math.asin(s)
    root = math.sqrt(1 - s * s)
    g1 = asn / 2 - (asn - s * root) / (4 * s * s)
    # h = int_0^1 u^2 sqrt(1 - s^2 u^2) du
    h = (asn - s * root * (1 - 2 * s * s)) / (8 * s ** 3)
    return radius * radius * (theta_s / 2 + 3 * g1 - asn / 2 - (s / 2) * root
                              + 2 * s * h)


def area_downlink(radius: float, theta_ap: float) -> float:
    """Area of one AP sector; every station inside it overhears the downlink."""
    return theta_ap / 2 * radius * radius


def _half_area_both(d_t: float, phi_ap: float, radius: float,
                    theta_s: float) -> float:
    """Area contribution of the angular band [phi_lim(r), phi_ap].

    Vanishes for phi_ap < pi - theta_s; integration limits are clipped to the
    radii where the band is non-empty.
    """
    if phi_ap < math.pi - theta_s:
        return 0.0
    s = math.sin(theta_s / 2)
    c2 = math.pi - theta_s / 2 - phi_ap
    if c2 <= 0.0:
        r_lo, r_hi = 0.0, radius
    else:
        c3 = math.sin(c2) / s
        r_lo = d_t * c3
        r_hi = radius if c3 <= 0.0 else min(d_t / c3, radius)
    out = (_asin_r_over(d_t, d_t, s) - _asin_r_over(r_lo, d_t, s)
           - c2 * (d_t * d_t - r_lo * r_lo) / 2)
    out += (_asin_over_r(r_hi, d_t, s) - _asin_over_r(d_t, d_t, s)
            - c2 * (r_hi * r_hi - d_t * d_t) / 2)
    return max(out, 0.0)


def area_both(d_t: float, phi_ap: float, radius: float, theta_s: float,
              theta_ap: float) -> float:
    """Closed-form area of the region overhearing both the uplink and the
    downlink of the target, for a given sector phase phi_ap in [0, theta_ap]."""
    if not 0 < d_t <= radius:
        raise ValueError("d_t must satisfy 0 < d_t <= radius")
    if not 0 <= phi_ap <= theta_ap + 1e-12:
        raise ValueError("phi_ap must lie in [0, theta_ap]")
    return (_half_area_both(d_t, phi_ap, radius, theta_s)
            + _half_area_both(d_t, theta_ap - phi_ap, radius, theta_s))


def _phi_kinks(d_t: float, radius: float, theta_s: float,
               theta_ap: float) -> list[float]:
    # derivative kinks of _half_area_both as a function of phi_ap
    s = math.sin(theta_s / 2)
    pts = [math.pi - theta_s, math.pi - theta_s / 2]
    x = min(s * d_t / radius, 1.0)
    pts.append(math.pi - theta_s / 2 - math.asin(x))
    return sorted(p for p in pts if 0.0 < p < theta_ap)


def expected_area_both(radius: float, theta_s: float, theta_ap: float) -> float:
    """Expectation of area_both over the target radius (density 2*d_t/R^2)
    and the sector phase (uniform on [0, theta_ap]).

    The two symmetric halves contribute equally, so this is twice the average
    of the single angular band. The phi integral of the closed form is taken
    numerically with the kink locations made explicit.
    """
    if theta_ap <= math.pi - theta_s:
        return 0.0

    def phi_avg(d_t):
        pts = _phi_kinks(d_t, radius, theta_s, theta_ap)
        val, _ = quad(lambda phi: _half_area_both(d_t, phi, radius, theta_s),
                      0.0, theta_ap, points=pts or None, limit=200,
                      epsabs=1e-12, epsrel=1e-12)
        return val / theta_ap

    val, _ = quad(lambda dt: phi_avg(dt) * 2 * dt / radius ** 2, 0.0, radius,
                  limit=200, epsabs=1e-10, epsrel=1e-10)
    return 2.0 * val


@dataclass(frozen=True)
class RegionAreas:
    """The four overhearing regions: uplink only, downlink only, both, neither."""

    r1: float
    r2: float
    r3: float
    r4: float
    total: float

    def __post_init__(self):
        floor = -1e-9 * self.total
        if min(self.r1, self.r2, self.r3, self.r4) < floor:
            raise ValueError("negative region area beyond tolerance "
                             "(internal consistency failure)")
        if abs(self.r1 + self.r2 + self.r3 + self.r4 - self.total) \
                > 1e-9 * self.total:
            raise ValueError("region areas do not sum to the disk area")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.r1, self.r2, self.r3, self.r4)


def region_areas(geo: BeamGeometry) -> RegionAreas:
    """Expected areas of the four overhearing regions for a random target."""
    radius = geo.coverage_radius
    e_up = expected_area_uplink(radius, geo.theta_s)
    down = area_downlink(radius, geo.theta_ap)
    e_both = expected_area_both(radius, geo.theta_s, geo.theta_ap)
    total = geo.total_area
    r1 = max(e_up - e_both, 0.0)
    r2 = max(down - e_both, 0.0)
    r3 = e_both
    r4 = total - r1 - r2 - r3
    return RegionAreas(r1=r1, r2=r2, r3=r3, r4=max(r4, 0.0), total=total)


@dataclass(frozen=True)
class GroupCounts:
    """Expected numbers of stations overhearing uplink only / downlink only /
    both / neither. Real-valued PPP expectations; by Slivnyak's theorem the
    point process seen from a typical station is again PPP(lambda), so no
    self-exclusion term is subtracted."""

    n1: float
    n2: float
    n3: float
    n4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.n1, self.n2, self.n3, self.n4)

    @property
    def total(self) -> float:
        return self.n1 + self.n2 + self.n3 + self.n4


def group_counts(intensity: float, areas: RegionAreas) -> GroupCounts:
    """Expected station counts per overhearing region under PPP(intensity)."""
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    return GroupCounts(n1=intensity * areas.r1, n2=intensity * areas.r2,
                       n3=intensity * areas.r3, n4=intensity * areas.r4)


def hearing_matrices(positions: np.ndarray, theta_s: float,
                     theta_ap: float) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise hearing matrices for stations at polar positions (r, phi).

    Returns (uplink, downlink) boolean matrices where entry [i, j] means
    station i overhears station j's uplink / the downlink addressed to j.
    Diagonals are True by convention. Sector boundaries sit at multiples of
    theta_ap in the global frame.
    """
    n = len(positions)
    up = np.eye(n, dtype=bool)
    r = positions[:, 0] if n else np.empty(0)
    phi = positions[:, 1] if n else np.empty(0)
    s = math.sin(theta_s / 2)
    for j in range(n):
        d_t = r[j]
        rel = (phi - phi[j]) % TWO_PI
        lo = np.minimum(r, d_t)
        hi = np.maximum(r, d_t)
        with np.errstate(invalid="ignore"):
            ratio = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
        lim = math.pi - theta_s / 2 - np.arcsin(ratio * s)
        heard = (rel >= lim) & (rel <= TWO_PI - lim)
        up[:, j] |= heard
        up[j, j] = True
    sector = np.floor(phi / theta_ap).astype(int)
    down = sector[:, None] == sector[None, :]
    np.fill_diagonal(down, True)
    return up, down
