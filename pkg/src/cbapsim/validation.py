"""Independent cross-checks for the closed-form geometry: adaptive quadrature
of the defining integrals and Monte Carlo classification of sampled points.

Nothing here reuses the closed-form antiderivatives; the quadrature routines
integrate the raw angular-measure integrands and the Monte Carlo routines
classify uniform disk samples with first-principles beam-membership tests.
The test suite and the `validate-geometry` CLI verb both run these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .geometry import BeamGeometry, phi_lim, region_areas

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# quadrature oracles (raw integrands)
# ---------------------------------------------------------------------------

def area_uplink_quad(d_t: float, radius: float, theta_s: float) -> float:
    """Disk integral of the mutual-hearing angular measure 2*(pi - phi_lim)."""
    def f(r):
        return (TWO_PI - 2.0 * phi_lim(r, d_t, theta_s)) * r

    val, _ = quad(f, 0.0, radius, points=[d_t], limit=200,
                  epsabs=1e-13, epsrel=1e-13)
    return val


def expected_area_uplink_quad(radius: float, theta_s: float) -> float:
    """Nested quadrature of area_uplink_quad against the radial density."""
    val, _ = quad(lambda dt: area_uplink_quad(dt, radius, theta_s)
                  * 2.0 * dt / radius ** 2,
                  0.0, radius, limit=200, epsabs=1e-11, epsrel=1e-11)
    return val


def _band_integrand(r: np.ndarray, d_t: float, phi_ap: float,
                    theta_s: float) -> np.ndarray:
    s = math.sin(theta_s / 2)
    lo = np.minimum(r, d_t)
    hi = np.maximum(r, d_t)
    ratio = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
    lim = math.pi - theta_s / 2 - np.arcsin(ratio * s)
    return np.maximum(phi_ap - lim, 0.0) * r


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gl_panel(f, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    mid, half = (a + b) / 2, (b - a) / 2
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def _band_kink_radii(d_t: float, phi_ap: float, radius: float,
                     theta_s: float) -> list[float]:
    s = math.sin(theta_s / 2)
    pts = [d_t]
    c2 = math.pi - theta_s / 2 - phi_ap
    if 0.0 < c2 <= math.pi / 2:
        c3 = math.sin(c2) / s
        if c3 > 0:
            pts += [d_t * c3, d_t / c3]
    return sorted({p for p in pts if 0.0 < p < radius})


_GRADE = [0.25 ** k for k in range(7, 0, -1)]
_GRADE_FRACTIONS = [0.0] + _GRADE + [1.0 - f for f in reversed(_GRADE)] + [1.0]


def half_area_both_quad(d_t: float, phi_ap: float, radius: float,
                        theta_s: float) -> float:
    """Gauss-Legendre integration of the raw band measure, split at the radii
    where the band opens or closes.

    Panels are geometrically graded toward their endpoints: the integrand has
    square-root behavior at r = d_t when the beam approaches a half plane."""
    edges = [0.0] + _band_kink_radii(d_t, phi_ap, radius, theta_s) + [radius]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        sub = [a + (b - a) * f for f in _GRADE_FRACTIONS]
        total += sum(
            _gl_panel(lambda r: _band_integrand(r, d_t, phi_ap, theta_s),
                      lo, hi)
            for lo, hi in zip(sub[:-1], sub[1:]))
    return total


def area_both_quad(d_t: float, phi_ap: float, radius: float, theta_s: float,
                   theta_ap: float) -> float:
    return (half_area_both_quad(d_t, phi_ap, radius, theta_s)
            + half_area_both_quad(d_t, theta_ap - phi_ap, radius, theta_s))


def expected_area_both_quad(radius: float, theta_s: float,
                            theta_ap: float) -> float:
    """Three-level quadrature of the raw both-links overlap expectation."""
    def phi_avg(d_t):
        s = math.sin(theta_s / 2)
        pts = [math.pi - theta_s, math.pi - theta_s / 2,
               math.pi - theta_s / 2 - math.asin(min(s * d_t / radius, 1.0))]
        pts = sorted({p for p in pts if 0.0 < p < theta_ap})
        val, _ = quad(lambda phi: half_area_both_quad(d_t, phi, radius,
                                                      theta_s),
                      0.0, theta_ap, points=pts or None, limit=100,
                      epsabs=1e-11, epsrel=1e-11)
        return val / theta_ap

    val, _ = quad(lambda dt: phi_avg(dt) * 2.0 * dt / radius ** 2,
                  0.0, radius, limit=100, epsabs=1e-9, epsrel=1e-9)
    return 2.0 * val


# ---------------------------------------------------------------------------
# Monte Carlo oracles (first-principles predicates)
# ---------------------------------------------------------------------------

def mutual_beam_hearing(target_xy: np.ndarray, other_xy: np.ndarray,
                        theta_s: float) -> np.ndarray:
    """First-principles uplink-hearing test: each endpoint lies within half a
    beam width of the other's AP-pointing boresight."""
    def in_beam(src, dst):
        # dst inside the beam of src, which points from src toward the origin
        bore = -src
        vec = dst - src
        dot = vec[..., 0] * bore[..., 0] + vec[..., 1] * bore[..., 1]
        norm = (np.hypot(vec[..., 0], vec[..., 1])
                * np.hypot(bore[..., 0], bore[..., 1]))
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.where(norm > 0, dot / np.where(norm > 0, norm, 1.0), 1.0)
        return np.arccos(np.clip(cosang, -1.0, 1.0)) <= theta_s / 2

    return in_beam(target_xy, other_xy) & in_beam(other_xy, target_xy)


def sample_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = TWO_PI * rng.random(n)
    return np.column_stack([r, phi])


@dataclass(frozen=True)
class McEstimate:
    value: float
    sigma: float

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - reference) <= n_sigma * self.sigma


def _fraction_estimate(hits: np.ndarray, scale: float) -> McEstimate:
    n = hits.size
    p = float(np.count_nonzero(hits)) / n
    sigma = math.sqrt(max(p * (1.0 - p), 1.0 / n) / n)
    return McEstimate(value=p * scale, sigma=sigma * scale)


def area_uplink_mc(d_t: float, radius: float, theta_s: float, n_samples: int,
                   rng: np.random.Generator, frame_rotation: float = 0.0
                   ) -> McEstimate:
    """Monte Carlo area of the uplink-overhearing region, via the
    beam-membership predicate on uniform disk samples. The whole frame may be
    rotated to exercise rotation invariance."""
    pts = sample_disk(rng, n_samples, radius)
    rot = pts[:, 1] + frame_rotation
    xy = np.column_stack([pts[:, 0] * np.cos(rot), pts[:, 0] * np.sin(rot)])
    target = np.array([d_t * math.cos(frame_rotation),
                       d_t * math.sin(frame_rotation)])
    hits = mutual_beam_hearing(target, xy, theta_s)
    return _fraction_estimate(hits, math.pi * radius ** 2)


def area_downlink_mc(radius: float, theta_ap: float, phi_ap: float,
                     n_samples: int, rng: np.random.Generator) -> McEstimate:
    pts = sample_disk(rng, n_samples, radius)
    rel = (pts[:, 1] - (phi_ap - theta_ap)) % TWO_PI
    return _fraction_estimate(rel <= theta_ap, math.pi * radius ** 2)


def area_both_mc(d_t: float, phi_ap: float, radius: float, theta_s: float,
                 theta_ap: float, n_samples: int,
                 rng: np.random.Generator) -> McEstimate:
    pts = sample_disk(rng, n_samples, radius)
    xy = np.column_stack([pts[:, 0] * np.cos(pts[:, 1]),
                          pts[:, 0] * np.sin(pts[:, 1])])
    target = np.array([d_t, 0.0])
    up = mutual_beam_hearing(target, xy, theta_s)
    rel = (pts[:, 1] - (phi_ap - theta_ap)) % TWO_PI
    return _fraction_estimate(up & (rel <= theta_ap), math.pi * radius ** 2)


def region_areas_mc(geo: BeamGeometry, n_samples: int,
                    rng: np.random.Generator,
                    frame_rotation: float = 0.0) -> list[McEstimate]:
    """Classify (target, sector phase, interferer) triples into the four
    overhearing groups; targets follow the radial density, phases and
    interferers are uniform."""
    radius = geo.coverage_radius
    tgt = sample_disk(rng, n_samples, radius)
    tgt_phase = tgt[:, 1] + frame_rotation
    other = sample_disk(rng, n_samples, radius)
    oth_phase = other[:, 1] + frame_rotation
    tgt_xy = np.column_stack([tgt[:, 0] * np.cos(tgt_phase),
                              tgt[:, 0] * np.sin(tgt_phase)])
    oth_xy = np.column_stack([other[:, 0] * np.cos(oth_phase),
                              other[:, 0] * np.sin(oth_phase)])
    up = mutual_beam_hearing(tgt_xy, oth_xy, geo.theta_s)
    # global sector boundaries at multiples of theta_ap in the rotated frame
    sector_t = np.floor(tgt_phase % TWO_PI / geo.theta_ap).astype(int)
    sector_o = np.floor(oth_phase % TWO_PI / geo.theta_ap).astype(int)
    down = sector_t == sector_o
    total = geo.total_area
    return [_fraction_estimate(up & ~down, total),
            _fraction_estimate(~up & down, total),
            _fraction_estimate(up & down, total),
            _fraction_estimate(~up & ~down, total)]


# ---------------------------------------------------------------------------
# suite runner
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def run_geometry_checks(n_tuples: int = 50, mc_samples: int = 1_000_000,
                        seed: int = 20230811,
                        include_expectations: bool = True) -> list[CheckResult]:
    """Randomized closed-form vs quadrature vs Monte Carlo comparison grid.

    Closed forms must match quadrature to 1e-8 relative (with an absolute
    floor of 1e-6 of the disk for near-vanishing overlaps, where both routes
    bottom out at machine noise) and Monte Carlo to 3 sigma.
    """
    from . import geometry as g

    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def rel_ok(a, b, total):
        return abs(a - b) <= 1e-8 * max(abs(b), 1e-6 * total)

    for k in range(n_tuples):
        radius = float(rng.uniform(5.0, 40.0))
        theta_s = float(rng.uniform(0.05, math.pi))
        theta_ap = float(rng.uniform(0.05, math.pi))
        d_t = float(rng.uniform(0.02, 1.0) * radius)
        phi_ap = float(rng.uniform(0.0, theta_ap))
        total = math.pi * radius ** 2
        tag = (f"tuple {k}: R={radius:.2f} th_s={theta_s:.3f} "
               f"th_ap={theta_ap:.3f} d_t={d_t:.2f} phi_ap={phi_ap:.3f}")

        a_cf = g.area_uplink(d_t, radius, theta_s)
        a_q = area_uplink_quad(d_t, radius, theta_s)
        results.append(CheckResult(
            "area_uplink vs quadrature", rel_ok(a_cf, a_q, total),
            f"{tag} cf={a_cf:.6e} quad={a_q:.6e}"))
        mc = area_uplink_mc(d_t, radius, theta_s, mc_samples, rng)
        results.append(CheckResult(
            "area_uplink vs Monte Carlo", mc.within(a_cf),
            f"{tag} cf={a_cf:.6e} mc={mc.value:.6e} sigma={mc.sigma:.2e}"))

        b_cf = g.area_both(d_t, phi_ap, radius, theta_s, theta_ap)
        b_q = area_both_quad(d_t, phi_ap, radius, theta_s, theta_ap)
        results.append(CheckResult(
            "area_both vs quadrature", rel_ok(b_cf, b_q, total),
            f"{tag} cf={b_cf:.6e} quad={b_q:.6e}"))
        mc = area_both_mc(d_t, phi_ap, radius, theta_s, theta_ap,
                          mc_samples, rng)
        results.append(CheckResult(
            "area_both vs Monte Carlo", mc.within(b_cf),
            f"{tag} cf={b_cf:.6e} mc={mc.value:.6e} sigma={mc.sigma:.2e}"))

        d_cf = g.area_downlink(radius, theta_ap)
        mc = area_downlink_mc(radius, theta_ap, phi_ap, mc_samples // 10, rng)
        results.append(CheckResult(
            "area_downlink vs Monte Carlo", mc.within(d_cf),
            f"{tag} cf={d_cf:.6e} mc={mc.value:.6e}"))

    if include_expectations:
        rng2 = np.random.default_rng(seed + 1)
        for k in range(8):
            radius = float(rng2.uniform(5.0, 40.0))
            theta_s = float(rng2.uniform(0.1, math.pi))
            theta_ap = float(rng2.uniform(0.1, math.pi))
            total = math.pi * radius ** 2
            tag = f"exp tuple {k}: R={radius:.2f} th_s={theta_s:.3f} th_ap={theta_ap:.3f}"

            e_cf = g.expected_area_uplink(radius, theta_s)
            e_q = expected_area_uplink_quad(radius, theta_s)
            results.append(CheckResult(
                "expected_area_uplink vs quadrature", rel_ok(e_cf, e_q, total),
                f"{tag} cf={e_cf:.6e} quad={e_q:.6e}"))

            eb_cf = g.expected_area_both(radius, theta_s, theta_ap)
            eb_q = expected_area_both_quad(radius, theta_s, theta_ap)
            results.append(CheckResult(
                "expected_area_both vs quadrature",
                rel_ok(eb_cf, eb_q, total),
                f"{tag} cf={eb_cf:.6e} quad={eb_q:.6e}"))

            n_ap = max(2, int(round(TWO_PI / theta_ap)))
            n_s = max(2, int(round(TWO_PI / theta_s)))
            geo = BeamGeometry(n_ap_sectors=n_ap, n_sta_sectors=n_s,
                               coverage_radius=radius)
            areas = region_areas(geo)
            ests = region_areas_mc(geo, mc_samples, rng2)
            for name, ref, est in zip("r1 r2 r3 r4".split(),
                                      areas.as_tuple(), ests):
                results.append(CheckResult(
                    f"region {name} vs Monte Carlo", est.within(ref),
                    f"{tag} cf={ref:.6e} mc={est.value:.6e} "
                    f"sigma={est.sigma:.2e}"))
            conserved = abs(sum(areas.as_tuple()) - areas.total) \
                <= 1e-9 * areas.total
            results.append(CheckResult(
                "region conservation", conserved and min(areas.as_tuple()) >= 0,
                f"{tag} sum={sum(areas.as_tuple()):.12e} "
                f"total={areas.total:.12e}"))

    return results
