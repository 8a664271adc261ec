"""Line-oriented `section.key = value` configuration files for model and
simulator runs. Unknown keys are rejected; a handful of optional keys carry
defaults (frame timings from the standard control/SC-MCS5 rates, p_e = 0,
n_reps = 20, damping = 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analytical import DtiConfig, EdcaParams, SolverOptions
from .geometry import BeamGeometry, LinkBudget, coverage_radius

CONTROL_RATE = 27.5e6
DATA_RATE = 1251.25e6
PHY_HEADER_BITS = 64
MAC_HEADER_BITS = 320
RTS_BITS = 20 * 8
CTS_BITS = 20 * 8
ACK_BITS = 14 * 8
MPDU_BITS = 7995 * 8


def default_frame_timings() -> dict[str, float]:
    """Frame durations: frame bits plus the PHY header at the frame's rate.

    Control frames use the control modulation; the data frame carries the
    MAC header plus payload at the single-carrier data rate. The payload
    accounted in throughput excludes the MAC header.
    """
    return {
        "t_rts": (RTS_BITS + PHY_HEADER_BITS) / CONTROL_RATE,
        "t_cts": (CTS_BITS + PHY_HEADER_BITS) / CONTROL_RATE,
        "t_ack": (ACK_BITS + PHY_HEADER_BITS) / CONTROL_RATE,
        "t_payload": (MPDU_BITS + PHY_HEADER_BITS) / DATA_RATE,
        "payload_bits": float(MPDU_BITS - MAC_HEADER_BITS),
    }


class ConfigError(ValueError):
    pass


_MANDATORY = ("edca.w0", "edca.m", "edca.m_prime", "dti.t_bi", "dti.t_bhi",
              "geometry.n_ap_sectors", "geometry.n_sta_sectors")

_BUDGET_KEYS = ("geometry.tx_power_sta", "geometry.tx_power_ap",
                "geometry.pathloss_exponent", "geometry.pathloss_norm",
                "geometry.noise_power", "geometry.snr_threshold")

_OPTIONAL_SCALARS = {
    "edca.slot_sigma": 5e-6,
    "edca.sifs": 3e-6,
    "edca.difs": 13e-6,
    "edca.delta": 100e-9,
    "edca.t_rts": None,
    "edca.t_cts": None,
    "edca.t_ack": None,
    "edca.t_payload": None,
    "edca.payload_bits": None,
    "dti.nu": None,
    "dti.t_cbap": None,
    "dti.n_cbap": 1,
    "dti.n_sp": 1,
    "geometry.coverage_radius": None,
    "model.lambda": None,
    "model.p_e": 0.0,
    "model.damping": 0.5,
    "model.tol": 1e-12,
    "model.max_iter": 100_000,
    "sim.enabled": True,
    "sim.n_reps": 20,
    "sim.duration": 1.0,
    "sim.warmup_bis": 2,
    "sim.base_seed": 1,
    "sweep.max_points": 4096,
    "output.path": None,
}

_AXIS_KEYS = ("axis.lambda", "axis.nu", "axis.n_cbap", "axis.n_ap_sectors",
              "axis.n_sta_sectors")

_KNOWN = set(_MANDATORY) | set(_BUDGET_KEYS) | set(_OPTIONAL_SCALARS) \
    | set(_AXIS_KEYS)


def _parse_scalar(raw: str):
    low = raw.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw.strip()


@dataclass
class SweepSpec:
    """Fully validated run description: base configuration plus sweep axes."""

    edca: EdcaParams
    t_bi: float
    t_bhi: float
    nu: float | None
    t_cbap: float | None
    n_cbap: int
    n_sp: int
    n_ap_sectors: int
    n_sta_sectors: int
    coverage_radius: float | None
    budget: LinkBudget | None
    intensity: float | None
    p_e: float
    solver: SolverOptions
    sim_enabled: bool
    n_reps: int
    duration: float
    warmup_bis: int
    base_seed: int
    max_points: int
    output_path: str | None
    axes: dict[str, list] = field(default_factory=dict)

    def radius(self, n_ap_sectors: int | None = None,
               n_sta_sectors: int | None = None) -> float:
        if self.coverage_radius is not None:
            return self.coverage_radius
        return coverage_radius(self.budget,
                               n_ap_sectors or self.n_ap_sectors,
                               n_sta_sectors or self.n_sta_sectors)

    def beam_geometry(self, n_ap_sectors: int | None = None,
                      n_sta_sectors: int | None = None) -> BeamGeometry:
        n_ap = n_ap_sectors or self.n_ap_sectors
        n_s = n_sta_sectors or self.n_sta_sectors
        return BeamGeometry(n_ap_sectors=n_ap, n_sta_sectors=n_s,
                            coverage_radius=self.radius(n_ap, n_s))

    def dti(self, nu: float | None = None,
            n_cbap: int | None = None) -> DtiConfig:
        nu_eff = nu if nu is not None else self.nu
        if nu_eff is not None:
            t_cbap = nu_eff * (self.t_bi - self.t_bhi)
        elif self.t_cbap is not None:
            t_cbap = self.t_cbap
        else:
            raise ConfigError("no contention share: set dti.nu or dti.t_cbap "
                              "(or sweep over axis.nu)")
        return DtiConfig(t_bi=self.t_bi, t_bhi=self.t_bhi, t_cbap=t_cbap,
                         n_cbap=n_cbap if n_cbap is not None else self.n_cbap,
                         n_sp=self.n_sp)

    def require_intensity(self) -> float:
        if self.intensity is None:
            raise ConfigError("model.lambda is required for this command")
        return self.intensity


def parse_config_text(text: str, source: str = "<config>") -> SweepSpec:
    values: dict[str, object] = {}
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"{source}:{lineno}: expected 'key = value'")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KNOWN:
            errors.append(f"{source}:{lineno}: unknown key '{key}'")
            continue
        if key in values:
            errors.append(f"{source}:{lineno}: duplicate key '{key}'")
            continue
        if key in _AXIS_KEYS:
            values[key] = [_parse_scalar(v) for v in raw.split(",") if v.strip()]
        else:
            values[key] = _parse_scalar(raw)
    for key in _MANDATORY:
        if key not in values:
            errors.append(f"missing mandatory key '{key}'")
    has_radius = values.get("geometry.coverage_radius") is not None
    has_budget = all(k in values for k in _BUDGET_KEYS)
    some_budget = any(k in values for k in _BUDGET_KEYS)
    if not has_radius and not has_budget:
        if some_budget:
            missing = [k for k in _BUDGET_KEYS if k not in values]
            errors.append("incomplete link budget; missing: "
                          + ", ".join(missing))
        else:
            errors.append("set geometry.coverage_radius or a full link "
                          "budget (" + ", ".join(_BUDGET_KEYS) + ")")
    if errors:
        raise ConfigError("; ".join(errors))

    def get(key, default=None):
        if key in values:
            return values[key]
        if key in _OPTIONAL_SCALARS and _OPTIONAL_SCALARS[key] is not None:
            return _OPTIONAL_SCALARS[key]
        return default

    timings = default_frame_timings()
    try:
        edca = EdcaParams(
            w0=int(values["edca.w0"]), m=int(values["edca.m"]),
            m_prime=int(values["edca.m_prime"]),
            slot_sigma=float(get("edca.slot_sigma")),
            sifs=float(get("edca.sifs")), difs=float(get("edca.difs")),
            delta=float(get("edca.delta")),
            t_rts=float(get("edca.t_rts", timings["t_rts"])),
            t_cts=float(get("edca.t_cts", timings["t_cts"])),
            t_ack=float(get("edca.t_ack", timings["t_ack"])),
            t_payload=float(get("edca.t_payload", timings["t_payload"])),
            payload_bits=float(get("edca.payload_bits",
                                   timings["payload_bits"])),
        )
        budget = None
        if not has_radius:
            budget = LinkBudget(
                tx_power_sta=float(values["geometry.tx_power_sta"]),
                tx_power_ap=float(values["geometry.tx_power_ap"]),
                pathloss_exponent=float(values["geometry.pathloss_exponent"]),
                pathloss_norm=float(values["geometry.pathloss_norm"]),
                noise_power=float(values["geometry.noise_power"]),
                snr_threshold=float(values["geometry.snr_threshold"]),
            )
        solver = SolverOptions(damping=float(get("model.damping")),
                               tol=float(get("model.tol")),
                               max_iter=int(get("model.max_iter")))
        axes = {key.split(".", 1)[1]: list(values[key])
                for key in _AXIS_KEYS if key in values and values[key]}
        spec = SweepSpec(
            edca=edca,
            t_bi=float(values["dti.t_bi"]),
            t_bhi=float(values["dti.t_bhi"]),
            nu=(float(values["dti.nu"]) if "dti.nu" in values else None),
            t_cbap=(float(values["dti.t_cbap"])
                    if "dti.t_cbap" in values else None),
            n_cbap=int(get("dti.n_cbap")),
            n_sp=int(get("dti.n_sp")),
            n_ap_sectors=int(values["geometry.n_ap_sectors"]),
            n_sta_sectors=int(values["geometry.n_sta_sectors"]),
            coverage_radius=(float(values["geometry.coverage_radius"])
                             if has_radius else None),
            budget=budget,
            intensity=(float(values["model.lambda"])
                       if "model.lambda" in values else None),
            p_e=float(get("model.p_e")),
            solver=solver,
            sim_enabled=bool(get("sim.enabled")),
            n_reps=int(get("sim.n_reps")),
            duration=float(get("sim.duration")),
            warmup_bis=int(get("sim.warmup_bis")),
            base_seed=int(get("sim.base_seed")),
            max_points=int(get("sweep.max_points")),
            output_path=values.get("output.path"),
            axes=axes,
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    problems = validate_spec(spec)
    if problems:
        raise ConfigError("; ".join(problems))
    return spec


def validate_spec(spec: SweepSpec) -> list[str]:
    problems = []
    if spec.t_bhi < 0 or spec.t_bi <= 0:
        problems.append("dti.t_bi must be > 0 and dti.t_bhi >= 0")
    t_dti = spec.t_bi - spec.t_bhi
    if t_dti <= 0:
        problems.append("dti.t_bhi must leave a positive data interval")
    if spec.nu is not None and not 0 < spec.nu <= 1:
        problems.append("dti.nu must lie in (0, 1]")
    if spec.t_cbap is not None and not 0 < spec.t_cbap <= t_dti + 1e-15:
        problems.append("dti.t_cbap must lie in (0, t_bi - t_bhi] "
                        "(DtiConfig invariant)")
    if spec.nu is not None and spec.t_cbap is not None:
        problems.append("set only one of dti.nu and dti.t_cbap")
    for nu in spec.axes.get("nu", []):
        if not 0 < float(nu) <= 1:
            problems.append(f"axis.nu value {nu} outside (0, 1]")
    if spec.intensity is not None and spec.intensity < 0:
        problems.append("model.lambda must be >= 0")
    for lam in spec.axes.get("lambda", []):
        if float(lam) < 0:
            problems.append(f"axis.lambda value {lam} must be >= 0")
    if not 0 <= spec.p_e < 1:
        problems.append("model.p_e must lie in [0, 1)")
    if spec.n_cbap < 1:
        problems.append("dti.n_cbap must be >= 1")
    if spec.n_sp < 0:
        problems.append("dti.n_sp must be >= 0")
    if spec.n_ap_sectors < 2 or spec.n_sta_sectors < 2:
        problems.append("sector counts must be >= 2")
    if spec.n_reps < 2:
        problems.append("sim.n_reps must be >= 2")
    if spec.duration <= 0:
        problems.append("sim.duration must be > 0")
    if not 0 < spec.solver.damping <= 1:
        problems.append("model.damping must lie in (0, 1]")
    return problems


def load_config(path: str) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)
