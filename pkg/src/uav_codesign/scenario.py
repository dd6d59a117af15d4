"""Experiment scenarios: definition, parsing, validation, randomization.

A scenario bundles the flight geometry, RF constants, control plants,
objective weights and solver options.  Scenarios are read from a TOML
document (sections ``geometry``, ``rf``, ``control``, ``objective``,
``solver``); every key has a documented default so the empty document is
a valid scenario.  All numbers are SI units except keys suffixed
``_db`` / ``_dbm`` / ``_dbw``, which are converted on load; files are
saved back in canonical linear units so load(save(s)) round-trips
field-exact.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .association import PenaltyDcOptions
from .control import PlantSpec, scaled_identity_plant, validate_plant
from .positions import ScaOptions
from .power import PgdOptions


class ScenarioError(ValueError):
    pass


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    pass


# ---------------------------------------------------------------------------
# unit conversions

def db_to_linear(x_db: float) -> float:
    """Decibels to a linear power ratio."""
    if not math.isfinite(x_db):
        raise ScenarioError(f"non-finite dB value {x_db}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        raise ScenarioError("cannot express a nonpositive ratio in dB")
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    return db_to_linear(x_dbm) * 1e-3


def dbw_to_watts(x_dbw: float) -> float:
    return db_to_linear(x_dbw)


# ---------------------------------------------------------------------------
# domain types

@dataclass
class Geometry:
    """Flight box, collision spacing, and the fixed ground scene.

    The default ground scene rings the robots around the sensing target
    so that serving positions also give geometrically diverse sensing
    baselines; moving closer to the target (or powering the spare UAV)
    still trades control for sensing at the margin.
    """

    area_x: tuple[float, float] = (0.0, 100.0)
    area_y: tuple[float, float] = (0.0, 100.0)
    altitude: float | tuple[float, float] = 100.0
    d_min: float = 25.0
    n_uav: int = 4
    robots: np.ndarray = field(
        default_factory=lambda: np.array(
            [[42.0, 72.0, 0.0], [16.0, 27.0, 0.0], [68.0, 27.0, 0.0]]))
    target: np.ndarray = field(
        default_factory=lambda: np.array([70.0, 70.0, 0.0]))

    @property
    def z_interval(self) -> tuple[float, float]:
        if isinstance(self.altitude, tuple):
            return self.altitude
        return (float(self.altitude), float(self.altitude))

    @property
    def fixed_altitude(self) -> bool:
        lo, hi = self.z_interval
        return lo == hi

    @property
    def n_robots(self) -> int:
        return len(self.robots)


@dataclass
class RfParams:
    """RF constants, stored in linear units (watts, Hz, ratios).

    The default robot-side noise floor is far above the thermal value
    used for sensing: at the published constants every downlink is
    interference-limited, which makes the power budget irrelevant to
    the communication rates; a -70 dBm floor keeps the budget/cost
    coupling observable at desk scale.  Override ``noise_comm_dbm`` to
    study the interference-limited regime.
    """

    alpha0: float = db_to_linear(-49.0)    # downlink gain at 1 m
    beta0: float = db_to_linear(-50.0)     # two-way sensing gain at 1 m
    noise_comm: float = dbm_to_watts(-70.0)
    noise_sense: float = dbm_to_watts(-110.0)
    bandwidth: float = 500e3
    gp_factor: float = 0.1                 # processing gain = gp_factor * B
    rho: float = 200.0
    bler: float = 1e-5
    blocklength: float = 1024.0
    uses_per_step: float = 100.0           # channel uses per control step
    p_max: float = dbw_to_watts(-1.0)      # network power budget
    rate_convention: str = "bits"

    @property
    def gp(self) -> float:
        """Sensing processing gain."""
        return self.gp_factor * self.bandwidth


@dataclass
class ObjectiveWeights:
    """Trade-off weight and the two normalizers of the objective.

    The normalizers are measured magnitudes for the default scene: the
    cost sum moves in the 0.15..0.25 range and the information
    determinant peaks near 1.6e7, so these values keep the weighted
    control increment dominant at mid eta while leaving the sensing
    term a real pull at low eta.
    """

    eta: float = 0.5
    psi_c: float = 0.05
    psi_s: float = 1.28e8


@dataclass
class PlantConfig:
    """Scaled-identity plant family shared by all robots."""

    iota: int = 25
    zeta: int = 25
    g: tuple[float, ...] = (4.0, 8.0, 12.0)    # entropy rates, bits/step
    sigma_v2: float = 1e-3
    sigma_w2: float = 1e-3

    def build(self) -> list[PlantSpec]:
        return [scaled_identity_plant(self.iota, gk, self.sigma_v2,
                                      self.sigma_w2) for gk in self.g]


@dataclass
class SolverOptions:
    """Outer-loop tolerances plus per-block solver options."""

    tol: float = 1e-3
    max_outer: int = 30
    association: PenaltyDcOptions = field(default_factory=PenaltyDcOptions)
    power: PgdOptions = field(default_factory=PgdOptions)
    sca: ScaOptions = field(default_factory=ScaOptions)
    init_positions: np.ndarray | None = None


@dataclass
class Scenario:
    """Full experiment description; treat as immutable after creation."""

    geometry: Geometry = field(default_factory=Geometry)
    rf: RfParams = field(default_factory=RfParams)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    plant_cfg: PlantConfig = field(default_factory=PlantConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    seed: int = 0

    @cached_property
    def plants(self) -> list[PlantSpec]:
        return self.plant_cfg.build()

    @cached_property
    def derived(self):
        from .control import derive_plant
        return [derive_plant(spec) for spec in self.plants]


def default_scenario() -> Scenario:
    return Scenario()


# ---------------------------------------------------------------------------
# validation

def packing_capacity(geometry: Geometry) -> int:
    """Greedy witness: points of a square grid with spacing d_min."""
    wx = geometry.area_x[1] - geometry.area_x[0]
    wy = geometry.area_y[1] - geometry.area_y[0]
    return (int(wx / geometry.d_min) + 1) * (int(wy / geometry.d_min) + 1)


def validate_geometry(geometry: Geometry) -> None:
    for name, iv in (("area_x", geometry.area_x), ("area_y", geometry.area_y)):
        if iv[1] < iv[0]:
            raise ScenarioValidationError(f"{name} interval is empty")
    if geometry.d_min <= 0.0:
        raise ScenarioValidationError("d_min must be positive")
    lo, hi = geometry.z_interval
    if lo <= 0.0 or hi < lo:
        raise ScenarioValidationError("altitude must be positive")
    if geometry.n_uav < geometry.n_robots:
        raise ScenarioValidationError(
            f"n_uav < robot count ({geometry.n_uav} < {geometry.n_robots}): "
            "every robot needs a dedicated UAV")
    cap = packing_capacity(geometry)
    if geometry.n_uav > cap:
        raise ScenarioValidationError(
            f"no feasible packing witness: {geometry.n_uav} UAVs at spacing "
            f"{geometry.d_min} m exceed the greedy grid capacity {cap}")
    if np.asarray(geometry.robots).shape[1:] != (3,):
        raise ScenarioValidationError("robots must be 3D points")
    if np.asarray(geometry.target).shape != (3,):
        raise ScenarioValidationError("target must be a 3D point")


def validate_rf(rf: RfParams) -> None:
    positive = ("alpha0", "beta0", "noise_comm", "noise_sense", "bandwidth",
                "gp_factor", "rho", "uses_per_step", "p_max")
    for name in positive:
        if getattr(rf, name) <= 0.0:
            raise ScenarioValidationError(f"rf.{name} must be strictly positive")
    if not 0.0 < rf.bler < 0.5:
        raise ScenarioValidationError("rf.bler must lie in (0, 0.5)")
    if rf.blocklength < 1:
        raise ScenarioValidationError("rf.blocklength must be at least 1")
    if rf.rate_convention not in ("bits", "nats"):
        raise ScenarioValidationError(
            f"rf.rate_convention must be 'bits' or 'nats', "
            f"got {rf.rate_convention!r}")


def validate_weights(weights: ObjectiveWeights) -> None:
    if not 0.0 <= weights.eta <= 1.0:
        raise ScenarioValidationError("objective.eta must lie in [0, 1]")
    if weights.psi_c <= 0.0 or weights.psi_s <= 0.0:
        raise ScenarioValidationError("objective normalizers must be positive")


def validate_scenario(scen: Scenario) -> None:
    validate_geometry(scen.geometry)
    validate_rf(scen.rf)
    validate_weights(scen.weights)
    if len(scen.plant_cfg.g) != scen.geometry.n_robots:
        raise ScenarioValidationError(
            f"plants count {len(scen.plant_cfg.g)} must equal robot count "
            f"{scen.geometry.n_robots}")
    if scen.plant_cfg.iota != scen.plant_cfg.zeta:
        raise ScenarioValidationError(
            "scaled-identity plants require iota == zeta")
    if scen.plant_cfg.sigma_v2 < 0 or scen.plant_cfg.sigma_w2 < 0:
        raise ScenarioValidationError("noise variances must be nonnegative")
    for spec in scen.plants:
        validate_plant(spec)


# ---------------------------------------------------------------------------
# random placement

def random_positions(geometry: Geometry, seed: int,
                     max_rounds: int = 300, tries_per_point: int = 200
                     ) -> np.ndarray:
    """Uniform UAV positions in the flight box at pairwise spacing d_min.

    Rejection sampling with restarts; deterministic given the seed.
    Raises after ``max_rounds`` failed rounds (area too tight).
    """
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = geometry.area_x, geometry.area_y
    z0, z1 = geometry.z_interval
    d2min = geometry.d_min ** 2
    for _ in range(max_rounds):
        pts: list[np.ndarray] = []
        for _ in range(geometry.n_uav):
            for _ in range(tries_per_point):
                cand = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1),
                                 rng.uniform(z0, z1) if z1 > z0 else z0])
                if all(np.sum((cand - q) ** 2) >= d2min for q in pts):
                    pts.append(cand)
                    break
            else:
                break
        if len(pts) == geometry.n_uav:
            return np.array(pts)
    raise ScenarioError(
        f"could not place {geometry.n_uav} points at spacing "
        f"{geometry.d_min} m inside the flight area after {max_rounds} rounds")


# ---------------------------------------------------------------------------
# config document handling

def _interval(value, key: str) -> tuple[float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ScenarioParseError(f"key {key!r} must be a [lo, hi] pair")
    return (float(value[0]), float(value[1]))


def _point(value, key: str) -> np.ndarray:
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ScenarioParseError(f"key {key!r} must be an [x, y, z] triple")
    return np.array([float(v) for v in value])


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"key {key!r} must be a number")
    return float(value)


def _integer(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioParseError(f"key {key!r} must be an integer")
    return value


def _check_keys(table: dict, allowed: set[str], section: str) -> None:
    for key in table:
        if key not in allowed:
            raise ScenarioParseError(f"unknown key {section}.{key!r}")


def _pop_linear(table: dict, base: str, suffix: str, conv, section: str,
                default: float) -> float:
    """Accept either a canonical linear key or its dB-suffixed companion."""
    has_lin, has_db = base in table, f"{base}_{suffix}" in table
    if has_lin and has_db:
        raise ScenarioParseError(
            f"give only one of {section}.{base} and {section}.{base}_{suffix}")
    if has_lin:
        return _number(table.pop(base), f"{section}.{base}")
    if has_db:
        return conv(_number(table.pop(f"{base}_{suffix}"),
                            f"{section}.{base}_{suffix}"))
    return default


def load_scenario(text: str) -> Scenario:
    """Parse a TOML scenario document, apply defaults and validate."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(f"scenario parse error: {exc}") from exc
    _check_keys(doc, {"geometry", "rf", "control", "objective", "solver",
                      "seed"}, "top level")
    seed = _integer(doc.get("seed", 0), "seed")

    geo_tab = dict(doc.get("geometry", {}))
    _check_keys(geo_tab, {"area_x", "area_y", "altitude", "d_min", "n_uav",
                          "robots", "target"}, "geometry")
    geo = Geometry()
    if "area_x" in geo_tab:
        geo.area_x = _interval(geo_tab["area_x"], "geometry.area_x")
    if "area_y" in geo_tab:
        geo.area_y = _interval(geo_tab["area_y"], "geometry.area_y")
    if "altitude" in geo_tab:
        alt = geo_tab["altitude"]
        geo.altitude = (_interval(alt, "geometry.altitude")
                        if isinstance(alt, (list, tuple))
                        else _number(alt, "geometry.altitude"))
    if "d_min" in geo_tab:
        geo.d_min = _number(geo_tab["d_min"], "geometry.d_min")
    if "n_uav" in geo_tab:
        geo.n_uav = _integer(geo_tab["n_uav"], "geometry.n_uav")
    if "robots" in geo_tab:
        robots = geo_tab["robots"]
        if not isinstance(robots, list) or not robots:
            raise ScenarioParseError("geometry.robots must be a list of points")
        geo.robots = np.array([_point(r, "geometry.robots") for r in robots])
    if "target" in geo_tab:
        geo.target = _point(geo_tab["target"], "geometry.target")

    rf_tab = dict(doc.get("rf", {}))
    _check_keys(rf_tab, {"alpha0", "alpha0_db", "beta0", "beta0_db",
                         "noise_comm", "noise_comm_dbm", "noise_sense",
                         "noise_sense_dbm", "bandwidth", "gp_factor", "rho",
                         "bler", "blocklength", "uses_per_step", "p_max",
                         "p_max_dbw", "rate_convention"}, "rf")
    defaults = RfParams()
    rf = RfParams(
        alpha0=_pop_linear(rf_tab, "alpha0", "db", db_to_linear, "rf",
                           defaults.alpha0),
        beta0=_pop_linear(rf_tab, "beta0", "db", db_to_linear, "rf",
                          defaults.beta0),
        noise_comm=_pop_linear(rf_tab, "noise_comm", "dbm", dbm_to_watts,
                               "rf", defaults.noise_comm),
        noise_sense=_pop_linear(rf_tab, "noise_sense", "dbm", dbm_to_watts,
                                "rf", defaults.noise_sense),
        p_max=_pop_linear(rf_tab, "p_max", "dbw", dbw_to_watts, "rf",
                          defaults.p_max),
    )
    for name in ("bandwidth", "gp_factor", "rho", "bler", "blocklength",
                 "uses_per_step"):
        if name in rf_tab:
            setattr(rf, name, _number(rf_tab[name], f"rf.{name}"))
    if "rate_convention" in rf_tab:
        conv = rf_tab["rate_convention"]
        if not isinstance(conv, str):
            raise ScenarioParseError("rf.rate_convention must be a string")
        rf.rate_convention = conv

    ctl_tab = dict(doc.get("control", {}))
    _check_keys(ctl_tab, {"iota", "zeta", "g", "g_range", "plant_seed",
                          "sigma_v2", "sigma_w2"}, "control")
    cfg = PlantConfig()
    if "iota" in ctl_tab:
        cfg.iota = _integer(ctl_tab["iota"], "control.iota")
        cfg.zeta = cfg.iota
    if "zeta" in ctl_tab:
        cfg.zeta = _integer(ctl_tab["zeta"], "control.zeta")
    if "sigma_v2" in ctl_tab:
        cfg.sigma_v2 = _number(ctl_tab["sigma_v2"], "control.sigma_v2")
    if "sigma_w2" in ctl_tab:
        cfg.sigma_w2 = _number(ctl_tab["sigma_w2"], "control.sigma_w2")
    if "g" in ctl_tab and "g_range" in ctl_tab:
        raise ScenarioParseError("give only one of control.g and control.g_range")
    if "g" in ctl_tab:
        glist = ctl_tab["g"]
        if not isinstance(glist, list) or not glist:
            raise ScenarioParseError("control.g must be a list of rates")
        cfg.g = tuple(_number(v, "control.g") for v in glist)
    elif "g_range" in ctl_tab:
        lo, hi = _interval(ctl_tab["g_range"], "control.g_range")
        plant_seed = _integer(ctl_tab.get("plant_seed", 0), "control.plant_seed")
        draw = np.random.default_rng(plant_seed).uniform(lo, hi, geo.n_robots)
        cfg.g = tuple(float(v) for v in draw)
    elif len(cfg.g) != geo.n_robots:
        # default rates follow the robot count when it differs from 3
        cfg.g = tuple(6.0 + 6.0 * i for i in range(geo.n_robots))

    obj_tab = dict(doc.get("objective", {}))
    _check_keys(obj_tab, {"eta", "psi_c", "psi_s"}, "objective")
    weights = ObjectiveWeights()
    for name in ("eta", "psi_c", "psi_s"):
        if name in obj_tab:
            setattr(weights, name, _number(obj_tab[name], f"objective.{name}"))

    sol_tab = dict(doc.get("solver", {}))
    _check_keys(sol_tab, {"tol", "max_outer", "association", "power", "sca"},
                "solver")
    solver = SolverOptions()
    if "tol" in sol_tab:
        solver.tol = _number(sol_tab["tol"], "solver.tol")
    if "max_outer" in sol_tab:
        solver.max_outer = _integer(sol_tab["max_outer"], "solver.max_outer")
    assoc_tab = dict(sol_tab.get("association", {}))
    _check_keys(assoc_tab, {"mu0", "growth", "mu_max", "tol", "max_outer",
                            "inner_tol", "inner_max"}, "solver.association")
    for name in assoc_tab:
        value = (_integer if name in ("max_outer", "inner_max") else _number)(
            assoc_tab[name], f"solver.association.{name}")
        setattr(solver.association, name, value)
    power_tab = dict(sol_tab.get("power", {}))
    _check_keys(power_tab, {"step0", "rho_hat", "tol", "max_iter", "armijo"},
                "solver.power")
    for name in power_tab:
        if name == "armijo":
            if not isinstance(power_tab[name], bool):
                raise ScenarioParseError("solver.power.armijo must be a boolean")
            solver.power.armijo = power_tab[name]
        elif name == "max_iter":
            solver.power.max_iter = _integer(power_tab[name],
                                             "solver.power.max_iter")
        else:
            setattr(solver.power, name,
                    _number(power_tab[name], f"solver.power.{name}"))
    sca_tab = dict(sol_tab.get("sca", {}))
    _check_keys(sca_tab, {"trust0", "trust_min", "shrink", "tol", "max_iter"},
                "solver.sca")
    for name in sca_tab:
        value = (_integer if name == "max_iter" else _number)(
            sca_tab[name], f"solver.sca.{name}")
        setattr(solver.sca, name, value)

    scen = Scenario(geometry=geo, rf=rf, weights=weights, plant_cfg=cfg,
                    solver=solver, seed=seed)
    validate_scenario(scen)
    return scen


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise ScenarioError(f"cannot serialize {value!r}")


def save_scenario(scen: Scenario) -> str:
    """Serialize a scenario to TOML in canonical (linear) units."""
    geo, rf, w, cfg, sol = (scen.geometry, scen.rf, scen.weights,
                            scen.plant_cfg, scen.solver)
    lines = [f"seed = {scen.seed}", ""]
    lines += ["[geometry]",
              f"area_x = {_fmt(geo.area_x)}",
              f"area_y = {_fmt(geo.area_y)}",
              f"altitude = {_fmt(geo.altitude)}",
              f"d_min = {_fmt(geo.d_min)}",
              f"n_uav = {geo.n_uav}",
              f"robots = {_fmt([list(r) for r in np.asarray(geo.robots)])}",
              f"target = {_fmt(list(np.asarray(geo.target)))}", ""]
    lines += ["[rf]"]
    for name in ("alpha0", "beta0", "noise_comm", "noise_sense", "bandwidth",
                 "gp_factor", "rho", "bler", "blocklength", "uses_per_step",
                 "p_max", "rate_convention"):
        lines.append(f"{name} = {_fmt(getattr(rf, name))}")
    lines += ["", "[control]",
              f"iota = {cfg.iota}",
              f"zeta = {cfg.zeta}",
              f"g = {_fmt(cfg.g)}",
              f"sigma_v2 = {_fmt(cfg.sigma_v2)}",
              f"sigma_w2 = {_fmt(cfg.sigma_w2)}", ""]
    lines += ["[objective]",
              f"eta = {_fmt(w.eta)}",
              f"psi_c = {_fmt(w.psi_c)}",
              f"psi_s = {_fmt(w.psi_s)}", ""]
    lines += ["[solver]",
              f"tol = {_fmt(sol.tol)}",
              f"max_outer = {sol.max_outer}", ""]
    lines += ["[solver.association]"]
    for name in ("mu0", "growth", "mu_max", "tol", "max_outer", "inner_tol",
                 "inner_max"):
        lines.append(f"{name} = {_fmt(getattr(sol.association, name))}")
    lines += ["", "[solver.power]"]
    for name in ("rho_hat", "max_iter", "armijo"):
        lines.append(f"{name} = {_fmt(getattr(sol.power, name))}")
    if sol.power.step0 is not None:
        lines.append(f"step0 = {_fmt(sol.power.step0)}")
    if sol.power.tol is not None:
        lines.append(f"tol = {_fmt(sol.power.tol)}")
    lines += ["", "[solver.sca]"]
    for name in ("trust0", "trust_min", "shrink", "tol", "max_iter"):
        lines.append(f"{name} = {_fmt(getattr(sol.sca, name))}")
    return "\n".join(lines) + "\n"
