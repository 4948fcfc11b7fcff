"""Scenario configuration, world geometry and seeded vehicle-instance generation.

Seeding scheme (order-independent, parallel-safe): every random stream is a
``numpy.random.Generator`` built from ``SeedSequence(master_seed, spawn_key=...)``
with a fixed stream id as the first spawn-key element:

* instance ``n``            -> spawn_key ``(0, n)``
* Monte Carlo pair ``(n,k,s)`` -> spawn_key ``(1, n, k, s)``

Sub-seeds for distinct keys never collide, so instance streams are
statistically independent and the generated instance list is identical under
any execution schedule.
"""

from __future__ import annotations

import csv
import hashlib
import importlib.resources
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
import yaml

SPEED_OF_LIGHT = 299_792_458.0

# stream ids for SeedSequence spawn keys
_STREAM_INSTANCE = 0
_STREAM_MC = 1


class ConfigError(Exception):
    """Raised when a configuration file is malformed or violates an invariant."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class SystemParams:
    """Physical and channel constants. All powers and gains are linear (watts)."""

    carrier_frequency_hz: float = 5.9e9
    bandwidth_hz: float = 20e6
    tx_power_w: float = 0.2
    antenna_gain_product: float = 100.0     # G_t * G_r
    element_gain: float = 8.0               # per reflecting element
    elements_rows: int = 200
    elements_cols: int = 200
    element_len_m: float = 0.0              # 0 -> wavelength / 5 (set at load)
    element_wid_m: float = 0.0
    path_loss_alpha: float = 2.7
    nlos_atten_vehicle: float = 0.01        # linear power ratio, vehicle-RIS leg
    nlos_atten_server: float = 0.01         # linear power ratio, RIS-server leg
    env_a1: float = 11.95
    env_a2: float = 0.136
    noise_power_w: float = 1e-13
    flops_per_task: float = 20e12
    completion_eta: float = 0.75
    grid_len_m: float = 1.0
    theta_r_denominator: str = "dk"         # "dk" keeps the printed normalization
    enum_limit: int = 16                    # max grid budget for exact enumeration
    mc_samples: int = 10_000

    def __post_init__(self):
        positive = [
            ("carrier_frequency_hz", self.carrier_frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("antenna_gain_product", self.antenna_gain_product),
            ("element_gain", self.element_gain),
            ("path_loss_alpha", self.path_loss_alpha),
            ("noise_power_w", self.noise_power_w),
            ("flops_per_task", self.flops_per_task),
            ("grid_len_m", self.grid_len_m),
        ]
        for name, value in positive:
            _require(value > 0, f"system.{name} must be strictly positive")
        _require(self.elements_rows >= 1, "system.elements_rows must be >= 1")
        _require(self.elements_cols >= 1, "system.elements_cols must be >= 1")
        if self.element_len_m == 0.0:
            object.__setattr__(self, "element_len_m", self.wavelength_m / 5.0)
        if self.element_wid_m == 0.0:
            object.__setattr__(self, "element_wid_m", self.wavelength_m / 5.0)
        _require(self.element_len_m > 0, "system.element_len_m must be strictly positive")
        _require(self.element_wid_m > 0, "system.element_wid_m must be strictly positive")
        _require(0 < self.completion_eta < 1,
                 "system.completion_eta must lie strictly inside (0, 1)")
        _require(0 < self.nlos_atten_vehicle < 1,
                 "system.nlos_atten_vehicle must lie strictly inside (0, 1)")
        _require(0 < self.nlos_atten_server < 1,
                 "system.nlos_atten_server must lie strictly inside (0, 1)")
        _require(self.theta_r_denominator in ("dk", "ds"),
                 "system.theta_r_denominator must be 'dk' or 'ds'")
        _require(self.enum_limit >= 0, "system.enum_limit must be >= 0")
        _require(self.mc_samples >= 1, "system.mc_samples must be >= 1")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz


@dataclass(frozen=True)
class Lane:
    center_y_m: float
    direction: int  # +1 toward +x, -1 toward -x

    def __post_init__(self):
        _require(self.direction in (1, -1), "road lane direction must be +1 or -1")


@dataclass(frozen=True)
class RoadGeometry:
    x_min_m: float = -100.0
    x_max_m: float = 100.0
    lanes: tuple[Lane, ...] = (
        Lane(-6.0, 1), Lane(-2.0, 1), Lane(2.0, -1), Lane(6.0, -1),
    )
    vehicle_antenna_height_m: float = 1.5

    def __post_init__(self):
        _require(self.x_min_m < self.x_max_m, "road.x_min_m must be < road.x_max_m")
        _require(len(self.lanes) >= 1, "road must define at least one lane")


@dataclass(frozen=True)
class Server:
    id: int
    position: tuple[float, float, float]
    capacity: int

    def __post_init__(self):
        _require(self.capacity >= 0, f"server {self.id} capacity must be >= 0")


@dataclass(frozen=True)
class Placement:
    """RIS placement decision: fixed horizontal anchor plus altitude and tilt."""

    ris_xy: tuple[float, float]
    altitude_m: float
    tilt_rad: float

    def __post_init__(self):
        _require(self.altitude_m >= 0.0, "placement altitude must be >= 0")
        _require(-1e-12 <= self.tilt_rad <= math.pi / 2 + 1e-12,
                 "placement tilt must lie in [0, pi/2]")


@dataclass(frozen=True)
class PlacementBounds:
    h_min_m: float = 0.0
    h_max_m: float = 90.0
    theta_min_rad: float = 0.0
    theta_max_rad: float = math.pi / 2
    step_h_m: float = 1.0
    step_theta_rad: float = math.radians(1.0)

    def __post_init__(self):
        _require(self.h_min_m <= self.h_max_m, "placement h_min_m must be <= h_max_m")
        _require(self.theta_min_rad <= self.theta_max_rad,
                 "placement theta_min must be <= theta_max")
        _require(self.step_h_m > 0, "placement.step_h_m must be strictly positive")
        _require(self.step_theta_rad > 0, "placement.step_theta_deg must be strictly positive")


@dataclass(frozen=True)
class TaskSpec:
    data_bits: float
    flops_total: float   # input size x per-bit workload, pre-multiplied
    deadline_s: float

    def __post_init__(self):
        _require(self.data_bits > 0, "task.data_bits must be strictly positive")
        _require(self.flops_total > 0, "task.flops_total must be strictly positive")
        _require(self.deadline_s > 0, "task.deadline_s must be strictly positive")


@dataclass(frozen=True)
class Vehicle:
    id: int
    position: tuple[float, float, float]  # initial (x, y, z)
    speed_mps: float
    direction: int
    task: TaskSpec

    def __post_init__(self):
        _require(self.speed_mps > 0, f"vehicle {self.id} speed must be strictly positive")
        _require(self.direction in (1, -1), f"vehicle {self.id} direction must be +1 or -1")


@dataclass(frozen=True)
class Instance:
    index: int
    vehicles: tuple[Vehicle, ...]

    def __post_init__(self):
        ids = [v.id for v in self.vehicles]
        _require(len(ids) == len(set(ids)),
                 f"instance {self.index} has duplicate vehicle ids")


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemParams = field(default_factory=SystemParams)
    road: RoadGeometry = field(default_factory=RoadGeometry)
    servers: tuple[Server, ...] = ()
    ris_xy: tuple[float, float] = (0.0, -12.0)
    bounds: PlacementBounds = field(default_factory=PlacementBounds)
    task: TaskSpec = field(default_factory=lambda: TaskSpec(16e6, 179.4e9, 0.1))
    arrival_rate_per_s: float = 0.7
    speed_range_mps: tuple[float, float] = (40.0 / 3.6, 72.0 / 3.6)
    snapshot_window_s: float = 20.0
    num_instances: int = 100
    master_seed: int = 1

    def __post_init__(self):
        _require(self.num_instances >= 1, "traffic.num_instances must be >= 1")
        _require(self.arrival_rate_per_s >= 0, "traffic.arrival_rate_per_s must be >= 0")
        _require(self.speed_range_mps[0] <= self.speed_range_mps[1],
                 "traffic.speed_min_mps must be <= traffic.speed_max_mps")
        _require(self.speed_range_mps[0] > 0, "traffic.speed_min_mps must be strictly positive")
        _require(self.snapshot_window_s > 0, "traffic.snapshot_window_s must be strictly positive")
        _require(len(self.servers) >= 1, "servers: at least one server is required")
        _require(0 <= self.master_seed < 2**64, "traffic.master_seed must fit in 64 bits")


def equidistant_servers(count: int, road: RoadGeometry, y_m: float, z_m: float,
                        capacity: int) -> tuple[Server, ...]:
    """Place ``count`` servers at segment midpoints along the road span."""
    _require(count >= 1, "servers.count must be >= 1")
    span = road.x_max_m - road.x_min_m
    return tuple(
        Server(i, (road.x_min_m + (i + 0.5) * span / count, y_m, z_m), capacity)
        for i in range(count)
    )


# ---------------------------------------------------------------------------
# Config file handling
# ---------------------------------------------------------------------------

def default_config_path() -> str:
    """Path of the shipped default configuration file."""
    return str(importlib.resources.files("risvec").joinpath("data/default.yaml"))


def _dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _as_mapping(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section '{key}' must be a mapping")
    return value


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a parsed config mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    sys_raw = _as_mapping(raw, "system")
    road_raw = _as_mapping(raw, "road")
    srv_raw = _as_mapping(raw, "servers")
    plc_raw = _as_mapping(raw, "placement")
    trf_raw = _as_mapping(raw, "traffic")
    task_raw = _as_mapping(raw, "task")

    try:
        system = SystemParams(
            carrier_frequency_hz=float(sys_raw.get("carrier_frequency_hz", 5.9e9)),
            bandwidth_hz=float(sys_raw.get("bandwidth_hz", 20e6)),
            tx_power_w=float(sys_raw.get("tx_power_w", 0.2)),
            antenna_gain_product=float(sys_raw.get("antenna_gain_product", 100.0)),
            element_gain=float(sys_raw.get("element_gain", 8.0)),
            elements_rows=int(sys_raw.get("elements_rows", 200)),
            elements_cols=int(sys_raw.get("elements_cols", 200)),
            element_len_m=float(sys_raw.get("element_len_m", 0.0) or 0.0),
            element_wid_m=float(sys_raw.get("element_wid_m", 0.0) or 0.0),
            path_loss_alpha=float(sys_raw.get("path_loss_alpha", 2.7)),
            nlos_atten_vehicle=_db_to_linear(float(sys_raw.get("nlos_atten_db_vehicle", -20.0))),
            nlos_atten_server=_db_to_linear(float(sys_raw.get("nlos_atten_db_server", -20.0))),
            env_a1=float(sys_raw.get("env_a1", 11.95)),
            env_a2=float(sys_raw.get("env_a2", 0.136)),
            noise_power_w=_dbm_to_watt(float(sys_raw.get("noise_dbm", -100.0))),
            flops_per_task=float(sys_raw.get("flops_per_task", 20e12)),
            completion_eta=float(sys_raw.get("completion_eta", 0.75)),
            grid_len_m=float(sys_raw.get("grid_len_m", 1.0)),
            theta_r_denominator=str(sys_raw.get("theta_r_denominator", "dk")),
            enum_limit=int(sys_raw.get("enum_limit", 16)),
            mc_samples=int(sys_raw.get("mc_samples", 10_000)),
        )

        lanes_raw = road_raw.get("lanes")
        if lanes_raw is None:
            lanes = RoadGeometry().lanes
        else:
            if not isinstance(lanes_raw, list):
                raise ConfigError("road.lanes must be a list")
            lanes = tuple(Lane(float(ln["y_m"]), int(ln["direction"])) for ln in lanes_raw)
            if len(lanes) == 0:
                raise ConfigError("road must define at least one lane")
        road = RoadGeometry(
            x_min_m=float(road_raw.get("x_min_m", -100.0)),
            x_max_m=float(road_raw.get("x_max_m", 100.0)),
            lanes=lanes,
            vehicle_antenna_height_m=float(road_raw.get("vehicle_antenna_height_m", 1.5)),
        )

        if "list" in srv_raw:
            servers = tuple(
                Server(i, (float(s["x_m"]), float(s["y_m"]), float(s["z_m"])),
                       int(s["capacity"]))
                for i, s in enumerate(srv_raw["list"])
            )
        else:
            servers = equidistant_servers(
                count=int(srv_raw.get("count", 4)),
                road=road,
                y_m=float(srv_raw.get("y_m", 12.0)),
                z_m=float(srv_raw.get("z_m", 6.0)),
                capacity=int(srv_raw.get("capacity", 4)),
            )

        bounds = PlacementBounds(
            h_min_m=float(plc_raw.get("h_min_m", 0.0)),
            h_max_m=float(plc_raw.get("h_max_m", 90.0)),
            theta_min_rad=math.radians(float(plc_raw.get("theta_min_deg", 0.0))),
            theta_max_rad=math.radians(float(plc_raw.get("theta_max_deg", 90.0))),
            step_h_m=float(plc_raw.get("step_h_m", 1.0)),
            step_theta_rad=math.radians(float(plc_raw.get("step_theta_deg", 1.0))),
        )

        task = TaskSpec(
            data_bits=float(task_raw.get("data_mbit", 16.0)) * 1e6,
            flops_total=float(task_raw.get("flops_total", 179.4e9)),
            deadline_s=float(task_raw.get("deadline_s", 0.1)),
        )

        cfg = ScenarioConfig(
            system=system,
            road=road,
            servers=servers,
            ris_xy=(float(plc_raw.get("ris_x_m", 0.0)), float(plc_raw.get("ris_y_m", -12.0))),
            bounds=bounds,
            task=task,
            arrival_rate_per_s=float(trf_raw.get("arrival_rate_per_s", 0.7)),
            speed_range_mps=(float(trf_raw.get("speed_min_mps", 40.0 / 3.6)),
                             float(trf_raw.get("speed_max_mps", 72.0 / 3.6))),
            snapshot_window_s=float(trf_raw.get("snapshot_window_s", 20.0)),
            num_instances=int(trf_raw.get("num_instances", 100)),
            master_seed=int(trf_raw.get("master_seed", 1)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config value: {exc}") from exc
    return cfg


def load_config(path: str) -> ScenarioConfig:
    """Load and validate a scenario config file (YAML key-value format)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply dotted ``section.key=value`` overrides onto a raw config mapping.

    Later overrides win. Values are parsed as YAML scalars.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, _, text = item.partition("=")
        keys = dotted.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override '{item}' has an empty key component")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override '{item}' value does not parse: {exc}") from exc
        node = raw
        for key in keys[:-1]:
            nxt = node.get(key)
            if nxt is None:
                nxt = {}
                node[key] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(f"override '{item}' descends into a non-mapping key")
            node = nxt
        node[keys[-1]] = value
    return raw


def config_hash(raw: dict) -> str:
    """Stable hash of a raw config mapping, for run summaries."""
    blob = json.dumps(raw, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def config_digest(cfg: ScenarioConfig) -> str:
    """Stable hash of a resolved ScenarioConfig."""
    blob = json.dumps(asdict(cfg), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Instance generation and trace ingestion
# ---------------------------------------------------------------------------

def instance_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for instance ``index``."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_STREAM_INSTANCE, index)))


def mc_pair_rng(master_seed: int, instance: int, vehicle: int, server: int) -> np.random.Generator:
    """Independent generator for the Monte Carlo stream of pair ``(n, k, s)``."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_STREAM_MC, instance, vehicle, server)))


def _sample_instance(cfg: ScenarioConfig, index: int) -> Instance:
    rng = instance_rng(cfg.master_seed, index)
    count = int(rng.poisson(cfg.arrival_rate_per_s * cfg.snapshot_window_s))
    lane_idx = rng.integers(0, len(cfg.road.lanes), size=count)
    xs = rng.uniform(cfg.road.x_min_m, cfg.road.x_max_m, size=count)
    speeds = rng.uniform(cfg.speed_range_mps[0], cfg.speed_range_mps[1], size=count)
    z = cfg.road.vehicle_antenna_height_m
    vehicles = []
    for k in range(count):
        lane = cfg.road.lanes[int(lane_idx[k])]
        vehicles.append(Vehicle(
            id=k,
            position=(float(xs[k]), lane.center_y_m, z),
            speed_mps=float(speeds[k]),
            direction=lane.direction,
            task=cfg.task,
        ))
    return Instance(index=index, vehicles=tuple(vehicles))


def generate_instances(cfg: ScenarioConfig,
                       trace: Optional[dict[int, list[Vehicle]]] = None) -> list[Instance]:
    """Generate the instance list. Trace rows, when given, override sampled instances."""
    instances = [_sample_instance(cfg, n) for n in range(cfg.num_instances)]
    if trace:
        for n, vehicles in trace.items():
            if 0 <= n < len(instances):
                instances[n] = Instance(index=n, vehicles=tuple(vehicles))
    return instances


_TRACE_COLUMNS = ["instance_id", "vehicle_id", "x0_m", "y0_m", "speed_mps",
                  "direction", "data_bits", "flops", "deadline_s"]


def load_trace(path: str, vehicle_z_m: float = 1.5) -> dict[int, list[Vehicle]]:
    """Read a vehicle trace table (one row per vehicle per instance)."""
    out: dict[int, list[Vehicle]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != _TRACE_COLUMNS:
            raise ConfigError(
                f"trace file {path} must have header {','.join(_TRACE_COLUMNS)}")
        for row in reader:
            try:
                n = int(row["instance_id"])
                veh = Vehicle(
                    id=int(row["vehicle_id"]),
                    position=(float(row["x0_m"]), float(row["y0_m"]), vehicle_z_m),
                    speed_mps=float(row["speed_mps"]),
                    direction=int(row["direction"]),
                    task=TaskSpec(float(row["data_bits"]), float(row["flops"]),
                                  float(row["deadline_s"])),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"malformed trace row {row}: {exc}") from exc
            out.setdefault(n, []).append(veh)
    return out


def write_trace(instances: list[Instance], path: str) -> None:
    """Write instances in the trace table format (round-trips via load_trace)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_COLUMNS)
        for inst in instances:
            for v in inst.vehicles:
                writer.writerow([
                    inst.index, v.id,
                    format(v.position[0], ".10g"), format(v.position[1], ".10g"),
                    format(v.speed_mps, ".10g"), v.direction,
                    format(v.task.data_bits, ".10g"), format(v.task.flops_total, ".10g"),
                    format(v.task.deadline_s, ".10g"),
                ])
