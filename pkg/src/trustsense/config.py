"""Experiment configuration: flat key = value files.

One line per key, ``#`` comments, no sections. Unknown keys are errors
so typos cannot silently fall back to defaults, and the effective
config (defaults applied) is echoed into each output directory.
Defaults reproduce the reference experiment scale: a 240-minute run at
5-minute steps with 2000 users (800 honest at 1% slip, 1200 corruption
attackers at 80%) and 400 MTPs on a 20x20 grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from trustsense import mobility, traces
from trustsense.agents import Behavior, Collusion, Corruption, Honest, OnOff
from trustsense.grid import BoundingBox, SectorGrid
from trustsense.sim import AdaptiveConfig, ConfigError, SimConfig, TraceMobility

Value = Union[int, float, bool, str]

# key -> (type, default)
SCHEMA: dict[str, tuple[type, Value]] = {
    "grid_rows": (int, 20),
    "grid_cols": (int, 20),
    "lat_min": (float, 0.0),
    "lat_max": (float, 1.0),
    "lon_min": (float, 0.0),
    "lon_max": (float, 1.0),
    "duration_min": (int, 240),
    "timestep_min": (int, 5),
    "validation_window_min": (int, 5),
    "categories": (int, 2),
    "anomaly_p": (float, 0.5),
    "truth_change_p": (float, 0.0),
    "classifier": (str, "first"),
    "seed": (int, 1),
    "replications": (int, 1),
    "mobility_source": (str, "uniform"),  # uniform | csv | raster | traces
    "mobility_csv": (str, ""),
    "raster_path": (str, ""),
    "black_threshold": (int, mobility.DEFAULT_BLACK_THRESHOLD),
    "traces_csv": (str, ""),
    "mtps": (int, 400),
    "mtp_placement": (str, "distribution"),
    "honest_users": (int, 800),
    "honest_pf": (float, 0.01),
    "corruption_attackers": (int, 1200),
    "corruption_p": (float, 0.8),
    "onoff_attackers": (int, 0),
    "onoff_steps_on": (int, 10),
    "onoff_steps_off": (int, 10),
    "collusion_attackers": (int, 0),
    "collusion_groups": (int, 3),
    "collusion_target_sector": (int, -1),  # -1: auto, g-th most likely sector per group
    "collusion_steps_on": (int, 10),
    "collusion_steps_off": (int, 10),
    "adaptive_enabled": (bool, False),
    "estimate_interval_min": (int, 5),
    "adaptive_eps_max": (float, 0.1),
    "adaptive_m_max": (int, 0),  # 0: use the configured mtps count
}


def _parse_value(key: str, raw: str) -> Value:
    typ = SCHEMA[key][0]
    raw = raw.strip()
    if typ is str:
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
            return raw[1:-1]
        return raw
    if typ is bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ConfigError(f"key {key}: expected true/false, got {raw!r}")
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"key {key}: expected {typ.__name__}, got {raw!r}") from None


def parse_config_text(text: str) -> dict[str, Value]:
    """Parse ``key = value`` lines; unknown or duplicate keys are errors."""
    out: dict[str, Value] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"line {line_no}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"line {line_no}: duplicate config key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def load_config_file(path: str) -> dict[str, Value]:
    with open(path) as fh:
        return parse_config_text(fh.read())


def effective_config(overrides: dict[str, Value]) -> dict[str, Value]:
    """Defaults with ``overrides`` applied; rejects unknown keys."""
    for key in overrides:
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
    return {key: overrides.get(key, default) for key, (_, default) in SCHEMA.items()}


def write_config(cfg: dict[str, Value], fh: IO[str]) -> None:
    for key in SCHEMA:
        value = cfg[key]
        if isinstance(value, bool):
            value = "true" if value else "false"
        fh.write(f"{key} = {value}\n")


@dataclass
class Experiment:
    """Everything the CLI needs to run one experiment."""

    sim: SimConfig
    effective: dict[str, Value]
    replications: int


def _auto_collusion_targets(dist: mobility.MobilityDistribution, n_groups: int) -> list[int]:
    # Most-likely sectors first: attackers spoof to where presence is
    # plausible; ties resolved by sector index for determinism.
    order = np.lexsort((np.arange(len(dist)), -dist.probs))
    return [int(order[g % len(dist)]) for g in range(n_groups)]


def build_experiment(overrides: dict[str, Value]) -> Experiment:
    cfg = effective_config(overrides)
    grid = SectorGrid(
        rows=cfg["grid_rows"],
        cols=cfg["grid_cols"],
        bounds=BoundingBox(cfg["lat_min"], cfg["lat_max"], cfg["lon_min"], cfg["lon_max"]),
    )

    source = cfg["mobility_source"]
    analysis_dist = None
    mob: Union[mobility.MobilityDistribution, TraceMobility]
    if source == "uniform":
        mob = mobility.MobilityDistribution.uniform(grid.n)
    elif source == "csv":
        if not cfg["mobility_csv"]:
            raise ConfigError("mobility_source=csv requires mobility_csv")
        with open(cfg["mobility_csv"]) as fh:
            mob = mobility.read_distribution_csv(fh)
    elif source == "raster":
        if not cfg["raster_path"]:
            raise ConfigError("mobility_source=raster requires raster_path")
        raster = mobility.read_pgm(cfg["raster_path"])
        mob = mobility.lea(raster, grid, cfg["black_threshold"])
    elif source == "traces":
        if not cfg["traces_csv"]:
            raise ConfigError("mobility_source=traces requires traces_csv")
        trace_set = traces.ingest(cfg["traces_csv"], grid)
        seqs = traces.discretize(trace_set, grid, cfg["timestep_min"])
        usable = []
        for agent_id in sorted(seqs):
            seq = seqs[agent_id]
            seq = seq[seq >= 0]  # drop leading windows before the first fix
            if len(seq):
                usable.append(seq)
        if not usable:
            raise ConfigError(f"{cfg['traces_csv']}: no usable trace sequences")
        mob = TraceMobility(sequences=tuple(usable))
        analysis_dist = mobility.empirical_distribution(trace_set.all_points(), grid)
    else:
        raise ConfigError(f"unknown mobility_source {source!r}")

    dist_for_targets = analysis_dist if analysis_dist is not None else (
        mob if isinstance(mob, mobility.MobilityDistribution) else mobility.MobilityDistribution.uniform(grid.n)
    )

    users: list[tuple[int, Behavior]] = []
    if cfg["honest_users"]:
        users.append((cfg["honest_users"], Honest(p_false=cfg["honest_pf"])))
    if cfg["corruption_attackers"]:
        users.append((cfg["corruption_attackers"], Corruption(p_false=cfg["corruption_p"])))
    if cfg["onoff_attackers"]:
        users.append((
            cfg["onoff_attackers"],
            OnOff(n_truthful=cfg["onoff_steps_on"], n_false=cfg["onoff_steps_off"]),
        ))
    if cfg["collusion_attackers"]:
        n_groups = cfg["collusion_groups"]
        if n_groups < 1:
            raise ConfigError("collusion_groups must be positive when colluders are present")
        if cfg["collusion_target_sector"] >= 0:
            targets = [cfg["collusion_target_sector"]] * n_groups
        else:
            targets = _auto_collusion_targets(dist_for_targets, n_groups)
        base, extra = divmod(cfg["collusion_attackers"], n_groups)
        for g in range(n_groups):
            size = base + (1 if g < extra else 0)
            if size == 0:
                continue
            users.append((size, Collusion(
                group=g,
                target_sector=targets[g],
                n_attack=cfg["collusion_steps_on"],
                n_off=cfg["collusion_steps_off"],
                p_false_off=cfg["honest_pf"],
            )))

    adaptive = None
    if cfg["adaptive_enabled"]:
        adaptive = AdaptiveConfig(
            estimate_interval_min=cfg["estimate_interval_min"],
            eps_max=cfg["adaptive_eps_max"],
            m_max=cfg["adaptive_m_max"] or cfg["mtps"],
        )

    sim_config = SimConfig(
        grid=grid,
        duration_min=cfg["duration_min"],
        timestep_min=cfg["timestep_min"],
        validation_window_min=cfg["validation_window_min"],
        mtps=cfg["mtps"],
        users=tuple(users),
        mobility=mob,
        mtp_placement=cfg["mtp_placement"],
        classifier=cfg["classifier"],
        categories=cfg["categories"],
        anomaly_p=cfg["anomaly_p"],
        truth_change_p=cfg["truth_change_p"],
        seed=cfg["seed"],
        adaptive=adaptive,
        analysis_dist=analysis_dist,
    )
    sim_config.validate()
    if cfg["replications"] < 1:
        raise ConfigError("replications must be at least 1")
    return Experiment(sim=sim_config, effective=cfg, replications=cfg["replications"])
