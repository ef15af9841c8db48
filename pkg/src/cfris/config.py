"""Scenario configuration: JSON schema, validation, defaults, and hashing.

dB/dBm quantities are converted to linear scale once at parse time; all
solver math is linear-scale.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import LinkKind, LinkSpec
from .errors import ConfigError
from .scattering import Architecture

_REQUIRED_KEYS = {"aps", "ap_antennas", "users", "user_antennas", "surfaces"}
_OPTIONAL_KEYS = {
    "p_max_dbm",
    "per_ap_power_dbm",
    "noise_dbm",
    "carrier_ghz",
    "distances_m",
    "rician_db",
    "include_direct",
    "trials",
    "master_seed",
    "fp_tol",
    "fp_max_iters",
    "ascent_max_iters",
    "outer_alternations",
    "baselines",
}
_DISTANCE_KEYS = {"surface_to_user", "ap_to_surface", "ap_to_user"}
_RICIAN_KEYS = {"ap_to_surface", "surface_to_user"}
_BASELINES = ("mmse", "pa")


def dbm_to_watt(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


@dataclass(frozen=True)
class SurfaceSpec:
    elements: int
    architecture: str  # 'sc', 'fc', or 'gcN'

    def arch(self) -> Architecture:
        return Architecture.from_label(self.architecture, self.elements)


@dataclass(frozen=True)
class ScenarioConfig:
    aps: int
    ap_antennas: int
    users: int
    user_antennas: int
    surfaces: tuple
    p_max_dbm: float = 16.0
    per_ap_power_dbm: tuple | None = None
    noise_dbm: float = -80.0
    carrier_ghz: float = 2.4
    dist_surface_to_user: float = 2.5
    dist_ap_to_surface: float = 50.0
    dist_ap_to_user: float = 51.0
    rician_ap_to_surface_db: float = 9.0
    rician_surface_to_user_db: float = 9.0
    include_direct: bool = True
    trials: int = 50
    master_seed: int = 1
    fp_tol: float = 1e-4
    fp_max_iters: int = 100
    ascent_max_iters: int = 50
    outer_alternations: int = 10
    baselines: tuple = ("mmse", "pa")

    def __post_init__(self):
        for name in ("aps", "ap_antennas", "users", "user_antennas", "trials"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not np.isfinite(self.p_max_dbm):
            raise ConfigError("p_max_dbm must be finite")
        for s in self.surfaces:
            s.arch()  # validates divisibility
        if self.per_ap_power_dbm is not None and len(self.per_ap_power_dbm) != self.aps:
            raise ConfigError(
                f"per_ap_power_dbm needs {self.aps} entries, got {len(self.per_ap_power_dbm)}"
            )

    # ---- derived linear-scale quantities ----

    @property
    def p_max_w(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def p_ap_w(self) -> np.ndarray:
        if self.per_ap_power_dbm is not None:
            return np.array([dbm_to_watt(p) for p in self.per_ap_power_dbm])
        # default equal split P_l = P_max / L
        return np.full(self.aps, self.p_max_w / self.aps)

    @property
    def n0_w(self) -> float:
        return dbm_to_watt(self.noise_dbm)

    def links(self) -> dict:
        return {
            LinkKind.AP_TO_SURFACE: LinkSpec(
                LinkKind.AP_TO_SURFACE,
                self.dist_ap_to_surface,
                self.rician_ap_to_surface_db,
                self.carrier_ghz,
            ),
            LinkKind.SURFACE_TO_USER: LinkSpec(
                LinkKind.SURFACE_TO_USER,
                self.dist_surface_to_user,
                self.rician_surface_to_user_db,
                self.carrier_ghz,
            ),
            LinkKind.AP_TO_USER: LinkSpec(
                LinkKind.AP_TO_USER, self.dist_ap_to_user, None, self.carrier_ghz
            ),
        }

    def with_architecture(self, label: str) -> "ScenarioConfig":
        return replace(
            self,
            surfaces=tuple(SurfaceSpec(s.elements, label) for s in self.surfaces),
        )

    def with_p_max(self, p_max_dbm: float) -> "ScenarioConfig":
        return replace(self, p_max_dbm=p_max_dbm, per_ap_power_dbm=None)


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _REQUIRED_KEYS - _OPTIONAL_KEYS
    _expect(not unknown, "/", f"unknown keys {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(raw)
    _expect(not missing, "/", f"missing required keys {sorted(missing)}")

    surfaces = raw["surfaces"]
    _expect(isinstance(surfaces, list), "surfaces", "must be a list")
    specs = []
    for i, s in enumerate(surfaces):
        _expect(isinstance(s, dict), f"surfaces[{i}]", "must be an object")
        extra = set(s) - {"elements", "architecture"}
        _expect(not extra, f"surfaces[{i}]", f"unknown keys {sorted(extra)}")
        _expect("elements" in s, f"surfaces[{i}]", "missing 'elements'")
        specs.append(SurfaceSpec(int(s["elements"]), str(s.get("architecture", "sc"))))

    kwargs = {}
    if "distances_m" in raw:
        d = raw["distances_m"]
        extra = set(d) - _DISTANCE_KEYS
        _expect(not extra, "distances_m", f"unknown keys {sorted(extra)}")
        if "surface_to_user" in d:
            kwargs["dist_surface_to_user"] = float(d["surface_to_user"])
        if "ap_to_surface" in d:
            kwargs["dist_ap_to_surface"] = float(d["ap_to_surface"])
        if "ap_to_user" in d:
            kwargs["dist_ap_to_user"] = float(d["ap_to_user"])
    if "rician_db" in raw:
        r = raw["rician_db"]
        extra = set(r) - _RICIAN_KEYS
        _expect(not extra, "rician_db", f"unknown keys {sorted(extra)}")
        if "ap_to_surface" in r:
            kwargs["rician_ap_to_surface_db"] = float(r["ap_to_surface"])
        if "surface_to_user" in r:
            kwargs["rician_surface_to_user_db"] = float(r["surface_to_user"])
    if "baselines" in raw:
        bl = tuple(raw["baselines"])
        for b in bl:
            _expect(b in _BASELINES, "baselines", f"unknown baseline {b!r}")
        kwargs["baselines"] = bl
    if "per_ap_power_dbm" in raw and raw["per_ap_power_dbm"] is not None:
        kwargs["per_ap_power_dbm"] = tuple(float(p) for p in raw["per_ap_power_dbm"])

    simple = {
        "p_max_dbm": float,
        "noise_dbm": float,
        "carrier_ghz": float,
        "include_direct": bool,
        "trials": int,
        "master_seed": int,
        "fp_tol": float,
        "fp_max_iters": int,
        "ascent_max_iters": int,
        "outer_alternations": int,
    }
    for key, cast in simple.items():
        if key in raw:
            kwargs[key] = cast(raw[key])

    return ScenarioConfig(
        aps=int(raw["aps"]),
        ap_antennas=int(raw["ap_antennas"]),
        users=int(raw["users"]),
        user_antennas=int(raw["user_antennas"]),
        surfaces=tuple(specs),
        **kwargs,
    )


def parse_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "aps": cfg.aps,
        "ap_antennas": cfg.ap_antennas,
        "users": cfg.users,
        "user_antennas": cfg.user_antennas,
        "surfaces": [
            {"elements": s.elements, "architecture": s.architecture} for s in cfg.surfaces
        ],
        "p_max_dbm": cfg.p_max_dbm,
        "per_ap_power_dbm": list(cfg.per_ap_power_dbm) if cfg.per_ap_power_dbm else None,
        "noise_dbm": cfg.noise_dbm,
        "carrier_ghz": cfg.carrier_ghz,
        "distances_m": {
            "surface_to_user": cfg.dist_surface_to_user,
            "ap_to_surface": cfg.dist_ap_to_surface,
            "ap_to_user": cfg.dist_ap_to_user,
        },
        "rician_db": {
            "ap_to_surface": cfg.rician_ap_to_surface_db,
            "surface_to_user": cfg.rician_surface_to_user_db,
        },
        "include_direct": cfg.include_direct,
        "trials": cfg.trials,
        "master_seed": cfg.master_seed,
        "fp_tol": cfg.fp_tol,
        "fp_max_iters": cfg.fp_max_iters,
        "ascent_max_iters": cfg.ascent_max_iters,
        "outer_alternations": cfg.outer_alternations,
        "baselines": list(cfg.baselines),
    }


def serialize_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def config_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
