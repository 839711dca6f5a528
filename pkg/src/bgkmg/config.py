"""Run configuration: presets plus explicit overrides from flags or a file."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .presets import PRESETS, Preset

SCHEMES = ("full_stable", "full_naive", "dlra_2r", "dlra_4r")

# keys accepted in config files; they mirror the CLI flags
_CONFIG_KEYS = ("preset", "scheme", "nx", "nv", "sigma", "cfl", "tend",
                "theta", "rmax", "out", "seed", "snapshots")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    preset: str
    scheme: str
    n_x: int                      # per axis
    n_v: int                      # per axis
    dim: int
    domain: tuple[tuple[float, float], ...]
    sigma: float
    cfl: float
    round_up_vcap: bool
    t_end: float
    r0: int
    theta_coeff: float
    r_max: int
    snapshot_times: tuple[float, ...]
    output_dir: str
    seed: int

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.n_x < 3 or self.n_v < 1:
            raise ConfigError(f"grid sizes must be positive (nx >= 3), got nx={self.n_x} nv={self.n_v}")
        if self.cfl <= 0:
            raise ConfigError(f"cfl must be positive, got {self.cfl}")
        if self.cfl > 1.0 and self.scheme != "full_naive":
            raise ConfigError(
                f"cfl = {self.cfl} violates the stability bound cfl <= 1 "
                f"(v_cap * dt <= dx) required by scheme {self.scheme!r}"
            )
        if self.t_end <= 0:
            raise ConfigError(f"tend must be positive, got {self.t_end}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.r0 < 1 or self.r_max < 2 or self.theta_coeff < 0:
            raise ConfigError("need r0 >= 1, rmax >= 2 and theta >= 0")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.t_end:
                raise ConfigError(f"snapshot time {t} outside [0, tend={self.t_end}]")


def _parse_snapshots(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"snapshots must be comma-separated reals, got {text!r}") from exc


def read_config_file(path: str | Path) -> dict:
    """Flat key = value text; one pair per line, '#' starts a comment."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} (known: {', '.join(_CONFIG_KEYS)})")
        raw[key] = value
    return raw


def load_config(file: str | Path | None = None, **overrides) -> RunConfig:
    """Resolve a RunConfig from an optional config file plus explicit overrides.

    Override keys use the flag names (nx, nv, tend, theta, rmax, out, ...);
    explicit overrides win over file values, which win over preset defaults.
    Unknown keys are rejected.
    """
    raw: dict = {}
    if file is not None:
        raw.update(read_config_file(file))
    for key, value in overrides.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r} (known: {', '.join(_CONFIG_KEYS)})")
        if value is not None:
            raw[key] = value

    preset_name = str(raw.get("preset", "custom"))
    if preset_name not in PRESETS:
        raise ConfigError(f"unknown preset {preset_name!r} (known: {', '.join(PRESETS)})")
    preset: Preset = PRESETS[preset_name]

    def _get(key, cast, default):
        if key in raw:
            try:
                return cast(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw[key]!r}") from exc
        return default

    snapshots = raw.get("snapshots")
    if isinstance(snapshots, str):
        snapshot_times = _parse_snapshots(snapshots)
    elif snapshots is not None:
        snapshot_times = tuple(float(t) for t in snapshots)
    else:
        snapshot_times = preset.snapshot_times

    config = RunConfig(
        preset=preset_name,
        scheme=str(raw.get("scheme", "dlra_2r")),
        n_x=_get("nx", int, preset.n_x),
        n_v=_get("nv", int, preset.n_v),
        dim=preset.dim,
        domain=preset.domain,
        sigma=_get("sigma", float, preset.sigma),
        cfl=_get("cfl", float, preset.cfl),
        round_up_vcap=preset.round_up_vcap,
        t_end=_get("tend", float, preset.t_end),
        r0=preset.r0,
        theta_coeff=_get("theta", float, preset.theta_coeff),
        r_max=_get("rmax", int, preset.r_max),
        snapshot_times=snapshot_times,
        output_dir=str(raw.get("out", "runs/latest")),
        seed=_get("seed", int, 0),
    )
    config.validate()
    return config
