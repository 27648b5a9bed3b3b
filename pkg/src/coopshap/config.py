"""Experiment configuration: a single YAML file per experiment.

The schema mirrors the layering of the package: an ``environment`` block,
an ``agents`` roster, an ``attribution`` block, and a few top-level
scalars. Unknown keys are rejected by name, and every validation error
carries the dotted path of the offending key.

The canonical payload (:meth:`ExperimentConfig.canonical`) resolves all
defaults and deliberately omits execution details that cannot change
results (worker count, output directory), so machine-readable outputs
stay byte-identical across those settings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .attribution import RolloutGame
from .envs import Circle, HarvestConfig, PredatorPreyConfig, ROLE_PREDATOR, ROLE_PREY
from .errors import ConfigError
from .policies import ExclusionMode, PolicyKind, PolicySpec

_ENV_KINDS = ("predator_prey", "harvest")

_PP_PARAM_KEYS = {
    "episode_length",
    "step_scale",
    "catch_radius",
    "catch_reward",
    "boundary_penalty",
    "obstacle_penalty",
    "escape_reward",
    "obstacles",
    "spawn_margin",
    "min_start_separation",
}
_HARVEST_PARAM_KEYS = {"episode_length", "map_file", "regrowth_probabilities"}

_PP_AGENT_KINDS = {PolicyKind.PURSUIT, PolicyKind.EVADER, PolicyKind.LAZY}
_HARVEST_AGENT_KINDS = {PolicyKind.HARVESTER, PolicyKind.LAZY}


@dataclass(frozen=True)
class AgentEntry:
    spec: PolicySpec
    fixed: bool = False


@dataclass(frozen=True)
class AttributionSettings:
    exclusion_modes: tuple[ExclusionMode, ...] = (ExclusionMode.NOOP,)
    M: int = 1000
    samples_per_coalition: int = 200
    grand_episodes: int = 100


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    env_kind: str
    env_params: dict
    agents: tuple[AgentEntry, ...]
    attribution: AttributionSettings = AttributionSettings()
    metrics_episodes: int = 50
    seed: int = 0
    workers: int = 1
    output_dir: str | None = None

    @property
    def roster(self) -> tuple[PolicySpec, ...]:
        return tuple(a.spec for a in self.agents)

    @property
    def scope(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.agents) if not a.fixed)

    @property
    def fixed(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.agents) if a.fixed)

    @property
    def env_config(self):
        if self.env_kind == "predator_prey":
            roles = tuple(
                ROLE_PREY if a.spec.kind is PolicyKind.EVADER else ROLE_PREDATOR
                for a in self.agents
            )
            speeds = tuple(a.spec.speed for a in self.agents)
            return PredatorPreyConfig(roles=roles, speeds=speeds, **self.env_params)
        return HarvestConfig(n_agents=len(self.agents), **self.env_params)

    def rollout_game(self, mode: ExclusionMode) -> RolloutGame:
        return RolloutGame(
            env_config=self.env_config,
            roster=self.roster,
            exclusion=mode,
            scope=self.scope,
            fixed=self.fixed,
        )

    def with_agent(self, index: int, spec: PolicySpec) -> "ExperimentConfig":
        """Copy of this config with one agent's policy spec swapped."""
        if not 0 <= index < len(self.agents):
            raise ConfigError(f"agent index {index} outside the roster")
        agents = list(self.agents)
        agents[index] = AgentEntry(spec=spec, fixed=agents[index].fixed)
        return ExperimentConfig(
            env_kind=self.env_kind,
            env_params=self.env_params,
            agents=tuple(agents),
            attribution=self.attribution,
            metrics_episodes=self.metrics_episodes,
            seed=self.seed,
            workers=self.workers,
            output_dir=self.output_dir,
        )

    def replace(self, **kwargs) -> "ExperimentConfig":
        data = {
            "env_kind": self.env_kind,
            "env_params": self.env_params,
            "agents": self.agents,
            "attribution": self.attribution,
            "metrics_episodes": self.metrics_episodes,
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }
        data.update(kwargs)
        return ExperimentConfig(**data)

    def canonical(self) -> dict:
        """Fully resolved, result-relevant view of this configuration."""
        env = self.env_config
        env_payload = {"kind": self.env_kind}
        for name in sorted(env.__dataclass_fields__):
            value = getattr(env, name)
            if isinstance(value, tuple) and value and isinstance(value[0], Circle):
                value = [
                    {"x": c.x, "y": c.y, "radius": c.radius} for c in value
                ]
            elif isinstance(value, tuple):
                value = list(value)
            env_payload[name] = value
        return {
            "environment": env_payload,
            "agents": [
                {
                    "index": i,
                    "kind": a.spec.kind.value,
                    "skill": a.spec.skill,
                    "speed": a.spec.speed,
                    "fixed": a.fixed,
                }
                for i, a in enumerate(self.agents)
            ],
            "attribution": {
                "exclusion_modes": [m.value for m in self.attribution.exclusion_modes],
                "M": self.attribution.M,
                "samples_per_coalition": self.attribution.samples_per_coalition,
                "grand_episodes": self.attribution.grand_episodes,
            },
            "metrics_episodes": self.metrics_episodes,
            "seed": self.seed,
        }


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(d: dict, allowed, path: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _parse_environment(raw, base_dir: Path) -> tuple[str, dict]:
    env = _require_mapping(raw, "environment")
    kind = env.get("kind")
    if kind not in _ENV_KINDS:
        raise ConfigError(
            f"environment.kind: expected one of {list(_ENV_KINDS)}, got {kind!r}"
        )
    allowed = (_PP_PARAM_KEYS if kind == "predator_prey" else _HARVEST_PARAM_KEYS) | {
        "kind"
    }
    _reject_unknown(env, allowed, "environment")

    params: dict = {}
    for key, value in env.items():
        if key == "kind":
            continue
        path = f"environment.{key}"
        if key == "episode_length":
            params[key] = _as_int(value, path, minimum=1)
        elif key == "obstacles":
            if not isinstance(value, list):
                raise ConfigError(f"{path}: expected a list of circles")
            circles = []
            for j, item in enumerate(value):
                item = _require_mapping(item, f"{path}[{j}]")
                _reject_unknown(item, {"x", "y", "radius"}, f"{path}[{j}]")
                try:
                    circles.append(
                        Circle(
                            x=_as_number(item["x"], f"{path}[{j}].x"),
                            y=_as_number(item["y"], f"{path}[{j}].y"),
                            radius=_as_number(item["radius"], f"{path}[{j}].radius"),
                        )
                    )
                except KeyError as exc:
                    raise ConfigError(f"{path}[{j}]: missing key {exc.args[0]}") from None
            params[key] = tuple(circles)
        elif key == "map_file":
            map_path = Path(value)
            if not map_path.is_absolute():
                map_path = base_dir / map_path
            if not map_path.exists():
                raise ConfigError(f"{path}: map file not found: {map_path}")
            params["map_text"] = map_path.read_text()
        elif key == "regrowth_probabilities":
            if not isinstance(value, list) or len(value) != 6:
                raise ConfigError(f"{path}: expected a list of 6 probabilities")
            params[key] = tuple(_as_number(v, f"{path}[{j}]") for j, v in enumerate(value))
        else:
            params[key] = _as_number(value, path)
    return kind, params


def _parse_agents(raw, env_kind: str) -> tuple[AgentEntry, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("agents: expected a non-empty list")
    allowed_kinds = _PP_AGENT_KINDS if env_kind == "predator_prey" else _HARVEST_AGENT_KINDS
    entries = []
    for i, item in enumerate(raw):
        path = f"agents[{i}]"
        item = _require_mapping(item, path)
        _reject_unknown(item, {"kind", "skill", "speed", "fixed"}, path)
        try:
            kind = PolicyKind(item.get("kind"))
        except ValueError:
            raise ConfigError(
                f"{path}.kind: expected one of "
                f"{sorted(k.value for k in PolicyKind)}, got {item.get('kind')!r}"
            ) from None
        if kind not in allowed_kinds:
            raise ConfigError(
                f"{path}.kind: {kind.value!r} is not usable in a {env_kind} experiment"
            )
        skill = _as_number(item.get("skill", 1.0), f"{path}.skill")
        speed = _as_number(item.get("speed", 1.0), f"{path}.speed")
        fixed = item.get("fixed", False)
        if not isinstance(fixed, bool):
            raise ConfigError(f"{path}.fixed: expected a boolean")
        try:
            spec = PolicySpec(kind=kind, skill=skill, speed=speed)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        entries.append(AgentEntry(spec=spec, fixed=fixed))
    if all(e.fixed for e in entries):
        raise ConfigError("agents: at least one agent must not be fixed")
    return tuple(entries)


def _parse_attribution(raw) -> AttributionSettings:
    if raw is None:
        return AttributionSettings()
    d = _require_mapping(raw, "attribution")
    _reject_unknown(
        d,
        {"exclusion_modes", "M", "samples_per_coalition", "grand_episodes"},
        "attribution",
    )
    modes_raw = d.get("exclusion_modes", ["noop"])
    if not isinstance(modes_raw, list) or not modes_raw:
        raise ConfigError("attribution.exclusion_modes: expected a non-empty list")
    modes = []
    for j, m in enumerate(modes_raw):
        try:
            mode = ExclusionMode(m)
        except ValueError:
            raise ConfigError(
                f"attribution.exclusion_modes[{j}]: expected one of "
                f"{sorted(x.value for x in ExclusionMode)}, got {m!r}"
            ) from None
        if mode in modes:
            raise ConfigError(f"attribution.exclusion_modes[{j}]: duplicate mode {m!r}")
        modes.append(mode)
    return AttributionSettings(
        exclusion_modes=tuple(modes),
        M=_as_int(d.get("M", 1000), "attribution.M", minimum=1),
        samples_per_coalition=_as_int(
            d.get("samples_per_coalition", 200),
            "attribution.samples_per_coalition",
            minimum=1,
        ),
        grand_episodes=_as_int(
            d.get("grand_episodes", 100), "attribution.grand_episodes", minimum=1
        ),
    )


_TOP_KEYS = {
    "environment",
    "agents",
    "attribution",
    "metrics",
    "seed",
    "workers",
    "output_dir",
}


def parse_config(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    raw = _require_mapping(raw, "config")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if "environment" not in raw:
        raise ConfigError("config.environment: missing required section")
    if "agents" not in raw:
        raise ConfigError("config.agents: missing required section")
    env_kind, env_params = _parse_environment(raw["environment"], Path(base_dir))
    agents = _parse_agents(raw["agents"], env_kind)

    metrics_episodes = 50
    if "metrics" in raw and raw["metrics"] is not None:
        m = _require_mapping(raw["metrics"], "metrics")
        _reject_unknown(m, {"episodes"}, "metrics")
        metrics_episodes = _as_int(m.get("episodes", 50), "metrics.episodes", minimum=1)

    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("config.output_dir: expected a string path")

    config = ExperimentConfig(
        env_kind=env_kind,
        env_params=env_params,
        agents=agents,
        attribution=_parse_attribution(raw.get("attribution")),
        metrics_episodes=metrics_episodes,
        seed=_as_int(raw.get("seed", 0), "config.seed", minimum=0),
        workers=_as_int(raw.get("workers", 1), "config.workers", minimum=1),
        output_dir=output_dir,
    )
    # surface cross-field env/roster problems (speeds, roles, map capacity)
    try:
        config.env_config
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"environment: {exc}") from None
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if raw is None:
        raise ConfigError(f"{path}: config file is empty")
    return parse_config(raw, base_dir=path.parent)
