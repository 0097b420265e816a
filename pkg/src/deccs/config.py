"""JSON run configuration.

A run config names a dataset (generator or CSV file), the autoencoder
architecture and pretraining schedule, the ensemble, the DECCS settings and
the seeds. Unknown keys anywhere are rejected so typos fail loudly.
"""
from __future__ import annotations

import inspect
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .algorithm import DeccsConfig
from .data import GENERATORS
from .ensemble import EnsembleSpec, MemberSpec, default_ensemble


class ConfigError(ValueError):
    pass


def _build(cls, blob, where: str):
    if not isinstance(blob, dict):
        raise ConfigError(f"{where}: expected an object, got {type(blob).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(blob) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**blob)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class DatasetConfig:
    generator: str | None = "synth"
    params: dict = field(default_factory=dict)
    path: str | None = None
    has_labels: bool = True
    z_score: bool = True

    def __post_init__(self):
        if (self.generator is None) == (self.path is None):
            raise ValueError("give exactly one of generator or path")
        if self.generator is not None:
            if self.generator not in GENERATORS:
                raise ValueError(f"unknown generator {self.generator!r}; choose from {sorted(GENERATORS)}")
            accepted = set(inspect.signature(GENERATORS[self.generator]).parameters)
            bad = sorted(set(self.params) - accepted)
            if bad:
                raise ValueError(f"generator {self.generator!r} has no parameters {bad}")


@dataclass
class AutoencoderConfig:
    hidden: list[int] = field(default_factory=lambda: [20, 20])
    embedding_dim: int = 2
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 300
    patience: int = 20
    checkpoint: str | None = None

    def __post_init__(self):
        self.hidden = [int(h) for h in self.hidden]
        if any(h < 1 for h in self.hidden) or self.embedding_dim < 1:
            raise ValueError("layer widths must be positive")

    def sizes(self, input_dim: int) -> list[int]:
        return [input_dim, *self.hidden, self.embedding_dim]


@dataclass
class EnsembleConfig:
    """Either the default four members with a shared ``k`` or an explicit member list."""

    k: int | None = None
    linkage: str = "single"
    n_neighbors: int = 10
    members: list[dict] | None = None

    def build(self, k_default: int | None) -> EnsembleSpec:
        if self.members is not None:
            specs = []
            for i, m in enumerate(self.members):
                spec = _build(MemberSpec, m, f"ensemble.members[{i}]")
                specs.append(spec)
            return EnsembleSpec(tuple(specs))
        k = self.k if self.k is not None else k_default
        if k is None:
            raise ConfigError("ensemble.k is required when the data has no labels")
        return default_ensemble(k, linkage=self.linkage, n_neighbors=self.n_neighbors)


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    autoencoder: AutoencoderConfig = field(default_factory=AutoencoderConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    deccs: DeccsConfig = field(default_factory=DeccsConfig)
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str = "runs/default"
    plot: bool = True

    def __post_init__(self):
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise ValueError("need at least one seed")

    @classmethod
    def from_dict(cls, blob: dict) -> "RunConfig":
        if not isinstance(blob, dict):
            raise ConfigError("config root must be an object")
        blob = dict(blob)
        sections = {
            "dataset": DatasetConfig,
            "autoencoder": AutoencoderConfig,
            "ensemble": EnsembleConfig,
            "deccs": DeccsConfig,
        }
        for key, sub in sections.items():
            if key in blob:
                blob[key] = _build(sub, blob[key], key)
        return _build(cls, blob, "config")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            blob = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(blob)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def merge(blob: dict, overrides: dict) -> dict:
    """Recursively overlay ``overrides`` on ``blob`` (returns a new dict)."""
    out = dict(blob)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out
