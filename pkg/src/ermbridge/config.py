"""Flat dotted-key experiment configuration.

A config file is a list of ``section.key = value`` lines; ``#`` starts a
comment. The ``experiment`` key picks a recipe whose defaults fill every key
that is not given.

    experiment = GaussGridShift
    train.lr = 5e-4
    sample.boxes = 1, 2, 5
"""

import dataclasses
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import List

from .errors import ConfigError


class Experiment(str, Enum):
    SWISS_ROLL = "SwissRollToSCurve"
    GAUSS_GRID = "GaussGridShift"
    CUSTOM = "CustomData"


@dataclass
class DataSection:
    n_train: int = 2000
    n_test: int = 2000
    noise: float = 0.05
    grid_side: int = 5
    grid_spacing: float = 4.0
    grid_std: float = 1.0
    train_box: float = 10.0
    x_path: str = ""
    y_path: str = ""


@dataclass
class KernelSection:
    horizon: float = 1.0
    sigma_end: float = 0.5
    # 0 means sigma_end^2 * horizon, the variance of the constant-noise reference process
    variance: float = 0.0


@dataclass
class TrainSection:
    batch_size: int = 1000
    lr: float = 2e-3
    epochs: int = 1500
    loss_scale: float = 1.0
    optimizer: str = "adam"
    potential: str = "mlp"
    hidden: int = 64
    degree: int = 12


@dataclass
class SampleSection:
    steps: int = 100
    schedule: str = "constant"
    snapshots: List[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    boxes: List[float] = field(default_factory=list)
    n_ref: int = 0


@dataclass
class MetricsSection:
    n_projections: int = 100
    seed: int = 0


@dataclass
class ExperimentConfig:
    experiment: Experiment = Experiment.SWISS_ROLL
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    out: str = "runs/out"
    data: DataSection = field(default_factory=DataSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    train: TrainSection = field(default_factory=TrainSection)
    sample: SampleSection = field(default_factory=SampleSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)

    @property
    def kernel_variance(self) -> float:
        k = self.kernel
        return k.variance if k.variance > 0 else k.sigma_end ** 2 * k.horizon


SECTIONS = ("data", "kernel", "train", "sample", "metrics")


def recipe(experiment) -> ExperimentConfig:
    """Default configuration of a named experiment."""
    exp = Experiment(experiment)
    cfg = ExperimentConfig(experiment=exp)
    if exp is Experiment.GAUSS_GRID:
        cfg.data = DataSection(n_train=3000, n_test=2000, noise=0.0)
        cfg.kernel = KernelSection(horizon=12.0, sigma_end=0.9)
        cfg.train = TrainSection(batch_size=64, lr=5e-4, epochs=140, loss_scale=0.11, hidden=128)
        cfg.sample = SampleSection(snapshots=[0.0, 0.25, 0.5, 0.75, 1.0], boxes=[1.0, 2.0, 5.0])
    elif exp is Experiment.CUSTOM:
        cfg.data = DataSection(n_train=2100, n_test=500, noise=0.0)
        cfg.kernel = KernelSection(horizon=1.0, sigma_end=0.4216)
        cfg.train = TrainSection(batch_size=2048, lr=1e-4, epochs=141, loss_scale=196.5431,
                                 hidden=2048)
        cfg.sample = SampleSection(snapshots=[0.0, 0.5, 1.0])
    validate(cfg)
    return cfg


def _key_types():
    out = {"experiment": Experiment, "seeds": List[int], "out": str}
    for sec in SECTIONS:
        cls = ExperimentConfig.__dataclass_fields__[sec].default_factory
        for f in fields(cls):
            out[f"{sec}.{f.name}"] = f.type
    return out


KEY_TYPES = _key_types()


def _convert(raw: str, typ, key, line):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if typ is Experiment:
            return Experiment(raw)
        if typ == List[int]:
            return [int(v) for v in raw.split(",") if v.strip()]
        if typ == List[float]:
            return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {getattr(typ, '__name__', typ)}",
                          line=line, key=key) from None
    raise ConfigError(f"unsupported type for {key}", line=line, key=key)


def _set(cfg, key, value):
    if "." in key:
        sec, name = key.split(".", 1)
        setattr(getattr(cfg, sec), name, value)
    else:
        setattr(cfg, key, value)


def parse_config(text: str) -> ExperimentConfig:
    entries = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in KEY_TYPES:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})",
                              line=lineno, key=key)
        entries[key] = _convert(raw, KEY_TYPES[key], key, lineno)
        lines[key] = lineno
    cfg = recipe(entries.get("experiment", Experiment.SWISS_ROLL))
    for key, value in entries.items():
        _set(cfg, key, value)
    try:
        validate(cfg)
    except ConfigError as exc:
        if exc.key in lines:
            raise ConfigError(exc.detail, line=lines[exc.key], key=exc.key) from None
        raise
    return cfg


def _fmt(v) -> str:
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, list):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ExperimentConfig) -> str:
    out = [f"experiment = {_fmt(cfg.experiment)}", f"seeds = {_fmt(cfg.seeds)}",
           f"out = {cfg.out}"]
    for sec in SECTIONS:
        obj = getattr(cfg, sec)
        for f in fields(obj):
            out.append(f"{sec}.{f.name} = {_fmt(getattr(obj, f.name))}")
    return "\n".join(out) + "\n"


def _require(cond, key, msg):
    if not cond:
        raise ConfigError(f"{key}: {msg}", key=key)


def validate(cfg: ExperimentConfig) -> None:
    _require(len(cfg.seeds) > 0, "seeds", "need at least one seed")
    _require(all(0 <= s < 2 ** 64 for s in cfg.seeds), "seeds", "seeds must be 64-bit unsigned")
    d, k, t, s, m = cfg.data, cfg.kernel, cfg.train, cfg.sample, cfg.metrics
    _require(d.n_train >= 1, "data.n_train", "must be >= 1")
    _require(d.n_test >= 1, "data.n_test", "must be >= 1")
    _require(d.noise >= 0, "data.noise", "must be >= 0")
    _require(d.grid_side >= 1, "data.grid_side", "must be >= 1")
    _require(d.grid_std > 0, "data.grid_std", "must be > 0")
    _require(d.train_box > 0, "data.train_box", "must be > 0")
    _require(k.horizon > 0, "kernel.horizon", "must be > 0")
    _require(k.sigma_end >= 0, "kernel.sigma_end", "must be >= 0")
    _require(k.variance >= 0, "kernel.variance", "must be >= 0")
    _require(cfg.kernel_variance > 0, "kernel.variance" if k.variance else "kernel.sigma_end",
             "kernel variance is zero; set sigma_end > 0 or an explicit variance")
    _require(t.batch_size >= 2, "train.batch_size", "must be >= 2")
    _require(t.lr > 0, "train.lr", "must be > 0")
    _require(t.epochs >= 0, "train.epochs", "must be >= 0")
    _require(t.loss_scale > 0, "train.loss_scale", "must be > 0")
    _require(t.optimizer in ("adam", "sgd"), "train.optimizer", "must be adam or sgd")
    _require(t.potential in ("mlp", "hermite"), "train.potential", "must be mlp or hermite")
    _require(t.hidden >= 1, "train.hidden", "must be >= 1")
    _require(t.degree >= 0, "train.degree", "must be >= 0")
    _require(s.steps >= 1, "sample.steps", "must be >= 1")
    _require(s.schedule in ("constant", "cosine"), "sample.schedule", "must be constant or cosine")
    _require(all(0 <= v <= 1 for v in s.snapshots), "sample.snapshots",
             "snapshot fractions must lie in [0, 1]")
    _require(all(abs(v * s.steps - round(v * s.steps)) < 1e-9 for v in s.snapshots),
             "sample.snapshots", f"every snapshot fraction times {s.steps} steps must be whole")
    _require(all(b > 0 for b in s.boxes), "sample.boxes", "box half-widths must be > 0")
    _require(s.n_ref >= 0, "sample.n_ref", "must be >= 0")
    _require(m.n_projections >= 1, "metrics.n_projections", "must be >= 1")


def copy_config(cfg: ExperimentConfig) -> ExperimentConfig:
    return dataclasses.replace(
        cfg, seeds=list(cfg.seeds), data=dataclasses.replace(cfg.data),
        kernel=dataclasses.replace(cfg.kernel), train=dataclasses.replace(cfg.train),
        sample=dataclasses.replace(cfg.sample, snapshots=list(cfg.sample.snapshots),
                                   boxes=list(cfg.sample.boxes)),
        metrics=dataclasses.replace(cfg.metrics))
