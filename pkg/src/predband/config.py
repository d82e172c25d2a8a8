"""Experiment configuration: strict JSON schema with defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .estimators import DEFAULT_MENU, EstimatorSpec
from .model import SplitPlan
from .synthetic import SETUP_IDS, parse_setup

METHODS = ("utopia", "utopia-one-step", "utopia-two-step", "lqr", "splitcf", "sdp")
DEFAULT_METHODS = ("utopia-two-step", "splitcf", "lqr")
MEAN_MODES = ("auto", "oracle", "ridge")
MV_SPLIT = SplitPlan(1000, 900, 100, 1000)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SdpParams:
    sigma: float | None = None
    r: float | None = None
    rank: int | None = None
    delta: float | None = None  # None: default_sdp_delta
    n_opt: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    source: str = "setup1"
    seed: int = 0
    alpha: float = 0.05
    delta: float = 0.0
    split: SplitPlan | None = None
    menu: tuple[EstimatorSpec, ...] = DEFAULT_MENU
    methods: tuple[str, ...] = DEFAULT_METHODS
    mean: str = "auto"
    mean_degree: int = 4
    mean_ridge: float = 1e-6
    select: bool = False
    sdp: SdpParams = field(default_factory=SdpParams)
    laplace_scale: str = "scale"
    truncation: str = "literal"
    sequential: bool = False
    out: str | None = None
    svg: str | None = None

    @property
    def is_synthetic(self) -> bool:
        return _setup_name(self.source) is not None

    def setup_spec(self):
        name = _setup_name(self.source)
        if name is None:
            return None
        base = parse_setup(name)
        return type(base)(base.id, laplace_scale=self.laplace_scale, truncation=self.truncation)

    def plan(self) -> SplitPlan:
        if self.split is not None:
            return self.split
        spec = self.setup_spec()
        return MV_SPLIT if spec is not None and spec.multivariate else SplitPlan()

    def to_dict(self) -> dict:
        d = {
            "source": self.source, "seed": self.seed, "alpha": self.alpha, "delta": self.delta,
            "menu": [m.to_dict() for m in self.menu], "methods": list(self.methods),
            "mean": self.mean, "mean_degree": self.mean_degree, "mean_ridge": self.mean_ridge,
            "select": self.select,
            "sdp": {k: v for k, v in vars(self.sdp).items() if v is not None},
            "laplace_scale": self.laplace_scale, "truncation": self.truncation,
            "sequential": self.sequential,
        }
        if self.split is not None:
            d["split"] = dict(zip(("n_pre", "n_opt", "n_adj", "n_test"), self.split.sizes()))
        for k in ("out", "svg"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        return d


def serialize_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def _setup_name(source: str) -> str | None:
    s = str(source).strip().lower()
    if s in SETUP_IDS:
        return s
    if s in ("1", "2", "3"):
        return "setup" + s
    return None


_TOP_KEYS = {"source", "seed", "alpha", "delta", "split", "menu", "methods", "mean", "mean_degree",
             "mean_ridge", "select", "sdp", "laplace_scale", "truncation", "sequential", "out", "svg"}


def _num(path, v, *, integer=False, lo=None, hi=None, lo_open=False, hi_open=False, nullable=False):
    if v is None and nullable:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(path, f"must be {'<' if hi_open else '<='} {hi}, got {v!r}")
    return int(v) if integer else float(v)


def _choice(path, v, options):
    if v not in options:
        raise ConfigError(path, f"expected one of {', '.join(options)}, got {v!r}")
    return v


def _bool(path, v):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true or false, got {v!r}")
    return v


def _object(path, v, allowed):
    if not isinstance(v, dict):
        raise ConfigError(path, "expected an object")
    unknown = sorted(set(v) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    return v


def config_from_dict(doc) -> ExperimentConfig:
    doc = _object("", doc, _TOP_KEYS)
    kw = {}
    if "source" in doc:
        if not isinstance(doc["source"], str) or not doc["source"].strip():
            raise ConfigError("source", "expected a setup id or a CSV path")
        kw["source"] = doc["source"]
    if "seed" in doc:
        kw["seed"] = _num("seed", doc["seed"], integer=True, lo=0, hi=2**64 - 1)
    if "alpha" in doc:
        kw["alpha"] = _num("alpha", doc["alpha"], lo=0.0, hi=1.0, hi_open=True)
    if "delta" in doc:
        kw["delta"] = _num("delta", doc["delta"], lo=0.0)
    if "split" in doc:
        sp = _object("split", doc["split"], ("n_pre", "n_opt", "n_adj", "n_test"))
        missing = [k for k in ("n_pre", "n_opt", "n_adj", "n_test") if k not in sp]
        if missing:
            raise ConfigError(f"split.{missing[0]}", "missing")
        kw["split"] = SplitPlan(**{k: _num(f"split.{k}", sp[k], integer=True, lo=0) for k in sp})
    if "menu" in doc:
        if not isinstance(doc["menu"], list):
            raise ConfigError("menu", "expected a list of estimator entries")
        menu = []
        for i, entry in enumerate(doc["menu"]):
            if not isinstance(entry, dict):
                raise ConfigError(f"menu[{i}]", "expected an object")
            try:
                menu.append(EstimatorSpec.from_dict(entry))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"menu[{i}]", str(exc)) from None
        kw["menu"] = tuple(menu)
    if "methods" in doc:
        ms = doc["methods"]
        if not isinstance(ms, list) or not ms:
            raise ConfigError("methods", "expected a nonempty list")
        for i, m in enumerate(ms):
            _choice(f"methods[{i}]", m, METHODS)
        if len(set(ms)) != len(ms):
            raise ConfigError("methods", "duplicate method")
        kw["methods"] = tuple(ms)
    if "mean" in doc:
        kw["mean"] = _choice("mean", doc["mean"], MEAN_MODES)
    if "mean_degree" in doc:
        kw["mean_degree"] = _num("mean_degree", doc["mean_degree"], integer=True, lo=0)
    if "mean_ridge" in doc:
        kw["mean_ridge"] = _num("mean_ridge", doc["mean_ridge"], lo=0.0)
    if "select" in doc:
        kw["select"] = _bool("select", doc["select"])
    if "sdp" in doc:
        sd = _object("sdp", doc["sdp"], ("sigma", "r", "rank", "delta", "n_opt"))
        p = {}
        if "sigma" in sd:
            p["sigma"] = _num("sdp.sigma", sd["sigma"], lo=0.0, lo_open=True, nullable=True)
        if "r" in sd:
            p["r"] = _num("sdp.r", sd["r"], lo=0.0, lo_open=True, nullable=True)
        if "rank" in sd:
            p["rank"] = _num("sdp.rank", sd["rank"], integer=True, lo=1, nullable=True)
        if "delta" in sd:
            p["delta"] = _num("sdp.delta", sd["delta"], lo=0.0, nullable=True)
        if "n_opt" in sd:
            p["n_opt"] = _num("sdp.n_opt", sd["n_opt"], integer=True, lo=1, hi=300)
        kw["sdp"] = SdpParams(**p)
    if "laplace_scale" in doc:
        kw["laplace_scale"] = _choice("laplace_scale", doc["laplace_scale"], ("scale", "std"))
    if "truncation" in doc:
        kw["truncation"] = _choice("truncation", doc["truncation"], ("literal", "mean"))
    if "sequential" in doc:
        kw["sequential"] = _bool("sequential", doc["sequential"])
    for k in ("out", "svg"):
        if k in doc:
            if doc[k] is not None and not isinstance(doc[k], str):
                raise ConfigError(k, "expected a path string")
            kw[k] = doc[k]
    cfg = ExperimentConfig(**kw)
    if cfg.mean == "oracle" and not cfg.is_synthetic:
        raise ConfigError("mean", "the oracle mean needs a synthetic source")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return config_from_dict(doc)
