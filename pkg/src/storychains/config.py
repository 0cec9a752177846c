"""Pipeline configuration: a flat ``key = value`` text file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .retrieval import BM25FParams
from .simnet import SimilarityParams, Thresholds

CALIBRATE = "calibrate"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus: str = ""
    format: str = "auto"
    labels: str = ""
    output_dir: str = "out"
    window_days: float = 3.0
    keyword_top_k: int = 100
    keyword_min_score: float = 100.0
    k1: float = 1.2
    b_title: float = 1.0
    b_body: float = 1.0
    boost_title: float = 2.0
    boost_body: float = 1.0
    expansion_terms: int = 20
    threshold_keyword: str = CALIBRATE
    threshold_bm25f: str = CALIBRATE
    threshold_ensemble: str = CALIBRATE
    teleport: float = 0.15
    seed: int = 42
    workers: int = 0  # 0: one per available core
    stats_level: str = "top"
    followup_min_cluster: int = 10
    histogram_bin_hours: float = 1.0
    dump_profiles: bool = False

    def validate(self) -> "PipelineConfig":
        checks = [
            (self.format in ("auto", "jsonl", "csv"), "format must be auto, jsonl or csv"),
            (self.window_days > 0, "window_days must be positive"),
            (self.keyword_top_k >= 1, "keyword_top_k must be at least 1"),
            (self.keyword_min_score >= 0, "keyword_min_score must be non-negative"),
            (self.k1 > 0, "k1 must be positive"),
            (0 < self.b_title <= 1 and 0 < self.b_body <= 1, "b_title and b_body must lie in (0, 1]"),
            (self.boost_title > 0 and self.boost_body > 0, "boosts must be positive"),
            (self.expansion_terms >= 1, "expansion_terms must be at least 1"),
            (0 < self.teleport < 1, "teleport must lie in (0, 1)"),
            (self.workers >= 0, "workers must be non-negative"),
            (self.stats_level in ("top", "leaf"), "stats_level must be top or leaf"),
            (self.followup_min_cluster >= 2, "followup_min_cluster must be at least 2"),
            (self.histogram_bin_hours > 0, "histogram_bin_hours must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        for name in ("threshold_keyword", "threshold_bm25f", "threshold_ensemble"):
            value = getattr(self, name)
            if value == CALIBRATE:
                continue
            try:
                theta = float(value)
            except ValueError:
                raise ConfigError(f"{name} must be a number in (0, 1] or '{CALIBRATE}'") from None
            if not 0 < theta <= 1:
                raise ConfigError(f"{name} must lie in (0, 1], got {value}")
        return self

    @property
    def out(self) -> Path:
        return Path(self.output_dir)

    @property
    def n_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    def fixed_thresholds(self) -> dict[str, float | None]:
        """Configured thresholds; None where calibration was requested."""
        out = {}
        for c in ("keyword", "bm25f", "ensemble"):
            v = getattr(self, f"threshold_{c}")
            out[c] = None if v == CALIBRATE else float(v)
        return out

    def bm25f(self) -> BM25FParams:
        return BM25FParams(
            k1=self.k1,
            b={"title": self.b_title, "body": self.b_body},
            boost={"title": self.boost_title, "body": self.boost_body},
        )

    def similarity(self, thresholds: Thresholds | None = None) -> SimilarityParams:
        return SimilarityParams(
            window_days=self.window_days,
            top_k=self.keyword_top_k,
            min_score=self.keyword_min_score,
            expansion_terms=self.expansion_terms,
            bm25f=self.bm25f(),
            thresholds=thresholds or Thresholds(),
            workers=self.n_workers,
        )


def _coerce(field: dataclasses.Field, raw: str) -> Any:
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {field.name}: {raw!r}") from None
    return raw


FIELDS = {f.name: f for f in fields(PipelineConfig)}


def apply(config: PipelineConfig, values: dict[str, str]) -> PipelineConfig:
    for key, raw in values.items():
        if key not in FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key, _coerce(FIELDS[key], raw))
    return config


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> PipelineConfig:
    config = PipelineConfig()
    if path:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {p}: {exc.strerror}") from None
        apply(config, parse_config_text(text, str(p)))
    if overrides:
        apply(config, overrides)
    return config.validate()


def dump_config(config: PipelineConfig) -> str:
    return "".join(f"{f.name} = {getattr(config, f.name)}\n" for f in fields(config))
