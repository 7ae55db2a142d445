"""Emotion appraisal-pattern knowledge and synthetic corpus generation.

The pattern table maps each modal emotion to a nominal level per check
(following Scherer's published appraisal profiles, with suddenness of
shame kept open since shame may be either abrupt or slow-burning). Nominal
levels become sampling distributions on [0, 1] so that a classifier can be
trained on scalar appraisal vectors instead of words.

Both tables ship as CSV assets so any deviation is diffable; this module
loads them once and caches.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .appraisal import AppraisalVector
from .assets_io import level_scales_path, patterns_path

EMOTIONS = (
    "happiness", "joy", "pride", "boredom", "fear", "sadness", "shame",
    "anxiety", "despair", "irritation", "rage",
)

EXPERIMENT_EMOTIONS = {
    "exp1": ("happiness", "joy", "pride", "boredom", "fear", "sadness", "shame"),
    "exp3": ("anxiety", "despair", "irritation", "rage"),
}

NOMINAL_LEVELS = (
    "obstruct", "very_low", "low", "medium", "high", "very_high", "open",
)

CHECKS = ("suddenness", "goal_relevance", "conduciveness", "power")


@dataclass(frozen=True)
class LevelScale:
    level: str
    kind: str  # half_normal_low | half_normal_high | normal | uniform
    mu: float
    sigma: float


@dataclass(frozen=True)
class AppraisalPattern:
    emotion: str
    suddenness: str
    goal_relevance: str
    conduciveness: str
    power: str

    def level_for(self, check: str) -> str:
        return getattr(self, check)


@dataclass(frozen=True)
class LabeledSample:
    vector: AppraisalVector
    label: str


@lru_cache(maxsize=None)
def load_level_scales() -> dict[str, LevelScale]:
    scales: dict[str, LevelScale] = {}
    with open(level_scales_path(), newline="", encoding="utf-8") as fh:
        rows = (r for r in fh if not r.lstrip().startswith("#"))
        for row in csv.DictReader(rows):
            level = row["level"].strip()
            scales[level] = LevelScale(
                level=level,
                kind=row["kind"].strip(),
                mu=float(row["mu"]) if row["mu"] else 0.0,
                sigma=float(row["sigma"]) if row["sigma"] else 0.0,
            )
    missing = set(NOMINAL_LEVELS) - set(scales)
    if missing:
        raise ValueError(f"level scale table missing {sorted(missing)}")
    return scales


@lru_cache(maxsize=None)
def load_patterns() -> dict[str, AppraisalPattern]:
    patterns: dict[str, AppraisalPattern] = {}
    with open(patterns_path(), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            emotion = row["emotion"].strip()
            patterns[emotion] = AppraisalPattern(
                emotion=emotion,
                suddenness=row["suddenness"].strip(),
                goal_relevance=row["goal_relevance"].strip(),
                conduciveness=row["conduciveness"].strip(),
                power=row["power"].strip(),
            )
    missing = set(EMOTIONS) - set(patterns)
    if missing:
        raise ValueError(f"pattern table missing {sorted(missing)}")
    return patterns


class AppraisalSampler:
    """Draws appraisal values for nominal levels.

    `medium_center` defaults to 0.5; passing 0 reproduces the literal
    printed mapping in which medium collapses onto very_low.
    """

    def __init__(self, medium_center: float = 0.5):
        self.medium_center = medium_center
        self._scales = load_level_scales()

    def sample_level(self, level: str, rng: np.random.Generator) -> float:
        if "/" in level:  # composite such as "high/med": even mixture
            parts = [p.strip() for p in level.split("/")]
            choice = parts[int(rng.integers(len(parts)))]
            return self.sample_level(_expand_abbrev(choice), rng)
        scale = self._scales.get(level)
        if scale is None:
            raise KeyError(f"unknown nominal level {level!r}")
        if scale.kind == "uniform":
            return float(rng.uniform(0.0, 1.0))
        if scale.kind == "half_normal_low":
            value = abs(rng.normal(0.0, scale.sigma))
        elif scale.kind == "half_normal_high":
            value = 1.0 - abs(rng.normal(0.0, scale.sigma))
        elif scale.kind == "normal":
            mu = self.medium_center if scale.level == "medium" else scale.mu
            value = rng.normal(mu, scale.sigma)
        else:
            raise ValueError(f"unknown scale kind {scale.kind!r}")
        return float(min(max(value, 0.0), 1.0))

    def sample_pattern(
        self, pattern: AppraisalPattern, rng: np.random.Generator
    ) -> AppraisalVector:
        return AppraisalVector(
            *(self.sample_level(pattern.level_for(check), rng) for check in CHECKS)
        )

    def build_corpus(
        self, emotions: tuple[str, ...] | list[str], n_per: int,
        rng: np.random.Generator,
    ) -> list[LabeledSample]:
        """Class-balanced labeled samples, shuffled deterministically."""
        if n_per < 1:
            raise ValueError("n_per must be >= 1")
        patterns = load_patterns()
        samples = [
            LabeledSample(self.sample_pattern(patterns[emotion], rng), emotion)
            for emotion in emotions
            for _ in range(n_per)
        ]
        order = rng.permutation(len(samples))
        return [samples[i] for i in order]


def _expand_abbrev(level: str) -> str:
    return {"med": "medium", "obs": "obstruct"}.get(level, level)


def corpus_to_rows(corpus: list[LabeledSample]) -> list[list]:
    rows = [["suddenness", "goal_relevance", "conduciveness", "power", "label"]]
    for sample in corpus:
        rows.append([*sample.vector.as_tuple(), sample.label])
    return rows
