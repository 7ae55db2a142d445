"""Locating bundled data files.

The package ships its scenario MDPs and the pattern tables under
``appraise_rl/assets``; the APPRAISE_RL_ASSETS environment variable points
runs at an alternative directory with the same layout.
"""

from __future__ import annotations

import os
from pathlib import Path

from .mdp import MdpSpec, parse_mdp

ENV_VAR = "APPRAISE_RL_ASSETS"

BUNDLED_EMOTIONS = (
    "happiness", "joy", "pride", "boredom", "fear", "sadness", "shame",
    "anxiety", "despair", "irritation", "rage",
)


def assets_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "assets"


def mdp_path(emotion: str) -> Path:
    return assets_dir() / "mdps" / f"{emotion}.mdp"


def load_mdp(name_or_path: str) -> MdpSpec:
    """Load an MDP by bundled emotion name or by file path."""
    path = Path(name_or_path)
    if not path.exists():
        candidate = mdp_path(name_or_path)
        if candidate.exists():
            path = candidate
        else:
            raise FileNotFoundError(f"no MDP file or bundled scenario {name_or_path!r}")
    return parse_mdp(path.read_text(encoding="utf-8"), name=path.stem)


def patterns_path() -> Path:
    return assets_dir() / "scherer_patterns.csv"


def level_scales_path() -> Path:
    return assets_dir() / "level_scales.csv"
