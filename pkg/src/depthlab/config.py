"""TOML config file support for the command-line pipeline.

Sections and keys:

    [eval]      alignment = "lsq" | "robust"; space = "inv" | "depth";
                delta_base; min_depth; max_depth
    [losses]    ssi_weight; gm_weight; gm_scales; trim_fraction; feat_align_margin
    [curation]  n; loss_kind = "ssi_residual" | "abs_diff"
    [voting]    ratio_threshold; min_models

Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .curation import CurationConfig, LossKind
from .errors import ConfigError
from .losses import LossConfig
from .metrics import AlignmentMethod, AlignmentSpace, EvalConfig
from .benchmark import VotingConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ALIGNMENT_NAMES = {"lsq": AlignmentMethod.LEAST_SQUARES, "robust": AlignmentMethod.ROBUST}
SPACE_NAMES = {"inv": AlignmentSpace.INVERSE_DEPTH, "depth": AlignmentSpace.DEPTH}


def load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config file {path}: {e}") from None


def _take(section: dict, allowed: set, where: str) -> dict:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{where}]")
    return section


def eval_config(section: dict) -> EvalConfig:
    _take(
        section,
        {"alignment", "space", "delta_base", "min_depth", "max_depth", "pixel_pooled"},
        "eval",
    )
    kwargs = {}
    if "alignment" in section:
        name = section["alignment"]
        if name not in ALIGNMENT_NAMES:
            raise ConfigError(f"alignment must be one of {sorted(ALIGNMENT_NAMES)}, got {name!r}")
        kwargs["alignment"] = ALIGNMENT_NAMES[name]
    if "space" in section:
        name = section["space"]
        if name not in SPACE_NAMES:
            raise ConfigError(f"space must be one of {sorted(SPACE_NAMES)}, got {name!r}")
        kwargs["space"] = SPACE_NAMES[name]
    for key in ("delta_base", "min_depth", "max_depth"):
        if key in section:
            kwargs[key] = float(section[key])
    if "pixel_pooled" in section:
        kwargs["pixel_pooled"] = bool(section["pixel_pooled"])
    try:
        return EvalConfig(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def loss_config(section: dict) -> LossConfig:
    _take(
        section,
        {"ssi_weight", "gm_weight", "gm_scales", "trim_fraction", "feat_align_margin"},
        "losses",
    )
    try:
        return LossConfig(
            ssi_weight=float(section.get("ssi_weight", 1.0)),
            gm_weight=float(section.get("gm_weight", 2.0)),
            gm_scales=int(section.get("gm_scales", 4)),
            trim_fraction=float(section.get("trim_fraction", 0.0)),
            feat_align_margin=float(section.get("feat_align_margin", 0.85)),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


def curation_config(section: dict) -> CurationConfig:
    _take(section, {"n", "loss_kind"}, "curation")
    try:
        return CurationConfig(
            n=float(section.get("n", 0.10)),
            loss_kind=LossKind(section.get("loss_kind", "ssi_residual")),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


def voting_config(section: dict) -> VotingConfig:
    _take(section, {"ratio_threshold", "min_models"}, "voting")
    try:
        return VotingConfig(
            ratio_threshold=float(section.get("ratio_threshold", 3.0)),
            min_models=int(section.get("min_models", 4)),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


def load_config(path: str | Path | None) -> dict:
    """Parse the whole file into config objects, applying defaults when absent."""
    doc = load_toml(path) if path else {}
    known = {"eval", "losses", "curation", "voting"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    return {
        "eval": eval_config(doc.get("eval", {})),
        "losses": loss_config(doc.get("losses", {})),
        "curation": curation_config(doc.get("curation", {})),
        "voting": voting_config(doc.get("voting", {})),
    }
