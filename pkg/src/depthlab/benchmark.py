"""Sparse ordinal-depth benchmark construction and scoring.

Pixel pairs are sampled from per-image mask keypoints, a panel of depth
models votes on which pixel is closer (votes count only when the model's
own depth ratio clears a gate, 3.0 by default), unanimous pairs are
auto-labeled, disagreements are queued for human annotation, and finished
benchmarks score a model by ordinal pair accuracy per scenario.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .depthio import DepthMap, PredictionManifest, to_depth, to_inverse
from .errors import InvalidPixel, UnlabeledPair

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Scenario taxonomy (static config)

@dataclass(frozen=True)
class ScenarioTaxonomy:
    """The fixed eight evaluation scenarios and their image-search keywords."""

    scenarios: dict

    def tags(self) -> list[str]:
        return list(self.scenarios.keys())

    def display(self, tag: str) -> str:
        return self.scenarios[tag]["display"]

    def keywords(self, tag: str) -> list[str]:
        return list(self.scenarios[tag]["keywords"])


def load_taxonomy() -> ScenarioTaxonomy:
    text = resources.files("depthlab").joinpath("data/scenarios.json").read_text("utf-8")
    scenarios = json.loads(text)
    if len(scenarios) != 8:
        raise ValueError(f"scenario config must define exactly 8 scenarios, found {len(scenarios)}")
    for tag, entry in scenarios.items():
        if not entry.get("keywords"):
            raise ValueError(f"scenario {tag!r} has an empty keyword list")
    return ScenarioTaxonomy(scenarios)


TAXONOMY = load_taxonomy()
SCENARIO_TAGS = TAXONOMY.tags()


# ---------------------------------------------------------------------------
# Pairs

class PairOrigin(enum.Enum):
    AUTO_SAMPLED = "auto_sampled"
    MANUAL_CHALLENGE = "manual_challenge"


class PairLabel(enum.Enum):
    FIRST_CLOSER = "first_closer"
    SECOND_CLOSER = "second_closer"
    UNLABELED = "unlabeled"
    SKIPPED = "skipped"


class LabelSource(enum.Enum):
    MODEL_CONSENSUS = "model_consensus"
    HUMAN_CONSENSUS = "human_consensus"
    NONE = "none"


@dataclass
class PointPair:
    """One ordinal question: which of two pixels is closer to the camera."""

    pair_id: str
    image_id: str
    p1: tuple[int, int]
    p2: tuple[int, int]
    scenario: str
    origin: PairOrigin
    label: PairLabel = PairLabel.UNLABELED
    label_source: LabelSource = LabelSource.NONE

    def __post_init__(self):
        self.p1 = (int(self.p1[0]), int(self.p1[1]))
        self.p2 = (int(self.p2[0]), int(self.p2[1]))
        if self.p1 == self.p2:
            raise ValueError(f"pair {self.pair_id}: both points are {self.p1}")
        if self.scenario not in SCENARIO_TAGS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.label is not PairLabel.UNLABELED and self.label_source is LabelSource.NONE:
            raise ValueError(f"pair {self.pair_id}: labeled without a label source")

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "image_id": self.image_id,
            "p1": list(self.p1),
            "p2": list(self.p2),
            "scenario": self.scenario,
            "origin": self.origin.value,
            "label": self.label.value,
            "label_source": self.label_source.value,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PointPair":
        return cls(
            pair_id=rec["pair_id"],
            image_id=rec["image_id"],
            p1=tuple(rec["p1"]),
            p2=tuple(rec["p2"]),
            scenario=rec["scenario"],
            origin=PairOrigin(rec["origin"]),
            label=PairLabel(rec["label"]),
            label_source=LabelSource(rec["label_source"]),
        )


@dataclass
class BenchmarkManifest:
    pairs: list[PointPair] = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def queued(self) -> list[PointPair]:
        return [p for p in self.pairs if p.label is PairLabel.UNLABELED]

    def labeled(self) -> list[PointPair]:
        return [p for p in self.pairs if p.label in (PairLabel.FIRST_CLOSER, PairLabel.SECOND_CLOSER)]

    def image_ids(self) -> list[str]:
        seen: list[str] = []
        for p in self.pairs:
            if p.image_id not in seen:
                seen.append(p.image_id)
        return seen

    def save(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as f:
            for p in self.pairs:
                f.write(json.dumps(p.to_record(), sort_keys=True) + "\n")


def load_benchmark(path: str | Path) -> BenchmarkManifest:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                pairs.append(PointPair.from_record(json.loads(line)))
    return BenchmarkManifest(pairs)


# ---------------------------------------------------------------------------
# Sampling

@dataclass
class Keypoint:
    x: int
    y: int
    mask_id: str


@dataclass
class ImageInfo:
    image_id: str
    path: str
    scenario: str


def load_keypoints(path: str | Path) -> dict:
    """JSONL of {"image_id", "keypoints": [{"x", "y", "mask_id"}, ...]}."""
    out: dict[str, list[Keypoint]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            out[rec["image_id"]] = [
                Keypoint(int(k["x"]), int(k["y"]), str(k["mask_id"]))
                for k in rec["keypoints"]
            ]
    return out


def save_keypoints(keypoints: dict, path: str | Path):
    with open(path, "w", encoding="utf-8") as f:
        for image_id, kps in keypoints.items():
            rec = {
                "image_id": image_id,
                "keypoints": [{"x": k.x, "y": k.y, "mask_id": k.mask_id} for k in kps],
            }
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def load_image_infos(path: str | Path) -> list[ImageInfo]:
    """JSONL of {"image_id", "image", "scenario"}; image paths are kept as written."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                rec = json.loads(line)
                out.append(ImageInfo(rec["image_id"], rec["image"], rec["scenario"]))
    return out


def save_image_infos(images: list[ImageInfo], path: str | Path):
    with open(path, "w", encoding="utf-8") as f:
        for info in images:
            rec = {"image_id": info.image_id, "image": info.path, "scenario": info.scenario}
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def eligible_pairs(keypoints: list[Keypoint]) -> list[tuple[int, int]]:
    """All unordered keypoint index pairs whose keypoints lie in distinct masks."""
    out = []
    for i in range(len(keypoints)):
        for j in range(i + 1, len(keypoints)):
            if keypoints[i].mask_id != keypoints[j].mask_id:
                out.append((i, j))
    return out


def sample_pairs(
    images: list[ImageInfo],
    keypoints: dict,
    rng_seed: int,
    per_image_pairs: int,
) -> list[PointPair]:
    """Draw pixel pairs per image, uniformly over keypoint pairs from
    distinct masks; deterministic in rng_seed.  Images without two keypoints
    in distinct masks are skipped (and logged)."""
    rng = np.random.default_rng(rng_seed)
    pairs: list[PointPair] = []
    for info in images:
        kps = keypoints.get(info.image_id, [])
        candidates = eligible_pairs(kps)
        if not candidates:
            log.warning(
                "image %s: too few keypoints for pair sampling (%d keypoints, 0 eligible pairs)",
                info.image_id,
                len(kps),
            )
            continue
        for k in range(per_image_pairs):
            i, j = candidates[int(rng.integers(len(candidates)))]
            pairs.append(
                PointPair(
                    pair_id=f"{info.image_id}#{k:04d}",
                    image_id=info.image_id,
                    p1=(kps[i].x, kps[i].y),
                    p2=(kps[j].x, kps[j].y),
                    scenario=info.scenario,
                    origin=PairOrigin.AUTO_SAMPLED,
                )
            )
    return pairs


# ---------------------------------------------------------------------------
# Voting

@dataclass
class VotingConfig:
    ratio_threshold: float = 3.0
    min_models: int = 4

    def __post_init__(self):
        if not self.ratio_threshold > 1:
            raise ValueError("ratio_threshold must be > 1")


class VoteOutcome(enum.Enum):
    CONSENSUS = "consensus"
    DISAGREEMENT = "disagreement"
    INELIGIBLE_ALL = "ineligible_all"


@dataclass
class ModelVote:
    model_tag: str
    ratio: float
    closer: PairLabel | None  # None when the model is ineligible for this pair


@dataclass
class VoteResult:
    pair_id: str
    per_model: list[ModelVote]
    outcome: VoteOutcome
    label: PairLabel | None = None


def _depth_at(m: DepthMap, model_tag: str, point: tuple[int, int]) -> float:
    x, y = point
    if not (0 <= y < m.height and 0 <= x < m.width) or not m.valid[y, x]:
        raise InvalidPixel(f"model {model_tag!r}: invalid pixel at (x={x}, y={y})")
    return float(to_depth(m).values[y, x])


def vote(pair: PointPair, model_preds: dict, cfg: VotingConfig) -> VoteResult:
    """Query each model for the pair's depth ratio and closer pixel.

    A model is eligible only when max(d1/d2, d2/d1) exceeds
    cfg.ratio_threshold (equal depths carry no ordinal information and are
    ineligible).  All eligible models agreeing yields a consensus label;
    any split is a disagreement destined for human annotation.
    """
    per_model: list[ModelVote] = []
    votes: set[PairLabel] = set()
    for tag in sorted(model_preds):
        m = model_preds[tag]
        d1 = _depth_at(m, tag, pair.p1)
        d2 = _depth_at(m, tag, pair.p2)
        ratio = max(d1 / d2, d2 / d1) if d1 != d2 else 1.0
        if d1 == d2 or ratio <= cfg.ratio_threshold:
            per_model.append(ModelVote(tag, ratio, None))
            continue
        closer = PairLabel.FIRST_CLOSER if d1 < d2 else PairLabel.SECOND_CLOSER
        per_model.append(ModelVote(tag, ratio, closer))
        votes.add(closer)
    if not votes:
        return VoteResult(pair.pair_id, per_model, VoteOutcome.INELIGIBLE_ALL)
    if len(votes) == 1:
        return VoteResult(pair.pair_id, per_model, VoteOutcome.CONSENSUS, votes.pop())
    return VoteResult(pair.pair_id, per_model, VoteOutcome.DISAGREEMENT)


@dataclass
class BenchmarkBuild:
    manifest: BenchmarkManifest
    votes: list[VoteResult]
    dropped: list[PointPair]  # pairs no model was eligible to vote on


def build_benchmark(
    images: list[ImageInfo],
    keypoints: dict,
    model_maps: dict,
    manual_pairs: list[PointPair],
    cfg: VotingConfig,
    per_image_pairs: int = 2,
    seed: int = 0,
) -> BenchmarkBuild:
    """Sample pairs, run the model vote, and assemble the benchmark.

    `model_maps` maps model_tag -> {image_id -> DepthMap}; at least
    cfg.min_models models are required.  Consensus pairs come out
    auto-labeled, disagreements stay unlabeled (queued for annotation), and
    manual challenge pairs are always queued.
    """
    if len(model_maps) < cfg.min_models:
        raise ValueError(
            f"need at least {cfg.min_models} models to vote, got {len(model_maps)}"
        )
    for p in manual_pairs:
        if p.origin is not PairOrigin.MANUAL_CHALLENGE:
            raise ValueError(f"manual pair {p.pair_id} must have manual_challenge origin")

    sampled = sample_pairs(images, keypoints, seed, per_image_pairs)
    kept: list[PointPair] = []
    votes: list[VoteResult] = []
    dropped: list[PointPair] = []
    for pair in sampled:
        preds = {tag: maps[pair.image_id] for tag, maps in model_maps.items()}
        result = vote(pair, preds, cfg)
        votes.append(result)
        if result.outcome is VoteOutcome.INELIGIBLE_ALL:
            dropped.append(pair)
        elif result.outcome is VoteOutcome.CONSENSUS:
            pair.label = result.label
            pair.label_source = LabelSource.MODEL_CONSENSUS
            kept.append(pair)
        else:
            kept.append(pair)

    manifest = BenchmarkManifest(kept + list(manual_pairs))
    log.info(
        "built benchmark: %d images / %d pairs (%d auto-labeled, %d queued, %d dropped)",
        len(manifest.image_ids()),
        len(manifest),
        len(manifest.labeled()),
        len(manifest.queued()),
        len(dropped),
    )
    return BenchmarkBuild(manifest=manifest, votes=votes, dropped=dropped)


# ---------------------------------------------------------------------------
# Scoring

@dataclass
class AccuracyReport:
    per_scenario: dict
    per_scenario_counts: dict
    mean_accuracy: float
    pairs_scored: int


def pair_accuracy(model_maps, benchmark: BenchmarkManifest) -> AccuracyReport:
    """Fraction of labeled pairs whose ordering the model reproduces.

    `model_maps` is either {image_id -> DepthMap} or a PredictionManifest.
    A pair counts as correct iff the model's inverse depth is strictly
    greater at the labeled-closer pixel; ties are incorrect.  Skipped pairs
    are excluded; an unlabeled pair is an error.
    """
    if isinstance(model_maps, PredictionManifest):
        manifest = model_maps
        cache: dict[str, DepthMap] = {}

        def lookup(image_id: str) -> DepthMap:
            if image_id not in cache:
                cache[image_id] = manifest.load_depth(manifest.entry(image_id))
            return cache[image_id]

    else:
        def lookup(image_id: str) -> DepthMap:
            return model_maps[image_id]

    correct: dict[str, int] = {}
    total: dict[str, int] = {}
    n_correct = 0
    n_total = 0
    for pair in benchmark:
        if pair.label is PairLabel.SKIPPED:
            continue
        if pair.label is PairLabel.UNLABELED:
            raise UnlabeledPair(f"pair {pair.pair_id} is unlabeled; finish annotation first")
        inv = to_inverse(lookup(pair.image_id))
        x1, y1 = pair.p1
        x2, y2 = pair.p2
        for (x, y) in (pair.p1, pair.p2):
            if not (0 <= y < inv.height and 0 <= x < inv.width) or not inv.valid[y, x]:
                raise InvalidPixel(f"pair {pair.pair_id}: invalid pixel at (x={x}, y={y})")
        v1 = float(inv.values[y1, x1])
        v2 = float(inv.values[y2, x2])
        if pair.label is PairLabel.FIRST_CLOSER:
            ok = v1 > v2
        else:
            ok = v2 > v1
        total[pair.scenario] = total.get(pair.scenario, 0) + 1
        correct[pair.scenario] = correct.get(pair.scenario, 0) + int(ok)
        n_total += 1
        n_correct += int(ok)

    per_scenario = {tag: correct[tag] / total[tag] for tag in sorted(total)}
    counts = {tag: total[tag] for tag in sorted(total)}
    return AccuracyReport(
        per_scenario=per_scenario,
        per_scenario_counts=counts,
        mean_accuracy=(n_correct / n_total) if n_total else 0.0,
        pairs_scored=n_total,
    )


def format_accuracy(report: AccuracyReport, model_tag: str = "model") -> str:
    """Per-scenario accuracy table (percent), mean last."""
    tags = list(report.per_scenario)
    header = ["model"] + [TAXONOMY.display(t) for t in tags] + ["Mean"]
    row = [model_tag] + [f"{100 * report.per_scenario[t]:.1f}" for t in tags]
    row.append(f"{100 * report.mean_accuracy:.1f}")
    widths = [max(len(h), len(c)) for h, c in zip(header, row)]
    lines = [
        "# ordinal pair accuracy (%)",
        "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
        "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip(),
    ]
    return "\n".join(lines) + "\n"
