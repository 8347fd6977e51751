"""Human-in-the-loop annotation of queued ordinal pairs.

One annotator answers each queued pair (Primary), then two more re-annotate
it blind (Verifiers).  A pair is finalized only when all three agree; any
skip discards it as Skipped, any disagreement discards it as Contested.

State is event-sourced: every transition appends one JSON line to a log, and
service state is a pure fold over that log.  Lease expiry is itself an event
(appended lazily when a stale lease is observed), so replaying the log
reproduces state exactly with no wall clock involved.
"""

from __future__ import annotations

import enum
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .benchmark import BenchmarkManifest, LabelSource, PairLabel, PointPair
from .errors import DuplicateSubmission, LeaseExpired, UnknownAnnotator

DEFAULT_LEASE_SECONDS = 600.0


class Decision(enum.Enum):
    FIRST_CLOSER = "first_closer"
    SECOND_CLOSER = "second_closer"
    SKIP = "skip"


class Role(enum.Enum):
    PRIMARY = "primary"
    VERIFIER = "verifier"


class PairStatus(enum.Enum):
    QUEUED = "queued"
    CLAIMED = "claimed"
    AWAITING_VERIFICATION = "awaiting_verification"
    FINALIZED = "finalized"
    DISCARDED = "discarded"


class DiscardReason(enum.Enum):
    SKIPPED = "skipped"
    CONTESTED = "contested"


_DECISION_LABEL = {
    Decision.FIRST_CLOSER: PairLabel.FIRST_CLOSER,
    Decision.SECOND_CLOSER: PairLabel.SECOND_CLOSER,
}


@dataclass
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    decision: Decision
    role: Role
    timestamp: float


@dataclass
class PairState:
    pair: PointPair
    status: PairStatus = PairStatus.QUEUED
    claimed_by: str | None = None
    claimed_role: Role | None = None
    lease_expiry: float | None = None
    prior_status: PairStatus = PairStatus.QUEUED
    records: list[AnnotationRecord] = field(default_factory=list)
    final_label: PairLabel | None = None
    discard_reason: DiscardReason | None = None

    def touched_by(self, annotator_id: str) -> bool:
        return any(r.annotator_id == annotator_id for r in self.records)

    def snapshot(self) -> dict:
        return {
            "pair": self.pair.to_record(),
            "status": self.status.value,
            "claimed_by": self.claimed_by,
            "claimed_role": self.claimed_role.value if self.claimed_role else None,
            "lease_expiry": self.lease_expiry,
            "prior_status": self.prior_status.value,
            "records": [
                [r.annotator_id, r.decision.value, r.role.value, r.timestamp]
                for r in self.records
            ],
            "final_label": self.final_label.value if self.final_label else None,
            "discard_reason": self.discard_reason.value if self.discard_reason else None,
        }

    @classmethod
    def from_snapshot(cls, rec: dict) -> "PairState":
        pair = PointPair.from_record(rec["pair"])
        return cls(
            pair=pair,
            status=PairStatus(rec["status"]),
            claimed_by=rec["claimed_by"],
            claimed_role=Role(rec["claimed_role"]) if rec["claimed_role"] else None,
            lease_expiry=rec["lease_expiry"],
            prior_status=PairStatus(rec["prior_status"]),
            records=[
                AnnotationRecord(pair.pair_id, a, Decision(d), Role(r), ts)
                for a, d, r, ts in rec["records"]
            ],
            final_label=PairLabel(rec["final_label"]) if rec["final_label"] else None,
            discard_reason=(
                DiscardReason(rec["discard_reason"]) if rec["discard_reason"] else None
            ),
        )


@dataclass
class Claim:
    pair: PointPair
    role: Role
    lease_expiry: float


class AnnotationService:
    """Single-writer annotation queue over an append-only event log.

    All transitions are serialized by one lock; concurrent callers are safe.
    Pass `clock` to control time in tests.
    """

    def __init__(
        self,
        log_path: str | Path | None = None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock=time.time,
    ):
        self._lock = threading.RLock()
        self._lease_seconds = lease_seconds
        self._clock = clock
        self._annotators: set[str] = set()
        self._pairs: dict[str, PairState] = {}
        self._events_applied = 0
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_file = None
        if self._log_path is not None and self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        self._apply(json.loads(line))

    # -- event plumbing ----------------------------------------------------

    def _append(self, event: dict):
        if self._log_path is not None:
            if self._log_file is None:
                self._log_file = open(self._log_path, "a", encoding="utf-8")
            self._log_file.write(json.dumps(event, sort_keys=True) + "\n")
            self._log_file.flush()
        self._apply(event)

    def _apply(self, event: dict):
        kind = event["event"]
        if kind == "register":
            self._annotators.add(event["annotator_id"])
        elif kind == "enqueue":
            pair = PointPair.from_record(event["pair"])
            self._pairs[pair.pair_id] = PairState(pair=pair)
        elif kind == "claim":
            st = self._pairs[event["pair_id"]]
            st.prior_status = st.status
            st.status = PairStatus.CLAIMED
            st.claimed_by = event["annotator_id"]
            st.claimed_role = Role(event["role"])
            st.lease_expiry = event["lease_expiry"]
        elif kind == "expire":
            st = self._pairs[event["pair_id"]]
            st.status = st.prior_status
            st.claimed_by = None
            st.claimed_role = None
            st.lease_expiry = None
        elif kind == "submit":
            st = self._pairs[event["pair_id"]]
            record = AnnotationRecord(
                pair_id=event["pair_id"],
                annotator_id=event["annotator_id"],
                decision=Decision(event["decision"]),
                role=Role(event["role"]),
                timestamp=event["ts"],
            )
            st.records.append(record)
            st.claimed_by = None
            st.claimed_role = None
            st.lease_expiry = None
            self._advance(st, record)
        else:
            raise ValueError(f"unknown event type {kind!r}")
        self._events_applied += 1

    def _advance(self, st: PairState, record: AnnotationRecord):
        if record.decision is Decision.SKIP:
            st.status = PairStatus.DISCARDED
            st.discard_reason = DiscardReason.SKIPPED
            return
        if record.role is Role.PRIMARY:
            st.status = PairStatus.AWAITING_VERIFICATION
            return
        primary = next(r for r in st.records if r.role is Role.PRIMARY)
        if record.decision is not primary.decision:
            st.status = PairStatus.DISCARDED
            st.discard_reason = DiscardReason.CONTESTED
            return
        verifier_count = sum(1 for r in st.records if r.role is Role.VERIFIER)
        if verifier_count >= 2:
            st.status = PairStatus.FINALIZED
            st.final_label = _DECISION_LABEL[record.decision]
        else:
            st.status = PairStatus.AWAITING_VERIFICATION

    def _expire_stale(self, now: float):
        for st in self._pairs.values():
            if st.status is PairStatus.CLAIMED and st.lease_expiry is not None:
                if st.lease_expiry <= now:
                    self._append({"event": "expire", "pair_id": st.pair.pair_id, "ts": now})

    # -- public operations ---------------------------------------------------

    def register_annotator(self, annotator_id: str):
        with self._lock:
            if annotator_id not in self._annotators:
                self._append(
                    {"event": "register", "annotator_id": annotator_id, "ts": self._clock()}
                )

    def enqueue(self, pairs) -> int:
        """Add unlabeled pairs to the queue; already-known pair_ids are skipped."""
        added = 0
        with self._lock:
            now = self._clock()
            for pair in pairs:
                if pair.pair_id in self._pairs:
                    continue
                self._append({"event": "enqueue", "pair": pair.to_record(), "ts": now})
                added += 1
        return added

    def _check_registered(self, annotator_id: str):
        if annotator_id not in self._annotators:
            raise UnknownAnnotator(f"annotator {annotator_id!r} is not registered")

    def claim_next(self, annotator_id: str) -> Claim | None:
        """Atomically lease the first pair this annotator may work on.

        Queued pairs are claimed in the Primary role, awaiting-verification
        pairs in the Verifier role; a pair never goes to an annotator who
        already recorded a decision on it.  Returns None when nothing is
        available.
        """
        with self._lock:
            self._check_registered(annotator_id)
            now = self._clock()
            self._expire_stale(now)
            for st in self._pairs.values():
                if st.status is PairStatus.QUEUED:
                    role = Role.PRIMARY
                elif st.status is PairStatus.AWAITING_VERIFICATION:
                    role = Role.VERIFIER
                else:
                    continue
                if st.touched_by(annotator_id):
                    continue
                expiry = now + self._lease_seconds
                self._append(
                    {
                        "event": "claim",
                        "pair_id": st.pair.pair_id,
                        "annotator_id": annotator_id,
                        "role": role.value,
                        "lease_expiry": expiry,
                        "ts": now,
                    }
                )
                return Claim(pair=st.pair, role=role, lease_expiry=expiry)
            return None

    def submit(self, annotator_id: str, pair_id: str, decision: Decision) -> PairState:
        """Record a decision for a held lease and advance the pair's state."""
        with self._lock:
            self._check_registered(annotator_id)
            now = self._clock()
            self._expire_stale(now)
            st = self._pairs.get(pair_id)
            if st is None:
                raise LeaseExpired(f"no such pair {pair_id!r}")
            if st.touched_by(annotator_id):
                raise DuplicateSubmission(
                    f"annotator {annotator_id!r} already decided pair {pair_id!r}"
                )
            if st.status is not PairStatus.CLAIMED or st.claimed_by != annotator_id:
                raise LeaseExpired(
                    f"annotator {annotator_id!r} holds no active lease on {pair_id!r}"
                )
            self._append(
                {
                    "event": "submit",
                    "pair_id": pair_id,
                    "annotator_id": annotator_id,
                    "decision": decision.value,
                    "role": st.claimed_role.value,
                    "ts": now,
                }
            )
            return st

    def progress(self) -> dict:
        """Counts per status and per (scenario, status); reconciles with the log."""
        with self._lock:
            by_status = {s.value: 0 for s in PairStatus}
            by_scenario: dict[str, dict] = {}
            for st in self._pairs.values():
                by_status[st.status.value] += 1
                row = by_scenario.setdefault(
                    st.pair.scenario, {s.value: 0 for s in PairStatus}
                )
                row[st.status.value] += 1
            return {
                "total": len(self._pairs),
                "by_status": by_status,
                "by_scenario": by_scenario,
            }

    def pair_state(self, pair_id: str) -> PairState:
        with self._lock:
            return self._pairs[pair_id]

    def finalized_pairs(self) -> list[PointPair]:
        """Finalized pairs as labeled PointPairs (label_source = human consensus)."""
        with self._lock:
            out = []
            for st in self._pairs.values():
                if st.status is PairStatus.FINALIZED:
                    p = st.pair
                    out.append(
                        PointPair(
                            pair_id=p.pair_id,
                            image_id=p.image_id,
                            p1=p.p1,
                            p2=p.p2,
                            scenario=p.scenario,
                            origin=p.origin,
                            label=st.final_label,
                            label_source=LabelSource.HUMAN_CONSENSUS,
                        )
                    )
            return out

    def apply_to_benchmark(self, manifest: BenchmarkManifest) -> BenchmarkManifest:
        """Fold human outcomes back into a benchmark manifest.

        Finalized pairs receive their consensus label; discarded pairs are
        marked Skipped so scoring excludes them.  Pairs still in flight stay
        unlabeled.
        """
        with self._lock:
            out = []
            for pair in manifest:
                st = self._pairs.get(pair.pair_id)
                if st is None or pair.label is not PairLabel.UNLABELED:
                    out.append(pair)
                    continue
                if st.status is PairStatus.FINALIZED:
                    pair.label = st.final_label
                    pair.label_source = LabelSource.HUMAN_CONSENSUS
                elif st.status is PairStatus.DISCARDED:
                    pair.label = PairLabel.SKIPPED
                    pair.label_source = LabelSource.HUMAN_CONSENSUS
                out.append(pair)
            return BenchmarkManifest(out)

    # -- introspection -------------------------------------------------------

    @property
    def events_applied(self) -> int:
        return self._events_applied

    def state_snapshot(self) -> dict:
        """Canonical state for replay comparison: equal snapshots, equal state.

        Pairs are a list in queue order; claim scanning depends on that order,
        so it is part of the state.
        """
        with self._lock:
            return {
                "annotators": sorted(self._annotators),
                "pairs": [st.snapshot() for st in self._pairs.values()],
                "events_applied": self._events_applied,
            }

    def write_snapshot(self, path: str | Path):
        """Persist current state plus the applied-event count for fast restart."""
        with self._lock:
            Path(path).write_text(
                json.dumps(self.state_snapshot(), sort_keys=True), encoding="utf-8"
            )

    def close(self):
        with self._lock:
            if self._log_file is not None:
                self._log_file.close()
                self._log_file = None


def replay_log(
    log_path: str | Path,
    snapshot_path: str | Path | None = None,
    lease_seconds: float = DEFAULT_LEASE_SECONDS,
    clock=time.time,
) -> AnnotationService:
    """Rebuild a service from its event log.

    With a snapshot, events it already covers are skipped and only the tail
    of the log is folded in; the result is identical to a full replay.
    """
    if snapshot_path is None or not Path(snapshot_path).exists():
        return AnnotationService(log_path=log_path, lease_seconds=lease_seconds, clock=clock)
    snap = json.loads(Path(snapshot_path).read_text(encoding="utf-8"))
    svc = AnnotationService(log_path=None, lease_seconds=lease_seconds, clock=clock)
    svc._annotators = set(snap["annotators"])
    states = [PairState.from_snapshot(rec) for rec in snap["pairs"]]
    svc._pairs = {st.pair.pair_id: st for st in states}
    svc._events_applied = snap["events_applied"]
    with open(log_path, encoding="utf-8") as f:
        for i, line in enumerate(f):
            if i < snap["events_applied"] or not line.strip():
                continue
            svc._apply(json.loads(line))
    svc._log_path = Path(log_path)
    return svc
