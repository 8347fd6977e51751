"""The human annotation loop: claims, triple-checking, and the event log.

Disagreement pairs from the benchmark build go to annotators.  One Primary
decision then two blind Verifier decisions finalize a pair; any skip or
disagreement discards it.  Every transition is one line in an append-only
log, and replaying that log reproduces the service state exactly.
"""

import tempfile
from pathlib import Path

from depthlab import AnnotationService, Decision
from depthlab.annotation import replay_log
from depthlab.benchmark import BenchmarkManifest, PairOrigin, PointPair

root = Path(tempfile.mkdtemp(prefix="depthlab_annotation_"))
log_path = root / "events.jsonl"

pairs = [
    PointPair(f"pair#{i}", "img0", (3, 4 + i), (10, 2 + i), "indoor", PairOrigin.AUTO_SAMPLED)
    for i in range(3)
]
manifest = BenchmarkManifest([p for p in pairs])

svc = AnnotationService(log_path, lease_seconds=600.0)
for name in ("alice", "bob", "carol"):
    svc.register_annotator(name)
svc.enqueue(pairs)
print(f"queued {svc.progress()['by_status']['queued']} pairs\n")

# pair#0: everyone agrees -> finalized.
for name in ("alice", "bob", "carol"):
    claim = svc.claim_next(name)
    print(f"{name} claims {claim.pair.pair_id} as {claim.role.value}")
    svc.submit(name, claim.pair.pair_id, Decision.FIRST_CLOSER)
print(f"pair#0 -> {svc.pair_state('pair#0').status.value}\n")

# pair#1: a verifier disagrees -> contested, discarded.
svc.submit("alice", svc.claim_next("alice").pair.pair_id, Decision.FIRST_CLOSER)
svc.submit("bob", svc.claim_next("bob").pair.pair_id, Decision.SECOND_CLOSER)
st = svc.pair_state("pair#1")
print(f"pair#1 -> {st.status.value} ({st.discard_reason.value})\n")

# pair#2: the primary annotator skips -> discarded.
svc.submit("carol", svc.claim_next("carol").pair.pair_id, Decision.SKIP)
st = svc.pair_state("pair#2")
print(f"pair#2 -> {st.status.value} ({st.discard_reason.value})\n")

print("progress:", svc.progress()["by_status"])

merged = svc.apply_to_benchmark(manifest)
print("\nlabels folded back into the benchmark:")
for p in merged:
    print(f"  {p.pair_id}: {p.label.value} (source {p.label_source.value})")

replayed = replay_log(log_path)
print(f"\nevent log lines: {len(log_path.read_text().splitlines())}")
print(f"replay reproduces state exactly: {replayed.state_snapshot() == svc.state_snapshot()}")
print("\nto serve this queue over HTTP (plus the browser UI in frontend/dist):")
print("  depthlab serve-annotation --benchmark queue.jsonl --images images.jsonl \\")
print("      --log events.jsonl --annotators alice,bob,carol --ui-dir frontend/dist")
