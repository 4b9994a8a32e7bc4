#!/usr/bin/env python3
"""Smoke test for the polyroute Python bindings.

Builds nothing itself: it locates the compiled extension under
target/{release,debug}, stages it as an importable module, and drives the
engine end to end — text routing, a vision query plus its follow-up, the
cost ledger, feedback, and the embedding helpers.

Run after `cargo build -p polyroute-py` (or --release):

    python3 python/smoke_test.py
"""

import json
import os
import shutil
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def stage_extension() -> str:
    candidates = [
        os.path.join(REPO, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libpolyroute.so", "polyroute.so", "libpolyroute.dylib")
    ]
    built = next((p for p in candidates if os.path.exists(p)), None)
    if built is None:
        sys.exit("extension not built; run `cargo build -p polyroute-py` first")
    stage = tempfile.mkdtemp(prefix="polyroute-py-")
    shutil.copy(built, os.path.join(stage, "polyroute.so"))
    return stage


def main() -> None:
    sys.path.insert(0, stage_extension())
    import polyroute

    checks = 0

    def ok(cond: bool, label: str) -> None:
        nonlocal checks
        if not cond:
            sys.exit(f"FAIL: {label}")
        checks += 1
        print(f"ok: {label}")

    # Embedding helpers.
    v1 = polyroute.embed_text("solve this integral")
    v2 = polyroute.embed_text("compute the integral")
    v3 = polyroute.embed_text("paint a sunset")
    ok(len(v1) == 256, "embeddings have 256 dimensions")
    ok(
        polyroute.cosine(v1, v2) > polyroute.cosine(v1, v3),
        "related text scores above unrelated",
    )

    config = json.loads(polyroute.default_config_json())
    ok(len(config["routes"]) >= 10, "bundled config carries the route registry")

    engine = polyroute.Engine(seed=7)
    ok(engine.seed == 7, "seed override sticks")

    # Simple text query stays on the efficient tier.
    r = engine.handle(text="summarize this memo about the harbor survey")
    ok(r["decision"]["chosen"]["id"] == "eff-write", "summarization routes efficient")
    ok(abs(r["cost_charged"] - 0.05) < 1e-9, "efficient call costs 0.05 units")

    # Escalation for a heavyweight request.
    r = engine.handle(
        text=(
            "Prove the theorem that the integral of f(x) = 3*x^2 + 2*x over [0, 2] "
            "equals the stated bound, compute the derivative of g(x) = x^3 - 3*x at "
            "x = 2, and calculate the probability that two fair dice sum to seven "
            "(express every answer as an exact fraction)."
        )
    )
    ok(r["decision"]["chosen"]["id"] == "premium-text", "heavy math escalates to premium")

    # A vision query and its follow-up in one session.
    png = bytes([0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 1, 2, 3])
    r = engine.handle(
        text="describe this photo of a red car",
        attachments=[("car.png", "image/png", png)],
        session="s-demo",
        query_id="q-photo",
    )
    ok(r["decision"]["chosen"]["id"] == "pipe-vision", "image question hits the vision pipeline")
    follow = engine.handle(
        text="what color is the car in it?", session="s-demo", query_id="q-follow"
    )
    ok(follow["category"] == "text_moe", "anaphoric follow-up lands on text_moe")
    ok(
        follow["intent"]["followup_target"] == "q-photo",
        "follow-up links back to the photo query",
    )
    ok(follow["decision"]["chosen"]["id"] == "moe-followup", "follow-up uses the moe route")

    # Open-source-only policy never selects premium.
    r = engine.handle(
        text="generate an image of a lighthouse at dawn", policy="open_source_only"
    )
    ok(r["decision"]["chosen"]["tier"] == "open_source", "open-only policy stays open")

    # Multi-step request goes through the agent graph with fusion.
    r = engine.handle(text="translate the field notes, then chart the totals by week")
    ok(r["fusion"] is not None, "complex request produces a fusion trace")
    weights = [c["weight"] for c in r["fusion"]["components"]]
    ok(abs(sum(weights) - 1.0) < 1e-9, "fusion weights sum to one")

    # Ledger and feedback.
    ledger = engine.ledger()
    ok(ledger["total_calls"] >= 6, "ledger saw every call")
    entry = engine.feedback("q-photo", "routing_error", problem="wrong_modality")
    ok("retried" in entry["outcome"], "routing-error feedback produced a retry")

    # Determinism across engines with the same seed.
    a = polyroute.Engine(seed=11).handle(text="why is the sky blue", query_id="d1")
    b = polyroute.Engine(seed=11).handle(text="why is the sky blue", query_id="d1")
    a.pop("decision_path_ms")
    b.pop("decision_path_ms")
    ok(a == b, "same seed gives identical responses (modulo wall clock)")

    print(f"\nsmoke test passed: {checks} checks")


if __name__ == "__main__":
    main()
