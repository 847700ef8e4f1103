"""Heavy validity proofs stay home on the fast path.

Values carry a proof 64x their own size.  In the proof-aware variant the
first exchange ships bare payloads; proofs only move if the views disagree
and the nodes escalate to a full exchange.  This prints the byte ledger
for a unanimous run (zero proof bytes) next to a split run (proofs paid).
"""

from biased_consensus import (
    Correct,
    FailureModel,
    FullValue,
    OptimizerConfig,
    Scenario,
    Seeded,
    Variant,
    run,
)

V = b"v"
U = b"u"
PV = b"p" * 64
PU = b"q" * 64


def ledger(label: str, values: tuple[FullValue, ...]) -> None:
    cfg = OptimizerConfig(
        4,
        1,
        FullValue(V, PV),
        FailureModel.BYZANTINE_EXTERNAL,
        variant=Variant.PROOF_AWARE,
    )
    sc = Scenario(
        cfg=cfg,
        initial_values=values,
        faults=(Correct(),) * 4,
        schedule=Seeded(1),
    )
    trace = run(sc)
    print(f"--- {label}")
    total_v = total_p = 0
    for kind, c in sorted(trace.counters.items()):
        print(
            f"  {kind:8s} {c['msgs']:3d} msgs, "
            f"{c['val_bytes']:4d} value bytes, {c['proof_bytes']:4d} proof bytes"
        )
        total_v += c["val_bytes"]
        total_p += c["proof_bytes"]
    print(f"  total    {total_v + total_p} bytes on the wire")
    print()


def main() -> None:
    ledger("all four prefer v", tuple(FullValue(V, PV) for _ in range(4)))
    ledger(
        "views split v/u",
        (FullValue(V, PV), FullValue(U, PU), FullValue(V, PV), FullValue(U, PU)),
    )


if __name__ == "__main__":
    main()
