"""One round to a decision when everyone already agrees.

Runs the wrapper over all three failure models with every node proposing
the preferred value: each node decides after a single all-to-all exchange
and the fallback consensus instance never sees a message.  A final benign
run with one dissenting node shows the fallback engaging instead.
"""

from biased_consensus import (
    Correct,
    FailureModel,
    FullValue,
    OptimizerConfig,
    Scenario,
    Seeded,
    run,
)

V = b"v"
U = b"u"


def show(label: str, sc: Scenario) -> None:
    trace = run(sc)
    paths = sorted(
        (node, rec.value.decode(), rec.path.value)
        for node, rec in trace.decisions.items()
    )
    print(f"--- {label}")
    for node, value, path in paths:
        print(f"  node {node}: decided {value!r} via {path}")
    for kind, c in trace.counters.items():
        if c["msgs"]:
            print(f"  {kind} traffic: {c['msgs']} messages, {c['val_bytes']} value bytes")
    if not trace.counters["base"]["msgs"]:
        print("  fallback instance: silent")
    print()


def main() -> None:
    for model, n, f in [
        (FailureModel.BENIGN, 5, 2),
        (FailureModel.BYZANTINE_CLASSICAL, 9, 2),
        (FailureModel.BYZANTINE_EXTERNAL, 7, 2),
    ]:
        cfg = OptimizerConfig(n, f, FullValue(V), model)
        sc = Scenario(
            cfg=cfg,
            initial_values=tuple(FullValue(V) for _ in range(n)),
            faults=(Correct(),) * n,
            schedule=Seeded(42),
        )
        show(f"{model.value}, n={n}, f={f}, unanimous preference", sc)

    cfg = OptimizerConfig(5, 2, FullValue(V), FailureModel.BENIGN)
    sc = Scenario(
        cfg=cfg,
        initial_values=tuple(FullValue(U if i == 0 else V) for i in range(5)),
        faults=(Correct(),) * 5,
        schedule=Seeded(42),
    )
    show("benign, n=5, f=2, one dissenter -- fallback takes over", sc)


if __name__ == "__main__":
    main()
