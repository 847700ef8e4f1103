"""The wrapper over real fallback protocols instead of the legality oracle.

Mixed inputs force the slow path; the fallback then runs a concrete
synchronous consensus protocol matched to the failure model:

  benign     -> flood-and-minimum over f+1 rounds
  classical  -> alternating-king phases
  external   -> information-gathering tree relay (binary domain)
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


def demo(label: str, sc: Scenario) -> None:
    trace = run(sc)
    sync = next(ev for ev in trace.events if ev["ev"] == "sync_base")
    decided = sorted({r.value for r in trace.decisions.values()})
    print(f"--- {label}")
    print(
        f"  {sync['protocol']}: {sync['rounds']} rounds, "
        f"{sync['messages']} messages"
    )
    print(f"  all correct nodes decided {[v.decode() for v in decided]}")
    print()


def main() -> None:
    demo(
        "benign n=3 f=1, values v/u/v",
        Scenario(
            cfg=OptimizerConfig(3, 1, FullValue(V), FailureModel.BENIGN),
            initial_values=(FullValue(V), FullValue(U), FullValue(V)),
            faults=(Correct(),) * 3,
            schedule=Seeded(3),
            base="floodset",
        ),
    )
    demo(
        "classical n=5 f=1, values v/u/v/u/v",
        Scenario(
            cfg=OptimizerConfig(
                5, 1, FullValue(V), FailureModel.BYZANTINE_CLASSICAL
            ),
            initial_values=tuple(
                FullValue(V if i % 2 == 0 else U) for i in range(5)
            ),
            faults=(Correct(),) * 5,
            schedule=Seeded(5),
            base="phase_king",
        ),
    )
    demo(
        "external n=4 f=1, binary domain, values v/u/v/u",
        Scenario(
            cfg=OptimizerConfig(
                4,
                1,
                FullValue(V),
                FailureModel.BYZANTINE_EXTERNAL,
                binary_domain=True,
            ),
            initial_values=(FullValue(V), FullValue(U), FullValue(V), FullValue(U)),
            faults=(Correct(),) * 4,
            schedule=Seeded(9),
            base="eig",
        ),
    )


if __name__ == "__main__":
    main()
