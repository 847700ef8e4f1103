"""Staged worst cases: some nodes decide fast, the rest catch up via the base.

Replays the scripted scenarios where the adversary (message delays, crashes,
equivocation) splits the system -- part of the network decides in one round,
the rest fall back -- and agreement on the preferred value still holds.
"""

import sys

from biased_consensus import (
    figure1_benign,
    figure2_classical,
    figure3_external,
    run_named,
)


def main() -> int:
    rc = 0
    for f in (1, 2):
        for builder in (figure1_benign, figure2_classical, figure3_external):
            ns = builder(f)
            trace, ok, detail = run_named(ns)
            fast = sorted(
                n for n, r in trace.decisions.items() if r.path.value == "fast"
            )
            slow = sorted(
                n for n, r in trace.decisions.items() if r.path.value == "base"
            )
            values = {r.value for r in trace.decisions.values()}
            print(f"{ns.name}: {'ok' if ok else 'UNEXPECTED: ' + detail}")
            print(f"  fast deciders: {fast}")
            print(f"  via fallback:  {slow}")
            print(f"  agreed on:     {sorted(v.decode() for v in values)}")
            if not ok:
                rc = 1
    return rc


if __name__ == "__main__":
    sys.exit(main())
