"""Deterministic network simulator: scheduling, faults, replay, audits."""

from __future__ import annotations

import dataclasses

import pytest

from biased_consensus import (
    ArbitraryScript,
    Byzantine,
    Correct,
    CrashAt,
    DecisionPath,
    Envelope,
    Equivocate,
    FailureModel,
    FullValue,
    ImpersonationAttempt,
    MimicHonest,
    MsgKind,
    NonQuiescence,
    OptimizerConfig,
    Runner,
    Scenario,
    ScenarioInvalid,
    Scripted,
    Seeded,
    Silent,
    byzantine_emit,
    run,
    validate_scenario,
)

V = b"v"
U = b"u"


def _scenario(n, f, model, values, faults, schedule, **kw):
    cfg = OptimizerConfig(n=n, f=f, preferred=FullValue(V), model=model)
    return Scenario(
        cfg=cfg,
        initial_values=tuple(FullValue(v) for v in values),
        faults=faults,
        schedule=schedule,
        **kw,
    )


def _benign3(values=(V, V, V), faults=None, schedule=None):
    return _scenario(
        3,
        1,
        FailureModel.BENIGN,
        values,
        faults or (Correct(), Correct(), Correct()),
        schedule or Seeded(7),
    )


def test_seeded_run_is_deterministic():
    a = run(_benign3(schedule=Seeded(7)))
    b = run(_benign3(schedule=Seeded(7)))
    assert a.serialize() == b.serialize()
    assert a.meta["seed"] == 7


def test_script_replay_reproduces_a_seeded_run():
    first = run(_benign3(values=(V, U, V), schedule=Seeded(21)))
    replay = run(_benign3(values=(V, U, V), schedule=Scripted(tuple(first.script))))
    assert replay.events == first.events
    assert replay.decisions == first.decisions
    assert replay.counters == first.counters
    assert replay.violations == first.violations
    assert replay.final_phases == first.final_phases


def test_all_preferred_fast_path_counters():
    trace = run(_benign3())
    assert all(r.path is DecisionPath.FAST for r in trace.decisions.values())
    assert trace.counters["proposal"] == {"msgs": 6, "val_bytes": 6, "proof_bytes": 0}
    assert trace.counters["base"]["msgs"] == 0
    assert trace.counters["full"]["msgs"] == 0
    assert trace.violations == []


def test_mixed_inputs_settle_through_the_base():
    for seed in range(12):
        trace = run(_benign3(values=(V, U, V), schedule=Seeded(seed)))
        assert trace.violations == []
        assert len({r.value for r in trace.decisions.values()}) == 1
        assert any(ev["ev"] == "pick" for ev in trace.events)


def test_crash_from_start_is_silent_and_unreachable():
    trace = run(_benign3(faults=(Correct(), Correct(), CrashAt(0))))
    assert trace.final_phases[2] == "crashed"
    assert 2 not in trace.decisions
    assert trace.violations == []
    # Two live broadcasters, two destinations each; nothing is ever
    # delivered to the dead node.
    assert trace.counters["proposal"]["msgs"] == 4
    assert not any(
        ev["ev"] == "deliver" and ev["dst"] == 2 for ev in trace.events
    )


def test_late_crash_respects_its_seeded_firing_index():
    trace = run(_benign3(faults=(Correct(), Correct(), CrashAt(3))))
    crash_events = [ev for ev in trace.events if ev["ev"] == "crash"]
    assert len(crash_events) == 1
    assert crash_events[0]["i"] >= 3
    assert trace.final_phases[2] == "crashed"
    assert trace.violations == []
    assert trace.decisions[0].value == trace.decisions[1].value == V


def test_drop_of_live_senders_envelope_is_rejected():
    rn = Runner(_benign3())
    rn.start_batch()
    with pytest.raises(ScenarioInvalid):
        rn.apply_choice(("drop", 0, 1, "proposal", 0))


def test_script_with_impossible_step_deadlocks():
    sc = _benign3(schedule=Scripted(((("deliver", 0, 1, "proposal", 7)),)))
    with pytest.raises(ScenarioInvalid):
        run(sc)


def test_script_with_leftover_steps_is_rejected():
    first = run(_benign3(schedule=Seeded(7)))
    padded = tuple(first.script) + (("timer", 0),)
    with pytest.raises(ScenarioInvalid):
        run(_benign3(schedule=Scripted(padded)))


def test_event_budget_exhaustion(monkeypatch):
    monkeypatch.setenv("SIM_EVENT_BUDGET", "2")
    with pytest.raises(NonQuiescence):
        run(_benign3())


def test_envelope_is_frozen_and_caches_its_kind():
    env = Envelope(0, 0, 1, MsgKind.PROPOSAL, V, b"", 0)
    assert env.kindval == "proposal"
    with pytest.raises(dataclasses.FrozenInstanceError):
        env.val = U


def test_machine_nodes_classification():
    classical = _scenario(
        5,
        1,
        FailureModel.BYZANTINE_CLASSICAL,
        (V,) * 5,
        (Correct(), Correct(), Correct(), Correct(), Byzantine(Silent())),
        Seeded(0),
    )
    assert Runner(classical).machine_nodes == frozenset({0, 1, 2, 3})
    mimic = _scenario(
        5,
        1,
        FailureModel.BYZANTINE_CLASSICAL,
        (V,) * 5,
        (Correct(),) * 4 + (Byzantine(MimicHonest(FullValue(U))),),
        Seeded(0),
    )
    assert Runner(mimic).machine_nodes == frozenset(range(5))
    # A later crasher still runs a machine until the crash fires; a
    # from-the-start crasher never does.
    late = _benign3(faults=(Correct(), Correct(), CrashAt(4)))
    assert Runner(late).machine_nodes == frozenset({0, 1, 2})
    immediate = _benign3(faults=(Correct(), Correct(), CrashAt(0)))
    assert Runner(immediate).machine_nodes == frozenset({0, 1})


def test_impersonation_is_rejected_at_start():
    sc = _scenario(
        5,
        1,
        FailureModel.BYZANTINE_CLASSICAL,
        (V,) * 5,
        (Correct(),) * 4
        + (Byzantine(ArbitraryScript(((3, 0, MsgKind.PROPOSAL, U, b""),))),),
        Seeded(0),
    )
    with pytest.raises(ImpersonationAttempt):
        run(sc)


def test_scripted_byzantine_send_validation():
    with pytest.raises(ScenarioInvalid):
        byzantine_emit(
            ArbitraryScript(((4, 4, MsgKind.PROPOSAL, U, b""),)), 4, 5
        )
    with pytest.raises(ScenarioInvalid):
        byzantine_emit(
            ArbitraryScript(((4, 0, MsgKind.PROPOSAL, b"", b""),)), 4, 5
        )


def test_equivocation_splits_the_audience():
    sends = byzantine_emit(
        Equivocate(val_a=V, val_b=U, targets_a=frozenset({0, 2})), 4, 5
    )
    assert len(sends) == 4
    assert all(src == 4 for src, *_ in sends)
    got = {dst: val for _, dst, _, val, _ in sends}
    assert got == {0: V, 1: U, 2: V, 3: U}


def test_validate_scenario_rejections():
    ok = _benign3()
    assert validate_scenario(ok) is ok
    bad_lengths = _benign3()
    bad_lengths.initial_values = (FullValue(V),)
    with pytest.raises(ScenarioInvalid):
        validate_scenario(bad_lengths)
    with pytest.raises(ScenarioInvalid):
        validate_scenario(
            _benign3(faults=(Correct(), Correct(), Byzantine(Silent())))
        )
    with pytest.raises(ScenarioInvalid):
        validate_scenario(
            _benign3(faults=(Correct(), CrashAt(0), CrashAt(0)))
        )
    proofy = _benign3()
    proofy.initial_values = (FullValue(V, b"p"), FullValue(V), FullValue(V))
    with pytest.raises(ScenarioInvalid):
        validate_scenario(proofy)
    mismatched_base = _benign3()
    mismatched_base.base = "phase_king"
    with pytest.raises(ScenarioInvalid):
        validate_scenario(mismatched_base)


def test_concrete_floodset_base_settles_mixed_inputs():
    sc = _scenario(
        3,
        1,
        FailureModel.BENIGN,
        (V, U, V),
        (Correct(),) * 3,
        Seeded(3),
        base="floodset",
    )
    trace = run(sc)
    assert trace.meta["base"] == "floodset"
    assert trace.violations == []
    assert len({r.value for r in trace.decisions.values()}) == 1
    sync = [ev for ev in trace.events if ev["ev"] == "sync_base"]
    assert len(sync) == 1 and sync[0]["protocol"] == "floodset"
    # Counter covers the protocol's traffic plus any wakeup envelopes sent
    # to fast-decided bystanders.
    assert trace.counters["base"]["msgs"] >= sync[0]["messages"] > 0


def test_concrete_phase_king_base_settles_mixed_inputs():
    sc = _scenario(
        5,
        1,
        FailureModel.BYZANTINE_CLASSICAL,
        (V, U, V, U, V),
        (Correct(),) * 5,
        Seeded(5),
        base="phase_king",
    )
    trace = run(sc)
    assert trace.violations == []
    assert len({r.value for r in trace.decisions.values()}) == 1
    assert any(ev["ev"] == "sync_base" for ev in trace.events)


def test_concrete_eig_base_settles_mixed_inputs():
    cfg = OptimizerConfig(
        n=4,
        f=1,
        preferred=FullValue(V),
        model=FailureModel.BYZANTINE_EXTERNAL,
        binary_domain=True,
    )
    sc = Scenario(
        cfg=cfg,
        initial_values=(FullValue(V), FullValue(U), FullValue(V), FullValue(U)),
        faults=(Correct(),) * 4,
        schedule=Seeded(9),
        base="eig",
    )
    trace = run(sc)
    assert trace.violations == []
    assert len({r.value for r in trace.decisions.values()}) == 1
    assert any(ev["ev"] == "sync_base" for ev in trace.events)


def test_mimicking_byzantine_runs_a_machine_with_its_own_value():
    sc = _scenario(
        5,
        1,
        FailureModel.BYZANTINE_CLASSICAL,
        (V,) * 5,
        (Correct(),) * 4 + (Byzantine(MimicHonest(FullValue(U))),),
        Seeded(2),
    )
    trace = run(sc)
    assert trace.violations == []
    # The mimic broadcast u, so nobody saw a unanimous first round.
    assert all(r.path is DecisionPath.BASE for n, r in trace.decisions.items() if n < 4)
