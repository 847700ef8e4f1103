"""Proof-aware optimizer variant for the external-validity model.

First-round broadcasts carry only the payload, never the proof: on the fast
path (everyone prefers the same value) no proof byte ever crosses the wire.
Only when some node sees a mixed first round does it broadcast its full value
(payload + proof) and wait for n - f full values before running the adoption
rule over them.  Any node receiving a full value answers once with its own
full value so the sender's wait can complete, and that upper handler stays
armed even after a fast decision.
"""

from __future__ import annotations

from .adoption import VoteSet, adoption_criteria_full
from .core import (
    AlreadyStarted,
    ConsistencyViolation,
    FullValue,
    MsgKind,
    NodeId,
    OptimizerConfig,
    PreconditionViolation,
    UnknownSender,
    ValidityPredicate,
    always_valid,
)
from .optimizer import (
    Action,
    Broadcast,
    Decide,
    DecisionPath,
    Phase,
    ProposeToBase,
    SendTo,
)


class ProofAwareNode:
    """State machine for one correct node running the proof-aware variant."""

    def __init__(
        self,
        cfg: OptimizerConfig,
        node_id: NodeId,
        my_value: FullValue,
        valid: ValidityPredicate = always_valid,
    ) -> None:
        if not 0 <= node_id < cfg.n:
            raise UnknownSender(f"node id {node_id} outside [0, {cfg.n})")
        self.cfg = cfg
        self.node_id = node_id
        self.my_value = my_value
        self.valid = valid
        self.votes = VoteSet()
        self.fullvals: dict[NodeId, FullValue] = {}
        self.replied_to: set[NodeId] = set()
        self.broadcast_full = False
        self.full_evaluated = False
        self.phase = Phase.COLLECTING
        self.joined_base = False
        self.started = False
        self.decision: Decide | None = None

    # -- event handlers ------------------------------------------------------

    def start(self) -> list[Action]:
        if self.started:
            raise AlreadyStarted(f"node {self.node_id} started twice")
        self.started = True
        self.votes.add(self.node_id, self.my_value.val)
        # Payload only; the proof stays local unless the fast path fails.
        return [Broadcast(MsgKind.PROPOSAL, self.my_value.val)]

    def on_proposal(self, sender: NodeId, val: bytes) -> list[Action]:
        self._check_sender(sender)
        if not self.votes.add(sender, val):
            return []
        if self.phase is Phase.COLLECTING and len(self.votes) == self.cfg.threshold:
            if self.votes.all_equal(self.cfg.preferred.val):
                self.phase = Phase.FAST_DECIDED
                self.decision = Decide(self.cfg.preferred.val, DecisionPath.FAST)
                return [self.decision]
            # Mixed first round: switch to the full-value exchange.
            self.phase = Phase.FULL_EXCHANGE
            self.fullvals.setdefault(self.node_id, self.my_value)
            self.broadcast_full = True
            actions: list[Action] = [
                Broadcast(MsgKind.FULL, self.my_value.val, self.my_value.proof)
            ]
            # Full values that arrived early may already satisfy the wait.
            actions.extend(self._maybe_finish_exchange())
            return actions
        return []

    def on_full(self, sender: NodeId, value: FullValue) -> list[Action]:
        """Record a full value (first per sender wins) and answer once.

        Armed in every phase, including after a fast decision: the sender is
        stuck waiting for n - f full values and needs ours.
        """
        self._check_sender(sender)
        actions: list[Action] = []
        self.fullvals.setdefault(sender, value)
        if not self.broadcast_full and sender not in self.replied_to:
            self.replied_to.add(sender)
            actions.append(
                SendTo(sender, MsgKind.FULL, self.my_value.val, self.my_value.proof)
            )
        actions.extend(self._maybe_finish_exchange())
        return actions

    def on_base_message_observed(self) -> list[Action]:
        if self.phase is Phase.FAST_DECIDED and not self.joined_base:
            self.joined_base = True
            return [ProposeToBase(self.cfg.preferred)]
        return []

    def on_base_decision(self, value: bytes) -> list[Action]:
        if self.phase is Phase.IN_BASE:
            self.phase = Phase.DONE
            self.decision = Decide(value, DecisionPath.BASE)
            return [self.decision]
        if self.phase is Phase.FAST_DECIDED:
            if not self.joined_base:
                raise PreconditionViolation(
                    f"node {self.node_id}: base decision before joining"
                )
            if value != self.cfg.preferred.val:
                raise ConsistencyViolation(
                    f"node {self.node_id}: fast-decided {self.cfg.preferred.val!r} "
                    f"but base decided {value!r}"
                )
            self.phase = Phase.DONE
            return []
        raise PreconditionViolation(
            f"node {self.node_id}: unexpected base decision in phase {self.phase.value}"
        )

    # -- internals -----------------------------------------------------------

    def _check_sender(self, sender: NodeId) -> None:
        if not 0 <= sender < self.cfg.n:
            raise UnknownSender(f"sender id {sender} outside [0, {self.cfg.n})")

    def _maybe_finish_exchange(self) -> list[Action]:
        if (
            self.phase is not Phase.FULL_EXCHANGE
            or self.full_evaluated
            or len(self.fullvals) < self.cfg.threshold
        ):
            return []
        self.full_evaluated = True
        adopted = adoption_criteria_full(
            self.cfg.model,
            self.fullvals,
            self.cfg.preferred,
            self.cfg.f,
            self.cfg.n,
            self.valid,
        )
        self.phase = Phase.IN_BASE
        if adopted is not None:
            return [ProposeToBase(adopted)]
        return [ProposeToBase(self.my_value)]

    def copy(self) -> "ProofAwareNode":
        dup = ProofAwareNode.__new__(ProofAwareNode)
        dup.cfg = self.cfg
        dup.node_id = self.node_id
        dup.my_value = self.my_value
        dup.valid = self.valid
        dup.votes = self.votes.copy()
        dup.fullvals = dict(self.fullvals)
        dup.replied_to = set(self.replied_to)
        dup.broadcast_full = self.broadcast_full
        dup.full_evaluated = self.full_evaluated
        dup.phase = self.phase
        dup.joined_base = self.joined_base
        dup.started = self.started
        dup.decision = self.decision
        return dup
