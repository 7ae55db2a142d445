"""The four appraisal checks, computed from a frozen trained agent.

Each check maps learning signals at one designated transition into [0, 1]:

* suddenness: one minus the empirical frequency of the observed successor
  under the agent's count world model;
* goal relevance: the clamped magnitude of the TD error of the event;
* conduciveness: the TD error squashed so 0.5 is expectation-confirming,
  1 strongly better than expected, 0 strongly worse;
* power: the mean-minus-minimum spread of action values at the successor
  state, zero whenever no real choice exists there.

The TD error deliberately includes the learning rate: it is the actual
update the event would have applied, which with the default step size puts
large reward surprises at the clamp boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mdp import MdpSpec, TransitionEvent, spec_digest
from .qlearn import TrainedAgent, WorldModel, replay_script


class AppraisalError(ValueError):
    """Raised when an appraisal is undefined for the given agent/spec."""


@dataclass(frozen=True)
class AppraisalVector:
    suddenness: float
    goal_relevance: float
    conduciveness: float
    power: float

    def as_dict(self) -> dict[str, float]:
        return {
            "suddenness": self.suddenness,
            "goal_relevance": self.goal_relevance,
            "conduciveness": self.conduciveness,
            "power": self.power,
        }

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.suddenness, self.goal_relevance, self.conduciveness, self.power)


def suddenness(world: WorldModel, from_state: str, action: str, to_state: str) -> float:
    total = world.total(from_state, action)
    if total == 0:
        raise AppraisalError(
            f"unvisited state-action ({from_state}, {action}): "
            "appraisal is undefined before any experience"
        )
    return 1.0 - world.count(from_state, action, to_state) / total


def td_error(
    agent: TrainedAgent, event: TransitionEvent, gamma: float, alpha: float,
    actions_at_to: tuple[str, ...],
) -> float:
    """The update the event would apply to the frozen value table."""
    current = agent.q.get(event.from_state, event.action)
    target = event.reward + gamma * agent.q.best(event.to_state, actions_at_to)
    return alpha * (target - current)


def goal_relevance(delta: float) -> float:
    if not math.isfinite(delta):
        raise AppraisalError("non-finite TD error")
    return min(abs(delta), 1.0)


def conduciveness(delta: float) -> float:
    if not math.isfinite(delta):
        raise AppraisalError("non-finite TD error")
    return min(max(delta, -1.0), 1.0) * 0.5 + 0.5


def power(agent: TrainedAgent, to_state: str, actions_at_to: tuple[str, ...]) -> float:
    """Choice margin at the successor; no choice means no power."""
    if len(actions_at_to) <= 1:
        return 0.0
    values = [agent.q.get(to_state, a) for a in actions_at_to]
    spread = sum(values) / len(values) - min(values)
    return min(max(spread, 0.0), 1.0)


def appraise(agent: TrainedAgent, spec: MdpSpec) -> AppraisalVector:
    """Locate the designated event in the scripted replay and appraise it."""
    if agent.spec_hash != spec_digest(spec):
        raise AppraisalError("agent was trained on a different spec")
    events = replay_script(agent, spec)
    event = next(
        (
            e
            for e in events
            if (e.from_state, e.action, e.to_state) == spec.appraisal_event
        ),
        None,
    )
    if event is None:
        raise AppraisalError(
            f"appraisal event {spec.appraisal_event} absent from script"
        )
    actions_at_to = spec.actions_at(event.to_state)
    delta = td_error(agent, event, spec.discount, agent.hyper.alpha, actions_at_to)
    return AppraisalVector(
        suddenness=suddenness(agent.world, event.from_state, event.action,
                              event.to_state),
        goal_relevance=goal_relevance(delta),
        conduciveness=conduciveness(delta),
        power=power(agent, event.to_state, actions_at_to),
    )
