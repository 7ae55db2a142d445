"""Tabular Q-learning with an epsilon-greedy policy and a count world model.

Training is fully determined by (spec, hyperparameters) including the seed.
The trained agent is immutable; scripted replay never mutates it, so the
appraisal stage always reads converged, frozen expectations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mdp import MdpSpec, TransitionEvent, reward_at, sample_transition, spec_digest


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.1
    epsilon: float = 0.1
    episodes: int = 1000
    max_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside (0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon {self.epsilon} outside [0, 1]")
        if self.episodes <= 0:
            raise ValueError("episodes must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class QTable:
    """State-action values; unseen pairs read as 0."""

    values: dict[tuple[str, str], float] = field(default_factory=dict)

    def get(self, state: str, action: str) -> float:
        return self.values.get((state, action), 0.0)

    def best(self, state: str, actions: tuple[str, ...]) -> float:
        """max_a q(state, a); defined as 0 over an empty action set."""
        if not actions:
            return 0.0
        return max(self.get(state, a) for a in actions)


@dataclass(frozen=True)
class WorldModel:
    """Transition counts accumulated from experience."""

    counts: dict[tuple[str, str, str], int] = field(default_factory=dict)

    def count(self, from_state: str, action: str, to_state: str) -> int:
        return self.counts.get((from_state, action, to_state), 0)

    def total(self, from_state: str, action: str) -> int:
        return sum(
            n for (f, a, _), n in self.counts.items()
            if f == from_state and a == action
        )


@dataclass(frozen=True)
class TrainingStats:
    episodes: int
    steps: int
    truncated_episodes: int


@dataclass(frozen=True)
class TrainedAgent:
    q: QTable
    world: WorldModel
    spec_hash: str
    hyper: Hyperparams
    stats: TrainingStats


def q_update(
    q: QTable, event: TransitionEvent, alpha: float, gamma: float,
    actions_at_to: tuple[str, ...],
) -> tuple[QTable, float]:
    """One Q-learning update; returns the new table and the applied delta.

    `actions_at_to` must be the successor's action set (empty for
    terminals, whose bootstrap value is 0).
    """
    if not all(map(math.isfinite, (event.reward, alpha, gamma))):
        raise ValueError("non-finite input to q_update")
    current = q.get(event.from_state, event.action)
    target = event.reward + gamma * q.best(event.to_state, actions_at_to)
    delta = alpha * (target - current)
    values = dict(q.values)
    values[(event.from_state, event.action)] = current + delta
    return QTable(values), delta


def select_action(
    q: QTable, state: str, actions: tuple[str, ...], epsilon: float, rng
) -> str:
    """Epsilon-greedy with declaration-order tie breaking."""
    if not actions:
        raise ValueError(f"no actions available in state {state}")
    if rng.random() < epsilon:
        return actions[int(rng.integers(len(actions)))]
    best = actions[0]
    best_val = q.get(state, best)
    for a in actions[1:]:
        val = q.get(state, a)
        if val > best_val:
            best, best_val = a, val
    return best


def observe(world: WorldModel, event: TransitionEvent) -> WorldModel:
    counts = dict(world.counts)
    key = (event.from_state, event.action, event.to_state)
    counts[key] = counts.get(key, 0) + 1
    return WorldModel(counts)


def train(spec: MdpSpec, hyper: Hyperparams) -> TrainedAgent:
    """Run the full episode budget and return the frozen agent."""
    rng = np.random.default_rng(hyper.seed)
    gamma = spec.discount
    # mutate plain dicts in the loop; freeze into the immutable tables at the end
    q_values: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str, str], int] = {}
    q = QTable(q_values)
    steps_total = 0
    truncated = 0

    for episode in range(hyper.episodes):
        state = spec.initial
        for _ in range(hyper.max_steps):
            actions = spec.actions_at(state)
            action = select_action(q, state, actions, hyper.epsilon, rng)
            nxt = sample_transition(spec, state, action, rng)
            reward = reward_at(spec, episode, hyper.episodes, nxt)
            current = q_values.get((state, action), 0.0)
            target = reward + gamma * q.best(nxt, spec.actions_at(nxt))
            q_values[(state, action)] = current + hyper.alpha * (target - current)
            key = (state, action, nxt)
            counts[key] = counts.get(key, 0) + 1
            steps_total += 1
            state = nxt
            if state in spec.terminals:
                break
        else:
            truncated += 1

    return TrainedAgent(
        q=QTable(dict(q_values)),
        world=WorldModel(dict(counts)),
        spec_hash=spec_digest(spec),
        hyper=hyper,
        stats=TrainingStats(hyper.episodes, steps_total, truncated),
    )


def replay_script(agent: TrainedAgent, spec: MdpSpec) -> list[TransitionEvent]:
    """Walk the scripted evaluation path with final-episode rewards.

    The script fixes both actions and successors; nothing is sampled and
    the agent is not modified.
    """
    if agent.spec_hash != spec_digest(spec):
        raise ValueError("agent was trained on a different spec")
    last = agent.hyper.episodes - 1
    return [
        TransitionEvent(frm, action, to,
                        reward_at(spec, last, agent.hyper.episodes, to), last)
        for frm, action, to in spec.script
    ]


# ---------------------------------------------------------------------------
# serialization (cache format for trained agents)


def agent_to_json(agent: TrainedAgent) -> str:
    doc = {
        "spec_hash": agent.spec_hash,
        "hyper": {
            "alpha": agent.hyper.alpha,
            "epsilon": agent.hyper.epsilon,
            "episodes": agent.hyper.episodes,
            "max_steps": agent.hyper.max_steps,
            "seed": agent.hyper.seed,
        },
        "q": sorted([s, a, v] for (s, a), v in agent.q.values.items()),
        "world": sorted([f, a, t, n] for (f, a, t), n in agent.world.counts.items()),
        "stats": {
            "episodes": agent.stats.episodes,
            "steps": agent.stats.steps,
            "truncated_episodes": agent.stats.truncated_episodes,
        },
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True)


def agent_from_json(text: str) -> TrainedAgent:
    doc = json.loads(text)
    return TrainedAgent(
        q=QTable({(s, a): float(v) for s, a, v in doc["q"]}),
        world=WorldModel({(f, a, t): int(n) for f, a, t, n in doc["world"]}),
        spec_hash=doc["spec_hash"],
        hyper=Hyperparams(**doc["hyper"]),
        stats=TrainingStats(**doc["stats"]),
    )


def derive_seed(master: int, label: str) -> int:
    """Stable per-task sub-seed so parallel pieces stay reproducible."""
    import hashlib

    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def with_seed(hyper: Hyperparams, seed: int) -> Hyperparams:
    return replace(hyper, seed=seed)
