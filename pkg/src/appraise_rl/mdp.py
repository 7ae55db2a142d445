"""Declarative task environments: small finite MDPs with scheduled rewards.

An environment is written as a line-oriented text file (one directive per
line, ``#`` comments). It declares states, terminals, the initial state, a
discount factor, per-state action lists, stochastic transition rules,
entered-state rewards with optional end-of-training overrides, the single
transition at which appraisal is computed, and a scripted evaluation path.

Specs are immutable after parsing and safe to share across concurrent
trainers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

DEFAULT_ACTION = "frwd"

PROB_TOL = 1e-9


class MdpError(ValueError):
    """Raised for unparseable or invalid MDP documents."""


@dataclass(frozen=True)
class TransitionRule:
    """Stochastic outcomes of taking `action` in `from_state`."""

    from_state: str
    action: str
    outcomes: tuple[tuple[str, float], ...]  # (to_state, probability)


@dataclass(frozen=True)
class RewardRule:
    """Reward received on entering `state`.

    `overrides` replace `base` during the final episodes of training:
    (final_k, value) applies when episode >= total_episodes - final_k.
    """

    state: str
    base: float
    overrides: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class TransitionEvent:
    """One observed (s, a, s', r) step, tagged with its episode index."""

    from_state: str
    action: str
    to_state: str
    reward: float
    episode: int


@dataclass(frozen=True)
class MdpSpec:
    states: tuple[str, ...]
    terminals: frozenset[str]
    initial: str
    discount: float
    actions: dict[str, tuple[str, ...]] = field(hash=False)
    transitions: tuple[TransitionRule, ...] = ()
    rewards: tuple[RewardRule, ...] = ()
    appraisal_event: tuple[str, str, str] = ("", "", "")
    script: tuple[tuple[str, str, str], ...] = ()  # (from, action, to) steps
    name: str = ""

    def rule(self, state: str, action: str) -> TransitionRule:
        key = (state, action)
        rule = self._rule_index().get(key)
        if rule is None:
            raise MdpError(f"no transition rule for ({state}, {action})")
        return rule

    def _rule_index(self) -> dict[tuple[str, str], TransitionRule]:
        # cached on first use; the spec is immutable so this is safe
        idx = getattr(self, "_rules", None)
        if idx is None:
            idx = {(r.from_state, r.action): r for r in self.transitions}
            object.__setattr__(self, "_rules", idx)
        return idx

    def reward_rule(self, state: str) -> RewardRule | None:
        for r in self.rewards:
            if r.state == state:
                return r
        return None

    def actions_at(self, state: str) -> tuple[str, ...]:
        if state in self.terminals:
            return ()
        return self.actions.get(state, ())


def reward_at(spec: MdpSpec, episode: int, total_episodes: int, entered: str) -> float:
    """Reward for entering `entered` on the given training episode.

    Overrides are phrased as "final K episodes"; the latest-declared override
    whose window covers the episode wins. States without a reward rule
    yield 0.
    """
    if not 0 <= episode < total_episodes:
        raise ValueError(f"episode {episode} outside [0, {total_episodes})")
    rule = spec.reward_rule(entered)
    if rule is None:
        return 0.0
    value = rule.base
    for final_k, override in rule.overrides:
        if final_k > total_episodes:
            raise ValueError(
                f"override 'last {final_k}' of state {entered} exceeds "
                f"{total_episodes} training episodes"
            )
        if episode >= total_episodes - final_k:
            value = override
    return value


def sample_transition(spec: MdpSpec, from_state: str, action: str, rng) -> str:
    """Draw a successor state for (from_state, action) using `rng`."""
    rule = spec.rule(from_state, action)
    u = rng.random()
    acc = 0.0
    for to_state, prob in rule.outcomes:
        acc += prob
        if u < acc:
            return to_state
    return rule.outcomes[-1][0]


def spec_digest(spec: MdpSpec) -> str:
    """Stable content hash of a spec, used to pin trained agents to it."""
    return hashlib.sha256(serialize_mdp(spec).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# validation


def validate(spec: MdpSpec) -> list[str]:
    """Check every structural invariant; return human-readable violations."""
    out: list[str] = []
    states = set(spec.states)

    if len(states) != len(spec.states):
        out.append("duplicate state names")
    for s in spec.states:
        if not s:
            out.append("empty state name")
    if spec.initial not in states:
        out.append(f"initial state {spec.initial} not declared")
    for t in spec.terminals:
        if t not in states:
            out.append(f"terminal {t} not declared")
    if not 0.0 <= spec.discount <= 1.0:
        out.append(f"discount {spec.discount} outside [0, 1]")

    rules: dict[tuple[str, str], TransitionRule] = {}
    for rule in spec.transitions:
        key = (rule.from_state, rule.action)
        if key in rules:
            out.append(f"duplicate rule for ({rule.from_state}, {rule.action})")
        rules[key] = rule
        if rule.from_state not in states:
            out.append(f"rule from undeclared state {rule.from_state}")
        elif rule.from_state in spec.terminals:
            out.append(f"terminal {rule.from_state} has transitions")
        elif rule.action not in spec.actions_at(rule.from_state):
            out.append(
                f"rule ({rule.from_state}, {rule.action}) uses undeclared action"
            )
        total = 0.0
        for to_state, prob in rule.outcomes:
            if to_state not in states:
                out.append(
                    f"rule ({rule.from_state}, {rule.action}) reaches "
                    f"undeclared state {to_state}"
                )
            if not 0.0 <= prob <= 1.0:
                out.append(
                    f"rule ({rule.from_state}, {rule.action}) has probability "
                    f"{prob} outside [0, 1]"
                )
            total += prob
        if abs(total - 1.0) > PROB_TOL:
            out.append(
                f"probabilities do not sum to 1 for ({rule.from_state}, "
                f"{rule.action}): {total!r}"
            )

    for state in spec.states:
        if state in spec.terminals:
            continue
        acts = spec.actions_at(state)
        if not acts:
            out.append(f"non-terminal {state} has no actions")
        for action in acts:
            if (state, action) not in rules:
                out.append(f"no transition rule for ({state}, {action})")

    seen_reward_states = set()
    for r in spec.rewards:
        if r.state not in states:
            out.append(f"reward rule for undeclared state {r.state}")
        if r.state in seen_reward_states:
            out.append(f"duplicate reward rule for {r.state}")
        seen_reward_states.add(r.state)
        for final_k, _ in r.overrides:
            if final_k <= 0:
                out.append(f"reward override for {r.state} has final_k {final_k} <= 0")

    out.extend(_validate_script(spec, rules))
    return out


def _validate_script(
    spec: MdpSpec, rules: dict[tuple[str, str], TransitionRule]
) -> list[str]:
    out: list[str] = []
    if not spec.script:
        out.append("empty script")
        return out
    for i, (frm, action, to) in enumerate(spec.script, start=1):
        rule = rules.get((frm, action))
        if rule is None:
            out.append(f"script step {i} uses unknown pair ({frm}, {action})")
            continue
        prob = dict(rule.outcomes).get(to, 0.0)
        if prob <= 0.0:
            out.append(f"script step {i} unreachable")
        if i < len(spec.script) and spec.script[i][0] != to:
            out.append(f"script step {i + 1} does not continue from {to}")
    last_to = spec.script[-1][2]
    if last_to not in spec.terminals:
        out.append(f"script ends at non-terminal {last_to}")
    ev = spec.appraisal_event
    if ev not in spec.script:
        out.append(
            f"appraisal event ({ev[0]}, {ev[1]}, {ev[2]}) does not occur in script"
        )
    return out


# ---------------------------------------------------------------------------
# text format


def parse_mdp(text: str, name: str = "") -> MdpSpec:
    """Parse and validate an MDP document.

    Raises MdpError with line (and column where useful) context for syntax
    problems, and with the full violation list for structural problems.
    """
    states: list[str] = []
    terminals: list[str] = []
    initial = ""
    discount = 0.9
    actions: dict[str, tuple[str, ...]] = {}
    transitions: list[TransitionRule] = []
    rewards: list[RewardRule] = []
    appraisal: tuple[str, str, str] | None = None
    script: list[tuple[str, str, str]] = []
    seen: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise MdpError(f"line {lineno}: expected 'directive: ...', got {line!r}")
        directive, _, rest = line.partition(":")
        directive = directive.strip()
        rest = rest.strip()

        if directive == "states":
            states.extend(rest.split())
        elif directive == "terminal":
            terminals.extend(rest.split())
        elif directive == "initial":
            initial = _one_token(rest, lineno, "initial")
        elif directive == "discount":
            discount = _parse_float(rest, lineno, "discount")
        elif directive == "actions":
            state, acts = _parse_actions(rest, lineno)
            if state in actions:
                raise MdpError(f"line {lineno}: duplicate actions for {state}")
            actions[state] = acts
        elif directive == "trans":
            transitions.append(_parse_trans(rest, lineno))
        elif directive == "reward":
            rewards.append(_parse_reward(rest, lineno))
        elif directive == "appraise":
            parts = rest.split()
            if len(parts) != 3:
                raise MdpError(f"line {lineno}: appraise wants 'from action to'")
            appraisal = (parts[0], parts[1], parts[2])
        elif directive == "script":
            script.extend(_parse_script(rest, lineno))
        else:
            raise MdpError(f"line {lineno}: unknown directive {directive!r}")
        seen.add(directive)

    for required in ("states", "terminal", "initial", "appraise", "script"):
        if required not in seen:
            raise MdpError(f"missing '{required}:' directive")
    assert appraisal is not None

    declared = set(states)
    terminal_set = frozenset(terminals)
    full_actions: dict[str, tuple[str, ...]] = {}
    for state in states:
        if state in terminal_set:
            continue
        full_actions[state] = actions.get(state, (DEFAULT_ACTION,))
    for state in actions:
        if state not in declared:
            raise MdpError(f"actions declared for undeclared state {state}")

    spec = MdpSpec(
        states=tuple(states),
        terminals=terminal_set,
        initial=initial,
        discount=discount,
        actions=full_actions,
        transitions=tuple(transitions),
        rewards=tuple(rewards),
        appraisal_event=appraisal,
        script=tuple(script),
        name=name,
    )
    violations = validate(spec)
    if violations:
        raise MdpError("; ".join(violations))
    return spec


def serialize_mdp(spec: MdpSpec) -> str:
    """Render a spec back into the text format (parse/serialize round-trips)."""
    lines = []
    if spec.name:
        lines.append(f"# {spec.name}")
    lines.append("states: " + " ".join(spec.states))
    lines.append("terminal: " + " ".join(s for s in spec.states if s in spec.terminals))
    lines.append(f"initial: {spec.initial}")
    lines.append(f"discount: {_fmt(spec.discount)}")
    for state in spec.states:
        acts = spec.actions_at(state)
        if acts and acts != (DEFAULT_ACTION,):
            lines.append(f"actions: {state} = " + " ".join(acts))
    for rule in spec.transitions:
        outs = ", ".join(f"{to} {_fmt(p)}" for to, p in rule.outcomes)
        lines.append(f"trans: {rule.from_state} {rule.action} -> {outs}")
    for r in spec.rewards:
        text = f"reward: {r.state} = {_fmt(r.base)}"
        for final_k, value in r.overrides:
            text += f" | last {final_k} = {_fmt(value)}"
        lines.append(text)
    lines.append("appraise: " + " ".join(spec.appraisal_event))
    lines.append("script: " + ", ".join(" ".join(step) for step in spec.script))
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() else repr(float(x))


def _one_token(rest: str, lineno: int, what: str) -> str:
    parts = rest.split()
    if len(parts) != 1:
        raise MdpError(f"line {lineno}: {what} wants one state name")
    return parts[0]


def _parse_float(rest: str, lineno: int, what: str) -> float:
    try:
        return float(rest)
    except ValueError:
        raise MdpError(f"line {lineno}: bad {what} value {rest!r}") from None


def _parse_actions(rest: str, lineno: int) -> tuple[str, tuple[str, ...]]:
    state, eq, acts = rest.partition("=")
    if not eq or not acts.split():
        raise MdpError(f"line {lineno}: actions wants 'STATE = a1 a2 ...'")
    return state.strip(), tuple(acts.split())


def _parse_trans(rest: str, lineno: int) -> TransitionRule:
    head, arrow, tail = rest.partition("->")
    if not arrow:
        raise MdpError(f"line {lineno}: trans wants 'FROM ACTION -> TO P, ...'")
    parts = head.split()
    if len(parts) != 2:
        raise MdpError(f"line {lineno}: trans wants 'FROM ACTION' before '->'")
    outcomes = []
    for col, chunk in enumerate(tail.split(","), start=1):
        bits = chunk.split()
        if len(bits) == 1:
            outcomes.append((bits[0], 1.0))
        elif len(bits) == 2:
            outcomes.append((bits[0], _parse_float(bits[1], lineno, "probability")))
        else:
            raise MdpError(f"line {lineno}, outcome {col}: expected 'STATE [PROB]'")
    return TransitionRule(parts[0], parts[1], tuple(outcomes))


def _parse_reward(rest: str, lineno: int) -> RewardRule:
    chunks = [c.strip() for c in rest.split("|")]
    state, eq, base = chunks[0].partition("=")
    if not eq:
        raise MdpError(f"line {lineno}: reward wants 'STATE = VALUE'")
    overrides = []
    for chunk in chunks[1:]:
        parts = chunk.split()
        # shape: last K = VALUE
        if len(parts) != 4 or parts[0] != "last" or parts[2] != "=":
            raise MdpError(f"line {lineno}: override wants 'last K = VALUE'")
        try:
            final_k = int(parts[1])
        except ValueError:
            raise MdpError(f"line {lineno}: bad override count {parts[1]!r}") from None
        overrides.append((final_k, _parse_float(parts[3], lineno, "override value")))
    return RewardRule(
        state.strip(), _parse_float(base.strip(), lineno, "reward"), tuple(overrides)
    )


def _parse_script(rest: str, lineno: int) -> list[tuple[str, str, str]]:
    steps = []
    for col, chunk in enumerate(rest.split(","), start=1):
        parts = chunk.split()
        if len(parts) != 3:
            raise MdpError(f"line {lineno}, step {col}: script wants 'FROM ACTION TO'")
        steps.append((parts[0], parts[1], parts[2]))
    return steps
