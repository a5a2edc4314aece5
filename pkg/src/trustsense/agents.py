"""Agent behavior models and the majority-vote baseline.

Users come in four flavors. Honest users report the truth but slip with
a small probability. Corruption attackers falsify each report
independently with probability p. On-off attackers cycle through a
truthful phase followed by a false phase to dodge detection. Colluders
share a group-wide phase clock: while the group is attacking, every
member spoofs its location to the group's target sector and submits the
same agreed false value; off-phase they blend in as honest users. MTPs
always report the ground truth of their current sector.

A "false" value is drawn uniformly from the categories other than the
truth, which for the default binary category space is just the flip.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from trustsense.trust import DECISION_RELIABLE, DECISION_UNRELIABLE


class EmptyWindowError(ValueError):
    """Majority vote asked to decide an empty report window."""


# --- behavior specifications -------------------------------------------------

@dataclass(frozen=True)
class Honest:
    p_false: float = 0.01


@dataclass(frozen=True)
class Corruption:
    p_false: float = 0.8


@dataclass(frozen=True)
class OnOff:
    """n_truthful reliable reports, then n_false unreliable, repeating."""

    n_truthful: int = 10
    n_false: int = 10

    def __post_init__(self) -> None:
        if self.n_truthful < 1 or self.n_false < 1:
            raise ValueError("on-off phases must each cover at least one report")


@dataclass(frozen=True)
class Collusion:
    """Group-coordinated attack: n_attack steps spoofing to target_sector,
    then n_off steps of honest behavior at p_false_off."""

    group: int
    target_sector: int
    n_attack: int = 10
    n_off: int = 10
    p_false_off: float = 0.01

    def __post_init__(self) -> None:
        if self.n_attack < 1 or self.n_off < 1:
            raise ValueError("collusion phases must each cover at least one step")


Behavior = Union[Honest, Corruption, OnOff, Collusion]


@dataclass
class AgentState:
    """One agent: identity, role, behavior and its phase counter."""

    agent_id: int
    role: str = "user"  # "user" | "mtp"
    behavior: Optional[Behavior] = None
    phase: int = 0


def false_category(truth: int, categories: int, rng: np.random.Generator) -> int:
    """Uniform draw over the categories other than ``truth``."""
    if categories == 2:
        return 1 - truth
    offset = 1 + int(rng.random() * (categories - 1))
    return (truth + offset) % categories


def next_report(
    agent: AgentState,
    sector: int,
    truth: int,
    rng: np.random.Generator,
    categories: int = 2,
    group_attacking: bool = False,
    group_value: int = 0,
) -> tuple[int, int]:
    """Produce (claimed_sector, value) for one agent at one timestep.

    ``truth`` is the ground truth at the agent's actual ``sector``.
    Colluders need the run to pass in their group's phase and agreed
    value, since those are shared state owned by the run. The agent's
    own phase counter advances here (one report per call).
    """
    if agent.role == "mtp":
        return sector, truth
    b = agent.behavior
    if isinstance(b, (Honest, Corruption)):
        if rng.random() < b.p_false:
            return sector, false_category(truth, categories, rng)
        return sector, truth
    if isinstance(b, OnOff):
        in_false_phase = agent.phase >= b.n_truthful
        agent.phase = (agent.phase + 1) % (b.n_truthful + b.n_false)
        if in_false_phase:
            return sector, false_category(truth, categories, rng)
        return sector, truth
    if isinstance(b, Collusion):
        if group_attacking:
            return b.target_sector, group_value
        if rng.random() < b.p_false_off:
            return sector, false_category(truth, categories, rng)
        return sector, truth
    raise TypeError(f"unknown behavior {b!r}")


# --- batch form used by the simulation engine --------------------------------

KIND_HONEST = 0
KIND_CORRUPTION = 1
KIND_ONOFF = 2
KIND_COLLUSION = 3

_KIND_OF = {Honest: KIND_HONEST, Corruption: KIND_CORRUPTION, OnOff: KIND_ONOFF, Collusion: KIND_COLLUSION}


@dataclass(frozen=True)
class CollusionGroup:
    target_sector: int
    n_attack: int
    n_off: int

    def attacking(self, timestep: int) -> bool:
        return timestep % (self.n_attack + self.n_off) < self.n_attack


@dataclass
class Roster:
    """Array-of-struct compilation of a user population.

    ``phase`` advances per report for on-off users; collusion phases
    live on the group clocks instead (all members move together).
    """

    kind: np.ndarray
    p_false: np.ndarray
    n_truthful: np.ndarray
    n_false: np.ndarray
    phase: np.ndarray
    group: np.ndarray
    groups: list[CollusionGroup] = field(default_factory=list)
    behaviors: list[Behavior] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.kind.size)

    @classmethod
    def build(cls, specs: Sequence[tuple[int, Behavior]], n_sectors: int) -> "Roster":
        """Expand (count, behavior) pairs into per-agent arrays."""
        behaviors: list[Behavior] = []
        for count, b in specs:
            if count < 0:
                raise ValueError("behavior counts must be non-negative")
            behaviors.extend([b] * count)
        n = len(behaviors)
        roster = cls(
            kind=np.zeros(n, dtype=np.uint8),
            p_false=np.zeros(n, dtype=np.float64),
            n_truthful=np.ones(n, dtype=np.int64),
            n_false=np.ones(n, dtype=np.int64),
            phase=np.zeros(n, dtype=np.int64),
            group=np.full(n, -1, dtype=np.int64),
            behaviors=behaviors,
        )
        group_map: dict[int, CollusionGroup] = {}
        for i, b in enumerate(behaviors):
            roster.kind[i] = _KIND_OF[type(b)]
            if isinstance(b, (Honest, Corruption)):
                roster.p_false[i] = b.p_false
            elif isinstance(b, OnOff):
                roster.n_truthful[i] = b.n_truthful
                roster.n_false[i] = b.n_false
            elif isinstance(b, Collusion):
                if not 0 <= b.target_sector < n_sectors:
                    raise ValueError(f"collusion target sector {b.target_sector} outside grid")
                roster.p_false[i] = b.p_false_off
                grp = CollusionGroup(b.target_sector, b.n_attack, b.n_off)
                seen = group_map.setdefault(b.group, grp)
                if seen != grp:
                    raise ValueError(f"collusion group {b.group} declared with conflicting parameters")
                roster.group[i] = b.group
        if group_map:
            max_gid = max(group_map)
            if set(group_map) != set(range(max_gid + 1)):
                raise ValueError("collusion group ids must be consecutive from 0")
            roster.groups = [group_map[g] for g in range(max_gid + 1)]
        return roster


def emit_reports(
    roster: Roster,
    true_sectors: np.ndarray,
    truth_by_sector: np.ndarray,
    u_false: np.ndarray,
    u_cat: np.ndarray,
    group_attacking: np.ndarray,
    group_values: np.ndarray,
    categories: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``next_report`` over a whole user population.

    ``u_false`` and ``u_cat`` are pre-drawn uniforms (one each per
    user); pre-drawing keeps the engine's RNG stream layout fixed and
    lets the classification kernels stay draw-free. Mutates
    ``roster.phase`` for on-off users.
    """
    truth = truth_by_sector[true_sectors]
    claim = true_sectors.copy()
    values = truth.copy()

    flip = np.zeros(len(roster), dtype=bool)
    probabilistic = (roster.kind == KIND_HONEST) | (roster.kind == KIND_CORRUPTION) | (roster.kind == KIND_COLLUSION)
    flip[probabilistic] = u_false[probabilistic] < roster.p_false[probabilistic]

    onoff = roster.kind == KIND_ONOFF
    if onoff.any():
        flip[onoff] = roster.phase[onoff] >= roster.n_truthful[onoff]
        cycle = roster.n_truthful[onoff] + roster.n_false[onoff]
        roster.phase[onoff] = (roster.phase[onoff] + 1) % cycle

    if flip.any():
        if categories == 2:
            values[flip] = 1 - truth[flip]
        else:
            offset = 1 + (u_cat[flip] * (categories - 1)).astype(np.int64)
            values[flip] = (truth[flip] + offset) % categories

    for gid, grp in enumerate(roster.groups):
        if not group_attacking[gid]:
            continue
        members = roster.group == gid
        claim[members] = grp.target_sector
        values[members] = group_values[gid]

    return claim, values


# --- majority-vote baseline ---------------------------------------------------

def majority_vote(values: Sequence[int]) -> list[str]:
    """Per-report decisions for one (sector, timestep) window.

    The modal category wins; reports matching it are deemed reliable,
    the rest unreliable. A tie between categories goes to the one
    reported earliest in the window, which keeps replays deterministic.
    """
    if len(values) == 0:
        raise EmptyWindowError("majority vote over an empty window")
    counts: dict[int, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.values())
    # dict preserves first-seen order, so the first max is the earliest.
    mode = next(v for v, c in counts.items() if c == best)
    return [DECISION_RELIABLE if v == mode else DECISION_UNRELIABLE for v in values]
