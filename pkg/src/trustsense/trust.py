"""Per-user trust ledger and the report classification rule.

The platform keeps three counters per user: reports submitted (k),
reports validated by an MTP (k_v), and reports validated as reliable
(k_r). Trust is

    T = k_r / k + (1 - k_v / k) / 2

i.e. the validated-reliable share plus half the never-validated share
(full credit for proven reliability, the benefit of the doubt for
uncertainty). Validated reports are decided by the cross-check itself;
non-validated reports are accepted iff T > 1/2, with an exact tie at
1/2 broken by a fair seeded coin. Classification is O(1) per report:
nothing beyond the three counters is ever stored.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO, Hashable, Optional

import numpy as np

DECISION_RELIABLE = "R"
DECISION_UNRELIABLE = "U"


class Validation(IntEnum):
    """Outcome of the MTP cross-check for one report."""

    NOT_VALIDATED = 0
    VALIDATED_RELIABLE = 1
    VALIDATED_UNRELIABLE = 2


@dataclass
class Report:
    """One sensing submission as seen by the platform.

    ``ground_truth_match`` is simulator-side knowledge used for scoring
    and is never consulted by the classifier.
    """

    user_id: Hashable
    sector: int
    timestep: int
    value: int
    ground_truth_match: bool = True
    validation: Validation = Validation.NOT_VALIDATED
    decision: Optional[str] = None


@dataclass
class _UserCounters:
    k: int = 0
    k_v: int = 0
    k_r: int = 0


@dataclass
class TrustLedger:
    """Counters for every known user; unknown users read as (0, 0, 0)."""

    _users: dict[Hashable, _UserCounters] = field(default_factory=dict)

    def counters(self, user_id: Hashable) -> tuple[int, int, int]:
        c = self._users.get(user_id)
        return (c.k, c.k_v, c.k_r) if c else (0, 0, 0)

    def known_users(self) -> list[Hashable]:
        return list(self._users)

    def trust_of(self, user_id: Hashable) -> float:
        """Current trust in [0, 1]; 1/2 for users with no history."""
        k, k_v, k_r = self.counters(user_id)
        if k == 0:
            return 0.5
        return k_r / k + 0.5 * (1.0 - k_v / k)

    def classify(self, report: Report, rng: np.random.Generator) -> str:
        """Decide R/U for ``report`` and update the user's counters.

        The submission counter is incremented before trust is read, so
        the current report counts toward its own uncertainty mass.
        The tie test compares 2*k_r against k_v in integers, which is
        exact where a floating comparison against 0.5 would not be.
        """
        c = self._users.setdefault(report.user_id, _UserCounters())
        c.k += 1
        if report.validation is Validation.VALIDATED_RELIABLE:
            c.k_v += 1
            c.k_r += 1
            decision = DECISION_RELIABLE
        elif report.validation is Validation.VALIDATED_UNRELIABLE:
            c.k_v += 1
            decision = DECISION_UNRELIABLE
        else:
            d = 2 * c.k_r - c.k_v
            if d > 0:
                decision = DECISION_RELIABLE
            elif d < 0:
                decision = DECISION_UNRELIABLE
            else:
                decision = DECISION_RELIABLE if rng.random() < 0.5 else DECISION_UNRELIABLE
        report.decision = decision
        return decision

    def to_csv(self, fh: IO[str]) -> None:
        """Snapshot as CSV: user_id, k, k_v, k_r, trust."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "k", "k_v", "k_r", "trust"])
        for user_id in self._users:
            k, k_v, k_r = self.counters(user_id)
            writer.writerow([user_id, k, k_v, k_r, repr(self.trust_of(user_id))])
