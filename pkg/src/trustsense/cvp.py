"""Validation probability of user reports.

A report submitted from sector i is validated when at least one trusted
participant is in that sector during the validation window. With
independent participant positions the per-sector probability is

    P{V | i} = 1 - prod_k (1 - q_k(i))

where q_k is participant k's location distribution. Averaging over a
user's own location distribution u gives that user's validation
probability, and the fleet-wide figure is the mean over users. When all
participants share one distribution the product collapses to a power,
which keeps workforce-sizing sweeps cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from trustsense.mobility import MobilityDistribution


@dataclass(frozen=True)
class ValidationModel:
    """Location model: one distribution per MTP, one or many for users.

    ``user_dists`` may be a single distribution shared by every user
    (the default produced by the likelihood heuristic) or a sequence of
    per-user distributions for a more precise estimate.
    """

    mtp_dists: Sequence[MobilityDistribution]
    user_dists: Union[MobilityDistribution, Sequence[MobilityDistribution]]
    n: int = field(init=False)

    def __post_init__(self) -> None:
        users = self._user_list()
        if not users:
            raise ValueError("need at least one user distribution")
        n = len(users[0])
        for d in list(self.mtp_dists) + users:
            if len(d) != n:
                raise ValueError("all distributions must cover the same sector count")
        object.__setattr__(self, "n", n)

    def _user_list(self) -> list[MobilityDistribution]:
        if isinstance(self.user_dists, MobilityDistribution):
            return [self.user_dists]
        return list(self.user_dists)

    @classmethod
    def identical(cls, dist: MobilityDistribution, m: int) -> "ValidationModel":
        """m MTPs and all users sharing one distribution."""
        if m < 0:
            raise ValueError("MTP count must be non-negative")
        return cls(mtp_dists=[dist] * m, user_dists=dist)


def p_validate_by_sector(model: ValidationModel) -> np.ndarray:
    """Vector of P{V | i} over all sectors."""
    miss = np.ones(model.n, dtype=np.float64)
    for q in model.mtp_dists:
        miss *= 1.0 - q.probs
    return 1.0 - miss


def p_validate_given_sector(model: ValidationModel, sector: int) -> float:
    """Probability a report from ``sector`` meets at least one MTP."""
    if not 0 <= sector < model.n:
        raise ValueError(f"sector {sector} outside 0..{model.n - 1}")
    return float(p_validate_by_sector(model)[sector])


def p_validate(model: ValidationModel) -> float:
    """Fleet-wide validation probability (mean over users)."""
    per_sector = p_validate_by_sector(model)
    users = model._user_list()
    return float(np.mean([np.dot(per_sector, u.probs) for u in users]))


def p_validate_shared(dist: MobilityDistribution, m: int) -> float:
    """Fast path for m identical MTPs and users on one distribution.

    Equals ``p_validate(ValidationModel.identical(dist, m))`` exactly;
    with a shared distribution the per-sector product is a power, so
    the whole computation is linear in the sector count.
    """
    if m < 0:
        raise ValueError("MTP count must be non-negative")
    p = dist.probs
    return float(np.dot(p, 1.0 - np.power(1.0 - p, m)))
