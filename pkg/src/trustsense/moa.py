"""Workforce sizing: the smallest MTP count meeting an error budget.

Because the classification error is monotone non-increasing in the MTP
count, the minimal feasible count is a leftmost insertion point and can
be found by binary search over 0..m_max with one error evaluation per
halving. Infeasibility (the budget is tighter than the error at m_max)
is a result, not an exception.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from trustsense.errmodel import calculate_error
from trustsense.mobility import MobilityDistribution


@dataclass(frozen=True)
class MopProblem:
    dist: MobilityDistribution
    p_f: float
    eps_max: float
    m_max: int

    def __post_init__(self) -> None:
        if not 0.0 < self.eps_max < 1.0:
            raise ValueError(f"eps_max must be in (0, 1), got {self.eps_max}")
        if self.m_max < 1:
            raise ValueError(f"m_max must be at least 1, got {self.m_max}")
        if not 0.0 <= self.p_f <= 1.0:
            raise ValueError(f"p_f must be a probability, got {self.p_f}")


@dataclass(frozen=True)
class MopSolution:
    """Either the minimal feasible count or the error floor at m_max."""

    feasible: bool
    m_star: Optional[int]
    p_error: float  # error at m_star when feasible, at m_max otherwise


def solve_mop(problem: MopProblem, error_fn: Optional[Callable[[int], float]] = None) -> MopSolution:
    """Minimize m subject to error(m) <= eps_max.

    ``error_fn`` maps an MTP count to its classification error and
    defaults to the closed-form model on ``problem.dist``; it must be
    monotone non-increasing. The search makes at most
    ceil(log2(m_max + 1)) + 1 error evaluations: one to test
    feasibility at m_max, then a leftmost binary search that reuses
    the evaluation at the current upper bound.

    A result of m = 0 is allowed: it means the error budget is loose
    enough that unvalidated coin-flip classification already meets it.
    """
    if error_fn is None:
        error_fn = lambda m: calculate_error(problem.dist, problem.p_f, m).p_error

    eps_min = error_fn(problem.m_max)
    if problem.eps_max < eps_min:
        return MopSolution(feasible=False, m_star=None, p_error=eps_min)

    lo, hi = 0, problem.m_max
    p_at_hi = eps_min
    while lo < hi:
        mid = (lo + hi) // 2
        p_mid = error_fn(mid)
        if p_mid <= problem.eps_max:
            hi = mid
            p_at_hi = p_mid
        else:
            lo = mid + 1
    return MopSolution(feasible=True, m_star=lo, p_error=p_at_hi)
