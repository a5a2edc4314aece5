"""Closed-form classification error as a function of the MTP count.

A report is misclassified when an unreliable report is accepted or a
reliable one rejected. Validated reports are decided by the MTP
cross-check and contribute no error; everything hinges on how
non-validated reports are judged. Under the trust rule, the acceptance
probability of a non-validated report is

    W = P{V} * (1 - P{F}) + (1 - P{V}) / 2

(belief earned through validated history plus half the residual
uncertainty). Conditioning the acceptance events on report reliability
gives

    P{accept | unreliable}    = W * (1 - P{V})
    P{reject | reliable}      = 1 - (P{V} + (1 - P{V}) * W)
    P{error} = P{F} * P{accept | unreliable} + (1 - P{F}) * P{reject | reliable}

P{error} is monotone non-increasing in the MTP count m (more MTPs mean
more validation and a sharper W), which is what makes binary-search
workforce sizing valid. The worst case over P{F} is at 1/2, where user
behavior is least predictable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trustsense.cvp import p_validate_shared
from trustsense.mobility import MobilityDistribution


@dataclass(frozen=True)
class ErrorBreakdown:
    """All intermediate probabilities behind one error figure."""

    p_validate: float
    p_accept_unvalidated: float
    p_r_given_f: float
    p_rbar_given_fbar: float
    p_error: float


def _breakdown(v: float, p_f: float) -> ErrorBreakdown:
    w = v * (1.0 - p_f) + 0.5 * (1.0 - v)
    p_r_given_f = w * (1.0 - v)
    p_rbar_given_fbar = 1.0 - (v + (1.0 - v) * w)
    p_error = p_f * p_r_given_f + (1.0 - p_f) * p_rbar_given_fbar
    return ErrorBreakdown(
        p_validate=v,
        p_accept_unvalidated=w,
        p_r_given_f=p_r_given_f,
        p_rbar_given_fbar=p_rbar_given_fbar,
        p_error=p_error,
    )


def calculate_error(dist: MobilityDistribution, p_f: float, m: int) -> ErrorBreakdown:
    """Error breakdown for m MTPs sharing ``dist`` with the users.

    ``p_f`` is the probability that a user report is unreliable. With
    m = 0 nothing is ever validated and every decision is a fair coin,
    so the error is exactly 1/2 regardless of ``p_f``.
    """
    if not 0.0 <= p_f <= 1.0:
        raise ValueError(f"p_f must be a probability, got {p_f}")
    if m < 0:
        raise ValueError("MTP count must be non-negative")
    return _breakdown(p_validate_shared(dist, m), p_f)


def error_curve(dist: MobilityDistribution, p_f: float, m_max: int) -> list[ErrorBreakdown]:
    """Breakdowns for every m in 0..m_max (vectorized over m)."""
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    p = dist.probs
    ms = np.arange(m_max + 1)
    v = 1.0 - np.power.outer(1.0 - p, ms)  # (n, m_max+1)
    vs = p @ v
    return [_breakdown(float(val), p_f) for val in vs]
