"""Trusted-participant sizing and trust-based report classification for
mobile crowdsensing.

The library answers two questions about a crowdsensing deployment that
hires mobile trusted participants (MTPs) to spot-check user reports:
how many MTPs are needed before launch to hit a target classification
error, and how does that sizing hold up in a time-stepped multi-agent
simulation under corruption, on-off and collusion attacks.
"""

__version__ = "0.1.0"
