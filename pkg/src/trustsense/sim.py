"""Time-stepped crowdsensing simulation.

Each timestep: agents move, MTPs file ground-truth reports for their
sectors, users file reports per their behavior model, reports are
validated against recent same-sector MTP records, and the configured
classifier decides reliable/unreliable. Metrics accumulate per step.

Validation window semantics: an MTP record stamped at step t_m
validates user reports from steps t with 0 < (t - t_m) * timestep <= T,
i.e. a record covers reports arriving strictly after it, up to T
minutes later. Same-step user reports are not covered; with T equal to
one timestep this makes the validation event depend on exactly the
previous step's MTP placement, so under stationary independent mobility
the empirical validation rate equals the analytical validation
probability. Per sector only the most recent record is kept (same
window reports from MTPs are equivalent anyway).

Everything random flows from one seeded generator in a fixed draw
order, so a config (seed included) pins the output byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from trustsense import agents, kernels
from trustsense.grid import SectorGrid
from trustsense.mobility import MobilityDistribution, sample_sectors
from trustsense.moa import MopProblem, solve_mop
from trustsense.trust import TrustLedger, _UserCounters

CLASSIFIER_TRUST = "first"
CLASSIFIER_MAJORITY = "majority"
_KNOWN_CLASSIFIERS = (CLASSIFIER_TRUST, CLASSIFIER_MAJORITY)
_REJECTED_CLASSIFIERS = ("fides", "huang")

MTP_PLACEMENT_DISTRIBUTION = "distribution"
MTP_PLACEMENT_STATIONED = "stationed"


class ConfigError(ValueError):
    """Inconsistent or unsupported simulation configuration."""


@dataclass(frozen=True)
class AdaptiveConfig:
    """Re-estimate the unreliable-report rate periodically and release
    MTPs down to the re-solved optimum (never re-hire mid-run)."""

    estimate_interval_min: int
    eps_max: float
    m_max: int


@dataclass(frozen=True)
class TraceMobility:
    """Sector sequence per source trace, indexed by sim timestep.

    Agents cycle through the sequences (reused when agents outnumber
    traces) from independently randomized start offsets drawn at run
    start.
    """

    sequences: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.sequences:
            raise ConfigError("trace mobility needs at least one sequence")
        for seq in self.sequences:
            if len(seq) < 1 or np.any(seq < 0):
                raise ConfigError("trace sequences must be non-empty and fully sectorized")


@dataclass(frozen=True)
class SimConfig:
    grid: SectorGrid
    duration_min: int
    timestep_min: int
    validation_window_min: int
    mtps: int
    users: Sequence[tuple[int, agents.Behavior]]
    mobility: Union[MobilityDistribution, TraceMobility]
    mtp_placement: str = MTP_PLACEMENT_DISTRIBUTION
    classifier: str = CLASSIFIER_TRUST
    categories: int = 2
    anomaly_p: float = 0.5
    truth_change_p: float = 0.0
    seed: int = 1
    adaptive: Optional[AdaptiveConfig] = None
    analysis_dist: Optional[MobilityDistribution] = None

    @property
    def n_steps(self) -> int:
        return self.duration_min // self.timestep_min

    @property
    def n_users(self) -> int:
        return sum(count for count, _ in self.users)

    def validate(self) -> None:
        if self.timestep_min < 1:
            raise ConfigError("timestep must be at least one minute")
        if self.duration_min < self.timestep_min:
            raise ConfigError("duration shorter than one timestep")
        if self.validation_window_min < self.timestep_min:
            raise ConfigError("validation window must cover at least one timestep")
        if self.mtps < 0:
            raise ConfigError("MTP count must be non-negative")
        if self.n_users < 1:
            raise ConfigError("need at least one user")
        if self.classifier in _REJECTED_CLASSIFIERS:
            raise ConfigError(
                f"classifier {self.classifier!r} is not implemented here; "
                f"choose one of {_KNOWN_CLASSIFIERS}"
            )
        if self.classifier not in _KNOWN_CLASSIFIERS:
            raise ConfigError(f"unknown classifier {self.classifier!r}")
        if self.mtp_placement not in (MTP_PLACEMENT_DISTRIBUTION, MTP_PLACEMENT_STATIONED):
            raise ConfigError(f"unknown mtp_placement {self.mtp_placement!r}")
        if self.categories < 2:
            raise ConfigError("need at least two report categories")
        if not 0.0 <= self.anomaly_p <= 1.0 or not 0.0 <= self.truth_change_p <= 1.0:
            raise ConfigError("anomaly_p and truth_change_p must be probabilities")
        if isinstance(self.mobility, MobilityDistribution) and len(self.mobility) != self.grid.n:
            raise ConfigError(
                f"mobility distribution covers {len(self.mobility)} sectors, grid has {self.grid.n}"
            )
        if self.adaptive is not None:
            a = self.adaptive
            if self.classifier != CLASSIFIER_TRUST:
                raise ConfigError("adaptive MTP release requires the trust classifier")
            if a.estimate_interval_min < self.timestep_min:
                raise ConfigError("estimate interval must cover at least one timestep")
            if not 0.0 < a.eps_max < 1.0:
                raise ConfigError("adaptive eps_max must be in (0, 1)")
            if a.m_max < 1:
                raise ConfigError("adaptive m_max must be at least 1")
            if self._analysis_dist() is None:
                raise ConfigError("adaptive mode needs a mobility distribution for re-sizing")
        # Roster.build re-checks per-behavior parameters (targets, phases).
        agents.Roster.build(list(self.users), self.grid.n)

    def _analysis_dist(self) -> Optional[MobilityDistribution]:
        if self.analysis_dist is not None:
            return self.analysis_dist
        if isinstance(self.mobility, MobilityDistribution):
            return self.mobility
        return None


STEP_CSV_COLUMNS = [
    "timestep",
    "reports_total",
    "reports_validated",
    "reports_nonvalidated",
    "errors_nonvalidated",
    "error_rate",
    "p_accept_unvalidated",
    "p_f_estimate",
    "active_mtps",
    "errors_validated",
    "error_rate_overall",
]


@dataclass(frozen=True)
class StepMetrics:
    timestep: int
    reports_total: int
    reports_validated: int
    reports_nonvalidated: int
    errors_nonvalidated: int
    error_rate: Optional[float]
    p_accept_unvalidated: Optional[float]
    p_f_estimate: float
    active_mtps: int
    errors_validated: int
    error_rate_overall: Optional[float]

    def csv_row(self) -> list[str]:
        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return repr(x)
            return str(x)

        return [fmt(getattr(self, col)) for col in STEP_CSV_COLUMNS]


@dataclass
class ReportLog:
    """Column-oriented log of every user report (opt-in, for analysis)."""

    step: np.ndarray
    user: np.ndarray
    kind: np.ndarray
    sector: np.ndarray
    value: np.ndarray
    validated: np.ndarray
    validated_reliable: np.ndarray
    decision: np.ndarray
    ground_truth_match: np.ndarray
    assigned_prob: np.ndarray


@dataclass
class SimResult:
    config: SimConfig
    steps: list[StepMetrics]
    summary: dict
    counters: tuple[np.ndarray, np.ndarray, np.ndarray]  # k, k_v, k_r per user
    reports: Optional[ReportLog] = None

    def ledger(self) -> TrustLedger:
        k, k_v, k_r = self.counters
        ledger = TrustLedger()
        for uid in range(len(k)):
            ledger._users[uid] = _UserCounters(k=int(k[uid]), k_v=int(k_v[uid]), k_r=int(k_r[uid]))
        return ledger


def estimate_pf(n_validated: int, n_validated_unreliable: int) -> float:
    """Unreliable share of validated reports; 1/2 (the worst case for
    sizing, and the only defensible prior) when nothing was validated."""
    if n_validated <= 0:
        return 0.5
    return n_validated_unreliable / n_validated


def adaptive_step(
    current_mtps: int,
    pf_estimate: float,
    dist: MobilityDistribution,
    eps_max: float,
    m_max: int,
) -> int:
    """New active MTP count after re-solving the sizing problem.

    MTPs are only released, never re-hired mid-run, so the count is
    clamped at the current value; an infeasible re-solve keeps the
    current workforce.
    """
    solution = solve_mop(MopProblem(dist=dist, p_f=pf_estimate, eps_max=eps_max, m_max=m_max))
    if not solution.feasible:
        return current_mtps
    return min(current_mtps, solution.m_star)


class _Simulation:
    def __init__(self, config: SimConfig, collect_reports: bool):
        config.validate()
        self.cfg = config
        self.collect = collect_reports
        self.rng = np.random.Generator(np.random.PCG64(config.seed))
        self.n_sectors = config.grid.n
        self.roster = agents.Roster.build(list(config.users), self.n_sectors)
        self.n_users = len(self.roster)
        self.user_ids = np.arange(self.n_users, dtype=np.int64)

        self.k = np.zeros(self.n_users, dtype=np.int64)
        self.k_v = np.zeros(self.n_users, dtype=np.int64)
        self.k_r = np.zeros(self.n_users, dtype=np.int64)

        self.truth = np.zeros(self.n_sectors, dtype=np.int64)
        self.record_step = np.full(self.n_sectors, np.iinfo(np.int64).min // 4, dtype=np.int64)
        self.record_value = np.zeros(self.n_sectors, dtype=np.int64)

        self.mtp_active = np.ones(config.mtps, dtype=bool)
        self.mtp_station = np.arange(config.mtps, dtype=np.int64) % self.n_sectors

        self.horizon = config.validation_window_min // config.timestep_min
        if config.adaptive is not None:
            self.estimate_steps = max(1, config.adaptive.estimate_interval_min // config.timestep_min)
        else:
            self.estimate_steps = 0

        if isinstance(config.mobility, TraceMobility):
            seqs = config.mobility.sequences
            n_agents = self.n_users + config.mtps
            self.trace_seq = [seqs[i % len(seqs)] for i in range(n_agents)]
            self.trace_offset = [int(self.rng.integers(len(s))) for s in self.trace_seq]
        else:
            self.trace_seq = None

        self.val_count_per_step: list[int] = []
        self.val_unrel_per_step: list[int] = []
        self.steps: list[StepMetrics] = []
        self._log: dict[str, list[np.ndarray]] = {name: [] for name in (
            "step", "user", "sector", "value", "validated", "validated_reliable",
            "decision", "ground_truth_match", "assigned_prob",
        )}
        self.total_unvalidated_prob = 0.0
        self.total_unvalidated = 0

    # -- per-step pieces ------------------------------------------------

    def _draw_categories(self, uniforms: np.ndarray) -> np.ndarray:
        if self.cfg.categories == 2:
            return (uniforms < self.cfg.anomaly_p).astype(np.int64)
        vals = (uniforms * self.cfg.categories).astype(np.int64)
        np.minimum(vals, self.cfg.categories - 1, out=vals)
        return vals

    def _update_truth(self, t: int) -> None:
        change_draws = self.rng.random(self.n_sectors)
        fresh = self._draw_categories(self.rng.random(self.n_sectors))
        if t == 0:
            self.truth = fresh
        else:
            self.truth = np.where(change_draws < self.cfg.truth_change_p, fresh, self.truth)

    def _trace_sectors(self, agent_indices: range, t: int) -> np.ndarray:
        out = np.empty(len(agent_indices), dtype=np.int64)
        for j, i in enumerate(agent_indices):
            seq = self.trace_seq[i]
            out[j] = seq[(self.trace_offset[i] + t) % len(seq)]
        return out

    def _place_mtps(self, t: int) -> np.ndarray:
        active = int(self.mtp_active.sum())
        if self.trace_seq is not None:
            idx = np.flatnonzero(self.mtp_active)
            sectors = np.empty(active, dtype=np.int64)
            for j, i in enumerate(idx):
                seq = self.trace_seq[self.n_users + i]
                sectors[j] = seq[(self.trace_offset[self.n_users + i] + t) % len(seq)]
            return sectors
        if self.cfg.mtp_placement == MTP_PLACEMENT_STATIONED:
            return self.mtp_station[self.mtp_active]
        return sample_sectors(self.cfg.mobility, active, self.rng)

    def _place_users(self, t: int) -> np.ndarray:
        if self.trace_seq is not None:
            return self._trace_sectors(range(self.n_users), t)
        return sample_sectors(self.cfg.mobility, self.n_users, self.rng)

    def _group_state(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        groups = self.roster.groups
        attacking = np.zeros(len(groups), dtype=bool)
        values = np.zeros(len(groups), dtype=np.int64)
        if groups:
            draws = self.rng.random(len(groups))
            for g, grp in enumerate(groups):
                attacking[g] = grp.attacking(t)
                truth = int(self.truth[grp.target_sector])
                if self.cfg.categories == 2:
                    values[g] = 1 - truth
                else:
                    offset = 1 + int(draws[g] * (self.cfg.categories - 1))
                    values[g] = (truth + offset) % self.cfg.categories
        return attacking, values

    def _classify_majority(self, user_claims, user_values, mtp_claims, mtp_values):
        decisions = np.zeros(self.n_users, dtype=np.uint8)
        for s in np.unique(np.concatenate([mtp_claims, user_claims])):
            mtp_mask = mtp_claims == s
            user_mask = user_claims == s
            window = np.concatenate([mtp_values[mtp_mask], user_values[user_mask]]).tolist()
            if not window:
                continue
            decs = agents.majority_vote(window)
            user_decs = decs[int(mtp_mask.sum()):]
            decisions[user_mask] = [1 if d == "R" else 0 for d in user_decs]
        return decisions

    def _rolling_pf(self, t: int) -> float:
        if self.estimate_steps > 0:
            w = self.estimate_steps
            return estimate_pf(sum(self.val_count_per_step[-w:]), sum(self.val_unrel_per_step[-w:]))
        return estimate_pf(sum(self.val_count_per_step), sum(self.val_unrel_per_step))

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimResult:
        cfg = self.cfg
        for t in range(cfg.n_steps):
            self._update_truth(t)
            active_now = int(self.mtp_active.sum())
            mtp_sectors = self._place_mtps(t)
            user_sectors = self._place_users(t)
            u_false = self.rng.random(self.n_users)
            u_cat = self.rng.random(self.n_users)
            group_attacking, group_values = self._group_state(t)
            tie_draws = self.rng.random(self.n_users)

            claims, values = agents.emit_reports(
                self.roster, user_sectors, self.truth, u_false, u_cat,
                group_attacking, group_values, cfg.categories,
            )
            reliable = values == self.truth[claims]
            mtp_values = self.truth[mtp_sectors]

            if cfg.classifier == CLASSIFIER_TRUST:
                validated = self.record_step[claims] >= t - self.horizon
                validated_reliable = validated & (values == self.record_value[claims])
                decisions, probs = kernels.classify_reports(
                    self.k, self.k_v, self.k_r, self.user_ids,
                    validated.astype(np.uint8), validated_reliable.astype(np.uint8), tie_draws,
                )
                # Stamp after validation so a record never covers reports
                # from its own step.
                self.record_step[mtp_sectors] = t
                self.record_value[mtp_sectors] = mtp_values
            else:
                validated = np.zeros(self.n_users, dtype=bool)
                validated_reliable = validated
                probs = np.full(self.n_users, np.nan)
                decisions = self._classify_majority(claims, values, mtp_sectors, mtp_values)

            errors = decisions.astype(bool) != reliable
            nonvalidated = ~validated
            n_validated = int(validated.sum())
            n_nonvalidated = self.n_users - n_validated
            errors_nonvalidated = int(errors[nonvalidated].sum())
            errors_validated = int(errors[validated].sum())
            self.val_count_per_step.append(n_validated)
            self.val_unrel_per_step.append(n_validated - int(validated_reliable.sum()))

            if cfg.classifier == CLASSIFIER_TRUST and n_nonvalidated > 0:
                p_acc = float(np.mean(probs[nonvalidated]))
                self.total_unvalidated_prob += float(np.sum(probs[nonvalidated]))
                self.total_unvalidated += n_nonvalidated
            else:
                p_acc = None

            self.steps.append(StepMetrics(
                timestep=t,
                reports_total=self.n_users,
                reports_validated=n_validated,
                reports_nonvalidated=n_nonvalidated,
                errors_nonvalidated=errors_nonvalidated,
                error_rate=errors_nonvalidated / n_nonvalidated if n_nonvalidated else None,
                p_accept_unvalidated=p_acc,
                p_f_estimate=self._rolling_pf(t),
                active_mtps=active_now,
                errors_validated=errors_validated,
                error_rate_overall=(errors_validated + errors_nonvalidated) / self.n_users,
            ))

            if self.collect:
                log = self._log
                log["step"].append(np.full(self.n_users, t, dtype=np.int64))
                log["user"].append(self.user_ids.copy())
                log["sector"].append(claims)
                log["value"].append(values)
                log["validated"].append(validated.astype(np.uint8))
                log["validated_reliable"].append(validated_reliable.astype(np.uint8))
                log["decision"].append(decisions.astype(np.uint8))
                log["ground_truth_match"].append(reliable.copy())
                log["assigned_prob"].append(np.asarray(probs, dtype=np.float64).copy())

            if self.estimate_steps and (t + 1) % self.estimate_steps == 0:
                self._adaptive_release(t)

        return self._finish()

    def _adaptive_release(self, t: int) -> None:
        a = self.cfg.adaptive
        w = self.estimate_steps
        pf_est = estimate_pf(sum(self.val_count_per_step[-w:]), sum(self.val_unrel_per_step[-w:]))
        current = int(self.mtp_active.sum())
        if current == 0:
            return
        new_count = adaptive_step(current, pf_est, self.cfg._analysis_dist(), a.eps_max, a.m_max)
        release = current - new_count
        if release > 0:
            active_idx = np.flatnonzero(self.mtp_active)
            drop = self.rng.choice(active_idx, size=release, replace=False)
            self.mtp_active[drop] = False

    def _finish(self) -> SimResult:
        total = self.n_users * len(self.steps)
        total_validated = sum(s.reports_validated for s in self.steps)
        total_nonvalidated = total - total_validated
        errors_nonvalidated = sum(s.errors_nonvalidated for s in self.steps)
        errors_validated = sum(s.errors_validated for s in self.steps)
        with np.errstate(invalid="ignore", divide="ignore"):
            trust = np.where(
                self.k > 0, self.k_r / np.maximum(self.k, 1) + 0.5 * (1 - self.k_v / np.maximum(self.k, 1)), 0.5
            )
        summary = {
            "classifier": self.cfg.classifier,
            "seed": self.cfg.seed,
            "steps": len(self.steps),
            "users": self.n_users,
            "mtps_initial": self.cfg.mtps,
            "final_active_mtps": int(self.mtp_active.sum()),
            "reports_total": total,
            "reports_validated": total_validated,
            "validated_fraction": total_validated / total if total else None,
            "errors_nonvalidated": errors_nonvalidated,
            "errors_validated": errors_validated,
            "error_rate_nonvalidated": errors_nonvalidated / total_nonvalidated if total_nonvalidated else None,
            "error_rate_overall": (errors_validated + errors_nonvalidated) / total if total else None,
            "p_accept_unvalidated_mean": (
                self.total_unvalidated_prob / self.total_unvalidated if self.total_unvalidated else None
            ),
            "p_f_estimate_final": estimate_pf(sum(self.val_count_per_step), sum(self.val_unrel_per_step)),
            "mean_trust": float(np.mean(trust)) if self.n_users else None,
        }
        reports = None
        if self.collect:
            reports = ReportLog(
                step=np.concatenate(self._log["step"]),
                user=np.concatenate(self._log["user"]),
                kind=np.tile(self.roster.kind, len(self.steps)),
                sector=np.concatenate(self._log["sector"]),
                value=np.concatenate(self._log["value"]),
                validated=np.concatenate(self._log["validated"]),
                validated_reliable=np.concatenate(self._log["validated_reliable"]),
                decision=np.concatenate(self._log["decision"]),
                ground_truth_match=np.concatenate(self._log["ground_truth_match"]),
                assigned_prob=np.concatenate(self._log["assigned_prob"]),
            )
        return SimResult(
            config=self.cfg,
            steps=self.steps,
            summary=summary,
            counters=(self.k, self.k_v, self.k_r),
            reports=reports,
        )


def run(config: SimConfig, collect_reports: bool = False) -> SimResult:
    """Run one replication of ``config``; deterministic given the seed."""
    return _Simulation(config, collect_reports).run()


def with_seed(config: SimConfig, seed: int) -> SimConfig:
    return replace(config, seed=seed)
