"""SIC-ordered SINR, energy efficiency and the beamforming MDP.

The environment is deterministic: expected effective-channel powers
stand in for instantaneous channels, so the next state is a pure
function of the action.  The only carried quantity is the previous
step's energy efficiency (the reward is its difference).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .netmodel import EffectiveStats


class NumericalError(Exception):
    """Base class for runtime numerical failures (CLI exit code 3)."""


class ZeroDenominator(NumericalError):
    """SINR denominator vanished: degenerate config (no noise, no
    interference)."""


class DegenerateColumn(NumericalError):
    """A UE has zero expected channel power at every AP."""


COLUMN_SUM_TOL = 1e-9


def validate_beamforming(w: np.ndarray) -> None:
    """Assert the action invariants: entries in [0,1], columns sum to 1."""
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError("beamforming weights must lie in [0, 1]")
    colsums = w.sum(axis=0)
    if np.any(np.abs(colsums - 1.0) > COLUMN_SUM_TOL):
        raise ValueError("beamforming columns must sum to 1")


@dataclass(frozen=True)
class SicOrder:
    """Permutation sorting UEs by ascending total effective power."""

    perm: np.ndarray      # perm[i] = UE index at SIC position i
    inverse: np.ndarray   # inverse[k] = SIC position of UE k


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray       # (K,) per-UE SINR, linear
    reward: float                # EE difference minus constraint penalty
    ee: float                    # summed rate per total power
    rates: np.ndarray            # (K,) bits/s/Hz
    p_total: float               # mW
    sic_ok: bool
    norm_ok: bool
    power_ok: bool


def sic_order(stats: EffectiveStats) -> SicOrder:
    """Stable ascending sort of the per-UE channel sums."""
    perm = np.argsort(stats.channel_sum, kind="stable")
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.size)
    return SicOrder(perm=perm, inverse=inverse)


def sinr(w: np.ndarray, stats: EffectiveStats, order: SicOrder,
         mode: str = "sic") -> np.ndarray:
    """Per-UE SINR (linear), indexed by original UE number.

    Numerator: sum_m w[m,k]^2 * sig[m,k].  Denominator: the same
    w^2-weighted combination of inter-user power, the full
    pilot-contamination double sum and the noise term psi.  Without
    interference cancellation the inter-user term counts every other
    UE; with it, only UEs that precede k in the ascending SIC order.
    """
    if mode not in ("sic", "no-sic"):
        raise ValueError(f"unknown sinr mode {mode!r}")
    w2 = w * w
    num = np.einsum("mk,mk->k", w2, stats.sig)

    if mode == "no-sic":
        inter = stats.sig.sum(axis=1, keepdims=True) - stats.sig
    else:
        sig_sorted = stats.sig[:, order.perm]
        before = np.cumsum(sig_sorted, axis=1) - sig_sorted  # strictly earlier UEs
        inter = np.empty_like(before)
        inter[:, order.perm] = before
    den_terms = inter + stats.cont_ap_total[:, None] + stats.psi
    den = np.einsum("mk,mk->k", w2, den_terms)

    if np.any(den <= 0.0):
        raise ZeroDenominator(
            "SINR denominator vanished; degenerate config "
            "(zero noise and zero interference)")
    return num / den


def rate(gamma: np.ndarray) -> np.ndarray:
    """Shannon rate per UE, bits/s/Hz."""
    return np.log2(1.0 + gamma)


def total_power(w: np.ndarray, cfg: NetworkConfig) -> float:
    """Transmit term sum w^2 * tau_l * delta_l * p_u plus hardware power."""
    p_k = float((w * w).sum()) * cfg.tau_l * cfg.delta_l * cfg.p_u
    return p_k + cfg.K * cfg.P_UE + cfg.M * cfg.P_AP


def transmit_power(w: np.ndarray, cfg: NetworkConfig) -> float:
    return float((w * w).sum()) * cfg.tau_l * cfg.delta_l * cfg.p_u


def energy_efficiency(w: np.ndarray, stats: EffectiveStats, order: SicOrder,
                      cfg: NetworkConfig) -> float:
    """Instantaneous EE: summed rate divided by total power."""
    gamma = sinr(w, stats, order, mode="sic")
    return float(rate(gamma).sum()) / total_power(w, cfg)


def check_constraints(w: np.ndarray, stats: EffectiveStats, order: SicOrder,
                      cfg: NetworkConfig) -> tuple[bool, bool, bool]:
    """(sic_ok, norm_ok, power_ok) flags; never raises.

    sic_ok requires, for every SIC position l >= 2, the w^2-weighted
    margin of the decoded UE's power over all earlier UEs to reach the
    receiver sensitivity P_s.
    """
    sig_sorted = stats.sig[:, order.perm]
    w_sorted = w[:, order.perm]
    before = np.cumsum(sig_sorted, axis=1) - sig_sorted
    margins = np.einsum("ml,ml->l", w_sorted * w_sorted, sig_sorted - before)
    sic_ok = bool(np.all(margins[1:] >= cfg.P_s))
    norm_ok = bool(np.all(np.abs(w.sum(axis=0) - 1.0) <= COLUMN_SUM_TOL))
    power_ok = transmit_power(w, cfg) <= cfg.P_max
    return sic_ok, norm_ok, power_ok


def reward(eta_t: float, eta_prev: float) -> float:
    """EE difference, the unpenalized learning signal."""
    return eta_t - eta_prev


@dataclass
class PenaltyState:
    """Running mean of |unpenalized reward|, scaled into a penalty.

    Each violated constraint at a step subtracts
    scale * mean(|reward| over the preceding steps).
    """

    scale: float = 0.1
    _sum_abs: float = 0.0
    _count: int = 0

    def current(self) -> float:
        if self._count == 0:
            return 0.0
        return self.scale * self._sum_abs / self._count

    def update(self, base_reward: float) -> None:
        self._sum_abs += abs(base_reward)
        self._count += 1


def env_step(prev, action: np.ndarray, stats: EffectiveStats, order: SicOrder,
             cfg: NetworkConfig, penalty: PenaltyState | None = None) -> StepOutcome:
    """One MDP transition.  `prev` is the previous StepOutcome or the
    initial EE value (float).  Deterministic in the action."""
    eta_prev = prev.ee if isinstance(prev, StepOutcome) else float(prev)
    gamma = sinr(action, stats, order, mode="sic")
    rates = rate(gamma)
    p_total = total_power(action, cfg)
    ee = float(rates.sum()) / p_total
    base = reward(ee, eta_prev)
    sic_ok, norm_ok, power_ok = check_constraints(action, stats, order, cfg)
    violations = int(not sic_ok) + int(not power_ok)
    if penalty is not None:
        r = base - penalty.current() * violations
        penalty.update(base)
    else:
        r = base
    return StepOutcome(next_state=gamma, reward=r, ee=ee, rates=rates,
                       p_total=p_total, sic_ok=sic_ok, norm_ok=norm_ok,
                       power_ok=power_ok)


def baseline_waterfilling(stats: EffectiveStats) -> np.ndarray:
    """Proportional allocation: stronger expected channel, larger weight."""
    colsums = stats.sig.sum(axis=0)
    if np.any(colsums <= 0.0):
        raise DegenerateColumn("a UE column of sig is all zero")
    return stats.sig / colsums


def baseline_random(cfg: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform random weights, column-renormalized."""
    w = rng.uniform(0.0, 1.0, size=(cfg.M, cfg.K))
    return w / w.sum(axis=0, keepdims=True)


def uniform_matrix(cfg: NetworkConfig) -> np.ndarray:
    return np.full((cfg.M, cfg.K), 1.0 / cfg.M)


class CellFreeEnv:
    """Stateful shell over the pure step function.

    Owns the previous-EE scalar and the penalty accumulator; everything
    else (stats, order, config) is fixed per run.  reset() draws a
    random valid matrix and starts from its SINR, so the initial state
    always lies in the reachable set.
    """

    def __init__(self, cfg: NetworkConfig, stats: EffectiveStats,
                 order: SicOrder, penalty_scale: float = 0.1):
        self.cfg = cfg
        self.stats = stats
        self.order = order
        self.penalty = PenaltyState(scale=penalty_scale)
        self.eta_prev = 0.0

    @property
    def state_dim(self) -> int:
        return self.cfg.K

    @property
    def action_shape(self) -> tuple[int, int]:
        return (self.cfg.M, self.cfg.K)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        w0 = baseline_random(self.cfg, rng)
        gamma0 = sinr(w0, self.stats, self.order, mode="sic")
        self.eta_prev = energy_efficiency(w0, self.stats, self.order, self.cfg)
        return gamma0

    def step(self, action: np.ndarray) -> StepOutcome:
        outcome = env_step(self.eta_prev, action, self.stats, self.order,
                           self.cfg, self.penalty)
        self.eta_prev = outcome.ee
        return outcome
