"""Topology, pilots, channel realizations and MMSE channel estimation.

Everything here is a pure function of its inputs plus an explicitly
passed seeded generator, so the whole layer is deterministic and safe
to call from multiple threads (one generator per thread).

The closed-form effective-channel statistics produced at the end are
the deterministic kernel the environment runs on: instantaneous
channel powers are replaced by their expectations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


@dataclass(frozen=True)
class Topology:
    """AP/UE positions, distances and large-scale coefficients.

    beta[m, k] = varsigma0 / d[m, k]^2 with d clamped below at d_min.
    """

    ap_positions: np.ndarray   # (M, 2) m
    ue_positions: np.ndarray   # (K, 2) m
    d: np.ndarray              # (M, K) m
    beta: np.ndarray           # (M, K) linear


@dataclass(frozen=True)
class PilotBook:
    """Pilot matrix (tau_l, K), column k = unit-norm pilot of UE k."""

    phi: np.ndarray            # (tau_l, K) complex
    gram: np.ndarray           # (K, K) complex, gram[k, n] = phi_k^H phi_n


@dataclass(frozen=True)
class ChannelState:
    """One small-scale realization and the composite channel."""

    h: np.ndarray              # (M, K) complex, unit-variance entries
    g: np.ndarray              # (M, K) complex, sqrt(beta) * h


@dataclass(frozen=True)
class EstimationResult:
    mu: np.ndarray             # (M, K) real estimation coefficients
    g_hat: np.ndarray          # (M, K) complex channel estimates
    y_proj: np.ndarray         # (M, K) complex projected observations


@dataclass(frozen=True)
class EffectiveStats:
    """Expected effective-channel powers driving the environment.

    sig[m, n]        expected desired/inter-user power of UE n at AP m
    cont[m, p, q]    expected pilot-contamination power (q != p)
    psi[m, k]        expected estimation-noise-plus-AWGN term
    channel_sum[k]   sum over APs of sig[:, k], the SIC ordering key
    cont_ap_total[m] cached sum of cont over (p, q), reused per step
    """

    sig: np.ndarray
    cont: np.ndarray
    psi: np.ndarray
    channel_sum: np.ndarray
    cont_ap_total: np.ndarray


def _uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, size=n))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_topology(cfg: NetworkConfig, rng: np.random.Generator) -> Topology:
    """Drop APs and UEs uniformly in the disk and compute path losses."""
    ap = _uniform_disk(cfg.M, cfg.radius, rng)
    ue = _uniform_disk(cfg.K, cfg.radius, rng)
    d = np.linalg.norm(ap[:, None, :] - ue[None, :, :], axis=2)
    d = np.maximum(d, cfg.d_min)   # inverse-square law diverges below d_min
    beta = cfg.varsigma0 * d ** (-2.0)
    return Topology(ap_positions=ap, ue_positions=ue, d=d, beta=beta)


def _complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) * scale


def generate_pilots(cfg: NetworkConfig, rng: np.random.Generator) -> PilotBook:
    """Assign unit-norm pilot sequences to UEs.

    orthonormal-reuse: columns of a random tau_l x tau_l unitary,
    reused round-robin when K exceeds tau_l (reuse pairs collide
    exactly, everything else is orthogonal).
    random-unit: independent normalized complex Gaussian vectors, so
    every pair overlaps with probability 1.
    """
    tau, K = cfg.tau_l, cfg.K
    if cfg.pilot_mode == "orthonormal-reuse":
        q, _ = np.linalg.qr(_complex_normal(rng, (tau, tau)))
        phi = q[:, np.arange(K) % tau]
    else:
        phi = _complex_normal(rng, (tau, K))
        phi = phi / np.linalg.norm(phi, axis=0, keepdims=True)
    gram = phi.conj().T @ phi
    return PilotBook(phi=phi, gram=gram)


def draw_channel(topo: Topology, rng: np.random.Generator) -> ChannelState:
    """One i.i.d. unit-variance small-scale realization, scaled by beta."""
    h = _complex_normal(rng, topo.beta.shape)
    return ChannelState(h=h, g=np.sqrt(topo.beta) * h)


def receive_pilots(ch: ChannelState, pilots: PilotBook, cfg: NetworkConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """Received pilot block, one row per AP.

    Row m is the superposition of all UE pilots weighted by
    sqrt(tau_l * delta_l) * g[m, k], plus AWGN with per-entry variance
    sigma2.  Shape (M, tau_l).
    """
    signal = np.sqrt(cfg.tau_l * cfg.delta_l) * (ch.g @ pilots.phi.T)
    noise = _complex_normal(rng, signal.shape, variance=cfg.sigma2)
    return signal + noise


def project_pilot(Y: np.ndarray, pilots: PilotBook) -> np.ndarray:
    """Project each AP's received block onto every UE pilot: (M, K)."""
    return Y @ pilots.phi.conj()


def mmse_coefficients(topo: Topology, pilots: PilotBook,
                      cfg: NetworkConfig) -> np.ndarray:
    """Estimation coefficients minimizing mean squared channel error.

    mu[m, k] = sqrt(tau_l delta_l) beta[m, k]
               / (tau_l delta_l * S[m, k] + sigma2)

    where the interference sum S depends on cfg.mmse_index_mode:
      as-printed: S = beta[m, k] * sum_n |gram[k, n]|^2
      per-n:      S = sum_n beta[m, n] * |gram[k, n]|^2
    The per-n variant is the textbook least-squares denominator; the
    as-printed one keeps the desired UE's own beta inside the sum.
    Both coincide for orthogonal pilots.
    """
    te = cfg.tau_l * cfg.delta_l
    gram_sq = np.abs(pilots.gram) ** 2        # (K, K)
    if cfg.mmse_index_mode == "per-n":
        interference = topo.beta @ gram_sq.T  # (M, K): sum_n beta_mn |gram_kn|^2
    else:
        interference = topo.beta * gram_sq.sum(axis=1)[None, :]
    return np.sqrt(te) * topo.beta / (te * interference + cfg.sigma2)


def estimate_channel(y_proj: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Channel estimates: elementwise mu * projected observation."""
    return mu * y_proj


def estimate(ch: ChannelState, topo: Topology, pilots: PilotBook,
             cfg: NetworkConfig, rng: np.random.Generator) -> EstimationResult:
    """Full pilot round: receive, project, scale.  Convenience wrapper."""
    Y = receive_pilots(ch, pilots, cfg, rng)
    y_proj = project_pilot(Y, pilots)
    mu = mmse_coefficients(topo, pilots, cfg)
    return EstimationResult(mu=mu, g_hat=estimate_channel(y_proj, mu),
                            y_proj=y_proj)


def effective_channel_stats(topo: Topology, pilots: PilotBook,
                            cfg: NetworkConfig) -> EffectiveStats:
    """Closed-form expectations of the effective-channel powers.

    sig[m, n]     = tau_l delta_l p_u * mu[m, n]^2 * beta[m, n]
    cont[m, p, q] = tau_l delta_l p_u * mu[m, p]^2 * |gram[p, q]|^2
                    * beta[m, q]            for q != p, else 0
    psi[m, k]     = sum_s p_u mu[m, s]^2 sigma2 + sigma2
                    (k-independent; stored per (m, k) because the mu
                    terms vary with the AP index)
    """
    mu = mmse_coefficients(topo, pilots, cfg)
    tep = cfg.tau_l * cfg.delta_l * cfg.p_u
    sig = tep * mu ** 2 * topo.beta

    gram_sq = np.abs(pilots.gram) ** 2
    cont = tep * (mu ** 2)[:, :, None] * gram_sq[None, :, :] * topo.beta[:, None, :]
    K = cfg.K
    cont[:, np.arange(K), np.arange(K)] = 0.0

    psi_ap = cfg.p_u * (mu ** 2).sum(axis=1) * cfg.sigma2 + cfg.sigma2  # (M,)
    psi = np.broadcast_to(psi_ap[:, None], sig.shape).copy()

    return EffectiveStats(sig=sig, cont=cont, psi=psi,
                          channel_sum=sig.sum(axis=0),
                          cont_ap_total=cont.sum(axis=(1, 2)))
