"""DDPG agent: replay buffer, actor/critic updates, training loop.

The actor maps the per-UE SINR state to a beamforming matrix through a
column-softmax head, so every emitted action satisfies the
normalization constraint by construction.  The critic scores the
concatenation of state and flattened action.  Online networks learn;
target copies trail them through Polyak averaging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Hyperparameters
from .envsim import CellFreeEnv
from . import neural
from .neural import AdamState, MlpParams, MlpSpec


class InsufficientSamples(Exception):
    """Mini-batch requested before the buffer holds N transitions."""


@dataclass(frozen=True)
class Transition:
    state: np.ndarray        # (K,)
    action: np.ndarray       # (M*K,) flattened row-major
    reward: float
    next_state: np.ndarray   # (K,)


@dataclass
class TransitionBatch:
    """Column-oriented mini-batch; indexable like a list of transitions."""

    states: np.ndarray       # (N, K)
    actions: np.ndarray      # (N, M*K)
    rewards: np.ndarray      # (N,)
    next_states: np.ndarray  # (N, K)

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, i: int) -> Transition:
        return Transition(self.states[i], self.actions[i],
                          float(self.rewards[i]), self.next_states[i])


class ReplayBuffer:
    """Bounded FIFO store backed by preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.cursor = 0
        self.count = 0

    def clear(self) -> None:
        self.cursor = 0
        self.count = 0

    def push(self, state: np.ndarray, action: np.ndarray, reward: float,
             next_state: np.ndarray) -> None:
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.cursor = (i + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)


def store(buffer: ReplayBuffer, transition: Transition) -> ReplayBuffer:
    """Append a transition, evicting the oldest when full."""
    buffer.push(transition.state, transition.action, transition.reward,
                transition.next_state)
    return buffer


def sample_minibatch(buffer: ReplayBuffer, n: int,
                     rng: np.random.Generator) -> TransitionBatch:
    """Uniform sampling with replacement over occupied slots."""
    if buffer.count < n:
        raise InsufficientSamples(
            f"buffer holds {buffer.count} < {n} transitions")
    idx = rng.integers(0, buffer.count, size=n)
    return TransitionBatch(states=buffer.states[idx],
                           actions=buffer.actions[idx],
                           rewards=buffer.rewards[idx],
                           next_states=buffer.next_states[idx])


@dataclass
class Agent:
    M: int
    K: int
    actor_spec: MlpSpec
    critic_spec: MlpSpec
    actor: MlpParams
    actor_target: MlpParams
    critic: MlpParams
    critic_target: MlpParams
    adam_actor: AdamState
    adam_critic: AdamState
    noise_sigma: float


def build_specs(M: int, K: int, hidden_dims: tuple[int, ...],
                leaky_slope: float = 0.01) -> tuple[MlpSpec, MlpSpec]:
    """(actor, critic) shapes for an M-AP / K-UE network."""
    actor = MlpSpec(input_dim=K, hidden_dims=hidden_dims, output_dim=M * K,
                    leaky_slope=leaky_slope, output="column-softmax",
                    softmax_rows=M, softmax_cols=K)
    critic = MlpSpec(input_dim=K + M * K, hidden_dims=hidden_dims,
                     output_dim=1, leaky_slope=leaky_slope, output="none")
    return actor, critic


def new_agent(M: int, K: int, hp: Hyperparameters,
              rng: np.random.Generator) -> Agent:
    """Fresh agent; targets start as exact copies of the online nets."""
    actor_spec, critic_spec = build_specs(M, K, hp.hidden_dims)
    actor = neural.init_params(actor_spec, rng)
    critic = neural.init_params(critic_spec, rng)
    return Agent(M=M, K=K, actor_spec=actor_spec, critic_spec=critic_spec,
                 actor=actor, actor_target=actor.copy(),
                 critic=critic, critic_target=critic.copy(),
                 adam_actor=neural.init_adam(actor),
                 adam_critic=neural.init_adam(critic),
                 noise_sigma=hp.noise_sigma0)


def select_action(agent: Agent, state: np.ndarray, explore: bool,
                  rng: np.random.Generator) -> np.ndarray:
    """Policy output as an (M, K) matrix, optionally with exploration.

    Gaussian noise is added before clipping to [0, 1]; columns are then
    renormalized so the result is always a valid action.  A column
    clipped to all zeros falls back to uniform weights.
    """
    out, _ = neural.forward(agent.actor, agent.actor_spec, state[None, :])
    w = out[0].reshape(agent.M, agent.K)
    if explore:
        w = np.clip(w + rng.normal(0.0, agent.noise_sigma, size=w.shape),
                    0.0, 1.0)
        colsums = w.sum(axis=0)
        dead = colsums <= 1e-300
        if np.any(dead):
            w[:, dead] = 1.0 / agent.M
            colsums = w.sum(axis=0)
        w = w / colsums
    return w


def critic_targets(batch: TransitionBatch, agent: Agent,
                   zeta: float) -> np.ndarray:
    """Bellman targets y = r + zeta * Q'(s', u'(s')); no terminal
    masking (continuing task)."""
    a_next, _ = neural.forward(agent.actor_target, agent.actor_spec,
                               batch.next_states)
    x = np.concatenate([batch.next_states, a_next], axis=1)
    q_next, _ = neural.forward(agent.critic_target, agent.critic_spec, x)
    return batch.rewards + zeta * q_next[:, 0]


def critic_update(agent: Agent, batch: TransitionBatch, targets: np.ndarray,
                  lr_q: float) -> float:
    """One Adam descent step on the mean squared Bellman error.

    Returns the pre-update loss.  Only the online critic moves.
    """
    n = len(batch)
    x = np.concatenate([batch.states, batch.actions], axis=1)
    q, cache = neural.forward(agent.critic, agent.critic_spec, x)
    diff = q[:, 0] - targets
    loss = float(diff @ diff) / n
    grad_out = (2.0 / n) * diff[:, None]
    grads, _ = neural.backward(agent.critic, agent.critic_spec, cache, grad_out)
    neural.adam_step(agent.critic, grads, agent.adam_critic, lr_q)
    return loss


def actor_update(agent: Agent, batch: TransitionBatch, lr_u: float) -> float:
    """One Adam ascent step on mean Q(s, u(s)).

    The critic's input gradient supplies dQ/da, chained through the
    actor; the critic itself stays frozen.  Returns the pre-update
    objective value.
    """
    n = len(batch)
    a, cache_a = neural.forward(agent.actor, agent.actor_spec, batch.states)
    x = np.concatenate([batch.states, a], axis=1)
    q, cache_c = neural.forward(agent.critic, agent.critic_spec, x)
    objective = float(q[:, 0].mean())
    grad_out = np.full((n, 1), 1.0 / n)
    _, grad_in = neural.backward(agent.critic, agent.critic_spec, cache_c,
                                 grad_out)
    grad_action = grad_in[:, agent.K:]
    grads, _ = neural.backward(agent.actor, agent.actor_spec, cache_a,
                               grad_action)
    for g in grads.arrays():          # Adam descends; flip for ascent
        np.negative(g, out=g)
    neural.adam_step(agent.actor, grads, agent.adam_actor, lr_u)
    return objective


def soft_update(agent: Agent, tau: float) -> None:
    """Polyak-blend both target networks toward the online ones."""
    neural.polyak_update(agent.actor_target, agent.actor, tau)
    neural.polyak_update(agent.critic_target, agent.critic, tau)


@dataclass
class TrainHistory:
    """Per-episode training metrics."""

    episode: np.ndarray            # 1-based
    mean_ee: np.ndarray
    mean_reward: np.ndarray
    critic_loss: np.ndarray        # nan before the buffer warms up
    violations: np.ndarray         # violated-constraint count, summed


def train(env: CellFreeEnv, agent: Agent, hp: Hyperparameters,
          rng: np.random.Generator | None = None) -> TrainHistory:
    """Run the full training loop; deterministic given the generator."""
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    action_dim = agent.M * agent.K
    buffer = ReplayBuffer(hp.buffer_capacity, agent.K, action_dim)
    episodes = hp.episodes
    steps = hp.steps_per_episode
    hist_ee = np.zeros(episodes)
    hist_reward = np.zeros(episodes)
    hist_loss = np.full(episodes, np.nan)
    hist_viol = np.zeros(episodes, dtype=int)

    def update_once() -> float:
        batch = sample_minibatch(buffer, hp.N, rng)
        targets = critic_targets(batch, agent, hp.zeta)
        loss = critic_update(agent, batch, targets, hp.lr_Q)
        actor_update(agent, batch, hp.lr_u)
        soft_update(agent, hp.tau)
        return loss

    for ep in range(episodes):
        if hp.buffer_reset_per_episode:
            buffer.clear()
        state = env.reset(rng)
        ee_sum = 0.0
        reward_sum = 0.0
        loss_sum = 0.0
        n_updates = 0
        violations = 0
        for _ in range(steps):
            action = select_action(agent, state, explore=True, rng=rng)
            outcome = env.step(action)
            buffer.push(state, action.ravel(), outcome.reward,
                        outcome.next_state)
            if hp.update_cadence == "per-step" and buffer.count >= hp.N:
                loss_sum += update_once()
                n_updates += 1
            state = outcome.next_state
            ee_sum += outcome.ee
            reward_sum += outcome.reward
            violations += int(not outcome.sic_ok) + int(not outcome.norm_ok) \
                + int(not outcome.power_ok)
        if hp.update_cadence == "per-episode" and buffer.count >= hp.N:
            loss_sum += update_once()
            n_updates += 1
        hist_ee[ep] = ee_sum / steps
        hist_reward[ep] = reward_sum / steps
        if n_updates:
            hist_loss[ep] = loss_sum / n_updates
        hist_viol[ep] = violations
        agent.noise_sigma = hp.noise_sigma0 * hp.noise_decay ** (ep + 1)

    return TrainHistory(episode=np.arange(1, episodes + 1),
                        mean_ee=hist_ee, mean_reward=hist_reward,
                        critic_loss=hist_loss, violations=hist_viol)
