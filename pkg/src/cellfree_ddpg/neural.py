"""Minimal dense-network engine: forward, exact backprop, Adam, Polyak.

Double precision throughout; gradients are exact reverse-mode
derivatives of the output contracted with a caller-supplied output
gradient, which keeps the engine agnostic of any particular loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MlpSpec:
    """Network shape and activations.

    Hidden layers use a leaky rectifier with the given negative slope.
    output == "column-softmax" reshapes the output vector to
    (softmax_rows, softmax_cols) and normalizes every column to sum 1,
    which makes the actor emit valid beamforming matrices by
    construction.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    leaky_slope: float = 0.01
    output: str = "none"              # none | column-softmax
    softmax_rows: int = 0
    softmax_cols: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("dims must be positive")
        if any(d < 1 for d in self.hidden_dims):
            raise ValueError("hidden dims must be positive")
        if self.output not in ("none", "column-softmax"):
            raise ValueError(f"unknown output activation {self.output!r}")
        if self.output == "column-softmax":
            if self.softmax_rows * self.softmax_cols != self.output_dim:
                raise ValueError("column-softmax needs rows*cols == output_dim")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)


@dataclass
class MlpParams:
    """Per-layer weight matrices (fan_in, fan_out) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams(weights=[w.copy() for w in self.weights],
                         biases=[b.copy() for b in self.biases])

    def zeros_like(self) -> "MlpParams":
        return MlpParams(weights=[np.zeros_like(w) for w in self.weights],
                         biases=[np.zeros_like(b) for b in self.biases])

    def arrays(self):
        """Weights and biases interleaved per layer, a stable flat view."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class ForwardCache:
    """Intermediates retained for backprop."""

    inputs: list[np.ndarray]          # input to each affine layer
    pre_acts: list[np.ndarray]        # pre-activation of each hidden layer
    softmax: np.ndarray | None = None # (B, rows, cols) when column-softmax


def init_params(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Fan-in scaled zero-mean init (std 1/sqrt(fan_in)); zero biases."""
    dims = spec.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in),
                                  size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def init_adam(params: MlpParams, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    arrays = params.arrays()
    return AdamState(m=[np.zeros_like(a) for a in arrays],
                     v=[np.zeros_like(a) for a in arrays],
                     step=0, beta1=beta1, beta2=beta2, eps=eps)


def _column_softmax(z: np.ndarray, rows: int, cols: int) -> np.ndarray:
    z3 = z.reshape(z.shape[0], rows, cols)
    z3 = z3 - z3.max(axis=1, keepdims=True)
    e = np.exp(z3)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: MlpParams, spec: MlpSpec,
            x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass.  x has shape (B, input_dim)."""
    x = np.atleast_2d(x)
    n_hidden = len(spec.hidden_dims)
    inputs, pre_acts = [], []
    a = x
    for i in range(n_hidden):
        inputs.append(a)
        z = a @ params.weights[i] + params.biases[i]
        pre_acts.append(z)
        a = np.where(z > 0.0, z, spec.leaky_slope * z)
    inputs.append(a)
    z_out = a @ params.weights[n_hidden] + params.biases[n_hidden]
    if spec.output == "column-softmax":
        sm = _column_softmax(z_out, spec.softmax_rows, spec.softmax_cols)
        y = sm.reshape(z_out.shape[0], spec.output_dim)
        return y, ForwardCache(inputs=inputs, pre_acts=pre_acts, softmax=sm)
    return z_out, ForwardCache(inputs=inputs, pre_acts=pre_acts)


def backward(params: MlpParams, spec: MlpSpec, cache: ForwardCache,
             output_grad: np.ndarray) -> tuple[MlpParams, np.ndarray]:
    """Exact gradients of sum(output * output_grad).

    Returns gradients shaped like params, plus the gradient with
    respect to the input batch (the actor update chains through it).
    """
    g = np.atleast_2d(output_grad)
    if spec.output == "column-softmax":
        s = cache.softmax
        g3 = g.reshape(s.shape)
        dot = np.einsum("brc,brc->bc", g3, s)
        g = (s * (g3 - dot[:, None, :])).reshape(g.shape[0], spec.output_dim)

    n_layers = len(params.weights)
    grad_w: list[np.ndarray] = [None] * n_layers
    grad_b: list[np.ndarray] = [None] * n_layers
    dz = g
    for i in range(n_layers - 1, -1, -1):
        a_in = cache.inputs[i]
        grad_w[i] = a_in.T @ dz
        grad_b[i] = dz.sum(axis=0)
        da = dz @ params.weights[i].T
        if i > 0:
            z = cache.pre_acts[i - 1]
            dz = da * np.where(z > 0.0, 1.0, spec.leaky_slope)
        else:
            dz = da
    return MlpParams(weights=grad_w, biases=grad_b), dz


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState,
              lr: float) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam descent step.

    Moment buffers are updated in place (single-owner training loop);
    parameter arrays are updated in place as well and the same
    containers are returned.
    """
    state.step += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        np.multiply(m, b1, out=m)
        m += (1.0 - b1) * g
        np.multiply(v, b2, out=v)
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def polyak_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """Convex blend target' = tau*online + (1-tau)*target, elementwise."""
    for t, o in zip(target.arrays(), online.arrays()):
        np.multiply(t, 1.0 - tau, out=t)
        t += tau * o
    return target


def flops_inference_single(spec: MlpSpec) -> int:
    """Multiply-accumulate count of one inference pass: the sum of
    consecutive layer-width products."""
    dims = spec.layer_dims
    return int(sum(a * b for a, b in zip(dims[:-1], dims[1:])))


def flops_inference(spec_policy: MlpSpec, spec_value: MlpSpec) -> tuple[int, int]:
    """(policy FLOPS, value FLOPS) for one forward pass each."""
    return flops_inference_single(spec_policy), flops_inference_single(spec_value)


# --- parameter snapshot files ------------------------------------------------

SNAPSHOT_HEADER = "cellfree-mlp-params v1"


def save_params(path: str, params: MlpParams) -> None:
    """Text snapshot: versioned header, layer shapes, then row-major
    weights and biases (shortest round-trip float repr)."""
    lines = [SNAPSHOT_HEADER, f"layers {len(params.weights)}"]
    for w in params.weights:
        lines.append(f"shape {w.shape[0]} {w.shape[1]}")
    for w, b in zip(params.weights, params.biases):
        lines.extend(repr(x) for x in w.ravel())
        lines.extend(repr(x) for x in b)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_params(path: str) -> MlpParams:
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != SNAPSHOT_HEADER:
        raise ValueError(f"not a parameter snapshot: {path}")
    n_layers = int(lines[1].split()[1])
    shapes = []
    for i in range(n_layers):
        _, a, b = lines[2 + i].split()
        shapes.append((int(a), int(b)))
    values = iter(lines[2 + n_layers:])
    weights, biases = [], []
    for fan_in, fan_out in shapes:
        w = np.array([float(next(values)) for _ in range(fan_in * fan_out)])
        weights.append(w.reshape(fan_in, fan_out))
        biases.append(np.array([float(next(values)) for _ in range(fan_out)]))
    return MlpParams(weights=weights, biases=biases)
