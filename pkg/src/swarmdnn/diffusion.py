"""Conditional denoising-diffusion action generator and its learning substrate.

A small tanh MLP predicts the noise added to an action-logit vector; the
reverse chain turns a Gaussian sample into logits conditioned on an agent
observation.  Forward/backward passes are hand-rolled numpy so gradients can
flow through the whole reverse chain (fresh noises treated as constants),
which the actor update needs.

Checkpoint format (``save_params``/``load_params``): a text magic line
``SWARMDNN-CKPT-1``, one JSON header line listing named tensors with shapes,
then the concatenated row-major float64 payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = "SWARMDNN-CKPT-1"

# Ten steps keep per-action latency low; the linear beta range is chosen so
# the forward process actually reaches near-pure noise (alpha_bar_T ~ 0.03),
# which both conditions the noise-prediction task and lets the reverse chain
# dominate the x_T sample when generating decisions.
DEFAULT_T = 10
DEFAULT_BETA_START = 0.05
DEFAULT_BETA_END = 0.5
HIDDEN_WIDTHS = (256, 256)


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def T(self) -> int:
        return len(self.betas)


def make_schedule(T: int = DEFAULT_T, beta_start: float = DEFAULT_BETA_START,
                  beta_end: float = DEFAULT_BETA_END) -> NoiseSchedule:
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    betas = np.linspace(beta_start, beta_end, T)
    alphas = 1.0 - betas
    return NoiseSchedule(betas=betas, alphas=alphas,
                         alpha_bars=np.cumprod(alphas))


def forward_sample(x0, t: int, noise, schedule: NoiseSchedule):
    """Noised sample at step t (1-based): sqrt(ab)*x0 + sqrt(1-ab)*noise."""
    ab = schedule.alpha_bars[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


def reverse_step(x_t, t: int, eps_pred, fresh_noise, schedule: NoiseSchedule):
    """One reverse-chain update from step t to t-1 (elementwise)."""
    a = schedule.alphas[t - 1]
    ab = schedule.alpha_bars[t - 1]
    b = schedule.betas[t - 1]
    return (x_t / np.sqrt(a)
            - (b / np.sqrt(a * (1.0 - ab))) * eps_pred
            + np.sqrt(b) * fresh_noise)


# ---------------------------------------------------------------------------
# MLP with explicit gradients (tanh hidden layers, linear head)
# ---------------------------------------------------------------------------

def init_mlp(rng: np.random.Generator, sizes) -> list:
    """Parameters [(W, b), ...]; weights ~ N(0, 1/fan_in), zero biases."""
    params = []
    for n_in, n_out in zip(sizes, sizes[1:]):
        w = rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)
        params.append((w, np.zeros(n_out)))
    return params


def mlp_forward(params, x):
    """Returns (output, cache); x is (d,) or (batch, d)."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cache = [h]
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        z = h @ w + b
        h = z if i == last else np.tanh(z)
        cache.append(h)
    out = h if np.asarray(x).ndim > 1 else h[0]
    return out, cache


def mlp_backward(params, cache, grad_out):
    """Gradients for a cached forward pass.

    Returns (param_grads, grad_input) where param_grads mirrors params and
    gradients are summed over the batch.
    """
    g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        w, _ = params[i]
        h_in = cache[i]
        if i != len(params) - 1:
            g = g * (1.0 - cache[i + 1] ** 2)  # through tanh
        grads[i] = (h_in.T @ g, g.sum(axis=0))
        g = g @ w.T
    return grads, g


def zeros_like_params(params):
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]


def clone_params(params):
    return [(w.copy(), b.copy()) for w, b in params]


def add_scaled(params, grads, scale):
    """params <- params + scale * grads, in place."""
    for (w, b), (gw, gb) in zip(params, grads):
        w += scale * gw
        b += scale * gb


@dataclass
class DenoiserNet:
    """Noise predictor eps(x_t, g, t): input [x_t, g, t/T] -> logits-dim."""

    params: list
    obs_dim: int
    action_dim: int
    T: int

    @classmethod
    def create(cls, rng: np.random.Generator, obs_dim: int, action_dim: int,
               T: int = DEFAULT_T, hidden=HIDDEN_WIDTHS) -> "DenoiserNet":
        sizes = (action_dim + obs_dim + 1, *hidden, action_dim)
        return cls(params=init_mlp(rng, sizes), obs_dim=obs_dim,
                   action_dim=action_dim, T=T)

    def net_input(self, x_t, g, t: int):
        x_t = np.atleast_2d(x_t)
        g = np.atleast_2d(g)
        tcol = np.full((x_t.shape[0], 1), t / self.T)
        return np.concatenate([x_t, g, tcol], axis=1)

    def forward(self, x_t, g, t: int):
        out, _ = mlp_forward(self.params, self.net_input(x_t, g, t))
        return out


def generate_action_logits(g, net: DenoiserNet, schedule: NoiseSchedule,
                           rng: np.random.Generator | None) -> np.ndarray:
    """Denoise a Gaussian sample down to action logits x_0.

    The final step adds no fresh noise, so the chain is deterministic given
    x_T and the parameters.  ``rng=None`` selects evaluation mode: the whole
    chain runs noise-free from x_T = 0 (the prior mean), making the decoded
    action a pure function of parameters and conditioning.
    """
    if rng is None:
        x = np.zeros(net.action_dim)
    else:
        x = rng.standard_normal(net.action_dim)
    for t in range(schedule.T, 0, -1):
        eps = net.forward(x, g, t)
        fresh = (rng.standard_normal(net.action_dim)
                 if t > 1 and rng is not None else np.zeros(net.action_dim))
        x = reverse_step(x, t, eps, fresh, schedule)
    return np.asarray(x, dtype=np.float64).reshape(net.action_dim)


def generate_chain_batch(g_batch, net: DenoiserNet, schedule: NoiseSchedule,
                         x_T, fresh_noises=None):
    """Run the reverse chain on a batch, caching everything for backprop.

    fresh_noises: (T-1, batch, dim) noises for steps T..2, or None for a
    deterministic chain.  Returns (x0, chain_cache).
    """
    x = np.atleast_2d(x_T)
    batch = x.shape[0]
    steps = []
    for t in range(schedule.T, 0, -1):
        inp = net.net_input(x, np.atleast_2d(g_batch), t)
        eps, cache = mlp_forward(net.params, inp)
        if t > 1 and fresh_noises is not None:
            fresh = fresh_noises[schedule.T - t]
        else:
            fresh = np.zeros((batch, net.action_dim))
        x_next = reverse_step(x, t, eps, fresh, schedule)
        steps.append((t, cache))
        x = x_next
    return x, steps


def chain_backward(grad_x0, net: DenoiserNet, schedule: NoiseSchedule, steps):
    """Backpropagate d(loss)/d(x0) through the cached reverse chain.

    Returns parameter gradients (summed over the batch); fresh noises and
    x_T are constants under reparameterization.
    """
    grads = zeros_like_params(net.params)
    g = np.atleast_2d(grad_x0)
    for t, cache in reversed(steps):
        a = schedule.alphas[t - 1]
        ab = schedule.alpha_bars[t - 1]
        c = schedule.betas[t - 1] / np.sqrt(a * (1.0 - ab))
        step_grads, grad_in = mlp_backward(net.params, cache, -c * g)
        for acc, sg in zip(grads, step_grads):
            acc[0][...] += sg[0]
            acc[1][...] += sg[1]
        g = g / np.sqrt(a) + grad_in[:, :net.action_dim]
    return grads


def denoising_loss(net: DenoiserNet, x0_batch, g_batch,
                   schedule: NoiseSchedule, rng: np.random.Generator,
                   with_grads: bool = False):
    """Mean over the batch of the squared noise-prediction error norm."""
    x0 = np.atleast_2d(x0_batch)
    g = np.atleast_2d(g_batch)
    batch = x0.shape[0]
    ts = rng.integers(1, schedule.T + 1, size=batch)
    eps = rng.standard_normal(x0.shape)
    ab = schedule.alpha_bars[ts - 1][:, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    tcol = (ts / net.T)[:, None]
    inp = np.concatenate([x_t, g, tcol], axis=1)
    pred, cache = mlp_forward(net.params, inp)
    diff = pred - eps
    loss = float((diff ** 2).sum(axis=1).mean())
    if not with_grads:
        return loss
    grads, _ = mlp_backward(net.params, cache, 2.0 * diff / batch)
    return loss, grads


# ---------------------------------------------------------------------------
# checkpoint io
# ---------------------------------------------------------------------------

def save_params(path, named_params: dict) -> None:
    """named_params: {name: list[(W, b), ...]} saved in sorted name order."""
    header = []
    payload = []
    for name in sorted(named_params):
        for i, (w, b) in enumerate(named_params[name]):
            header.append({"name": f"{name}/layer{i}/W", "shape": list(w.shape)})
            payload.append(np.ascontiguousarray(w, dtype="<f8").ravel())
            header.append({"name": f"{name}/layer{i}/b", "shape": list(b.shape)})
            payload.append(np.ascontiguousarray(b, dtype="<f8").ravel())
    with open(path, "wb") as fh:
        fh.write((CHECKPOINT_MAGIC + "\n").encode())
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.concatenate(payload).tobytes() if payload else b"")


def load_params(path) -> dict:
    """Inverse of save_params: {name: [(W, b), ...]}."""
    raw = Path(path).read_bytes()
    nl1 = raw.index(b"\n")
    if raw[:nl1].decode() != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
    nl2 = raw.index(b"\n", nl1 + 1)
    header = json.loads(raw[nl1 + 1:nl2].decode())
    flat = np.frombuffer(raw[nl2 + 1:], dtype="<f8")
    tensors = {}
    off = 0
    for entry in header:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        tensors[entry["name"]] = flat[off:off + size].reshape(entry["shape"]).copy()
        off += size
    named: dict = {}
    for key in tensors:
        name, layer, kind = key.rsplit("/", 2)
        idx = int(layer.removeprefix("layer"))
        named.setdefault(name, {})
        named[name].setdefault(idx, [None, None])
        named[name][idx][0 if kind == "W" else 1] = tensors[key]
    return {name: [tuple(layers[i]) for i in sorted(layers)]
            for name, layers in named.items()}
