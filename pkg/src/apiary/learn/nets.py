"""Small dense networks with handwritten backprop, float64 throughout.

The policy is a diagonal-Gaussian over 6 wrench channels: an MLP maps the
normalized 12-d observation to the action mean, and a state-independent
log-std vector (clamped to [LOG_STD_MIN, LOG_STD_MAX]) sets exploration
noise. A separate MLP of the same width is the value function. Hidden
activations are tanh, output heads linear.

Parameters travel as a flat list of arrays in a fixed declaration order
(actor W/b pairs, log_std, critic W/b pairs); the optimizer, the gradient
check and the checkpoint format all rely on that order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 1.0

# obs components are divided by these before the actor/critic see them:
# position error in m, rotation error in rad (full scale pi), velocities
# against a 0.5 m/s | rad/s envelope.
DEFAULT_OBS_SCALES = np.array([1.0] * 3 + [np.pi] * 3 + [0.5] * 6)


@dataclass
class MlpParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def mlp_init(sizes: list[int], rng: np.random.Generator, out_scale: float = 1.0) -> MlpParams:
    """He-style init scaled for tanh; final layer shrunk by out_scale."""
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    weights, biases = [], []
    for k in range(len(sizes) - 1):
        fan_in = sizes[k]
        w = rng.standard_normal((sizes[k], sizes[k + 1])) * np.sqrt(1.0 / fan_in)
        if k == len(sizes) - 2:
            w = w * out_scale
        weights.append(w)
        biases.append(np.zeros(sizes[k + 1]))
    return MlpParams(weights, biases)


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns (output, cache). x is (B, in) or (in,); cache feeds mlp_backward."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    cache = [x]
    h = x
    n_layers = len(params.weights)
    for k in range(n_layers):
        z = h @ params.weights[k] + params.biases[k]
        if k < n_layers - 1:
            h = np.tanh(z)
        else:
            h = z
        cache.append(h)
    return (h[0] if squeeze else h), cache


def mlp_backward(
    params: MlpParams, cache: list[np.ndarray], dy: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of sum(dy * output) w.r.t. weights and biases.

    dy is (B, out); returns (dweights, dbiases) matching params' shapes.
    """
    n_layers = len(params.weights)
    dws = [None] * n_layers
    dbs = [None] * n_layers
    grad = np.asarray(dy, dtype=np.float64)
    for k in range(n_layers - 1, -1, -1):
        h_in = cache[k]
        # d(tanh) applied at hidden layers only; output layer is linear
        if k < n_layers - 1:
            grad = grad * (1.0 - cache[k + 1] ** 2)
        dws[k] = h_in.T @ grad
        dbs[k] = grad.sum(axis=0)
        if k > 0:
            grad = grad @ params.weights[k].T
    return dws, dbs


@dataclass
class PolicyNet:
    actor: MlpParams
    log_std: np.ndarray
    critic: MlpParams
    obs_scales: np.ndarray = field(default_factory=lambda: DEFAULT_OBS_SCALES.copy())

    def __post_init__(self) -> None:
        self.log_std = np.asarray(self.log_std, dtype=np.float64)
        self.obs_scales = np.asarray(self.obs_scales, dtype=np.float64)


def policy_init(
    rng: np.random.Generator,
    obs_dim: int = 12,
    act_dim: int = 6,
    hidden: tuple[int, ...] = (64, 64),
    log_std_init: float = -0.5,
    obs_scales: np.ndarray | None = None,
) -> PolicyNet:
    actor = mlp_init([obs_dim, *hidden, act_dim], rng, out_scale=0.01)
    critic = mlp_init([obs_dim, *hidden, 1], rng)
    scales = DEFAULT_OBS_SCALES.copy() if obs_scales is None else np.asarray(obs_scales, dtype=np.float64)
    if scales.shape != (obs_dim,) or np.any(scales <= 0.0) or not np.all(np.isfinite(scales)):
        raise ValueError("obs_scales must be positive finite with one entry per obs component")
    return PolicyNet(actor, np.full(act_dim, float(log_std_init)), critic, scales)


def clamped_log_std(net: PolicyNet) -> np.ndarray:
    return np.clip(net.log_std, LOG_STD_MIN, LOG_STD_MAX)


def normalize_obs(net: PolicyNet, obs: np.ndarray) -> np.ndarray:
    return np.asarray(obs, dtype=np.float64) / net.obs_scales


def policy_mean(net: PolicyNet, obs: np.ndarray) -> np.ndarray:
    """Deterministic action (Gaussian mean); (B,6) for (B,12) input, (6,) for (12,)."""
    mean, _ = mlp_forward(net.actor, normalize_obs(net, obs))
    return mean


def value(net: PolicyNet, obs: np.ndarray) -> np.ndarray:
    v, _ = mlp_forward(net.critic, normalize_obs(net, obs))
    return v[..., 0]


def gaussian_log_prob(mean: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density; sums over the trailing action axis."""
    z = (actions - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * mean.shape[-1] * np.log(2.0 * np.pi)


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std) + 0.5 * log_std.shape[0] * (1.0 + np.log(2.0 * np.pi)))


def policy_sample(
    net: PolicyNet, obs: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Sample one stochastic action for a single observation."""
    mean = policy_mean(net, obs)
    log_std = clamped_log_std(net)
    noise = rng.standard_normal(mean.shape[-1])
    action = mean + np.exp(log_std) * noise
    return action, float(gaussian_log_prob(mean, log_std, action))


class RolloutPolicy:
    """Adapter giving BatchEnv rollouts per-env exploration noise.

    sample() draws noise for env i from rngs[i], so a rollout's action
    sequence for an env depends only on that env's stream, not on n_envs.
    """

    def __init__(self, net: PolicyNet, deterministic: bool = False):
        self.net = net
        self.deterministic = deterministic

    def sample(self, obs: np.ndarray, rngs: list) -> tuple[np.ndarray, np.ndarray]:
        mean = policy_mean(self.net, obs)
        if self.deterministic:
            log_std = clamped_log_std(self.net)
            logp = gaussian_log_prob(mean, log_std, mean)
            return mean, logp
        log_std = clamped_log_std(self.net)
        noise = np.stack([rngs[i].standard_normal(mean.shape[-1]) for i in range(mean.shape[0])])
        actions = mean + np.exp(log_std) * noise
        return actions, gaussian_log_prob(mean, log_std, actions)

    def value(self, obs: np.ndarray) -> np.ndarray:
        return value(self.net, obs)


def param_list(net: PolicyNet) -> list[np.ndarray]:
    """Flat parameter order shared by Adam, the gradient check and checkpoints."""
    out: list[np.ndarray] = []
    for w, b in zip(net.actor.weights, net.actor.biases):
        out.extend([w, b])
    out.append(net.log_std)
    for w, b in zip(net.critic.weights, net.critic.biases):
        out.extend([w, b])
    return out


def set_params(net: PolicyNet, arrays: list[np.ndarray]) -> None:
    """Write a param_list-ordered array list back into the net, in place."""
    ref = param_list(net)
    if len(ref) != len(arrays):
        raise ValueError("parameter count mismatch")
    for dst, src in zip(ref, arrays):
        if dst.shape != src.shape:
            raise ValueError(f"parameter shape mismatch: {dst.shape} vs {src.shape}")
        dst[...] = src


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


def adam_init(arrays: list[np.ndarray]) -> AdamState:
    return AdamState([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], 0)


def adam_step(
    arrays: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, applied to the arrays in place."""
    state.t += 1
    t = state.t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m[...] = beta1 * m + (1.0 - beta1) * g
        v[...] = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        a -= lr * m_hat / (np.sqrt(v_hat) + eps)


def global_grad_norm(grads: list[np.ndarray]) -> float:
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_grads(grads: list[np.ndarray], max_norm: float) -> tuple[list[np.ndarray], float]:
    """Scale the whole gradient so its global L2 norm is at most max_norm."""
    norm = global_grad_norm(grads)
    if max_norm <= 0.0 or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return [g * scale for g in grads], norm
