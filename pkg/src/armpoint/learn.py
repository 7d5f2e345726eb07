"""Policy optimization: a small tanh MLP with hand-derived gradients, a
diagonal-Gaussian policy, generalized advantage estimation, a clipped
surrogate update, and a least-squares transition discriminator for the
adversarial imitation mode.

Everything is plain numpy so gradients stay exact and checkable against
central finite differences on small random instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import env as env_mod
from . import mocap, reward as reward_mod
from .env import EnvConfig, PDArmEnv, Trajectory
from .errors import DimensionMismatch, LengthMismatch, NonFiniteLoss

TRAIN_MODES = ("dm", "dm-wr", "amp", "task-only")


# ---------------------------------------------------------------------------
# network


@dataclass
class Mlp:
    """Fully connected net: tanh hidden layers, linear output."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]  # (out,) per layer

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, final_scale: float = 1.0) -> "Mlp":
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError("need at least input and output sizes, all >= 1")
        weights, biases = [], []
        for i in range(len(sizes) - 1):
            scale = 1.0 / math.sqrt(sizes[i])
            w = rng.normal(0.0, scale, size=(sizes[i + 1], sizes[i]))
            if i == len(sizes) - 2:
                w *= final_scale
            weights.append(w)
            biases.append(np.zeros(sizes[i + 1]))
        return cls(sizes=sizes, weights=weights, biases=biases)

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cached(x)
        return y

    def forward_cached(self, x: np.ndarray):
        """Returns (output, activations). Accepts (in,) or (N, in)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.in_dim:
            raise DimensionMismatch(f"input dim {h.shape[1]} != {self.in_dim}")
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i != last:
                h = np.tanh(h)
            acts.append(h)
        return (h[0] if single else h), acts

    def backward(self, acts, upstream: np.ndarray):
        """Parameter gradients, interleaved like parameters(), plus the
        gradient w.r.t. the input. ``upstream`` is dLoss/dOutput, (N, out)."""
        g = np.asarray(upstream, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        grads: list[np.ndarray | None] = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = g.T @ acts[i]
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i]
            if i > 0:
                g = g * (1.0 - acts[i] ** 2)
        return grads, g

    def grad(self, x: np.ndarray, upstream: np.ndarray):
        """Convenience: forward then backward in one call."""
        _, acts = self.forward_cached(x)
        return self.backward(acts, upstream)[0]


def flatten_params(params) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def set_flat_params(params, flat: np.ndarray) -> None:
    cursor = 0
    for p in params:
        n = p.size
        p[...] = flat[cursor : cursor + n].reshape(p.shape)
        cursor += n
    if cursor != flat.size:
        raise DimensionMismatch("flat parameter size mismatch")


class Adam:
    """Adam with a fixed learning rate, minimizing the given gradients."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": [m.tolist() for m in self.m],
            "v": [v.tolist() for v in self.v],
        }

    def load_state_dict(self, state: dict) -> None:
        self.t = int(state["t"])
        for m, src in zip(self.m, state["m"]):
            m[...] = np.asarray(src, dtype=np.float64).reshape(m.shape)
        for v, src in zip(self.v, state["v"]):
            v[...] = np.asarray(src, dtype=np.float64).reshape(v.shape)


# ---------------------------------------------------------------------------
# policy and value function


@dataclass
class GaussianPolicy:
    """Diagonal Gaussian over PD target angles; state-independent log-std."""

    net: Mlp
    log_std: np.ndarray
    obs_scale: np.ndarray  # fixed elementwise input scaling

    @property
    def obs_dim(self) -> int:
        return self.net.in_dim

    @property
    def act_dim(self) -> int:
        return self.net.out_dim

    def parameters(self) -> list[np.ndarray]:
        return self.net.parameters() + [self.log_std]

    def mean(self, obs: np.ndarray) -> np.ndarray:
        return self.net.forward(np.asarray(obs, dtype=np.float64) * self.obs_scale)

    def act_deterministic(self, obs) -> np.ndarray:
        return self.mean(obs)

    def act(self, obs, rng: np.random.Generator) -> tuple[np.ndarray, float]:
        mu = self.mean(obs)
        std = np.exp(self.log_std)
        action = mu + std * rng.standard_normal(self.act_dim)
        return action, float(self._log_prob_single(mu, action))

    def _log_prob_single(self, mu, action) -> float:
        z = (action - mu) / np.exp(self.log_std)
        return -0.5 * float(z @ z) - float(self.log_std.sum()) - 0.5 * self.act_dim * math.log(
            2.0 * math.pi
        )

    def log_prob(self, obs_batch: np.ndarray, actions: np.ndarray) -> np.ndarray:
        mu = self.net.forward(np.asarray(obs_batch, dtype=np.float64) * self.obs_scale)
        z = (actions - mu) / np.exp(self.log_std)
        return (
            -0.5 * np.sum(z * z, axis=1)
            - self.log_std.sum()
            - 0.5 * self.act_dim * math.log(2.0 * math.pi)
        )


@dataclass
class ValueNet:
    net: Mlp
    obs_scale: np.ndarray

    def parameters(self) -> list[np.ndarray]:
        return self.net.parameters()

    def value(self, obs_batch: np.ndarray) -> np.ndarray:
        out = self.net.forward(np.asarray(obs_batch, dtype=np.float64) * self.obs_scale)
        return out[..., 0]


def default_obs_scale(obs_dim: int) -> np.ndarray:
    """Fixed normalization for the arm observation layout: angles ~ pi,
    angular velocities ~ 10 rad/s, positions ~ 0.6 m, phase as-is."""
    scale = np.ones(obs_dim)
    scale[0:4] = 1.0 / math.pi
    scale[4:8] = 0.1
    scale[9:] = 1.0 / 0.6
    return scale


# ---------------------------------------------------------------------------
# advantage estimation


def gae(rewards, values, dones, gamma: float, lam: float, last_value: float = 0.0):
    """Generalized advantage estimation over one rollout.

    delta[t] = r[t] + gamma * v[t+1] * (1 - done[t]) - v[t]
    A[t] = delta[t] + gamma * lam * (1 - done[t]) * A[t+1]
    returns = A + v. ``last_value`` bootstraps a non-terminal tail.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = rewards.shape[0]
    if values.shape[0] != n or dones.shape[0] != n:
        raise LengthMismatch("rewards, values, dones must have equal lengths")
    next_values = np.append(values[1:], last_value)
    advantages = np.empty(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        alive = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_values[t] * alive - values[t]
        acc = delta + gamma * lam * alive * acc
        advantages[t] = acc
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    advantages = np.asarray(advantages, dtype=np.float64)
    std = advantages.std()
    if std < 1e-12:
        return advantages - advantages.mean()
    return (advantages - advantages.mean()) / std


# ---------------------------------------------------------------------------
# PPO update


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 200_000
    steps_per_batch: int = 2048
    minibatch_size: int = 256
    epochs: int = 10
    policy_lr: float = 1e-3
    value_lr: float = 2e-3
    disc_lr: float = 1e-3
    clip_ratio: float = 0.3
    gamma: float = 0.95
    lam: float = 0.95
    entropy_coef: float = 0.0
    hidden: tuple[int, ...] = (64, 64)
    disc_hidden: tuple[int, ...] = (64,)
    log_std_init: float = -0.7
    reference_init: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must be in (0, 1)")
        if not 0.0 < self.gamma <= 1.0 or not 0.0 <= self.lam <= 1.0:
            raise ValueError("gamma in (0, 1] and lam in [0, 1] required")
        if min(self.total_steps, self.steps_per_batch, self.minibatch_size, self.epochs) < 1:
            raise ValueError("sizes must be >= 1")
        if min(self.policy_lr, self.value_lr, self.disc_lr) <= 0:
            raise ValueError("learning rates must be positive")
        if self.entropy_coef < 0:
            raise ValueError("entropy_coef must be >= 0")


def ppo_update(
    policy: GaussianPolicy,
    value_net: ValueNet,
    batch: dict,
    config: TrainConfig,
    policy_opt: Adam,
    value_opt: Adam,
    rng: np.random.Generator,
) -> dict:
    """One clipped-surrogate update over the batch.

    Maximizes E[min(ratio * A, clip(ratio) * A)] with Adam ascent on the
    policy (mean net and log-std) and regresses the value net to the
    returns. Advantages are normalized to zero mean and unit sd (a zero
    advantage batch stays zero, yielding a no-op policy update). On a
    non-finite loss or gradient the previous parameters are restored and
    NonFiniteLoss is raised.
    """
    obs = np.asarray(batch["observations"], dtype=np.float64)
    actions = np.asarray(batch["actions"], dtype=np.float64)
    old_log_probs = np.asarray(batch["log_probs"], dtype=np.float64)
    returns = np.asarray(batch["returns"], dtype=np.float64)
    n = obs.shape[0]
    if n == 0:
        raise ValueError("batch is empty")
    advantages = normalize_advantages(batch["advantages"])

    # bookkeeping check: with unchanged parameters every ratio must be 1
    ratio0 = np.exp(policy.log_prob(obs, actions) - old_log_probs)
    ratio_check = float(np.max(np.abs(ratio0 - 1.0)))

    pol_params = policy.parameters()
    val_params = value_net.parameters()
    pol_backup = [p.copy() for p in pol_params]
    val_backup = [p.copy() for p in val_params]
    eps = config.clip_ratio
    scale = policy.obs_scale

    def fail():
        for p, b in zip(pol_params, pol_backup):
            p[...] = b
        for p, b in zip(val_params, val_backup):
            p[...] = b
        raise NonFiniteLoss("non-finite loss or gradient; parameters restored")

    surrogate = 0.0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            x = obs[idx] * scale
            a = actions[idx]
            adv = advantages[idx]
            ret = returns[idx]
            old_lp = old_log_probs[idx]
            m = idx.size

            mu, acts = policy.net.forward_cached(x)
            std = np.exp(policy.log_std)
            z = (a - mu) / std
            log_probs = (
                -0.5 * np.sum(z * z, axis=1)
                - policy.log_std.sum()
                - 0.5 * policy.act_dim * math.log(2.0 * math.pi)
            )
            ratio = np.exp(log_probs - old_lp)
            unclipped = ratio * adv
            clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
            surrogate = float(np.mean(np.minimum(unclipped, clipped)))
            if not math.isfinite(surrogate):
                fail()

            # gradient of the surrogate: flows only where the unclipped
            # branch is the active minimum
            active = (unclipped <= clipped).astype(np.float64)
            coeff = (active * ratio * adv) / m  # d surrogate / d log_prob
            d_mu = coeff[:, None] * (z / std)
            d_log_std = (coeff[:, None] * (z * z - 1.0)).sum(axis=0)
            if config.entropy_coef > 0.0:
                d_log_std += config.entropy_coef  # dH/dlog_std = 1 per dim
            grads, _ = policy.net.backward(acts, -d_mu)  # minimize -surrogate
            grads.append(-d_log_std)
            if any(not np.all(np.isfinite(g)) for g in grads):
                fail()
            policy_opt.step(pol_params, grads)

            v, v_acts = value_net.net.forward_cached(x)
            err = v[:, 0] - ret
            v_loss = float(np.mean(err * err))
            if not math.isfinite(v_loss):
                fail()
            v_grads, _ = value_net.net.backward(v_acts, (2.0 * err / m)[:, None])
            value_opt.step(val_params, v_grads)

    new_log_probs = policy.log_prob(obs, actions)
    final_ratio = np.exp(new_log_probs - old_log_probs)
    return {
        "surrogate": surrogate,
        "ratio_check": ratio_check,
        "approx_kl": float(np.mean(old_log_probs - new_log_probs)),
        "clip_fraction": float(np.mean(np.abs(final_ratio - 1.0) > eps)),
        "value_loss": float(np.mean((value_net.value(obs) - returns) ** 2)),
    }


# ---------------------------------------------------------------------------
# discriminator


def transition_features(q_t, hand_t, q_next, hand_next) -> np.ndarray:
    return np.concatenate([q_t, hand_t, q_next, hand_next])


DISC_FEATURE_DIM = 14  # 4 angles + 3 hand coords, twice


def clip_transition_features(env: PDArmEnv, clip_index: int, end_step: int | None = None) -> np.ndarray:
    """Real transition features from a reference clip resampled at the
    control rate: consecutive (angles, hand position) pairs."""
    table = env._table(clip_index)
    end = table.total_steps if end_step is None else min(end_step, table.total_steps)
    rows = [
        transition_features(table.angles[k], table.hand_pos[k], table.angles[k + 1], table.hand_pos[k + 1])
        for k in range(end)
    ]
    return np.asarray(rows)


def trajectory_transition_features(traj: Trajectory) -> np.ndarray:
    obs = traj.observations
    final = traj.final_observation
    rows = []
    for t in range(len(traj)):
        nxt = obs[t + 1] if t + 1 < len(traj) else final
        rows.append(transition_features(obs[t][0:4], obs[t][12:15], nxt[0:4], nxt[12:15]))
    return np.asarray(rows)


def train_discriminator(
    disc: Mlp,
    real: np.ndarray,
    fake: np.ndarray,
    optimizer: Adam,
    rng: np.random.Generator,
    steps: int = 20,
    minibatch: int = 256,
) -> list[float]:
    """Least-squares discriminator: real transitions target +1, fake -1.

    Returns the per-step losses. Scores feed reward.amp_reward.
    """
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.ndim != 2 or fake.ndim != 2 or real.shape[0] == 0 or fake.shape[0] == 0:
        raise DimensionMismatch("real and fake transition sets must both be non-empty 2-D arrays")
    if real.shape[1] != disc.in_dim or fake.shape[1] != disc.in_dim:
        raise DimensionMismatch("transition feature width does not match the discriminator")
    params = disc.parameters()
    losses = []
    for _ in range(steps):
        ri = rng.integers(real.shape[0], size=min(minibatch, real.shape[0]))
        fi = rng.integers(fake.shape[0], size=min(minibatch, fake.shape[0]))
        x = np.concatenate([real[ri], fake[fi]])
        y = np.concatenate([np.ones(ri.size), -np.ones(fi.size)])
        out, acts = disc.forward_cached(x)
        err = out[:, 0] - y
        loss = float(np.mean(err * err))
        if not math.isfinite(loss):
            raise NonFiniteLoss("discriminator loss is not finite")
        grads, _ = disc.backward(acts, (2.0 * err / err.size)[:, None])
        optimizer.step(params, grads)
        losses.append(loss)
    return losses


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainResult:
    policy: GaussianPolicy
    value_net: ValueNet
    discriminator: Mlp | None
    curves: list[dict]
    disc_curves: list[dict]
    steps: int
    mode: str
    policy_opt: "Adam | None" = None
    value_opt: "Adam | None" = None
    disc_opt: "Adam | None" = None


def mode_reward_config(base: reward_mod.RewardConfig, mode: str) -> reward_mod.RewardConfig:
    """Per-mode channel weights: pure imitation for dm, pure task for
    task-only, the configured mixture for dm-wr and amp."""
    if mode == "dm":
        return replace(base, w_imitation=1.0, w_task=0.0)
    if mode == "task-only":
        return replace(base, w_imitation=0.0, w_task=1.0)
    if mode in ("dm-wr", "amp"):
        return base
    raise ValueError(f"unknown mode {mode!r}; expected one of {TRAIN_MODES}")


def prepare_mode_clips(env_config: EnvConfig, mode: str) -> EnvConfig:
    """amp mode trains against rise-phase-only references: clips with an
    annotated hold start are truncated there."""
    if mode != "amp":
        return env_config
    truncated = []
    for clip in env_config.reference_clips:
        marks = [m for m in clip.annotations if m.hand is env_config.arm]
        if marks:
            truncated.append(mocap.truncate_clip(clip, marks[0].hold_start))
        else:
            truncated.append(clip)
    return replace(env_config, reference_clips=tuple(truncated))


def build_policy(obs_dim: int, act_dim: int, config: TrainConfig, rng) -> GaussianPolicy:
    net = Mlp.init((obs_dim, *config.hidden, act_dim), rng, final_scale=0.01)
    return GaussianPolicy(
        net=net,
        log_std=np.full(act_dim, config.log_std_init),
        obs_scale=default_obs_scale(obs_dim),
    )


def build_value(obs_dim: int, config: TrainConfig, rng) -> ValueNet:
    return ValueNet(
        net=Mlp.init((obs_dim, *config.hidden, 1), rng, final_scale=0.1),
        obs_scale=default_obs_scale(obs_dim),
    )


def collect_batch(
    env: PDArmEnv, policy: GaussianPolicy, min_steps: int, rng: np.random.Generator,
    reference_init: bool = False,
) -> list[Trajectory]:
    """Complete stochastic episodes until at least ``min_steps`` env steps."""
    trajectories = []
    total = 0
    while total < min_steps:
        phase = float(rng.uniform(0.0, 0.9)) if reference_init else None
        obs = env.reset(seed=int(rng.integers(2**31)), phase=phase)
        observations, actions, log_probs, rewards, dones, terms = [], [], [], [], [], []
        done = False
        while not done:
            action, logp = policy.act(obs, rng)
            observations.append(obs)
            next_obs, r, step_terms, done = env.step(action)
            actions.append(action)
            log_probs.append(logp)
            rewards.append(r)
            dones.append(done)
            terms.append(step_terms)
            obs = next_obs
        trajectories.append(
            Trajectory(
                observations=np.asarray(observations),
                actions=np.asarray(actions),
                log_probs=np.asarray(log_probs),
                rewards=np.asarray(rewards),
                dones=np.asarray(dones, dtype=bool),
                terms=terms,
                final_observation=obs,
                target=env.target.copy(),
                clip_index=env.clip_index,
            )
        )
        total += len(trajectories[-1])
    return trajectories


def train(
    env_config: EnvConfig,
    train_config: TrainConfig,
    mode: str = "dm",
    resume: dict | None = None,
    config_hash: str = "",
    progress=None,
) -> TrainResult:
    """Rollout/update loop, deterministic under (seed, resume step).

    Curves rows carry step, mean_reward, mean_r_I, mean_r_G, kl,
    clip_fraction. In amp mode the imitation channel is the discriminator
    reward and the training reward is recomputed per transition before the
    advantage pass.
    """
    if mode not in TRAIN_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {TRAIN_MODES}")
    env_config = prepare_mode_clips(env_config, mode)
    mode_reward = mode_reward_config(env_config.reward, mode)
    w_imit, w_task = mode_reward.w_imitation, mode_reward.w_task
    if mode == "amp":
        # env logs the task channel; the imitation side comes from the
        # discriminator during reward relabeling
        env_config = replace(
            env_config, reward=replace(mode_reward, w_imitation=0.0, w_task=1.0)
        )
    else:
        env_config = replace(env_config, reward=mode_reward)
    env = PDArmEnv(env_config)

    start_step = int(resume["step"]) if resume else 0
    ss = np.random.SeedSequence(entropy=(train_config.seed, start_step, 0xA71))
    init_rng, batch_rng, update_rng, disc_rng = (
        np.random.default_rng(s) for s in ss.spawn(4)
    )

    policy = build_policy(env.obs_dim, env.act_dim, train_config, init_rng)
    value_net = build_value(env.obs_dim, train_config, init_rng)
    policy_opt = Adam(policy.parameters(), lr=train_config.policy_lr)
    value_opt = Adam(value_net.parameters(), lr=train_config.value_lr)
    discriminator = None
    disc_opt = None
    if mode == "amp":
        discriminator = Mlp.init(
            (DISC_FEATURE_DIM, *train_config.disc_hidden, 1), init_rng, final_scale=0.1
        )
        disc_opt = Adam(discriminator.parameters(), lr=train_config.disc_lr)
    if resume:
        load_networks(resume, policy, value_net, policy_opt, value_opt, discriminator, disc_opt)

    real_features = None
    if mode == "amp":
        real_features = np.concatenate(
            [clip_transition_features(env, i) for i in range(len(env_config.reference_clips))]
        )

    curves: list[dict] = []
    disc_curves: list[dict] = []
    steps_done = start_step
    while steps_done < train_config.total_steps:
        trajectories = collect_batch(
            env, policy, train_config.steps_per_batch, batch_rng,
            reference_init=train_config.reference_init,
        )
        batch_steps = sum(len(t) for t in trajectories)

        if mode == "amp":
            fake = np.concatenate([trajectory_transition_features(t) for t in trajectories])
            losses = train_discriminator(
                discriminator, real_features, fake, disc_opt, disc_rng
            )
            disc_curves.append(
                {"step": steps_done + batch_steps, "disc_loss": float(np.mean(losses))}
            )
            for traj in trajectories:
                feats = trajectory_transition_features(traj)
                scores = discriminator.forward(feats)[:, 0]
                amp_r = np.array([reward_mod.amp_reward(s) for s in scores])
                task_r = np.array([t["r_task"] for t in traj.terms])
                traj.rewards = w_imit * amp_r + w_task * task_r
                for t, value in zip(traj.terms, amp_r):
                    t["r_amp"] = float(value)

        observations = np.concatenate([t.observations for t in trajectories])
        actions = np.concatenate([t.actions for t in trajectories])
        log_probs = np.concatenate([t.log_probs for t in trajectories])
        advantages = []
        returns = []
        for traj in trajectories:
            values = value_net.value(traj.observations)
            adv, ret = gae(
                traj.rewards, values, traj.dones, train_config.gamma, train_config.lam
            )
            advantages.append(adv)
            returns.append(ret)
        batch = {
            "observations": observations,
            "actions": actions,
            "log_probs": log_probs,
            "advantages": np.concatenate(advantages),
            "returns": np.concatenate(returns),
        }
        diag = ppo_update(
            policy, value_net, batch, train_config, policy_opt, value_opt, update_rng
        )
        steps_done += batch_steps

        all_terms = [t for traj in trajectories for t in traj.terms]
        mean_r_imitation = float(
            np.mean([t.get("r_amp", t["r_imitation"]) for t in all_terms])
        )
        row = {
            "step": steps_done,
            "mean_reward": float(np.mean(np.concatenate([t.rewards for t in trajectories]))),
            "mean_r_I": mean_r_imitation,
            "mean_r_G": float(np.mean([t["r_task"] for t in all_terms])),
            "kl": diag["approx_kl"],
            "clip_fraction": diag["clip_fraction"],
        }
        curves.append(row)
        if progress is not None:
            progress(row)

    return TrainResult(
        policy=policy,
        value_net=value_net,
        discriminator=discriminator,
        curves=curves,
        disc_curves=disc_curves,
        steps=steps_done,
        mode=mode,
        policy_opt=policy_opt,
        value_opt=value_opt,
        disc_opt=disc_opt,
    )


# ---------------------------------------------------------------------------
# checkpoints


def _net_to_doc(net: Mlp) -> dict:
    return {
        "sizes": list(net.sizes),
        "params": flatten_params(net.parameters()).tolist(),
    }


def _net_from_doc(doc: dict) -> Mlp:
    net = Mlp.init(tuple(doc["sizes"]), np.random.default_rng(0))
    set_flat_params(net.parameters(), np.asarray(doc["params"], dtype=np.float64))
    return net


def make_checkpoint(result: TrainResult, config_hash: str = "") -> dict:
    """Self-describing checkpoint: layer sizes, flattened parameters, config
    hash, and step count."""
    policy = result.policy
    doc = {
        "format": "armpoint-checkpoint-v1",
        "step": result.steps,
        "mode": result.mode,
        "config_hash": config_hash,
        "policy": {
            **_net_to_doc(policy.net),
            "log_std": policy.log_std.tolist(),
            "obs_scale": policy.obs_scale.tolist(),
        },
        "value": _net_to_doc(result.value_net.net),
    }
    if result.discriminator is not None:
        doc["discriminator"] = _net_to_doc(result.discriminator)
    return doc


def policy_from_checkpoint(doc: dict) -> GaussianPolicy:
    pol = doc["policy"]
    return GaussianPolicy(
        net=_net_from_doc(pol),
        log_std=np.asarray(pol["log_std"], dtype=np.float64),
        obs_scale=np.asarray(pol["obs_scale"], dtype=np.float64),
    )


def load_networks(doc, policy, value_net, policy_opt, value_opt, discriminator=None, disc_opt=None):
    set_flat_params(policy.net.parameters(), np.asarray(doc["policy"]["params"]))
    policy.log_std[...] = np.asarray(doc["policy"]["log_std"])
    set_flat_params(value_net.net.parameters(), np.asarray(doc["value"]["params"]))
    if "optimizers" in doc:
        policy_opt.load_state_dict(doc["optimizers"]["policy"])
        value_opt.load_state_dict(doc["optimizers"]["value"])
        if discriminator is not None and "discriminator" in doc["optimizers"]:
            disc_opt.load_state_dict(doc["optimizers"]["discriminator"])
    if discriminator is not None and "discriminator" in doc:
        set_flat_params(discriminator.parameters(), np.asarray(doc["discriminator"]["params"]))


def attach_optimizer_state(doc: dict, policy_opt: Adam, value_opt: Adam, disc_opt: Adam | None = None) -> dict:
    doc["optimizers"] = {
        "policy": policy_opt.state_dict(),
        "value": value_opt.state_dict(),
    }
    if disc_opt is not None:
        doc["optimizers"]["discriminator"] = disc_opt.state_dict()
    return doc
