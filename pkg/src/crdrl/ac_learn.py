"""Actor-critic learner for cluster-head selection.

Both approximators are one-hidden-layer tanh networks written directly in
numpy so the gradients can be checked against finite differences. The actor
scores every node; candidates outside the mask get probability exactly zero.
A selection is a sequence of picks without replacement from one forward pass,
and its log-probability is the sum over the sequential softmaxes.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CHECKPOINT_FORMAT = "crdrl-ac-model"
CHECKPOINT_VERSION = 1


class NoCandidates(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class InsufficientExperience(ValueError):
    pass


# ---------------------------------------------------------------------------
# approximator
# ---------------------------------------------------------------------------

class Mlp:
    """``n_in -> n_hidden (tanh) -> n_out``; ``n_hidden == 0`` gives a plain linear map."""

    def __init__(self, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator | None = None):
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        shapes = [(n_out, n_in), (n_out,)] if n_hidden == 0 else [
            (n_hidden, n_in), (n_hidden,), (n_out, n_hidden), (n_out,)]
        self.params: list[np.ndarray] = []
        # weight matrix and bias of a layer share that layer's fan-in
        fan_ins = [n_in, n_in] if n_hidden == 0 else [n_in, n_in, n_hidden, n_hidden]
        for shape, fan_in in zip(shapes, fan_ins):
            if rng is None:
                self.params.append(np.zeros(shape))
            else:
                lim = 1.0 / math.sqrt(max(fan_in, 1))
                self.params.append(rng.uniform(-lim, lim, size=shape))

    def forward(self, x: np.ndarray):
        if self.n_hidden == 0:
            W, b = self.params
            return W @ x + b, (x, None)
        W1, b1, W2, b2 = self.params
        h = np.tanh(W1 @ x + b1)
        return W2 @ h + b2, (x, h)

    def backward(self, cache, dout: np.ndarray) -> list[np.ndarray]:
        x, h = cache
        if self.n_hidden == 0:
            return [np.outer(dout, x), dout.copy()]
        W1, b1, W2, b2 = self.params
        dW2 = np.outer(dout, h)
        db2 = dout.copy()
        dz = (W2.T @ dout) * (1.0 - h * h)
        return [np.outer(dz, x), dz, dW2, db2]

    def copy(self) -> "Mlp":
        m = Mlp(self.n_in, self.n_hidden, self.n_out)
        m.params = [p.copy() for p in self.params]
        return m


# ---------------------------------------------------------------------------
# model + hyperparameters
# ---------------------------------------------------------------------------

@dataclass
class LrState:
    alpha_actor: float
    alpha_critic: float
    initial_actor: float
    initial_critic: float
    window: int = 10
    decay: float = 0.5
    floor: float = 1e-4
    last_decay_at: int = 0
    decays: int = 0


def adapt_learning_rate(lr: LrState, episode_rewards: Sequence[float]) -> LrState:
    """Halve both rates when the last window barely improves on the one before.

    A decision needs two full windows of episodes since the previous decay,
    so a long plateau halves the rates once per ``2 * window`` episodes.
    """
    w = lr.window
    n = len(episode_rewards)
    if n - lr.last_decay_at < 2 * w:
        return lr
    recent = float(np.mean(episode_rewards[n - w:]))
    prior = float(np.mean(episode_rewards[n - 2 * w:n - w]))
    if recent - prior < 0.01 * max(abs(prior), 1e-8):
        new_a = max(lr.floor, lr.alpha_actor * lr.decay)
        new_c = max(lr.floor, lr.alpha_critic * lr.decay)
        if new_a != lr.alpha_actor or new_c != lr.alpha_critic:
            lr.decays += 1
        lr.alpha_actor, lr.alpha_critic = new_a, new_c
        lr.last_decay_at = n
    return lr


@dataclass
class AcModel:
    actor: Mlp
    critic: Mlp
    gamma: float = 0.9
    entropy_coeff: float = 0.05
    grad_clip_norm: float = 5.0
    lr: LrState = None  # type: ignore[assignment]

    @classmethod
    def create(cls, n_nodes: int, hidden: int = 64, rng: np.random.Generator | None = None, *,
               gamma=0.9, alpha_actor=0.01, alpha_critic=0.02, entropy_coeff=0.05,
               grad_clip_norm=5.0, lr_window=10, lr_decay=0.5, lr_min=1e-4) -> "AcModel":
        """Uniform(+-1/sqrt(fan_in)) init from ``rng``; all-zero weights when ``rng`` is None."""
        n_in = 3 * n_nodes
        actor = Mlp(n_in, hidden, n_nodes, rng)
        critic = Mlp(n_in, hidden, 1, rng)
        lr = LrState(alpha_actor, alpha_critic, alpha_actor, alpha_critic, lr_window, lr_decay, lr_min)
        return cls(actor, critic, gamma, entropy_coeff, grad_clip_norm, lr)

    @property
    def alpha_actor(self) -> float:
        return self.lr.alpha_actor

    @property
    def alpha_critic(self) -> float:
        return self.lr.alpha_critic

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.actor.params + self.critic.params)

    # -- checkpoints --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "shape": {"n_in": self.actor.n_in, "hidden": self.actor.n_hidden, "n_out": self.actor.n_out},
            "hyper": {
                "gamma": self.gamma, "entropy_coeff": self.entropy_coeff,
                "grad_clip_norm": self.grad_clip_norm,
                "alpha_actor": self.lr.alpha_actor, "alpha_critic": self.lr.alpha_critic,
                "initial_actor": self.lr.initial_actor, "initial_critic": self.lr.initial_critic,
                "lr_window": self.lr.window, "lr_decay": self.lr.decay, "lr_min": self.lr.floor,
            },
            "actor": [p.tolist() for p in self.actor.params],
            "critic": [p.tolist() for p in self.critic.params],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcModel":
        if d.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a model checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')}")
        sh, hy = d["shape"], d["hyper"]
        actor = Mlp(sh["n_in"], sh["hidden"], sh["n_out"])
        critic = Mlp(sh["n_in"], sh["hidden"], 1)
        actor.params = [np.asarray(p, dtype=float) for p in d["actor"]]
        critic.params = [np.asarray(p, dtype=float) for p in d["critic"]]
        lr = LrState(hy["alpha_actor"], hy["alpha_critic"], hy["initial_actor"], hy["initial_critic"],
                     hy["lr_window"], hy["lr_decay"], hy["lr_min"])
        return cls(actor, critic, hy["gamma"], hy["entropy_coeff"], hy["grad_clip_norm"], lr)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "AcModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# state
# ---------------------------------------------------------------------------

@dataclass
class StateVector:
    values: np.ndarray
    node_index: list[int]


def build_state(world) -> StateVector:
    """Encounter history (max-normalised), residual energy and buffer occupancy, in node-id order."""
    nodes = sorted(world.nodes, key=lambda n: n.id)
    n = len(nodes)
    phi = np.zeros(n)
    psi = np.zeros(n)
    eta = np.zeros(n)
    for i, node in enumerate(nodes):
        if not node.alive:
            continue
        phi[i] = node.encounters.history
        psi[i] = min(1.0, max(0.0, node.energy.current / node.energy.initial))
        eta[i] = node.buffer.occupancy
    top = phi.max() if n else 0.0
    phi = phi / top if top > 0 else np.zeros(n)
    return StateVector(np.concatenate([phi, psi, eta]), [node.id for node in nodes])


# ---------------------------------------------------------------------------
# forward passes
# ---------------------------------------------------------------------------

def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not np.any(mask):
        raise NoCandidates("no unmasked candidate")
    z = np.where(mask, logits, -np.inf)
    z = z - z[mask].max()
    e = np.where(mask, np.exp(z), 0.0)
    return e / e.sum()


def actor_forward(model: AcModel, s, candidate_mask: np.ndarray) -> np.ndarray:
    x = s.values if isinstance(s, StateVector) else s
    logits, _ = model.actor.forward(x)
    return masked_softmax(logits, np.asarray(candidate_mask, dtype=bool))


def actor_logits(model: AcModel, s) -> np.ndarray:
    x = s.values if isinstance(s, StateVector) else s
    return model.actor.forward(x)[0]


def critic_forward(model: AcModel, s) -> float:
    x = s.values if isinstance(s, StateVector) else s
    return float(model.critic.forward(x)[0][0])


def entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


# ---------------------------------------------------------------------------
# reward and TD error
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardInputs:
    delivery_ratio: float
    throughput_norm: float
    delay_norm: float
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)


def compute_reward(inputs: RewardInputs) -> float:
    m1, m2, m3 = inputs.weights
    return m1 * inputs.delivery_ratio + m2 * inputs.throughput_norm - m3 * inputs.delay_norm


def td_error(r: float, v_s: float, v_snext: float, gamma: float, terminal: bool) -> float:
    return r + (0.0 if terminal else gamma * v_snext) - v_s


# ---------------------------------------------------------------------------
# losses and gradients
# ---------------------------------------------------------------------------

def _step_masks(mask: np.ndarray, actions: Sequence[int]):
    m = np.asarray(mask, dtype=bool).copy()
    for a in actions:
        yield m.copy(), a
        m[a] = False


def actor_loss(model: AcModel, x: np.ndarray, actions: Sequence[int], mask: np.ndarray,
               advantage: float, entropy_coeff: float | None = None) -> float:
    """Sum over picks of ``-A log pi(a_k) + eps * sum(pi log pi)``."""
    eps = model.entropy_coeff if entropy_coeff is None else entropy_coeff
    logits, _ = model.actor.forward(x)
    total = 0.0
    for m, a in _step_masks(mask, actions):
        p = masked_softmax(logits, m)
        if p[a] <= 0:
            raise ValueError(f"action {a} is masked")
        nz = p[m]
        total += -advantage * math.log(p[a]) + eps * float((nz * np.log(nz)).sum())
    return total


def actor_loss_grad(model: AcModel, x: np.ndarray, actions: Sequence[int], mask: np.ndarray,
                    advantage: float, entropy_coeff: float | None = None):
    """Return ``(loss, grads)`` with grads aligned to ``model.actor.params``."""
    eps = model.entropy_coeff if entropy_coeff is None else entropy_coeff
    logits, cache = model.actor.forward(x)
    dz = np.zeros_like(logits)
    total = 0.0
    for m, a in _step_masks(mask, actions):
        p = masked_softmax(logits, m)
        if p[a] <= 0:
            raise ValueError(f"action {a} is masked")
        logp = np.zeros_like(p)
        logp[m] = np.log(p[m])
        neg_ent = float((p * logp).sum())
        total += -advantage * logp[a] + eps * neg_ent
        # d(-A log p_a)/dz = -A (e_a - p); d(sum p log p)/dz = p (log p - sum p log p)
        g = advantage * p
        g[a] -= advantage
        g += eps * p * (logp - neg_ent)
        dz += np.where(m, g, 0.0)
    return total, model.actor.backward(cache, dz)


def critic_value_grad(model: AcModel, x: np.ndarray):
    out, cache = model.critic.forward(x)
    return float(out[0]), model.critic.backward(cache, np.ones(1))


def clip_by_norm(grads: list[np.ndarray], max_norm: float):
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads))
    if not math.isfinite(norm):
        raise NonFiniteGradient("gradient has non-finite entries")
    if norm > max_norm:
        scale = max_norm / norm
        grads = [g * scale for g in grads]
    return grads, norm


def _apply(params: list[np.ndarray], direction: list[np.ndarray], rate: float) -> None:
    for p, g in zip(params, direction):
        p += rate * g


def update_critic(model: AcModel, delta: float, s) -> AcModel:
    """``w += alpha_c * clip(delta * grad V(s))``."""
    x = s.values if isinstance(s, StateVector) else s
    if delta == 0.0:
        return model
    _, grads = critic_value_grad(model, x)
    direction, _ = clip_by_norm([delta * g for g in grads], model.grad_clip_norm)
    _apply(model.critic.params, direction, model.alpha_critic)
    return model


def update_actor(model: AcModel, advantage: float, s, actions: Sequence[int], mask: np.ndarray) -> AcModel:
    """One descent step on the entropy-regularised policy loss, gradient clipped."""
    x = s.values if isinstance(s, StateVector) else s
    if isinstance(actions, (int, np.integer)):
        actions = [int(actions)]
    _, grads = actor_loss_grad(model, x, actions, mask, advantage)
    direction, _ = clip_by_norm([-g for g in grads], model.grad_clip_norm)
    _apply(model.actor.params, direction, model.alpha_actor)
    return model


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

@dataclass
class Experience:
    s: np.ndarray
    a: tuple[int, ...]
    mask: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool = False


class ReplayBuffer:
    def __init__(self, capacity: int = 10_000):
        self.capacity = capacity
        self.items: deque = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.items)

    def push(self, item) -> None:
        self.items.append(item)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list:
        if len(self.items) < batch_size:
            raise InsufficientExperience(f"have {len(self.items)}, need {batch_size}")
        idx = rng.choice(len(self.items), size=batch_size, replace=False)
        return [self.items[int(i)] for i in idx]


def replay_push(buf: ReplayBuffer, item) -> ReplayBuffer:
    buf.push(item)
    return buf


def replay_sample(buf: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> list:
    return buf.sample(batch_size, rng)


# ---------------------------------------------------------------------------
# training steps used by the engine
# ---------------------------------------------------------------------------

@dataclass
class LearnStats:
    policy_loss: float
    value_loss: float
    td: float


def learn_from(model: AcModel, batch: Sequence[Experience]) -> LearnStats:
    """Averaged actor and critic step over ``batch`` using the TD error as advantage."""
    critic_acc = [np.zeros_like(p) for p in model.critic.params]
    actor_acc = [np.zeros_like(p) for p in model.actor.params]
    p_loss = v_loss = td_sum = 0.0
    for e in batch:
        v_s, v_grads = critic_value_grad(model, e.s)
        v_next = 0.0 if e.terminal else critic_forward(model, e.s_next)
        delta = td_error(e.r, v_s, v_next, model.gamma, e.terminal)
        loss, a_grads = actor_loss_grad(model, e.s, e.a, e.mask, delta)
        for acc, g in zip(critic_acc, v_grads):
            acc += delta * g
        for acc, g in zip(actor_acc, a_grads):
            acc -= g
        p_loss += loss
        v_loss += 0.5 * delta * delta
        td_sum += delta
    k = float(len(batch))
    critic_dir, _ = clip_by_norm([g / k for g in critic_acc], model.grad_clip_norm)
    actor_dir, _ = clip_by_norm([g / k for g in actor_acc], model.grad_clip_norm)
    _apply(model.critic.params, critic_dir, model.alpha_critic)
    _apply(model.actor.params, actor_dir, model.alpha_actor)
    if not model.all_finite():
        raise NonFiniteGradient("learner parameters became non-finite")
    return LearnStats(p_loss / k, v_loss / k, td_sum / k)
