"""Adam with central finite-difference gradients, and the one-to-two-qubit warm start.

Gradients are estimated coordinate by coordinate.  Because every trainable
parameter acts through exactly one operation group of the circuit, a
perturbed loss only needs that group's superoperator rebuilt: the
:class:`SegmentedLoss` evaluator caches the batch of states entering each
group and the linear readout functional leaving it, so one extra loss value
costs a single small matrix product per sample.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .circuit import Circuit, data_phases, fuse_superops, split_data_ops
from .gates import EulerAngles
from .models import (
    EntanglerPulseParams,
    GateLayerParams,
    ModelParams,
    PulseBlockParams,
    PulseLayerParams,
    accuracy,
    append_group,
    flatten,
    group_keys,
    init_params,
    param_groups,
    target_basis,
    unflatten,
)
from .noise import confusion_matrix, prep_state


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.  ``batch=None`` means full batch."""

    epochs: int = 100
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    fd_step: float = 1e-4
    seed: int = 0
    batch: int | None = None

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps_adam > 0:
            raise ValueError("eps_adam must be positive")
        if self.batch is not None and self.batch < 1:
            raise ValueError("batch size must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainReport:
    """Outcome of one training run.

    ``loss_history[k]`` is the lowest training loss seen up to epoch ``k``;
    ``raw_loss_history[k]`` is the loss of the iterate at the start of epoch ``k``.
    """

    variant: str
    n_qubits: int
    n_layers: int
    params: ModelParams
    loss_history: list
    raw_loss_history: list
    best_loss: float
    train_accuracy: float
    test_accuracy: float | None
    wall_time: float
    config: TrainConfig = field(default_factory=TrainConfig)

    def summary(self):
        return {
            "variant": self.variant,
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "best_loss": self.best_loss,
            "train_acc": self.train_accuracy,
            "test_acc": self.test_accuracy,
            "wall_time_s": self.wall_time,
            "epochs": len(self.loss_history),
        }


# ---------------------------------------------------------------------------
# Gradients and optimizer
# ---------------------------------------------------------------------------


def finite_diff_grad(lossfn, vec, h=1e-4):
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for every coordinate."""
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    vec = np.asarray(vec, dtype=float)
    grad = np.empty_like(vec)
    for i in range(vec.size):
        e = np.zeros_like(vec)
        e[i] = h
        grad[i] = (lossfn(vec + e) - lossfn(vec - e)) / (2 * h)
    return grad


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state, grad, config):
    """One bias-corrected Adam update; returns ``(new_state, update)`` with ``x_new = x + update``."""
    grad = np.asarray(grad, dtype=float)
    t = state.t + 1
    m = config.beta1 * state.m + (1 - config.beta1) * grad
    v = config.beta2 * state.v + (1 - config.beta2) * grad**2
    m_hat = m / (1 - config.beta1**t)
    v_hat = v / (1 - config.beta2**t)
    update = -config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps_adam)
    return AdamState(m, v, t), update


# ---------------------------------------------------------------------------
# Fast loss evaluation
# ---------------------------------------------------------------------------


def readout_weights(targets, labels, n_qubits, dev, policy):
    """Rows ``w_n`` with ``F_n = Re(w_n . vec(rho_n))`` (fidelity to the label's target, SPAM included)."""
    v = target_basis(targets)
    proj = np.einsum("ic,jc->cij", v, v.conj())  # |s_c><s_c|
    m = confusion_matrix(dev, 0) if policy.spam_enabled else np.eye(2)
    per_label = np.einsum("lc,cij->lij", m, proj)
    if n_qubits == 2:
        per_label = np.einsum("lij,kq->likjq", per_label, np.eye(2)).reshape(2, 4, 4)
    d = 2**n_qubits
    # tr(A rho) = sum_ij A_ji rho_ij
    w = np.swapaxes(per_label, -1, -2).reshape(2, d * d)
    return w[np.asarray(labels, dtype=int)]


class SegmentedLoss:
    """Training loss of one model shape on one dataset, with cheap per-coordinate perturbations."""

    def __init__(self, template, X, labels, dev, policy):
        self.template = template
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.labels = np.asarray(labels, dtype=int)
        if self.labels.size == 0:
            raise ValueError("dataset is empty")
        self.dev = dev
        self.policy = policy
        self.n = template.n_qubits
        self.d2 = 4**self.n
        self.keys = group_keys(template)
        self.groups = param_groups(template)
        self._rho0 = prep_state(dev, self.n, policy).reshape(1, self.d2)
        # data phases depend only on the inputs, so they are computed once
        self._phase_cache = {}
        self._owner = {}
        for key, idx in self.groups.items():
            for i in idx:
                self._owner[i] = key

    def _group_runs(self, params, key):
        circ = append_group(Circuit(self.n, self.dev, []), params, key, self.policy)
        runs = []
        for j, (kind, ops) in enumerate(split_data_ops(circ.ops)):
            if kind == "fixed":
                runs.append(("S", fuse_superops(ops, circ)))
            else:
                ph = self._phase_cache.get((key[0], key[2] if len(key) > 2 else None, j))
                if ph is None:
                    ph = data_phases(ops, self.X, self.n)
                    self._phase_cache[(key[0], key[2] if len(key) > 2 else None, j)] = ph
                runs.append(("P", ph))
        return runs

    def _items(self, params):
        items = []
        for key in self.keys:
            for kind, payload in self._group_runs(params, key):
                items.append((kind, payload, key))
        return items

    def _loss_from_fidelity(self, f):
        return float(np.mean((1.0 - f) ** 2))

    def final_states(self, vec):
        params = unflatten(vec, self.template)
        state = np.repeat(self._rho0, len(self.labels), axis=0)
        for kind, payload, _ in self._items(params):
            state = state @ payload.T if kind == "S" else state * payload
        return state

    def value(self, vec):
        params = unflatten(vec, self.template)
        w = readout_weights(params.targets, self.labels, self.n, self.dev, self.policy)
        f = np.real(np.sum(w * self.final_states(vec), axis=1))
        return self._loss_from_fidelity(f)

    def value_and_grad(self, vec, h):
        """Loss at ``vec`` and its central finite-difference gradient with step ``h``."""
        vec = np.asarray(vec, dtype=float)
        params = unflatten(vec, self.template)
        items = self._items(params)
        # forward: state entering every item
        state = np.repeat(self._rho0, len(self.labels), axis=0)
        entering = []
        for kind, payload, _ in items:
            entering.append(state)
            state = state @ payload.T if kind == "S" else state * payload
        final = state
        w = readout_weights(params.targets, self.labels, self.n, self.dev, self.policy)
        loss = self._loss_from_fidelity(np.real(np.sum(w * final, axis=1)))
        # backward: readout functional leaving every item
        leaving = [None] * len(items)
        b = w
        for j in range(len(items) - 1, -1, -1):
            leaving[j] = b
            kind, payload, _ = items[j]
            b = b @ payload if kind == "S" else b * payload
        where = {}
        for j, (kind, _, key) in enumerate(items):
            if kind == "S":
                where.setdefault(key, []).append(j)

        grad = np.empty_like(vec)
        for i in range(vec.size):
            key = self._owner[i]
            values = []
            for sign in (1.0, -1.0):
                pert = vec.copy()
                pert[i] += sign * h
                pp = unflatten(pert, self.template)
                if key == "targets":
                    wp = readout_weights(pp.targets, self.labels, self.n, self.dev, self.policy)
                    f = np.real(np.sum(wp * final, axis=1))
                else:
                    (j,) = where[key]  # trainable groups hold no data-dependent ops
                    (run,) = self._group_runs(pp, key)
                    f = np.real(np.sum(leaving[j] * (entering[j] @ run[1].T), axis=1))
                values.append(self._loss_from_fidelity(f))
            grad[i] = (values[0] - values[1]) / (2 * h)
        return loss, grad


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def _batches(n, batch, rng):
    if batch is None or batch >= n:
        return [np.arange(n)]
    perm = rng.permutation(n)
    return [perm[i:i + batch] for i in range(0, n, batch)]


def train(variant, L, dataset, dev, policy, config, init=None, n_qubits=1, test=None, callback=None):
    """Train a classifier with Adam on finite-difference gradients.

    Parameters
    ----------
    variant : {"gate", "pulsed"}
    L : int
        Number of layers (must match ``init`` when given).
    dataset : Dataset
        Training set.
    init : ModelParams, optional
        Starting point; otherwise parameters are drawn from ``config.seed``.
    n_qubits : int
        Register size when ``init`` is not given.
    test : Dataset, optional
        Held-out set for the reported test accuracy.
    callback : callable, optional
        Called as ``callback(epoch, loss)`` after every epoch.

    Returns
    -------
    TrainReport
        Carries the parameters with the lowest training loss seen.
    """
    t0 = time.perf_counter()
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if init is None:
        params = init_params(variant, n_qubits, L, dev, np.random.default_rng(config.seed))
    else:
        if init.variant != variant or init.n_layers != L:
            raise ValueError("init parameters do not match the requested variant or layer count")
        params = init
    template = params
    full = SegmentedLoss(template, dataset.features, dataset.labels, dev, policy)
    batch_rng = np.random.default_rng([config.seed, 1])
    vec = flatten(params)
    state = AdamState.zeros(vec.size)
    best_vec, best_loss = vec.copy(), math.inf
    history, raw = [], []
    for epoch in range(config.epochs):
        for k, idx in enumerate(_batches(len(dataset), config.batch, batch_rng)):
            if config.batch is None or config.batch >= len(dataset):
                loss, grad = full.value_and_grad(vec, config.fd_step)
                epoch_loss = loss
            else:
                if k == 0:
                    epoch_loss = full.value(vec)
                part = SegmentedLoss(template, dataset.features[idx], dataset.labels[idx], dev, policy)
                _, grad = part.value_and_grad(vec, config.fd_step)
            if k == 0:
                raw.append(epoch_loss)
                if epoch_loss < best_loss:
                    best_loss, best_vec = epoch_loss, vec.copy()
                history.append(best_loss)
            state, update = adam_step(state, grad, config)
            vec = vec + update
        if callback is not None:
            callback(epoch, raw[-1])
    final_loss = full.value(vec)
    if final_loss < best_loss:
        best_loss, best_vec = final_loss, vec
    best = unflatten(best_vec, template)
    train_acc = accuracy(dataset, best, dev, policy)
    test_acc = accuracy(test, best, dev, policy) if test is not None and len(test) else None
    return TrainReport(
        variant=variant,
        n_qubits=best.n_qubits,
        n_layers=best.n_layers,
        params=best,
        loss_history=history,
        raw_loss_history=raw,
        best_loss=float(best_loss),
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        wall_time=time.perf_counter() - t0,
        config=config,
    )


def warm_start_two_qubit(trained_1q, seed, variant=None):
    """Two-qubit starting point from a trained one-qubit model.

    Qubit 1 keeps its trained layer parameters and the targets are copied; the
    entangler of every layer is zero, which decouples the qubits; qubit 2 gets
    seeded random parameters drawn like a fresh initialization.
    """
    if trained_1q.n_qubits != 1:
        raise ValueError("warm start expects a one-qubit model")
    if variant is not None and variant != trained_1q.variant:
        raise ValueError(f"variant mismatch: {variant} vs {trained_1q.variant}")
    rng = np.random.default_rng(seed)
    layers = []
    for layer in trained_1q.layers:
        if trained_1q.variant == "gate":
            q2 = EulerAngles(*rng.uniform(-math.pi, math.pi, 3))
            layers.append(GateLayerParams((layer.qubits[0], q2), EulerAngles()))
        else:
            nu1, nu2, gamma = rng.uniform(-math.pi, math.pi, 3)
            area = rng.uniform(0.0, 2 * math.pi)
            q2 = PulseBlockParams(nu1, nu2, area / trained_1q.pulse_duration, gamma)
            layers.append(PulseLayerParams((layer.blocks[0], q2), EntanglerPulseParams()))
    return replace(trained_1q, n_qubits=2, layers=tuple(layers))


def two_stage_train(variant, L, train_set, dev, policy, config_1q, config_2q, test=None, warm_seed=None):
    """Full pipeline: train one qubit, warm-start two qubits, train those.

    Returns ``(report_1q, report_2q)``.
    """
    r1 = train(variant, L, train_set, dev, policy, config_1q, n_qubits=1, test=test)
    seed = config_2q.seed if warm_seed is None else warm_seed
    init = warm_start_two_qubit(r1.params, seed)
    r2 = train(variant, L, train_set, dev, policy, config_2q, init=init, test=test)
    return r1, r2
