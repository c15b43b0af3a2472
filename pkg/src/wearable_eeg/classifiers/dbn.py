"""Deep belief network: greedy RBM pretraining plus softmax fine-tuning.

Layer 1 is a Gaussian-binary RBM with unit-variance visible units (inputs
must be standardized); deeper layers are binary-binary RBMs trained on the
previous layer's hidden probabilities. All RBMs use CD-1 with mini-batches.
Fine-tuning treats the stack as a logistic feed-forward net, appends a
two-way softmax head, and minimizes mean cross-entropy plus
``l1 * sum |W|`` over all weight matrices. The L1 part is applied as a
soft-threshold after each gradient step.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, softmax

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DbnConfig:
    sizes: tuple = (1000, 500, 100)
    lr_gaussian: float = 0.001
    lr_binary: float = 0.01
    lr_finetune: float = 0.01
    batch_size: int = 10
    pretrain_epochs: int = 50
    finetune_epochs: int = 100
    l1: float = 1e-4
    init_std: float = 0.01
    seed: int = 0


@dataclass(eq=False)
class RbmLayer:
    W: np.ndarray              # (n_visible, n_hidden)
    visible_bias: np.ndarray
    hidden_bias: np.ndarray
    gaussian: bool = False
    recon_errors: list = field(default_factory=list)

    def hidden_probs(self, v):
        return expit(v @ self.W + self.hidden_bias)

    def visible_mean(self, h):
        act = h @ self.W.T + self.visible_bias
        return act if self.gaussian else expit(act)


def _init_layer(rng, n_vis, n_hid, std, gaussian):
    return RbmLayer(rng.normal(0.0, std, size=(n_vis, n_hid)), np.zeros(n_vis),
                    np.zeros(n_hid), gaussian)


def _minibatches(n, batch_size, rng):
    order = rng.permutation(n)
    return [order[k:k + batch_size] for k in range(0, n, batch_size)]


def train_rbm(layer, data, lr, epochs, batch_size, rng):
    """CD-1 updates in place; appends the mean squared reconstruction error per epoch."""
    for _ in range(epochs):
        errs = []
        for rows in _minibatches(data.shape[0], batch_size, rng):
            v0 = data[rows]
            h0 = layer.hidden_probs(v0)
            h_sample = (rng.random(h0.shape) < h0).astype(float)
            v1 = layer.visible_mean(h_sample)
            h1 = layer.hidden_probs(v1)
            m = v0.shape[0]
            layer.W += lr * (v0.T @ h0 - v1.T @ h1) / m
            layer.visible_bias += lr * (v0 - v1).mean(axis=0)
            layer.hidden_bias += lr * (h0 - h1).mean(axis=0)
            errs.append(np.mean(np.sum((v0 - v1) ** 2, axis=1)))
        layer.recon_errors.append(float(np.mean(errs)))
    return layer


def _check_standardized(X):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    if np.any(np.abs(mean) > 0.5) or np.any((std < 0.5) | (std > 2.0)):
        log.warning("DBN input does not look standardized (column |mean| > 0.5 or std "
                    "outside [0.5, 2]); the Gaussian-binary layer assumes unit variance")
        return False
    return True


def pretrain_dbn(X, sizes=None, cfg=DbnConfig()):
    """Greedy layer-wise RBM pretraining; returns the list of layers."""
    X = np.asarray(X, dtype=float)
    sizes = tuple(cfg.sizes if sizes is None else sizes)
    _check_standardized(X)
    rng = np.random.default_rng(cfg.seed)
    layers = []
    data = X
    n_vis = X.shape[1]
    for depth, n_hid in enumerate(sizes):
        gaussian = depth == 0
        layer = _init_layer(rng, n_vis, n_hid, cfg.init_std, gaussian)
        lr = cfg.lr_gaussian if gaussian else cfg.lr_binary
        train_rbm(layer, data, lr, cfg.pretrain_epochs, cfg.batch_size, rng)
        layers.append(layer)
        data = layer.hidden_probs(data)
        n_vis = n_hid
    return layers


@dataclass(eq=False)
class DbnModel:
    weights: list
    biases: list
    head_W: np.ndarray
    head_b: np.ndarray
    config: DbnConfig = DbnConfig()
    loss_history: list = field(default_factory=list)

    @property
    def n_features(self):
        return self.weights[0].shape[0] if self.weights else self.head_W.shape[0]

    @property
    def params(self):
        return list(self.weights) + [self.head_W], list(self.biases) + [self.head_b]


def forward(weights, biases, X):
    """Hidden activations of every layer and the softmax class probabilities."""
    acts = [X]
    for W, b in zip(weights[:-1], biases[:-1]):
        acts.append(expit(acts[-1] @ W + b))
    probs = softmax(acts[-1] @ weights[-1] + biases[-1], axis=1)
    return acts, probs


def loss_and_grads(weights, biases, X, y):
    """Mean cross-entropy and its gradients; ``weights[-1]`` is the softmax head."""
    target = (np.asarray(y) > 0).astype(int)
    acts, probs = forward(weights, biases, X)
    n = X.shape[0]
    loss = -np.mean(np.log(np.clip(probs[np.arange(n), target], 1e-300, None)))
    delta = probs.copy()
    delta[np.arange(n), target] -= 1.0
    delta /= n
    gW = [None] * len(weights)
    gb = [None] * len(biases)
    for k in range(len(weights) - 1, -1, -1):
        gW[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ weights[k].T) * acts[k] * (1.0 - acts[k])
    return float(loss), gW, gb


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def finetune_dbn(stack, X, y, cfg=DbnConfig()):
    """Append a softmax head and train the whole network with mini-batch SGD."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ValueError("y must have one label per row of X")
    n_in = X.shape[1]
    for layer in stack:
        if layer.W.shape[0] != n_in:
            raise ValueError(f"layer expects {layer.W.shape[0]} inputs, got {n_in}")
        n_in = layer.W.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 1]))
    weights = [layer.W.copy() for layer in stack] + [rng.normal(0.0, cfg.init_std, (n_in, 2))]
    biases = [layer.hidden_bias.copy() for layer in stack] + [np.zeros(2)]
    lr = cfg.lr_finetune
    history = []
    for _ in range(cfg.finetune_epochs):
        for rows in _minibatches(X.shape[0], cfg.batch_size, rng):
            _, gW, gb = loss_and_grads(weights, biases, X[rows], y[rows])
            for k in range(len(weights)):
                weights[k] = _soft_threshold(weights[k] - lr * gW[k], lr * cfg.l1)
                biases[k] = biases[k] - lr * gb[k]
        loss, _, _ = loss_and_grads(weights, biases, X, y)
        history.append(loss + cfg.l1 * sum(np.abs(W).sum() for W in weights))
    return DbnModel(weights[:-1], biases[:-1], weights[-1], biases[-1], cfg, history)


def train_dbn(X, y, cfg=DbnConfig()):
    return finetune_dbn(pretrain_dbn(X, cfg.sizes, cfg), X, y, cfg)


def predict_dbn(model, X):
    """Labels and class probabilities (columns: -1, +1); ties predict -1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape}")
    weights, biases = model.params
    _, probs = forward(weights, biases, X)
    return np.where(probs[:, 1] > probs[:, 0], 1, -1), probs
