"""Categorical variational autoencoder for per-timestamp discretization.

The encoder maps a sensor frame to K categorical logits. During training a
Gumbel-Softmax relaxation of the categorical distribution is sampled and fed
to the decoder, which outputs a diagonal Gaussian over the input space; the
objective is the negative evidence lower bound

    loss = -E[ln p(x|z)] + beta * KL(q(z|x) || uniform)

with the KL taken in closed form between softmax(logits) and the uniform
prior over K categories. After training, sampling is switched off: inference
takes the argmax category, decodes its one-hot vector, and reports the
Gaussian log-likelihood of the frame as the residual signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Standardizer, TimeSeries, apply_standardizer, fit_standardizer
from .nn import AdamState, Gradients, Mlp, adam_step, backward, forward

LOGVAR_MIN = -8.0
LOGVAR_MAX = 4.0


class ConfigError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training loss became non-finite at epoch {epoch} ({loss})")
        self.epoch = epoch


@dataclass(frozen=True)
class CatVaeConfig:
    """Architecture and training hyperparameters.

    encoder_layers runs input -> representation (last entry feeds the K-logit
    head); decoder_layers runs K -> representation (last entry feeds the mean
    and log-variance heads, n outputs each).
    """

    input_dim: int
    categories: int
    encoder_layers: tuple[int, ...]
    decoder_layers: tuple[int, ...]
    temperature: float = 0.5
    beta: float = 0.1
    batch_size: int = 64
    max_epochs: int = 400
    patience: int = 40
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "encoder_layers", tuple(int(x) for x in self.encoder_layers))
        object.__setattr__(self, "decoder_layers", tuple(int(x) for x in self.decoder_layers))
        if self.categories < 2:
            raise ConfigError("need at least 2 categories")
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if self.beta <= 0:
            raise ConfigError("beta must be > 0")
        if self.encoder_layers[0] != self.input_dim:
            raise ConfigError("encoder_layers[0] must equal input_dim")
        if self.decoder_layers[0] != self.categories:
            raise ConfigError("decoder_layers[0] must equal the category count")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "categories": self.categories,
            "encoder_layers": list(self.encoder_layers),
            "decoder_layers": list(self.decoder_layers),
            "temperature": self.temperature,
            "beta": self.beta,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CatVaeConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            categories=int(d["categories"]),
            encoder_layers=tuple(d["encoder_layers"]),
            decoder_layers=tuple(d["decoder_layers"]),
            temperature=float(d.get("temperature", 0.5)),
            beta=float(d.get("beta", 0.1)),
            batch_size=int(d.get("batch_size", 64)),
            max_epochs=int(d.get("max_epochs", 400)),
            patience=int(d.get("patience", 40)),
            learning_rate=float(d.get("learning_rate", 1e-3)),
            seed=int(d.get("seed", 0)),
        )


PART_NAMES = ("encoder", "logits_head", "decoder", "mean_head", "logvar_head")


@dataclass
class CatVaeModel:
    """Trained autoencoder: five Mlp parts plus the fitted standardizer."""

    config: CatVaeConfig
    standardizer: Standardizer
    encoder: Mlp
    logits_head: Mlp
    decoder: Mlp
    mean_head: Mlp
    logvar_head: Mlp
    metadata: dict = field(default_factory=dict)

    @classmethod
    def initialize(cls, config: CatVaeConfig, standardizer: Standardizer,
                   rng: np.random.Generator) -> "CatVaeModel":
        enc = Mlp.create(list(config.encoder_layers), rng)
        logits_head = Mlp.create([config.encoder_layers[-1], config.categories], rng)
        dec = Mlp.create(list(config.decoder_layers), rng)
        mean_head = Mlp.create([config.decoder_layers[-1], config.input_dim], rng)
        logvar_head = Mlp.create([config.decoder_layers[-1], config.input_dim], rng)
        return cls(config, standardizer, enc, logits_head, dec, mean_head, logvar_head)

    def parts(self) -> dict[str, Mlp]:
        return {name: getattr(self, name) for name in PART_NAMES}

    def copy_parts(self) -> dict[str, Mlp]:
        return {name: getattr(self, name).copy() for name in PART_NAMES}

    def restore_parts(self, snapshot: dict[str, Mlp]) -> None:
        for name, net in snapshot.items():
            setattr(self, name, net.copy())

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "catvae",
            "config": self.config.to_dict(),
            "standardizer": self.standardizer.to_dict(),
            "parts": {name: net.to_dict() for name, net in self.parts().items()},
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CatVaeModel":
        if d.get("kind", "catvae") != "catvae":
            raise ConfigError(f"not a catvae model document (kind={d.get('kind')!r})")
        config = CatVaeConfig.from_dict(d["config"])
        std = Standardizer.from_dict(d["standardizer"])
        parts = {name: Mlp.from_dict(d["parts"][name]) for name in PART_NAMES}
        return cls(config, std, parts["encoder"], parts["logits_head"], parts["decoder"],
                   parts["mean_head"], parts["logvar_head"], dict(d.get("metadata", {})))


@dataclass(frozen=True)
class LatentResult:
    """Per-frame inference output: logits, argmax category, Gaussian log-likelihood."""

    logits: np.ndarray
    category: int
    log_likelihood: float


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def categorical_kl_to_uniform(logits: np.ndarray) -> np.ndarray:
    """Closed-form KL(softmax(logits) || uniform over K), per row.

    Written as sum p * (log p + log K) so equal logits cancel to exactly 0.
    """
    logp = _log_softmax(np.atleast_2d(logits))
    p = np.exp(logp)
    k = p.shape[-1]
    return np.where(p > 0, p * (logp + np.log(k)), 0.0).sum(axis=-1)


def gumbel_softmax_sample(
    logits: np.ndarray, temperature: float, rng: np.random.Generator
) -> np.ndarray:
    """softmax((logits + g) / temperature) with g i.i.d. standard Gumbel."""
    if temperature <= 0:
        raise ConfigError("temperature must be > 0")
    logits = np.asarray(logits, dtype=np.float64)
    noise = rng.gumbel(size=logits.shape)
    return _softmax((logits + noise) / temperature)


def gaussian_log_likelihood(x: np.ndarray, mean: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Row-wise diagonal Gaussian log-density of x."""
    return (-0.5 * np.log(2 * np.pi) - 0.5 * logvar
            - 0.5 * (x - mean) ** 2 * np.exp(-logvar)).sum(axis=-1)


def _decode(model: CatVaeModel, z: np.ndarray):
    """Decoder stack on latent batch z; returns (mean, clamped logvar, tapes)."""
    h, tape_dec = forward(model.decoder, z)
    mean, tape_mu = forward(model.mean_head, h)
    logvar_raw, tape_lv = forward(model.logvar_head, h)
    logvar = np.clip(logvar_raw, LOGVAR_MIN, LOGVAR_MAX)
    return mean, logvar, logvar_raw, (tape_dec, tape_mu, tape_lv)


def elbo_loss(
    model: CatVaeModel,
    batch: np.ndarray,
    gumbel_noise: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict]:
    """Minimized objective on a standardized batch, with its term breakdown.

    One Monte-Carlo latent sample per row: pass gumbel_noise of shape
    (B, K) for a deterministic evaluation, or an rng to draw it.
    """
    loss, breakdown, _, _ = _elbo_forward(model, batch, gumbel_noise, rng)
    return loss, breakdown


def _elbo_forward(model, batch, gumbel_noise=None, rng=None):
    batch = np.asarray(batch, dtype=np.float64)
    cfg = model.config
    enc_h, tape_enc = forward(model.encoder, batch)
    logits, tape_logits = forward(model.logits_head, enc_h)
    if gumbel_noise is None:
        if rng is None:
            raise ConfigError("either gumbel_noise or rng is required")
        gumbel_noise = rng.gumbel(size=logits.shape)
    y = _softmax((logits + gumbel_noise) / cfg.temperature)
    mean, logvar, logvar_raw, dec_tapes = _decode(model, y)
    recon = gaussian_log_likelihood(batch, mean, logvar)
    kl = categorical_kl_to_uniform(logits)
    loss = float(-recon.mean() + cfg.beta * kl.mean())
    breakdown = {"reconstruction_ll": float(recon.mean()), "kl": float(kl.mean())}
    inter = (tape_enc, tape_logits, logits, y, mean, logvar, logvar_raw, dec_tapes)
    return loss, breakdown, inter, batch


def elbo_loss_and_grads(model, batch, gumbel_noise):
    """Loss, breakdown and per-part parameter gradients for one batch."""
    loss, breakdown, inter, batch = _elbo_forward(model, batch, gumbel_noise)
    tape_enc, tape_logits, logits, y, mean, logvar, logvar_raw, dec_tapes = inter
    tape_dec, tape_mu, tape_lv = dec_tapes
    cfg = model.config
    B = batch.shape[0]
    inv_var = np.exp(-logvar)

    # Reconstruction term (negated, averaged over the batch).
    d_mean = (mean - batch) * inv_var / B
    d_logvar = (0.5 - 0.5 * (batch - mean) ** 2 * inv_var) / B
    clamp_open = (logvar_raw > LOGVAR_MIN) & (logvar_raw < LOGVAR_MAX)
    d_logvar_raw = np.where(clamp_open, d_logvar, 0.0)

    g_mu, d_h_mu = backward(tape_mu, d_mean)
    g_lv, d_h_lv = backward(tape_lv, d_logvar_raw)
    g_dec, d_y = backward(tape_dec, d_h_mu + d_h_lv)

    # Through the relaxed sample y = softmax((logits + g) / tau).
    inner = (d_y * y).sum(axis=1, keepdims=True)
    d_logits = y * (d_y - inner) / cfg.temperature

    # Closed-form KL to the uniform prior, averaged over the batch.
    logp = _log_softmax(logits)
    p = np.exp(logp)
    plogp = np.where(p > 0, p * logp, 0.0)
    d_logits += cfg.beta * (plogp - p * plogp.sum(axis=1, keepdims=True)) / B

    g_logits, d_enc_h = backward(tape_logits, d_logits)
    g_enc, _ = backward(tape_enc, d_enc_h)

    grads = {
        "encoder": g_enc,
        "logits_head": g_logits,
        "decoder": g_dec,
        "mean_head": g_mu,
        "logvar_head": g_lv,
    }
    return loss, breakdown, grads


def encode_logits(model: CatVaeModel, batch_std: np.ndarray) -> np.ndarray:
    enc_h, _ = forward(model.encoder, np.atleast_2d(batch_std))
    logits, _ = forward(model.logits_head, enc_h)
    return logits


def infer_batch(model: CatVaeModel, values: np.ndarray):
    """Deterministic inference on raw frames (standardized internally).

    Returns (logits [N,K], categories [N], log_likelihoods [N]); the latent
    fed to the decoder is the exact one-hot argmax, ties broken by lowest
    index.
    """
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[1] != model.config.input_dim:
        raise ConfigError(
            f"expected frames of width {model.config.input_dim}, got {values.shape[1]}"
        )
    x = model.standardizer.transform_values(values)
    logits = encode_logits(model, x)
    categories = logits.argmax(axis=1)
    one_hot = np.eye(model.config.categories)[categories]
    mean, logvar, _, _ = _decode(model, one_hot)
    ll = gaussian_log_likelihood(x, mean, logvar)
    return logits, categories, ll


def infer(model: CatVaeModel, frame: np.ndarray) -> LatentResult:
    """Single-frame inference; a pure function of (model, frame)."""
    logits, categories, ll = infer_batch(model, np.atleast_2d(frame))
    return LatentResult(logits[0], int(categories[0]), float(ll[0]))


def decoded_category_means(model: CatVaeModel) -> np.ndarray:
    """Decoder mean of every one-hot category, mapped back to data units."""
    one_hot = np.eye(model.config.categories)
    mean, _, _, _ = _decode(model, one_hot)
    return model.standardizer.invert_values(mean)


def _validation_loss(model: CatVaeModel, batch_std: np.ndarray) -> float:
    """Deterministic objective with the argmax one-hot latent (inference path)."""
    logits = encode_logits(model, batch_std)
    one_hot = np.eye(model.config.categories)[logits.argmax(axis=1)]
    mean, logvar, _, _ = _decode(model, one_hot)
    recon = gaussian_log_likelihood(batch_std, mean, logvar)
    kl = categorical_kl_to_uniform(logits)
    return float(-recon.mean() + model.config.beta * kl.mean())


def train(config: CatVaeConfig, train_ts: TimeSeries, val_ts: TimeSeries) -> CatVaeModel:
    """Minibatch training on individual time points with early stopping.

    The standardizer is fitted on the training split only. Validation loss
    is evaluated with the deterministic argmax latent each epoch; training
    stops after `patience` epochs without improvement and the best
    checkpoint is returned. Fully deterministic for a fixed config seed.
    """
    if train_ts.channels != val_ts.channels:
        raise ConfigError("train and validation channel sets differ")
    if train_ts.n_channels != config.input_dim:
        raise ConfigError(
            f"config expects {config.input_dim} channels, data has {train_ts.n_channels}"
        )
    rng = np.random.default_rng(config.seed)
    standardizer = fit_standardizer(train_ts)
    x_train = apply_standardizer(standardizer, train_ts).values
    x_val = apply_standardizer(standardizer, val_ts).values

    model = CatVaeModel.initialize(config, standardizer, rng)
    opt = {name: AdamState.create(net, lr=config.learning_rate)
           for name, net in model.parts().items()}

    n = x_train.shape[0]
    best_loss = np.inf
    best_snapshot = model.copy_parts()
    best_epoch = 0
    stagnant = 0
    history = []
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = x_train[order[start:start + config.batch_size]]
            noise = rng.gumbel(size=(batch.shape[0], config.categories))
            loss, _, grads = elbo_loss_and_grads(model, batch, noise)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, loss)
            for name, g in grads.items():
                adam_step(getattr(model, name), g, opt[name])
        val_loss = _validation_loss(model, x_val)
        if not np.isfinite(val_loss):
            raise TrainingDiverged(epoch, val_loss)
        history.append(val_loss)
        if val_loss < best_loss:
            best_loss = val_loss
            best_snapshot = model.copy_parts()
            best_epoch = epoch
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= config.patience:
                break

    model.restore_parts(best_snapshot)
    model.metadata = {
        "epochs_trained": len(history),
        "best_epoch": best_epoch,
        "best_val_loss": best_loss,
        "seed": config.seed,
    }
    return model


def save_model(model: CatVaeModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> CatVaeModel:
    with open(path, "r", encoding="utf-8") as fh:
        return CatVaeModel.from_dict(json.load(fh))
