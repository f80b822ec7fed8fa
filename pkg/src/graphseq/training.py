"""Training loop with mini-batch gradient accumulation and early stopping."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, fields

from . import autodiff as ad
from .checkpoint import Checkpoint
from .metrics import bleu4, path_accuracy
from .model import GraphSeqModel
from .optim import adam_step, clip_global_norm
from .rng import Rng
from .vocab import Vocabulary, build_vocabulary

__all__ = ["TrainConfig", "TrainingError", "train", "evaluate_path_accuracy",
           "evaluate_bleu", "model_from_checkpoint", "default_max_len"]

log = logging.getLogger("graphseq")


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Hyperparameters and toggles; defaults follow the reference settings."""

    lr: float = 0.001
    batch_size: int = 30
    dropout: float = 0.5
    clip_norm: float = 20.0
    hops: int = 6
    feat_dim: int = 40
    hidden_dim: int = 80
    beam: int = 5
    aggregator: str = "mean"
    graph_embedding: str = "pooling"
    direction: str = "bi"
    attention: bool = True
    attr_mode: str = "mean"
    encoder_mode: str = "graph"
    pooling_method: str = "max"
    tie_after: int = 10
    neighbor_cap: int | None = None
    max_epochs: int = 200
    patience: int = 20
    seed: int = 1
    dev_beam: int = 1
    dev_metric: str = "accuracy"  # or "bleu"
    target_metric: float | None = None
    max_decode_len: int | None = None  # default: 2x longest training target

    def __post_init__(self):
        positive = ("lr", "batch_size", "clip_norm", "hops", "feat_dim", "hidden_dim",
                    "beam", "max_epochs", "patience", "dev_beam")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.dev_metric not in ("accuracy", "bleu"):
            raise ValueError(f"unknown dev metric {self.dev_metric!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def model_kwargs(self) -> dict:
        return {
            "feat_dim": self.feat_dim,
            "hidden_dim": self.hidden_dim,
            "hops": self.hops,
            "aggregator": self.aggregator,
            "graph_embedding": self.graph_embedding,
            "direction": self.direction,
            "attention": self.attention,
            "dropout": self.dropout,
            "attr_mode": self.attr_mode,
            "encoder_mode": self.encoder_mode,
            "pooling_method": self.pooling_method,
            "tie_after": self.tie_after,
            "neighbor_cap": self.neighbor_cap,
        }


def default_max_len(samples) -> int:
    """Decode-length bound: twice the longest target in the given samples."""
    return 2 * max(len(s.target) for s in samples)


def evaluate_path_accuracy(model: GraphSeqModel, samples, beam: int = 5,
                           max_len: int | None = None, rng: Rng | None = None) -> float:
    max_len = max_len or default_max_len(samples)
    rng = rng or Rng(0)  # only consulted by permutation-sensitive aggregators
    preds = [model.decode(s.graph, beam=beam, max_len=max_len, rng=rng) for s in samples]
    return path_accuracy(preds, [s.target for s in samples])


def evaluate_bleu(model: GraphSeqModel, samples, beam: int = 5,
                  max_len: int | None = None, rng: Rng | None = None) -> float:
    max_len = max_len or default_max_len(samples)
    rng = rng or Rng(0)
    preds = [model.decode(s.graph, beam=beam, max_len=max_len, rng=rng) for s in samples]
    return bleu4(preds, [s.target for s in samples])


def train(cfg: TrainConfig, train_samples, dev_samples, vocab: Vocabulary | None = None,
          log_path=None, model: GraphSeqModel | None = None) -> tuple[Checkpoint, GraphSeqModel]:
    """Train a model and return (best checkpoint, model restored to that best).

    Per epoch: seeded shuffle, per-sample gradient accumulation over batches
    of ``batch_size`` with the mean gradient clipped to ``clip_norm`` before
    each Adam step, then a dev evaluation that drives best-checkpoint
    selection and early stopping. One JSON line per epoch goes to
    ``log_path`` when given.
    """
    if not train_samples or not dev_samples:
        raise ValueError("train and dev sets must be non-empty")
    vocab = vocab or build_vocabulary(train_samples)
    master = Rng(cfg.seed)
    if model is None:
        model = GraphSeqModel(vocab, init_rng=master.child(0), **cfg.model_kwargs())
    shuffle_rng = master.child(1)
    dropout_rng = master.child(2)
    max_len = cfg.max_decode_len or default_max_len(train_samples)
    evaluate = evaluate_bleu if cfg.dev_metric == "bleu" else evaluate_path_accuracy

    best_metric = -math.inf
    best_arrays = None
    best_epoch = 0
    epochs_since_best = 0
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    started = time.time()
    try:
        for epoch in range(1, cfg.max_epochs + 1):
            order = shuffle_rng.permutation(len(train_samples))
            total_loss = 0.0
            for batch_start in range(0, len(order), cfg.batch_size):
                batch = order[batch_start:batch_start + cfg.batch_size]
                model.params.zero_grads()
                for idx in batch:
                    sample = train_samples[int(idx)]
                    loss = model.loss(sample, rng=dropout_rng, training=True)
                    value = loss.item()
                    if not math.isfinite(value):
                        raise TrainingError(
                            f"non-finite loss at epoch {epoch}, train sample {int(idx)}")
                    total_loss += value
                    ad.backward(loss, model.params)
                inv = 1.0 / len(batch)
                for t in model.params.tensors():
                    t.grad *= inv
                clip_global_norm(model.params, cfg.clip_norm)
                adam_step(model.params, cfg.lr)
            train_loss = total_loss / len(order)
            dev_metric = evaluate(model, dev_samples, beam=cfg.dev_beam, max_len=max_len)
            if log_fh:
                log_fh.write(json.dumps({"epoch": epoch, "train_loss": train_loss,
                                         "dev_metric": dev_metric,
                                         "wall_time": time.time() - started}) + "\n")
                log_fh.flush()
            log.info("epoch %d: train_loss=%.4f dev_metric=%.4f", epoch, train_loss, dev_metric)
            if dev_metric > best_metric:
                best_metric = dev_metric
                best_arrays = model.params.copy_arrays()
                best_epoch = epoch
                epochs_since_best = 0
            else:
                epochs_since_best += 1
            if cfg.target_metric is not None and best_metric >= cfg.target_metric:
                break
            if epochs_since_best >= cfg.patience:
                break
    finally:
        if log_fh:
            log_fh.close()
    if best_arrays is not None:
        model.params.load_arrays(best_arrays)
    ckpt = Checkpoint(config={"train": cfg.to_dict(), "model": model.config_dict()},
                      vocab_tokens=list(vocab.id_to_token),
                      arrays=model.params.copy_arrays(),
                      epoch=best_epoch, best_metric=float(best_metric))
    return ckpt, model


def model_from_checkpoint(ckpt: Checkpoint) -> tuple[GraphSeqModel, Vocabulary]:
    """Rebuild the model a checkpoint describes and load its weights."""
    from .checkpoint import CheckpointError
    from .vocab import RESERVED
    tokens = ckpt.vocab_tokens
    if list(tokens[:len(RESERVED)]) != list(RESERVED):
        raise CheckpointError("checkpoint vocabulary lacks the reserved token prefix")
    vocab = Vocabulary(tokens[len(RESERVED):])
    model = GraphSeqModel.from_config(vocab, ckpt.config["model"])
    model.params.load_arrays(ckpt.arrays)
    return model, vocab
