"""
Training objectives: token cross-entropy, reconstruction, the in-batch hardest
negative triplet ranking loss and the combined corpus/image objectives.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from model import init
from numcore import ops
from numcore.errors import ContractError, DimensionError
from numcore.tensor import Parameter, ParameterSet, Tensor


@dataclass
class LossWeights:
    beta: float = 1.0
    gamma: float = 1.0
    margin: float = 0.2

    def __post_init__(self):
        for name in ("beta", "gamma", "margin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    @classmethod
    def from_config(cls, config) -> "LossWeights":
        return cls(config.beta, config.gamma, config.margin)


def xe_loss(logits: Tensor, targets: Sequence[int]) -> Tensor:
    """Mean over steps of -log softmax(logits)[target]. ``logits`` is L×vocab."""
    if logits.data.ndim != 2 or logits.shape[0] != len(targets):
        raise DimensionError("xe_loss", logits.shape, (len(targets),))
    log_probs = ops.log_softmax_rows(logits)
    picked = ops.pick(log_probs, range(len(targets)), targets)
    return ops.scale(ops.mean(picked), -1.0)


def rec_loss(v: Tensor, v_rec: Tensor) -> Tensor:
    """Squared L2 distance ||v - ṽ||²."""
    if v.shape != v_rec.shape:
        raise DimensionError("rec_loss", v.shape, v_rec.shape)
    return ops.l2_norm_sq(ops.sub(v, v_rec))


def corpus_loss(xe: Tensor, rec: Tensor, beta: float) -> Tensor:
    """L_S = L_XE + β·L_rec."""
    return ops.add(xe, ops.scale(rec, beta))


def image_loss(trip: Tensor, rec: Tensor, gamma: float) -> Tensor:
    """L_I = L_M + γ·L_rec."""
    return ops.add(trip, ops.scale(rec, gamma))


@dataclass
class SimilarityHead:
    """Projects raw image features (d_img) into the d-dim reconstruction space."""

    W_p: Parameter
    cosine_mode: bool = False

    @classmethod
    def build(cls, params: ParameterSet, name: str, d_img: int, d: int,
              rng: np.random.Generator, scale: float, cosine_mode: bool = False) -> "SimilarityHead":
        return cls(init.normal(params, name, (d_img, d), rng, scale), cosine_mode)


def similarity_matrix(features: Tensor, recons: Tensor, head: SimilarityHead) -> Tensor:
    """S[i][j] = <W_p·feat_i, recon_j> (cosine when the head says so)."""
    if features.data.ndim != 2 or recons.data.ndim != 2 or features.shape[0] != recons.shape[0]:
        raise DimensionError("similarity_matrix", features.shape, recons.shape,
                             detail="batch sizes must match")
    projected = ops.matmul(features, head.W_p)
    if head.cosine_mode:
        projected = ops.l2_normalize_rows(projected)
        recons = ops.l2_normalize_rows(recons)
    return ops.matmul(projected, ops.transpose(recons))


def hardest_negatives(S: np.ndarray) -> Tuple[List[int], List[int]]:
    """For every anchor i: argmax_{j≠i} S[j][i] (image) and argmax_{j≠i} S[i][j] (caption).

    np.argmax keeps the first maximum, so ties resolve to the smaller index.
    """
    masked = np.array(S, dtype=np.float64)
    np.fill_diagonal(masked, -np.inf)
    return masked.argmax(axis=0).tolist(), masked.argmax(axis=1).tolist()


def triplet_loss(S: Tensor, margin: float) -> Tensor:
    """Hinge triplet ranking loss with in-batch hardest negatives, averaged over the batch."""
    if S.data.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError("triplet_loss", S.shape, detail="similarity matrix must be square")
    batch = S.shape[0]
    if batch < 2:
        raise ContractError("triplet_loss needs a batch of at least 2 (no negatives exist)")
    neg_images, neg_captions = hardest_negatives(S.data)
    anchors = list(range(batch))
    positive = ops.pick(S, anchors, anchors)
    image_neg = ops.pick(S, neg_images, anchors)
    caption_neg = ops.pick(S, anchors, neg_captions)
    offset = Tensor(np.full((1, batch), float(margin)))
    hinge_image = ops.relu(ops.add(ops.sub(offset, positive), image_neg))
    hinge_caption = ops.relu(ops.add(ops.sub(offset, positive), caption_neg))
    return ops.scale(ops.sum_all(ops.add(hinge_image, hinge_caption)), 1.0 / batch)
