"""Masked-distance pre-training, affinity fine-tuning and evaluation metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .molio import Complex
from .model import (
    D_MAX, ComplexFeatures, Decomposition, HierarchicalModel, featurize,
    finetune_forward, predict_cross,
)
from .numerics import (
    Adam, NumericError, Tensor, add, as_tensor, backward, concat, mean, reshape, scale, square,
    sub, sum_,
)

log = logging.getLogger(__name__)

UNDEFINED = "undefined"


# ------------------------------------------------------------ rigid motions

@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray
    translation: np.ndarray
    seed: int | None = None

    def apply(self, coords: np.ndarray) -> np.ndarray:
        return coords @ self.rotation.T + self.translation


def quaternion_to_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Unit quaternion (w, x, y, z) uniform on S^3, via three uniform draws."""
    u1, u2, u3 = rng.random(3)
    a, b = math.sqrt(1.0 - u1), math.sqrt(u1)
    return np.array([b * math.cos(2 * math.pi * u3), a * math.sin(2 * math.pi * u2),
                     a * math.cos(2 * math.pi * u2), b * math.sin(2 * math.pi * u3)])


def random_transform(rng: np.random.Generator, max_translation: float = 10.0) -> RigidTransform:
    seed = int(rng.integers(0, 2**63 - 1))
    sub_rng = np.random.default_rng(seed)
    R = quaternion_to_matrix(random_quaternion(sub_rng))
    direction = sub_rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = max_translation * sub_rng.random() ** (1.0 / 3.0)
    return RigidTransform(R, radius * direction, seed)


def perturb_compound(c: Complex, rng: np.random.Generator | None = None,
                     transform: RigidTransform | None = None,
                     max_translation: float = 10.0) -> tuple[Complex, RigidTransform]:
    """Move the compound rigidly; the protein stays as the reference frame."""
    if transform is None:
        transform = random_transform(rng or np.random.default_rng(), max_translation)
    moved = c.compound.with_coords(transform.apply(c.compound.coords))
    return replace(c, compound=moved), transform


# ------------------------------------------------------------ losses

def _sq_error(pred: Tensor, target: np.ndarray, reduction: str) -> Tensor:
    err = sum_(square(sub(pred, Tensor(target))))
    if reduction == "sum":
        return err
    if reduction == "mean":
        return scale(err, 1.0 / target.size)
    raise ValueError(f"unknown reduction {reduction!r}")


def _features(c, d_max) -> ComplexFeatures:
    return c if isinstance(c, ComplexFeatures) else featurize(c, d_max=d_max)


def loss_atom(c: Complex | ComplexFeatures, model: HierarchicalModel,
              reduction: str = "sum", d_max: float | None = D_MAX) -> Tensor:
    """Squared error over every compound-atom/protein-atom pair, cross distances masked."""
    f = _features(c, d_max)
    return _sq_error(predict_cross(model, f, "atom"), f.atom_target, reduction)


def loss_motif(c: Complex | ComplexFeatures, model: HierarchicalModel,
               reduction: str = "sum", d_max: float | None = D_MAX) -> Tensor:
    f = _features(c, d_max)
    return _sq_error(predict_cross(model, f, "motif"), f.motif_target, reduction)


def loss_conditioned(c: Complex | ComplexFeatures, model: HierarchicalModel,
                     reduction: str = "sum", d_max: float | None = D_MAX,
                     use_prior: bool = True) -> Tensor:
    """Atom-pair squared error from the encoder that sees true motif distances as a prior."""
    f = _features(c, d_max)
    return _sq_error(predict_cross(model, f, "cond", use_prior=use_prior), f.atom_target, reduction)


@dataclass(frozen=True)
class LossBundle:
    l_atom: float
    l_motif: float
    l_cond: float
    total: float

    @classmethod
    def of(cls, l_atom: float, l_motif: float, l_cond: float) -> "LossBundle":
        return cls(l_atom, l_motif, l_cond, l_atom + l_motif + l_cond)


@dataclass
class PretrainOptions:
    d_max: float | None = D_MAX
    w_atom: float = 1.0
    w_motif: float = 1.0
    w_cond: float = 1.0
    max_translation: float = 10.0


class StepAborted(RuntimeError):
    pass


def pretrain_step(batch: Sequence[Complex], model: HierarchicalModel, optimizer: Adam,
                  rng: np.random.Generator, options: PretrainOptions = PretrainOptions(),
                  decomps: Sequence[Decomposition] | None = None) -> LossBundle:
    """Perturb, score all three masked objectives, backpropagate and step once.

    Each complex contributes pair-count-normalised losses; the batch value is
    their mean. The returned bundle holds the pre-step values.
    """
    if not batch:
        raise ValueError("empty batch")
    optimizer.zero_grad()
    total_t = None
    sums = [0.0, 0.0, 0.0]
    for k, c in enumerate(batch):
        moved, _ = perturb_compound(c, rng, max_translation=options.max_translation)
        try:
            f = featurize(moved, decomps[k] if decomps else None, reference=c, d_max=options.d_max)
            la = scale(loss_atom(f, model, "mean"), options.w_atom)
            lm = scale(loss_motif(f, model, "mean"), options.w_motif)
            lc = scale(loss_conditioned(f, model, "mean"), options.w_cond)
        except NumericError as exc:
            raise StepAborted(f"non-finite forward pass on complex {c.id!r}: {exc}") from exc
        sums[0] += la.item()
        sums[1] += lm.item()
        sums[2] += lc.item()
        part = add(add(la, lm), lc)
        total_t = part if total_t is None else add(total_t, part)
    loss = scale(total_t, 1.0 / len(batch))
    backward(loss)
    bad = [name for name, p in optimizer.params.items()
           if p.grad is not None and not np.all(np.isfinite(p.grad))]
    if bad:
        raise StepAborted(f"non-finite gradients in {len(bad)} parameters, e.g. {bad[:3]}")
    optimizer.step()
    model.project()
    b = len(batch)
    return LossBundle.of(sums[0] / b, sums[1] / b, sums[2] / b)


# ------------------------------------------------------------ fine-tuning

@dataclass(frozen=True)
class AffinityPrediction:
    value: float
    complex_id: str


def predict_affinity(c: Complex | ComplexFeatures, model: HierarchicalModel) -> AffinityPrediction:
    f = _features(c, D_MAX)
    return AffinityPrediction(finetune_forward(f, model).item(), f.id)


def finetune_loss(preds, labels) -> Tensor:
    """Mean squared error; ``preds`` may be a 1-D tensor or a list of scalar tensors."""
    if not isinstance(preds, Tensor):
        preds = concat([reshape(as_tensor(x), (1,)) for x in preds]) if len(preds) else None
    n = 0 if preds is None else preds.shape[0]
    if n == 0 or n != len(labels):
        raise ValueError(f"finetune_loss: need equal non-empty lengths, got {n} and {len(labels)}")
    return mean(square(sub(preds, Tensor(np.asarray(labels, dtype=np.float64)))))


def finetune_step(batch: Sequence[ComplexFeatures], model: HierarchicalModel,
                  optimizer: Adam) -> float:
    optimizer.zero_grad()
    preds = [finetune_forward(f, model) for f in batch]
    loss = finetune_loss(preds, [f.affinity for f in batch])
    value = loss.item()
    backward(loss)
    optimizer.step()
    model.project()
    return value


# ------------------------------------------------------------ metrics

def metric_rmse(preds, labels) -> float:
    p = np.asarray(preds, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.size == 0:
        raise ValueError("metric_rmse: need equal non-empty lengths")
    return math.sqrt(float(np.mean((p - y) ** 2)))


def metric_pearson(preds, labels) -> float | str:
    """Pearson correlation, or ``"undefined"`` for n < 2 or a constant vector."""
    p = np.asarray(preds, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError("metric_pearson: length mismatch")
    if p.size < 2 or np.all(p == p[0]) or np.all(y == y[0]):
        return UNDEFINED
    pc, yc = p - p.mean(), y - y.mean()
    sp, sy = math.sqrt(float(pc @ pc)), math.sqrt(float(yc @ yc))
    if sp == 0.0 or sy == 0.0:
        return UNDEFINED
    return float(pc @ yc) / (sp * sy)
