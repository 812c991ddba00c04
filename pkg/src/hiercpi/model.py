"""Three-encoder model and per-complex feature preparation."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .encoder import (
    DistanceHead, GraphEncoder, LevelInput, MOTIF_KINDS, ATOM_BUCKETS, element_bucket,
    element_index, pairwise_distances,
)
from .molio import Complex
from .motifgen import MotifGraph, averaging_matrix, decompose_compound, decompose_protein
from .numerics import Linear, Module, Tensor, concat, mean, reshape, slice_

D_MAX = 20.0


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 4
    n_heads: int = 8
    d_model: int = 128
    n_kernels: int = 16
    mu_max: float = 12.0
    ffn_mult: int = 4
    init_distance: float = 10.0
    bias_init_scale: float = 8.0

    def to_dict(self) -> dict:
        return asdict(self)


class HierarchicalModel(Module):
    """Atom, motif and motif-conditioned atom encoders with distance and affinity heads."""

    def __init__(self, config: ModelConfig = ModelConfig(), seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        kw = dict(d_model=config.d_model, n_layers=config.n_layers, n_heads=config.n_heads,
                  n_kernels=config.n_kernels, mu_max=config.mu_max, ffn_mult=config.ffn_mult,
                  bias_init_scale=config.bias_init_scale)
        self.atom_encoder = GraphEncoder(rng, "atom", **kw)
        self.motif_encoder = GraphEncoder(rng, "motif", **kw)
        self.cond_encoder = GraphEncoder(rng, "atom", conditioned=True, **kw)
        self.atom_head = DistanceHead(rng, config.d_model, init_distance=config.init_distance)
        self.motif_head = DistanceHead(rng, config.d_model, init_distance=config.init_distance)
        self.cond_head = DistanceHead(rng, config.d_model, init_distance=config.init_distance)
        self.affinity_head = Linear(rng, 6 * config.d_model, 1)
        self.affinity_head.weight.data[:] = 0.0
        self.affinity_head.bias.data[:] = 0.0

    def encoders(self):
        return (self.atom_encoder, self.motif_encoder, self.cond_encoder)

    def project(self) -> None:
        for enc in self.encoders():
            enc.project_sigma()


# ------------------------------------------------------------------ features

@dataclass
class ComplexFeatures:
    """Encoder inputs for one (possibly perturbed) complex plus loss targets.

    ``atom_target``/``motif_target`` hold true cross distances from the
    reference (unperturbed) coordinates, clipped at ``d_max``.
    """

    id: str
    atom: LevelInput
    motif: LevelInput
    atom_target: np.ndarray
    motif_target: np.ndarray
    affinity: float | None

    @property
    def m_atoms(self) -> int:
        return self.atom.n_compound

    @property
    def m_motifs(self) -> int:
        return self.motif.n_compound


@dataclass
class Decomposition:
    compound: MotifGraph
    protein: MotifGraph


def decompose(c: Complex) -> Decomposition:
    return Decomposition(decompose_compound(c.compound), decompose_protein(c.protein))


def _centroids(mg: MotifGraph, coords: np.ndarray) -> np.ndarray:
    return np.stack([coords[list(m)].mean(axis=0) for m in mg.motifs])


def featurize(c: Complex, decomp: Decomposition | None = None,
              reference: Complex | None = None, d_max: float | None = D_MAX) -> ComplexFeatures:
    """Build encoder inputs from ``c`` and targets/priors from ``reference`` (default ``c``).

    The compound of ``c`` may be a rigidly moved copy of the reference
    compound; the motif partition is shared because topology is unchanged.
    """
    decomp = decomp or decompose(c)
    ref = reference or c
    cc, pc = c.compound.coords, c.protein.coords
    m, n = len(c.compound), len(c.protein)

    tokens = np.array([element_index(e) for e in c.compound.elements + c.protein.elements])
    unknown = int((tokens == 0).sum())
    nb = len(ATOM_BUCKETS)
    atom_cls = np.array([element_bucket(e) for e in c.compound.elements]
                        + [nb + element_bucket(e) for e in c.protein.elements])
    atom_pos = np.concatenate([cc, pc])
    atom_dist = pairwise_distances(atom_pos)

    mc, mp = decomp.compound, decomp.protein
    nk = len(MOTIF_KINDS)
    motif_cls = np.array([MOTIF_KINDS.index(k) for k in mc.kinds]
                         + [nk + MOTIF_KINDS.index(k) for k in mp.kinds])
    pool = np.zeros((len(mc) + len(mp), m + n))
    pool[:len(mc), :m] = averaging_matrix(mc, m)
    pool[len(mc):, m:] = averaging_matrix(mp, n)
    motif_pos = np.concatenate([_centroids(mc, cc), _centroids(mp, pc)])
    motif_dist = pairwise_distances(motif_pos)

    ref_cc, ref_pc = ref.compound.coords, ref.protein.coords
    ref_mc, ref_mp = _centroids(mc, ref_cc), _centroids(mp, ref_pc)
    true_atom = pairwise_distances(ref_cc, ref_pc, decimals=None)
    true_motif = pairwise_distances(ref_mc, ref_mp, decimals=None)
    prior = pairwise_distances(ref_mc, ref_mp)[np.ix_(mc.parent, mp.parent)]

    atom_target = true_atom if d_max is None else np.minimum(true_atom, d_max)
    motif_target = true_motif if d_max is None else np.minimum(true_motif, d_max)
    return ComplexFeatures(
        id=c.id,
        atom=LevelInput(tokens, None, atom_cls, atom_dist, m, prior, unknown),
        motif=LevelInput(tokens, pool, motif_cls, motif_dist, len(mc), None, unknown),
        atom_target=atom_target,
        motif_target=motif_target,
        affinity=c.affinity,
    )


# ------------------------------------------------------------------ forwards

def predict_cross(model: HierarchicalModel, feats: ComplexFeatures, which: str,
                  mask_policy: str | None = None, use_prior: bool = True) -> Tensor:
    """Predicted cross-distance matrix (m x n) from one encoder/head pair.

    ``which`` is ``"atom"``, ``"motif"`` or ``"cond"``. Default policies are
    the pre-training ones: masked, masked, prior.
    """
    if which == "atom":
        enc, head, inp = model.atom_encoder, model.atom_head, feats.atom
        policy = mask_policy or "masked"
    elif which == "motif":
        enc, head, inp = model.motif_encoder, model.motif_head, feats.motif
        policy = mask_policy or "masked"
    elif which == "cond":
        enc, head, inp = model.cond_encoder, model.cond_head, feats.atom
        policy = mask_policy or "prior"
        if inp.prior_dist is None:
            raise ValueError("conditioned prediction needs motif parent maps / prior distances")
    else:
        raise ValueError(f"unknown encoder {which!r}")
    H = enc(inp, policy, use_prior=use_prior)
    m = inp.n_compound
    return head(slice_(H, slice(0, m)), slice_(H, slice(m, None)))


def complex_summary(H: Tensor, m: int) -> Tensor:
    """Mean over compound rows concatenated with mean over protein rows: (2d,)."""
    return concat([mean(slice_(H, slice(0, m)), axis=0), mean(slice_(H, slice(m, None)), axis=0)])


def finetune_forward(feats: ComplexFeatures, model: HierarchicalModel) -> Tensor:
    """Scalar affinity prediction from all three encoders with full information."""
    parts = [
        complex_summary(model.atom_encoder(feats.atom, "full"), feats.m_atoms),
        complex_summary(model.motif_encoder(feats.motif, "full"), feats.m_motifs),
        complex_summary(model.cond_encoder(feats.atom, "full"), feats.m_atoms),
    ]
    z = reshape(concat(parts), (1, -1))
    return reshape(model.affinity_head(z), ())
