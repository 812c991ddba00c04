"""Graph transformer over a compound+protein node set with distance-derived attention bias.

Nodes are ordered compound first (``m`` rows) then protein (``n`` rows). The
pairwise bias tensor is built in four blocks: compound-compound,
protein-protein and the two cross blocks. Under the ``masked`` policy the
cross blocks are a single learned vector broadcast over every cross pair, so
intermolecular distances never reach the network. ``full`` fills them from
real distances. A conditioned encoder carries a second bank of channels that
holds motif-centroid distances for each cross atom pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    Embedding, LayerNorm, Linear, Module, Tensor, add, broadcast_to, concat, gaussian_basis,
    matmul, mul, parameter, relu, reshape, scale, softmax, softplus, take_rows, transpose,
    uniform_init,
)

MASK_POLICIES = ("masked", "full", "prior")

ELEMENT_VOCAB = ("UNK", "C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B", "Si", "Se",
                 "Na", "K", "Mg", "Ca", "Zn", "Fe", "Mn", "Cu", "Co", "Ni", "Hg", "Cd")
_ELEMENT_INDEX = {e: i for i, e in enumerate(ELEMENT_VOCAB)}

ATOM_BUCKETS = ("C", "N", "O", "S", "P", "halogen", "metal", "other")
_HALOGENS = frozenset({"F", "Cl", "Br", "I", "At"})
_METALS = frozenset({"Li", "Na", "K", "Rb", "Cs", "Be", "Mg", "Ca", "Sr", "Ba", "Al", "Zn", "Fe",
                     "Mn", "Cu", "Co", "Ni", "Cd", "Hg", "Pt", "Au", "Ag", "Mo", "V", "Cr", "Ti"})
MOTIF_KINDS = ("ring", "chain", "backbone")

DISTANCE_DECIMALS = 6  # distances are snapped to 1e-6 Å before entering the network


def element_index(symbol: str) -> int:
    return _ELEMENT_INDEX.get(symbol, 0)


def element_bucket(symbol: str) -> int:
    if symbol in ("C", "N", "O", "S", "P"):
        return ATOM_BUCKETS.index(symbol)
    if symbol in _HALOGENS:
        return 5
    if symbol in _METALS:
        return 6
    return 7


def edge_type_table(n_classes: int) -> np.ndarray:
    """Symmetric (class, class) -> edge type index over unordered class pairs."""
    table = np.empty((n_classes, n_classes), dtype=np.int64)
    t = 0
    for a in range(n_classes):
        for b in range(a, n_classes):
            table[a, b] = table[b, a] = t
            t += 1
    return table


def pairwise_distances(a: np.ndarray, b: np.ndarray | None = None,
                       decimals: int | None = DISTANCE_DECIMALS) -> np.ndarray:
    """Euclidean distances, snapped to ``decimals`` places unless it is None.

    Snapping makes encoder inputs bit-identical under rigid motions, whose
    floating-point error otherwise leaks into the last few bits.
    """
    b = a if b is None else b
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt((diff * diff).sum(-1))
    return d if decimals is None else np.round(d, decimals)


# ------------------------------------------------------------------ SPE params

class SpeParams(Module):
    """Gaussian kernel bank plus per-edge-type affine distance map."""

    def __init__(self, n_kernels: int, n_classes: int, mu_max: float = 12.0):
        self.table = edge_type_table(n_classes)
        n_types = int(self.table.max()) + 1
        spacing = mu_max / (n_kernels - 1) if n_kernels > 1 else mu_max
        self.mu = parameter(np.linspace(0.0, mu_max, n_kernels))
        self.sigma = parameter(np.full(n_kernels, spacing))
        self.alpha = parameter(np.ones(n_types))
        self.beta = parameter(np.zeros(n_types))

    @property
    def n_kernels(self) -> int:
        return self.mu.shape[0]

    def edge_types(self, cls_a: np.ndarray, cls_b: np.ndarray) -> np.ndarray:
        return self.table[np.asarray(cls_a)[:, None], np.asarray(cls_b)[None, :]]

    def __call__(self, dist: np.ndarray, types: np.ndarray) -> Tensor:
        """Kernel features for a block of distances: shape ``dist.shape + (C,)``."""
        if np.any(dist < 0):
            raise ValueError("distances must be non-negative")
        x = add(mul(take_rows(self.alpha, types), Tensor(dist)), take_rows(self.beta, types))
        return gaussian_basis(x, self.mu, self.sigma)


def gaussian_spe(d: float, t: int, params: SpeParams) -> np.ndarray:
    """Kernel vector for one distance ``d`` (Å) of edge type ``t``."""
    if d < 0:
        raise ValueError(f"negative distance {d}")
    if not 0 <= t < params.alpha.shape[0]:
        raise ValueError(f"edge type {t} not in table")
    out = gaussian_basis(Tensor(np.array([params.alpha.data[t] * d + params.beta.data[t]])),
                         Tensor(params.mu.data), Tensor(params.sigma.data))
    return out.data[0]


# ------------------------------------------------------------------ inputs

@dataclass
class LevelInput:
    """Everything an encoder needs about one complex at one hierarchy level."""

    token_idx: np.ndarray        # element vocabulary index per atom
    pool: np.ndarray | None      # (nodes x atoms) averaging matrix; None at atom level
    node_class: np.ndarray       # class index per node (side folded in)
    dist: np.ndarray             # (N, N) snapped distances between node positions
    n_compound: int
    prior_dist: np.ndarray | None = None  # (m, n) motif-centroid distance per cross atom pair
    unknown_tokens: int = 0

    @property
    def n_nodes(self) -> int:
        return self.dist.shape[0]


@dataclass
class SpeBlocks:
    S_c: Tensor
    S_p: Tensor
    S_cp: Tensor
    S_pc: Tensor
    mask_policy: str

    def assemble(self) -> Tensor:
        top = concat([self.S_c, self.S_cp], axis=1)
        bottom = concat([self.S_pc, self.S_p], axis=1)
        return concat([top, bottom], axis=0)


# ------------------------------------------------------------------ layers

class EncoderLayer(Module):
    def __init__(self, rng: np.random.Generator, d_model: int, n_heads: int, n_channels: int,
                 ffn_mult: int = 4, bias_init_scale: float = 1.0):
        if d_model % n_heads:
            raise ValueError(f"d_model {d_model} not divisible by heads {n_heads}")
        self.n_heads = n_heads
        self.bias_proj = Linear(rng, n_channels, n_heads, bias=False)
        # kernel features are small (< 1/(sigma sqrt(2 pi))); a wider start keeps
        # attention distance-sensitive instead of near-uniform
        self.bias_proj.weight.data *= bias_init_scale
        self.wq = Linear(rng, d_model, d_model)
        self.wk = Linear(rng, d_model, d_model)
        self.wv = Linear(rng, d_model, d_model)
        self.wo = Linear(rng, d_model, d_model)
        self.ln1 = LayerNorm(d_model)
        self.ff1 = Linear(rng, d_model, ffn_mult * d_model)
        self.ff2 = Linear(rng, ffn_mult * d_model, d_model)
        self.ln2 = LayerNorm(d_model)

    def head_bias(self, S: Tensor) -> Tensor:
        """Project (N, N, C) kernel features to a per-head (h, N, N) bias."""
        return transpose(matmul(S, self.bias_proj.weight), (2, 0, 1))

    def _split(self, x: Tensor) -> Tensor:
        n, d = x.shape
        return transpose(reshape(x, (n, self.n_heads, d // self.n_heads)), (1, 0, 2))

    def attention(self, x: Tensor, bias: Tensor) -> Tensor:
        q, k = self._split(self.wq(x)), self._split(self.wk(x))
        dh = q.shape[-1]
        scores = add(scale(matmul(q, transpose(k, (0, 2, 1))), 1.0 / math.sqrt(dh)), bias)
        return softmax(scores, axis=-1)

    def __call__(self, x: Tensor, S: Tensor) -> Tensor:
        n, d = x.shape
        weights = self.attention(x, self.head_bias(S))
        ctx = matmul(weights, self._split(self.wv(x)))
        ctx = reshape(transpose(ctx, (1, 0, 2)), (n, d))
        x = self.ln1(add(x, self.wo(ctx)))
        return self.ln2(add(x, self.ff2(relu(self.ff1(x)))))


def attention(X: Tensor, S_reduced: Tensor, W_q: Tensor, W_k: Tensor) -> Tensor:
    """Biased attention weights ``softmax(X Wq (X Wk)^T / sqrt(d) + S)`` per head.

    ``W_q``/``W_k`` have shape (h, d_in, d_head); ``S_reduced`` is (h, N, N).
    """
    h = W_q.shape[0]
    if S_reduced.shape != (h, X.shape[0], X.shape[0]):
        raise ValueError(f"attention: bias shape {S_reduced.shape} does not match "
                         f"{h} heads over {X.shape[0]} nodes")
    xb = broadcast_to(reshape(X, (1,) + X.shape), (h,) + X.shape)
    q, k = matmul(xb, W_q), matmul(xb, W_k)
    scores = scale(matmul(q, transpose(k, (0, 2, 1))), 1.0 / math.sqrt(W_q.shape[-1]))
    return softmax(add(scores, S_reduced), axis=-1)


class GraphEncoder(Module):
    """Embedding map plus a stack of biased transformer layers.

    ``level`` is ``"atom"`` or ``"motif"``; it fixes the node-class vocabulary
    used for edge types. A ``conditioned`` encoder doubles its bias channels
    to carry motif-distance priors for cross pairs.
    """

    def __init__(self, rng: np.random.Generator, level: str, d_model: int = 128,
                 n_layers: int = 4, n_heads: int = 8, n_kernels: int = 16,
                 mu_max: float = 12.0, ffn_mult: int = 4, conditioned: bool = False,
                 bias_init_scale: float = 1.0):
        if level not in ("atom", "motif"):
            raise ValueError(f"unknown level {level!r}")
        self.level = level
        self.conditioned = conditioned
        self.d_model = d_model
        n_classes = 2 * (len(ATOM_BUCKETS) if level == "atom" else len(MOTIF_KINDS))
        self.embedding = Embedding(rng, len(ELEMENT_VOCAB), d_model)
        self.spe = SpeParams(n_kernels, n_classes, mu_max)
        self.mask = parameter(uniform_init(rng, (n_kernels,), n_kernels))
        channels = n_kernels * (2 if conditioned else 1)
        self.layers = [EncoderLayer(rng, d_model, n_heads, channels, ffn_mult, bias_init_scale)
                       for _ in range(n_layers)]

    # the mapping from a graph to (node embeddings, kernel blocks)
    def embed(self, inp: LevelInput, mask_policy: str = "masked",
              use_prior: bool = True) -> tuple[Tensor, SpeBlocks]:
        if mask_policy not in MASK_POLICIES:
            raise ValueError(f"unknown mask policy {mask_policy!r}")
        if mask_policy == "prior" and not self.conditioned:
            raise ValueError("mask policy 'prior' needs a conditioned encoder")
        atom_x = self.embedding(inp.token_idx)
        X = atom_x if inp.pool is None else matmul(Tensor(inp.pool), atom_x)

        m = inp.n_compound
        n = inp.n_nodes - m
        cls = inp.node_class
        spe = self.spe
        C = spe.n_kernels
        S_c = spe(inp.dist[:m, :m], spe.edge_types(cls[:m], cls[:m]))
        S_p = spe(inp.dist[m:, m:], spe.edge_types(cls[m:], cls[m:]))
        if mask_policy == "full":
            S_cp = spe(inp.dist[:m, m:], spe.edge_types(cls[:m], cls[m:]))
            S_pc = transpose(S_cp, (1, 0, 2))
        else:
            S_cp = broadcast_to(self.mask, (m, n, C))
            S_pc = broadcast_to(self.mask, (n, m, C))

        if self.conditioned:
            if inp.prior_dist is None:
                raise ValueError("conditioned encoder needs motif prior distances")
            if use_prior:
                P_cp = spe(inp.prior_dist, spe.edge_types(cls[:m], cls[m:]))
                P_pc = transpose(P_cp, (1, 0, 2))
            else:
                P_cp = Tensor(np.zeros((m, n, C)))
                P_pc = Tensor(np.zeros((n, m, C)))
            S_c = concat([S_c, Tensor(np.zeros((m, m, C)))], axis=2)
            S_p = concat([S_p, Tensor(np.zeros((n, n, C)))], axis=2)
            S_cp = concat([S_cp, P_cp], axis=2)
            S_pc = concat([S_pc, P_pc], axis=2)
        return X, SpeBlocks(S_c, S_p, S_cp, S_pc, mask_policy)

    def encode(self, X: Tensor, blocks: SpeBlocks | Tensor) -> Tensor:
        S = blocks.assemble() if isinstance(blocks, SpeBlocks) else blocks
        H = X
        for layer in self.layers:
            H = layer(H, S)
        return H

    def __call__(self, inp: LevelInput, mask_policy: str = "masked",
                 use_prior: bool = True) -> Tensor:
        X, blocks = self.embed(inp, mask_policy, use_prior)
        return self.encode(X, blocks)

    def project_sigma(self, floor: float = 1e-2) -> None:
        np.maximum(self.spe.sigma.data, floor, out=self.spe.sigma.data)


class DistanceHead(Module):
    """Symmetrised pair MLP on ``[h_i | h_j | h_i * h_j]`` with a softplus output."""

    def __init__(self, rng: np.random.Generator, d_model: int, hidden: int | None = None,
                 init_distance: float = 10.0):
        hidden = hidden or d_model
        fan_in = 3 * d_model
        self.w_left = parameter(uniform_init(rng, (d_model, hidden), fan_in))
        self.w_right = parameter(uniform_init(rng, (d_model, hidden), fan_in))
        self.w_prod = parameter(uniform_init(rng, (d_model, hidden), fan_in))
        self.b1 = parameter(uniform_init(rng, (hidden,), fan_in))
        self.out = Linear(rng, hidden, 1)
        # constant start at a typical separation: a random output layer makes the
        # first updates flatten node features to fit the mean
        self.out.weight.data[:] = 0.0
        self.out.bias.data[:] = math.log(math.expm1(init_distance))

    def _finish(self, pre_lr: Tensor, prod: Tensor) -> Tensor:
        m, n = prod.shape[0], prod.shape[1]
        pre = add(add(pre_lr, prod), self.b1)
        return softplus(reshape(self.out(relu(pre)), (m, n)))

    def __call__(self, Hc: Tensor, Hp: Tensor) -> Tensor:
        """Predicted distance for every (compound row, protein row) pair: shape (m, n)."""
        m, d = Hc.shape
        n = Hp.shape[0]
        hid = self.b1.shape[0]

        def col(t):
            return broadcast_to(reshape(t, (m, 1, hid)), (m, n, hid))

        def row(t):
            return broadcast_to(reshape(t, (1, n, hid)), (m, n, hid))

        hc = broadcast_to(reshape(Hc, (m, 1, d)), (m, n, d))
        hp = broadcast_to(reshape(Hp, (1, n, d)), (m, n, d))
        prod = matmul(mul(hc, hp), self.w_prod)
        f_ij = self._finish(add(col(matmul(Hc, self.w_left)), row(matmul(Hp, self.w_right))), prod)
        f_ji = self._finish(add(row(matmul(Hp, self.w_left)), col(matmul(Hc, self.w_right))), prod)
        return scale(add(f_ij, f_ji), 0.5)


def predict_distance(head: DistanceHead, h_i, h_j) -> float:
    """Predicted distance between two single node representations."""
    hi = Tensor(np.asarray(h_i.data if isinstance(h_i, Tensor) else h_i).reshape(1, -1))
    hj = Tensor(np.asarray(h_j.data if isinstance(h_j, Tensor) else h_j).reshape(1, -1))
    return float(head(hi, hj).data[0, 0])
