"""Edge embeddings for the matching graph.

Three stages: second-order biased random walks over edge affinities,
skip-gram-with-negative-sampling training of vertex vectors, and the
Hadamard endpoint product that turns two vertex vectors into an edge
embedding.

Walk bias follows the weighted second-order scheme: with previous vertex t,
current v and candidate x, the unnormalized weight is alpha(t, x) *
affinity(v, x) where

    alpha = 1/p                          if x == t
    alpha = 1                            if edge (t,x) exists and is tight
    alpha = 1/q + (1-1/q) * a/mean(x)    if edge (t,x) exists but loose
    alpha = 1/q                          if no edge (t,x)

an edge being "tight" when its affinity reaches the mean affinity of the
candidate's incident edges. The first step from a start vertex is sampled
proportional to affinity alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .errors import DataError, InputError
from .graph import MatchingGraph, VertexId
from .ioutil import write_text_atomic
from .seeds import derive_rng

SGNS_TAG_INIT = 11
SGNS_TAG_NEG = 12

# Final learning rate = lr * LR_FLOOR_FRACTION (linear decay floor).
LR_FLOOR_FRACTION = 1e-4


@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_vertex: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.p > 0 and self.q > 0):
            raise DataError(f"p and q must be positive, got p={self.p}, q={self.q}")
        if self.walk_length < 2:
            raise DataError(f"walk_length must be >= 2, got {self.walk_length}")
        if self.walks_per_vertex < 1:
            raise DataError(f"walks_per_vertex must be >= 1, got {self.walks_per_vertex}")


@dataclass(frozen=True)
class NodeEmbedding:
    table: dict[VertexId, np.ndarray]
    emb_dim: int

    def vector(self, v: VertexId) -> np.ndarray:
        return self.table[v]


class WalkSampler:
    """Transition sampler over a matching graph for fixed (p, q).

    Distributions per (previous, current) state are cached on first use;
    they depend only on the graph, so visit order never changes them.
    """

    def __init__(self, g: MatchingGraph, p: float, q: float):
        self.g = g
        self.p = float(p)
        self.q = float(q)
        self.verts: list[VertexId] = list(g.vertices)
        self.index = {v: i for i, v in enumerate(self.verts)}
        self.neighbors: list[np.ndarray] = []
        self.affinities: list[np.ndarray] = []
        self.mean_aff = np.zeros(len(self.verts))
        self._aff: dict[tuple[int, int], float] = {}
        for i, v in enumerate(self.verts):
            edges = g.incident(v)
            nbr = np.array([self.index[e.other(v)] for e in edges], dtype=np.int64)
            aff = np.array([e.affinity for e in edges], dtype=np.float64)
            order = np.argsort(nbr)
            self.neighbors.append(nbr[order])
            self.affinities.append(aff[order])
            self.mean_aff[i] = aff.mean() if aff.size else 0.0
            for j, a in zip(nbr, aff):
                self._aff[(min(i, int(j)), max(i, int(j)))] = float(a)
        self._first: dict[int, np.ndarray] = {}
        self._second: dict[tuple[int, int], np.ndarray] = {}

    def _first_cum(self, vi: int) -> np.ndarray:
        cum = self._first.get(vi)
        if cum is None:
            aff = self.affinities[vi]
            cum = np.cumsum(aff / aff.sum())
            self._first[vi] = cum
        return cum

    def _second_cum(self, ti: int, vi: int) -> np.ndarray:
        key = (ti, vi)
        cum = self._second.get(key)
        if cum is None:
            probs = self._second_probs(ti, vi)
            cum = np.cumsum(probs)
            self._second[key] = cum
        return cum

    def _second_probs(self, ti: int, vi: int) -> np.ndarray:
        nbr = self.neighbors[vi]
        aff_v = self.affinities[vi]
        alpha = np.empty(nbr.size)
        inv_q = 1.0 / self.q
        for k, xi in enumerate(nbr):
            xi = int(xi)
            if xi == ti:
                alpha[k] = 1.0 / self.p
                continue
            a_tx = self._aff.get((min(ti, xi), max(ti, xi)))
            if a_tx is None:
                alpha[k] = inv_q
            elif a_tx >= self.mean_aff[xi]:
                alpha[k] = 1.0
            else:
                alpha[k] = inv_q + (1.0 - inv_q) * a_tx / self.mean_aff[xi]
        weights = alpha * aff_v
        return weights / weights.sum()

    def distribution(self, prev: VertexId | None, cur: VertexId) -> dict[VertexId, float]:
        """Exact transition probabilities from `cur` given previous vertex."""
        vi = self.index[cur]
        nbr = self.neighbors[vi]
        if nbr.size == 0:
            return {}
        if prev is None:
            aff = self.affinities[vi]
            probs = aff / aff.sum()
        else:
            probs = self._second_probs(self.index[prev], vi)
        return {self.verts[int(x)]: float(pr) for x, pr in zip(nbr, probs)}

    def step(self, prev: VertexId | None, cur: VertexId, rng: np.random.Generator) -> VertexId | None:
        vi = self.index[cur]
        nbr = self.neighbors[vi]
        if nbr.size == 0:
            return None
        if prev is None:
            cum = self._first_cum(vi)
        else:
            cum = self._second_cum(self.index[prev], vi)
        k = int(np.searchsorted(cum, rng.random(), side="right"))
        if k >= nbr.size:  # guard against cum[-1] < 1 by round-off
            k = nbr.size - 1
        return self.verts[int(nbr[k])]


def generate_walks(g: MatchingGraph, cfg: WalkConfig) -> list[list[VertexId]]:
    """walks_per_vertex biased walks from every non-isolated vertex.

    Deterministic per cfg.seed: each walk draws from its own stream derived
    from (seed, vertex index, walk index).
    """
    sampler = WalkSampler(g, cfg.p, cfg.q)
    walks: list[list[VertexId]] = []
    isolated = []
    for vi, start in enumerate(sampler.verts):
        if sampler.neighbors[vi].size == 0:
            isolated.append(start)
            continue
        for wi in range(cfg.walks_per_vertex):
            rng = derive_rng(cfg.seed, vi, wi)
            walk = [start]
            prev: VertexId | None = None
            while len(walk) < cfg.walk_length:
                nxt = sampler.step(prev, walk[-1], rng)
                if nxt is None:
                    break
                prev = walk[-1]
                walk.append(nxt)
            walks.append(walk)
    if isolated:
        warnings.warn(
            f"{len(isolated)} isolated vertices got zero walks: "
            + ", ".join(v.token() for v in isolated[:5]),
            stacklevel=2,
        )
    return walks


def dump_walks(walks: Iterable[Sequence[VertexId]], path: str | Path) -> None:
    """One walk per line, kind-qualified vertex tokens space-separated."""
    lines = [" ".join(v.token() for v in walk) for walk in walks]
    write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


@njit(cache=True)
def _sgns_kernel(U, Vout, centers, contexts, negatives, lr, lr_min, done0, total):
    dim = U.shape[1]
    kneg = negatives.shape[1]
    for i in range(centers.shape[0]):
        alpha = lr * (1.0 - (done0 + i) / total)
        if alpha < lr_min:
            alpha = lr_min
        c = centers[i]
        o = contexts[i]
        grad_c = np.zeros(dim)
        z = 0.0
        for d in range(dim):
            z += U[c, d] * Vout[o, d]
        if z > 30.0:
            z = 30.0
        elif z < -30.0:
            z = -30.0
        gpos = (1.0 - 1.0 / (1.0 + math.exp(-z))) * alpha
        for d in range(dim):
            grad_c[d] += gpos * Vout[o, d]
            Vout[o, d] += gpos * U[c, d]
        for k in range(kneg):
            nidx = negatives[i, k]
            if nidx == o:
                continue
            z = 0.0
            for d in range(dim):
                z += U[c, d] * Vout[nidx, d]
            if z > 30.0:
                z = 30.0
            elif z < -30.0:
                z = -30.0
            gneg = (0.0 - 1.0 / (1.0 + math.exp(-z))) * alpha
            for d in range(dim):
                grad_c[d] += gneg * Vout[nidx, d]
                Vout[nidx, d] += gneg * U[c, d]
        for d in range(dim):
            U[c, d] += grad_c[d]


def _window_pairs(walk_ids: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers = []
    contexts = []
    n = walk_ids.size
    for off in range(1, window + 1):
        if off >= n:
            break
        left = walk_ids[:-off]
        right = walk_ids[off:]
        centers.append(left)
        contexts.append(right)
        centers.append(right)
        contexts.append(left)
    if not centers:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(centers), np.concatenate(contexts)


def _train_sgns(
    walks: Sequence[Sequence[VertexId]],
    emb_dim: int,
    window: int,
    negatives: int,
    epochs: int,
    lr: float,
    seed: int,
    vocab: Sequence[VertexId] | None,
) -> tuple[list[VertexId], np.ndarray, np.ndarray]:
    """Run skip-gram training; returns (vocab, input matrix, context matrix)."""
    if not walks:
        raise DataError("empty walk corpus")
    seen = sorted({v for walk in walks for v in walk})
    if vocab is None:
        vocab_list = seen
    else:
        vocab_list = sorted(set(vocab) | set(seen))
    tok = {v: i for i, v in enumerate(vocab_list)}
    nv = len(vocab_list)

    counts = np.zeros(nv, dtype=np.float64)
    walk_ids = []
    for walk in walks:
        ids = np.fromiter((tok[v] for v in walk), dtype=np.int64, count=len(walk))
        walk_ids.append(ids)
        np.add.at(counts, ids, 1.0)

    centers_parts, contexts_parts = [], []
    for ids in walk_ids:
        c, o = _window_pairs(ids, window)
        if c.size:
            centers_parts.append(c)
            contexts_parts.append(o)
    rng_init = derive_rng(seed, SGNS_TAG_INIT)
    U = (rng_init.random((nv, emb_dim)) - 0.5) / emb_dim
    Vout = np.zeros((nv, emb_dim))
    if centers_parts:
        centers = np.concatenate(centers_parts)
        contexts = np.concatenate(contexts_parts)
        noise = counts ** 0.75
        noise_cum = np.cumsum(noise / noise.sum())
        n_pairs = centers.size
        total = n_pairs * epochs
        lr_min = lr * LR_FLOOR_FRACTION
        for epoch in range(epochs):
            rng_neg = derive_rng(seed, SGNS_TAG_NEG, epoch)
            negs = np.searchsorted(
                noise_cum, rng_neg.random((n_pairs, negatives)), side="right"
            ).astype(np.int64)
            np.clip(negs, 0, nv - 1, out=negs)
            _sgns_kernel(U, Vout, centers, contexts, negs, lr, lr_min, epoch * n_pairs, total)

    return vocab_list, U, Vout


def train_node_embeddings(
    walks: Sequence[Sequence[VertexId]],
    emb_dim: int = 128,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    seed: int = 0,
    vocab: Sequence[VertexId] | None = None,
) -> NodeEmbedding:
    """Skip-gram with negative sampling over the walk corpus.

    Negatives come from the unigram^0.75 distribution; the learning rate
    decays linearly to lr*1e-4 over all updates. Single-threaded and
    deterministic per seed. Vertices in `vocab` that never occur in the
    corpus keep their (seeded) init vectors, so every graph vertex can be
    guaranteed an entry.
    """
    vocab_list, U, _ = _train_sgns(walks, emb_dim, window, negatives, epochs, lr, seed, vocab)
    table = {v: U[i].copy() for i, v in enumerate(vocab_list)}
    return NodeEmbedding(table=table, emb_dim=emb_dim)


def edge_embedding(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Hadamard product of the endpoint vectors; symmetric in arguments."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise InputError(f"endpoint vectors must share one length, got {u.shape} and {v.shape}")
    return u * v


def save_embeddings(emb: NodeEmbedding, path: str | Path) -> None:
    from .ioutil import write_json_atomic

    write_json_atomic(
        path,
        {
            "emb_dim": emb.emb_dim,
            "vectors": {v.token(): emb.table[v].tolist() for v in sorted(emb.table)},
        },
    )


def load_embeddings(path: str | Path) -> NodeEmbedding:
    from .errors import FormatError
    from .graph import VertexId
    from .ioutil import read_json

    d = read_json(path)
    try:
        emb_dim = int(d["emb_dim"])
        table = {
            VertexId.from_token(tok): np.asarray(vec, dtype=np.float64)
            for tok, vec in d["vectors"].items()
        }
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed embedding file {path}: {e}") from e
    for v, vec in table.items():
        if vec.shape != (emb_dim,):
            raise FormatError(
                f"embedding for {v.token()} has shape {vec.shape}, expected ({emb_dim},)"
            )
    return NodeEmbedding(table=table, emb_dim=emb_dim)
