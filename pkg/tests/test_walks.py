import math

import numpy as np
import pytest

from zoomatch.errors import DataError, InputError
from zoomatch.graph import Edge, EdgeKind, MatchingGraph, dataset_vertex, model_vertex
from zoomatch.walks import (
    NodeEmbedding,
    WalkConfig,
    WalkSampler,
    _train_sgns,
    dump_walks,
    edge_embedding,
    generate_walks,
    load_embeddings,
    save_embeddings,
    train_node_embeddings,
)

A = dataset_vertex("a")
C = dataset_vertex("c")
B = model_vertex("b")


def fixed_graph(vertices, triples, tau=1.0):
    # triples: (u, v, kind, distance); affinity forced coherent with tau
    edges = [Edge(u, v, kind, d, math.exp(-d / tau)) for u, v, kind, d in triples]
    return MatchingGraph(vertices, edges, tau, probe_id="p")


def star_graph():
    center = dataset_vertex("hub")
    leaves = [model_vertex(f"m{i}") for i in range(3)]
    return center, leaves, fixed_graph(
        [center] + leaves,
        [(center, leaf, EdgeKind.PERFORMANCE, 1.0) for leaf in leaves])


def path_graph():
    # a -- b -- c with equal affinities and no (a, c) edge
    return fixed_graph([A, B, C], [
        (A, B, EdgeKind.PERFORMANCE, 1.0),
        (B, C, EdgeKind.PERFORMANCE, 1.0),
    ])


def empirical(sampler, prev, cur, draws=10_000, seed=0):
    rng = np.random.default_rng(seed)
    counts = {}
    for _ in range(draws):
        nxt = sampler.step(prev, cur, rng)
        counts[nxt] = counts.get(nxt, 0) + 1
    return {v: c / draws for v, c in counts.items()}


def test_star_first_step_uniform():
    center, leaves, g = star_graph()
    sampler = WalkSampler(g, p=1.0, q=1.0)
    dist = sampler.distribution(None, center)
    assert set(dist) == set(leaves)
    assert all(abs(pr - 1 / 3) <= 1e-12 for pr in dist.values())
    emp = empirical(sampler, None, center)
    assert all(abs(emp.get(leaf, 0.0) - 1 / 3) <= 0.02 for leaf in leaves)


def test_single_candidate_returns():
    center, leaves, g = star_graph()
    sampler = WalkSampler(g, p=1.0, q=1.0)
    dist = sampler.distribution(center, leaves[0])
    assert dist == {center: 1.0}
    emp = empirical(sampler, center, leaves[0], draws=100)
    assert emp == {center: 1.0}


def test_path_second_order_bias():
    g = path_graph()
    sampler = WalkSampler(g, p=1.0, q=0.5)
    dist = sampler.distribution(A, B)
    assert abs(dist[A] - 1 / 3) <= 1e-12
    assert abs(dist[C] - 2 / 3) <= 1e-12
    emp = empirical(sampler, A, B)
    assert abs(emp.get(A, 0.0) - 1 / 3) <= 0.02
    assert abs(emp.get(C, 0.0) - 2 / 3) <= 0.02


def test_tight_and_loose_alpha():
    # triangle: a--b, b--c perf (dist 1), a--c similarity (dist 2, loose at c)
    g = fixed_graph([A, B, C], [
        (A, B, EdgeKind.PERFORMANCE, 1.0),
        (B, C, EdgeKind.PERFORMANCE, 1.0),
        (A, C, EdgeKind.SIMILARITY, 2.0),
    ])
    p, q = 1.0, 0.5
    sampler = WalkSampler(g, p=p, q=q)
    aff1, aff2 = math.exp(-1.0), math.exp(-2.0)
    mean_c = (aff1 + aff2) / 2
    # at b with prev a: candidate a -> 1/p; candidate c has loose edge (a,c)
    alpha_c = 1 / q + (1 - 1 / q) * aff2 / mean_c
    w_a, w_c = (1 / p) * aff1, alpha_c * aff1
    dist = sampler.distribution(A, B)
    assert abs(dist[A] - w_a / (w_a + w_c)) <= 1e-12
    assert abs(dist[C] - w_c / (w_a + w_c)) <= 1e-12
    # at c with prev b: candidate a's edge (b,a) is tight at a (equal affinities)
    mean_a = (aff1 + aff2) / 2
    assert aff1 >= mean_a
    w_b, w_a2 = (1 / p) * aff1, 1.0 * aff2
    dist2 = sampler.distribution(B, C)
    assert abs(dist2[B] - w_b / (w_b + w_a2)) <= 1e-12
    assert abs(dist2[A] - w_a2 / (w_b + w_a2)) <= 1e-12


def test_distribution_sums_to_one():
    g = path_graph()
    sampler = WalkSampler(g, p=2.0, q=0.25)
    for prev, cur in [(None, A), (None, B), (A, B), (C, B), (B, A)]:
        dist = sampler.distribution(prev, cur)
        assert abs(sum(dist.values()) - 1.0) <= 1e-12


def test_walks_follow_edges_and_counts():
    center, leaves, g = star_graph()
    cfg = WalkConfig(p=1.0, q=2.0, walk_length=15, walks_per_vertex=4, seed=3)
    walks = generate_walks(g, cfg)
    assert len(walks) == 4 * 4
    starts = [w[0] for w in walks]
    for v in [center] + leaves:
        assert starts.count(v) == 4
    for w in walks:
        assert len(w) <= 15
        for x, y in zip(w, w[1:]):
            assert g.edge_between(x, y) is not None


def test_walks_deterministic():
    _, _, g = star_graph()
    cfg = WalkConfig(walk_length=10, walks_per_vertex=3, seed=7)
    assert generate_walks(g, cfg) == generate_walks(g, cfg)
    other = generate_walks(g, WalkConfig(walk_length=10, walks_per_vertex=3, seed=8))
    assert other != generate_walks(g, cfg)


def test_isolated_vertex_warns():
    loner = model_vertex("loner")
    g = fixed_graph([A, C, loner], [(A, C, EdgeKind.SIMILARITY, 1.0)])
    with pytest.warns(UserWarning, match="isolated"):
        walks = generate_walks(g, WalkConfig(walk_length=5, walks_per_vertex=2, seed=0))
    assert len(walks) == 2 * 2
    assert all(loner not in w for w in walks)


def test_dump_walks(tmp_path):
    walks = [[A, B, C], [C, B]]
    dump_walks(walks, tmp_path / "walks.txt")
    text = (tmp_path / "walks.txt").read_text()
    assert text == "dataset:a model:b dataset:c\ndataset:c model:b\n"


def test_walk_config_validation():
    with pytest.raises(Exception):
        WalkConfig(p=0.0)
    with pytest.raises(Exception):
        WalkConfig(walk_length=1)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def test_sgns_single_pair_converges():
    corpus = [[A, B]] * 200
    vocab, U, Vout = _train_sgns(corpus, emb_dim=8, window=1, negatives=2,
                                 epochs=5, lr=0.1, seed=0, vocab=None)
    ia, ib = vocab.index(A), vocab.index(B)
    assert sigmoid(float(U[ia] @ Vout[ib])) > 0.9


def test_sgns_barbell_separation():
    left = [dataset_vertex(f"l{i}") for i in range(5)]
    right = [dataset_vertex(f"r{i}") for i in range(5)]
    triples = []
    for side in (left, right):
        for i in range(5):
            for j in range(i + 1, 5):
                triples.append((side[i], side[j], EdgeKind.SIMILARITY, 1.0))
    triples.append((left[0], right[0], EdgeKind.SIMILARITY, 1.0))
    g = fixed_graph(left + right, triples)
    walks = generate_walks(g, WalkConfig(walk_length=20, walks_per_vertex=10, seed=0))
    emb = train_node_embeddings(walks, emb_dim=16, window=3, negatives=3, epochs=3, seed=0)

    def cos(u, v):
        return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

    intra, inter = [], []
    for i in range(5):
        for j in range(i + 1, 5):
            intra.append(cos(emb.vector(left[i]), emb.vector(left[j])))
            intra.append(cos(emb.vector(right[i]), emb.vector(right[j])))
    for u in left:
        for v in right:
            inter.append(cos(emb.vector(u), emb.vector(v)))
    assert np.mean(intra) > np.mean(inter)


def test_sgns_deterministic():
    _, _, g = star_graph()
    walks = generate_walks(g, WalkConfig(walk_length=12, walks_per_vertex=5, seed=1))
    a = train_node_embeddings(walks, emb_dim=8, window=2, negatives=2, epochs=2, seed=4)
    b = train_node_embeddings(walks, emb_dim=8, window=2, negatives=2, epochs=2, seed=4)
    for v in a.table:
        assert np.array_equal(a.table[v], b.table[v])


def test_embedding_norms_bounded():
    center, leaves, g = star_graph()
    walks = generate_walks(g, WalkConfig(walk_length=40, walks_per_vertex=10, seed=2))
    emb = train_node_embeddings(walks, emb_dim=32, seed=0)
    for v in emb.table:
        assert np.linalg.norm(emb.table[v]) <= 100.0


def test_vocab_covers_isolated():
    loner = model_vertex("loner")
    g = fixed_graph([A, C, loner], [(A, C, EdgeKind.SIMILARITY, 1.0)])
    with pytest.warns(UserWarning):
        walks = generate_walks(g, WalkConfig(walk_length=5, walks_per_vertex=2, seed=0))
    emb = train_node_embeddings(walks, emb_dim=4, epochs=1, seed=0, vocab=g.vertices)
    assert loner in emb.table
    assert np.all(np.isfinite(emb.vector(loner)))


def test_empty_corpus_rejected():
    with pytest.raises(DataError):
        train_node_embeddings([], emb_dim=4)


def test_edge_embedding_examples():
    assert np.allclose(edge_embedding(np.array([1.0, 2.0]), np.array([3.0, 4.0])), [3.0, 8.0])
    z = edge_embedding(np.array([5.0, -1.0]), np.zeros(2))
    assert np.allclose(z, 0.0)
    u, v = np.array([1.0, -2.0, 0.5]), np.array([0.3, 4.0, 2.0])
    assert np.array_equal(edge_embedding(u, v), edge_embedding(v, u))
    with pytest.raises(InputError):
        edge_embedding(np.ones(2), np.ones(3))


def test_embeddings_roundtrip(tmp_path):
    table = {A: np.array([1.0, 2.0]), B: np.array([-0.5, 0.25])}
    emb = NodeEmbedding(table=table, emb_dim=2)
    save_embeddings(emb, tmp_path / "emb.json")
    back = load_embeddings(tmp_path / "emb.json")
    assert back.emb_dim == 2
    for v in table:
        assert np.array_equal(back.vector(v), table[v])
