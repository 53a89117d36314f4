"""The matching graph: model and dataset vertices, performance and
similarity edges, and the two mutations the pipeline needs.

Model-dataset (Performance) edges carry post-fine-tuning quality scores;
dataset-dataset (Similarity) edges carry Frechet distances between the
datasets' embedding stats. Both live on the FID scale, lower = closer.
Walk weights use the affinity transform exp(-distance/tau) with tau frozen
at build time to the median edge distance, so later query insertion cannot
re-scale the existing affinities.

Graphs are immutable; mutations return new graphs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, FormatError, InputError
from .frechet import frechet_distance
from .ioutil import read_json, write_json_atomic
from .perf import PerfTable
from .seeds import derive_rng
from .stats import EmbeddingStats

GRAPH_FORMAT_VERSION = 1


class VertexKind(enum.Enum):
    MODEL = "model"
    DATASET = "dataset"


class EdgeKind(enum.Enum):
    PERFORMANCE = "performance"
    SIMILARITY = "similarity"


@dataclass(frozen=True)
class VertexId:
    kind: VertexKind
    name: str

    def __lt__(self, other: "VertexId") -> bool:  # sort by (kind tag, name)
        return (self.kind.value, self.name) < (other.kind.value, other.name)

    def token(self) -> str:
        """Kind-qualified token, unique across both namespaces."""
        return f"{self.kind.value}:{self.name}"

    @staticmethod
    def from_token(token: str) -> "VertexId":
        kind, sep, name = token.partition(":")
        if not sep or not name:
            raise FormatError(f"malformed vertex token {token!r}")
        try:
            return VertexId(VertexKind(kind), name)
        except ValueError:
            raise FormatError(f"unknown vertex kind in token {token!r}") from None


def model_vertex(name: str) -> VertexId:
    return VertexId(VertexKind.MODEL, name)


def dataset_vertex(name: str) -> VertexId:
    return VertexId(VertexKind.DATASET, name)


@dataclass(frozen=True)
class Edge:
    """Undirected edge; endpoints stored in canonical sorted order."""

    u: VertexId
    v: VertexId
    kind: EdgeKind
    distance: float
    affinity: float

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise DataError(f"self-loop at {self.u.token()}")
        if self.v < self.u:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        kinds = {self.u.kind, self.v.kind}
        if self.kind is EdgeKind.PERFORMANCE and kinds != {VertexKind.MODEL, VertexKind.DATASET}:
            raise DataError("performance edges connect exactly one model and one dataset")
        if self.kind is EdgeKind.SIMILARITY and kinds != {VertexKind.DATASET}:
            raise DataError("similarity edges connect two datasets")
        if not (self.distance >= 0.0 and math.isfinite(self.distance)):
            raise DataError(f"edge distance must be finite and >= 0, got {self.distance!r}")
        if not (0.0 < self.affinity <= 1.0):
            raise DataError(f"edge affinity must lie in (0, 1], got {self.affinity!r}")

    def pair(self) -> tuple[VertexId, VertexId]:
        return (self.u, self.v)

    def other(self, x: VertexId) -> VertexId:
        return self.v if x == self.u else self.u


class MatchingGraph:
    """Immutable heterogeneous weighted graph."""

    def __init__(self, vertices, edges, tau: float, probe_id: str):
        verts = tuple(sorted(set(vertices)))
        if len(verts) != len(tuple(vertices)):
            # duplicates collapse silently only if truly identical ids
            pass
        by_pair: dict[tuple[VertexId, VertexId], Edge] = {}
        for e in edges:
            if e.pair() in by_pair:
                raise DataError(f"duplicate edge {e.u.token()} -- {e.v.token()}")
            by_pair[e.pair()] = e
        vert_set = set(verts)
        for e in by_pair.values():
            if e.u not in vert_set or e.v not in vert_set:
                raise DataError(f"edge endpoint missing from vertex set: {e.u.token()} -- {e.v.token()}")
        if not (tau > 0.0 and math.isfinite(tau)):
            raise DataError(f"tau must be finite and > 0, got {tau!r}")
        self.vertices: tuple[VertexId, ...] = verts
        self.edges: tuple[Edge, ...] = tuple(sorted(by_pair.values(), key=lambda e: e.pair()))
        self.tau = float(tau)
        self.probe_id = probe_id
        self._by_pair = by_pair
        self._adj: dict[VertexId, list[Edge]] = {v: [] for v in verts}
        for e in self.edges:
            self._adj[e.u].append(e)
            self._adj[e.v].append(e)

    def incident(self, v: VertexId) -> list[Edge]:
        return self._adj[v]

    def edge_between(self, a: VertexId, b: VertexId) -> Edge | None:
        key = (a, b) if a < b else (b, a)
        return self._by_pair.get(key)

    def edges_of_kind(self, kind: EdgeKind) -> list[Edge]:
        return [e for e in self.edges if e.kind is kind]

    def vertices_of_kind(self, kind: VertexKind) -> list[VertexId]:
        return [v for v in self.vertices if v.kind is kind]

    def affinity(self, distance: float) -> float:
        return math.exp(-distance / self.tau)

    def validate(self) -> None:
        """Structural invariants: edge bipartiteness and affinity coherence."""
        for e in self.edges:
            kinds = {e.u.kind, e.v.kind}
            if kinds == {VertexKind.MODEL}:
                raise DataError("model-model edge present")
            if e.kind is EdgeKind.PERFORMANCE and kinds != {VertexKind.MODEL, VertexKind.DATASET}:
                raise DataError("malformed performance edge")
            if e.kind is EdgeKind.SIMILARITY and kinds != {VertexKind.DATASET}:
                raise DataError("malformed similarity edge")
            if abs(e.affinity - self.affinity(e.distance)) > 1e-12 * (1.0 + e.affinity):
                raise DataError("edge affinity inconsistent with graph tau")


def _median_tau(distances) -> float:
    """Median edge distance; falls back so tau stays positive when the
    median is 0 (all-identical inputs)."""
    import numpy as np

    arr = np.asarray(sorted(distances), dtype=np.float64)
    med = float(np.median(arr))
    if med > 0.0:
        return med
    positive = arr[arr > 0.0]
    if positive.size:
        return float(positive.min())
    return 1.0


def pairwise_frechet(dataset_stats: dict[str, EmbeddingStats]) -> dict[tuple[str, str], float]:
    """Distance for every unordered dataset pair, keyed (a, b) with a < b."""
    ds_ids = sorted(dataset_stats)
    out: dict[tuple[str, str], float] = {}
    for i, a in enumerate(ds_ids):
        for b in ds_ids[i + 1 :]:
            out[(a, b)] = frechet_distance(dataset_stats[a], dataset_stats[b])
    return out


def build_graph(
    perf: PerfTable,
    dataset_stats: dict[str, EmbeddingStats],
    model_ids: list[str],
    similarity: dict[tuple[str, str], float] | None = None,
) -> MatchingGraph:
    """Assemble the full matching graph from a performance table and
    per-dataset embedding stats.

    Similarity edges form a complete clique over the datasets; one
    performance edge per perf entry. tau = median of all edge distances.
    A precomputed `similarity` map (from pairwise_frechet) skips the
    pairwise distance pass; callers reusing fixed stats across many builds
    want this.
    """
    if not perf.scores:
        raise DataError("empty performance table")
    model_set = set(model_ids)
    if len(model_set) != len(model_ids):
        raise DataError("duplicate model ids")
    for (m, d) in perf.scores:
        if m not in model_set:
            raise DataError(f"perf entry references unknown model {m!r}")
        if d not in dataset_stats:
            raise DataError(f"perf entry references unknown dataset {d!r}")

    ds_ids = sorted(dataset_stats)
    probes = {s.probe_id for s in dataset_stats.values()}
    dims = {s.dim for s in dataset_stats.values()}
    if len(probes) > 1:
        raise InputError(f"dataset stats mix probes: {sorted(probes)}")
    if len(dims) > 1:
        raise InputError(f"dataset stats mix dims: {sorted(dims)}")
    probe_id = next(iter(probes)) if probes else ""

    if similarity is None:
        similarity = pairwise_frechet(dataset_stats)
    sim_pairs: list[tuple[VertexId, VertexId, float]] = []
    for i, a in enumerate(ds_ids):
        for b in ds_ids[i + 1 :]:
            sim_pairs.append((dataset_vertex(a), dataset_vertex(b), similarity[(a, b)]))

    perf_entries = sorted(perf.scores.items())
    distances = [d for _, _, d in sim_pairs] + [s for _, s in perf_entries]
    tau = _median_tau(distances)

    edges = [
        Edge(u, v, EdgeKind.SIMILARITY, dist, math.exp(-dist / tau))
        for u, v, dist in sim_pairs
    ]
    edges += [
        Edge(model_vertex(m), dataset_vertex(d), EdgeKind.PERFORMANCE, s, math.exp(-s / tau))
        for (m, d), s in perf_entries
    ]
    vertices = [model_vertex(m) for m in sorted(model_set)] + [dataset_vertex(d) for d in ds_ids]
    return MatchingGraph(vertices, edges, tau, probe_id)


def insert_query_dataset(
    g: MatchingGraph,
    dataset_id: str,
    stats: EmbeddingStats,
    dataset_stats: dict[str, EmbeddingStats],
) -> MatchingGraph:
    """Insert a query dataset: similarity edges to every existing dataset
    vertex, no performance edges, tau unchanged; original graph untouched."""
    new_v = dataset_vertex(dataset_id)
    if new_v in set(g.vertices):
        raise DataError(f"dataset id {dataset_id!r} already present")
    if stats.probe_id != g.probe_id:
        raise InputError(f"probe mismatch: graph {g.probe_id!r}, query {stats.probe_id!r}")
    new_edges = list(g.edges)
    for v in g.vertices_of_kind(VertexKind.DATASET):
        if v.name not in dataset_stats:
            raise DataError(f"missing stats for existing dataset {v.name!r}")
        dist = frechet_distance(dataset_stats[v.name], stats)
        new_edges.append(Edge(new_v, v, EdgeKind.SIMILARITY, dist, g.affinity(dist)))
    return MatchingGraph(list(g.vertices) + [new_v], new_edges, g.tau, g.probe_id)


def drop_performance_edges(g: MatchingGraph, fraction: float, seed: int) -> MatchingGraph:
    """Remove floor(fraction * P) performance edges uniformly without
    replacement under the seed; similarity edges untouched."""
    if not (0.0 <= fraction <= 1.0):
        raise DataError(f"fraction must lie in [0, 1], got {fraction!r}")
    perf_edges = g.edges_of_kind(EdgeKind.PERFORMANCE)
    n_drop = int(fraction * len(perf_edges))
    if n_drop == 0:
        return MatchingGraph(g.vertices, g.edges, g.tau, g.probe_id)
    rng = derive_rng(seed)
    chosen = rng.choice(len(perf_edges), size=n_drop, replace=False)
    dropped = {perf_edges[i].pair() for i in chosen}
    kept = [e for e in g.edges if e.pair() not in dropped]
    return MatchingGraph(g.vertices, kept, g.tau, g.probe_id)


def save_graph(g: MatchingGraph, path: str | Path) -> None:
    doc = {
        "format_version": GRAPH_FORMAT_VERSION,
        "tau": g.tau,
        "probe_id": g.probe_id,
        "vertices": [{"kind": v.kind.value, "name": v.name} for v in g.vertices],
        "edges": [
            {
                "u": {"kind": e.u.kind.value, "name": e.u.name},
                "v": {"kind": e.v.kind.value, "name": e.v.name},
                "kind": e.kind.value,
                "distance": e.distance,
                "affinity": e.affinity,
            }
            for e in g.edges
        ],
    }
    write_json_atomic(path, doc)


def load_graph(path: str | Path) -> MatchingGraph:
    try:
        doc = read_json(path)
    except FileNotFoundError:
        raise FormatError(f"missing graph file {path}") from None
    except ValueError as exc:
        raise FormatError(f"unparsable graph file {path}: {exc}") from exc
    for key in ("format_version", "tau", "probe_id", "vertices", "edges"):
        if key not in doc:
            raise FormatError(f"graph file missing key {key!r}")
    if doc["format_version"] != GRAPH_FORMAT_VERSION:
        raise FormatError(f"unsupported graph format_version {doc['format_version']!r}")

    def vert(obj) -> VertexId:
        try:
            return VertexId(VertexKind(obj["kind"]), obj["name"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad vertex record {obj!r}") from exc

    vertices = [vert(v) for v in doc["vertices"]]
    edges = []
    for rec in doc["edges"]:
        try:
            edges.append(
                Edge(vert(rec["u"]), vert(rec["v"]), EdgeKind(rec["kind"]),
                     float(rec["distance"]), float(rec["affinity"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad edge record {rec!r}") from exc
        except DataError as exc:
            raise FormatError(f"bad edge record {rec!r}: {exc}") from exc
    try:
        return MatchingGraph(vertices, edges, float(doc["tau"]), doc["probe_id"])
    except DataError as exc:
        raise FormatError(f"inconsistent graph file {path}: {exc}") from exc
