"""
node embeddings of small automorphic graphs and pairwise-distance decoders

Equivariant embeddings are constant on automorphism orbits of nodes, so no decoder
that only sees distances between node embeddings can reconstruct a vertex-transitive
graph. Appending a SymPE encoding g v, with g sampled by sorting node scores, breaks
the tie.
"""

import itertools
import logging

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from .canon import sort_canonicalize
from .groups import FiniteGroup, PermutationAction, Subgroup
from .sympe import MAX_REDRAWS, SymPEVector

MAX_NODES = 8

# pairwise distances within this tolerance share a decoder output
DIST_TOL = 1.0e-9

# weights combining embedding columns into a sort score, exact on integer columns
SCORE_WEIGHTS = (1.0, 2.0 ** -6, 2.0 ** -12)


class SmallGraph:
    """simple undirected graph on at most MAX_NODES nodes, as a 0/1 adjacency matrix"""

    def __init__(self, adjacency, name=None):
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            msg = "adjacency must be square, shape=%s" % (adjacency.shape,)
            raise ValueError(msg)
        if adjacency.shape[0] > MAX_NODES:
            msg = "graph has %d nodes, more than %d" % (adjacency.shape[0], MAX_NODES)
            raise ValueError(msg)
        if not np.all((adjacency == 0) | (adjacency == 1)):
            msg = "adjacency entries must be 0 or 1"
            raise ValueError(msg)
        if not np.array_equal(adjacency, adjacency.T):
            msg = "adjacency must be symmetric"
            raise ValueError(msg)
        if np.any(np.diag(adjacency) != 0):
            msg = "adjacency must have zero diagonal"
            raise ValueError(msg)
        self.adjacency = adjacency.astype(np.int64)
        self.adjacency.setflags(write=False)
        self.name = name

    @property
    def n(self):
        """number of nodes"""
        return self.adjacency.shape[0]

    @property
    def edge_cnt(self):
        """number of edges"""
        return int(self.adjacency.sum()) // 2

    def permuted(self, perm):
        """graph g A g^T, node i relabeled perm[i]"""
        perm = np.asarray(perm)
        res = np.empty_like(self.adjacency)
        res[perm[:, None], perm[None, :]] = self.adjacency
        return SmallGraph(res)

    def to_networkx(self):
        """networkx.Graph with nodes 0..n-1"""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        rows, cols = np.nonzero(np.triu(self.adjacency))
        graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
        return graph

    def __eq__(self, other):
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())

    def __repr__(self):
        return "SmallGraph(name=%s, n=%d, edges=%d)" % (
            self.name,
            self.n,
            self.edge_cnt,
        )


def graph_from_networkx(graph, name=None):
    """SmallGraph of a networkx graph, nodes taken in sorted order"""
    nodelist = sorted(graph.nodes)
    adjacency = nx.to_numpy_array(graph, nodelist=nodelist, dtype=np.int64)
    return SmallGraph(adjacency, name=name)


NAMED_GRAPHS = ("C4", "C6", "P3", "K4", "K4-M")


def named_graph(name):
    """
    small fixture graphs

    C4, C6: cycles; P3: path on 3 nodes; K4: complete graph; K4-M: K4 minus a
    perfect matching
    """
    if name == "C4":
        graph = nx.cycle_graph(4)
    elif name == "C6":
        graph = nx.cycle_graph(6)
    elif name == "P3":
        graph = nx.path_graph(3)
    elif name == "K4":
        graph = nx.complete_graph(4)
    elif name == "K4-M":
        graph = nx.complete_graph(4)
        graph.remove_edges_from([(0, 1), (2, 3)])
    else:
        msg = "unknown graph name %s, expected one of %s" % (name, NAMED_GRAPHS)
        raise ValueError(msg)
    return graph_from_networkx(graph, name=name)


def erdos_renyi(n, p, rng):
    """G(n, p) graph with independent edges drawn from rng"""
    if n < 1 or n > MAX_NODES:
        msg = "node count n=%d must be in [1, %d]" % (n, MAX_NODES)
        raise ValueError(msg)
    if not 0.0 <= p <= 1.0:
        msg = "edge probability p=%r must be in [0, 1]" % p
        raise ValueError(msg)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return SmallGraph((upper | upper.T).astype(np.int64))


################################################################################
# automorphisms


def automorphism_perms(graph, method="vf2"):
    """
    all permutations g with g A g^T = A, as rows sorted lexicographically

    method "vf2" self-matches with networkx GraphMatcher, "exhaustive" checks all n!
    permutations
    """
    if method == "vf2":
        nx_graph = graph.to_networkx()
        mappings = GraphMatcher(nx_graph, nx_graph).isomorphisms_iter()
        perms = np.array(
            [[mapping[node] for node in range(graph.n)] for mapping in mappings],
            dtype=np.int64,
        )
    elif method == "exhaustive":
        candidates = np.array(list(itertools.permutations(range(graph.n))))
        adjacency = graph.adjacency
        moved = adjacency[candidates[:, :, None], candidates[:, None, :]]
        perms = candidates[np.all(moved == adjacency, axis=(1, 2))]
    else:
        msg = "unknown automorphism method %s" % method
        raise ValueError(msg)
    return perms[np.lexsort(perms.T[::-1])]


def automorphism_group(graph, method="vf2"):
    """PermutationAction of Aut(A) on node-indexed vectors, identity first"""
    perms = automorphism_perms(graph, method)
    labels = [tuple(int(val) for val in perm) for perm in perms]
    group = FiniteGroup.from_permutations("Aut(%s)" % graph.name, perms, labels)
    return PermutationAction(group, perms)


def automorphism_subgroup(graph, sym_action, method="vf2"):
    """Aut(A) as a Subgroup of S_n given by sym_action from make_symmetric(n)"""
    perms = automorphism_perms(graph, method)
    members = [sym_action.elem_of_perm(perm) for perm in perms]
    return Subgroup(sym_action.group, members)


def adjacency_action(sym_action):
    """action of S_n on n×n adjacency matrices by A -> g A g^T"""
    side = sym_action.site_cnt
    pair_perms = sym_action.perms[:, :, None] * side + sym_action.perms[:, None, :]
    return PermutationAction(
        sym_action.group, pair_perms.reshape(len(pair_perms), -1), (side, side)
    )


def node_orbits(graph, perms=None):
    """automorphism orbits of nodes, each a sorted tuple, sorted by first node"""
    if perms is None:
        perms = automorphism_perms(graph)
    return sorted(
        set(tuple(sorted(set(perms[:, node].tolist()))) for node in range(graph.n))
    )


################################################################################
# embeddings and decoders


def equivariant_embed(graph, rounds=2):
    """
    columns degree, A degree, ..., A^rounds degree

    integer valued, so relabeling nodes permutes rows bit-exactly
    """
    if rounds < 0:
        msg = "message passing rounds=%d must be >= 0" % rounds
        raise ValueError(msg)
    adjacency = graph.adjacency
    cols = [adjacency.sum(axis=1)]
    for _ in range(rounds):
        cols.append(adjacency @ cols[-1])
    return np.column_stack(cols).astype(np.float64)


def node_scores(graph):
    """scalar node scores combining the columns of equivariant_embed"""
    return equivariant_embed(graph, rounds=2) @ np.array(SCORE_WEIGHTS)


def _pair_distances(embedding):
    """pairs i < j and Euclidean distances between rows i and j"""
    embedding = np.asarray(embedding, dtype=np.float64)
    if not np.all(np.isfinite(embedding)):
        msg = "node embedding has non-finite entries"
        raise ValueError(msg)
    rows, cols = np.triu_indices(embedding.shape[0], k=1)
    dists = np.linalg.norm(embedding[rows] - embedding[cols], axis=1)
    return rows, cols, dists


def distance_decoder_best_error(graph, embedding):
    """
    smallest fraction of misclassified node pairs over decoders of ||z_i - z_j||

    pairs whose distances chain within DIST_TOL share a decoder output, which is
    best set to the majority label of the group
    """
    embedding = np.asarray(embedding)
    if embedding.shape[0] != graph.n:
        msg = "embedding has %d rows for %d nodes" % (embedding.shape[0], graph.n)
        raise ValueError(msg)
    pair_cnt = graph.n * (graph.n - 1) // 2
    if pair_cnt == 0:
        return 0.0
    rows, cols, dists = _pair_distances(embedding)
    labels = graph.adjacency[rows, cols]
    order = np.argsort(dists, kind="stable")
    dists, labels = dists[order], labels[order]
    group_starts = np.concatenate([[True], np.diff(dists) > DIST_TOL])
    group_ids = np.cumsum(group_starts) - 1
    edge_cnts = np.bincount(group_ids, weights=labels)
    pair_cnts = np.bincount(group_ids)
    errors = np.minimum(edge_cnts, pair_cnts - edge_cnts).sum()
    return float(errors) / pair_cnt


def node_breaking_vector(n, rng):
    """
    SymPEVector with Unif(0,1) entries for S_n acting on nodes

    S_n acts freely iff the entries are distinct
    """
    for redraws in range(MAX_REDRAWS + 1):
        v = rng.random(n)
        if len(np.unique(v)) == n:
            return SymPEVector(v, "permutation", redraws=redraws)
    msg = "no breaking vector with distinct entries after %d redraws" % MAX_REDRAWS
    raise RuntimeError(msg)


def sympe_embed(graph, v, rng):
    """
    equivariant_embed with the column g v appended

    g is sampled by sorting node_scores with uniformly random tie breaking; node
    holding the j-th smallest score receives v[j]
    """
    vals = v.v if isinstance(v, SymPEVector) else np.asarray(v)
    if vals.shape != (graph.n,):
        msg = "breaking vector shape %s != (%d,)" % (vals.shape, graph.n)
        raise ValueError(msg)
    result = sort_canonicalize(node_scores(graph), rng)
    encoding = np.empty(graph.n)
    encoding[result.tau] = vals
    return np.column_stack([equivariant_embed(graph), encoding])


def graph_record(graph, v, rng, label):
    """report record comparing equivariant and SymPE embeddings of one graph"""
    return {
        "graph": label,
        "n": graph.n,
        "edges": graph.edge_cnt,
        "aut_order": len(automorphism_perms(graph)),
        "err_equivariant": distance_decoder_best_error(graph, equivariant_embed(graph)),
        "err_sympe": distance_decoder_best_error(graph, sympe_embed(graph, v, rng)),
    }


def graph_demo(n, p, count, rng):
    """records for count sampled G(n, p) graphs, each with its own breaking vector"""
    logger = logging.getLogger(__name__)

    records = []
    for ind in range(count):
        graph = erdos_renyi(n, p, rng)
        v = node_breaking_vector(n, rng)
        records.append(graph_record(graph, v, rng, "er-%d" % ind))
        logger.debug("graph %d: %s", ind, records[-1])
    return records


def summarize(records):
    """mean errors over records, None when there are no records"""
    if len(records) == 0:
        return {
            "count": 0,
            "mean_err_equivariant": None,
            "mean_err_sympe": None,
            "automorphic_fraction": None,
        }
    return {
        "count": len(records),
        "mean_err_equivariant": float(
            np.mean([record["err_equivariant"] for record in records])
        ),
        "mean_err_sympe": float(np.mean([record["err_sympe"] for record in records])),
        "automorphic_fraction": float(
            np.mean([record["aut_order"] > 1 for record in records])
        ),
    }
