"""Network topology: communication graph and statistical dependency graph.

Two undirected graphs live on the same node set.  The communication graph
defines which estimates a node can read (spatial neighborhoods N_i, taken
self-inclusive so that uniform averaging weights are well defined).  The
dependency graph encodes the Markov structure of the measurement noise
(neighborhoods M_i); it must be a subgraph of the communication graph and,
for the closed-form precision construction, acyclic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidEdge, InvalidParameter, SubgraphViolation


def _normalize_edges(edges, n_nodes, label):
    """Validate and canonicalize an undirected edge list to sorted tuples."""
    out = set()
    for e in edges:
        i, j = int(e[0]), int(e[1])
        if i == j:
            raise InvalidEdge(f"{label} edge ({i},{j}) is a self-loop")
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise InvalidEdge(f"{label} edge ({i},{j}) out of range for {n_nodes} nodes")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


@dataclass(frozen=True)
class NetworkTopology:
    """Immutable pair of graphs over ``n_nodes`` nodes with planar positions.

    Attributes
    ----------
    n_nodes : int
        Number of nodes N.
    positions : ndarray, shape (N, 2)
        Node coordinates in the plane (unitless).
    comm_edges : frozenset of (i, j) with i < j
        Communication links.
    dep_edges : frozenset of (i, j) with i < j
        Statistical dependency links; always a subset of ``comm_edges``.
    """

    n_nodes: int
    positions: np.ndarray
    comm_edges: frozenset
    dep_edges: frozenset
    _comm_adj: tuple = field(repr=False, default=())
    _dep_adj: tuple = field(repr=False, default=())

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (self.n_nodes, 2):
            raise InvalidEdge(
                f"positions shape {pos.shape} does not match ({self.n_nodes}, 2)"
            )
        object.__setattr__(self, "positions", pos)
        comm = _normalize_edges(self.comm_edges, self.n_nodes, "communication")
        dep = _normalize_edges(self.dep_edges, self.n_nodes, "dependency")
        missing = dep - comm
        if missing:
            raise SubgraphViolation(
                f"dependency edges {sorted(missing)} lack communication links"
            )
        object.__setattr__(self, "comm_edges", comm)
        object.__setattr__(self, "dep_edges", dep)
        object.__setattr__(self, "_comm_adj", _adjacency_sets(comm, self.n_nodes))
        object.__setattr__(self, "_dep_adj", _adjacency_sets(dep, self.n_nodes))

    def distance(self, i, j):
        """Euclidean distance d_ij between node positions."""
        return float(np.linalg.norm(self.positions[i] - self.positions[j]))

    def distance_matrix(self):
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))


def _adjacency_sets(edges, n_nodes):
    adj = [set() for _ in range(n_nodes)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    return tuple(frozenset(s) for s in adj)


def build_topology(positions, comm_edges, dep_edges) -> NetworkTopology:
    """Validate inputs and return an immutable topology.

    Raises
    ------
    InvalidEdge
        On self-loops or out-of-range endpoints.
    SubgraphViolation
        If a dependency edge is not also a communication edge.
    """
    positions = np.asarray(positions, dtype=float)
    return NetworkTopology(
        n_nodes=positions.shape[0],
        positions=positions,
        comm_edges=frozenset(tuple(e) for e in comm_edges),
        dep_edges=frozenset(tuple(e) for e in dep_edges),
    )


def spatial_neighborhood(topology: NetworkTopology, i: int):
    """Self-inclusive communication neighborhood N_i = {i} + adjacent nodes."""
    return frozenset({i}) | topology._comm_adj[i]


def markov_neighborhood(topology: NetworkTopology, i: int):
    """Dependency neighborhood M_i = {j != i : {i,j} in dep_edges}."""
    return topology._dep_adj[i]


def oriented_markov_neighborhood(topology: NetworkTopology, i: int):
    """Oriented set A_i = {j in M_i : j > i}; each dep edge appears once over all i."""
    return frozenset(j for j in topology._dep_adj[i] if j > i)


def is_connected(topology: NetworkTopology) -> bool:
    """True iff the communication graph is connected (BFS from node 0)."""
    n = topology.n_nodes
    if n == 0:
        return True
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in topology._comm_adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def is_acyclic_dependency(topology: NetworkTopology) -> bool:
    """True iff the dependency edges form a forest (union-find cycle check)."""
    parent = list(range(topology.n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in topology.dep_edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def random_topology(n_nodes, rng, comm_radius=None, side=1.0):
    """Random geometric communication graph plus a random spanning-tree dependency graph.

    Nodes are placed uniformly in a square of the given ``side``; communication
    edges join pairs closer than ``comm_radius`` (default scales as
    side * (sqrt(2 log N / N) + 0.15) so the graph is connected with high
    probability, and connectivity is forced by joining any leftover component
    through its closest cross pair).  The dependency graph is a uniform random
    spanning tree of the communication graph, so the subgraph and acyclicity
    requirements hold by construction.  The side sets the physical distance
    scale and hence how fast noise correlation decays across links.

    Parameters
    ----------
    n_nodes : int
    rng : numpy.random.Generator
    comm_radius : float, optional
    side : float, default 1.0

    Returns
    -------
    NetworkTopology
    """
    if side <= 0:
        raise InvalidParameter("side must be positive")
    pos = side * rng.random((n_nodes, 2))
    if comm_radius is None:
        comm_radius = side * (
            np.sqrt(2.0 * np.log(max(n_nodes, 2)) / max(n_nodes, 2)) + 0.15)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    comm = {
        (i, j)
        for i in range(n_nodes)
        for j in range(i + 1, n_nodes)
        if dist[i, j] <= comm_radius
    }

    # force connectivity: repeatedly join the two closest nodes across components
    def components(edge_set):
        parent = list(range(n_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in edge_set:
            parent[find(i)] = find(j)
        return [find(i) for i in range(n_nodes)]

    roots = components(comm)
    while len(set(roots)) > 1:
        best = None
        for i in range(n_nodes):
            for j in range(i + 1, n_nodes):
                if roots[i] != roots[j] and (best is None or dist[i, j] < dist[best]):
                    best = (i, j)
        comm.add(best)
        roots = components(comm)

    # uniform random spanning tree of the comm graph (random-weight MST)
    weights = {e: rng.random() for e in comm}
    order = sorted(comm, key=weights.get)
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    dep = set()
    for i, j in order:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            dep.add((i, j))
    return build_topology(pos, comm, dep)
