"""Condensation of the transition graph: Morse graph, attractors, ROA.

The recurrent behavior of F is captured by its strongly connected components:
a component is recurrent when the dynamics can cycle inside it indefinitely
(more than one cell, or a single cell with a self-edge). Recurrent components
become the nodes of the Morse graph; an edge joins two of them when F has a
path from the first to the second. The result is a DAG whose leaves are the
attractors.

The region of attraction of an attractor is the set of cells with a path in F
into it. Cells reaching exactly one attractor are assigned to it; cells
reaching several are reported as ambiguous rather than multiply assigned, and
cells reaching none (all flow exits the valid set) as unreachable.

The SCC pass is an iterative Tarjan, so deep graphs cannot overflow the
recursion stack.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .transition import TransitionGraph

LABEL_UNLABELED = "unlabeled"
LABEL_SUCCESS = "success"
LABEL_FAILURE = "failure"

ROA_UNREACHABLE = -1
ROA_AMBIGUOUS = -2


class InvariantViolation(AssertionError):
    """A structural invariant of the Morse graph or ROA failed."""


def strongly_connected_components(graph: TransitionGraph) -> list[np.ndarray]:
    """Tarjan's SCC over the CSR graph, iterative.

    Returns the partition as arrays of node positions (each sorted), in the
    emission order of Tarjan's algorithm, which is a reverse topological
    order of the condensation: every component precedes the components that
    can reach it.
    """
    n = graph.n_nodes
    indptr = graph.indptr
    targets = graph.targets

    index = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=bool)
    comp_stack: list[int] = []
    components: list[np.ndarray] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, int(indptr[root]))]
        index[root] = low[root] = counter
        counter += 1
        comp_stack.append(root)
        on_stack[root] = True

        while work:
            v, edge_pos = work[-1]
            if edge_pos < indptr[v + 1]:
                work[-1] = (v, edge_pos + 1)
                w = int(targets[edge_pos])
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    comp_stack.append(w)
                    on_stack[w] = True
                    work.append((w, int(indptr[w])))
                elif on_stack[w]:
                    if index[w] < low[v]:
                        low[v] = index[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                if low[v] == index[v]:
                    members: list[int] = []
                    while True:
                        w = comp_stack.pop()
                        on_stack[w] = False
                        members.append(w)
                        if w == v:
                            break
                    members.sort()
                    components.append(np.asarray(members, dtype=np.int64))
    return components


def recurrent_components(
    graph: TransitionGraph, sccs: list[np.ndarray]
) -> list[int]:
    """Indices (into ``sccs``) of the recurrent components.

    A component is recurrent when it has at least two cells or its single
    cell carries a self-edge in F.
    """
    out: list[int] = []
    for k, comp in enumerate(sccs):
        if comp.size > 1:
            out.append(k)
        else:
            v = int(comp[0])
            if np.any(graph.successors(v) == v):
                out.append(k)
    return out


@dataclass(frozen=True, eq=False)
class MorseNode:
    """One recurrent component of F, as a node of the Morse graph."""

    id: int
    cells: np.ndarray  # sorted flat cell ids
    positions: np.ndarray  # the same cells as positions into graph.node_ids
    is_attractor: bool
    label: str = LABEL_UNLABELED


@dataclass(frozen=True, eq=False)
class MorseGraph:
    """DAG of recurrent components; leaves are the attractors.

    Node ids run in topological order (every edge goes from a lower id to a
    higher id), and an edge a -> b means F has a path from a cell of a to a
    cell of b.
    """

    nodes: tuple[MorseNode, ...]
    edges: dict[int, tuple[int, ...]]

    def __post_init__(self) -> None:
        for a, targets in self.edges.items():
            for b in targets:
                if not a < b:
                    raise InvariantViolation(
                        f"Morse edge {a} -> {b} breaks topological id order"
                    )

    def __len__(self) -> int:
        return len(self.nodes)

    def attractors(self) -> tuple[MorseNode, ...]:
        return tuple(n for n in self.nodes if n.is_attractor)

    def node(self, node_id: int) -> MorseNode:
        return self.nodes[node_id]

    def with_labels(self, labels: dict[int, str]) -> "MorseGraph":
        """Copy of the graph with node labels replaced where given."""
        nodes = tuple(
            replace(n, label=labels.get(n.id, n.label)) for n in self.nodes
        )
        return MorseGraph(nodes=nodes, edges=self.edges)


def build_morse_graph(graph: TransitionGraph) -> MorseGraph:
    """Condense F into its Morse graph.

    Non-recurrent components are contracted into pass-through reachability:
    two recurrent components are joined by an edge whenever any F-path
    connects them, regardless of how many transient components it crosses.
    """
    sccs = strongly_connected_components(graph)
    n_comps = len(sccs)
    comp_of = np.empty(graph.n_nodes, dtype=np.int64)
    for k, comp in enumerate(sccs):
        comp_of[comp] = k

    recurrent = recurrent_components(graph, sccs)
    is_recurrent = np.zeros(n_comps, dtype=bool)
    is_recurrent[recurrent] = True

    # Morse ids in topological order = reversed Tarjan emission order.
    morse_id_of_comp: dict[int, int] = {}
    ordered_recurrent = [k for k in reversed(range(n_comps)) if is_recurrent[k]]
    for mid, k in enumerate(ordered_recurrent):
        morse_id_of_comp[k] = mid

    # Condensation successors per component.
    succ: list[set[int]] = [set() for _ in range(n_comps)]
    for v in range(graph.n_nodes):
        cv = comp_of[v]
        for w in graph.successors(v):
            cw = comp_of[int(w)]
            if cw != cv:
                succ[cv].add(int(cw))

    # Which Morse nodes are reachable from each component. Components are
    # processed in emission order, so successors are always already done.
    reach = [0] * n_comps
    for k in range(n_comps):
        mask = 0
        for s in succ[k]:
            mask |= reach[s]
            if is_recurrent[s]:
                mask |= 1 << morse_id_of_comp[s]
        reach[k] = mask

    nodes: list[MorseNode] = []
    edges: dict[int, tuple[int, ...]] = {}
    for k in ordered_recurrent:
        mid = morse_id_of_comp[k]
        positions = sccs[k]
        cells = graph.node_ids[positions]
        downstream = tuple(
            sorted(mid2 for mid2 in _bits(reach[k]))
        )
        edges[mid] = downstream
        nodes.append(
            MorseNode(
                id=mid,
                cells=np.sort(cells),
                positions=positions,
                is_attractor=(reach[k] == 0),
                label=LABEL_UNLABELED,
            )
        )
    return MorseGraph(nodes=tuple(nodes), edges=edges)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True, eq=False)
class RoaAssignment:
    """Per-cell attractor assignment over the valid cells.

    ``codes`` aligns with ``node_ids``: a Morse node id where the cell reaches
    exactly one attractor, ROA_AMBIGUOUS where it reaches several, and
    ROA_UNREACHABLE where it reaches none.
    """

    node_ids: np.ndarray
    codes: np.ndarray
    attractor_ids: tuple[int, ...]

    def code_of_flat(self, flat_id: int) -> int:
        pos = int(np.searchsorted(self.node_ids, flat_id))
        if pos >= self.node_ids.size or self.node_ids[pos] != flat_id:
            raise KeyError(f"cell {flat_id} is not a valid cell")
        return int(self.codes[pos])

    def counts(self) -> dict[str, int]:
        out = {
            "ambiguous": int(np.sum(self.codes == ROA_AMBIGUOUS)),
            "unreachable": int(np.sum(self.codes == ROA_UNREACHABLE)),
        }
        for a in self.attractor_ids:
            out[f"attractor:{a}"] = int(np.sum(self.codes == a))
        return out


def regions_of_attraction(graph: TransitionGraph, mg: MorseGraph) -> RoaAssignment:
    """Assign every valid cell to the attractor set it can reach in F."""
    attractors = mg.attractors()
    n = graph.n_nodes
    if not attractors:
        return RoaAssignment(
            node_ids=graph.node_ids,
            codes=np.full(n, ROA_UNREACHABLE, dtype=np.int64),
            attractor_ids=(),
        )

    rindptr, rsources = graph.reverse_csr()
    reach = np.zeros((n, len(attractors)), dtype=bool)
    for k, node in enumerate(attractors):
        seen = np.zeros(n, dtype=bool)
        frontier = list(node.positions)
        seen[node.positions] = True
        while frontier:
            nxt: list[int] = []
            for v in frontier:
                for u in rsources[rindptr[v] : rindptr[v + 1]]:
                    if not seen[u]:
                        seen[u] = True
                        nxt.append(int(u))
            frontier = nxt
        reach[:, k] = seen

    hits = reach.sum(axis=1)
    codes = np.full(n, ROA_UNREACHABLE, dtype=np.int64)
    codes[hits >= 2] = ROA_AMBIGUOUS
    single = hits == 1
    att_ids = np.array([a.id for a in attractors], dtype=np.int64)
    codes[single] = att_ids[np.argmax(reach[single], axis=1)]
    return RoaAssignment(
        node_ids=graph.node_ids,
        codes=codes,
        attractor_ids=tuple(int(a.id) for a in attractors),
    )


def validate_build(graph: TransitionGraph, mg: MorseGraph, roa: RoaAssignment) -> None:
    """Structural invariants checked on every build; raises on violation.

    - the Morse graph admits a topological order (ids ascending by
      construction, re-verified here),
    - Morse node cell sets are pairwise disjoint subsets of the valid cells,
    - the ROA covers every valid cell exactly once, and the cells of each
      attractor's own component are assigned to that attractor.
    """
    seen_cells: set[int] = set()
    valid = set(int(i) for i in graph.node_ids)
    for node in mg.nodes:
        cells = set(int(c) for c in node.cells)
        if cells & seen_cells:
            raise InvariantViolation(f"Morse node {node.id} overlaps another node")
        if not cells <= valid:
            raise InvariantViolation(f"Morse node {node.id} leaves the valid set")
        seen_cells |= cells
    for a, targets in mg.edges.items():
        for b in targets:
            if a >= b:
                raise InvariantViolation("Morse graph edge violates topological order")

    if roa.codes.shape != graph.node_ids.shape:
        raise InvariantViolation("ROA does not cover the valid cells exactly")
    legal = set(roa.attractor_ids) | {ROA_AMBIGUOUS, ROA_UNREACHABLE}
    if not set(int(c) for c in np.unique(roa.codes)) <= legal:
        raise InvariantViolation("ROA contains an unknown assignment code")
    for node in mg.attractors():
        if not np.all(roa.codes[node.positions] == node.id):
            raise InvariantViolation(
                f"cells of attractor {node.id} not assigned to it"
            )
