"""Acyclic multigraph networks, cuts, adversary sets and the capacity reduction.

Networks are immutable. Node and edge order is the declaration order, which
is also the order used whenever a tie must be broken deterministically
(except ``topo_order``, which breaks ties by node id).
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
import heapq
from itertools import combinations
import warnings

from .errors import ConfigurationError, NetworkFormatError, UsageError

__all__ = [
    "Edge",
    "Network",
    "NodeBased",
    "General",
    "topo_order",
    "delete_edges",
    "max_flow",
    "min_cut",
    "internal_nodes",
    "adversary_sets",
    "residual_rate",
    "expand_capacities",
    "covered_cut",
    "max_degree",
    "parse_network",
    "load_network",
    "dump_network",
    "toy_network",
]


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    capacity: int = 1


@dataclass(frozen=True)
class NodeBased:
    """Adversary controlling the outgoing edges of up to ``z`` internal nodes."""

    z: int


@dataclass(frozen=True)
class General:
    """Adversary choosing one of an explicit list of edge-id sets."""

    sets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))


@dataclass(frozen=True)
class Network:
    nodes: tuple
    edges: tuple
    source: str
    destinations: tuple
    adversary: object = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "destinations", tuple(self.destinations))
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigurationError("duplicate node id")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("duplicate edge id")
        known = set(self.nodes)
        if self.source not in known:
            raise ConfigurationError(f"source {self.source!r} is not a node")
        if not self.destinations:
            raise ConfigurationError("network has no destination")
        for t in self.destinations:
            if t not in known:
                raise ConfigurationError(f"destination {t!r} is not a node")
            if t == self.source:
                raise ConfigurationError("the source cannot also be a destination")
        for e in self.edges:
            if e.tail not in known or e.head not in known:
                raise ConfigurationError(f"edge {e.id} references an unknown node")
            if not isinstance(e.capacity, int) or isinstance(e.capacity, bool) or e.capacity < 1:
                raise ConfigurationError(f"edge {e.id} has non-positive or non-integer capacity")
        topo_order(self)
        if self.adversary is not None:
            _check_spec(self, self.adversary)

    @cached_property
    def edge_by_id(self):
        return {e.id: e for e in self.edges}

    @cached_property
    def _out(self):
        out = {v: [] for v in self.nodes}
        for e in self.edges:
            out[e.tail].append(e)
        return {v: tuple(es) for v, es in out.items()}

    @cached_property
    def _in(self):
        inc = {v: [] for v in self.nodes}
        for e in self.edges:
            inc[e.head].append(e)
        return {v: tuple(es) for v, es in inc.items()}

    def out_edges(self, v):
        return self._out[v]

    def in_edges(self, v):
        return self._in[v]

    def with_adversary(self, spec):
        return Network(self.nodes, self.edges, self.source, self.destinations, spec)


def _check_spec(net, spec):
    if isinstance(spec, NodeBased):
        if spec.z < 0:
            raise ConfigurationError("z must be non-negative")
    elif isinstance(spec, General):
        for s in spec.sets:
            missing = sorted(set(s) - set(net.edge_by_id))
            if missing:
                raise ConfigurationError(f"adversary set names unknown edge(s) {missing}")
    else:
        raise ConfigurationError(f"unknown adversary spec {spec!r}")


def _find_back_edge(net):
    color = {v: 0 for v in net.nodes}
    for root in net.nodes:
        if color[root]:
            continue
        stack = [(root, iter(net.out_edges(root)))]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            e = next(it, None)
            if e is None:
                color[v] = 2
                stack.pop()
            elif color[e.head] == 1:
                return e
            elif color[e.head] == 0:
                color[e.head] = 1
                stack.append((e.head, iter(net.out_edges(e.head))))
    return None


def topo_order(net):
    """Nodes in topological order, ties broken by smallest node id."""
    indeg = {v: 0 for v in net.nodes}
    for e in net.edges:
        indeg[e.head] += 1
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for e in net.out_edges(v):
            indeg[e.head] -= 1
            if indeg[e.head] == 0:
                heapq.heappush(heap, e.head)
    if len(order) != len(net.nodes):
        back = _find_back_edge(net)
        err = ConfigurationError(f"cycle detected: back edge {back.id} ({back.tail} -> {back.head})")
        err.edge = back.id
        raise err
    return order


def delete_edges(net, edge_ids):
    """The subgraph with the given edges removed; the node set is unchanged."""
    edge_ids = set(edge_ids)
    unknown = sorted(edge_ids - set(net.edge_by_id))
    if unknown:
        raise UsageError(f"unknown edge id(s) {unknown}")
    kept = tuple(e for e in net.edges if e.id not in edge_ids)
    spec = net.adversary
    if isinstance(spec, General):
        spec = General([s - edge_ids for s in spec.sets])
    return Network(net.nodes, kept, net.source, net.destinations, spec)


def max_flow(net, s, t):
    """Edmonds-Karp max flow from s to t.

    Returns ``(value, source_side)`` where ``source_side`` is the set of
    nodes reachable from s in the final residual graph; the edges leaving it
    form a minimum cut.
    """
    if s == t:
        raise UsageError("min-cut needs two distinct nodes")
    for v in (s, t):
        if v not in net._out:
            raise UsageError(f"unknown node {v!r}")
    edges = net.edges
    flow = [0] * len(edges)
    adj = {v: [] for v in net.nodes}
    for i, e in enumerate(edges):
        adj[e.tail].append((i, 1))
        adj[e.head].append((i, -1))
    total = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            v = queue.popleft()
            for i, d in adj[v]:
                e = edges[i]
                w, room = (e.head, e.capacity - flow[i]) if d == 1 else (e.tail, flow[i])
                if room > 0 and w not in parent:
                    parent[w] = (i, d, v)
                    queue.append(w)
        if t not in parent:
            return total, frozenset(parent)
        path, v = [], t
        while parent[v] is not None:
            i, d, u = parent[v]
            path.append((i, d))
            v = u
        push = min(edges[i].capacity - flow[i] if d == 1 else flow[i] for i, d in path)
        for i, d in path:
            flow[i] += push * d
        total += push


def min_cut(net, s, t):
    """Size (total capacity) of a minimum s-t edge cut; 0 when t is unreachable."""
    return max_flow(net, s, t)[0]


def internal_nodes(net):
    skip = {net.source, *net.destinations}
    return sorted(v for v in net.nodes if v not in skip)


def _node_sets(net, spec):
    inner = internal_nodes(net)
    z = spec.z
    if z > len(inner):
        warnings.warn(f"z={z} exceeds the {len(inner)} internal nodes; clamping", stacklevel=3)
        z = len(inner)
    return [combo for j in range(z + 1) for combo in combinations(inner, j)]


def adversary_choices(net, spec):
    """Pairs ``(controlled_nodes, edge_set)`` in the same order as ``adversary_sets``.

    Controlled nodes are empty for general (edge-set) adversaries.
    """
    if isinstance(spec, NodeBased):
        return [
            (combo, frozenset(e.id for v in combo for e in net.out_edges(v)))
            for combo in _node_sets(net, spec)
        ]
    _check_spec(net, spec)
    return [((), s) for s in spec.sets]


def adversary_sets(net, spec):
    """Every edge set the adversary may attack.

    Node-based specs enumerate subsets of internal nodes by size then id,
    starting with the empty set.
    """
    return [edges for _, edges in adversary_choices(net, spec)]


def residual_rate(net, spec):
    """min over adversary sets A and destinations t of min_cut(source, t) on G minus A."""
    best = None
    for a in adversary_sets(net, spec):
        g = delete_edges(net, a)
        for t in net.destinations:
            c = min_cut(g, net.source, t)
            best = c if best is None else min(best, c)
    return 0 if best is None else best


def expand_capacities(net, spec):
    """Replace each capacity-c edge by c parallel unit edges.

    Replacement ids append primes: ``e2`` with capacity 2 becomes ``e2'``
    and ``e2''``. Unit edges keep their id. Returns the unit-capacity network
    and a General spec over it.
    """
    copies = {}
    edges = []
    for e in net.edges:
        if not isinstance(e.capacity, int) or e.capacity < 1:
            raise UsageError(f"edge {e.id}: capacity must be a positive integer; scale rationals first")
        ids = [e.id] if e.capacity == 1 else [e.id + "'" * k for k in range(1, e.capacity + 1)]
        copies[e.id] = ids
        edges.extend(Edge(i, e.tail, e.head, 1) for i in ids)
    taken = {e.id for e in net.edges}
    clash = [i for e in net.edges if e.capacity > 1 for i in copies[e.id] if i in taken]
    if clash:
        raise UsageError(f"expanded edge id(s) {clash} collide with existing ids")
    sets = adversary_sets(net, spec) if spec is not None else []
    new_spec = General([frozenset(i for eid in s for i in copies[eid]) for s in sets])
    return Network(net.nodes, edges, net.source, net.destinations, new_spec), new_spec


def covered_cut(net, edge_ids, t):
    """A cut separating the source from ``t`` whose cut-set lies inside ``edge_ids``.

    The source side is closed under predecessors, so packets on the cut-set
    depend only on the message. Returns ``(source_side, cut_edge_ids)`` or
    None when no such cut exists.
    """
    blocked = set(edge_ids)
    side = {net.source}
    changed = True
    while changed:
        changed = False
        for e in net.edges:
            if e.tail in side and e.head not in side and e.id not in blocked:
                side.add(e.head)
                changed = True
            elif e.head in side and e.tail not in side:
                side.add(e.tail)
                changed = True
        if t in side:
            return None
    cut = tuple(e.id for e in net.edges if e.tail in side and e.head not in side)
    return frozenset(side), cut


def max_degree(net):
    """Largest in-degree plus out-degree over all nodes."""
    return max(len(net.in_edges(v)) + len(net.out_edges(v)) for v in net.nodes)


# -- text format ---------------------------------------------------------

def parse_network(text):
    """Parse the line-oriented network format.

    ::

        node <id> [source|dest]
        edge <id> <tail> <head> [capacity]
        adversary node-based z=<int>
        adversary set <edge-id> ...
    """
    nodes, roles, edges, edge_lines = [], {}, [], {}
    node_lines = {}
    z, z_line, sets, set_lines = None, None, [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "node":
            if len(tok) not in (2, 3):
                raise NetworkFormatError("expected: node <id> [source|dest]", lineno)
            if tok[1] in node_lines:
                raise NetworkFormatError(f"duplicate node {tok[1]!r}", lineno)
            role = tok[2] if len(tok) == 3 else None
            if role not in (None, "source", "dest"):
                raise NetworkFormatError(f"unknown node role {role!r}", lineno)
            nodes.append(tok[1])
            node_lines[tok[1]] = lineno
            roles[tok[1]] = role
        elif kind == "edge":
            if len(tok) not in (4, 5):
                raise NetworkFormatError("expected: edge <id> <tail> <head> [capacity]", lineno)
            cap = 1
            if len(tok) == 5:
                try:
                    cap = int(tok[4])
                except ValueError:
                    raise NetworkFormatError(
                        f"capacity {tok[4]!r} is not an integer; scale rational capacities first", lineno
                    ) from None
                if cap < 1:
                    raise NetworkFormatError("capacity must be positive", lineno)
            if tok[1] in edge_lines:
                raise NetworkFormatError(f"duplicate edge {tok[1]!r}", lineno)
            edges.append(Edge(tok[1], tok[2], tok[3], cap))
            edge_lines[tok[1]] = lineno
        elif kind == "adversary":
            if len(tok) == 3 and tok[1] == "node-based" and tok[2].startswith("z="):
                if z is not None or sets:
                    raise NetworkFormatError("conflicting adversary declarations", lineno)
                try:
                    z = int(tok[2][2:])
                except ValueError:
                    raise NetworkFormatError(f"bad z value {tok[2]!r}", lineno) from None
                if z < 0:
                    raise NetworkFormatError("z must be non-negative", lineno)
                z_line = lineno
            elif len(tok) >= 2 and tok[1] == "set":
                if z is not None:
                    raise NetworkFormatError("conflicting adversary declarations", lineno)
                sets.append(frozenset(tok[2:]))
                set_lines.append(lineno)
            else:
                raise NetworkFormatError("expected: adversary node-based z=<int> | adversary set <ids>", lineno)
        else:
            raise NetworkFormatError(f"unknown directive {kind!r}", lineno)

    for e in edges:
        for v in (e.tail, e.head):
            if v not in node_lines:
                raise NetworkFormatError(f"edge {e.id} references undeclared node {v!r}", edge_lines[e.id])
    sources = [v for v in nodes if roles[v] == "source"]
    dests = [v for v in nodes if roles[v] == "dest"]
    if len(sources) != 1:
        where = node_lines[sources[1]] if len(sources) > 1 else None
        raise NetworkFormatError(f"expected exactly one source node, found {len(sources)}", where)
    if not dests:
        raise NetworkFormatError("no destination node declared")
    for s, ln in zip(sets, set_lines):
        missing = sorted(s - set(edge_lines))
        if missing:
            raise NetworkFormatError(f"adversary set references unknown edge(s) {missing}", ln)
    spec = NodeBased(z) if z is not None else (General(sets) if sets else None)
    try:
        return Network(nodes, edges, sources[0], dests, spec)
    except ConfigurationError as exc:
        edge = getattr(exc, "edge", None)
        raise NetworkFormatError(str(exc), edge_lines.get(edge, z_line)) from None


def load_network(path):
    with open(path) as fh:
        return parse_network(fh.read())


def dump_network(net):
    lines = []
    for v in net.nodes:
        role = " source" if v == net.source else (" dest" if v in net.destinations else "")
        lines.append(f"node {v}{role}")
    for e in net.edges:
        cap = f" {e.capacity}" if e.capacity != 1 else ""
        lines.append(f"edge {e.id} {e.tail} {e.head}{cap}")
    spec = net.adversary
    if isinstance(spec, NodeBased):
        lines.append(f"adversary node-based z={spec.z}")
    elif isinstance(spec, General):
        for s in spec.sets:
            lines.append("adversary set " + " ".join(sorted(s)))
    return "\n".join(lines) + "\n"


TOY_TEXT = """\
# Four-node relay network: three disjoint source paths, node a also feeds c.
node v0 source
node a
node b
node c
node t dest
edge e1 v0 a
edge e2 v0 b
edge e3 v0 c
edge e4 a t
edge e5 a c
edge e6 b t
edge e7 c t
"""


def toy_network(z=None):
    """The canonical five-node example network, optionally with a node-based adversary."""
    net = parse_network(TOY_TEXT)
    return net if z is None else net.with_adversary(NodeBased(z))
