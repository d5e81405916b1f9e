import random

from advnet.topology import Edge, Network


def random_dag(seed, n_nodes=None, density=0.45, max_cap=1, n_dests=1):
    """A random acyclic multigraph on nodes v0..v{k-1}; edges only go forward."""
    rnd = random.Random(seed)
    k = n_nodes or rnd.randint(3, 10)
    nodes = [f"v{i}" for i in range(k)]
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            for _ in range(2 if rnd.random() < 0.15 else 1):
                if rnd.random() < density:
                    cap = rnd.randint(1, max_cap)
                    edges.append(Edge(f"e{len(edges)}", nodes[i], nodes[j], cap))
    dests = nodes[-n_dests:]
    return Network(nodes, edges, nodes[0], dests)


def as_triples(net):
    return [(e.tail, e.head, e.capacity) for e in net.edges]
