"""
Cuts on the four-node example
=============================

"""
# %%
from advnet.topology import NodeBased, adversary_sets, delete_edges, toy_network, min_cut, residual_rate

net = toy_network(1)
for e in net.edges:
    print(e.id, e.tail, "->", e.head)

# %% Three edge-disjoint paths reach t
print("min-cut(v0, t) =", min_cut(net, "v0", "t"))

# %% Each internal node can be silenced; two paths always survive
for v in ("a", "b", "c"):
    g = delete_edges(net, [e.id for e in net.out_edges(v)])
    print(f"without {v}: min-cut =", min_cut(g, "v0", "t"))

# %% The adversary sets for one compromised node, and the resulting rate
print(adversary_sets(net, NodeBased(1)))
print("rate r =", residual_rate(net, NodeBased(1)))
