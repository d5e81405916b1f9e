"""
Picking n and m for a target rate loss
======================================

"""
# %%
from advnet import toy_network, theorem1_params
from advnet.harness import achieved_rate, erasure_bound

net = toy_network(1)

# %% Smaller eps needs longer packets; m = 2n throughout
for eps in (1.0, 0.5, 0.1, 0.01):
    n, m, params, bits = theorem1_params(net, net.adversary, eps)
    print(f"eps={eps:<5} n={n:<5} m={m:<5} rate={achieved_rate(params)[0]:.4f}  block={bits} bits")

# %% No scheme beats the cut that survives the worst adversary set
for a in ({"e4", "e5"}, {"e6"}, {"e7"}):
    print(sorted(a), erasure_bound(net, a, n_bits=10**6, pe=0.0))
