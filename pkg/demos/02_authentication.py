"""
Checking packets with a shared secret
=====================================

"""
# %%
import numpy as np

from advnet import Packet, derive_params, toy_network
from advnet.secretcode import emit_linear_combination, sample_secrets, source_packets, verify_packet

net = toy_network(1)
params = derive_params(net, net.adversary, n=16, m=32)
f = params.field
rng = np.random.default_rng(1)
print("r =", params.r, " hash symbols per packet =", params.delta)

# %% The source builds r packets; each node has its own secret bundle
secrets = sample_secrets(rng, params)
message = f.random(rng, params.n * params.r)
originals = source_packets(message, secrets, params)

# %% Any linear combination passes every node's check
mixed = emit_linear_combination(rng, originals, params)
print([verify_packet(mixed, secrets[v], k, params) for k, v in enumerate(params.node_order)])

# %% Change one payload symbol and the check at b fails
w = mixed.w.copy()
w[0] ^= 1
forged = Packet(w, mixed.h)
k = params.index("b")
print("forged packet at b:", verify_packet(forged, secrets["b"], k, params))

# %% Over many forgeries the acceptance rate stays far below 2^(n-m)
hits = 0
for _ in range(2000):
    w = mixed.w.copy()
    w[: params.n] = f.random(rng, params.n)
    hits += verify_packet(Packet(w, mixed.h), secrets["b"], k, params)
print(hits, "of 2000 accepted")
