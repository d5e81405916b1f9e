"""
Decoding under attack
=====================

Every strategy against every single compromised node, a few hundred trials each.
"""
# %%
from advnet import STRATEGIES, toy_network, run_experiment

net = toy_network(1)
report = run_experiment(net, net.adversary, list(STRATEGIES.values()), n=8, m=16, trials=300, seed=7)
print(report.to_text())

# %% With hash headers switched off a forged payload goes straight through
from advnet.adversary import ForgeValidHeader

plain = run_experiment(net, net.adversary, [ForgeValidHeader("payload")], n=8, m=16, trials=300,
                       seed=7, secrets=False)
for row in plain.rows:
    print(f"{row.adversary_set:>3}  error rate {row.empirical_pe:.3f}")
