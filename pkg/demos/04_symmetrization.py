"""
Two attacks the decoder cannot tell apart
=========================================

"""
# %%
from pathlib import Path

from advnet.cli import parse_scenario, symmetrize_scenario

sc = parse_scenario((Path(__file__).parent / "symmetrize.scn").read_text())
print("a1 =", sorted(sc.a1), " a2 =", sorted(sc.a2))

# %% Without secrets, t sees the same bytes whichever message was sent
sym = symmetrize_scenario(sc, secrets=False)
for eid in sym.in_edges:
    print(eid, sym.packet_bytes(0, eid).hex()[:24], "...", "same" if sym.edge_identical(eid) else "differs")
print("identical:", sym.identical)

# %% With secrets the forged packets carry the wrong hash and get dropped
sym = symmetrize_scenario(sc, secrets=True)
print("identical:", sym.identical)
for k in (0, 1):
    print(f"scenario {k + 1}:", {e: sym.transcripts[k].verdicts[e] for e in sym.forged[k]})
