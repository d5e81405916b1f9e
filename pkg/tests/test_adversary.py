import numpy as np
import pytest
from hypothesis import given, strategies as st

from advnet.adversary import (
    STRATEGIES,
    AttackContext,
    EraseZeros,
    FixedCode,
    ForgeValidHeader,
    RandomNoise,
    Silent,
    Symmetrize,
    corrupt,
    strategy_from_name,
    symmetrize_transcripts,
)
from advnet.errors import ConfigurationError
from advnet.harness import TrialConfig, run_trial
from advnet.secretcode import (
    CoefficientTable,
    derive_params,
    run_network,
    sample_secrets,
    verify_packet,
)
from advnet.topology import NodeBased, covered_cut, topo_order

from netgen import random_dag


@pytest.fixture
def setting(toy, toy_params):
    f = toy_params.field
    rng = np.random.default_rng(0)
    msg = f.random(rng, 32)
    secrets = sample_secrets(rng, toy_params)
    table = CoefficientTable.generate(toy, toy_params, 0)
    tr = run_network(toy, toy_params, msg, secrets, table)
    ctx = AttackContext(toy, toy_params, msg, controlled_secrets={"a": secrets["a"]},
                        controlled_nodes=("a",), controlled_edges=frozenset({"e4", "e5"}),
                        rng=np.random.default_rng(1), coefficient_table=table,
                        alt_message=f.random(rng, 32))
    return ctx, tr, secrets


def changed(x, y):
    return [i for i, (a, b) in enumerate(zip(x.tolist(), y.tolist())) if a != b]


def test_silent_and_erase(toy, setting):
    ctx, tr, secrets = setting
    e4 = toy.edge_by_id["e4"]
    pkt = tr.packets["e4"]
    assert corrupt(Silent(), ctx, e4, pkt) == pkt
    out = corrupt(EraseZeros(), ctx, e4, pkt)
    assert out.null and not out.w.any() and not out.h.any()
    assert not verify_packet(out, secrets["t"], ctx.params.index("t"), ctx.params)


def test_random_noise_keeps_headers(toy, setting):
    ctx, tr, secrets = setting
    pkt = tr.packets["e4"]
    out = corrupt(RandomNoise(), ctx, toy.edge_by_id["e4"], pkt)
    n = ctx.params.n
    assert np.array_equal(out.w[n:], pkt.w[n:]) and np.array_equal(out.h, pkt.h)
    assert not np.array_equal(out.w[:n], pkt.w[:n])
    assert not verify_packet(out, secrets["t"], ctx.params.index("t"), ctx.params)


def test_forge_payload_changes_one_payload_symbol(toy, setting):
    ctx, tr, _ = setting
    pkt = tr.packets["e5"]
    for _ in range(20):
        out = corrupt(ForgeValidHeader("payload"), ctx, toy.edge_by_id["e5"], pkt)
        diff = changed(out.w, pkt.w)
        assert len(diff) == 1 and diff[0] < ctx.params.n
        assert np.array_equal(out.h, pkt.h)


def test_forge_own_hash_hits_next_hop_block(toy, setting):
    ctx, tr, secrets = setting
    params = ctx.params
    for eid, head in (("e4", "t"), ("e5", "c")):
        pkt = tr.packets[eid]
        out = corrupt(ForgeValidHeader("own-hash"), ctx, toy.edge_by_id[eid], pkt)
        diff = changed(out.h, pkt.h)
        r2 = params.r ** 2
        assert len(diff) == 1 and diff[0] // r2 == params.index(head)
        assert np.array_equal(out.w, pkt.w)
        assert not verify_packet(out, secrets[head], params.index(head), params)


def test_forge_foreign_hash_avoids_neighbours(toy, setting):
    ctx, tr, secrets = setting
    params = ctx.params
    pkt = tr.packets["e4"]
    out = corrupt(ForgeValidHeader("foreign-hash"), ctx, toy.edge_by_id["e4"], pkt)
    diff = changed(out.h, pkt.h)
    assert len(diff) == 1 and params.node_order[diff[0] // params.r ** 2] == "b"
    # the next hop cannot see the change
    assert verify_packet(out, secrets["t"], params.index("t"), params)


def test_unknown_tamper_mode_and_strategy():
    with pytest.raises(ConfigurationError):
        ForgeValidHeader("everything")
    with pytest.raises(ConfigurationError, match="unknown strategy"):
        strategy_from_name("loud")
    assert set(STRATEGIES) == {"silent", "erase", "random", "forge-payload", "forge-own-hash",
                               "forge-foreign-hash", "symmetrize"}
    assert all(strategy_from_name(k).name == k for k in STRATEGIES)


def test_corrupt_requires_controlled_edge(toy, setting):
    ctx, tr, _ = setting
    with pytest.raises(ConfigurationError, match="not controlled"):
        corrupt(Silent(), ctx, toy.edge_by_id["e6"], tr.packets["e6"])


def test_symmetrize_needs_fixed_table(toy, setting):
    ctx, tr, _ = setting
    bare = AttackContext(ctx.network, ctx.params, ctx.message, controlled_edges=ctx.controlled_edges,
                         alt_message=ctx.alt_message)
    with pytest.raises(ConfigurationError, match="fixed coefficient table"):
        corrupt(Symmetrize(), bare, toy.edge_by_id["e4"], tr.packets["e4"])
    with pytest.raises(ConfigurationError, match="fixed_coefficients"):
        TrialConfig(toy, toy.adversary, 8, 16, Symmetrize(), {"e4", "e5"})


def test_symmetrize_sends_alternative_payload(toy, setting):
    ctx, tr, _ = setting
    params = ctx.params
    alt = run_network(toy, params.without_secrets(), ctx.alt_message, None, ctx.coefficient_table)
    out = corrupt(Symmetrize(), ctx, toy.edge_by_id["e4"], tr.packets["e4"])
    assert np.array_equal(out.w, alt.packets["e4"].w)
    assert np.array_equal(out.h, tr.packets["e4"].h)


# -- context contents ------------------------------------------------------------------

class Probe:
    name = "probe"

    def __init__(self):
        self.seen = []

    def corrupt(self, ctx, edge, pkt):
        self.seen.append((edge.id, set(ctx.controlled_secrets), set(ctx.transmissions)))
        return pkt


def test_context_exposes_only_controlled_secrets_and_causal_prefix(toy):
    order = topo_order(toy)
    for node in ("a", "b", "c"):
        probe = Probe()
        edges = frozenset(e.id for e in toy.out_edges(node))
        run_trial(TrialConfig(toy, toy.adversary, 8, 16, probe, edges, (node,), seed=1))
        assert probe.seen
        for eid, secret_keys, seen in probe.seen:
            assert secret_keys == {node}
            assert eid not in seen
            rank = order.index(toy.edge_by_id[eid].tail)
            assert all(order.index(toy.edge_by_id[s].tail) <= rank for s in seen)


@pytest.mark.parametrize("name", sorted(STRATEGIES))
def test_outputs_do_not_depend_on_honest_secrets(toy, toy_params, name):
    # rerun with every honest bundle resampled: same payloads, same hash edits
    strategy = STRATEGIES[name]
    params = toy_params
    f = params.field
    table = CoefficientTable.generate(toy, params, 2)
    rng = np.random.default_rng(5)
    msg, alt = f.random(rng, 32), f.random(rng, 32)
    base = sample_secrets(np.random.default_rng(6), params)
    other = sample_secrets(np.random.default_rng(7), params)
    other["a"] = base["a"]
    edges = frozenset({"e4", "e5"})
    records = []
    for secrets in (base, other):
        ctx = AttackContext(toy, params, msg, controlled_secrets={"a": secrets["a"]}, controlled_nodes=("a",),
                            controlled_edges=edges, rng=np.random.default_rng(8), coefficient_table=table,
                            alt_message=alt)
        out = {}

        def tamper(edge, pkt, seen):
            res = strategy.corrupt(ctx.at(seen), edge, pkt)
            # hash edits are compared as offsets from what was observed
            out[edge.id] = (res.w.copy(), res.h if res.null else f.vsub(res.h, pkt.h))
            return res

        run_network(toy, params, msg, secrets, table, edges, tamper)
        records.append(out)
    assert records[0].keys() == records[1].keys() == edges
    for eid in edges:
        assert np.array_equal(records[0][eid][0], records[1][eid][0])
        assert np.array_equal(records[0][eid][1], records[1][eid][1])


# -- symmetrization ------------------------------------------------------------------

def fixed_code(net, n=8, m=16, seed=0, z=1):
    params = derive_params(net, NodeBased(z), n, m)
    return FixedCode(params, CoefficientTable.generate(net, params, seed))


def test_symmetrization_fixture_identical(toy):
    code = fixed_code(toy)
    f = code.params.field
    rng = np.random.default_rng(3)
    w1, w2 = f.random(rng, 16), f.random(rng, 16)
    sym = symmetrize_transcripts(code, toy, {"e6", "e7"}, {"e4"}, w1, w2)
    assert sym.destination == "t" and sym.cut == ("e4", "e6", "e7")
    assert sym.forged == (("e6", "e7"), ("e4",))
    assert sym.identical
    assert all(sym.edge_identical(e) for e in sym.cut)
    assert sym.verdicts(0) == sym.verdicts(1)
    received = sym.received(0)
    assert all(received[e] == sym.received(1)[e] for e in received)


def test_symmetrization_trivial_cases(toy):
    code = fixed_code(toy)
    f = code.params.field
    rng = np.random.default_rng(4)
    w1, w2 = f.random(rng, 16), f.random(rng, 16)
    cut = {"e4", "e6", "e7"}
    assert symmetrize_transcripts(code, toy, cut, cut, w1, w2).identical
    assert symmetrize_transcripts(code, toy, {"e6"}, {"e4", "e7"}, w1, w1).identical


def test_symmetrization_with_secrets_differs(toy):
    code = fixed_code(toy)
    f = code.params.field
    rng = np.random.default_rng(5)
    w1, w2 = f.random(rng, 16), f.random(rng, 16)
    secrets = sample_secrets(rng, code.params)
    sym = symmetrize_transcripts(code, toy, {"e6", "e7"}, {"e4"}, w1, w2, secrets=secrets)
    assert not sym.identical
    assert not all(sym.verdicts(0)[e] for e in sym.forged[0])
    assert not all(sym.verdicts(1)[e] for e in sym.forged[1])


def test_symmetrization_rejects_non_covering_sets(toy):
    code = fixed_code(toy)
    f = code.params.field
    w = f.zeros(16)
    with pytest.raises(ConfigurationError, match="does not cover"):
        symmetrize_transcripts(code, toy, {"e6"}, {"e7"}, w, w)
    with pytest.raises(ConfigurationError):
        Symmetrize(a1={"e6"}, a2={"e7"}).validate(toy)
    Symmetrize(a1={"e6", "e7"}, a2={"e4"}).validate(toy)


@given(st.integers(0, 5000), st.integers(0, 2**32))
def test_symmetrization_identical_on_random_networks(net_seed, seed):
    net = random_dag(net_seed, n_nodes=6, density=0.6)
    t = net.destinations[0]
    from advnet.topology import min_cut
    if min_cut(net, net.source, t) == 0:
        return
    rng = np.random.default_rng(seed)
    ids = [e.id for e in net.edges]
    joint = {i for i in ids if rng.random() < 0.6}
    if not covered_cut(net, joint, t):
        return
    a1 = {i for i in joint if rng.random() < 0.5}
    a2 = joint - a1
    code = fixed_code(net, n=3, m=16, seed=seed, z=0)
    f = code.params.field
    w1, w2 = f.random(rng, 3 * code.params.r), f.random(rng, 3 * code.params.r)
    sym = symmetrize_transcripts(code, net, a1, a2, w1, w2, destination=t)
    assert sym.identical


def test_source_edges_untouched_by_every_strategy(toy):
    for name, strategy in STRATEGIES.items():
        cfg = TrialConfig(toy, toy.adversary, 16, 32, strategy, {"e4", "e5"}, ("a",),
                          seed=9, fixed_coefficients=name == "symmetrize")
        res = run_trial(cfg)
        assert res.verdicts["e1"] and res.verdicts["e2"] and res.verdicts["e3"]
        assert all(res.decoded_ok.values())
