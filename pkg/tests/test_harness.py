from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advnet.adversary import STRATEGIES, EraseZeros, ForgeValidHeader, Silent
from advnet.errors import DecodeFailure, UsageError
from advnet.harness import (
    CSV_COLUMNS,
    TrialConfig,
    achieved_rate,
    binary_entropy,
    erasure_bound,
    monte_carlo,
    run_experiment,
    run_trial,
    theorem1_params,
    trial_seed,
    wilson_interval,
)
from advnet.secretcode import (
    RandomMixing,
    derive_params,
    null_packet,
    run_network,
    sample_secrets,
    source_packets,
)
from advnet.topology import General, NodeBased, delete_edges, toy_network, min_cut

TOY = toy_network(1)
OUT_A = frozenset({"e4", "e5"})


def cfg_for(net, strategy=Silent(), attack=OUT_A, nodes=("a",), n=16, m=32, **kw):
    return TrialConfig(net, net.adversary, n, m, strategy, attack, nodes, **kw)


# -- single trials ------------------------------------------------------------------

def test_silent_trial_decodes(toy):
    res = run_trial(cfg_for(toy, seed=4))
    assert res.decoded_ok == {"t": True}
    assert res.false_accepts == res.corrupted == res.isolation_events == 0
    assert all(res.verdicts.values())


def test_forged_payloads_rejected_and_decoded(toy):
    for seed in range(200):
        res = run_trial(cfg_for(toy, ForgeValidHeader("payload"), seed=seed))
        assert res.corrupted == 2
        assert res.false_accepts == 0
        assert not res.verdicts["e4"] and not res.verdicts["e5"]
        assert res.decoded_ok["t"]


def test_erase_trace_matches_header_rank(toy):
    # t keeps the packets from b and c; it decodes exactly when their headers are independent
    cfg = cfg_for(toy, EraseZeros(), n=2, m=3)
    params = cfg.params
    f = params.field
    for seed in range(300):
        rng = np.random.default_rng(seed)
        msg = f.random(rng, 4)
        secrets = sample_secrets(rng, params)
        tr = run_network(toy, params, msg, secrets, RandomMixing(rng), OUT_A,
                         lambda e, p, seen: null_packet(params))
        h6, h7 = tr.packets["e6"].header(params), tr.packets["e7"].header(params)
        ok6, ok7 = tr.verdicts["e6"], tr.verdicts["e7"]
        det = f.sub(f.mul(int(h6[0]), int(h7[1])), f.mul(int(h6[1]), int(h7[0])))
        independent = ok6 and ok7 and det != 0
        decoded = tr.decoded["t"]
        assert (not isinstance(decoded, DecodeFailure)) == independent
        if independent:
            assert np.array_equal(decoded, msg)


def test_trial_is_deterministic(toy):
    cfg = cfg_for(toy, ForgeValidHeader("own-hash"), seed=77)
    assert run_trial(cfg) == run_trial(cfg)


def test_user_attack_set_outside_spec_warns(toy):
    with pytest.warns(UserWarning, match="not one of"):
        cfg_for(toy, attack={"e1"}, nodes=())


@settings(max_examples=30)
@given(st.sampled_from(sorted(STRATEGIES)), st.sampled_from(["a", "b", "c"]), st.integers(0, 2**40))
def test_false_accepts_bounded_by_corrupted(name, node, seed):
    toy = TOY
    edges = frozenset(e.id for e in toy.out_edges(node))
    cfg = cfg_for(toy, STRATEGIES[name], edges, (node,), n=2, m=4, seed=seed,
                  fixed_coefficients=name == "symmetrize")
    res = run_trial(cfg)
    assert 0 <= res.false_accepts <= res.corrupted


# -- aggregation ----------------------------------------------------------------------

def test_single_trial_report(toy):
    cfg = cfg_for(toy, ForgeValidHeader("payload"), n=2, m=4, seed=3)
    report = monte_carlo(cfg, 1)
    res = run_trial(cfg_for(toy, ForgeValidHeader("payload"), n=2, m=4, seed=trial_seed(3, 0)))
    row = report.rows[0]
    assert row.trials == 1
    assert row.decode_errors == int(res.decode_error)
    assert row.false_accepts == res.false_accepts and row.corrupted == res.corrupted
    assert row.empirical_pe == float(res.decode_error)


def test_worker_count_does_not_change_report(toy):
    cfg = cfg_for(toy, ForgeValidHeader("payload"), n=2, m=5, seed=11)
    one = monte_carlo(cfg, 64, workers=1)
    many = monte_carlo(cfg, 64, workers=8)
    assert one.to_csv() == many.to_csv()
    assert one.to_text() == many.to_text()


def test_trials_must_be_positive(toy):
    with pytest.raises(UsageError):
        monte_carlo(cfg_for(toy), 0)


def test_trial_seeds_are_distinct():
    seeds = {trial_seed(0, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert trial_seed(5, 3) == trial_seed(5, 3) != trial_seed(6, 3)


def test_report_shape_and_ranges(toy):
    report = run_experiment(toy, toy.adversary, [Silent(), ForgeValidHeader("payload")], 4, 8, 20, seed=1)
    assert len(report.rows) == 8
    header = report.to_csv().splitlines()[0].split(",")
    assert header == list(CSV_COLUMNS)
    for col in ("trials", "decode_errors", "false_accepts", "isolation_events", "empirical_pe",
                "lemma1_bound", "thm2_bound", "rate_symbols"):
        assert col in header
    for row in report.rows:
        assert 0 <= row.empirical_pe <= 1 and 0 <= row.false_accept_rate <= 1
        assert row.rate_symbols == row.rate_bits
        assert row.lemma1_bound == 2.0 ** (4 - 8)
    assert [r.adversary_set for r in report.rows[:4]] == ["{}", "a", "b", "c"]


def test_union_bound_consistency(toy):
    # tiny field so that forgeries do get through sometimes
    cfg = cfg_for(toy, ForgeValidHeader("payload"), n=2, m=4, seed=21)
    row = monte_carlo(cfg, 1500).rows[0]
    per_trial = row.corrupted / row.trials
    fa = row.false_accept_rate
    bound = per_trial * fa + row.rank_failures / row.trials
    sigma = math.sqrt(max(row.empirical_pe * (1 - row.empirical_pe), 1e-4) / row.trials)
    assert row.empirical_pe <= bound + 3 * sigma
    assert fa <= row.lemma1_bound + 3 * (wilson_interval(row.false_accepts, row.corrupted)[1] - fa)


# -- calculators ---------------------------------------------------------------------

def smallest_n_oracle(r, delta, weight, eps):
    n = 1
    while not (Fraction(n * r, n + r + delta) > r - eps and Fraction(weight, 2**n) < eps):
        n += 1
    return n


def test_theorem1_fixture_value(toy):
    n, m, params, n_bits = theorem1_params(toy, toy.adversary, 0.1)
    # 2n/(n+18) > 1.9 needs n > 342 exactly
    assert n == 343 == smallest_n_oracle(2, 16, 3, Fraction("0.1"))
    assert m == 686 and params.delta == 16 and params.r == 2
    assert n_bits == (343 + 2 + 16) * 686


def test_theorem1_grid_monotone_and_satisfied(toy):
    grid = [1.9, 1.5, 1.0, 0.5, 0.3, 0.2, 0.1, 0.05]
    ns = []
    for eps in grid:
        n, m, params, _ = theorem1_params(toy, toy.adversary, eps)
        e = Fraction(repr(eps))
        assert n == smallest_n_oracle(2, 16, 3, e)
        assert m == 2 * n
        assert Fraction(3, 2**n) < e
        assert Fraction(n * 2, n + 18) > 2 - e
        assert achieved_rate(params)[0] >= 2 - eps
        ns.append(n)
    assert ns == sorted(ns)
    assert ns[0] <= 2


def test_theorem1_rejects_bad_eps(toy):
    with pytest.raises(UsageError):
        theorem1_params(toy, toy.adversary, 2)
    with pytest.raises(UsageError):
        theorem1_params(toy, toy.adversary, 0)


def test_theorem1_general_spec_uses_largest_set(toy):
    spec = General([{"e4", "e5"}, {"e6"}])
    n, *_ = theorem1_params(toy, spec, 1.0)
    assert n == smallest_n_oracle(2, 16, 2, Fraction(1))


def test_erasure_bound_cases(toy):
    assert erasure_bound(toy, set(), 1000, 0) == 3
    assert erasure_bound(toy, OUT_A, 1000, 0) == 2
    assert erasure_bound(toy, OUT_A, 1e12, 0.5) == pytest.approx(4, rel=1e-9)
    with pytest.raises(UsageError):
        erasure_bound(toy, OUT_A, 100, 1.0)
    assert binary_entropy(0) == 0 and binary_entropy(0.5) == 1


def test_achieved_rate_formula(toy, quiet):
    params = derive_params(toy, NodeBased(1), 2, 16)
    assert achieved_rate(params) == (0.2, 0.2)
    big = derive_params(toy, NodeBased(1), 10**6, 16)
    assert achieved_rate(big)[0] == pytest.approx(2, rel=1e-4)


def test_wilson_interval_values():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0 and hi == pytest.approx(1.96**2 / (10 + 1.96**2))
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(1 - hi)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_source_encoding_matches_params(toy):
    params = derive_params(toy, NodeBased(1), 4, 8)
    f = params.field
    pkts = source_packets(f.zeros(8), sample_secrets(np.random.default_rng(0), params), params)
    assert all(p.w.size + p.h.size == params.length for p in pkts)
    assert min_cut(delete_edges(toy, OUT_A), "v0", "t") == params.r
