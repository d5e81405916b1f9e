"""Trial engine, Monte-Carlo aggregation, reports and rate/bound calculators."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
import csv
import io
import math
from types import MappingProxyType
import warnings

import numpy as np

from .adversary import AttackContext, Silent, Symmetrize
from .errors import ConfigurationError, DecodeFailure, UsageError
from .galois import FieldParams
from .secretcode import (
    CodeParams,
    CoefficientTable,
    RandomMixing,
    derive_params,
    is_consistent,
    message_matrix,
    run_network,
    sample_secrets,
)
from .topology import (
    NodeBased,
    adversary_choices,
    delete_edges,
    max_degree,
    min_cut,
    residual_rate,
)

__all__ = [
    "TrialConfig",
    "TrialResult",
    "ReportRow",
    "Report",
    "run_trial",
    "monte_carlo",
    "run_experiment",
    "trial_seed",
    "theorem1_params",
    "erasure_bound",
    "achieved_rate",
    "binary_entropy",
    "wilson_interval",
    "attack_label",
]


def _strategy_name(strategy):
    return strategy.name


@dataclass(frozen=True, eq=False)
class TrialConfig:
    """One experiment cell: a network, one adversary choice and one strategy.

    ``attack`` is the attacked edge set; ``attack_nodes`` the controlled
    nodes (inferred for node-based specs when omitted). ``fixed_coefficients``
    switches from fresh random mixing to a table drawn once from
    ``code_seed``; ``secrets=False`` drops hash headers and verification.
    """

    network: object
    spec: object
    n: int
    m: int
    strategy: object = Silent()
    attack: frozenset = frozenset()
    attack_nodes: tuple = None
    p: int = 2
    seed: int = 0
    secrets: bool = True
    fixed_coefficients: bool = False
    code_seed: int = 0
    modulus: object = None

    def __post_init__(self):
        object.__setattr__(self, "attack", frozenset(self.attack))
        choices = adversary_choices(self.network, self.spec)
        if self.attack_nodes is None:
            nodes = next((nodes for nodes, edges in choices if edges == self.attack), ())
            object.__setattr__(self, "attack_nodes", tuple(nodes))
        if self.attack not in [edges for _, edges in choices]:
            warnings.warn(f"attack set {sorted(self.attack)} is not one of the declared adversary sets",
                          stacklevel=3)
        unknown = self.attack - set(self.network.edge_by_id)
        if unknown:
            raise ConfigurationError(f"attack names unknown edges {sorted(unknown)}")
        if isinstance(self.strategy, Symmetrize):
            if not self.fixed_coefficients:
                raise ConfigurationError("the symmetrize strategy needs fixed_coefficients=True")
            self.strategy.validate(self.network)

    @cached_property
    def params(self):
        return derive_params(self.network, self.spec, self.n, self.m, self.p, self.modulus, self.secrets)

    @cached_property
    def table(self):
        return CoefficientTable.generate(self.network, self.params, self.code_seed)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("table", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


@dataclass
class TrialResult:
    """Outcome of one transmission.

    ``corrupted`` counts delivered packets that differ from what the honest
    procedure produced and reach an honest verifier. ``false_accepts`` counts
    those that passed verification although the payload is not the
    combination its header claims. ``isolation_events`` counts unmodified
    packets rejected at honest nodes.
    """

    decoded_ok: dict
    failures: dict
    verdicts: dict
    corrupted: int
    false_accepts: int
    isolation_events: int

    @property
    def decode_error(self):
        return not all(self.decoded_ok.values())

    @property
    def rank_failure(self):
        return any(v is not None for v in self.failures.values())


def trial_seed(master_seed, index):
    """Independent 64-bit seed for trial ``index`` hashed from the master seed."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def run_trial(cfg):
    net, params = cfg.network, cfg.params
    f = params.field
    code_ss, mix_ss, adv_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    code_rng = np.random.default_rng(code_ss)
    message = f.random(code_rng, params.n * params.r)
    secrets = sample_secrets(code_rng, params) if params.with_secrets else None
    alt_message = f.random(code_rng, params.n * params.r)
    mixing = cfg.table if cfg.fixed_coefficients else RandomMixing(np.random.default_rng(mix_ss))

    controlled = set(cfg.attack_nodes)
    ctx = AttackContext(
        network=net,
        params=params,
        message=message,
        controlled_secrets=MappingProxyType({v: secrets[v] for v in controlled} if secrets else {}),
        controlled_nodes=tuple(cfg.attack_nodes),
        controlled_edges=cfg.attack,
        rng=np.random.default_rng(adv_ss),
        coefficient_table=cfg.table if cfg.fixed_coefficients else None,
        alt_message=alt_message,
    )

    def tamper(edge, pkt, seen):
        return cfg.strategy.corrupt(ctx.at(seen), edge, pkt)

    tr = run_network(net, params, message, secrets, mixing, cfg.attack, tamper)

    x = message_matrix(message, params)
    corrupted = false_accepts = isolation = 0
    for eid, ok in tr.verdicts.items():
        head = net.edge_by_id[eid].head
        if head in controlled:
            continue
        delivered = tr.packets[eid]
        if delivered == tr.honest[eid]:
            if not ok:
                isolation += 1
            continue
        corrupted += 1
        if ok and not is_consistent(delivered, x, params):
            false_accepts += 1

    decoded_ok, failures = {}, {}
    for t in net.destinations:
        out = tr.decoded.get(t)
        if isinstance(out, DecodeFailure):
            decoded_ok[t], failures[t] = False, out.reason
        else:
            decoded_ok[t], failures[t] = out is not None and bool(np.array_equal(out, message)), None
    return TrialResult(decoded_ok, failures, dict(tr.verdicts), corrupted, false_accepts, isolation)


_COUNT_FIELDS = ("trials", "decode_errors", "rank_failures", "corrupted", "false_accepts", "isolation_events")


def _run_chunk(cfg, indices):
    counts = dict.fromkeys(_COUNT_FIELDS, 0)
    for i in indices:
        res = run_trial(replace(cfg, seed=trial_seed(cfg.seed, i)))
        counts["trials"] += 1
        counts["decode_errors"] += res.decode_error
        counts["rank_failures"] += res.rank_failure
        counts["corrupted"] += res.corrupted
        counts["false_accepts"] += res.false_accepts
        counts["isolation_events"] += res.isolation_events
    return counts


def wilson_interval(successes, total, z=1.96):
    """Wilson score interval for a binomial proportion; (0, 1) when total is 0."""
    if total == 0:
        return 0.0, 1.0
    phat = successes / total
    denom = 1 + z * z / total
    centre = (phat + z * z / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def binary_entropy(x):
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def erasure_bound(net, attack, n_bits, pe):
    """Upper bound on the rate when ``attack`` is controlled and error probability is ``pe``."""
    if not 0 <= pe < 1:
        raise UsageError("error probability must lie in [0, 1)")
    g = delete_edges(net, attack)
    cut = min(min_cut(g, net.source, t) for t in net.destinations)
    return (cut + binary_entropy(pe) / n_bits) / (1 - pe)


def achieved_rate(params):
    """(symbols per packet symbol, message bits per transmitted bit); the two agree."""
    n, r, length = params.n, params.r, params.length
    log_q = params.field.m * math.log2(params.field.p)
    symbols = n * r / length
    bits = n * r * log_q / (length * log_q)
    return symbols, bits


def _attack_weight(net, spec):
    # most edges one adversary choice can corrupt
    if isinstance(spec, NodeBased):
        return spec.z * max_degree(net)
    return max((len(s) for s in spec.sets), default=0)


def theorem1_params(net, spec, eps):
    """Smallest n (with m = 2n, p = 2) meeting both design conditions for ``eps``.

    The conditions are ``z * d_max * 2^-n < eps`` and
    ``n r / (n + r + delta) > r - eps``; general specs use the largest
    adversary set size in place of ``z * d_max``. Returns
    ``(n, m, params, n_bits)``.
    """
    r = residual_rate(net, spec)
    eps = Fraction(repr(eps)) if isinstance(eps, float) else Fraction(eps)
    if r < 1:
        raise ConfigurationError("no rate achievable")
    if not 0 < eps < r:
        raise UsageError(f"eps must lie in (0, r) = (0, {r})")
    delta = (len(net.nodes) - 1) * r * r
    weight = _attack_weight(net, spec)
    n = math.floor((r - eps) * (r + delta) / eps) + 1
    n = max(n, 1)
    while Fraction(weight, 2**n) >= eps:
        n += 1
    assert Fraction(n * r, n + r + delta) > r - eps
    m = 2 * n
    order = tuple(sorted(v for v in net.nodes if v != net.source))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = CodeParams(FieldParams(2, m), n, r, order)
    return n, m, params, params.length * m


def attack_label(nodes, edges):
    if nodes:
        return "+".join(nodes)
    return "{" + ",".join(sorted(edges)) + "}" if edges else "{}"


@dataclass
class ReportRow:
    adversary_set: str
    strategy: str
    trials: int
    decode_errors: int
    rank_failures: int
    corrupted: int
    false_accepts: int
    isolation_events: int
    empirical_pe: float
    false_accept_rate: float
    false_accept_ci: tuple
    lemma1_bound: float
    union_bound: float
    thm2_bound: float
    rate_symbols: float
    rate_bits: float


CSV_COLUMNS = (
    "adversary_set", "strategy", "trials", "decode_errors", "rank_failures", "false_accepts",
    "corrupted", "isolation_events", "empirical_pe", "false_accept_rate", "lemma1_bound",
    "union_bound", "thm2_bound", "rate_symbols",
)


@dataclass
class Report:
    rows: list = field(default_factory=list)
    n: int = 0
    m: int = 0
    p: int = 2
    r: int = 0
    delta: int = 0

    def extend(self, other):
        self.rows.extend(other.rows)
        return self

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_text(self):
        lines = [f"code: n={self.n} m={self.m} p={self.p} r={self.r} delta={self.delta}"]
        for row in self.rows:
            lo, hi = row.false_accept_ci
            lines.append(
                f"[{row.adversary_set} / {row.strategy}] trials={row.trials} "
                f"decode_errors={row.decode_errors} (rank failures {row.rank_failures}) "
                f"P_e={row.empirical_pe:.6g}\n"
                f"    false accepts {row.false_accepts}/{row.corrupted} "
                f"rate={row.false_accept_rate:.3g} Wilson95=[{lo:.3g}, {hi:.3g}] "
                f"per-packet bound={row.lemma1_bound:.3g} union bound={row.union_bound:.3g}\n"
                f"    isolated honest packets={row.isolation_events} "
                f"erasure bound={row.thm2_bound:.6g} rate={row.rate_symbols:.6g} symbols"
            )
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def monte_carlo(cfg, trials, workers=1):
    """Aggregate ``trials`` runs of ``cfg``; trial i is seeded from (cfg.seed, i).

    Counts are summed, so the report does not depend on ``workers``.
    """
    if trials < 1:
        raise UsageError("trials must be at least 1")
    workers = max(1, min(int(workers), trials))
    if workers == 1:
        counts = _run_chunk(cfg, range(trials))
    else:
        chunks = [range(k, trials, workers) for k in range(workers)]
        counts = dict.fromkeys(_COUNT_FIELDS, 0)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, [cfg] * workers, chunks):
                for k in _COUNT_FIELDS:
                    counts[k] += part[k]
    return _make_report(cfg, counts)


def _make_report(cfg, c):
    params = cfg.params
    f = params.field
    pe = c["decode_errors"] / c["trials"]
    lemma1 = float(Fraction(f.p) ** (params.n - f.m))
    weight = len(cfg.attack)
    n_bits = params.length * f.m * math.log2(f.p)
    thm2 = erasure_bound(cfg.network, cfg.attack, n_bits, pe) if pe < 1 else math.inf
    fa_rate = c["false_accepts"] / c["corrupted"] if c["corrupted"] else 0.0
    symbols, bits = achieved_rate(params)
    row = ReportRow(
        adversary_set=attack_label(cfg.attack_nodes, cfg.attack),
        strategy=_strategy_name(cfg.strategy),
        trials=c["trials"],
        decode_errors=c["decode_errors"],
        rank_failures=c["rank_failures"],
        corrupted=c["corrupted"],
        false_accepts=c["false_accepts"],
        isolation_events=c["isolation_events"],
        empirical_pe=pe,
        false_accept_rate=fa_rate,
        false_accept_ci=wilson_interval(c["false_accepts"], c["corrupted"]),
        lemma1_bound=lemma1,
        union_bound=min(1.0, weight * lemma1) if params.with_secrets else 1.0,
        thm2_bound=thm2,
        rate_symbols=symbols,
        rate_bits=bits,
    )
    return Report([row], params.n, f.m, f.p, params.r, params.delta)


def run_experiment(network, spec, strategies, n, m, trials, workers=1, seed=0, **options):
    """One Monte-Carlo row per adversary choice and strategy, in the order adversary_choices lists them.

    Symmetrize rows always run on a fixed coefficient table.
    """
    report = None
    for strategy in strategies:
        opts = dict(options)
        if isinstance(strategy, Symmetrize):
            opts["fixed_coefficients"] = True
        for nodes, edges in adversary_choices(network, spec):
            cfg = TrialConfig(network, spec, n, m, strategy, edges, nodes, seed=seed, **opts)
            part = monte_carlo(cfg, trials, workers)
            report = part if report is None else report.extend(part)
    return report
