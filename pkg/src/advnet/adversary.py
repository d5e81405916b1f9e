"""Omniscient adversary strategies and the symmetrization attack.

A strategy sees an ``AttackContext``: the network, the code, the message,
packets delivered so far, and the secrets of the nodes it controls. Honest
nodes' secrets are never placed in the context.
"""

from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from .errors import ConfigurationError
from .secretcode import Packet, null_packet, reference_payloads, run_network
from .topology import covered_cut, delete_edges, max_flow

__all__ = [
    "AttackContext",
    "Silent",
    "EraseZeros",
    "RandomNoise",
    "ForgeValidHeader",
    "Symmetrize",
    "STRATEGIES",
    "strategy_from_name",
    "corrupt",
    "FixedCode",
    "Symmetrization",
    "symmetrize_transcripts",
]


@dataclass(frozen=True)
class AttackContext:
    network: object
    params: object
    message: np.ndarray
    transmissions: object = MappingProxyType({})
    controlled_secrets: object = MappingProxyType({})
    controlled_nodes: tuple = ()
    controlled_edges: frozenset = frozenset()
    rng: object = None
    coefficient_table: object = None
    alt_message: object = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def at(self, transmissions):
        """The same context with the causal prefix advanced."""
        return replace(self, transmissions=transmissions)


def _distinct(field_, rng, old):
    # old + uniform nonzero offset is uniform over the other q - 1 values
    return field_.add(old, 1 + int(field_.random(rng)) % (field_.q - 1))


@dataclass(frozen=True)
class Silent:
    name = "silent"

    def corrupt(self, ctx, edge, pkt):
        return pkt


@dataclass(frozen=True)
class EraseZeros:
    name = "erase"

    def corrupt(self, ctx, edge, pkt):
        return null_packet(ctx.params)


@dataclass(frozen=True)
class RandomNoise:
    """Uniform random payload; coefficient header and hash header kept."""

    name = "random"

    def corrupt(self, ctx, edge, pkt):
        p = ctx.params
        w = pkt.w.copy()
        w[:p.n] = p.field.random(ctx.rng, p.n)
        return Packet(w, pkt.h)


@dataclass(frozen=True)
class ForgeValidHeader:
    """Keep the honest packet but change one symbol.

    ``tamper`` picks the symbol: ``"payload"`` (a payload position),
    ``"own-hash"`` (an entry of the receiving node's hash block) or
    ``"foreign-hash"`` (an entry of a block belonging to a node that is
    neither the controlled node nor one of its out-neighbours).
    """

    tamper: str = "payload"

    def __post_init__(self):
        if self.tamper not in ("payload", "own-hash", "foreign-hash"):
            raise ConfigurationError(f"unknown tamper mode {self.tamper!r}")

    @property
    def name(self):
        return f"forge-{self.tamper}"

    def corrupt(self, ctx, edge, pkt):
        p, f, rng = ctx.params, ctx.params.field, ctx.rng
        if self.tamper == "payload":
            w = pkt.w.copy()
            i = int(rng.integers(p.n))
            w[i] = _distinct(f, rng, w[i])
            return Packet(w, pkt.h)
        if not p.delta:
            return pkt
        if self.tamper == "own-hash":
            if edge.head not in p.node_order:
                return pkt
            target = edge.head
        else:
            near = {edge.tail} | {e.head for e in ctx.network.out_edges(edge.tail)}
            options = [v for v in p.node_order if v not in near]
            if not options:
                return pkt
            target = options[int(rng.integers(len(options)))]
        r2 = p.r * p.r
        k = p.index(target) * r2 + int(rng.integers(r2))
        h = pkt.h.copy()
        h[k] = _distinct(f, rng, h[k])
        return Packet(pkt.w, h)


@dataclass(frozen=True, eq=False)
class Symmetrize:
    """Send what the code would have sent for ``alt_message`` on each edge.

    Needs a fixed coefficient table so the alternative packets are well
    defined. Hash headers of honest nodes cannot be recomputed without their
    secrets, so the observed header is kept. When ``a1``/``a2`` are given
    they must jointly cover a source-destination cut of ``network``.
    """

    alt_message: object = None
    a1: frozenset = None
    a2: frozenset = None
    name = "symmetrize"

    def validate(self, network):
        if self.a1 is None or self.a2 is None:
            return
        joint = set(self.a1) | set(self.a2)
        if not any(covered_cut(network, joint, t) for t in network.destinations):
            raise ConfigurationError(_uncovered_message(network, joint))

    def corrupt(self, ctx, edge, pkt):
        if ctx.coefficient_table is None or not ctx.coefficient_table.deterministic:
            raise ConfigurationError("symmetrize needs a code with a fixed coefficient table")
        alt = self.alt_message if self.alt_message is not None else ctx.alt_message
        if alt is None:
            raise ConfigurationError("symmetrize needs an alternative message")
        if "alt" not in ctx._cache:
            ctx._cache["alt"] = reference_payloads(ctx.network, ctx.params, alt, ctx.coefficient_table)
        return Packet(ctx._cache["alt"][edge.id].copy(), pkt.h)


STRATEGIES = {
    "silent": Silent(),
    "erase": EraseZeros(),
    "random": RandomNoise(),
    "forge-payload": ForgeValidHeader("payload"),
    "forge-own-hash": ForgeValidHeader("own-hash"),
    "forge-foreign-hash": ForgeValidHeader("foreign-hash"),
    "symmetrize": Symmetrize(),
}


def strategy_from_name(name):
    try:
        return STRATEGIES[name]
    except KeyError:
        raise ConfigurationError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None


def corrupt(strategy, ctx, edge, honest_packet):
    """The packet a controlled edge actually carries."""
    if edge.id not in ctx.controlled_edges:
        raise ConfigurationError(f"edge {edge.id} is not controlled by the adversary")
    return strategy.corrupt(ctx, edge, honest_packet)


# -- symmetrization ------------------------------------------------------

@dataclass(frozen=True)
class FixedCode:
    """A code whose mixing coefficients are a fixed table."""

    params: object
    table: object


def _uncovered_message(net, joint):
    parts = []
    for t in net.destinations:
        g = delete_edges(net, joint)
        flow, _ = max_flow(g, net.source, t)
        if flow:
            parts.append(f"{flow} edge-disjoint path(s) from {net.source} to {t} avoid A1 ∪ A2")
        else:
            parts.append(f"every cut to {t} in A1 ∪ A2 has an edge back into its source side")
    return "A1 ∪ A2 does not cover a usable cut: " + "; ".join(parts)


@dataclass
class Symmetrization:
    """Destination observations under the two attack scenarios.

    Scenario 1 sends ``w1`` and overwrites A1's cut edges with ``w2``'s
    packets; scenario 2 sends ``w2`` and overwrites the remaining cut edges
    (A2 minus A1) with ``w1``'s packets.
    """

    destination: str
    cut: tuple
    in_edges: tuple
    forged: tuple
    transcripts: tuple
    field: object

    def received(self, k):
        tr = self.transcripts[k]
        return {eid: tr.packets[eid] for eid in self.in_edges}

    def packet_bytes(self, k, eid):
        return self.transcripts[k].packets[eid].to_bytes(self.field)

    def edge_identical(self, eid):
        return self.packet_bytes(0, eid) == self.packet_bytes(1, eid)

    @property
    def identical(self):
        return all(self.edge_identical(e) for e in dict.fromkeys(self.cut + self.in_edges))

    def verdicts(self, k):
        return {eid: self.transcripts[k].verdicts.get(eid) for eid in self.in_edges}


def symmetrize_transcripts(code, net, a1, a2, w1, w2, secrets=None, destination=None):
    """Run both symmetrization scenarios and return what the destination sees.

    With ``secrets=None`` the code runs without hash headers (the s = 0
    regime), and the two observations coincide byte for byte. With secrets
    the adversary can forge payloads but not the matching hash blocks.
    """
    a1, a2 = frozenset(a1), frozenset(a2)
    joint = a1 | a2
    targets = [destination] if destination is not None else list(net.destinations)
    found = None
    for t in targets:
        found = covered_cut(net, joint, t)
        if found:
            destination = t
            break
    if not found:
        raise ConfigurationError(_uncovered_message(net, joint))
    _, cut = found
    params = code.params if secrets is not None else code.params.without_secrets()
    f = params.field
    w1, w2 = f.asarray(w1), f.asarray(w2)
    ref = [reference_payloads(net, params, w, code.table) for w in (w1, w2)]
    forged1 = tuple(e for e in cut if e in a1)
    forged2 = tuple(e for e in cut if e in a2 and e not in a1)

    def swap_to(payloads):
        return lambda edge, pkt, _seen: Packet(payloads[edge.id].copy(), pkt.h)

    tr1 = run_network(net, params, w1, secrets, code.table, forged1, swap_to(ref[1]))
    tr2 = run_network(net, params, w2, secrets, code.table, forged2, swap_to(ref[0]))
    in_edges = tuple(e.id for e in net.in_edges(destination))
    return Symmetrization(destination, cut, in_edges, (forged1, forged2), (tr1, tr2), f)
