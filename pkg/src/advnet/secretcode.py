"""Shared-secret network code: hash headers, verify-and-encode relaying, decoding.

A message of n*r symbols is laid out as X = [U | I] (r rows of n payload
symbols plus an identity coefficient header). The source appends a hash
header h made of one r x r block per non-source node; block v is
h_v[i, j] = d_v[i, j] - sum_l X[i, l] * s_v[j]^(p^l). Relays check each
incoming packet against their own block, mix the ones that pass, and copy
the hash header forward unchanged.

Symbol vectors are numpy arrays of field integers (see ``FieldParams``).
"""

from dataclasses import dataclass, field as dc_field
from types import MappingProxyType
import warnings

import numpy as np

from .errors import ConfigurationError, DecodeFailure, UsageError
from .galois import FieldParams
from .topology import residual_rate, topo_order

__all__ = [
    "CodeParams",
    "SecretBundle",
    "Packet",
    "RandomMixing",
    "CoefficientTable",
    "Transcript",
    "derive_params",
    "sample_secrets",
    "message_matrix",
    "compute_hash_block",
    "source_packets",
    "null_packet",
    "emit_linear_combination",
    "verify_packet",
    "is_consistent",
    "decode",
    "run_network",
    "reference_payloads",
]


@dataclass(frozen=True)
class CodeParams:
    field: FieldParams
    n: int
    r: int
    node_order: tuple
    with_secrets: bool = True

    def __post_init__(self):
        object.__setattr__(self, "node_order", tuple(self.node_order))
        if self.n < 1 or self.r < 1:
            raise UsageError("n and r must both be at least 1")
        if self.field.m <= self.n:
            warnings.warn(
                f"m={self.field.m} <= n={self.n}: forged packets are no longer detected with high probability",
                stacklevel=3,
            )

    @property
    def delta(self):
        """Hash-header length: one r x r block per node in node_order."""
        return len(self.node_order) * self.r * self.r if self.with_secrets else 0

    @property
    def length(self):
        return self.n + self.r + self.delta

    def index(self, node):
        return self.node_order.index(node)

    def without_secrets(self):
        return CodeParams(self.field, self.n, self.r, self.node_order, False)


def derive_params(net, spec, n, m, p=2, modulus=None, secrets=True):
    """Code parameters for a network: r is the residual rate, blocks follow sorted node ids."""
    r = residual_rate(net, spec)
    if r < 1:
        raise ConfigurationError("no rate achievable: the adversary can cut every destination off")
    order = tuple(sorted(v for v in net.nodes if v != net.source))
    return CodeParams(FieldParams(p, m, modulus), n, r, order, secrets)


@dataclass(frozen=True, eq=False)
class SecretBundle:
    """Secrets shared by the source and one node: s (r,) and d (r, r)."""

    s: np.ndarray
    d: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, SecretBundle) and np.array_equal(self.s, other.s)
                and np.array_equal(self.d, other.d))

    @property
    def size(self):
        return self.s.size + self.d.size


def sample_secrets(rng, params):
    """Independent uniform bundles for every node in ``params.node_order``."""
    f, r = params.field, params.r
    out = {}
    for v in params.node_order:
        s = f.random(rng, r)
        d = f.random(rng, (r, r))
        out[v] = SecretBundle(s, d)
    return out


def message_matrix(message, params):
    """X = [U | I]: the n*r message symbols row-major, then the identity header."""
    f, n, r = params.field, params.n, params.r
    message = f.asarray(message)
    if message.shape != (n * r,):
        raise UsageError(f"message must have exactly n*r = {n * r} symbols, got {message.size}")
    x = f.zeros((r, n + r))
    x[:, :n] = message.reshape(r, n)
    for i in range(r):
        x[i, n + i] = 1
    return x


def compute_hash_block(x, bundle, field):
    """[h_v] = [d_v] - X [s_v], where column j of [s_v] is s_j^p, ..., s_j^(p^L).

    Each column reuses one Frobenius chain across all rows of X.
    """
    r, length = x.shape
    h = field.zeros((r, bundle.s.size))
    for j, s in enumerate(bundle.s):
        chain = field.frobenius_chain(s, length)
        h[:, j] = field.vsub(np.ascontiguousarray(bundle.d[:, j]), field.matvec(x, chain))
    return h


@dataclass(frozen=True, eq=False)
class Packet:
    """Payload plus coefficient header ``w`` (n + r symbols) and hash header ``h``."""

    w: np.ndarray
    h: np.ndarray
    null: bool = False

    def __eq__(self, other):
        return (isinstance(other, Packet) and self.null == other.null
                and np.array_equal(self.w, other.w) and np.array_equal(self.h, other.h))

    __hash__ = None

    def header(self, params):
        return self.w[params.n:]

    def block(self, index, params):
        r2 = params.r * params.r
        return self.h[index * r2:(index + 1) * r2].reshape(params.r, params.r)

    def to_bytes(self, field):
        return field.pack(self.w) + field.pack(self.h)

    @classmethod
    def from_bytes(cls, data, params):
        f = params.field
        values = f.unpack(data)
        if values.size != params.length:
            raise UsageError(f"expected {params.length} symbols, got {values.size}")
        w, h = values[:params.n + params.r], values[params.n + params.r:]
        return cls(w, h, null=not w.any() and not h.any())


def null_packet(params):
    f = params.field
    return Packet(f.zeros(params.n + params.r), f.zeros(params.delta), null=True)


def source_packets(message, secrets, params):
    """The r original packets (X_i, h); all share one hash header."""
    f = params.field
    x = message_matrix(message, params)
    if params.with_secrets:
        blocks = [compute_hash_block(x, secrets[v], f).reshape(-1) for v in params.node_order]
        h = np.concatenate(blocks) if blocks else f.zeros(0)
    else:
        h = f.zeros(0)
    return [Packet(np.ascontiguousarray(x[i]), h) for i in range(params.r)]


def _combine(coeffs, packets, params):
    f = params.field
    rows = np.stack([p.w for p in packets])
    return Packet(f.lincomb(f.asarray(coeffs), rows), packets[0].h)


def emit_linear_combination(rng, packets, params):
    """Fresh uniform combination of ``packets``; the hash header of the first is kept.

    An empty input list yields the null packet.
    """
    if not packets:
        return null_packet(params)
    width = packets[0].w.size
    if any(p.w.size != width or p.h.size != packets[0].h.size for p in packets):
        raise UsageError("packets of different lengths cannot be combined")
    return _combine(params.field.random(rng, len(packets)), packets, params)


def verify_packet(pkt, bundle, u_index, params):
    """True when Q1 == Q2 for the node's own hash block.

    Q1 = sum_l w_l * (sum_{i'} 1[c_i' != 0] s_i')^(p^l) and
    Q2 = sum_i c_i * sum_{i'} 1[c_i' != 0] (d[i, i'] - h_u[i, i']),
    with c the packet's coefficient header. A zero header never passes.
    """
    header = pkt.header(params)
    if pkt.null or not header.any():
        return False
    if not params.with_secrets:
        return True
    f = params.field
    ind = f.asarray((header != 0).astype(np.uint64))
    sigma = f.dot(ind, bundle.s)
    q1 = f.dot(pkt.w, f.frobenius_chain(sigma, pkt.w.size))
    diff = f.vsub(bundle.d, pkt.block(u_index, params))
    cols = f.matvec(np.ascontiguousarray(diff.T), np.ascontiguousarray(header))
    q2 = f.dot(ind, cols)
    return q1 == q2


def is_consistent(pkt, x, params):
    """Whether the payload equals the combination of X its header claims."""
    header = pkt.header(params)
    return bool(np.array_equal(pkt.w, params.field.lincomb(header, x)))


def decode(packets, params):
    """Solve Y = T X by Gaussian elimination on the coefficient-header columns.

    Returns the n*r message symbols; raises DecodeFailure when fewer than r
    packets are given or their headers have rank below r.
    """
    f, n, r = params.field, params.n, params.r
    if len(packets) < r:
        raise DecodeFailure("insufficient", rank=None)
    rows = [p.w.copy() for p in packets]
    for col in range(r):
        c = n + col
        pivot = next((k for k in range(col, len(rows)) if rows[k][c]), None)
        if pivot is None:
            raise DecodeFailure("rank-deficient", rank=col)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        rows[col] = f.scale(f.inv(rows[col][c]), rows[col])
        for k in range(len(rows)):
            if k != col and rows[k][c]:
                rows[k] = f.vsub(rows[k], f.scale(rows[k][c], rows[col]))
    return np.concatenate([rows[i][:n] for i in range(r)])


# -- running the code over a network ---------------------------------------

class RandomMixing:
    """Fresh uniform coefficients per outgoing edge, drawn from ``rng``."""

    deterministic = False

    def __init__(self, rng):
        self.rng = rng

    def coefficients(self, edge, k, field):
        return field.random(self.rng, k)


class CoefficientTable:
    """A fixed coefficient vector per edge: length r on source edges, in-degree elsewhere."""

    deterministic = True

    def __init__(self, table):
        self.table = dict(table)

    @classmethod
    def generate(cls, net, params, seed=0):
        rng = np.random.default_rng(seed)
        f = params.field
        table = {}
        for e in net.edges:
            k = params.r if e.tail == net.source else len(net.in_edges(e.tail))
            table[e.id] = f.random(rng, k)
        return cls(table)

    def coefficients(self, edge, k, field):
        coeffs = self.table[edge.id]
        if coeffs.size != k:
            raise ConfigurationError(f"coefficient table entry for {edge.id} has {coeffs.size} slots, need {k}")
        return coeffs


@dataclass
class Transcript:
    """Everything that happened in one transmission.

    ``packets`` holds what each edge delivered; ``honest`` what the tail's
    honest procedure produced (differs only on tampered edges); ``verdicts``
    the head node's check of each delivered packet; ``decoded`` a message
    array or DecodeFailure per destination.
    """

    packets: dict = dc_field(default_factory=dict)
    honest: dict = dc_field(default_factory=dict)
    verdicts: dict = dc_field(default_factory=dict)
    decoded: dict = dc_field(default_factory=dict)
    originals: list = dc_field(default_factory=list)


def run_network(net, params, message, secrets, mixing, attacked=(), tamper=None):
    """Send one message through the network in topological order.

    Every non-source node verifies its incoming packets with its own secrets
    and sends combinations of the valid ones; destinations also decode. For
    edges in ``attacked``, ``tamper(edge, honest_packet, delivered_so_far)``
    chooses what is actually delivered. The third argument is a read-only
    view of packets already delivered on earlier edges.
    """
    f = params.field
    attacked = frozenset(attacked)
    tr = Transcript()
    tr.originals = source_packets(message, secrets, params)
    for v in topo_order(net):
        outs = net.out_edges(v)
        if v == net.source:
            for e in outs:
                tr.honest[e.id] = _combine(mixing.coefficients(e, params.r, f), tr.originals, params)
        else:
            ins = net.in_edges(v)
            valid = []
            for e in ins:
                pkt = tr.packets[e.id]
                ok = verify_packet(pkt, secrets[v] if params.with_secrets else None,
                                   params.index(v) if params.with_secrets else 0, params)
                tr.verdicts[e.id] = ok
                valid.append(ok)
            good = [tr.packets[e.id] for e, ok in zip(ins, valid) if ok]
            if v in net.destinations:
                try:
                    tr.decoded[v] = decode(good, params)
                except DecodeFailure as exc:
                    tr.decoded[v] = exc
            for e in outs:
                coeffs = mixing.coefficients(e, len(ins), f)
                if not good:
                    tr.honest[e.id] = null_packet(params)
                    continue
                kept = [c for c, ok in zip(coeffs, valid) if ok]
                tr.honest[e.id] = _combine(kept, good, params)
        for e in outs:
            pkt = tr.honest[e.id]
            if e.id in attacked and tamper is not None:
                pkt = tamper(e, pkt, MappingProxyType(dict(tr.packets)))
            tr.packets[e.id] = pkt
    return tr


def reference_payloads(net, params, message, table):
    """Per-edge payloads of an unattacked run under a fixed coefficient table.

    Needs no secrets: without an attack every packet is valid, so the
    payloads match those of the run with hash headers.
    """
    if not table.deterministic:
        raise ConfigurationError("reference payloads need a fixed coefficient table")
    tr = run_network(net, params.without_secrets(), message, None, table)
    return {eid: p.w for eid, p in tr.packets.items()}
