"""Neuron types, port addressing and the sparse network matrix.

Rows of the matrix are input ports, columns are output ports. The matrix is
countable in principle (every type has an instance for every natural index)
but only finitely many entries are ever nonzero.
"""
from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

from .streams import (
    BUILTIN_KINDS,
    MATRIX,
    Family,
    SparseVector,
    StreamError,
    StreamKind,
    lin_comb,
)

IN = "in"
OUT = "out"


class SignatureError(StreamError):
    """Kind or port mismatch against the network signature."""


@dataclass(frozen=True)
class NeuronType:
    name: str
    inputs: tuple[tuple[str, StreamKind], ...] = ()
    outputs: tuple[tuple[str, StreamKind], ...] = ()
    transform: str = "identity"

    def __post_init__(self):
        names = [p for p, _ in self.inputs] + [p for p, _ in self.outputs]
        dup = {p for p in names if names.count(p) > 1}
        if dup:
            raise SignatureError(f"type {self.name}: duplicate port names {sorted(dup)}")

    def input_kind(self, port: str) -> StreamKind | None:
        return dict(self.inputs).get(port)

    def output_kind(self, port: str) -> StreamKind | None:
        return dict(self.outputs).get(port)


@dataclass(frozen=True, order=True)
class NeuronInstance:
    type: str
    index: int

    def __str__(self) -> str:
        return f"{self.type}#{self.index}"


@dataclass(frozen=True)
class PortRef:
    neuron: NeuronInstance
    port: str
    direction: str
    # carried for fast kind checks; determined by (neuron.type, port)
    kind: StreamKind = field(compare=False, hash=False, repr=False, default=None)

    def __str__(self) -> str:
        return f"{self.neuron}.{self.port}"

    def sort_key(self) -> tuple:
        return (self.neuron.type, self.neuron.index, self.port)


SELF_TYPE = NeuronType(
    "self-matrix",
    inputs=(("delta-sum", MATRIX),),
    outputs=(("current-matrix", MATRIX),),
    transform="identity",
)
SELF = NeuronInstance("self-matrix", 0)
SELF_IN = PortRef(SELF, "delta-sum", IN, MATRIX)
SELF_OUT = PortRef(SELF, "current-matrix", OUT, MATRIX)


class Signature:
    """Stream kinds and neuron types available to a network."""

    def __init__(self, kinds: Iterable[StreamKind] = (), types: Iterable[NeuronType] = ()):
        self.kinds: dict[str, StreamKind] = dict(BUILTIN_KINDS)
        self.types: dict[str, NeuronType] = {SELF_TYPE.name: SELF_TYPE}
        for k in kinds:
            self.add_kind(k)
        for t in types:
            self.add_type(t)

    def add_kind(self, kind: StreamKind) -> None:
        old = self.kinds.get(kind.name)
        if old is not None and old != kind:
            raise SignatureError(f"kind {kind.name} redeclared with family {kind.family.value}")
        self.kinds[kind.name] = kind

    def add_type(self, t: NeuronType) -> None:
        if t.name in self.types and self.types[t.name] != t:
            raise SignatureError(f"neuron type {t.name} already declared")
        for _, k in t.inputs + t.outputs:
            if self.kinds.get(k.name) != k:
                raise SignatureError(f"type {t.name}: unknown kind {k.name}")
        self.types[t.name] = t

    def port(self, neuron: NeuronInstance, port: str, direction: str) -> PortRef:
        t = self.types.get(neuron.type)
        if t is None:
            raise SignatureError(f"unknown neuron type {neuron.type}")
        kind = t.input_kind(port) if direction == IN else t.output_kind(port)
        if kind is None:
            raise SignatureError(f"{neuron} has no {direction}put port {port!r}")
        return PortRef(neuron, port, direction, kind)

    def input_ports(self, neuron: NeuronInstance) -> list[PortRef]:
        t = self.types[neuron.type]
        return [PortRef(neuron, p, IN, k) for p, k in t.inputs]

    def output_ports(self, neuron: NeuronInstance) -> list[PortRef]:
        t = self.types[neuron.type]
        return [PortRef(neuron, p, OUT, k) for p, k in t.outputs]


def _check_port(key, direction: str) -> None:
    if not isinstance(key, PortRef) or key.direction != direction:
        raise SignatureError(f"expected an {direction}put PortRef, got {key!r}")


class RowMask(SparseVector):
    """Finitely supported weights over input ports (matrix rows)."""

    __slots__ = ()
    family = Family.ROW

    @classmethod
    def _check_key(cls, key) -> None:
        _check_port(key, IN)


class ColumnMask(SparseVector):
    """Finitely supported weights over output ports (matrix columns)."""

    __slots__ = ()
    family = Family.COLUMN

    @classmethod
    def _check_key(cls, key) -> None:
        _check_port(key, OUT)


class NetworkMatrix(SparseVector):
    """Weights keyed by ``(input port, output port)``.

    A nonzero entry may only join ports of the same stream kind.
    """

    __slots__ = ("__dict__",)
    family = Family.MATRIX

    @classmethod
    def _check_key(cls, key) -> None:
        if not (isinstance(key, tuple) and len(key) == 2):
            raise SignatureError(f"matrix key must be (input, output), got {key!r}")
        i, o = key
        _check_port(i, IN)
        _check_port(o, OUT)
        if i.kind is not None and o.kind is not None and i.kind != o.kind:
            raise SignatureError(f"kind mismatch: {i} is {i.kind}, {o} is {o.kind}")

    @cached_property
    def by_row(self) -> dict[PortRef, list[tuple[PortRef, float]]]:
        rows: dict[PortRef, list] = {}
        for (i, o), w in self._data.items():
            rows.setdefault(i, []).append((o, w))
        return rows

    @cached_property
    def by_column(self) -> dict[PortRef, list[tuple[PortRef, float]]]:
        cols: dict[PortRef, list] = {}
        for (i, o), w in self._data.items():
            cols.setdefault(o, []).append((i, w))
        return cols

    @cached_property
    def neurons(self) -> frozenset[NeuronInstance]:
        out = set()
        for i, o in self._data:
            out.add(i.neuron)
            out.add(o.neuron)
        return frozenset(out)

    def entries(self) -> list[tuple[PortRef, PortRef, float]]:
        return sorted(
            ((i, o, w) for (i, o), w in self._data.items()),
            key=lambda t: (t[0].sort_key(), t[1].sort_key()),
        )

    def to_records(self) -> list[dict]:
        return [{"in": str(i), "out": str(o), "w": w} for i, o, w in self.entries()]


def add_to_weight(W: NetworkMatrix, inp: PortRef, out: PortRef, delta: float) -> NetworkMatrix:
    return NetworkMatrix.combine([(1.0, W), (1.0, NetworkMatrix({(inp, out): delta}))])


def down_movement(W: NetworkMatrix, outputs: Mapping[PortRef, object]) -> dict[PortRef, object]:
    """Recompute every input port with a nonzero row from the outputs.

    Output ports missing from ``outputs`` contribute their kind's zero, which
    means they are simply skipped.
    """
    inputs = {}
    for i, row in W.by_row.items():
        terms = [(w, outputs[o]) for o, w in row if o in outputs]
        inputs[i] = lin_comb(i.kind, terms)
    return inputs


def active_neurons(W: NetworkMatrix, silent: Iterable[NeuronInstance] = ()) -> set[NeuronInstance]:
    active = set(W.neurons)
    active.difference_update(silent)
    active.add(SELF)
    return active


def neuron_is_free(W: NetworkMatrix, sig: Signature, n: NeuronInstance) -> bool:
    rows, cols = W.by_row, W.by_column
    return not any(p in rows for p in sig.input_ports(n)) and not any(
        p in cols for p in sig.output_ports(n)
    )


def allocate_fresh_block(
    W: NetworkMatrix,
    silent: Iterable[NeuronInstance],
    reserved: Iterable[NeuronInstance],
    neurons: Iterable[NeuronInstance],
    sig: Signature,
) -> dict[NeuronInstance, NeuronInstance]:
    """Map each neuron to the lowest-index unused instance of its type."""
    taken = set(silent) | set(reserved) | set(neurons)
    mapping = {}
    for n in sorted(neurons):
        if n == SELF:
            raise SignatureError("the Self neuron cannot be copied")
        idx = 0
        while True:
            cand = NeuronInstance(n.type, idx)
            if cand not in taken and neuron_is_free(W, sig, cand):
                break
            idx += 1
        mapping[n] = cand
        taken.add(cand)
    return mapping


_DUMP_LINE = re.compile(
    r"^\s*(?P<it>[^#\s]+)#(?P<ii>\d+)\.(?P<ip>\S+)\s*<-\s*"
    r"(?P<ot>[^#\s]+)#(?P<oi>\d+)\.(?P<op>\S+)\s*:\s*(?P<w>\S+)\s*$"
)


def dump_matrix(W: NetworkMatrix) -> str:
    lines = [f"{i} <- {o} : {w!r}" for i, o, w in W.entries()]
    return "\n".join(lines) + ("\n" if lines else "")


def load_matrix(text: str, sig: Signature) -> NetworkMatrix:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        m = _DUMP_LINE.match(line)
        if m is None:
            raise ValueError(f"line {lineno}: cannot parse matrix entry {line!r}")
        i = sig.port(NeuronInstance(m["it"], int(m["ii"])), m["ip"], IN)
        o = sig.port(NeuronInstance(m["ot"], int(m["oi"])), m["op"], OUT)
        entries[(i, o)] = float(m["w"])
    return NetworkMatrix(entries)
