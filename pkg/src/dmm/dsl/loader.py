"""Turn a parsed program into a runnable :class:`~dmm.engine.Network`.

The loader doubles as the validator: in collecting mode every problem is
recorded as a :class:`Diagnostic` and loading carries on with the next
statement.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..engine import Network
from ..network import (
    IN,
    OUT,
    SELF,
    SELF_IN,
    SELF_OUT,
    ColumnMask,
    NetworkMatrix,
    NeuronInstance,
    NeuronType,
    PortRef,
    RowMask,
    Signature,
    SignatureError,
    add_to_weight,
    allocate_fresh_block,
)
from ..reflection import (
    CopyError,
    CopyVariant,
    SubgraphSpec,
    deep_copy,
    subgraph_from_masks,
    update_weights_generic,
)
from ..streams import Family, StreamError, StreamKind
from ..transforms import TransformRegistry, default_registry
from .parser import (
    CellTypeDecl,
    GenericUpdate,
    KindDecl,
    Mask,
    NeuronDecl,
    NewCopy,
    Placeholder,
    Program,
    SilentDecl,
    SubgraphDecl,
    UpdateWeights,
)

SELF_NAME = "Self"
DEFAULT_VARIANT = 2
_FAMILIES = {f.value: f for f in Family} | {"real": Family.SCALAR}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    line: int | None = None
    column: int | None = None
    file: str | None = None

    def __str__(self) -> str:
        where = self.file or "<input>"
        if self.line is not None:
            where += f":{self.line}:{self.column}"
        return f"{where}: {self.severity}: {self.message}"


class LoadError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == "error"]
        super().__init__("\n".join(map(str, errors)))


class _Fail(Exception):
    pass


class SymbolTable:
    """Names visible to a program: neurons, port aliases, subgraphs, copies."""

    def __init__(self, sig: Signature):
        self.sig = sig
        self.neurons: dict[str, NeuronInstance] = {SELF_NAME: SELF}
        self.aliases: dict[str, list[PortRef]] = {}
        self.subgraphs: dict[str, frozenset[NeuronInstance]] = {}
        self.copies: dict[str, dict[NeuronInstance, NeuronInstance]] = {}

    def taken(self, name: str) -> bool:
        return name in self.neurons or name in self.subgraphs

    def _namespace(self, head: str):
        if head in self.copies:
            return self.copies[head], head
        if head in self.subgraphs:
            return {n: n for n in self.subgraphs[head]}, head
        return None, None

    def neuron(self, name: str) -> NeuronInstance:
        if name in self.neurons:
            return self.neurons[name]
        head, _, rest = name.partition(".")
        if rest:
            mapping, ns = self._namespace(head)
            if mapping is not None:
                n = self.neuron(rest)
                if n not in mapping:
                    raise LookupError(f"{rest} is not part of subgraph {ns}")
                return mapping[n]
        raise LookupError(f"unknown neuron {name!r}")

    def group(self, name: str) -> frozenset[NeuronInstance]:
        """A subgraph or copy by name, or a single neuron."""
        if name in self.subgraphs:
            return self.subgraphs[name]
        return frozenset({self.neuron(name)})

    def port(self, name: str, direction: str | None = None) -> PortRef:
        if name in self.aliases:
            cands = self.aliases[name]
            if direction is not None:
                cands = [p for p in cands if p.direction == direction]
            if len(cands) == 1:
                return cands[0]
            if len(cands) > 1:
                raise LookupError(f"alias {name!r} is ambiguous: {', '.join(map(str, cands))}")
        head, _, rest = name.partition(".")
        if rest:
            mapping, ns = self._namespace(head)
            if mapping is not None:
                p = self.port(rest, direction)
                if p.neuron not in mapping:
                    raise LookupError(f"{rest} does not belong to subgraph {ns}")
                return PortRef(mapping[p.neuron], p.port, p.direction, p.kind)
            if head in self.neurons:
                n = self.neurons[head]
                t = self.sig.types[n.type]
                found = []
                if direction in (None, IN) and t.input_kind(rest) is not None:
                    found.append(self.sig.port(n, rest, IN))
                if direction in (None, OUT) and t.output_kind(rest) is not None:
                    found.append(self.sig.port(n, rest, OUT))
                if len(found) == 1:
                    return found[0]
                if found:
                    raise LookupError(f"{name!r} names both an input and an output")
        if name in self.aliases:
            raise LookupError(f"alias {name!r} is not an {direction}put port")
        raise LookupError(f"unknown port alias {name!r}")


class Loader:
    def __init__(self, registry: TransformRegistry | None = None, collect: bool = False):
        self.registry = registry if registry is not None else default_registry()
        self.collect = collect
        self.sig = Signature()
        self.symbols = SymbolTable(self.sig)
        self.W = NetworkMatrix({(SELF_IN, SELF_OUT): 1.0})
        self.silent: set[NeuronInstance] = set()
        self.declared: list[NeuronInstance] = []
        self.reserved: set[NeuronInstance] = {SELF}
        self.origin: dict[NeuronInstance, str | None] = {}
        self.inits: list[tuple[NeuronInstance, object, object]] = []
        self.copy_log: list[dict] = []
        self.diagnostics: list[Diagnostic] = []
        self.file = None

    # -- diagnostics ------------------------------------------------------------

    def _diag(self, severity, message, pos=None):
        line = pos.line if pos else None
        col = pos.column if pos else None
        self.diagnostics.append(Diagnostic(severity, message, line, col, self.file))

    def error(self, message, pos=None):
        self._diag("error", message, pos)
        raise _Fail

    def warn(self, message, pos=None):
        self._diag("warning", message, pos)

    # -- entry point --------------------------------------------------------------

    def load(self, program: Program) -> Network:
        self.file = program.file
        for msg, line, col in program.warnings:
            self.diagnostics.append(Diagnostic("warning", msg, line, col, self.file))
        handlers = {
            KindDecl: self.kind, CellTypeDecl: self.celltype, NeuronDecl: self.neuron,
            UpdateWeights: self.update, GenericUpdate: self.generic_update,
            SubgraphDecl: self.subgraph, NewCopy: self.new_copy, SilentDecl: self.silence,
        }
        for stmt in program.statements:
            try:
                handlers[type(stmt)](stmt)
            except _Fail:
                if not self.collect:
                    break
        params = self._finish()
        if any(d.severity == "error" for d in self.diagnostics):
            raise LoadError(self.diagnostics)
        return Network(
            self.sig, self.W, self.registry,
            silent=self.silent, reserved=self.reserved, params=params, symbols=self.symbols,
        )

    # -- statements ------------------------------------------------------------------

    def kind(self, s: KindDecl):
        known = self.sig.kinds.get(s.name)
        if s.family is None:
            if known is None:
                self.error(f"unknown stream kind {s.name!r}; give it a '#family'", s.pos)
            return
        fam = _FAMILIES.get(s.family)
        if fam is None:
            self.error(f"unknown stream family {s.family!r}", s.pos)
        try:
            self.sig.add_kind(StreamKind(s.name, fam))
        except SignatureError as e:
            self.error(str(e), s.pos)

    def celltype(self, s: CellTypeDecl):
        if s.name in self.sig.types:
            self.error(f"duplicate cell type {s.name}", s.pos)
        ports = {"input": [], "output": []}
        for direction, kind, port in s.ports:
            k = self.sig.kinds.get(kind)
            if k is None:
                self.error(f"unknown stream kind {kind!r}", s.pos)
            ports[direction].append((port, k))
        try:
            tid = self.registry.resolve_type(s.name, s.transform)
            t = NeuronType(s.name, tuple(ports["input"]), tuple(ports["output"]), tid)
            self.registry[tid].check(t)
            self.sig.add_type(t)
        except SignatureError as e:
            self.error(str(e), s.pos)

    def _bind(self, t: NeuronType, pairs, direction, pos):
        declared = list(t.inputs if direction == IN else t.outputs)
        names = [p for p, _ in declared]
        named = {p for p, _ in pairs if p in names}
        out = []
        for idx, (port, alias) in enumerate(pairs):
            if port not in names:
                # tolerate a misspelt port when its position identifies it
                if idx < len(names) and names[idx] not in named:
                    self.warn(
                        f"{t.name} has no {direction}put port {port!r}; "
                        f"binding {alias!r} to {names[idx]!r} by position", pos)
                    port = names[idx]
                    named.add(port)
                else:
                    self.error(f"{t.name} has no {direction}put port {port!r}", pos)
            out.append((port, alias))
        seen = [p for p, _ in out]
        if len(set(seen)) != len(seen):
            self.error(f"port bound twice in declaration of a {t.name} neuron", pos)
        return out

    def _fresh_index(self, type_name: str) -> NeuronInstance:
        idx = 0
        while True:
            n = NeuronInstance(type_name, idx)
            if n not in self.reserved and n not in self.W.neurons:
                return n
            idx += 1

    def neuron(self, s: NeuronDecl):
        t = self.sig.types.get(s.type)
        if t is None or s.type == SELF.type:
            self.error(f"unknown cell type {s.type!r}", s.pos)
        if self.symbols.taken(s.name):
            self.error(f"duplicate declaration of {s.name!r}", s.pos)
        outs = self._bind(t, s.outputs, OUT, s.pos)
        ins = self._bind(t, s.inputs, IN, s.pos)
        n = self._fresh_index(t.name)
        self.symbols.neurons[s.name] = n
        self.declared.append(n)
        self.reserved.add(n)
        self.origin[n] = None
        for direction, pairs in ((OUT, outs), (IN, ins)):
            for port, alias in pairs:
                self.symbols.aliases.setdefault(alias, []).append(self.sig.port(n, port, direction))
        if s.init is not None:
            self.inits.append((n, s.init, s.pos))

    def _port(self, name, direction, pos) -> PortRef:
        if isinstance(name, Placeholder):
            self.error(f"placeholder {name.text} cannot be loaded", pos)
        try:
            return self.symbols.port(name, direction)
        except (LookupError, SignatureError) as e:
            self.error(str(e), pos)

    def update(self, s: UpdateWeights):
        i = self._port(s.target, IN, s.pos)
        o = self._port(s.source, OUT, s.pos)
        if i.kind != o.kind:
            self.error(f"kind mismatch: {s.target} ({i}) is {i.kind}, {s.source} ({o}) is {o.kind}",
                       s.pos)
        if i == SELF_IN and o == SELF_OUT:
            self.error("the self-loop of Self is fixed at 1", s.pos)
        self.W = add_to_weight(self.W, i, o, s.coef)

    def _mask(self, operand, direction, pos):
        if isinstance(operand, Placeholder):
            self.error(f"placeholder {operand.text} cannot be loaded", pos)
        entries = operand.entries if isinstance(operand, Mask) else ((operand, 1.0),)
        data = {}
        for name, coef in entries:
            p = self._port(name, direction, pos)
            data[p] = data.get(p, 0.0) + coef
        return (RowMask if direction == IN else ColumnMask)(data)

    def generic_update(self, s: GenericUpdate):
        gamma = self._mask(s.gamma, IN, s.pos)
        alpha = self._mask(s.alpha, OUT, s.pos)
        beta = self._mask(s.beta, IN, s.pos)
        try:
            W = update_weights_generic(self.W, gamma, alpha, beta)
        except SignatureError as e:
            self.error(str(e), s.pos)
        if W[(SELF_IN, SELF_OUT)] != 1.0:
            self.error("the self-loop of Self is fixed at 1", s.pos)
        self.W = W

    def _neuron(self, name, pos) -> NeuronInstance:
        try:
            return self.symbols.neuron(name)
        except LookupError as e:
            self.error(str(e), pos)

    def subgraph(self, s: SubgraphDecl):
        if self.symbols.taken(s.name):
            self.error(f"duplicate declaration of {s.name!r}", s.pos)
        members = set()
        for cell in s.cells:
            if isinstance(cell, Placeholder):
                self.error(f"placeholder {cell.text} cannot be loaded", s.pos)
            n = self._neuron(cell, s.pos)
            if n == SELF:
                self.error("Self cannot be part of a subgraph", s.pos)
            members.add(n)
        origins = {self.origin.get(n) for n in members}
        if len(origins) > 1:
            self.warn(f"subgraph {s.name} mixes neurons from different copies", s.pos)
        self.symbols.subgraphs[s.name] = frozenset(members)

    def new_copy(self, s: NewCopy):
        if self.symbols.taken(s.name):
            self.error(f"duplicate declaration of {s.name!r}", s.pos)
        members = self.symbols.subgraphs.get(s.source)
        if members is None:
            self.error(f"unknown subgraph {s.source!r}", s.pos)
        try:
            variant = CopyVariant(DEFAULT_VARIANT if s.variant is None else s.variant, s.alpha)
            fresh = allocate_fresh_block(self.W, self.silent, self.reserved, members, self.sig)
            self.W = deep_copy(self.W, SubgraphSpec(s.source, members), fresh, variant, self.sig)
        except (CopyError, SignatureError, StreamError) as e:
            self.error(str(e), s.pos)
        self.symbols.copies[s.name] = fresh
        self.symbols.subgraphs[s.name] = frozenset(fresh.values())
        self.reserved.update(fresh.values())
        for n in fresh.values():
            self.origin[n] = s.name
        self.copy_log.append(fresh)

    def silence(self, s: SilentDecl):
        if s.name in self.symbols.subgraphs:
            targets = set(self.symbols.group(s.name))
        else:
            targets = {self._neuron(s.name, s.pos)}
        if SELF in targets:
            self.error("the Self neuron cannot be silenced", s.pos)
        if s.flag:
            self.silent |= targets
        else:
            self.silent -= targets

    # -- whole-program checks ------------------------------------------------------

    def _finish(self) -> dict:
        params = {}
        for n, literal, pos in self.inits:
            try:
                params[n] = self._init_value(n, literal, pos)
            except _Fail:
                pass
        for fresh in self.copy_log:
            for src, dst in fresh.items():
                if src in params:
                    params[dst] = params[src]
        used = self.W.neurons
        # a rejected statement often leaves neurons unconnected; don't pile on
        failed = any(d.severity == "error" for d in self.diagnostics)
        for name, n in self.symbols.neurons.items():
            if not failed and n != SELF and n not in used:
                self.warn(f"neuron {name} has no connections and will never run")
        self._check_copy_masks(params)
        return params

    def _init_value(self, n, literal, pos):
        tid = self.sig.types[n.type].transform
        if tid in ("row-const", "column-const"):
            if not isinstance(literal, Mask):
                self.error(f"{tid} neurons take a mask literal", pos)
            return self._mask(literal, IN if tid == "row-const" else OUT, pos)
        if isinstance(literal, Mask):
            self.error(f"{tid} neurons do not take a mask literal", pos)
        if tid == "deep-copy-v4":
            if not 0.0 <= literal <= 1.0:
                self.error(f"variant 4 alpha must lie in [0, 1], got {literal}", pos)
            return literal
        if tid == "input-real":
            return literal
        self.error(f"{tid} neurons take no '#init' value", pos)

    def _check_copy_masks(self, params):
        rows = self.W.by_row
        for n in self.declared:
            if not self.sig.types[n.type].transform.startswith("deep-copy"):
                continue
            ins = self.sig.input_ports(n)
            feeds = []
            for p, zero in ((ins[1], RowMask.zero()), (ins[2], ColumnMask.zero())):
                acc = zero
                for o, w in rows.get(p, ()):
                    v = params.get(o.neuron)
                    if isinstance(v, type(zero)):
                        acc = acc + v.scale(w)
                feeds.append(acc)
            if not feeds[0] and not feeds[1]:
                continue
            try:
                subgraph_from_masks(feeds[0], feeds[1], self.sig)
            except CopyError as e:
                self._diag("error", f"deep-copy neuron {n}: {e}")


def load(program: Program, registry: TransformRegistry | None = None) -> Network:
    return Loader(registry).load(program)


def validate(program: Program, registry: TransformRegistry | None = None) -> list[Diagnostic]:
    loader = Loader(registry, collect=True)
    try:
        loader.load(program)
    except LoadError:
        pass
    return loader.diagnostics
