"""Clocked two-phase interpreter.

One tick runs the up movement (every active neuron applies its transform to
the inputs computed on the previous tick), refreshes the network matrix from
the output of ``Self`` and then runs the down movement (every input becomes
a linear combination of outputs through the matrix). A signal therefore
needs exactly one tick per hop.
"""
from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

from .network import (
    IN,
    SELF,
    SELF_IN,
    SELF_OUT,
    NetworkMatrix,
    NeuronInstance,
    PortRef,
    Signature,
    SignatureError,
    active_neurons,
    down_movement,
)
from .streams import CVector, SparseVector, StreamError, check_value, zero_of
from .transforms import StringFeed, TransformFault, TransformRegistry, default_registry

log = logging.getLogger(__name__)


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class HaltRecord:
    answer: bool
    tick: int


@dataclass
class RunResult:
    halted: bool
    tick: int
    answer: bool | None = None
    trace: list[dict] = field(default_factory=list)

    def line(self) -> str:
        if self.halted:
            return f"answer={'true' if self.answer else 'false'} tick={self.tick}"
        return f"timeout tick={self.tick}"


def value_to_json(v):
    if isinstance(v, CVector):
        return v.to_json()
    if isinstance(v, NetworkMatrix):
        return v.to_records()
    if isinstance(v, SparseVector):
        return {str(p): w for p, w in sorted(v.items(), key=lambda kv: kv[0].sort_key())}
    return v


class _Context:
    """What a transform may see and do during one evaluation."""

    __slots__ = ("net", "neuron", "param", "tick", "halted")

    def __init__(self, net: Network, tick: int):
        self.net = net
        self.tick = tick
        self.neuron = None
        self.param = None
        self.halted: HaltRecord | None = None

    @property
    def signature(self) -> Signature:
        return self.net.signature

    @property
    def matrix(self) -> NetworkMatrix:
        return self.net.matrix

    @property
    def silent(self) -> frozenset:
        return frozenset(self.net.silent)

    @property
    def reserved(self) -> frozenset:
        return frozenset(self.net.reserved)

    def reserve(self, neurons: Iterable[NeuronInstance]) -> None:
        self.net.reserved.update(neurons)

    def adopt(self, fresh: dict) -> None:
        """Give freshly copied neurons the external bindings of their originals."""
        params = self.net.params
        for src, dst in fresh.items():
            if src in params:
                params[dst] = params[src]

    def halt(self, answer: bool) -> None:
        # committed by the engine once the whole tick has succeeded
        if self.halted is None:
            self.halted = HaltRecord(bool(answer), self.tick)

    def flag(self, message: str) -> None:
        self.net.diagnostics.append(f"tick {self.tick}: {self.neuron}: {message}")
        log.warning("tick %d: %s: %s", self.tick, self.neuron, message)


class Network:
    """The evolving state of one network, advanced one tick at a time.

    The connectivity matrix lives only as the output of ``Self``.
    """

    def __init__(
        self,
        signature: Signature,
        matrix: NetworkMatrix | None = None,
        registry: TransformRegistry | None = None,
        *,
        silent: Iterable[NeuronInstance] = (),
        reserved: Iterable[NeuronInstance] = (),
        params: dict | None = None,
        symbols=None,
    ):
        self.signature = signature
        self.registry = registry if registry is not None else default_registry()
        for t in signature.types.values():
            if t.transform not in self.registry:
                raise SignatureError(f"type {t.name}: unknown transform {t.transform!r}")
            self.registry[t.transform].check(t)
        W = NetworkMatrix.zero() if matrix is None else matrix
        if W[(SELF_IN, SELF_OUT)] != 1.0:
            W = W + NetworkMatrix({(SELF_IN, SELF_OUT): 1.0 - W[(SELF_IN, SELF_OUT)]})
        self.silent: set[NeuronInstance] = set(silent)
        if SELF in self.silent:
            raise EngineError("the Self neuron cannot be silent")
        self.reserved: set[NeuronInstance] = set(reserved)
        self.params: dict[NeuronInstance, object] = dict(params or {})
        # name lookups for neurons and port aliases, usually the loader's table
        self.symbols = symbols
        self.memory: dict[NeuronInstance, object] = {}
        self.outputs: dict[PortRef, object] = {SELF_OUT: W}
        self.inputs: dict[PortRef, object] = down_movement(W, self.outputs)
        self.tick_count = 0
        self.halt: HaltRecord | None = None
        self.executions: Counter = Counter()
        self.diagnostics: list[str] = []
        self.watched: list[PortRef] = []
        self.trace: list[dict] | None = None
        self.on_record: Callable[[dict], None] | None = None
        self._ports: dict[NeuronInstance, tuple] = {}
        self._active_key = None
        self._active: list[NeuronInstance] = []

    # -- state access ------------------------------------------------------------

    @property
    def matrix(self) -> NetworkMatrix:
        return self.outputs[SELF_OUT]

    @property
    def user_matrix(self) -> NetworkMatrix:
        """The matrix without the bookkeeping loop of ``Self``."""
        W = self.matrix
        return W - NetworkMatrix({(SELF_IN, SELF_OUT): 1.0})

    def active(self) -> list[NeuronInstance]:
        W = self.matrix
        silent = frozenset(self.silent)
        if self._active_key is None or self._active_key[0] is not W or self._active_key[1] != silent:
            self._active = sorted(active_neurons(W, silent))
            self._active_key = (W, silent)
        return self._active

    def neuron(self, name) -> NeuronInstance:
        if isinstance(name, NeuronInstance):
            return name
        if self.symbols is None:
            raise EngineError(f"no symbol table to look up neuron {name!r}")
        try:
            return self.symbols.neuron(name)
        except LookupError as e:
            raise EngineError(str(e)) from None

    def group(self, name) -> frozenset[NeuronInstance]:
        if isinstance(name, NeuronInstance):
            return frozenset({name})
        if self.symbols is None:
            raise EngineError(f"no symbol table to look up {name!r}")
        try:
            return self.symbols.group(name)
        except LookupError as e:
            raise EngineError(str(e)) from None

    def port(self, alias) -> PortRef:
        if isinstance(alias, PortRef):
            return alias
        if self.symbols is None:
            raise EngineError(f"no symbol table to look up port {alias!r}")
        try:
            return self.symbols.port(alias)
        except LookupError as e:
            raise EngineError(str(e)) from None

    def value(self, port) -> object:
        p = self.port(port)
        table = self.inputs if p.direction == IN else self.outputs
        v = table.get(p)
        return zero_of(p.kind) if v is None else v

    def _neuron_ports(self, n: NeuronInstance):
        ports = self._ports.get(n)
        if ports is None:
            sig = self.signature
            ports = (sig.input_ports(n), sig.output_ports(n))
            self._ports[n] = ports
        return ports

    # -- configuration -----------------------------------------------------------

    def bind(self, name, value, rate: int = 1) -> None:
        """Attach external data to an emitter neuron."""
        n = self.neuron(name)
        tr = self.registry[self.signature.types[n.type].transform]
        if not tr.emitter:
            raise EngineError(f"{name} ({n.type}) is not an emitter and cannot take a feed")
        if tr.id == "input-string":
            if isinstance(value, str):
                value = StringFeed(value, rate)
        elif tr.id == "input-real" and isinstance(value, str):
            value = float(value)
        self.params[n] = value
        self.memory.pop(n, None)

    def watch(self, *ports) -> None:
        for p in ports:
            self.watched.append(self.port(p))
        if self.trace is None:
            self.trace = []

    def set_silent(self, neurons: Iterable, flag: bool = True) -> None:
        """Silence or wake neurons; names may also denote subgraphs or copies."""
        neurons = {m for n in neurons for m in self.group(n)}
        if SELF in neurons:
            raise EngineError("the Self neuron cannot be silenced")
        if flag:
            newly = neurons - self.silent
            self.silent |= newly
            for n in newly:
                for p in self._neuron_ports(n)[1]:
                    self.outputs.pop(p, None)
                self.memory.pop(n, None)
            if newly:
                self.inputs = down_movement(self.matrix, self.outputs)
        else:
            waking = neurons & self.silent
            self.silent -= waking
            for n in waking:
                self.memory.pop(n, None)

    # -- execution ---------------------------------------------------------------

    def _emit(self, record: dict) -> None:
        if self.trace is not None:
            self.trace.append(record)
        if self.on_record is not None:
            self.on_record(record)

    def tick(self) -> None:
        if self.halt is not None:
            raise EngineError(f"network halted at tick {self.halt.tick}")
        t = self.tick_count + 1
        ctx = _Context(self, t)
        registry, types = self.registry, self.signature.types
        inputs, memory = self.inputs, self.memory
        new_outputs: dict[PortRef, object] = {}
        new_memory: dict[NeuronInstance, object] = {}
        for n in self.active():
            in_ports, out_ports = self._neuron_ports(n)
            tr = registry[types[n.type].transform]
            ctx.neuron, ctx.param = n, self.params.get(n)
            args = []
            for p in in_ports:
                v = inputs.get(p)
                args.append(zero_of(p.kind) if v is None else v)
            try:
                mem = memory[n] if n in memory else tr.init(ctx)
                outs, new_memory[n] = tr.fn(args, mem, ctx)
                if len(outs) != len(out_ports):
                    raise StreamError(f"produced {len(outs)} outputs, type declares {len(out_ports)}")
                for p, v in zip(out_ports, outs):
                    check_value(p.kind, v)
                    new_outputs[p] = v
            except TransformFault:
                raise
            except (StreamError, ValueError, TypeError) as e:
                raise TransformFault(n, str(e)) from e
            self.executions[n] += 1
        W = new_outputs[SELF_OUT]
        if W[(SELF_IN, SELF_OUT)] != 1.0:
            raise TransformFault(SELF, "the self-loop of Self must stay exactly 1")
        memory.update(new_memory)
        self.halt = ctx.halted
        self.outputs = new_outputs
        self.inputs = down_movement(W, new_outputs)
        self.tick_count = t
        for p in self.watched:
            self._emit({"tick": t, "neuron": str(p.neuron), "port": p.port,
                        "value": value_to_json(self.value(p))})
        if self.halt is not None:
            self._emit({"tick": self.halt.tick, "answer": self.halt.answer})

    def run(self, max_ticks: int, on_tick: Callable[[Network], None] | None = None) -> RunResult:
        """Tick until halted or ``max_ticks`` more ticks have run."""
        if max_ticks < 0:
            raise ValueError("max_ticks must be non-negative")
        for _ in range(max_ticks):
            if self.halt is not None:
                break
            self.tick()
            if on_tick is not None:
                on_tick(self)
        trace = list(self.trace or [])
        if self.halt is not None:
            return RunResult(True, self.halt.tick, self.halt.answer, trace)
        return RunResult(False, self.tick_count, None, trace)
