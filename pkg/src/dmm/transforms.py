"""Built-in neuron transforms.

A transform maps the current input values and its private memory to output
values and new memory. Ports are matched by position; the neuron type
supplies the names.
"""
from __future__ import annotations

import dataclasses
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .network import (
    ColumnMask,
    NetworkMatrix,
    NeuronType,
    PortRef,
    RowMask,
    SignatureError,
    allocate_fresh_block,
)
from .reflection import CopyVariant, copy_delta, subgraph_from_masks, update_weights_delta
from .streams import (
    EOS,
    CVector,
    Family,
    SparseVector,
    check_scalar,
    cvector_dot,
    cvector_max_norm,
)

S, CV, M, R, C = Family.SCALAR, Family.CVECTOR, Family.MATRIX, Family.ROW, Family.COLUMN
ANY = None  # polymorphic port, must agree with the other ANY ports


class TransformFault(RuntimeError):
    def __init__(self, neuron, message: str):
        super().__init__(f"{neuron}: {message}")
        self.neuron = neuron


@dataclass(frozen=True)
class Transform:
    id: str
    inputs: tuple
    outputs: tuple
    fn: Callable[[list, Any, Any], tuple[list, Any]]
    init: Callable[[Any], Any] = lambda ctx: None
    # neurons with this transform can be bound to external data
    emitter: bool = False

    def check(self, t: NeuronType) -> None:
        if len(t.inputs) != len(self.inputs) or len(t.outputs) != len(self.outputs):
            raise SignatureError(
                f"type {t.name}: transform {self.id} needs {len(self.inputs)} inputs and "
                f"{len(self.outputs)} outputs, got {len(t.inputs)} and {len(t.outputs)}"
            )
        poly = set()
        for want, (port, kind) in zip(self.inputs + self.outputs, t.inputs + t.outputs):
            if want is ANY:
                poly.add(kind)
            elif kind.family is not want:
                raise SignatureError(
                    f"type {t.name}: port {port} is {kind} ({kind.family.value}), "
                    f"transform {self.id} expects {want.value}"
                )
        if len(poly) > 1:
            raise SignatureError(f"type {t.name}: ports of {self.id} must share one kind")


# -- pure transforms -----------------------------------------------------------


def identity_transform(x):
    return x


def masked_identity(x, a: float):
    """Scale ``x`` by the mask ``a``; an exact-0 mask yields the exact zero."""
    if isinstance(x, SparseVector):
        return x.scale(a)
    return 0.0 if a == 0.0 else a * x


def bilinear_relu(x: float, y: float) -> float:
    return max(0.0, x) * max(0.0, y)


def greater_than(a: float, b: float) -> tuple[float, float]:
    return (1.0, 0.0) if a > b else (0.0, 1.0)


def _stateless(f):
    def fn(inputs, memory, ctx):
        return f(*inputs), memory

    return fn


# -- emitters ------------------------------------------------------------------


@dataclass(frozen=True)
class StringFeed:
    text: str = ""
    rate: int = 1

    def __post_init__(self):
        if not isinstance(self.rate, int) or self.rate < 1:
            raise ValueError(f"emitter rate must be a positive integer, got {self.rate!r}")


def string_schedule(text: str, rate: int = 1) -> Callable[[int], CVector]:
    """Value emitted at local step ``s`` (0-based) for a text fed at ``rate``."""
    symbols = list(text) + [EOS]

    def at(step: int) -> CVector:
        q, r = divmod(step, rate)
        if r or q >= len(symbols):
            return CVector.zero()
        return CVector.one_hot(symbols[q])

    return at


def _string_init(ctx):
    feed = ctx.param
    if feed is None:
        return None
    if isinstance(feed, str):
        feed = StringFeed(feed)
    return (string_schedule(feed.text, feed.rate), 0)


def _string_emit(inputs, memory, ctx):
    if memory is None:
        return [CVector.zero()], None
    at, step = memory
    return [at(step)], (at, step + 1)


def _real_init(ctx):
    value = 1.0 if ctx.param is None else ctx.param
    if isinstance(value, (int, float)):
        return (check_scalar(value), None)
    return (None, (tuple(check_scalar(v) for v in value), 0))


def _real_emit(inputs, memory, ctx):
    const, seq = memory
    if seq is None:
        return [const], memory
    values, step = seq
    out = values[step] if step < len(values) else 0.0
    return [out], (None, (values, step + 1))


def _const_init(zero):
    def init(ctx):
        return zero if ctx.param is None else ctx.param

    return init


def _const_emit(inputs, memory, ctx):
    return [memory], memory


_EOS_VEC = CVector.one_hot(EOS)


# -- side effects ----------------------------------------------------------------


def record_answer_and_stop(positive: float, negative: float):
    """Decide the halt answer; returns (answer or None, anomalous)."""
    pos, neg = positive > 0.5, negative > 0.5
    if pos:
        return True, neg
    if neg:
        return False, False
    return None, False


def _record(inputs, memory, ctx):
    answer, anomalous = record_answer_and_stop(*inputs)
    if anomalous:
        ctx.flag("positive and negative answers raised on the same tick; recording positive")
    if answer is not None:
        ctx.halt(answer)
    return [], memory


# -- higher-order neurons ------------------------------------------------------------


def _update_weights(inputs, memory, ctx):
    m, gamma, alpha, beta, c = inputs
    try:
        return [update_weights_delta(m, gamma, alpha, beta, c)], memory
    except SignatureError as e:
        raise TransformFault(ctx.neuron, str(e)) from None


@dataclass(frozen=True)
class CopyMemory:
    prev_c: float = 0.0
    target: NetworkMatrix | None = None
    applied: float = 0.0
    new_rows: RowMask = field(default_factory=RowMask.zero)
    new_cols: ColumnMask = field(default_factory=ColumnMask.zero)
    copies: int = 0


def deep_copy_step(m, rows, cols, c, memory: CopyMemory, variant: CopyVariant, ctx):
    """One tick of a deep-copy neuron.

    A fresh block is allocated only when ``c`` goes from exact 0 to nonzero.
    While ``c`` stays nonzero the target copy is emitted in fractions of ``c``
    until the cumulative applied fraction reaches 1.
    """
    if c != 0.0 and memory.prev_c == 0.0:
        spec = subgraph_from_masks(rows, cols, ctx.signature)
        fresh = allocate_fresh_block(ctx.matrix, ctx.silent, ctx.reserved, spec.neurons, ctx.signature)
        ctx.reserve(fresh.values())
        ctx.adopt(fresh)
        target = copy_delta(m, spec, fresh, variant, ctx.signature)
        new_rows = RowMask({PortRef(fresh[p.neuron], p.port, p.direction, p.kind): 1.0 for p in rows})
        new_cols = ColumnMask({PortRef(fresh[p.neuron], p.port, p.direction, p.kind): 1.0 for p in cols})
        memory = CopyMemory(0.0, target, 0.0, new_rows, new_cols, memory.copies + 1)
    delta = NetworkMatrix.zero()
    if c != 0.0 and memory.target is not None:
        goal = min(1.0, max(0.0, memory.applied + c))
        step = goal - memory.applied
        if step != 0.0:
            delta = memory.target.scale(step)
        memory = dataclasses.replace(memory, applied=goal)
    memory = dataclasses.replace(memory, prev_c=c)
    return [delta, memory.new_rows, memory.new_cols], memory


def _deep_copy(number):
    def init(ctx):
        return CopyMemory()

    def fn(inputs, memory, ctx):
        alpha = None
        if number == 4:
            alpha = 0.5 if ctx.param is None else ctx.param
        variant = CopyVariant(number, alpha)
        try:
            return deep_copy_step(*inputs, memory, variant, ctx)
        except SignatureError as e:
            raise TransformFault(ctx.neuron, str(e)) from None

    return Transform(f"deep-copy-v{number}", (M, R, C, S), (M, R, C), fn, init)


class TransformRegistry(dict):
    """transform-id -> Transform, plus default type-name bindings."""

    def __init__(self, transforms: Sequence[Transform] = (), type_defaults=None):
        super().__init__((t.id, t) for t in transforms)
        self.type_defaults = dict(type_defaults or {})

    def register(self, t: Transform) -> None:
        self[t.id] = t

    def resolve_type(self, type_name: str, explicit: str | None = None) -> str:
        """Pick the transform id for a declared cell type."""
        if explicit is not None:
            if explicit not in self:
                raise SignatureError(f"unknown transform {explicit!r}")
            return explicit
        if type_name in self.type_defaults:
            return self.type_defaults[type_name]
        if type_name in self:
            return type_name
        if type_name.startswith("id-"):
            return "identity"
        raise SignatureError(
            f"cannot tell which transform cell type {type_name!r} uses; add '#transform <id>'"
        )


def default_registry() -> TransformRegistry:
    transforms = [
        Transform("identity", (ANY,), (ANY,), lambda i, m, c: ([i[0]], m)),
        Transform("masked-identity", (ANY, S), (ANY,), _stateless(lambda x, a: [masked_identity(x, a)])),
        Transform("bilinear-relu", (S, S), (S,), _stateless(lambda x, y: [bilinear_relu(x, y)])),
        Transform("greater-than", (S, S), (S, S), _stateless(lambda a, b: list(greater_than(a, b)))),
        Transform("max-norm", (CV,), (S,), _stateless(lambda v: [cvector_max_norm(v)])),
        Transform("dot-product", (CV, CV), (S,), _stateless(lambda u, v: [cvector_dot(u, v)])),
        Transform("input-string", (), (CV,), _string_emit, _string_init, emitter=True),
        Transform("input-real", (), (S,), _real_emit, _real_init, emitter=True),
        Transform("eos-const", (), (CV,), lambda i, m, c: ([_EOS_VEC], m)),
        Transform("row-const", (), (R,), _const_emit, _const_init(RowMask.zero()), emitter=True),
        Transform("column-const", (), (C,), _const_emit, _const_init(ColumnMask.zero()), emitter=True),
        Transform("record-answer-stop", (S, S), (), _record),
        Transform("update-weights", (M, R, C, R, S), (M,), _update_weights),
    ]
    transforms += [_deep_copy(n) for n in (1, 2, 3, 4)]
    defaults = {
        "self-matrix": "identity",
        "id-c-vector": "identity",
        "max-norm-of-c-vector": "max-norm",
        "dot-product-of-c-vectors": "dot-product",
        "end-of-string-const": "eos-const",
        "record-answer-and-stop-the-network": "record-answer-stop",
    }
    return TransformRegistry(transforms, defaults)
