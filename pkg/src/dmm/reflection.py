"""Matrix-level reflection: the generic weight update and deep copy.

Both the DSL loader and the higher-order neurons go through these functions,
so load-time and run-time self-modification share one implementation.
"""
from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

from .network import (
    IN,
    SELF,
    ColumnMask,
    NetworkMatrix,
    NeuronInstance,
    PortRef,
    RowMask,
    Signature,
    SignatureError,
    allocate_fresh_block,
)
from .streams import check_scalar


class CopyError(SignatureError):
    pass


def update_weights_delta(
    m: NetworkMatrix, gamma: RowMask, alpha: ColumnMask, beta: RowMask, c: float = 1.0
) -> NetworkMatrix:
    """delta[i, j] = c * gamma[i] * alpha[j] * sum_k beta[k] * m[k, j]."""
    if c == 0.0 or not gamma or not alpha or not beta:
        return NetworkMatrix.zero()
    col_sums: dict[PortRef, float] = {}
    rows = m.by_row
    for k, bk in beta.items():
        for j, w in rows.get(k, ()):
            if j in alpha:
                col_sums[j] = col_sums.get(j, 0.0) + bk * w
    delta = {}
    for j, s in col_sums.items():
        if s == 0.0:
            continue
        aj = alpha[j]
        for i, gi in gamma.items():
            delta[(i, j)] = c * gi * aj * s
    return NetworkMatrix(delta)


def update_weights_generic(
    W: NetworkMatrix, gamma: RowMask, alpha: ColumnMask, beta: RowMask
) -> NetworkMatrix:
    return W + update_weights_delta(W, gamma, alpha, beta)


@dataclass(frozen=True)
class CopyVariant:
    """Which parts of the external connectivity a deep copy carries over.

    1: internal block only. 2: plus incoming connections. 3: plus outgoing
    connections. 4: as 3, but outgoing weight is split, ``alpha`` to the
    copy and ``1 - alpha`` left on the original.
    """

    number: int = 2
    alpha: float | None = None

    def __post_init__(self):
        if self.number not in (1, 2, 3, 4):
            raise CopyError(f"unknown deep copy variant {self.number}")
        if self.number == 4:
            a = check_scalar(0.5 if self.alpha is None else self.alpha)
            if not 0.0 <= a <= 1.0:
                raise CopyError(f"variant 4 alpha must lie in [0, 1], got {a}")
            object.__setattr__(self, "alpha", a)
        elif self.alpha is not None:
            raise CopyError("alpha only applies to variant 4")


V1, V2, V3 = CopyVariant(1), CopyVariant(2), CopyVariant(3)


def V4(alpha: float) -> CopyVariant:
    return CopyVariant(4, alpha)


@dataclass(frozen=True)
class SubgraphSpec:
    name: str
    neurons: frozenset[NeuronInstance]

    def __post_init__(self):
        object.__setattr__(self, "neurons", frozenset(self.neurons))
        if not self.neurons:
            raise CopyError(f"subgraph {self.name} is empty")
        if SELF in self.neurons:
            raise CopyError("the Self neuron cannot be part of a copied subgraph")

    def rows(self, sig: Signature) -> list[PortRef]:
        return [p for n in sorted(self.neurons) for p in sig.input_ports(n)]

    def columns(self, sig: Signature) -> list[PortRef]:
        return [p for n in sorted(self.neurons) for p in sig.output_ports(n)]


def subgraph_from_masks(rows: RowMask, cols: ColumnMask, sig: Signature, name: str = "masked"):
    """Recover the neuron set selected by a row and column mask.

    Every selected neuron must have all of its ports covered.
    """
    neurons = {p.neuron for p in rows} | {p.neuron for p in cols}
    for n in neurons:
        missing = [str(p) for p in sig.input_ports(n) if p not in rows]
        missing += [str(p) for p in sig.output_ports(n) if p not in cols]
        if missing:
            raise CopyError(f"masks cover {n} only partially; missing {', '.join(missing)}")
    return SubgraphSpec(name, frozenset(neurons))


def _image(p: PortRef, fresh: dict) -> PortRef:
    return PortRef(fresh[p.neuron], p.port, p.direction, p.kind)


def _copy_entries(W: NetworkMatrix, spec: SubgraphSpec, fresh, variant: CopyVariant, sig):
    """Yield (key, new_value) assignments realising the copy."""
    missing = spec.neurons - fresh.keys()
    if missing:
        raise CopyError(f"no fresh image for {sorted(map(str, missing))}")
    rows = set(spec.rows(sig))
    cols = set(spec.columns(sig))
    by_row, by_col = W.by_row, W.by_column
    for n in spec.neurons:
        img = fresh[n]
        if img in spec.neurons or any(
            p in by_row for p in sig.input_ports(img)
        ) or any(p in by_col for p in sig.output_ports(img)):
            raise CopyError(f"target {img} for {n} is not fresh")

    out = []
    for i in sorted(rows, key=PortRef.sort_key):
        for o, w in by_row.get(i, ()):
            if o in cols:
                out.append(((_image(i, fresh), _image(o, fresh)), w))
            elif variant.number >= 2:
                out.append(((_image(i, fresh), o), w))
    if variant.number >= 3:
        a = variant.alpha
        for o in sorted(cols, key=PortRef.sort_key):
            for i, w in by_col.get(o, ()):
                if i in rows:
                    continue
                if a is None:
                    out.append(((i, _image(o, fresh)), w))
                else:
                    out.append(((i, _image(o, fresh)), a * w))
                    out.append(((i, o), (1.0 - a) * w))
    return out


def deep_copy(
    W: NetworkMatrix,
    spec: SubgraphSpec,
    fresh: dict[NeuronInstance, NeuronInstance],
    variant: CopyVariant = V2,
    sig: Signature | None = None,
) -> NetworkMatrix:
    """Copy ``spec`` onto the fresh instances given by ``fresh``."""
    if sig is None:
        raise CopyError("deep_copy needs the network signature to enumerate ports")
    data = dict(W.items())
    for key, value in _copy_entries(W, spec, fresh, variant, sig):
        if value == 0.0:
            data.pop(key, None)
        else:
            data[key] = value
    return NetworkMatrix(data)


def copy_delta(W, spec, fresh, variant=V2, sig=None) -> NetworkMatrix:
    """The additive change ``deep_copy(W, ...) - W``."""
    return deep_copy(W, spec, fresh, variant, sig) - W


def nested_copy_compose(
    W: NetworkMatrix,
    steps: Sequence[tuple[SubgraphSpec | Callable, CopyVariant]],
    sig: Signature,
    silent: Iterable[NeuronInstance] = (),
    reserved: Iterable[NeuronInstance] = (),
) -> tuple[NetworkMatrix, list[dict]]:
    """Apply deep copies one after another.

    A step's spec may be a callable receiving the list of earlier fresh
    mappings, so later steps can select images made by earlier ones.
    """
    silent = set(silent)
    reserved = set(reserved)
    mappings: list[dict] = []
    for spec, variant in steps:
        if callable(spec):
            spec = spec(mappings)
        fresh = allocate_fresh_block(W, silent, reserved, spec.neurons, sig)
        W = deep_copy(W, spec, fresh, variant, sig)
        reserved |= spec.neurons | set(fresh.values())
        mappings.append(fresh)
    return W, mappings


def mask_for(ports: Iterable[PortRef], direction: str):
    cls = RowMask if direction == IN else ColumnMask
    return cls({p: 1.0 for p in ports})


__all__ = [
    "CopyError",
    "CopyVariant",
    "SubgraphSpec",
    "V1",
    "V2",
    "V3",
    "V4",
    "copy_delta",
    "deep_copy",
    "mask_for",
    "nested_copy_compose",
    "subgraph_from_masks",
    "update_weights_delta",
    "update_weights_generic",
]
