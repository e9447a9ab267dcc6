"""Independent reference implementations used by the tests.

These work on dense numpy arrays indexed by explicit port lists and never
call the sparse kernels they check.
"""
import random

import numpy as np

from dmm.network import (
    IN,
    OUT,
    SELF,
    NetworkMatrix,
    NeuronInstance,
    NeuronType,
    PortRef,
    Signature,
)
from dmm.streams import REAL

CELL = NeuronType("cell", (("x", REAL), ("y", REAL)), (("z", REAL),), "identity")
PAIR = NeuronType("pair", (("a", REAL),), (("p", REAL), ("q", REAL)), "identity")
TYPES = (CELL, PAIR)


def signature():
    return Signature([REAL], TYPES)


def ports_of(neurons, sig, direction):
    out = []
    for n in sorted(neurons):
        out += sig.input_ports(n) if direction == IN else sig.output_ports(n)
    return out


def to_dense(W, rows, cols):
    ri = {p: k for k, p in enumerate(rows)}
    ci = {p: k for k, p in enumerate(cols)}
    A = np.zeros((len(rows), len(cols)))
    for (i, o), w in W.items():
        A[ri[i], ci[o]] = w
    return A


def from_dense(A, rows, cols):
    return NetworkMatrix(
        {(rows[r], cols[c]): float(A[r, c]) for r in range(len(rows)) for c in range(len(cols)) if A[r, c] != 0.0}
    )


def random_matrix(rng: random.Random, sig, n_neurons=4, density=0.4, integer=False, exclude_self=True):
    """A random matrix over ``n_neurons`` instances of the test types."""
    neurons = set()
    while len(neurons) < n_neurons:
        t = rng.choice(TYPES)
        neurons.add(NeuronInstance(t.name, rng.randrange(0, max(3, n_neurons))))
    rows = ports_of(neurons, sig, IN)
    cols = ports_of(neurons, sig, OUT)
    data = {}
    for i in rows:
        for o in cols:
            if rng.random() < density:
                data[(i, o)] = float(rng.randint(-5, 5)) if integer else rng.uniform(-2, 2)
    return NetworkMatrix(data), sorted(neurons)


def dense_update(A, g, a, b, c=1.0):
    """A + c * outer(g, a) * (b @ A) on dense arrays."""
    return A + c * np.outer(g, a) * (b @ A)[None, :]


def block_copy(W, subgraph, fresh, variant, alpha, sig):
    """Deep copy via explicit block assignment on a dense matrix.

    With O/C the original rows/columns, O'/C' their images, and the rest of
    the universe external:
      [O', C'] = [O, C]                       every variant
      [O', ext] = [O, ext]                    variant >= 2
      [ext, C'] = [ext, C]                    variant 3
      [ext, C'] = a*[ext, C]; [ext, C] *= 1-a variant 4
    """
    images = set(fresh.values())
    universe = set(W.neurons) | set(subgraph) | images | {SELF}
    rows = ports_of(universe, sig, IN)
    cols = ports_of(universe, sig, OUT)
    A = to_dense(W, rows, cols)
    ri = {p: k for k, p in enumerate(rows)}
    ci = {p: k for k, p in enumerate(cols)}

    def img(p):
        return PortRef(fresh[p.neuron], p.port, p.direction, p.kind)

    O = [ri[p] for p in rows if p.neuron in subgraph]
    C = [ci[p] for p in cols if p.neuron in subgraph]
    Oi = [ri[img(p)] for p in rows if p.neuron in subgraph]
    Ci = [ci[img(p)] for p in cols if p.neuron in subgraph]
    ext_r = [ri[p] for p in rows if p.neuron not in subgraph and p.neuron not in images]
    ext_c = [ci[p] for p in cols if p.neuron not in subgraph and p.neuron not in images]

    B = A.copy()
    B[np.ix_(Oi, Ci)] = A[np.ix_(O, C)]
    if variant >= 2:
        B[np.ix_(Oi, ext_c)] = A[np.ix_(O, ext_c)]
    if variant == 3:
        B[np.ix_(ext_r, Ci)] = A[np.ix_(ext_r, C)]
    if variant == 4:
        B[np.ix_(ext_r, Ci)] = alpha * A[np.ix_(ext_r, C)]
        B[np.ix_(ext_r, C)] = (1 - alpha) * A[np.ix_(ext_r, C)]
    return from_dense(B, rows, cols), (rows, cols)


def first_duplicate_scan(text: str) -> bool:
    """Left-to-right scan with a seen-set, no hashing shortcuts via len/set."""
    seen = []
    for ch in text:
        for s in seen:
            if s == ch:
                return True
        seen.append(ch)
    return False
