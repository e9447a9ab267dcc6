from types import SimpleNamespace

import pytest

from oracles import block_copy
from dmm.dsl import load_text
from dmm.network import IN, OUT, ColumnMask, NetworkMatrix, NeuronInstance, NeuronType, RowMask, Signature
from dmm.reflection import V1, V2, copy_delta, SubgraphSpec
from dmm.streams import EOS, REAL, CVector
from dmm.transforms import (
    CopyMemory,
    StringFeed,
    bilinear_relu,
    default_registry,
    deep_copy_step,
    greater_than,
    identity_transform,
    masked_identity,
    record_answer_and_stop,
    string_schedule,
)

NODE = NeuronType("node", (("in", REAL),), (("out", REAL),), "identity")
SIG = Signature([REAL], [NODE])
a, b, e = (NeuronInstance("node", k) for k in range(3))


def P(n, port):
    return SIG.port(n, port, IN if port == "in" else OUT)


def test_identity():
    M = NetworkMatrix({(P(a, "in"), P(a, "out")): 1.0})
    for x in (CVector({"a": 2}), 0.0, M):
        assert identity_transform(x) is x


@pytest.mark.parametrize("mask, expect", [(1, {"a": 2}), (0, {}), (0.5, {"a": 1})])
def test_masked_identity(mask, expect):
    assert masked_identity(CVector({"a": 2}), mask) == CVector(expect)


@pytest.mark.parametrize("x, y, expect", [(2, 3, 6), (-1, 5, 0), (0.5, 0.5, 0.25)])
def test_bilinear_relu(x, y, expect):
    assert bilinear_relu(x, y) == expect


@pytest.mark.parametrize("args, expect", [((2, 1), (1, 0)), ((1, 1), (0, 1)), ((0, 0), (0, 1))])
def test_greater_than(args, expect):
    assert greater_than(*args) == expect


@pytest.mark.parametrize(
    "text, rate, expect",
    [
        ("ab", 1, [{"a": 1}, {"b": 1}, {EOS: 1}, {}]),
        ("", 1, [{EOS: 1}, {}]),
        ("a", 2, [{"a": 1}, {}, {EOS: 1}, {}]),
    ],
)
def test_string_schedule(text, rate, expect):
    at = string_schedule(text, rate)
    assert [at(s) for s in range(len(expect))] == [CVector(x) for x in expect]


def test_feed_rate_validated():
    with pytest.raises(ValueError):
        StringFeed("a", 0)


@pytest.mark.parametrize("args, expect", [((1, 0), (True, False)), ((0, 1), (False, False)), ((0, 0), (None, False))])
def test_record_answer(args, expect):
    assert record_answer_and_stop(*args) == expect


def test_record_answer_clash_prefers_positive():
    assert record_answer_and_stop(1, 1) == (True, True)


def test_constant_emitters():
    net = load_text(
        "#kind real; #kind c-vector;"
        "#newcelltype input-real #output real:emit;"
        "#newcelltype end-of-string-const #output c-vector:emit;"
        "#newcelltype zero-src #output real:emit #transform input-real;"
        "#newcelltype id-real #input real:in #output real:out;"
        "#newcelltype id-c-vector #input c-vector:in #output c-vector:out;"
        "#neuron input-real:one emit:const-1 = #transformof #dummy;"
        "#neuron end-of-string-const:eos emit:const-eos = #transformof #dummy;"
        "#neuron zero-src:z emit:zero = #transformof #dummy #init 0;"
        "#neuron id-real:s1 out:o1 = #transformof in:i1;"
        "#neuron id-c-vector:s2 out:o2 = #transformof in:i2;"
        "#neuron id-real:s3 out:o3 = #transformof in:i3;"
        "#updateweights i1 += const-1; #updateweights i2 += const-eos; #updateweights i3 += zero;"
    )
    for _ in range(3):
        net.tick()
        assert net.value("const-1") == 1.0
        assert net.value("const-eos") == CVector({EOS: 1})
        assert net.value("zero") == 0.0


def test_registry_resolution():
    reg = default_registry()
    assert reg.resolve_type("max-norm-of-c-vector") == "max-norm"
    assert reg.resolve_type("id-whatever") == "identity"
    assert reg.resolve_type("greater-than") == "greater-than"
    with pytest.raises(Exception):
        reg.resolve_type("mystery")


# -- deep copy neuron ------------------------------------------------------------


def base():
    return NetworkMatrix({
        (P(a, "in"), P(a, "out")): 0.5,
        (P(a, "in"), P(e, "out")): 1.0,
        (P(b, "in"), P(a, "out")): 2.0,
    })


def ctx_for(W):
    state = SimpleNamespace(reserved={a, b, e}, adopted=[])
    return SimpleNamespace(
        signature=SIG, matrix=W, silent=frozenset(), reserved=frozenset(state.reserved),
        reserve=state.reserved.update, adopt=state.adopted.append, neuron=None, param=None,
    )


ROWS = RowMask({P(a, "in"): 1.0})
COLS = ColumnMask({P(a, "out"): 1.0})


def test_copy_neuron_one_shot_v1():
    W = base()
    mem = CopyMemory()
    (delta, new_rows, new_cols), mem = deep_copy_step(W, ROWS, COLS, 1.0, mem, V1, ctx_for(W))
    img = NeuronInstance("node", 3)
    expect, _ = block_copy(W, {a}, {a: img}, 1, None, SIG)
    assert delta == expect - W == NetworkMatrix({(P(img, "in"), P(img, "out")): 0.5})
    assert new_rows == RowMask({P(img, "in"): 1.0})
    assert new_cols == ColumnMask({P(img, "out"): 1.0})
    # staying at 1 after the full copy emits nothing more and allocates nothing
    (delta, *_), mem2 = deep_copy_step(W + delta, ROWS, COLS, 1.0, mem, V1, ctx_for(W + delta))
    assert delta == NetworkMatrix() and mem2.copies == 1


def test_copy_neuron_idle_when_c_zero():
    W = base()
    mem = CopyMemory()
    for _ in range(3):
        (delta, rows, cols), mem = deep_copy_step(W, ROWS, COLS, 0.0, mem, V2, ctx_for(W))
        assert delta == NetworkMatrix() and not rows and not cols
    assert mem.copies == 0


def test_copy_neuron_gradual_equals_one_shot():
    W = base()
    mem = CopyMemory()
    total = NetworkMatrix()
    for c in (0.5, 0.5, 0.5):
        (delta, *_), mem = deep_copy_step(W, ROWS, COLS, c, mem, V2, ctx_for(W))
        total = total + delta
    img = NeuronInstance("node", 3)
    one_shot = copy_delta(W, SubgraphSpec("a", {a}), {a: img}, V2, SIG)
    assert set(total) == set(one_shot)
    assert all(abs(total[k] - one_shot[k]) <= 1e-12 for k in one_shot)


def test_copy_neuron_new_transition_makes_new_copy():
    W = base()
    mem = CopyMemory()
    imgs = []
    for c in (1.0, 0.0, 1.0):
        ctx = ctx_for(W)
        (delta, rows, _), mem = deep_copy_step(W, ROWS, COLS, c, mem, V1, ctx)
        W = W + delta
        if c:
            imgs.append(next(iter(rows)).neuron)
    assert mem.copies == 2 and imgs[0] != imgs[1]


SELF_COPY = """
#kind real; #kind matrix; #kind matrix-row; #kind matrix-column;
#newcelltype input-real #output real:emit;
#newcelltype id-real #input real:in #output real:out;
#newcelltype copier #input matrix:m #input matrix-row:rows #input matrix-column:cols #input real:c
    #output matrix:delta #output matrix-row:new-rows #output matrix-column:new-cols
    #transform deep-copy-v3;
#newcelltype row-mask #output matrix-row:emit #transform row-const;
#newcelltype column-mask #output matrix-column:emit #transform column-const;

#neuron input-real:one emit:const-1 = #transformof #dummy;
#neuron id-real:acc out:acc-out = #transformof in:acc-in;
#updateweights acc-in += acc-out;
#updateweights acc-in += const-1;

#neuron copier:cp delta:cp-delta new-rows:cp-rows new-cols:cp-cols =
    #transformof m:cp-m rows:cp-r cols:cp-c c:cp-go;
#updateweights cp-m += Self.current-matrix;
#updateweights Self.delta-sum += cp-delta;
#neuron row-mask:rm emit:rm-out = #transformof #dummy
    #init {acc-in: 1, cp-m: 1, cp-r: 1, cp-c: 1, cp-go: 1};
#neuron column-mask:cm emit:cm-out = #transformof #dummy
    #init {acc-out: 1, cp-delta: 1, cp-rows: 1, cp-cols: 1};
#updateweights cp-r += rm-out;
#updateweights cp-c += cm-out;
#updateweights cp-go += const-1;
"""


def test_copier_copies_itself_with_a_worker():
    net = load_text(SELF_COPY)
    net.run(8)
    copiers = {n for n in net.matrix.neurons if n.type == "copier"}
    workers = sorted(n for n in net.matrix.neurons if n.type == "id-real")
    assert len(copiers) >= 2
    assert len(workers) >= 2
    # every worker copy kept its unit self-loop and its drive from const-1
    W, sig = net.matrix, net.signature
    const = net.port("const-1")
    for w in workers:
        i, o = sig.port(w, "in", IN), sig.port(w, "out", OUT)
        assert W[(i, o)] == 1.0 and W[(i, const)] == 1.0
    # the first worker copy is counting, like the original
    first = workers[1]
    out = sig.port(first, "out", OUT)
    before = net.value(out)
    net.tick()
    assert before > 0 and net.value(out) == before + 1
