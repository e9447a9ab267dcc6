from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DETECTOR
from dmm.dsl import (
    DmmSyntaxError,
    LoadError,
    format_program,
    load,
    load_text,
    parse,
    tokenize,
    validate,
)
from dmm.dsl.parser import (
    CellTypeDecl,
    GenericUpdate,
    KindDecl,
    Mask,
    NeuronDecl,
    NewCopy,
    Placeholder,
    SilentDecl,
    SubgraphDecl,
    UpdateWeights,
)
from dmm.network import SELF_IN, SELF_OUT

CORPUS = (Path(__file__).parent / "data" / "corpus.txt").read_text().split("\n----\n")

HEADER = (
    "#kind real; #kind c-vector;"
    "#newcelltype input-real #output real:emit;"
    "#newcelltype id-c-vector #input c-vector:in #output c-vector:out;"
)


def test_parse_examples():
    assert parse("#kind real;").statements == [KindDecl("real")]
    (n,) = parse("#neuron input-string:input-data emit:emit-c-vector = #transformof #dummy;").statements
    assert n == NeuronDecl("input-string", "input-data", (("emit", "emit-c-vector"),), ())
    (u,) = parse("#updateweights collect-sum += emit-c-vector;").statements
    assert u == UpdateWeights("collect-sum", "emit-c-vector", 1.0)


def test_parse_extended_forms():
    prog = parse(
        "#kind flag #family real;"
        "#newcelltype g #input real:x #output real:y #transform identity;"
        "#neuron g:n y:o = #transformof x:i #init {i: 0.5};"
        "#updateweights i += -2 * o;"
        "#updateweights {i: 1} += {o: 1} * {i: 1};"
        "#subgraph s = #cells n;"
        "#new-copy t = #deepcopyof s #variant 4 #alpha 0.25;"
        "#silent t; #active t;"
    )
    kinds = [type(s) for s in prog.statements]
    assert kinds == [KindDecl, CellTypeDecl, NeuronDecl, UpdateWeights, GenericUpdate,
                     SubgraphDecl, NewCopy, SilentDecl, SilentDecl]
    assert prog.statements[2].init == Mask((("i", 0.5),))
    assert prog.statements[3].coef == -2.0
    assert prog.statements[6] == NewCopy("t", "s", 4, 0.25)


def test_placeholders_parse_but_do_not_load():
    prog = parse("#updateweights <FiniteRowMask 1> += <ColumnMask> * <FiniteRowMask 2>;")
    (g,) = prog.statements
    assert isinstance(g, GenericUpdate) and g.gamma == Placeholder("<FiniteRowMask 1>")
    with pytest.raises(LoadError):
        load(prog)


def test_syntax_errors_carry_position():
    with pytest.raises(DmmSyntaxError) as e:
        parse("#kind real;\n#neuron x y = ;", "f.dmm")
    assert e.value.line == 2 and e.value.file == "f.dmm"
    with pytest.raises(DmmSyntaxError) as e:
        tokenize("#kind real; #bogus x;")
    assert e.value.line == 1 and e.value.column == 13


def test_missing_semicolon_warns():
    prog = parse("#kind real\n#kind c-vector;")
    assert len(prog.statements) == 2 and prog.warnings


@pytest.mark.parametrize("i", range(len(CORPUS)))
def test_corpus_fragment_parses(i):
    assert parse(CORPUS[i]).statements


def test_corpus_program_fragments_load_as_detector():
    body = "\n".join(CORPUS[2:30])
    net = load_text(body)
    assert len(net.user_matrix) == 10
    assert len({n for n in net.user_matrix.neurons}) == 9


def test_detector_shape(detector_program):
    net = load(detector_program)
    assert net.matrix[(SELF_IN, SELF_OUT)] == 1.0
    assert len(net.user_matrix) == 10
    assert len(net.user_matrix.neurons) == 9


def test_detector_round_trip(detector_program):
    text = format_program(detector_program)
    again = parse(text)
    assert again == detector_program
    assert format_program(again) == text


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["a", "b", "c-d", "e.f"]),
            st.sampled_from(["x", "y", "Self.current-matrix"]),
            st.integers(-4, 4).map(float) | st.sampled_from([0.5, -1.25, 1.0]),
        ),
        max_size=6,
    )
)
def test_update_round_trip(items):
    prog = parse("".join(f"#updateweights {i} += {c!r} * {o};" for i, o, c in items))
    assert parse(format_program(prog)) == prog


def test_kinds_only_program_loads_empty():
    net = load_text("#kind real; #kind c-vector;")
    assert len(net.user_matrix) == 0
    assert validate(parse("#kind real;")) == []


def test_namespace_resolution_through_copy():
    net = load_text(
        DETECTOR
        + "\n#subgraph detector = #cells accumulator eval-max-char-count;"
        "\n#new-copy d2 = #deepcopyof detector #variant 2;"
        "\n#updateweights d2.collect-sum += emit-c-vector;"
    )
    acc2 = net.neuron("d2.accumulator")
    assert acc2 != net.neuron("accumulator") and acc2.type == "id-c-vector"
    collect2 = net.port("d2.collect-sum")
    emit = net.port("emit-c-vector")
    # once from variant 2 copying the incoming link, once from the explicit update
    assert net.matrix[(collect2, emit)] == 2.0


def test_copy_namespace_port_update():
    text = (
        HEADER
        + "#neuron input-real:one emit:const-1 = #transformof #dummy;"
        "#newcelltype counter #input real:collect-sum #output real:total #transform identity;"
        "#neuron counter:c total:total = #transformof collect-sum:collect-sum;"
        "#updateweights collect-sum += total;"
        "#subgraph detector = #cells c;"
        "#new-copy d2 = #deepcopyof detector #variant 2;"
        "#updateweights d2.collect-sum += const-1;"
    )
    net = load_text(text)
    p = net.port("d2.collect-sum")
    assert net.matrix[(p, net.port("const-1"))] == 1.0
    assert net.matrix[(p, net.port("d2.total"))] == 1.0


def errors(text):
    return [d for d in validate(parse(text)) if d.severity == "error"]


def test_validate_detector_has_no_errors(detector_program):
    assert [d for d in validate(detector_program) if d.severity == "error"] == []


def test_validate_kind_mismatch():
    errs = errors(
        HEADER
        + "#neuron input-real:one emit:const-1 = #transformof #dummy;"
        "#neuron id-c-vector:acc out:o = #transformof in:i;"
        "#updateweights i += const-1;"
    )
    assert len(errs) == 1 and "kind" in errs[0].message
    assert errs[0].line == 1


def test_validate_alpha_range():
    errs = errors(
        HEADER
        + "#neuron id-c-vector:acc out:o = #transformof in:i;"
        "#subgraph s = #cells acc;"
        "#new-copy t = #deepcopyof s #variant 4 #alpha 1.5;"
    )
    assert len(errs) == 1 and "alpha" in errs[0].message


@pytest.mark.parametrize(
    "text, fragment",
    [
        (HEADER + "#newcelltype input-real #output real:emit;", "duplicate"),
        ("#neuron nope:x = #transformof #dummy;", "nope"),
        (HEADER + "#updateweights nothing += here;", "nothing"),
        (HEADER + "#silent Self;", "Self"),
    ],
)
def test_validate_reports_unknown_names(text, fragment):
    errs = errors(text)
    assert errs and fragment in errs[0].message


def test_validate_collects_every_error_load_stops_at_first():
    text = HEADER + "#updateweights a += b; #updateweights c += d;"
    assert len(errors(text)) == 2
    with pytest.raises(LoadError) as e:
        load(parse(text))
    assert len([d for d in e.value.diagnostics if d.severity == "error"]) == 1
