"""Parser and pretty-printer for the DMM description language.

Grammar, one statement per ``;``::

    #kind NAME [#family FAMILY]
    #newcelltype NAME {#input KIND:PORT | #output KIND:PORT} [#transform ID]
    #neuron TYPE:NAME (PORT:ALIAS... | #dummy) = #transformof (PORT:ALIAS... | #dummy) [#init LITERAL]
    #updateweights IN += [COEF *] OUT
    #updateweights ROWMASK += COLMASK * ROWMASK
    #subgraph NAME = #cells NEURON...
    #new-copy NAME = #deepcopyof SUBGRAPH [#variant N [#alpha A]]
    #silent NAME | #active NAME

Masks are written ``{alias: coef, ...}``. ``<...>`` placeholders and ``...``
are accepted syntactically so schematic listings parse; they cannot be loaded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .lexer import DmmSyntaxError, Token, tokenize


@dataclass(frozen=True)
class Pos:
    line: int
    column: int


_pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Placeholder:
    text: str


@dataclass(frozen=True)
class Mask:
    entries: tuple[tuple[str, float], ...]


Operand = Union[str, Placeholder, Mask]


@dataclass(frozen=True)
class KindDecl:
    name: str
    family: str | None = None
    pos: Pos | None = _pos


@dataclass(frozen=True)
class CellTypeDecl:
    name: str
    # (direction, kind, port) with direction "input" or "output"
    ports: tuple[tuple[str, str, str], ...] = ()
    transform: str | None = None
    pos: Pos | None = _pos

    @property
    def inputs(self):
        return tuple((k, p) for d, k, p in self.ports if d == "input")

    @property
    def outputs(self):
        return tuple((k, p) for d, k, p in self.ports if d == "output")


@dataclass(frozen=True)
class NeuronDecl:
    type: str
    name: str
    outputs: tuple[tuple[str, str], ...] = ()
    inputs: tuple[tuple[str, str], ...] = ()
    init: float | Mask | None = None
    pos: Pos | None = _pos


@dataclass(frozen=True)
class UpdateWeights:
    target: str | Placeholder
    source: str | Placeholder
    coef: float = 1.0
    pos: Pos | None = _pos


@dataclass(frozen=True)
class GenericUpdate:
    gamma: Operand
    alpha: Operand
    beta: Operand
    pos: Pos | None = _pos


@dataclass(frozen=True)
class SubgraphDecl:
    name: str
    cells: tuple[str | Placeholder, ...]
    pos: Pos | None = _pos


@dataclass(frozen=True)
class NewCopy:
    name: str
    source: str
    variant: int | None = None
    alpha: float | None = None
    pos: Pos | None = _pos


@dataclass(frozen=True)
class SilentDecl:
    name: str
    flag: bool = True
    pos: Pos | None = _pos


Statement = Union[KindDecl, CellTypeDecl, NeuronDecl, UpdateWeights, GenericUpdate,
                  SubgraphDecl, NewCopy, SilentDecl]

STATEMENT_KEYWORDS = {"#kind", "#newcelltype", "#neuron", "#updateweights", "#subgraph",
                      "#new-copy", "#silent", "#active"}


@dataclass
class Program:
    statements: list[Statement]
    file: str | None = None
    # (message, line, column) for tolerated irregularities
    warnings: list[tuple[str, int, int]] = field(default_factory=list)

    def __eq__(self, other):
        return isinstance(other, Program) and self.statements == other.statements


class _Parser:
    def __init__(self, tokens: list[Token], file):
        self.toks = tokens
        self.i = 0
        self.file = file
        self.warnings = []

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return DmmSyntaxError(msg, tok.line, tok.column, self.file)

    def at(self, tag, value=None) -> bool:
        t = self.tok
        return t.tag == tag and (value is None or t.value == value)

    def take(self, tag, value=None) -> Token:
        if not self.at(tag, value):
            want = value or tag.lower()
            got = self.tok.value or "end of input"
            raise self.error(f"expected {want}, found {got!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, tag, value=None) -> Token | None:
        if self.at(tag, value):
            return self.take(tag, value)
        return None

    def ident(self) -> str:
        return self.take("IDENT").value

    def number(self) -> float:
        return float(self.take("NUMBER").value)

    # -- statements -------------------------------------------------------------

    def program(self) -> list[Statement]:
        out = []
        while not self.at("EOF"):
            t = self.tok
            if t.tag != "KEYWORD" or t.value not in STATEMENT_KEYWORDS:
                raise self.error(f"expected a statement, found {t.value!r}")
            method = getattr(self, "st_" + t.value[1:].replace("-", "_"))
            self.i += 1
            stmt = method(Pos(t.line, t.column))
            out.append(stmt)
            if not self.accept("OP", ";"):
                nxt = self.tok
                if nxt.tag == "EOF" or (nxt.tag == "KEYWORD" and nxt.value in STATEMENT_KEYWORDS):
                    self.warnings.append(("missing ';' after statement", t.line, t.column))
                else:
                    raise self.error(f"expected ';', found {nxt.value!r}")
        return out

    def st_kind(self, pos):
        name = self.ident()
        family = self.ident() if self.accept("KEYWORD", "#family") else None
        return KindDecl(name, family, pos)

    def st_newcelltype(self, pos):
        name = self.ident()
        ports = []
        while self.at("KEYWORD", "#input") or self.at("KEYWORD", "#output"):
            direction = self.take("KEYWORD").value[1:]
            kind = self.ident()
            self.take("OP", ":")
            ports.append((direction, kind, self.ident()))
        transform = self.ident() if self.accept("KEYWORD", "#transform") else None
        return CellTypeDecl(name, tuple(ports), transform, pos)

    def bindings(self, stop) -> tuple:
        if self.accept("KEYWORD", "#dummy"):
            return ()
        out = []
        while self.at("IDENT") and not stop():
            port = self.ident()
            self.take("OP", ":")
            out.append((port, self.ident()))
        return tuple(out)

    def st_neuron(self, pos):
        type_ = self.ident()
        self.take("OP", ":")
        name = self.ident()
        outputs = self.bindings(lambda: False)
        self.take("OP", "=")
        self.take("KEYWORD", "#transformof")
        inputs = self.bindings(lambda: False)
        init = None
        if self.accept("KEYWORD", "#init"):
            init = self.mask() if self.at("OP", "{") else self.number()
        return NeuronDecl(type_, name, outputs, inputs, init, pos)

    def mask(self) -> Mask:
        self.take("OP", "{")
        entries = []
        while not self.at("OP", "}"):
            name = self.ident()
            self.take("OP", ":")
            entries.append((name, self.number()))
            if not self.accept("OP", ","):
                break
        self.take("OP", "}")
        return Mask(tuple(entries))

    def operand(self) -> Operand:
        if self.at("PLACEHOLDER"):
            return Placeholder(self.take("PLACEHOLDER").value)
        if self.at("OP", "{"):
            return self.mask()
        return self.ident()

    def st_updateweights(self, pos):
        lhs = self.operand()
        self.take("OP", "+=")
        if self.at("NUMBER"):
            coef = self.number()
            self.take("OP", "*")
            src = self.operand()
            if isinstance(lhs, Mask) or isinstance(src, Mask):
                raise self.error("a coefficient cannot scale a mask update")
            return UpdateWeights(lhs, src, coef, pos)
        mid = self.operand()
        if self.accept("OP", "*"):
            return GenericUpdate(lhs, mid, self.operand(), pos)
        if isinstance(lhs, Mask) or isinstance(mid, Mask):
            raise self.error("mask updates need the form ROWMASK += COLMASK * ROWMASK")
        return UpdateWeights(lhs, mid, 1.0, pos)

    def st_subgraph(self, pos):
        name = self.ident()
        self.take("OP", "=")
        self.take("KEYWORD", "#cells")
        cells = []
        while self.at("IDENT") or self.at("ELLIPSIS") or self.at("PLACEHOLDER"):
            t = self.tok
            self.i += 1
            cells.append(t.value if t.tag == "IDENT" else Placeholder(t.value))
        if not cells:
            raise self.error("#cells needs at least one neuron")
        return SubgraphDecl(name, tuple(cells), pos)

    def st_new_copy(self, pos):
        name = self.ident()
        self.take("OP", "=")
        self.take("KEYWORD", "#deepcopyof")
        source = self.ident()
        variant = alpha = None
        if self.accept("KEYWORD", "#variant"):
            tok = self.tok
            v = self.number()
            if v != int(v):
                raise self.error("variant must be an integer", tok)
            variant = int(v)
            if self.accept("KEYWORD", "#alpha"):
                alpha = self.number()
        return NewCopy(name, source, variant, alpha, pos)

    def st_silent(self, pos):
        return SilentDecl(self.ident(), True, pos)

    def st_active(self, pos):
        return SilentDecl(self.ident(), False, pos)


def parse(text: str, file: str | None = None) -> Program:
    p = _Parser(tokenize(text, file), file)
    statements = p.program()
    return Program(statements, file, p.warnings)


# -- pretty printing ---------------------------------------------------------------


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


def _operand(o) -> str:
    if isinstance(o, Placeholder):
        return o.text
    if isinstance(o, Mask):
        return "{" + ", ".join(f"{n}: {_num(c)}" for n, c in o.entries) + "}"
    return o


def _bindings(pairs) -> str:
    return " ".join(f"{p}:{a}" for p, a in pairs) if pairs else "#dummy"


def format_statement(s: Statement) -> str:
    if isinstance(s, KindDecl):
        fam = f" #family {s.family}" if s.family else ""
        return f"#kind {s.name}{fam};"
    if isinstance(s, CellTypeDecl):
        parts = [f"#newcelltype {s.name}"]
        parts += [f"#{d} {k}:{p}" for d, k, p in s.ports]
        if s.transform:
            parts.append(f"#transform {s.transform}")
        return " ".join(parts) + ";"
    if isinstance(s, NeuronDecl):
        text = (f"#neuron {s.type}:{s.name} {_bindings(s.outputs)} = "
                f"#transformof {_bindings(s.inputs)}")
        if s.init is not None:
            init = _operand(s.init) if isinstance(s.init, Mask) else _num(s.init)
            text += f" #init {init}"
        return text + ";"
    if isinstance(s, UpdateWeights):
        coef = "" if s.coef == 1.0 else f"{_num(s.coef)} * "
        return f"#updateweights {_operand(s.target)} += {coef}{_operand(s.source)};"
    if isinstance(s, GenericUpdate):
        return (f"#updateweights {_operand(s.gamma)} += "
                f"{_operand(s.alpha)} * {_operand(s.beta)};")
    if isinstance(s, SubgraphDecl):
        return f"#subgraph {s.name} = #cells {' '.join(map(_operand, s.cells))};"
    if isinstance(s, NewCopy):
        text = f"#new-copy {s.name} = #deepcopyof {s.source}"
        if s.variant is not None:
            text += f" #variant {s.variant}"
            if s.alpha is not None:
                text += f" #alpha {_num(s.alpha)}"
        return text + ";"
    if isinstance(s, SilentDecl):
        return f"#{'silent' if s.flag else 'active'} {s.name};"
    raise TypeError(f"not a statement: {s!r}")


def format_program(program: Program) -> str:
    return "".join(format_statement(s) + "\n" for s in program.statements)
