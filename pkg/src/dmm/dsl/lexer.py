"""Tokenizer for .dmm program text."""
from __future__ import annotations

import re
from dataclasses import dataclass


class DmmSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int, file: str | None = None):
        self.message, self.line, self.column, self.file = message, line, column, file
        where = f"{file or '<input>'}:{line}:{column}"
        super().__init__(f"{where}: error: {message}")


@dataclass(frozen=True)
class Token:
    tag: str
    value: str
    line: int
    column: int


TOKEN_SPEC = [
    ("COMMENT", r"//[^\n]*"),
    ("NEWLINE", r"\n"),
    ("SKIP", r"[ \t\r\f]+"),
    ("KEYWORD", r"\#[A-Za-z][A-Za-z0-9-]*"),
    ("PLACEHOLDER", r"<[^<>;\n]*>"),
    ("ELLIPSIS", r"\.\.\.|…"),
    ("NUMBER", r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_-]*(?:\.[A-Za-z_][A-Za-z0-9_-]*)*"),
    ("OP", r"\+=|[=;:*{},]"),
    ("MISMATCH", r"."),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{tag}>{rx})" for tag, rx in TOKEN_SPEC))

KEYWORDS = {
    "#kind", "#family", "#newcelltype", "#input", "#output", "#transform",
    "#neuron", "#transformof", "#dummy", "#init", "#updateweights",
    "#subgraph", "#cells", "#new-copy", "#deepcopyof", "#variant", "#alpha",
    "#silent", "#active",
}


def tokenize(text: str, file: str | None = None) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    for mo in _TOKEN_RE.finditer(text):
        tag, value = mo.lastgroup, mo.group()
        column = mo.start() - line_start + 1
        if tag == "NEWLINE":
            line += 1
            line_start = mo.end()
            continue
        if tag in ("SKIP", "COMMENT"):
            continue
        if tag == "MISMATCH":
            raise DmmSyntaxError(f"unexpected character {value!r}", line, column, file)
        if tag == "KEYWORD" and value not in KEYWORDS:
            raise DmmSyntaxError(f"unknown keyword {value}", line, column, file)
        tokens.append(Token(tag, value, line, column))
    tokens.append(Token("EOF", "", line, len(text) - line_start + 1))
    return tokens
