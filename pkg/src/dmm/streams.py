"""Linear stream kinds and their algebra.

Every stream kind is closed under addition and scaling by a scalar. Scalars are
plain Python floats; every other kind is a sparse vector whose absent
coordinates are exact zeros.
"""
from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Any, ClassVar


class StreamError(ValueError):
    """Raised on kind mismatches and non-finite numbers."""


class Family(enum.Enum):
    SCALAR = "scalar"
    CVECTOR = "c-vector"
    MATRIX = "network-matrix"
    ROW = "matrix-row"
    COLUMN = "matrix-column"


@dataclass(frozen=True)
class StreamKind:
    name: str
    family: Family

    def __str__(self) -> str:
        return self.name


# Kinds usable without a `#kind` declaration.
BUILTIN_KINDS = {
    "real": StreamKind("real", Family.SCALAR),
    "c-vector": StreamKind("c-vector", Family.CVECTOR),
    "matrix": StreamKind("matrix", Family.MATRIX),
    "matrix-row": StreamKind("matrix-row", Family.ROW),
    "matrix-column": StreamKind("matrix-column", Family.COLUMN),
}
REAL = BUILTIN_KINDS["real"]
CVECTOR = BUILTIN_KINDS["c-vector"]
MATRIX = BUILTIN_KINDS["matrix"]
ROW = BUILTIN_KINDS["matrix-row"]
COLUMN = BUILTIN_KINDS["matrix-column"]


def check_scalar(x: Any) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise StreamError(f"expected a real number, got {type(x).__name__}")
    x = float(x)
    if not math.isfinite(x):
        raise StreamError(f"non-finite scalar {x!r}")
    return x


class _EndOfString:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EOS"

    def __reduce__(self):
        return (_EndOfString, ())


EOS = _EndOfString()
EOS_KEY = "<EOS>"


def symbol_sort_key(s) -> tuple:
    """Total order on symbols; EOS sorts after every character."""
    return (1, 0) if s is EOS else (0, ord(s))


def _check_symbol(s) -> None:
    if s is EOS:
        return
    if not isinstance(s, str) or len(s) != 1:
        raise StreamError(f"c-vector coordinate must be one character or EOS, got {s!r}")


class SparseVector(Mapping):
    """Immutable finitely supported vector with canonical sparsity.

    Subclasses fix the key space (``_check_key``) and the stream family.
    Missing keys read as exact 0.
    """

    __slots__ = ("_data", "_hash")
    family: ClassVar[Family]
    _by_family: ClassVar[dict[Family, type]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if "family" in cls.__dict__:
            SparseVector._by_family[cls.family] = cls

    def __init__(self, entries: Mapping | Iterable = ()):
        data = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for k, v in items:
            self._check_key(k)
            v = check_scalar(v)
            if v != 0.0:
                data[k] = v
        self._data = data
        self._hash = None

    @classmethod
    def _check_key(cls, key) -> None:
        pass

    @classmethod
    def _trusted(cls, data: dict):
        # data already canonical and validated
        obj = cls.__new__(cls)
        obj._data = data
        obj._hash = None
        return obj

    def __getitem__(self, key) -> float:
        return self._data.get(key, 0.0)

    def __contains__(self, key) -> bool:
        return key in self._data

    def __iter__(self) -> Iterator:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return type(self) is type(other) and self._data == other._data

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((type(self).__name__, frozenset(self._data.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._data!r})"

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self).combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self).combine([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, w):
        return self.scale(w)

    __rmul__ = __mul__

    def scale(self, w: float):
        return type(self).combine([(w, self)])

    def max_abs(self) -> float:
        return max((abs(v) for v in self._data.values()), default=0.0)

    @classmethod
    def zero(cls):
        return cls._trusted({})

    @classmethod
    def combine(cls, terms: Iterable[tuple[float, "SparseVector"]]):
        """Weighted sum of same-class vectors.

        Exact-0 weights are skipped entirely; a lone weight-1 term returns
        its value unchanged.
        """
        live = []
        for w, v in terms:
            w = check_scalar(w)
            if type(v) is not cls:
                raise StreamError(f"expected {cls.__name__}, got {type(v).__name__}")
            if w != 0.0:
                live.append((w, v))
        if not live:
            return cls.zero()
        if len(live) == 1 and live[0][0] == 1.0:
            return live[0][1]
        acc: dict = {}
        for w, v in live:
            for k, x in v._data.items():
                prev = acc.get(k)
                acc[k] = w * x if prev is None else prev + w * x
        out = {}
        for k, x in acc.items():
            if not math.isfinite(x):
                raise StreamError(f"overflow at coordinate {k!r}")
            if x != 0.0:
                out[k] = x
        return cls._trusted(out)


class CVector(SparseVector):
    """Sparse vector over characters plus the EOS symbol."""

    __slots__ = ()
    family = Family.CVECTOR

    @classmethod
    def _check_key(cls, key) -> None:
        _check_symbol(key)

    @classmethod
    def one_hot(cls, symbol) -> "CVector":
        _check_symbol(symbol)
        return cls._trusted({symbol: 1.0})

    def sorted_items(self) -> list:
        return sorted(self._data.items(), key=lambda kv: symbol_sort_key(kv[0]))

    def to_json(self) -> dict:
        return {(EOS_KEY if k is EOS else k): v for k, v in self.sorted_items()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CVector":
        return cls({(EOS if k == EOS_KEY else k): v for k, v in obj.items()})


def family_of(value) -> Family:
    if isinstance(value, SparseVector):
        return type(value).family
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Family.SCALAR
    raise StreamError(f"not a stream value: {value!r}")


def zero_of(kind: StreamKind):
    if kind.family is Family.SCALAR:
        return 0.0
    return SparseVector._by_family[kind.family].zero()


def check_value(kind: StreamKind, value) -> None:
    if family_of(value) is not kind.family:
        raise StreamError(f"value of family {family_of(value).value} where {kind} expected")
    if kind.family is Family.SCALAR:
        check_scalar(value)


def lin_comb(kind: StreamKind, terms: Iterable[tuple[float, Any]]):
    """Return sum(w * v) under the algebra of ``kind``."""
    terms = list(terms)
    for _, v in terms:
        check_value(kind, v)
    if kind.family is not Family.SCALAR:
        return SparseVector._by_family[kind.family].combine(terms)
    acc = None
    for w, v in terms:
        w = check_scalar(w)
        if w == 0.0:
            continue
        x = w * v
        if acc is None:
            acc = x
        elif x != 0.0:
            acc = acc + x
    if acc is None:
        return 0.0
    return check_scalar(acc)


def cvector_max_norm(v: CVector) -> float:
    return v.max_abs()


def cvector_dot(u: CVector, v: CVector) -> float:
    if len(v) < len(u):
        u, v = v, u
    total = 0.0
    for k, x in u._data.items():
        y = v._data.get(k)
        if y is not None:
            total += x * y
    return total


def encode_text(text: str) -> list[CVector]:
    """1-of-N encode each character, followed by EOS."""
    return [CVector.one_hot(ch) for ch in text] + [CVector.one_hot(EOS)]
