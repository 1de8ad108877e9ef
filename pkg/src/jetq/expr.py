"""Sesqui-holomorphic kernel expressions: immutable trees, parser, serializer.

A kernel K(z, w-bar) is written in 2m independent complex variables: the
holomorphic slot z1..zm and the anti-holomorphic slot wb1..wbm.  There is no
conjugation node; sesqui-holomorphy is structural, so calculus in either slot
is ordinary one-variable calculus.  Named parameters are real-valued and may
only appear as scalars or as pow exponents.

Two tree dialects coexist:

* the parser image, which keeps ``sub``/``div``/``neg`` nodes exactly as
  written so that ``parse(serialize(e)) == e`` holds structurally, and
* the canonical form produced by :func:`canonicalize` and the smart
  constructors (n-ary sorted ``add``/``mul``, no ``sub``/``div``/``neg``,
  constants folded), which the differentiation engine uses so that mixed
  partials taken in different orders yield identical trees.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

KINDS = frozenset({
    "const", "var", "param",
    "add", "sub", "mul", "div", "neg",
    "pow", "log", "exp",
})

_SLOTS = ("z", "wb")


class KernelSyntaxError(ValueError):
    """Raised on malformed kernel text; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class KernelExpr:
    """One node of an immutable kernel expression tree."""

    kind: str
    args: tuple["KernelExpr", ...] = ()
    value: complex = 0j      # payload for "const"
    name: str = ""           # payload for "param"
    index: int = 0           # payload for "var", 1-based
    slot: str = ""           # payload for "var", "z" or "wb"
    _hash: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        object.__setattr__(
            self,
            "_hash",
            hash((self.kind, self.args, self.value, self.name, self.index, self.slot)),
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"<{serialize(self)}>"


# ---------------------------------------------------------------------------
# raw constructors (parser image)

def const(v) -> KernelExpr:
    return KernelExpr("const", value=complex(v))


def var(slot: str, index: int) -> KernelExpr:
    if slot not in _SLOTS:
        raise ValueError(f"variable slot must be 'z' or 'wb', got {slot!r}")
    if index < 1:
        raise ValueError("variable indices are 1-based")
    return KernelExpr("var", index=index, slot=slot)


def z(index: int) -> KernelExpr:
    return var("z", index)


def wb(index: int) -> KernelExpr:
    return var("wb", index)


def param(name: str) -> KernelExpr:
    return KernelExpr("param", name=name)


def add(a, b) -> KernelExpr:
    return KernelExpr("add", (a, b))


def sub(a, b) -> KernelExpr:
    return KernelExpr("sub", (a, b))


def mul(a, b) -> KernelExpr:
    return KernelExpr("mul", (a, b))


def div(a, b) -> KernelExpr:
    return KernelExpr("div", (a, b))


def neg(a) -> KernelExpr:
    return KernelExpr("neg", (a,))


def pow(base, exponent) -> KernelExpr:  # noqa: A001 - DSL builder
    if contains_var(exponent):
        raise ValueError("pow exponents must be variable-free (real literal or parameter)")
    return KernelExpr("pow", (base, exponent))


def log(a) -> KernelExpr:  # noqa: A001
    return KernelExpr("log", (a,))


def exp(a) -> KernelExpr:
    return KernelExpr("exp", (a,))


# ---------------------------------------------------------------------------
# tree queries

def contains_var(e: KernelExpr, slot: str | None = None) -> bool:
    if e.kind == "var":
        return slot is None or e.slot == slot
    return any(contains_var(a, slot) for a in e.args)


def max_var_index(e: KernelExpr) -> int:
    if e.kind == "var":
        return e.index
    return max((max_var_index(a) for a in e.args), default=0)


def parameter_names(e: KernelExpr) -> set[str]:
    if e.kind == "param":
        return {e.name}
    names: set[str] = set()
    for a in e.args:
        names |= parameter_names(a)
    return names


def validate_dimension(e: KernelExpr, dimension: int) -> None:
    if max_var_index(e) > dimension:
        raise ValueError(
            f"variable index {max_var_index(e)} exceeds declared dimension {dimension}"
        )


# ---------------------------------------------------------------------------
# canonical form

_KIND_RANK = {
    "const": 0, "param": 1, "var": 2,
    "pow": 3, "exp": 4, "log": 5, "mul": 6, "add": 7,
    # parser-only kinds, ranked for completeness
    "neg": 8, "sub": 9, "div": 10,
}


def _sort_key(e: KernelExpr):
    if e.kind == "const":
        return (0, (e.value.real, e.value.imag))
    if e.kind == "param":
        return (1, e.name)
    if e.kind == "var":
        return (2, (e.slot, e.index))
    return (_KIND_RANK[e.kind], tuple(_sort_key(a) for a in e.args))


def cadd(*terms: KernelExpr) -> KernelExpr:
    """Flattened, constant-folded, sorted n-ary sum."""
    flat: list[KernelExpr] = []
    c = 0j
    for t in terms:
        if t.kind == "add":
            for a in t.args:
                if a.kind == "const":
                    c += a.value
                else:
                    flat.append(a)
        elif t.kind == "const":
            c += t.value
        else:
            flat.append(t)
    flat.sort(key=_sort_key)
    if c != 0 or not flat:
        flat.insert(0, const(c))
    if len(flat) == 1:
        return flat[0]
    return KernelExpr("add", tuple(flat))


def cmul(*factors: KernelExpr) -> KernelExpr:
    """Flattened, constant-folded, sorted n-ary product with zero elimination."""
    flat: list[KernelExpr] = []
    c = 1 + 0j
    for f in factors:
        if f.kind == "mul":
            for a in f.args:
                if a.kind == "const":
                    c *= a.value
                else:
                    flat.append(a)
        elif f.kind == "const":
            c *= f.value
        else:
            flat.append(f)
    if c == 0:
        return const(0)
    flat.sort(key=_sort_key)
    if c != 1 or not flat:
        flat.insert(0, const(c))
    if len(flat) == 1:
        return flat[0]
    return KernelExpr("mul", tuple(flat))


def cneg(e: KernelExpr) -> KernelExpr:
    return cmul(const(-1), e)


def cpow(base: KernelExpr, exponent: KernelExpr) -> KernelExpr:
    if contains_var(exponent):
        raise ValueError("pow exponents must be variable-free")
    if exponent.kind == "const":
        if abs(exponent.value.imag) > 1e-12:
            raise ValueError("pow exponents must be real")
        if exponent.value == 0:
            return const(1)
        if exponent.value == 1:
            return base
    if base.kind == "const":
        if base.value == 1:
            return const(1)
        if exponent.kind == "const":
            return const(base.value ** exponent.value)
    return KernelExpr("pow", (base, exponent))


def cdiv(a: KernelExpr, b: KernelExpr) -> KernelExpr:
    return cmul(a, cpow(b, const(-1)))


def clog(e: KernelExpr) -> KernelExpr:
    if e.kind == "const" and e.value != 0:
        return const(cmath.log(e.value))
    return KernelExpr("log", (e,))


def cexp(e: KernelExpr) -> KernelExpr:
    if e.kind == "const":
        return const(cmath.exp(e.value))
    return KernelExpr("exp", (e,))


def canonicalize(e: KernelExpr, _memo: dict | None = None) -> KernelExpr:
    """Rewrite to the canonical dialect: no sub/div/neg, sorted n-ary add/mul."""
    if _memo is None:
        _memo = {}
    got = _memo.get(id(e))
    if got is not None:
        return got
    k = e.kind
    if k in ("const", "var", "param"):
        out = e
    else:
        a = [canonicalize(x, _memo) for x in e.args]
        if k == "add":
            out = cadd(*a)
        elif k == "sub":
            out = cadd(a[0], cneg(a[1]))
        elif k == "mul":
            out = cmul(*a)
        elif k == "div":
            out = cdiv(a[0], a[1])
        elif k == "neg":
            out = cneg(a[0])
        elif k == "pow":
            out = cpow(a[0], a[1])
        elif k == "log":
            out = clog(a[0])
        else:
            out = cexp(a[0])
    _memo[id(e)] = out
    return out


# ---------------------------------------------------------------------------
# affine change of coordinates

def substitute_affine(e: KernelExpr, matrix, shift=None) -> KernelExpr:
    """Replace z_i by sum_j A[i][j] z_j + b[i]; wb gets the conjugated map.

    ``matrix`` is an m x n nested sequence of complex entries mapping the n
    new variables to the m old ones, ``shift`` an optional length-m vector.
    The returned tree is canonical and lives in dimension n.
    """
    rows = [list(map(complex, r)) for r in matrix]
    m = len(rows)
    if shift is None:
        shift = [0j] * m
    shift = list(map(complex, shift))
    if max_var_index(e) > m:
        raise ValueError("substitution matrix has fewer rows than variable indices used")

    def image(slot: str, i: int) -> KernelExpr:
        row, b = rows[i - 1], shift[i - 1]
        if slot == "wb":
            row, b = [c.conjugate() for c in row], b.conjugate()
        terms = [cmul(const(c), var(slot, j + 1)) for j, c in enumerate(row) if c != 0]
        if b != 0:
            terms.append(const(b))
        return cadd(*terms) if terms else const(0)

    def walk(node: KernelExpr) -> KernelExpr:
        if node.kind == "var":
            return image(node.slot, node.index)
        if node.kind in ("const", "param"):
            return node
        return KernelExpr(node.kind, tuple(walk(a) for a in node.args),
                          value=node.value, name=node.name,
                          index=node.index, slot=node.slot)

    return canonicalize(walk(e))


# ---------------------------------------------------------------------------
# parser

_FUNCTIONS = ("log", "exp")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._run()
        self.cursor = 0

    def _run(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch in "+-*/^()":
                self.tokens.append((ch, ch, i))
                i += 1
                continue
            if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        while k < n and text[k].isdigit():
                            k += 1
                        j = k
                lit = text[i:j]
                if j < n and text[j] == "i":
                    self.tokens.append(("inum", lit, i))
                    j += 1
                else:
                    self.tokens.append(("num", lit, i))
                i = j
                continue
            if ch.isalpha():
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            raise KernelSyntaxError(f"unexpected character {ch!r}", i)
        self.tokens.append(("eof", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.cursor]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.cursor]
        self.cursor += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise KernelSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return self.next()


def _ident_node(name: str, offset: int, dimension: int) -> KernelExpr:
    for slot in _SLOTS:
        if name.startswith(slot) and name[len(slot):].isdigit():
            idx = int(name[len(slot):])
            if idx < 1 or idx > dimension:
                raise KernelSyntaxError(
                    f"variable {name!r} outside declared dimension {dimension}", offset)
            return var(slot, idx)
    if name in _FUNCTIONS:
        raise KernelSyntaxError(f"{name!r} is a reserved function name", offset)
    return param(name)


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.lex = _Lexer(text)
        self.dimension = dimension

    def parse(self) -> KernelExpr:
        e = self.expr()
        tok = self.lex.peek()
        if tok[0] != "eof":
            raise KernelSyntaxError(f"unexpected token {tok[1]!r}", tok[2])
        return e

    def expr(self) -> KernelExpr:
        e = self.term()
        while self.lex.peek()[0] in ("+", "-"):
            op = self.lex.next()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> KernelExpr:
        e = self.factor()
        while self.lex.peek()[0] in ("*", "/"):
            op = self.lex.next()[0]
            rhs = self.factor()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def factor(self) -> KernelExpr:
        if self.lex.peek()[0] == "-":
            self.lex.next()
            return neg(self.factor())
        base = self.base()
        if self.lex.peek()[0] == "^":
            self.lex.next()
            return pow(base, self.exponent())
        return base

    def base(self) -> KernelExpr:
        kind, lit, off = self.lex.next()
        if kind == "num":
            return const(float(lit))
        if kind == "inum":
            return const(float(lit) * 1j)
        if kind == "ident":
            if lit in _FUNCTIONS and self.lex.peek()[0] == "(":
                self.lex.next()
                arg = self.expr()
                self.lex.expect(")")
                return log(arg) if lit == "log" else exp(arg)
            return _ident_node(lit, off, self.dimension)
        if kind == "(":
            e = self.expr()
            self.lex.expect(")")
            return e
        raise KernelSyntaxError(f"unexpected token {lit!r}", off)

    def exponent(self) -> KernelExpr:
        # signed-number | ident | "(" "-"? (ident | number) ")"
        kind, lit, off = self.lex.peek()
        if kind == "-":
            self.lex.next()
            kind2, lit2, off2 = self.lex.expect("num")
            return const(-float(lit2))
        if kind == "num":
            self.lex.next()
            return const(float(lit))
        if kind == "ident":
            self.lex.next()
            return _ident_node(lit, off, self.dimension)
        if kind == "(":
            self.lex.next()
            negate = False
            if self.lex.peek()[0] == "-":
                self.lex.next()
                negate = True
            k2, l2, o2 = self.lex.next()
            if k2 == "num":
                inner: KernelExpr = const(-float(l2) if negate else float(l2))
            elif k2 == "ident":
                node = _ident_node(l2, o2, self.dimension)
                if node.kind != "param":
                    raise KernelSyntaxError("exponent identifiers must be parameters", o2)
                inner = neg(node) if negate else node
            else:
                raise KernelSyntaxError(f"bad exponent token {l2!r}", o2)
            self.lex.expect(")")
            return inner
        raise KernelSyntaxError(f"bad exponent token {lit!r}", off)


def parse_kernel(text: str, dimension: int) -> KernelExpr:
    """Parse kernel text into an expression tree over z1..zm, wb1..wbm."""
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    return _Parser(text, dimension).parse()


# ---------------------------------------------------------------------------
# serializer

_PREC = {
    "add": 1, "sub": 1,
    "mul": 2, "div": 2,
    "neg": 3, "pow": 3,
    "const": 4, "var": 4, "param": 4, "log": 4, "exp": 4,
}


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_const(v: complex) -> str:
    if v.imag == 0:
        return _fmt_real(v.real)
    if v.real == 0:
        return _fmt_real(v.imag) + "i"
    return f"({_fmt_real(v.real)} + {_fmt_real(v.imag)}i)"


def _wrap(e: KernelExpr, limit: int, strict: bool) -> str:
    s = serialize(e)
    p = _PREC[e.kind]
    if p < limit or (strict and p == limit):
        return f"({s})"
    return s


def _fmt_exponent(e: KernelExpr) -> str:
    if e.kind == "const" and e.value.imag == 0:
        s = _fmt_real(e.value.real)
        return f"({s})" if e.value.real < 0 else s
    if e.kind == "param":
        return e.name
    if e.kind == "neg" and e.args[0].kind == "param":
        return f"(-{e.args[0].name})"
    # canonical-dialect exponents (e.g. -l - 1); not reparseable, debug only
    return f"({serialize(e)})"


def serialize(e: KernelExpr) -> str:
    """Render an expression; inverts parse_kernel on parser-image trees."""
    k = e.kind
    if k == "const":
        return _fmt_const(e.value)
    if k == "var":
        return f"{e.slot}{e.index}"
    if k == "param":
        return e.name
    if k in ("add", "sub"):
        op = " + " if k == "add" else " - "
        parts = [_wrap(e.args[0], _PREC[k], strict=False)]
        parts += [_wrap(a, _PREC[k], strict=True) for a in e.args[1:]]
        return op.join(parts)
    if k in ("mul", "div"):
        op = "*" if k == "mul" else "/"
        parts = [_wrap(e.args[0], _PREC[k], strict=False)]
        parts += [_wrap(a, _PREC[k], strict=True) for a in e.args[1:]]
        return op.join(parts)
    if k == "neg":
        return "-" + _wrap(e.args[0], _PREC["neg"], strict=False)
    if k == "pow":
        return _wrap(e.args[0], 4, strict=False) + "^" + _fmt_exponent(e.args[1])
    if k == "log":
        return f"log({serialize(e.args[0])})"
    return f"exp({serialize(e.args[0])})"


# ---------------------------------------------------------------------------
# kernel spec files

def parse_kernel_file(text: str) -> tuple[KernelExpr, int, dict[str, float]]:
    """Parse the 'dim = / kernel = / params =' file format.

    Returns (expression, dimension, parameter bindings).
    """
    dim: int | None = None
    kernel_text: str | None = None
    params: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rhs = line.partition("=")
        key = key.strip().lower()
        if key == "dim":
            dim = int(rhs.strip())
        elif key == "kernel":
            kernel_text = rhs.strip()
        elif key == "params":
            for item in rhs.split(","):
                item = item.strip()
                if not item:
                    continue
                name, _, val = item.partition("=")
                params[name.strip()] = float(val.strip())
        else:
            raise ValueError(f"unknown kernel-file key {key!r}")
    if dim is None or kernel_text is None:
        raise ValueError("kernel file must declare both 'dim' and 'kernel'")
    expr = parse_kernel(kernel_text, dim)
    return expr, dim, params
