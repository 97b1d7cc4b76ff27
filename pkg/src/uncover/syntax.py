"""Surface language, normalization to core form, and postcondition lowering.

Concrete syntax::

    vars x, y, z;
    funs n/1, f/2;
    rels R/1;          # optional, removed by normalize()
    consts c;          # optional, removed by normalize()
    program {
        assume(x != z);
        y := n(x);
        while (y != z) { x := n(x); y := n(y); }
    }
    post: z = n_x;

Recursive programs replace ``program`` with one or more method
definitions ``method m(out b) { ... }``; calls are written
``b := m(x, k, b)`` (or ``<b, d> := m()``) and must pass every variable in
declaration order, or nothing at all.  ``main: m;`` picks the entry method
(default: ``main`` if defined, else the first method).

Names starting with ``$`` are reserved for variables and functions
introduced by normalization and ghost construction.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Union

RESERVED = "$"
TOP = "$top"


class SyntaxProblem(Exception):
    """Parse or well-formedness error with a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"


# --------------------------------------------------------------------------
# conditions and postconditions

@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Neq:
    left: str
    right: str


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Const:
    value: bool


Formula = Union[Eq, Neq, Rel, Not, Or, And, Const]
Atom = Union[Eq, Neq]


def negate_atom(a: Atom) -> Atom:
    return Neq(a.left, a.right) if isinstance(a, Eq) else Eq(a.left, a.right)


def formula_vars(phi: Formula) -> set[str]:
    if isinstance(phi, (Eq, Neq)):
        return {phi.left, phi.right}
    if isinstance(phi, Rel):
        return set(phi.args)
    if isinstance(phi, Not):
        return formula_vars(phi.arg)
    if isinstance(phi, (Or, And)):
        return formula_vars(phi.left) | formula_vars(phi.right)
    return set()


# --------------------------------------------------------------------------
# statements

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class AssignVar:
    target: str
    source: str


@dataclass(frozen=True)
class AssignFn:
    target: str
    fn: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Assume:
    cond: Formula


@dataclass(frozen=True)
class Seq:
    items: tuple["Stmt", ...]


@dataclass(frozen=True)
class If:
    cond: Formula
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class While:
    cond: Formula
    body: "Stmt"


@dataclass(frozen=True)
class CallStmt:
    targets: tuple[str, ...]
    method: str


@dataclass(frozen=True)
class Choice:
    """Nondeterministic branch; produced by normalization and lowering."""

    options: tuple["Stmt", ...]


@dataclass(frozen=True)
class Star:
    """Zero or more repetitions; produced when a loop guard is compound."""

    body: "Stmt"


Stmt = Union[Skip, AssignVar, AssignFn, Assume, Seq, If, While, CallStmt, Choice, Star]


def seq(*items: Stmt) -> Stmt:
    flat: list[Stmt] = []
    for s in items:
        if isinstance(s, Seq):
            flat.extend(s.items)
        elif not isinstance(s, Skip):
            flat.append(s)
    if not flat:
        return Skip()
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def choice(*options: Stmt) -> Stmt:
    if len(options) == 1:
        return options[0]
    return Choice(tuple(options))


# --------------------------------------------------------------------------
# programs

@dataclass(frozen=True)
class Signature:
    variables: tuple[str, ...]
    functions: tuple[tuple[str, int], ...] = ()
    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    @property
    def arity(self) -> dict[str, int]:
        return dict(self.functions)


@dataclass(frozen=True)
class Method:
    name: str
    outs: tuple[str, ...]
    body: Stmt


@dataclass(frozen=True)
class Program:
    signature: Signature
    body: Stmt | None = None
    post: Formula | None = None
    methods: tuple[Method, ...] = ()
    main: str | None = None

    @property
    def recursive(self) -> bool:
        return bool(self.methods)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.signature.variables

    def method(self, name: str) -> Method:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def outs(self) -> dict[str, tuple[str, ...]]:
        return {m.name: m.outs for m in self.methods}


# --------------------------------------------------------------------------
# lexer / parser

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+) |
    (?P<nl>\n) |
    (?P<comment>\#[^\n]*|//[^\n]*) |
    (?P<name>[$A-Za-z_][A-Za-z0-9_$']*) |
    (?P<int>[0-9]+) |
    (?P<op>:=|!=|==|=>|\|\||&&|[{}();,:<>/=!])
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "vars", "funs", "rels", "consts", "program", "method", "out", "post",
    "skip", "assume", "if", "then", "else", "while", "choose", "or", "loop",
    "true", "false",
}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SyntaxProblem(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, filename)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str, filename: str, allow_reserved: bool):
        self.toks = tokenize(text, filename)
        self.i = 0
        self.filename = filename
        self.allow_reserved = allow_reserved
        self.variables: list[str] = []
        self.functions: dict[str, int] = {}
        self.relations: dict[str, int] = {}
        self.constants: list[str] = []
        self.method_outs: dict[str, tuple[str, ...]] = {}

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> SyntaxProblem:
        tok = tok or self.tok
        return SyntaxProblem(msg, tok.line, tok.col, self.filename)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "name")

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            shown = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{shown}'")
        return t

    def name(self, what: str = "name") -> Token:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            shown = t.text or "end of input"
            raise self.error(f"expected {what}, found '{shown}'")
        if t.text.startswith(RESERVED) and not self.allow_reserved:
            raise self.error(f"names starting with '{RESERVED}' are reserved: {t.text}")
        self.i += 1
        return t

    def names(self) -> list[Token]:
        out = [self.name()]
        while self.accept(","):
            out.append(self.name())
        return out

    # declarations
    def declare(self, tok: Token, table: set[str]) -> None:
        if tok.text in table:
            raise self.error(f"duplicate declaration of '{tok.text}'", tok)
        table.add(tok.text)

    def parse_file(self) -> Program:
        seen: set[str] = set()
        bodies: list[tuple[Token, Token | None, list[Token], int]] = []
        program_tok: tuple[int, Token] | None = None
        post_at: int | None = None
        main: Token | None = None
        while self.tok.kind != "eof":
            if self.accept("vars"):
                for t in self.names():
                    self.declare(t, seen)
                    self.variables.append(t.text)
                self.expect(";")
            elif self.accept("consts"):
                for t in self.names():
                    self.declare(t, seen)
                    self.constants.append(t.text)
                self.expect(";")
            elif self.at("funs") or self.at("rels"):
                table = self.functions if self.tok.text == "funs" else self.relations
                self.i += 1
                while True:
                    t = self.name()
                    self.declare(t, seen)
                    self.expect("/")
                    n = self.tok
                    if n.kind != "int" or int(n.text) < 1:
                        raise self.error("arity must be a positive integer")
                    self.i += 1
                    table[t.text] = int(n.text)
                    if not self.accept(","):
                        break
                self.expect(";")
            elif self.at("main") and self.toks[self.i + 1].text == ":":
                self.i += 2
                main = self.name("method name")
                self.expect(";")
            elif self.at("method"):
                kw = self.tok
                self.i += 1
                mname = self.name("method name")
                self.declare(mname, seen)
                self.expect("(")
                outs: list[Token] = []
                if self.accept("out"):
                    outs = self.names()
                self.expect(")")
                start = self.i
                self._skip_block()
                bodies.append((kw, mname, outs, start))
            elif self.at("program"):
                program_tok = (self.i + 1, self.tok)
                self.i += 1
                self._skip_block()
            elif self.accept("post"):
                self.expect(":")
                post_at = self.i
                self._skip_until(";")
                self.expect(";")
            else:
                shown = self.tok.text
                raise self.error(f"unexpected '{shown}' at top level")
        if not self.variables:
            raise SyntaxProblem("no variables declared ('vars ...;' is required)", 1, 1, self.filename)
        var_set = set(self.variables)
        for _, mname, outs, _ in bodies:
            if len({o.text for o in outs}) != len(outs):
                raise self.error(f"output variables of '{mname.text}' must be distinct", mname)
            for o in outs:
                if o.text not in var_set:
                    raise self.error(f"undeclared variable '{o.text}'", o)
            self.method_outs[mname.text] = tuple(o.text for o in outs)

        methods = []
        for _, mname, outs, start in bodies:
            self.i = start
            body = self.block()
            methods.append(Method(mname.text, self.method_outs[mname.text], body))
        body = None
        if program_tok is not None:
            self.i = program_tok[0]
            body = self.block()
        if body is None and not methods:
            raise SyntaxProblem("missing 'program { ... }' block", self.tok.line, self.tok.col, self.filename)
        main_name = None
        if methods:
            if body is not None:
                if "main" in self.method_outs:
                    raise self.error("'program' block conflicts with a method named 'main'", program_tok[1])
                methods.append(Method("main", (), body))
                body = None
                main_name = "main"
            if main is not None:
                if main.text not in self.method_outs and main.text != "main":
                    raise self.error(f"undefined method '{main.text}'", main)
                main_name = main.text
            elif main_name is None:
                main_name = "main" if "main" in self.method_outs else methods[0].name
        elif main is not None:
            raise self.error("'main:' requires method definitions", main)
        post = None
        if post_at is not None:
            self.i = post_at
            post = self.formula(post=True)
        sig = Signature(
            tuple(self.variables),
            tuple(self.functions.items()),
            tuple(self.relations.items()),
            tuple(self.constants),
        )
        return Program(sig, body, post, tuple(methods), main_name)

    def _skip_block(self) -> None:
        self.expect("{")
        depth = 1
        while depth:
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            if self.at("{"):
                depth += 1
            elif self.at("}"):
                depth -= 1
            self.i += 1

    def _skip_until(self, text: str) -> None:
        while not self.at(text):
            if self.tok.kind == "eof":
                raise self.error(f"expected '{text}'")
            self.i += 1

    # statements
    def block(self) -> Stmt:
        self.expect("{")
        items: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("expected '}'")
            stmt, blocky = self.statement()
            items.append(stmt)
            if not self.accept(";") and not blocky and not self.at("}"):
                raise self.error(f"expected ';', found '{self.tok.text or 'end of input'}'")
        self.expect("}")
        return seq(*items) if items else Skip()

    def body(self) -> Stmt:
        if self.at("{"):
            return self.block()
        stmt, _ = self.statement()
        return stmt

    def variable(self) -> str:
        t = self.name("variable")
        if t.text not in self.variables and t.text not in self.constants:
            raise self.error(f"undeclared variable '{t.text}'", t)
        return t.text

    def assignable(self) -> str:
        t = self.name("variable")
        if t.text in self.constants:
            raise self.error(f"cannot assign to constant '{t.text}'", t)
        if t.text not in self.variables:
            raise self.error(f"undeclared variable '{t.text}'", t)
        return t.text

    def statement(self) -> tuple[Stmt, bool]:
        if self.accept("skip"):
            return Skip(), False
        if self.accept("assume"):
            self.expect("(")
            c = self.formula()
            self.expect(")")
            return Assume(c), False
        if self.accept("if"):
            self.expect("(")
            c = self.formula()
            self.expect(")")
            self.accept("then")
            then = self.body()
            orelse: Stmt = Skip()
            if self.accept("else"):
                orelse = self.body()
            return If(c, then, orelse), True
        if self.accept("while"):
            self.expect("(")
            c = self.formula()
            self.expect(")")
            return While(c, self.body()), True
        if self.accept("choose"):
            opts = [self.block()]
            while self.accept("or"):
                opts.append(self.block())
            return Choice(tuple(opts)), True
        if self.accept("loop"):
            return Star(self.block()), True
        if self.accept("<"):
            targets: list[Token] = []
            if not self.at(">"):
                targets = self.names()
            self.expect(">")
            start = self.expect(":=")
            return self.call_rhs([t for t in targets], start), False
        t = self.tok
        target = self.assignable()
        op = self.expect(":=")
        rhs = self.tok
        if rhs.kind == "name" and rhs.text in self.method_outs:
            return self.call_rhs([t], op), False
        src = self.name("expression")
        if self.accept("("):
            if src.text not in self.functions:
                raise self.error(f"undeclared function '{src.text}'", src)
            args = self.args()
            if len(args) != self.functions[src.text]:
                raise self.error(
                    f"arity mismatch: '{src.text}' expects {self.functions[src.text]} "
                    f"argument(s), got {len(args)}",
                    src,
                )
            return AssignFn(target, src.text, tuple(args)), False
        if src.text not in self.variables and src.text not in self.constants:
            raise self.error(f"undeclared variable '{src.text}'", src)
        return AssignVar(target, src.text), False

    def args(self) -> list[str]:
        out: list[str] = []
        if not self.accept(")"):
            out.append(self.variable())
            while self.accept(","):
                out.append(self.variable())
            self.expect(")")
        return out

    def call_rhs(self, targets: list[Token], at: Token) -> Stmt:
        m = self.name("method name")
        if m.text not in self.method_outs:
            raise self.error(f"undefined method '{m.text}'", m)
        self.expect("(")
        passed = self.args()
        if passed and tuple(passed) != tuple(self.variables):
            raise self.error(
                "call arguments must be all variables in declaration order "
                f"({', '.join(self.variables)}) or empty",
                m,
            )
        for t in targets:
            if t.text not in self.variables:
                raise self.error(f"undeclared variable '{t.text}'", t)
        names = tuple(t.text for t in targets)
        if len(set(names)) != len(names):
            raise self.error("call targets must be distinct", at)
        if len(names) != len(self.method_outs[m.text]):
            raise self.error(
                f"method '{m.text}' returns {len(self.method_outs[m.text])} value(s), "
                f"{len(names)} target(s) given",
                at,
            )
        return CallStmt(names, m.text)

    # formulas: '=>' < '||' < '&&' < '!'
    def formula(self, post: bool = False) -> Formula:
        left = self.disj(post)
        if self.accept("=>"):
            right = self.formula(post)
            return Or(Not(left), right)
        return left

    def disj(self, post: bool) -> Formula:
        f = self.conj(post)
        while self.accept("||"):
            f = Or(f, self.conj(post))
        return f

    def conj(self, post: bool) -> Formula:
        f = self.unary(post)
        while self.accept("&&"):
            f = And(f, self.unary(post))
        return f

    def unary(self, post: bool) -> Formula:
        if self.accept("!"):
            return Not(self.unary(post))
        if self.accept("("):
            f = self.formula(post)
            self.expect(")")
            return f
        if self.accept("true"):
            return Const(True)
        if self.accept("false"):
            return Const(False)
        t = self.tok
        if t.kind == "name" and t.text in self.relations:
            if post:
                raise self.error("relations are not allowed in postconditions")
            self.i += 1
            self.expect("(")
            args = self.args()
            if len(args) != self.relations[t.text]:
                raise self.error(
                    f"arity mismatch: '{t.text}' expects {self.relations[t.text]} argument(s), got {len(args)}",
                    t,
                )
            return Rel(t.text, tuple(args))
        left = self.variable()
        if self.accept("=") or self.accept("=="):
            return Eq(left, self.variable())
        if self.accept("!="):
            return Neq(left, self.variable())
        raise self.error(f"expected '=' or '!=' after '{left}'")


def parse_program(text: str, filename: str = "<input>", allow_reserved: bool = False) -> Program:
    return _Parser(text, filename, allow_reserved).parse_file()


def parse_formula(text: str, program: Program, filename: str = "<post>") -> Formula:
    """A postcondition over the program's variables and constants."""
    parser = _Parser(text, filename, False)
    sig = program.signature
    parser.variables = list(sig.variables)
    parser.constants = list(sig.constants)
    parser.relations = dict(sig.relations)
    phi = parser.formula(post=True)
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected '{parser.tok.text}' after formula")
    return phi


def load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), filename=str(path))


# --------------------------------------------------------------------------
# pretty printing (re-parseable, with allow_reserved=True for normalized code)

def format_formula(phi: Formula) -> str:
    if isinstance(phi, Eq):
        return f"{phi.left} = {phi.right}"
    if isinstance(phi, Neq):
        return f"{phi.left} != {phi.right}"
    if isinstance(phi, Rel):
        return f"{phi.name}({', '.join(phi.args)})"
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Not):
        return f"!({format_formula(phi.arg)})"
    op = "||" if isinstance(phi, Or) else "&&"
    return f"({format_formula(phi.left)} {op} {format_formula(phi.right)})"


def format_stmt(s: Stmt, indent: int = 1) -> str:
    pad = "    " * indent
    lines = []
    items = s.items if isinstance(s, Seq) else (s,)
    for item in items:
        lines.append(_format_one(item, indent, pad))
    return "\n".join(lines)


def _block(s: Stmt, indent: int) -> str:
    inner = format_stmt(s, indent + 1)
    return "{\n" + inner + "\n" + "    " * indent + "}"


def _format_one(s: Stmt, indent: int, pad: str) -> str:
    if isinstance(s, Skip):
        return pad + "skip;"
    if isinstance(s, AssignVar):
        return f"{pad}{s.target} := {s.source};"
    if isinstance(s, AssignFn):
        return f"{pad}{s.target} := {s.fn}({', '.join(s.args)});"
    if isinstance(s, Assume):
        return f"{pad}assume({format_formula(s.cond)});"
    if isinstance(s, If):
        return f"{pad}if ({format_formula(s.cond)}) {_block(s.then, indent)} else {_block(s.orelse, indent)}"
    if isinstance(s, While):
        return f"{pad}while ({format_formula(s.cond)}) {_block(s.body, indent)}"
    if isinstance(s, Choice):
        return pad + "choose " + " or ".join(_block(o, indent) for o in s.options)
    if isinstance(s, Star):
        return f"{pad}loop {_block(s.body, indent)}"
    if isinstance(s, CallStmt):
        return f"{pad}<{', '.join(s.targets)}> := {s.method}();"
    raise TypeError(s)


def format_program(p: Program) -> str:
    sig = p.signature
    out = [f"vars {', '.join(sig.variables)};"]
    if sig.functions:
        out.append("funs " + ", ".join(f"{f}/{n}" for f, n in sig.functions) + ";")
    if sig.relations:
        out.append("rels " + ", ".join(f"{f}/{n}" for f, n in sig.relations) + ";")
    if sig.constants:
        out.append(f"consts {', '.join(sig.constants)};")
    if p.recursive:
        out.append(f"main: {p.main};")
        for m in p.methods:
            outs = f"out {', '.join(m.outs)}" if m.outs else ""
            out.append(f"method {m.name}({outs}) " + _block(m.body, 0))
    else:
        out.append("program " + _block(p.body, 0))
    if p.post is not None:
        out.append(f"post: {format_formula(p.post)};")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# normalization

def walk(s: Stmt) -> Iterator[Stmt]:
    yield s
    if isinstance(s, Seq):
        for x in s.items:
            yield from walk(x)
    elif isinstance(s, If):
        yield from walk(s.then)
        yield from walk(s.orelse)
    elif isinstance(s, (While, Star)):
        yield from walk(s.body)
    elif isinstance(s, Choice):
        for x in s.options:
            yield from walk(x)


def _is_atomic(c: Formula) -> bool:
    return isinstance(c, (Eq, Neq))


def is_core(p: Program) -> bool:
    """Core form: no relations, no constants, atomic conditions only."""
    if p.signature.relations or p.signature.constants:
        return False
    bodies = [m.body for m in p.methods] if p.recursive else [p.body]
    for b in bodies:
        for s in walk(b):
            if isinstance(s, (If, While, Assume)) and not _is_atomic(s.cond):
                return False
    return True


@dataclass
class _Normalizer:
    constants: dict[str, str]
    relations: dict[str, int]
    new_vars: list[str] = field(default_factory=list)
    new_funs: dict[str, int] = field(default_factory=dict)

    def var(self, name: str) -> str:
        return self.constants.get(name, name)

    def fresh(self, name: str) -> str:
        if name not in self.new_vars:
            self.new_vars.append(name)
        return name

    def hoist(self, c: Formula) -> tuple[Stmt, Formula]:
        """Replace relation occurrences by flag variables.

        Returns the assignments computing the flags and the rewritten
        relation-free condition.
        """
        pre: list[Stmt] = []
        counts: dict[str, int] = {}

        def go(c: Formula) -> Formula:
            if isinstance(c, Rel):
                counts[c.name] = counts.get(c.name, 0) + 1
                k = counts[c.name]
                flag = self.fresh(f"$b_{c.name}" + ("" if k == 1 else f"_{k}"))
                fn = f"$f_{c.name}"
                self.new_funs[fn] = self.relations[c.name]
                pre.append(AssignFn(flag, fn, tuple(self.var(a) for a in c.args)))
                self.fresh(TOP)
                return Eq(flag, TOP)
            if isinstance(c, Eq):
                return Eq(self.var(c.left), self.var(c.right))
            if isinstance(c, Neq):
                return Neq(self.var(c.left), self.var(c.right))
            if isinstance(c, Not):
                return Not(go(c.arg))
            if isinstance(c, Or):
                return Or(go(c.left), go(c.right))
            if isinstance(c, And):
                return And(go(c.left), go(c.right))
            return c

        out = go(c)
        return seq(*pre), out

    def stmt(self, s: Stmt) -> Stmt:
        if isinstance(s, Skip):
            return s
        if isinstance(s, AssignVar):
            return AssignVar(s.target, self.var(s.source))
        if isinstance(s, AssignFn):
            return AssignFn(s.target, s.fn, tuple(self.var(a) for a in s.args))
        if isinstance(s, CallStmt):
            return s
        if isinstance(s, Seq):
            return seq(*(self.stmt(x) for x in s.items))
        if isinstance(s, Choice):
            return Choice(tuple(self.stmt(x) for x in s.options))
        if isinstance(s, Star):
            return Star(self.stmt(s.body))
        if isinstance(s, Assume):
            pre, c = self.hoist(s.cond)
            paths = [p for p, outcome in guard_paths(c) if outcome]
            if not paths:
                return seq(pre, _block_all())
            return seq(pre, choice(*(seq(*(Assume(a) for a in p)) for p in paths)))
        if isinstance(s, If):
            pre, c = self.hoist(s.cond)
            return seq(pre, cascade(c, self.stmt(s.then), self.stmt(s.orelse)))
        if isinstance(s, While):
            pre, c = self.hoist(s.cond)
            body = self.stmt(s.body)
            if _is_atomic(c):
                return seq(pre, While(c, seq(body, pre)))
            paths = guard_paths(c)
            enter = [seq(*(Assume(a) for a in p)) for p, ok in paths if ok]
            leave = [seq(*(Assume(a) for a in p)) for p, ok in paths if not ok]
            loop = Star(choice(*(seq(e, body, pre) for e in enter))) if enter else Skip()
            exit_ = choice(*leave) if leave else _block_all()
            return seq(pre, loop, exit_)
        raise TypeError(s)


_BLOCK_VAR = "$top"


def _block_all() -> Stmt:
    # an assume no data model satisfies; '$top' is always declared when used
    return Assume(Neq(_BLOCK_VAR, _BLOCK_VAR))


def guard_paths(c: Formula) -> list[tuple[tuple[Atom, ...], bool]]:
    """Short-circuit evaluation paths of a relation-free condition.

    Each path is the sequence of atomic tests performed and the outcome
    reached.  ``x = y || x = z`` yields ``[(x=y), T], [(x!=y, x=z), T],
    [(x!=y, x!=z), F]``.
    """
    if isinstance(c, (Eq, Neq)):
        return [((c,), True), ((negate_atom(c),), False)]
    if isinstance(c, Const):
        return [((), c.value)]
    if isinstance(c, Not):
        return [(p, not ok) for p, ok in guard_paths(c.arg)]
    if isinstance(c, (Or, And)):
        short = isinstance(c, Or)
        out = []
        for p, ok in guard_paths(c.left):
            if ok == short:
                out.append((p, ok))
            else:
                out.extend((p + q, ok2) for q, ok2 in guard_paths(c.right))
        return out
    raise TypeError(f"condition still contains {c!r}")


def cascade(c: Formula, then: Stmt, orelse: Stmt) -> Stmt:
    """Compile a compound condition into nested atomic if-then-else."""
    if isinstance(c, (Eq, Neq)):
        return If(c, then, orelse)
    if isinstance(c, Const):
        return then if c.value else orelse
    if isinstance(c, Not):
        return cascade(c.arg, orelse, then)
    if isinstance(c, Or):
        return cascade(c.left, then, cascade(c.right, then, orelse))
    if isinstance(c, And):
        return cascade(c.left, cascade(c.right, then, orelse), orelse)
    raise TypeError(c)


def normalize(p: Program) -> Program:
    """Rewrite a surface program into core form.

    Relations become flag assignments through fresh functions compared
    against the read-only variable ``$top``; constants become fresh
    never-assigned variables; compound conditions become nested
    if-then-else (or, for ``assume`` and loop guards, a choice over the
    short-circuit paths).  Core-form input is returned unchanged.
    """
    if is_core(p):
        return p
    sig = p.signature
    consts = {c: RESERVED + c for c in sig.constants}
    norm = _Normalizer(consts, dict(sig.relations))
    for c in sig.constants:
        norm.fresh(consts[c])
    if p.recursive:
        methods = tuple(replace(m, body=norm.stmt(m.body)) for m in p.methods)
        body = None
    else:
        methods = ()
        body = norm.stmt(p.body)
    post = None
    if p.post is not None:
        _, post = norm.hoist(p.post)
    uses_block = any(
        isinstance(s, Assume) and s.cond == Neq(_BLOCK_VAR, _BLOCK_VAR)
        for b in ([m.body for m in methods] if methods else [body])
        for s in walk(b)
    )
    if uses_block:
        norm.fresh(_BLOCK_VAR)
    variables = tuple(sig.variables) + tuple(v for v in norm.new_vars if v not in sig.variables)
    functions = tuple(sig.functions) + tuple(norm.new_funs.items())
    return Program(Signature(variables, functions), body, post, methods, p.main)


# --------------------------------------------------------------------------
# postcondition lowering

def nnf(phi: Formula, positive: bool = True) -> Formula:
    if isinstance(phi, Eq):
        return phi if positive else Neq(phi.left, phi.right)
    if isinstance(phi, Neq):
        return phi if positive else Eq(phi.left, phi.right)
    if isinstance(phi, Const):
        return Const(phi.value == positive)
    if isinstance(phi, Not):
        return nnf(phi.arg, not positive)
    if isinstance(phi, Or):
        l, r = nnf(phi.left, positive), nnf(phi.right, positive)
        return Or(l, r) if positive else And(l, r)
    if isinstance(phi, And):
        l, r = nnf(phi.left, positive), nnf(phi.right, positive)
        return And(l, r) if positive else Or(l, r)
    raise TypeError(f"unsupported in postconditions: {phi!r}")


def dnf(phi: Formula) -> list[tuple[Atom, ...]]:
    """Disjunctive normal form as a list of literal conjunctions."""
    phi = nnf(phi)

    def go(f: Formula) -> list[tuple[Atom, ...]]:
        if isinstance(f, (Eq, Neq)):
            return [(f,)]
        if isinstance(f, Const):
            return [()] if f.value else []
        if isinstance(f, Or):
            return go(f.left) + go(f.right)
        if isinstance(f, And):
            return [a + b for a, b in itertools.product(go(f.left), go(f.right))]
        raise TypeError(f)

    out: list[tuple[Atom, ...]] = []
    for clause in go(phi):
        uniq = tuple(dict.fromkeys(clause))
        if uniq not in out:
            out.append(uniq)
    return out


def violation_branch(phi: Formula, variables: tuple[str, ...]) -> Stmt:
    clauses = dnf(Not(phi))
    if not clauses:
        v = variables[0]
        return Assume(Neq(v, v))
    return choice(*(seq(*(Assume(a) for a in c)) for c in clauses))


def lower_postcondition(p: Program, phi: Formula | None = None) -> Program:
    """Append a branch that completes exactly when ``phi`` fails.

    The result has postcondition ``None`` (read: false).  For recursive
    programs the branch goes into a copy ``$main`` of the entry method so
    recursive calls to the original entry are unaffected.
    """
    phi = p.post if phi is None else phi
    if phi is None:
        return p
    unknown = formula_vars(phi) - set(p.variables)
    if unknown:
        raise SyntaxProblem(f"postcondition mentions undeclared variable(s) {sorted(unknown)}")
    tail = violation_branch(phi, p.variables)
    if not p.recursive:
        return replace(p, body=seq(p.body, tail), post=None)
    entry = p.method(p.main)
    wrapper = Method(RESERVED + "main", entry.outs, seq(entry.body, tail))
    return replace(p, methods=p.methods + (wrapper,), main=wrapper.name, post=None)
