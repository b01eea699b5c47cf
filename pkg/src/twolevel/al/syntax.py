"""Abstract syntax and surface parser for the action-language domain files.

A domain file is a sequence of sections (``sorts:``, ``objects:``,
``statics:``, ``fluents:``, ``actions:``, ``laws:``, ``defaults:``,
``history:``), each holding statements terminated by ``.``.  The full
grammar is documented in ``docs/domain-language.md``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

SECTIONS = ("sorts", "objects", "statics", "fluents", "actions", "laws", "defaults", "history")


class DomainError(ValueError):
    """Syntax or resolution error in a domain description, with location."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)


def is_variable(term: str) -> bool:
    return term[:1].isupper() or term[:1] == "_"


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class AtomSchema:
    pred: str
    args: tuple[str, ...] = ()
    loc: Loc = field(default=Loc(), compare=False)

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(self.args)})" if self.args else self.pred

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(a for a in self.args if is_variable(a))


@dataclass(frozen=True)
class LiteralSchema:
    atom: AtomSchema
    positive: bool = True

    def __str__(self) -> str:
        return ("" if self.positive else "-") + str(self.atom)


@dataclass(frozen=True)
class Comparison:
    left: str
    op: str  # "=" or "!="
    right: str
    loc: Loc = field(default=Loc(), compare=False)

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


BodyItem = Union[LiteralSchema, Comparison]


@dataclass(frozen=True)
class ChoiceEffect:
    """Non-deterministic effect ``{loc(R, Z) : neighbor(Z, Y)}``."""

    head: AtomSchema
    condition: AtomSchema

    def __str__(self) -> str:
        return f"{{{self.head} : {self.condition}}}"


@dataclass(frozen=True)
class Law:
    kind: str  # "causal" | "constraint" | "executability"
    actions: tuple[AtomSchema, ...] = ()
    head: Union[LiteralSchema, ChoiceEffect, None] = None
    body: tuple[BodyItem, ...] = ()
    loc: Loc = field(default=Loc(), compare=False)

    def __str__(self) -> str:
        body = f" if {', '.join(map(str, self.body))}" if self.body else ""
        if self.kind == "causal":
            return f"{self.actions[0]} causes {self.head}{body}."
        if self.kind == "executability":
            return f"impossible {', '.join(map(str, self.actions))}{body}."
        return f"{self.head}{body}."


@dataclass(frozen=True)
class DefaultSchema:
    name: str
    var: str
    head: LiteralSchema
    body: tuple[BodyItem, ...]
    loc: Loc = field(default=Loc(), compare=False)

    def __str__(self) -> str:
        return f"{self.name}({self.var}): {self.head} if {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class RecordSchema:
    kind: str  # "init" | "obs" | "hpd"
    atom: AtomSchema
    value: Optional[bool] = None
    step: int = 0
    loc: Loc = field(default=Loc(), compare=False)

    def __str__(self) -> str:
        if self.kind == "init":
            return f"init({self.atom}, {str(self.value).lower()})."
        if self.kind == "obs":
            return f"obs({self.atom}, {str(self.value).lower()}, {self.step})."
        return f"hpd({self.atom}, {self.step})."


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arg_sorts: tuple[str, ...]
    kind: str = "static"  # "static" | "inertial" | "defined" | "action"
    functional: bool = False
    loc: Loc = field(default=Loc(), compare=False)


@dataclass
class Program:
    """Parsed but unresolved domain file."""

    sorts: list[str] = field(default_factory=list)
    subsorts: list[tuple[str, str, Loc]] = field(default_factory=list)
    objects: list[tuple[str, str, Loc]] = field(default_factory=list)
    statics: list[PredicateDecl] = field(default_factory=list)
    facts: list[AtomSchema] = field(default_factory=list)
    fluents: list[PredicateDecl] = field(default_factory=list)
    actions: list[PredicateDecl] = field(default_factory=list)
    laws: list[Law] = field(default_factory=list)
    defaults: list[DefaultSchema] = field(default_factory=list)
    history: list[RecordSchema] = field(default_factory=list)
    no_concurrency: bool = False


_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>%[^\n]*)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>\d+)|(?P<op>!=|[(),.:{}<=\-])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DomainError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.prog = Program()

    # token helpers
    def peek(self, offset: int = 0) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("op", "name")

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise DomainError(f"expected {text!r}, found {tok.text or 'end of file'!r}", tok.line, tok.col)
        return tok

    def name(self, what: str = "identifier") -> Token:
        tok = self.next()
        if tok.kind != "name":
            raise DomainError(f"expected {what}, found {tok.text or 'end of file'!r}", tok.line, tok.col)
        return tok

    def integer(self) -> int:
        tok = self.next()
        if tok.kind != "int":
            raise DomainError(f"expected step number, found {tok.text!r}", tok.line, tok.col)
        return int(tok.text)

    # grammar
    def parse(self) -> Program:
        section = None
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "name" and tok.text in SECTIONS and self.peek(1).text == ":":
                section = tok.text
                self.i += 2
                continue
            if section is None:
                raise DomainError("statement outside of any section", tok.line, tok.col)
            getattr(self, f"_{section}")()
        return self.prog

    def _sorts(self) -> None:
        first = self.name("sort name")
        if self.at("<"):
            self.next()
            parent = self.name("sort name")
            self.prog.subsorts.append((first.text, parent.text, Loc(first.line, first.col)))
        else:
            self.prog.sorts.append(first.text)
            while self.at(","):
                self.next()
                self.prog.sorts.append(self.name("sort name").text)
        self.expect(".")

    def _objects(self) -> None:
        names = [self.name("constant")]
        while self.at(","):
            self.next()
            names.append(self.name("constant"))
        self.expect(":")
        sort = self.name("sort name").text
        self.expect(".")
        for tok in names:
            self.prog.objects.append((tok.text, sort, Loc(tok.line, tok.col)))

    def _decl(self, kind: str) -> PredicateDecl:
        atom = self.atom()
        return PredicateDecl(atom.pred, atom.args, kind, False, atom.loc)

    def _statics(self) -> None:
        atom = self.atom()
        self.expect(".")
        # declarations name sorts, facts name constants; resolved later
        self.prog.statics.append(PredicateDecl(atom.pred, atom.args, "static", False, atom.loc))

    def _fluents(self) -> None:
        atom = self.atom()
        self.expect(":")
        kind = self.name("fluent kind")
        if kind.text not in ("inertial", "defined"):
            raise DomainError(f"fluent kind must be inertial or defined, not {kind.text!r}", kind.line, kind.col)
        functional = False
        while self.at(","):
            self.next()
            flag = self.name("fluent option")
            if flag.text != "functional":
                raise DomainError(f"unknown fluent option {flag.text!r}", flag.line, flag.col)
            functional = True
        self.expect(".")
        self.prog.fluents.append(PredicateDecl(atom.pred, atom.args, kind.text, functional, atom.loc))

    def _actions(self) -> None:
        self.prog.actions.append(self._decl("action"))
        self.expect(".")

    def _laws(self) -> None:
        start = self.peek()
        loc = Loc(start.line, start.col)
        if start.text == "impossible" and start.kind == "name":
            self.next()
            acts = [self.atom()]
            while self.at(","):
                self.next()
                acts.append(self.atom())
            body = self.body() if self.at("if") else ()
            self.expect(".")
            if all(not a.args and is_variable(a.pred) for a in acts):
                # "impossible A1, A2 if A1 != A2." forbids concurrent actions
                self.prog.no_concurrency = True
                return
            self.prog.laws.append(Law("executability", tuple(acts), None, body, loc))
            return
        if self._causal_ahead():
            action = self.atom()
            self.expect("causes")
            if self.at("{"):
                self.next()
                head = self.atom()
                self.expect(":")
                cond = self.atom()
                self.expect("}")
                effect: Union[LiteralSchema, ChoiceEffect] = ChoiceEffect(head, cond)
            else:
                effect = self.literal()
            body = self.body() if self.at("if") else ()
            self.expect(".")
            self.prog.laws.append(Law("causal", (action,), effect, body, loc))
            return
        head = self.literal()
        body = self.body() if self.at("if") else ()
        self.expect(".")
        self.prog.laws.append(Law("constraint", (), head, body, loc))

    def _causal_ahead(self) -> bool:
        depth = 0
        for tok in self.toks[self.i:]:
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif depth == 0 and tok.text in (".", "if", "{") or tok.kind == "eof":
                return False
            elif depth == 0 and tok.text == "causes":
                return True
        return False

    def _defaults(self) -> None:
        name = self.name("default name")
        self.expect("(")
        var = self.name("variable")
        if not is_variable(var.text):
            raise DomainError("default parameter must be a variable", var.line, var.col)
        self.expect(")")
        self.expect(":")
        head = self.literal()
        self.expect("if")
        body = self._body_items()
        self.expect(".")
        self.prog.defaults.append(DefaultSchema(name.text, var.text, head, body, Loc(name.line, name.col)))

    def _history(self) -> None:
        kind = self.name("record kind")
        loc = Loc(kind.line, kind.col)
        self.expect("(")
        atom = self.atom()
        self.expect(",")
        if kind.text == "hpd":
            step = self.integer()
            self.expect(")")
            self.expect(".")
            self.prog.history.append(RecordSchema("hpd", atom, None, step, loc))
            return
        if kind.text not in ("init", "obs"):
            raise DomainError(f"unknown history record {kind.text!r}", kind.line, kind.col)
        val = self.name("true or false")
        if val.text not in ("true", "false"):
            raise DomainError("expected true or false", val.line, val.col)
        step = 0
        if kind.text == "obs":
            self.expect(",")
            step = self.integer()
        self.expect(")")
        self.expect(".")
        self.prog.history.append(RecordSchema(kind.text, atom, val.text == "true", step, loc))

    def atom(self) -> AtomSchema:
        tok = self.name("predicate")
        args: list[str] = []
        if self.at("("):
            self.next()
            args.append(self.term())
            while self.at(","):
                self.next()
                args.append(self.term())
            self.expect(")")
        return AtomSchema(tok.text, tuple(args), Loc(tok.line, tok.col))

    def term(self) -> str:
        tok = self.next()
        if tok.kind not in ("name", "int"):
            raise DomainError(f"expected term, found {tok.text!r}", tok.line, tok.col)
        return tok.text

    def literal(self) -> LiteralSchema:
        positive = True
        if self.at("-"):
            self.next()
            positive = False
        return LiteralSchema(self.atom(), positive)

    def body(self) -> tuple[BodyItem, ...]:
        self.expect("if")
        return self._body_items()

    def _body_items(self) -> tuple[BodyItem, ...]:
        items = [self._body_item()]
        while self.at(","):
            self.next()
            items.append(self._body_item())
        return tuple(items)

    def _body_item(self) -> BodyItem:
        tok = self.peek()
        if tok.kind in ("name", "int") and self.peek(1).text in ("!=", "="):
            left = self.next().text
            op = self.next().text
            right = self.term()
            return Comparison(left, op, right, Loc(tok.line, tok.col))
        return self.literal()


def parse_program(text: str) -> Program:
    return _Parser(text).parse()


def iter_body_literals(body) -> Iterator[LiteralSchema]:
    for item in body:
        if isinstance(item, LiteralSchema):
            yield item
