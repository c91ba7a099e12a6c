"""Concrete syntax: lexer, recursive-descent parser and name resolution.

The grammar (see docs/grammar.md) is keyword-led and brace-delimited.
Semicolons are optional separators. Keywords are contextual, so an action may
be called ``remove`` even though ``remove(h)`` is also a command.
"""

from __future__ import annotations

import re
from dataclasses import replace

from hdrsafe.diagnostics import Diagnostic
from hdrsafe.syntax import (
    BOOL, ActionDecl, Add, Apply, Bits, BitVec, Call, ControlDecl, DefaultAction,
    Emit, Extract, Field, HeaderDecl, If, IfValid, InstanceDecl, Lit, Modify, Num,
    Op, Param, Program, ReadKey, Remove, Seq, Skip, Span, TableDecl, Var,
    ACTION_COMMANDS, flatten, seq,
)

COMMAND_WORDS = {"skip", "extract", "emit", "add", "remove", "apply", "if", "else"}

_LEXER = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*|/\*.*?\*/)
  | (?P<nl>\n)
  | (?P<sized>(?:0[xX][0-9a-fA-F]+|[0-9]+):[0-9]+)
  | (?P<int>0[xX][0-9a-fA-F]+|[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|&&|\|\||<=|>=|[-+<>!=.,;:(){}])
""", re.VERBOSE | re.DOTALL)


class ParseError(Exception):
    """Raised with one or more diagnostics when a program cannot be parsed."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.message for d in self.diagnostics))


class Token:
    __slots__ = ("kind", "text", "value", "span")

    def __init__(self, kind, text, value, span):
        self.kind, self.text, self.value, self.span = kind, text, value, span

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r})"


def tokenize(text, filename="<input>"):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _LEXER.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError([_error(filename, Span(line, col, line, col),
                                     f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        lexeme = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ws":
            newlines = lexeme.count("\n")
            if newlines:
                line += newlines
                line_start = pos + lexeme.rindex("\n") + 1
        else:
            span = Span(line, col, line, col + len(lexeme) - 1)
            value = None
            if kind == "int":
                value = int(lexeme, 0)
            elif kind == "sized":
                num, width = lexeme.rsplit(":", 1)
                value = (int(num, 0), int(width))
            tokens.append(Token(kind, lexeme, value, span))
        pos = m.end()
    tokens.append(Token("eof", "end of input", None, Span(line, pos - line_start + 1,
                                                          line, pos - line_start + 1)))
    return tokens


def _error(filename, span, message):
    return Diagnostic("error", filename, span, message, provenance="syntax")


class _Parser:
    def __init__(self, text, filename):
        self.filename = filename
        self.tokens = tokenize(text, filename)
        self.pos = 0

    # -- token helpers
    @property
    def tok(self):
        return self.tokens[self.pos]

    def peek(self, offset=1):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def fail(self, message, span=None):
        raise ParseError([_error(self.filename, span or self.tok.span, message)])

    def advance(self):
        tok = self.tok
        self.pos += 1
        return tok

    def at(self, text):
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def accept(self, text):
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text):
        if not self.at(text):
            self.fail(f"expected '{text}', found '{self.tok.text}'")
        return self.advance()

    def ident(self, what="name"):
        if self.tok.kind != "ident":
            self.fail(f"expected {what}, found '{self.tok.text}'")
        return self.advance()

    def int_(self, what="integer"):
        if self.tok.kind != "int":
            self.fail(f"expected {what}, found '{self.tok.text}'")
        return self.advance()

    def span_from(self, start):
        return start.span.join(self.tokens[self.pos - 1].span)

    def semis(self):
        while self.accept(";"):
            pass

    # -- declarations
    def program(self):
        decls = []
        while self.tok.kind != "eof":
            word = self.tok
            if word.kind != "ident":
                self.fail(f"expected a declaration, found '{word.text}'")
            if word.text == "header":
                decls.append(self.header())
            elif word.text == "instance":
                decls.append(self.instance())
            elif word.text == "action":
                decls.append(self.action())
            elif word.text == "table":
                decls.append(self.table())
            elif word.text == "control":
                decls.append(self.control())
            else:
                self.fail(f"expected a declaration, found '{word.text}'")
            self.semis()
        return decls

    def header(self):
        start = self.expect("header")
        name = self.ident("header type name").text
        self.expect("{")
        fields = []
        while not self.at("}"):
            f = self.ident("field name")
            self.expect(":")
            w = self.int_("field width")
            if w.value < 1:
                self.fail(f"field {f.text} must have a positive width", w.span)
            fields.append((f.text, w.value))
            self.accept(";") or self.accept(",")
        self.expect("}")
        return HeaderDecl(name, tuple(fields), span=self.span_from(start))

    def instance(self):
        start = self.expect("instance")
        name = self.ident("instance name").text
        self.expect(":")
        htype = self.ident("header type name").text
        return InstanceDecl(name, htype, span=self.span_from(start))

    def base_type(self):
        if self.accept("bool"):
            return BOOL
        w = self.int_("parameter width or 'bool'")
        if w.value < 1:
            self.fail("parameter width must be positive", w.span)
        return Bits(w.value)

    def action(self):
        start = self.expect("action")
        name = self.ident("action name").text
        self.expect("(")
        params = []
        while not self.at(")"):
            p = self.ident("parameter name")
            self.expect(":")
            params.append(Param(p.text, self.base_type(), span=self.span_from(p)))
            if not self.accept(","):
                break
        self.expect(")")
        body = self.block()
        return ActionDecl(name, tuple(params), body, span=self.span_from(start))

    def table(self):
        start = self.expect("table")
        name = self.ident("table name").text
        self.expect("{")
        valids, reads, actions, spans = [], [], [], []
        default = None
        while not self.at("}"):
            if self.accept("reads"):
                self.expect("{")
                while not self.at("}"):
                    first = self.tok
                    e = self.expr()
                    self.expect(":")
                    kind = self.ident("match kind")
                    if kind.text == "valid":
                        if not isinstance(e, Var):
                            self.fail("a valid match takes a header instance name", e.span)
                        valids.append(e.name)
                        spans.append((e.name, e.span))
                    elif kind.text in ("exact", "ternary"):
                        reads.append(ReadKey(e, kind.text, span=self.span_from(first)))
                    else:
                        self.fail(f"unknown match kind '{kind.text}'", kind.span)
                    self.semis()
                self.expect("}")
            elif self.accept("actions"):
                self.expect("{")
                while not self.at("}"):
                    a = self.ident("action name")
                    actions.append(a.text)
                    spans.append((a.text, a.span))
                    self.semis()
                self.expect("}")
            elif self.at("default_action"):
                first = self.advance()
                self.expect(":")
                a = self.ident("action name").text
                self.expect("(")
                args = []
                while not self.at(")"):
                    args.append(self.expr())
                    if not self.accept(","):
                        break
                self.expect(")")
                default = DefaultAction(a, tuple(args), span=self.span_from(first))
            else:
                self.fail(f"expected 'reads', 'actions' or 'default_action', found '{self.tok.text}'")
            self.semis()
        self.expect("}")
        return TableDecl(name, tuple(valids), tuple(reads), tuple(actions), default,
                         span=self.span_from(start), name_spans=tuple(spans))

    def control(self):
        start = self.expect("control")
        name = None
        if self.tok.kind == "ident":
            name = self.advance().text
        body = self.block()
        return ControlDecl(name, body, span=self.span_from(start))

    # -- commands
    def block(self):
        self.expect("{")
        commands = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block")
            commands.append(self.command())
            self.semis()
        self.expect("}")
        # skip is a unit of sequencing; keep one only for an otherwise empty block
        kept = [c for c in commands if not isinstance(c, Skip)]
        return seq(kept) if kept or not commands else commands[0]

    def paren_name(self, what):
        self.expect("(")
        name = self.ident(what).text
        self.expect(")")
        return name

    def command(self):
        start = self.tok
        word = start.text if start.kind == "ident" else None
        nxt = self.peek()
        if word == "skip":
            self.advance()
            return Skip(span=start.span)
        if word in ("extract", "emit", "add", "remove") and nxt.text == "(":
            self.advance()
            node = {"extract": Extract, "emit": Emit, "add": Add, "remove": Remove}[word]
            inst = self.paren_name("header instance")
            return node(inst, span=self.span_from(start))
        if word == "apply" and nxt.text == "(":
            self.advance()
            table = self.paren_name("table name")
            return Apply(table, span=self.span_from(start))
        if word == "if":
            return self.if_command()
        if start.kind == "ident" and nxt.text == "(":
            self.advance()
            self.expect("(")
            self.expect(")")
            return Call(start.text, span=self.span_from(start))
        if start.kind == "ident" and nxt.text == ".":
            self.advance()
            self.advance()
            f = self.ident("field name")
            target = self.span_from(start)
            self.expect("=")
            e = self.expr()
            return Modify(start.text, f.text, e, span=self.span_from(start), target_span=target)
        self.fail(f"expected a command, found '{start.text}'")

    def if_command(self):
        start = self.expect("if")
        self.expect("(")
        negate = False
        inst = None
        if self.at("!") and self.peek().text == "valid" and self.peek(2).text == "(":
            self.advance()
            negate = True
        if self.at("valid") and self.peek().text == "(":
            self.advance()
            inst = self.paren_name("header instance")
            cond = None
        else:
            if negate:
                self.fail("expected valid(...) after '!'")
            cond = self.expr()
        self.expect(")")
        then = self.block()
        other = Skip()
        if self.accept("else"):
            other = self.if_command() if self.at("if") else self.block()
        span = self.span_from(start)
        if inst is None:
            return If(cond, then, other, span=span)
        if negate:
            then, other = other, then
        return IfValid(inst, then, other, span=span)

    # -- expressions, lowest precedence first
    _LEVELS = (("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"))

    def expr(self, level=0):
        if level == len(self._LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in self._LEVELS[level]:
            op = self.advance().text
            right = self.expr(level + 1)
            left = Op(op, (left, right), span=left.span.join(right.span))
        return left

    def unary(self):
        if self.at("!"):
            start = self.advance()
            arg = self.unary()
            return Op("!", (arg,), span=start.span.join(arg.span))
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "sized":
            self.advance()
            value, width = tok.value
            if width < 1 or value >= 1 << width:
                self.fail(f"literal {value} does not fit in {width} bits", tok.span)
            return Lit(BitVec(value, width), span=tok.span)
        if tok.kind == "int":
            self.advance()
            return Num(tok.value, span=tok.span)
        if self.at("true") or self.at("false"):
            self.advance()
            return Lit(tok.text == "true", span=tok.span)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.advance()
            if self.accept("."):
                f = self.ident("field name")
                return Field(tok.text, f.text, span=tok.span.join(f.span))
            return Var(tok.text, span=tok.span)
        self.fail(f"expected an expression, found '{tok.text}'")


# -- resolution ------------------------------------------------------------------

class _Resolver:
    """Checks declarations and names, and assigns widths to bare integers."""

    def __init__(self, decls, filename):
        self.decls = decls
        self.filename = filename
        self.errors = []

    def error(self, span, message):
        self.errors.append(_error(self.filename, span, message))

    def run(self):
        seen = {}
        mains = []
        for d in self.decls:
            if isinstance(d, ControlDecl) and d.name is None:
                mains.append(d)
                continue
            if d.name in seen:
                self.error(d.span, f"duplicate declaration {d.name}")
            else:
                seen[d.name] = d
            if isinstance(d, ControlDecl) and d.name in COMMAND_WORDS | {"valid"}:
                self.error(d.span, f"control name {d.name} is reserved")
        if not mains:
            self.error(Span(1, 1, 1, 1), "missing main control block")
        for extra in mains[1:]:
            self.error(extra.span, "duplicate main control block")
        self.names = seen
        self.headers = {d.name: d for d in seen.values() if isinstance(d, HeaderDecl)}
        self.instances = {d.name: d for d in seen.values() if isinstance(d, InstanceDecl)}
        self.actions = {d.name: d for d in seen.values() if isinstance(d, ActionDecl)}
        self.tables = {d.name: d for d in seen.values() if isinstance(d, TableDecl)}
        self.controls = {d.name: d for d in seen.values() if isinstance(d, ControlDecl)}

        out = []
        for d in self.decls:
            if isinstance(d, HeaderDecl):
                names = [f for f, _ in d.fields]
                for f in {f for f in names if names.count(f) > 1}:
                    self.error(d.span, f"duplicate field {f} in header type {d.name}")
            elif isinstance(d, InstanceDecl):
                if d.htype not in self.headers:
                    self.error(d.span, f"unknown header type {d.htype}")
            elif isinstance(d, ActionDecl):
                d = self.action(d)
            elif isinstance(d, TableDecl):
                d = self.table(d)
            elif isinstance(d, ControlDecl):
                d = replace(d, body=self.command(d.body, {}, False))
            out.append(d)
        self.check_calls(out)
        return out

    # -- helpers
    def field_width(self, inst, name, span):
        decl = self.instances.get(inst)
        if decl is None:
            self.error(span, f"unknown instance {inst}")
            return None
        htype = self.headers.get(decl.htype)
        if htype is None:
            return None
        for f, w in htype.fields:
            if f == name:
                return Bits(w)
        self.error(span, f"unknown field {name} on header type {htype.name}")
        return None

    def need_instance(self, inst, span):
        if inst not in self.instances:
            self.error(span, f"unknown instance {inst}")

    def action(self, d):
        env = {}
        for p in d.params:
            if p.name in env:
                self.error(p.span, f"duplicate parameter {p.name}")
            elif p.name in self.names:
                self.error(p.span, f"parameter {p.name} clashes with a declared name")
            env[p.name] = p.type
        for c in flatten(d.body):
            if not isinstance(c, ACTION_COMMANDS):
                self.error(c.span, "only add, remove, field assignment and skip are allowed in an action body")
        return replace(d, body=self.command(d.body, env, True))

    def table(self, t):
        for h in t.valids:
            self.need_instance(h, t.span_of(h))
        if len(set(t.valids)) != len(t.valids):
            self.error(t.span, f"instance matched as valid twice in table {t.name}")
        reads = tuple(replace(k, expr=self.expr_top(k.expr, {})) for k in t.reads)
        for a in t.actions:
            if a not in self.actions:
                self.error(t.span_of(a), f"unknown action {a}")
        if len(set(t.actions)) != len(t.actions):
            self.error(t.span, f"action listed twice in table {t.name}")
        default = t.default
        if default is not None:
            decl = self.actions.get(default.action)
            if default.action not in t.actions:
                self.error(default.span, f"default action {default.action} is not an action of table {t.name}")
            elif decl is not None:
                if len(default.args) != len(decl.params):
                    self.error(default.span, f"action {decl.name} takes {_plural(len(decl.params), 'argument')}, got {len(default.args)}")
                else:
                    args = []
                    for a, p in zip(default.args, decl.params):
                        a = self.coerce(a, p.type)
                        if not isinstance(a, Lit):
                            self.error(a.span, "default action data must be literals")
                        args.append(a)
                    default = replace(default, args=tuple(args))
        return replace(t, reads=reads, default=default)

    def check_calls(self, decls):
        graph = {}
        for d in decls:
            if isinstance(d, ControlDecl):
                graph[d.name] = [c.control for c in _calls(d.body)]
        state = {}

        def visit(n, span):
            if state.get(n) == 1:
                self.error(span, f"recursive call of control {n}")
                return
            if state.get(n) == 2:
                return
            state[n] = 1
            for m in graph.get(n, ()):
                if m in self.controls:
                    visit(m, self.controls[m].span)
            state[n] = 2

        for n in graph:
            if n is not None:
                visit(n, self.controls[n].span)

    # -- commands and expressions
    def command(self, c, env, in_action):
        if isinstance(c, Seq):
            return replace(c, first=self.command(c.first, env, in_action),
                           second=self.command(c.second, env, in_action))
        if isinstance(c, (Extract, Emit, Add, Remove)):
            self.need_instance(c.inst, c.span)
            return c
        if isinstance(c, Modify):
            ftype = self.field_width(c.inst, c.name, c.target_span)
            return replace(c, expr=self.expr_top(c.expr, env, ftype))
        if isinstance(c, If):
            cond = self.expr_top(c.cond, env, BOOL)
            return replace(c, cond=cond, then=self.command(c.then, env, in_action),
                           other=self.command(c.other, env, in_action))
        if isinstance(c, IfValid):
            self.need_instance(c.inst, c.span)
            return replace(c, then=self.command(c.then, env, in_action),
                           other=self.command(c.other, env, in_action))
        if isinstance(c, Apply):
            if c.table not in self.tables:
                self.error(c.span, f"unknown table {c.table}")
            return c
        if isinstance(c, Call):
            if c.control not in self.controls:
                self.error(c.span, f"unknown control {c.control}")
            return c
        return c

    def expr_top(self, e, env, expected=None):
        e, _ = self.infer(e, env)
        if expected is not None:
            e = self.coerce(e, expected)
        for n in _nums(e):
            self.error(n.span, f"cannot infer the width of literal {n.value}; write {n.value}:<width>")
        return e

    def coerce(self, e, t):
        """Give unsized literals in ``e`` the type ``t`` (pushed through + and -)."""
        if isinstance(e, Num):
            # after an error the literal is replaced so it is not reported again
            if t == BOOL:
                self.error(e.span, f"integer literal {e.value} used where bool is expected")
                return Lit(False, span=e.span)
            if e.value >= 1 << t.width:
                self.error(e.span, f"literal {e.value} does not fit in {t.width} bits")
                return Lit(BitVec(e.value % (1 << t.width), t.width), span=e.span)
            return Lit(BitVec(e.value, t.width), span=e.span)
        if isinstance(e, Op) and e.op in ("+", "-") and isinstance(t, Bits):
            return replace(e, args=tuple(self.coerce(a, t) for a in e.args))
        return e

    def infer(self, e, env):
        """Return (expression, bit type or None); bool results report None."""
        if isinstance(e, Lit):
            return e, None if isinstance(e.value, bool) else Bits(e.value.width)
        if isinstance(e, Num):
            return e, None
        if isinstance(e, Field):
            return e, self.field_width(e.inst, e.name, e.span)
        if isinstance(e, Var):
            t = env.get(e.name)
            return e, t if isinstance(t, Bits) else None
        if e.op == "!":
            arg, _ = self.infer(e.args[0], env)
            return replace(e, args=(arg,)), None
        (a, ta), (b, tb) = self.infer(e.args[0], env), self.infer(e.args[1], env)
        if ta is not None:
            b = self.coerce(b, ta)
        if tb is not None:
            a = self.coerce(a, tb)
        e = replace(e, args=(a, b))
        if e.op in ("+", "-"):
            return e, ta or tb
        return e, None


def _plural(n, word):
    return f"{n} {word}{'s' * (n != 1)}"


def _nums(e):
    if isinstance(e, Num):
        yield e
    elif isinstance(e, Op):
        for a in e.args:
            yield from _nums(a)


def _calls(c):
    for item in flatten(c):
        if isinstance(item, Call):
            yield item
        elif isinstance(item, (If, IfValid)):
            yield from _calls(item.then)
            yield from _calls(item.other)


def parse_program(text, filename="<input>"):
    """Parse and resolve a program; raises ParseError with diagnostics."""
    decls = _Parser(text, filename).program()
    resolver = _Resolver(decls, filename)
    decls = resolver.run()
    if resolver.errors:
        raise ParseError(resolver.errors)
    body = next(d.body for d in decls if isinstance(d, ControlDecl) and d.name is None)
    return Program(decls, body, filename=filename)


def parse_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), filename=str(path))
