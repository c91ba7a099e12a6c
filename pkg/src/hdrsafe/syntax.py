"""Abstract syntax, declaration lookup and canonical printing."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    """Source region, 1-based lines and columns, end column inclusive."""

    line: int
    col: int
    end_line: int
    end_col: int

    def join(self, other):
        if other is None:
            return self
        return Span(self.line, self.col, other.end_line, other.end_col)

    def __str__(self):
        if self.end_line == self.line:
            return f"line {self.line}, cols {self.col}-{self.end_col}"
        return f"line {self.line}, col {self.col} to line {self.end_line}, col {self.end_col}"


def _span():
    return field(default=None, compare=False, repr=False)


# -- values and base types ---------------------------------------------------

@dataclass(frozen=True)
class Bool:
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class Bits:
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("bit width must be at least 1")

    def __str__(self):
        return f"bit<{self.width}>"


BOOL = Bool()


@dataclass(frozen=True)
class BitVec:
    value: int
    width: int

    def __post_init__(self):
        if self.width < 1 or not 0 <= self.value < (1 << self.width):
            raise ValueError(f"{self.value} does not fit in {self.width} bits")

    def __str__(self):
        return f"{self.value}:{self.width}"

    def bits(self):
        return format(self.value, f"0{self.width}b")


def type_of_value(v):
    return BOOL if isinstance(v, bool) else Bits(v.width)


# -- expressions --------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    value: object  # bool or BitVec
    span: Span = _span()


@dataclass(frozen=True)
class Num(Expr):
    """Integer literal whose width is not yet known; removed by resolution."""

    value: int
    span: Span = _span()


@dataclass(frozen=True)
class Field(Expr):
    inst: str
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Op(Expr):
    op: str
    args: tuple
    span: Span = _span()


UNARY = {"!"}
BINARY = {"==", "!=", "&&", "||", "+", "-", "<", "<=", ">", ">="}


def referenced_headers(e):
    """Instances whose fields ``e`` reads."""
    if isinstance(e, Field):
        return {e.inst}
    if isinstance(e, Op):
        out = set()
        for a in e.args:
            out |= referenced_headers(a)
        return out
    return set()


# -- commands ------------------------------------------------------------------

class Command:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Command):
    span: Span = _span()


@dataclass(frozen=True)
class Extract(Command):
    inst: str
    span: Span = _span()


@dataclass(frozen=True)
class Emit(Command):
    inst: str
    span: Span = _span()


@dataclass(frozen=True)
class Add(Command):
    inst: str
    span: Span = _span()


@dataclass(frozen=True)
class Remove(Command):
    inst: str
    span: Span = _span()


@dataclass(frozen=True)
class Modify(Command):
    inst: str
    name: str
    expr: Expr
    span: Span = _span()
    target_span: Span = _span()


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command
    span: Span = _span()


@dataclass(frozen=True)
class If(Command):
    cond: Expr
    then: Command
    other: Command
    span: Span = _span()


@dataclass(frozen=True)
class IfValid(Command):
    inst: str
    then: Command
    other: Command
    span: Span = _span()


@dataclass(frozen=True)
class Apply(Command):
    table: str
    span: Span = _span()


@dataclass(frozen=True)
class Call(Command):
    """Invocation of a named control block; behaves as its body inlined."""

    control: str
    span: Span = _span()


ACTION_COMMANDS = (Skip, Add, Remove, Modify, Seq)


def seq(commands):
    """Right-nested sequence of a list of commands (Skip when empty)."""
    commands = list(commands)
    if not commands:
        return Skip()
    out = commands[-1]
    for c in reversed(commands[:-1]):
        out = Seq(c, out, span=c.span.join(out.span) if c.span else None)
    return out


def flatten(c):
    """Commands of a sequence, left to right."""
    out = []
    stack = [c]
    while stack:
        c = stack.pop()
        if isinstance(c, Seq):
            stack.append(c.second)
            stack.append(c.first)
        else:
            out.append(c)
    return out


# -- declarations --------------------------------------------------------------

@dataclass(frozen=True)
class HeaderDecl:
    name: str
    fields: tuple  # ((name, width), ...)
    span: Span = _span()

    @property
    def width(self):
        return sum(w for _, w in self.fields)


@dataclass(frozen=True)
class InstanceDecl:
    name: str
    htype: str
    span: Span = _span()


@dataclass(frozen=True)
class Param:
    name: str
    type: object  # Bool or Bits
    span: Span = _span()


@dataclass(frozen=True)
class ActionDecl:
    name: str
    params: tuple
    body: Command
    span: Span = _span()


@dataclass(frozen=True)
class ReadKey:
    expr: Expr
    kind: str  # "exact" or "ternary"
    span: Span = _span()


@dataclass(frozen=True)
class DefaultAction:
    action: str
    args: tuple  # of Lit
    span: Span = _span()


@dataclass(frozen=True)
class TableDecl:
    name: str
    valids: tuple
    reads: tuple
    actions: tuple
    default: DefaultAction | None = None
    span: Span = _span()
    name_spans: tuple = field(default=(), compare=False, repr=False)

    def span_of(self, name):
        for n, s in self.name_spans:
            if n == name:
                return s
        return self.span


@dataclass(frozen=True)
class ControlDecl:
    name: str | None  # None for the main body
    body: Command
    span: Span = _span()


class ResolutionError(LookupError):
    pass


class Program:
    """Declarations plus the main control body, with lookup tables."""

    def __init__(self, decls, body, filename="<input>"):
        self.decls = tuple(decls)
        self.body = body
        self.filename = filename
        self.headers = {}
        self.instances = {}
        self.actions = {}
        self.tables = {}
        self.controls = {}
        for d in self.decls:
            if isinstance(d, HeaderDecl):
                self.headers[d.name] = d
            elif isinstance(d, InstanceDecl):
                self.instances[d.name] = d
            elif isinstance(d, ActionDecl):
                self.actions[d.name] = d
            elif isinstance(d, TableDecl):
                self.tables[d.name] = d
            elif isinstance(d, ControlDecl) and d.name is not None:
                self.controls[d.name] = d

    @property
    def universe(self):
        """Declared instance names in declaration order."""
        return tuple(self.instances)

    def header_of(self, h):
        try:
            return self.headers[self.instances[h].htype]
        except KeyError:
            raise ResolutionError(f"unknown instance {h}") from None

    def field_type(self, h, f):
        decl = self.header_of(h)
        for name, width in decl.fields:
            if name == f:
                return Bits(width)
        raise ResolutionError(f"unknown field {f} on header type {decl.name}")

    def action_lookup(self, a):
        try:
            return self.actions[a]
        except KeyError:
            raise ResolutionError(f"unknown action {a}") from None

    def table(self, t):
        try:
            return self.tables[t]
        except KeyError:
            raise ResolutionError(f"unknown table {t}") from None

    def control(self, name):
        try:
            return self.controls[name]
        except KeyError:
            raise ResolutionError(f"unknown control {name}") from None

    def table_actions(self, t):
        return [(a, self.actions[a]) for a in self.table(t).actions]

    def __eq__(self, other):
        return isinstance(other, Program) and (self.decls, self.body) == (other.decls, other.body)

    def __repr__(self):
        return f"Program({len(self.decls)} declarations, body={self.body!r})"


# -- printing --------------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5}


def format_expr(e, prec=0):
    if isinstance(e, Lit):
        v = e.value
        return ("true" if v else "false") if isinstance(v, bool) else str(v)
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Field):
        return f"{e.inst}.{e.name}"
    if isinstance(e, Var):
        return e.name
    if e.op == "!":
        return "!" + format_expr(e.args[0], 9)
    p = _PREC[e.op]
    # binary operators are left-associative
    text = f"{format_expr(e.args[0], p)} {e.op} {format_expr(e.args[1], p + 1)}"
    return f"({text})" if p < prec else text


def _format_block(c, depth):
    lines = []
    for item in flatten(c):
        if not isinstance(item, Skip) or isinstance(c, Skip):
            lines.extend(_format_command(item, depth))
    return lines


def _format_command(c, depth):
    pad = "  " * depth
    if isinstance(c, Skip):
        return [pad + "skip;"]
    if isinstance(c, (Extract, Emit, Add, Remove)):
        return [f"{pad}{type(c).__name__.lower()}({c.inst});"]
    if isinstance(c, Apply):
        return [f"{pad}apply({c.table});"]
    if isinstance(c, Call):
        return [f"{pad}{c.control}();"]
    if isinstance(c, Modify):
        return [f"{pad}{c.inst}.{c.name} = {format_expr(c.expr)};"]
    if isinstance(c, Seq):
        return _format_block(c, depth)
    if isinstance(c, If):
        head = f"if ({format_expr(c.cond)})"
    elif isinstance(c, IfValid):
        head = f"if (valid({c.inst}))"
    else:
        raise TypeError(f"not a command: {c!r}")
    lines = [f"{pad}{head} {{"]
    lines += _format_block(c.then, depth + 1) if not isinstance(c.then, Skip) else []
    if isinstance(c.other, Skip):
        lines.append(pad + "}")
    elif isinstance(c.other, (If, IfValid)):
        rest = _format_command(c.other, depth)
        lines.append(f"{pad}}} else {rest[0].lstrip()}")
        lines += rest[1:]
    else:
        lines.append(pad + "} else {")
        lines += _format_block(c.other, depth + 1)
        lines.append(pad + "}")
    return lines


def format_command(c, depth=0):
    return "\n".join(_format_command(c, depth))


def _format_type(t):
    return "bool" if isinstance(t, Bool) else str(t.width)


def pretty(p):
    """Canonical source text for a program."""
    out = []
    decls = list(p.decls)
    if not any(isinstance(d, ControlDecl) and d.name is None for d in decls):
        decls.append(ControlDecl(None, p.body))
    for d in decls:
        if isinstance(d, HeaderDecl):
            out.append(f"header {d.name} {{")
            out += [f"  {n}: {w};" for n, w in d.fields]
            out.append("}")
        elif isinstance(d, InstanceDecl):
            out.append(f"instance {d.name}: {d.htype};")
        elif isinstance(d, ActionDecl):
            params = ", ".join(f"{q.name}: {_format_type(q.type)}" for q in d.params)
            out.append(f"action {d.name}({params}) {{")
            if not isinstance(d.body, Skip):
                out += _format_block(d.body, 1)
            out.append("}")
        elif isinstance(d, TableDecl):
            out.append(f"table {d.name} {{")
            if d.valids or d.reads:
                out.append("  reads {")
                out += [f"    {h}: valid;" for h in d.valids]
                out += [f"    {format_expr(k.expr)}: {k.kind};" for k in d.reads]
                out.append("  }")
            out.append("  actions {")
            out += [f"    {a};" for a in d.actions]
            out.append("  }")
            if d.default is not None:
                args = ", ".join(format_expr(a) for a in d.default.args)
                out.append(f"  default_action: {d.default.action}({args});")
            out.append("}")
        elif isinstance(d, ControlDecl):
            out.append(f"control {d.name} {{" if d.name else "control {")
            if not isinstance(d.body, Skip):
                out += _format_block(d.body, 1)
            out.append("}")
        out.append("")
    return "\n".join(out)
