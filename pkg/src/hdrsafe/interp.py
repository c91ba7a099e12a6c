"""Small-step interpreter over configurations (input, output, headers, command).

Headers map valid instance names to field records. Expressions are reduced to a
value in a single step; commands follow one reduction rule per step, named in
the trace. Reading or writing a field of an invalid header raises
InvalidAccess, which is the fault the checker rules out.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from hdrsafe.syntax import (
    Add, Apply, BitVec, Call, Emit, Extract, Field, If, IfValid, Lit, Modify, Num, Op,
    Remove, Seq, Skip, Var,
)


class InvalidAccess(Exception):
    """A field of an invalid header instance was read or written."""

    def __init__(self, inst, span, valid, trace=None):
        where = f" at {span}" if span is not None else ""
        super().__init__(f"access to invalid header {inst}{where}")
        self.inst = inst
        self.span = span
        self.valid = frozenset(valid)
        self.trace = trace


class EvalError(Exception):
    """An ill-typed expression reached evaluation."""


# -- bit streams -------------------------------------------------------------------

@dataclass(frozen=True)
class BitStream:
    """Finite bit sequence, most significant bit first.

    ``extended`` is set once a read ran past the end and was padded with zeros.
    """

    value: int = 0
    length: int = 0
    extended: bool = False

    @classmethod
    def from_hex(cls, text):
        digits = "".join(text.split()).replace(":", "")
        if digits[:2].lower() == "0x":
            digits = digits[2:]
        if not digits:
            return cls()
        return cls(int(digits, 16), 4 * len(digits))

    @classmethod
    def from_bits(cls, text):
        text = "".join(text.split())
        return cls(int(text, 2) if text else 0, len(text))

    @classmethod
    def from_bytes(cls, data):
        return cls(int.from_bytes(data, "big"), 8 * len(data))

    def bits(self):
        return format(self.value, f"0{self.length}b") if self.length else ""

    def to_hex(self):
        """Hex digits, right-padding the last nibble with zeros."""
        if not self.length:
            return ""
        pad = -self.length % 4
        return format(self.value << pad, f"0{(self.length + pad) // 4}x")

    def take(self, n):
        """Split off the first ``n`` bits; short input is zero-extended."""
        if n <= self.length:
            rest = self.length - n
            return self.value >> rest, BitStream(self.value & ((1 << rest) - 1), rest, self.extended)
        missing = n - self.length
        return self.value << missing, BitStream(0, 0, True)

    def __add__(self, other):
        return BitStream((self.value << other.length) | other.value,
                         self.length + other.length, self.extended or other.extended)


def deserialize(decl, stream):
    """Fill fields in declaration order; returns (record, rest of stream)."""
    record = {}
    for name, width in decl.fields:
        value, stream = stream.take(width)
        record[name] = BitVec(value, width)
    return record, stream


def serialize(decl, record):
    out = BitStream()
    for name, width in decl.fields:
        out = out + BitStream(record[name].value, width)
    return out


def init_value(decl):
    return {name: BitVec(0, width) for name, width in decl.fields}


# -- expressions -------------------------------------------------------------------

def _bits(v, op):
    if not isinstance(v, BitVec):
        raise EvalError(f"operator {op} applied to {v!r}")
    return v


def eval_expression(headers, e):
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Field):
        record = headers.get(e.inst)
        if record is None:
            raise InvalidAccess(e.inst, e.span, headers)
        return record[e.name]
    if isinstance(e, Var):
        raise EvalError(f"unbound variable {e.name}")
    if isinstance(e, Num):
        raise EvalError(f"literal {e.value} has no width")
    op = e.op
    if op == "!":
        v = eval_expression(headers, e.args[0])
        if not isinstance(v, bool):
            raise EvalError("operator ! applied to a bit value")
        return not v
    if op == "&&":
        # both sides are evaluated: faults in either operand are faults
        a, b = (eval_expression(headers, x) for x in e.args)
        return bool(a and b)
    if op == "||":
        a, b = (eval_expression(headers, x) for x in e.args)
        return bool(a or b)
    a, b = (eval_expression(headers, x) for x in e.args)
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    a, b = _bits(a, op), _bits(b, op)
    if a.width != b.width:
        raise EvalError(f"operator {op} on widths {a.width} and {b.width}")
    if op == "+":
        return BitVec((a.value + b.value) % (1 << a.width), a.width)
    if op == "-":
        return BitVec((a.value - b.value) % (1 << a.width), a.width)
    if op == "<":
        return a.value < b.value
    if op == "<=":
        return a.value <= b.value
    if op == ">":
        return a.value > b.value
    if op == ">=":
        return a.value >= b.value
    raise EvalError(f"unknown operator {op}")


def substitute(c, values):
    """Replace action parameters by their values."""
    if not values:
        return c

    def expr(e):
        if isinstance(e, Var) and e.name in values:
            return Lit(values[e.name], span=e.span)
        if isinstance(e, Op):
            return replace(e, args=tuple(expr(a) for a in e.args))
        return e

    if isinstance(c, Modify):
        return replace(c, expr=expr(c.expr))
    if isinstance(c, Seq):
        return replace(c, first=substitute(c.first, values), second=substitute(c.second, values))
    return c


# -- configurations ------------------------------------------------------------------

@dataclass(frozen=True)
class Config:
    input: BitStream
    output: BitStream
    headers: dict
    command: object
    rule: str | None = None  # rule that produced this configuration
    rule_span: object = None
    warnings: tuple = ()

    @property
    def valid(self):
        return frozenset(self.headers)


@dataclass(frozen=True)
class TraceStep:
    rule: str
    span: object
    valid: tuple

    def text(self):
        where = str(self.span) if self.span is not None else "-"
        return f"{self.rule:<16} {where:<24} {{{', '.join(self.valid)}}}"


def _value(e):
    return isinstance(e, Lit)


def _reduce(p, entries, I, O, H, c):
    """One reduction of ``c``: returns (rule, span, I, O, H, c', warning)."""
    if isinstance(c, Seq):
        if isinstance(c.first, Skip):
            return "E-Seq", c.first.span or c.span, I, O, H, c.second, None
        rule, span, I, O, H, first, warn = _reduce(p, entries, I, O, H, c.first)
        return rule, span, I, O, H, replace(c, first=first), warn
    if isinstance(c, Extract):
        decl = p.header_of(c.inst)
        was_extended = I.extended
        record, I = deserialize(decl, I)
        warn = None
        if I.extended and not was_extended:
            warn = f"input exhausted while extracting {c.inst}; missing bits read as 0"
        return "E-Extr", c.span, I, O, {**H, c.inst: record}, Skip(span=c.span), warn
    if isinstance(c, Emit):
        if c.inst in H:
            return "E-Emit", c.span, I, O + serialize(p.header_of(c.inst), H[c.inst]), H, Skip(span=c.span), None
        return "E-EmitInvalid", c.span, I, O, H, Skip(span=c.span), None
    if isinstance(c, If):
        if not _value(c.cond):
            v = eval_expression(H, c.cond)
            return "E-If", c.span, I, O, H, replace(c, cond=Lit(v, span=c.cond.span)), None
        if c.cond.value is True:
            return "E-IfTrue", c.span, I, O, H, c.then, None
        if c.cond.value is False:
            return "E-IfFalse", c.span, I, O, H, c.other, None
        raise EvalError("condition is not a boolean")
    if isinstance(c, IfValid):
        if c.inst in H:
            return "E-IfValidTrue", c.span, I, O, H, c.then, None
        return "E-IfValidFalse", c.span, I, O, H, c.other, None
    if isinstance(c, Modify):
        if not _value(c.expr):
            v = eval_expression(H, c.expr)
            return "E-Mod1", c.span, I, O, H, replace(c, expr=Lit(v, span=c.expr.span)), None
        if c.inst not in H:
            raise InvalidAccess(c.inst, c.target_span or c.span, H)
        record = {**H[c.inst], c.name: c.expr.value}
        return "E-Mod", c.span, I, O, {**H, c.inst: record}, Skip(span=c.span), None
    if isinstance(c, Apply):
        t = p.table(c.table)
        chosen = entries.select(p, t, H)
        if chosen is None:
            return "E-Apply", c.span, I, O, H, Skip(span=c.span), None
        action, data = chosen
        decl = p.action_lookup(action)
        body = substitute(decl.body, {q.name: v for q, v in zip(decl.params, data)})
        return "E-Apply", c.span, I, O, H, body, None
    if isinstance(c, Add):
        if c.inst in H:
            return "E-AddValid", c.span, I, O, H, Skip(span=c.span), None
        return "E-Add", c.span, I, O, {**H, c.inst: init_value(p.header_of(c.inst))}, Skip(span=c.span), None
    if isinstance(c, Remove):
        H = {k: v for k, v in H.items() if k != c.inst}
        return "E-Rem", c.span, I, O, H, Skip(span=c.span), None
    if isinstance(c, Call):
        return "E-Call", c.span, I, O, H, p.control(c.control).body, None
    if isinstance(c, Skip):
        raise ValueError("skip does not step")
    raise TypeError(f"not a command: {c!r}")


def _entries(entries):
    if entries is None:
        from hdrsafe.control import TableState
        return TableState()
    return entries


def initial(p, packet):
    return Config(packet, BitStream(), {}, p.body)


def step(p, cfg, entries=None):
    """Apply exactly one reduction rule."""
    rule, span, I, O, H, c, warn = _reduce(p, _entries(entries), cfg.input, cfg.output,
                                           cfg.headers, cfg.command)
    warnings = cfg.warnings + ((warn,) if warn else ())
    return Config(I, O, H, c, rule, span, warnings)


def run(p, packet, entries=None, max_steps=1_000_000):
    """Step to Skip; returns (final configuration, trace)."""
    entries = _entries(entries)
    cfg = initial(p, packet)
    trace = []
    for _ in range(max_steps):
        if isinstance(cfg.command, Skip):
            return cfg, trace
        try:
            cfg = step(p, cfg, entries)
        except InvalidAccess as exc:
            exc.trace = trace
            raise
        trace.append(TraceStep(cfg.rule, cfg.rule_span, tuple(sorted(cfg.headers))))
    raise RuntimeError(f"no termination within {max_steps} steps")
