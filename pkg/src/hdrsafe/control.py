"""Table entries: loading, action selection and well-behavedness validation.

Entries file, one entry per line (``#`` starts a comment)::

    table <name>: valids=<bits> keys=<pat,...> -> <action>(<data,...>)
    default <name> -> <action>(<data,...>)

``valids`` has one 0/1 digit per instance the table matches as valid, in
declaration order. A key pattern is ``*``, a value, ``value/mask`` or a
dotted quad whose ``*`` octets are masked out. Either part may be omitted
when the table has no such keys.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from hdrsafe.checker import check_expression, maskable
from hdrsafe.htypes import Inst, product
from hdrsafe.diagnostics import Diagnostic
from hdrsafe.interp import eval_expression
from hdrsafe.syntax import BOOL, Bits, BitVec, Span, referenced_headers, type_of_value


class EntriesError(Exception):
    """Malformed entries file or an entry that does not fit its table."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


# -- patterns --------------------------------------------------------------------

@dataclass(frozen=True)
class Wildcard:
    def matches(self, v):
        return True

    def __str__(self):
        return "*"


@dataclass(frozen=True)
class Exact:
    value: object

    def matches(self, v):
        return v == self.value

    def __str__(self):
        v = self.value
        return ("true" if v else "false") if isinstance(v, bool) else str(v.value)


@dataclass(frozen=True)
class Ternary:
    value: int
    mask: int

    def matches(self, v):
        return (v.value & self.mask) == (self.value & self.mask)

    def __str__(self):
        return f"{self.value:#x}/{self.mask:#x}"


WILDCARD = Wildcard()


@dataclass(frozen=True)
class Entry:
    valid_bits: tuple  # one bool per instance in t.valids
    keys: tuple  # one pattern per reads key
    action: str
    data: tuple
    line: int | None = field(default=None, compare=False)

    def format(self, table):
        bits = "".join("1" if b else "0" for b in self.valid_bits)
        keys = ",".join(str(k) for k in self.keys)
        data = ", ".join(str(v.value) if isinstance(v, BitVec) else str(v).lower() for v in self.data)
        return f"table {table}: valids={bits} keys={keys} -> {self.action}({data})"


class TableState:
    """Entries per table plus optional default-action overrides."""

    def __init__(self, tables=None, defaults=None, filename="<entries>"):
        self.tables = {k: tuple(v) for k, v in (tables or {}).items()}
        self.defaults = dict(defaults or {})
        self.filename = filename

    def entries(self, t):
        return self.tables.get(t, ())

    def select(self, p, t, headers):
        return select_action(p, t, headers, self)

    def format(self):
        lines = []
        for t, entries in self.tables.items():
            lines += [e.format(t) for e in entries]
        for t, (a, data) in self.defaults.items():
            args = ", ".join(str(v.value) if isinstance(v, BitVec) else str(v).lower() for v in data)
            lines.append(f"default {t} -> {a}({args})")
        return "\n".join(lines) + ("\n" if lines else "")


# -- parsing ---------------------------------------------------------------------

_ENTRY = re.compile(r"^table\s+(\w+)\s*:\s*(.*?)\s*->\s*(\w+)\s*\((.*)\)\s*$")
_DEFAULT = re.compile(r"^default\s+(\w+)\s*->\s*(\w+)\s*\((.*)\)\s*$")
_QUAD = re.compile(r"^(\d+|\*)\.(\d+|\*)\.(\d+|\*)\.(\d+|\*)$")


def parse_value(text, vtype, line=None):
    text = text.strip()
    if vtype == BOOL:
        if text in ("true", "false"):
            return text == "true"
        raise EntriesError(f"expected true or false, found {text!r}", line)
    width = vtype.width
    m = _QUAD.match(text)
    if m and "*" not in text:
        if width != 32:
            raise EntriesError(f"dotted address used for a {width}-bit value", line)
        octets = [int(x) for x in m.groups()]
        if any(o > 255 for o in octets):
            raise EntriesError(f"bad address {text}", line)
        return BitVec(int.from_bytes(bytes(octets), "big"), 32)
    num, _, w = text.partition(":")
    try:
        value = int(num, 0)
    except ValueError:
        raise EntriesError(f"malformed value {text!r}", line) from None
    if w and int(w) != width:
        raise EntriesError(f"value {text} has width {w}, expected {width}", line)
    if not 0 <= value < 1 << width:
        raise EntriesError(f"value {value} does not fit in {width} bits", line)
    return BitVec(value, width)


def parse_pattern(text, vtype, kind, line=None):
    text = text.strip()
    if text == "*":
        if kind == "exact":
            raise EntriesError("exact keys cannot be wildcarded", line)
        return WILDCARD
    m = _QUAD.match(text)
    if m and "*" in text:
        if kind == "exact":
            raise EntriesError("exact keys take a plain value", line)
        if vtype != Bits(32):
            raise EntriesError("dotted address pattern on a non 32-bit key", line)
        value = mask = 0
        for part in m.groups():
            value <<= 8
            mask <<= 8
            if part != "*":
                if int(part) > 255:
                    raise EntriesError(f"bad address {text}", line)
                value |= int(part)
                mask |= 0xFF
        return Ternary(value, mask)
    if "/" in text:
        if kind == "exact":
            raise EntriesError("exact keys take a plain value", line)
        if vtype == BOOL:
            raise EntriesError("boolean keys cannot be masked", line)
        v, m_ = text.split("/", 1)
        value = parse_value(v, vtype, line)
        mask = parse_value(m_, vtype, line)
        return Ternary(value.value, mask.value)
    return Exact(parse_value(text, vtype, line))


def _split_args(text):
    text = text.strip()
    return [a.strip() for a in text.split(",")] if text else []


def _data(p, action, args, line):
    decl = p.actions.get(action)
    if decl is None:
        raise EntriesError(f"unknown action {action}", line)
    if len(args) != len(decl.params):
        n = len(decl.params)
        raise EntriesError(f"action {action} takes {n} argument{'s' * (n != 1)}, got {len(args)}", line)
    return tuple(parse_value(a, q.type, line) for a, q in zip(args, decl.params))


def _key_type(p, expr):
    # keys are typed as if every referenced instance were valid
    everything = product(Inst(h) for h in referenced_headers(expr))
    t, _ = check_expression(p, {}, everything, expr)
    return t


def load_entries(text, p, filename="<entries>"):
    """Parse an entries file against program ``p``; raises EntriesError."""
    tables = {}
    defaults = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DEFAULT.match(line)
        if m:
            t_name, action, args = m.groups()
            t = p.tables.get(t_name)
            if t is None:
                raise EntriesError(f"unknown table {t_name}", number)
            if action not in t.actions:
                raise EntriesError(f"action {action} is not an action of table {t_name}", number)
            if t_name in defaults:
                raise EntriesError(f"second default for table {t_name}", number)
            defaults[t_name] = (action, _data(p, action, _split_args(args), number))
            continue
        m = _ENTRY.match(line)
        if not m:
            raise EntriesError(f"malformed entry {line!r}", number)
        t_name, middle, action, args = m.groups()
        t = p.tables.get(t_name)
        if t is None:
            raise EntriesError(f"unknown table {t_name}", number)
        if action not in t.actions:
            raise EntriesError(f"action {action} is not an action of table {t_name}", number)
        parts = {}
        for item in middle.split():
            name, eq, value = item.partition("=")
            if not eq or name not in ("valids", "keys") or name in parts:
                raise EntriesError(f"malformed field {item!r}", number)
            parts[name] = value
        bits = parts.get("valids", "")
        if len(bits) != len(t.valids) or set(bits) - {"0", "1"}:
            raise EntriesError(f"table {t_name} needs {len(t.valids)} valid bits, got {bits!r}", number)
        keys = _split_args(parts.get("keys", ""))
        if len(keys) != len(t.reads):
            raise EntriesError(f"table {t_name} has {len(t.reads)} keys, got {len(keys)}", number)
        patterns = tuple(parse_pattern(k, _key_type(p, r.expr), r.kind, number)
                         for k, r in zip(keys, t.reads))
        entry = Entry(tuple(b == "1" for b in bits), patterns, action,
                      _data(p, action, _split_args(args), number), line=number)
        tables.setdefault(t_name, []).append(entry)
    return TableState(tables, defaults, filename)


def load_entries_file(path, p):
    with open(path, encoding="utf-8") as fh:
        return load_entries(fh.read(), p, filename=str(path))


# -- selection -------------------------------------------------------------------

def entry_matches(t, entry, headers):
    """Valid bits first; keys are evaluated lazily and only when not wildcarded."""
    for h, bit in zip(t.valids, entry.valid_bits):
        if (h in headers) != bit:
            return False
    for key, pattern in zip(t.reads, entry.keys):
        if isinstance(pattern, Wildcard):
            continue
        if not pattern.matches(eval_expression(headers, key.expr)):
            return False
    return True


def select_action(p, t, headers, st):
    """First matching entry's (action, data); on a miss the default, else None."""
    for entry in st.entries(t.name):
        if entry_matches(t, entry, headers):
            return entry.action, entry.data
    if t.name in st.defaults:
        return st.defaults[t.name]
    if t.default is not None:
        return t.default.action, tuple(a.value for a in t.default.args)
    return None


# -- validation ------------------------------------------------------------------

def validate_well_behaved(p, st, assumptions):
    """Entries that could fault or break the checker's assumptions.

    ``assumptions`` maps table -> action -> instances assumed valid, as in
    CheckResult.assumptions.
    """
    out = []

    def violation(line, message):
        span = Span(line, 1, line, 1) if line is not None else None
        out.append(Diagnostic("error", st.filename, span, message, provenance="entries"))

    for t_name in sorted(set(st.tables) | set(st.defaults)):
        t = p.tables.get(t_name)
        if t is None:
            violation(None, f"unknown table {t_name}")
            continue
        assumed = assumptions.get(t_name, {})
        for i, e in enumerate(st.entries(t_name), start=1):
            where = f"entry {i} of table {t_name}"
            valid = {h for h, b in zip(t.valids, e.valid_bits) if b}
            for key, pattern in zip(t.reads, e.keys):
                if not maskable(t, key.expr, key.kind) or isinstance(pattern, Wildcard):
                    continue
                invalid = sorted(referenced_headers(key.expr) - valid)
                if invalid:
                    out_key = ", ".join(invalid)
                    violation(e.line, f"{where}: key on {out_key} must be wildcarded "
                              f"when {out_key} is matched invalid")
            _check_data(p, e.action, e.data, where, e.line, violation)
            for h in sorted(assumed.get(e.action, frozenset()) - valid):
                violation(e.line, f"{where}: action {e.action} assumes {h} valid "
                          f"but the entry matches {h} as invalid")
        if t_name in st.defaults:
            action, data = st.defaults[t_name]
            where = f"default of table {t_name}"
            _check_data(p, action, data, where, None, violation)
            for h in sorted(assumed.get(action, frozenset())):
                violation(None, f"{where}: action {action} assumes {h} valid, "
                          f"which a miss cannot guarantee")
    return out


def _check_data(p, action, data, where, line, violation):
    decl = p.actions.get(action)
    if decl is None:
        violation(line, f"{where}: unknown action {action}")
        return
    if len(data) != len(decl.params):
        violation(line, f"{where}: action {action} takes {len(decl.params)} arguments, got {len(data)}")
        return
    for v, q in zip(data, decl.params):
        if type_of_value(v) != q.type:
            violation(line, f"{where}: argument {q.name} of {action} must be {q.type}, "
                      f"found {type_of_value(v)}")


# -- random well-behaved states --------------------------------------------------

def random_value(vtype, rng):
    if vtype == BOOL:
        return rng.random() < 0.5
    w = vtype.width
    choice = rng.random()
    if choice < 0.4:
        return BitVec(rng.randrange(min(4, 1 << w)), w)
    if choice < 0.5:
        return BitVec((1 << w) - 1, w)
    return BitVec(rng.getrandbits(w), w)


def _random_pattern(p, key, rng, must_wildcard):
    vtype = _key_type(p, key.expr)
    if must_wildcard:
        return WILDCARD
    if key.kind == "exact" or vtype == BOOL:
        if key.kind == "ternary" and rng.random() < 0.4:
            return WILDCARD
        return Exact(random_value(vtype, rng))
    r = rng.random()
    if r < 0.4:
        return WILDCARD
    if r < 0.7:
        return Exact(random_value(vtype, rng))
    return Ternary(random_value(vtype, rng).value, rng.getrandbits(vtype.width))


def generate_entries(p, assumptions, rng, max_entries=4, default_rate=0.3):
    """A random TableState that passes validate_well_behaved."""
    tables = {}
    defaults = {}
    for t in p.tables.values():
        assumed = assumptions.get(t.name, {})
        entries = []
        for _ in range(rng.randrange(max_entries + 1)):
            if not t.actions:
                break
            action = rng.choice(t.actions)
            need = assumed.get(action, frozenset())
            bits = tuple(h in need or rng.random() < 0.5 for h in t.valids)
            valid = {h for h, b in zip(t.valids, bits) if b}
            keys = tuple(
                _random_pattern(p, k, rng, maskable(t, k.expr, k.kind)
                                and not referenced_headers(k.expr) <= valid)
                for k in t.reads)
            data = tuple(random_value(q.type, rng) for q in p.actions[action].params)
            entries.append(Entry(bits, keys, action, data))
        if entries:
            tables[t.name] = entries
        free = [a for a in t.actions if not assumed.get(a)]
        if free and rng.random() < default_rate:
            action = rng.choice(free)
            defaults[t.name] = (action, tuple(random_value(q.type, rng)
                                              for q in p.actions[action].params))
    return TableState(tables, defaults)
