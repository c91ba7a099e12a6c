"""Header-validity types.

A header type describes which sets of header instances may be valid together
at a program point. Terms are built from ``0`` (no possible state), ``1`` (the
state with nothing valid), instance names, concatenation ``a.b`` (union of one
alternative from each side) and choice ``a+b`` (either side).

The structural operators below never enumerate alternatives. ``denote`` does,
through the kernel in :mod:`hdrsafe.kernels`, and is capped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from hdrsafe import kernels
from hdrsafe._kernel_py import OP_ALT, OP_CAT, OP_INST, OP_ONE, OP_ZERO
from hdrsafe.kernels import DenotationTooLarge

DEFAULT_CAP = 1 << 16

__all__ = [
    "HeaderType", "Zero", "One", "Inst", "Cat", "Alt", "ZERO", "ONE",
    "cat", "alt", "total", "product", "instances", "size",
    "Denotation", "DenotationTooLarge", "DEFAULT_CAP", "denote",
    "restrict", "neg_restrict", "includes", "remove", "is_empty",
    "entails", "subtype", "equivalent", "normalize", "restrict_all",
    "compact", "parse_type", "format_type",
]


class HeaderType:
    __slots__ = ()

    def __str__(self):
        return format_type(self)


@dataclass(frozen=True, repr=False)
class Zero(HeaderType):
    def __repr__(self):
        return "Zero()"


@dataclass(frozen=True, repr=False)
class One(HeaderType):
    def __repr__(self):
        return "One()"


@dataclass(frozen=True)
class Inst(HeaderType):
    name: str


@dataclass(frozen=True)
class Cat(HeaderType):
    left: HeaderType
    right: HeaderType


@dataclass(frozen=True)
class Alt(HeaderType):
    left: HeaderType
    right: HeaderType


ZERO = Zero()
ONE = One()


# -- smart constructors (unit laws only, denotation-preserving) -------------

def cat(a, b):
    if isinstance(a, Zero) or isinstance(b, Zero):
        return ZERO
    if isinstance(a, One):
        return b
    if isinstance(b, One):
        return a
    return Cat(a, b)


def alt(a, b):
    if isinstance(a, Zero):
        return b
    if isinstance(b, Zero):
        return a
    if a == b:
        return a
    return Alt(a, b)


def total(terms):
    """Choice over an iterable of types (0 when empty)."""
    out = ZERO
    for t in reversed(list(terms)):
        out = alt(t, out)
    return out


def product(terms):
    """Concatenation of an iterable of types (1 when empty)."""
    out = ONE
    for t in reversed(list(terms)):
        out = cat(t, out)
    return out


def instances(t):
    """Instance names mentioned anywhere in ``t``."""
    found = set()
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Inst):
            found.add(t.name)
        elif isinstance(t, (Cat, Alt)):
            stack.append(t.left)
            stack.append(t.right)
    return found


def size(t):
    n = 0
    stack = [t]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, (Cat, Alt)):
            stack.append(t.left)
            stack.append(t.right)
    return n


# -- denotation --------------------------------------------------------------

class Denotation:
    """A set of alternatives, each a set of instance names.

    Stored as sorted bitmasks over ``universe``. Equality compares the sets
    themselves, so denotations over different universes compare correctly.
    """

    __slots__ = ("universe", "masks", "_index")

    def __init__(self, universe, masks):
        self.universe = tuple(universe)
        self.masks = tuple(masks)
        self._index = {name: i for i, name in enumerate(self.universe)}

    def mask_of(self, names):
        m = 0
        for n in names:
            i = self._index.get(n)
            if i is None:
                return None
            m |= 1 << i
        return m

    def _names(self, mask):
        return frozenset(n for i, n in enumerate(self.universe) if mask >> i & 1)

    def sets(self):
        return frozenset(self._names(m) for m in self.masks)

    def sorted_sets(self):
        """Alternatives as sorted name tuples, in a stable order."""
        return sorted((tuple(sorted(s)) for s in self.sets()), key=lambda s: (len(s), s))

    def __contains__(self, names):
        m = self.mask_of(names)
        return m is not None and m in set(self.masks)

    def __len__(self):
        return len(self.masks)

    def __iter__(self):
        return iter(self.sets())

    def __eq__(self, other):
        if isinstance(other, Denotation):
            if self.universe == other.universe:
                return self.masks == other.masks
            return self.sets() == other.sets()
        if isinstance(other, (set, frozenset)):
            return self.sets() == {frozenset(s) for s in other}
        return NotImplemented

    def __hash__(self):
        return hash(self.sets())

    def issubset(self, other):
        return self.sets() <= other.sets()

    def __repr__(self):
        inner = ", ".join("{" + ", ".join(s) + "}" for s in self.sorted_sets())
        return f"Denotation({{{inner}}})"


def _compile(t, index):
    # postfix code; products with an empty factor compile to OP_ZERO so the
    # kernel never builds the other factor
    out = []
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if isinstance(node, Zero):
            out.append(None)
        elif isinstance(node, One):
            out.append([OP_ONE])
        elif isinstance(node, Inst):
            out.append([OP_INST, index[node.name]])
        elif done:
            right = out.pop()
            left = out.pop()
            if isinstance(node, Cat):
                out.append(None if left is None or right is None else left + right + [OP_CAT])
            elif left is None or right is None:
                out.append(right if left is None else left)
            else:
                out.append(left + right + [OP_ALT])
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
    code = out.pop()
    return [OP_ZERO] if code is None else code


def denote(t, universe=None, cap=DEFAULT_CAP):
    """Exact denotation of ``t``; raises DenotationTooLarge beyond ``cap``."""
    if universe is None:
        universe = sorted(instances(t))
    else:
        universe = list(universe)
        missing = instances(t) - set(universe)
        universe.extend(sorted(missing))
    index = {name: i for i, name in enumerate(universe)}
    code = _compile(t, index)
    return Denotation(universe, kernels.eval_code(code, len(universe), cap))


# -- structural operators ----------------------------------------------------

def restrict(t, h):
    """Keep only alternatives in which ``h`` is valid."""
    if isinstance(t, (Zero, One)):
        return ZERO
    if isinstance(t, Inst):
        return t if t.name == h else ZERO
    if isinstance(t, Cat):
        return alt(cat(restrict(t.left, h), t.right), cat(t.left, restrict(t.right, h)))
    return alt(restrict(t.left, h), restrict(t.right, h))


def neg_restrict(t, h):
    """Keep only alternatives in which ``h`` is invalid."""
    if isinstance(t, (Zero, One)):
        return t
    if isinstance(t, Inst):
        return ZERO if t.name == h else t
    if isinstance(t, Cat):
        return cat(neg_restrict(t.left, h), neg_restrict(t.right, h))
    return alt(neg_restrict(t.left, h), neg_restrict(t.right, h))


def remove(t, h):
    """Drop ``h`` from every alternative."""
    if isinstance(t, (Zero, One)):
        return t
    if isinstance(t, Inst):
        return ONE if t.name == h else t
    if isinstance(t, Cat):
        return cat(remove(t.left, h), remove(t.right, h))
    return alt(remove(t.left, h), remove(t.right, h))


def is_empty(t):
    """True iff ``t`` has no alternatives. A product is empty if either side is."""
    if isinstance(t, Zero):
        return True
    if isinstance(t, (One, Inst)):
        return False
    if isinstance(t, Cat):
        return is_empty(t.left) or is_empty(t.right)
    return is_empty(t.left) and is_empty(t.right)


def _includes(t, h):
    # returns (empty, h in every alternative)
    if isinstance(t, Zero):
        return True, False
    if isinstance(t, One):
        return False, False
    if isinstance(t, Inst):
        return False, t.name == h
    le, li = _includes(t.left, h)
    re_, ri = _includes(t.right, h)
    if isinstance(t, Cat):
        if le or re_:
            return True, False
        return False, li or ri
    if le:
        return re_, ri
    if re_:
        return False, li
    return False, li and ri


def includes(t, h):
    """True iff ``t`` is nonempty and ``h`` is valid in every alternative."""
    return _includes(t, h)[1]


def restrict_all(t, hs):
    for h in sorted(hs):
        t = restrict(t, h)
    return t


def _prune(t, keep):
    # drop every alternative that mentions an instance outside ``keep``
    if isinstance(t, Inst):
        return t if t.name in keep else ZERO
    if isinstance(t, (Zero, One)):
        return t
    left, right = _prune(t.left, keep), _prune(t.right, keep)
    return cat(left, right) if isinstance(t, Cat) else alt(left, right)


def entails(valid, t, cap=DEFAULT_CAP):
    """True iff the set ``valid`` is one of the alternatives of ``t``."""
    valid = frozenset(valid)
    pruned = _prune(t, valid)
    if is_empty(pruned):
        return False
    return valid in denote(pruned, universe=sorted(valid), cap=cap)


def subtype(a, b, cap=DEFAULT_CAP):
    """True iff every alternative of ``a`` is an alternative of ``b``."""
    if is_empty(a):
        return True
    universe = sorted(instances(a) | instances(b))
    da = denote(a, universe, cap)
    db = denote(b, universe, cap)
    return set(da.masks) <= set(db.masks)


def equivalent(a, b, cap=DEFAULT_CAP):
    return subtype(a, b, cap) and subtype(b, a, cap)


# -- normalization -----------------------------------------------------------

def _factors(t, out):
    while isinstance(t, Cat):
        _factors(t.left, out)
        t = t.right
    out.append(t)


def _choices(t, out):
    while isinstance(t, Alt):
        _choices(t.left, out)
        t = t.right
    out.append(t)


def normalize(t):
    """Unit, annihilator and idempotence rewrites on right-associated spines."""
    if isinstance(t, Cat):
        raw = []
        _factors(t, raw)
        parts = []
        for f in raw:
            f = normalize(f)
            if isinstance(f, Zero):
                return ZERO
            if isinstance(f, One):
                continue
            if isinstance(f, Cat):
                _factors(f, parts)
            else:
                parts.append(f)
        return _spine(parts, Cat, ONE)
    if isinstance(t, Alt):
        raw = []
        _choices(t, raw)
        parts = []
        seen = set()
        for c in raw:
            c = normalize(c)
            flat = []
            _choices(c, flat)
            for c in flat:
                if isinstance(c, Zero) or c in seen:
                    continue
                seen.add(c)
                parts.append(c)
        return _spine(parts, Alt, ZERO)
    return t


def _spine(parts, node, unit):
    if not parts:
        return unit
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = node(p, out)
    return out


def compact(t, threshold=64, cap=DEFAULT_CAP):
    """Normalize, and replace a large term by its sum-of-products form if smaller."""
    t = normalize(t)
    if size(t) <= threshold:
        return t
    d = denote(t, cap=cap)
    sop = total(product(Inst(n) for n in alt_set) for alt_set in d.sorted_sets())
    return sop if size(sop) < size(t) else t


# -- textual notation ----------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([01])|(.))")


def parse_type(text):
    """Parse ``0``, ``1``, names, ``.``, ``+`` and parentheses (``.`` binds tighter)."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        name, digit, sym = m.groups()
        if name:
            tokens.append(("name", name))
        elif digit:
            tokens.append(("unit", digit))
        elif sym in ".+()":
            tokens.append((sym, sym))
        elif sym is not None and sym.strip():
            raise ValueError(f"unexpected {sym!r} in header type")
        pos = m.end()
    tokens.append(("end", None))
    pos = 0

    def peek():
        return tokens[pos][0]

    def take(kind):
        nonlocal pos
        tok = tokens[pos]
        if tok[0] != kind:
            raise ValueError(f"expected {kind}, found {tok[1] or 'end'} in header type")
        pos += 1
        return tok

    def choice():
        parts = [concat()]
        while peek() == "+":
            take("+")
            parts.append(concat())
        return _spine(parts, Alt, ZERO)

    def concat():
        parts = [atom()]
        while peek() == ".":
            take(".")
            parts.append(atom())
        return _spine(parts, Cat, ONE)

    def atom():
        kind = peek()
        if kind == "name":
            return Inst(take("name")[1])
        if kind == "unit":
            return ONE if take("unit")[1] == "1" else ZERO
        if kind == "(":
            take("(")
            inner = choice()
            take(")")
            return inner
        raise ValueError(f"unexpected {tokens[pos][1] or 'end'} in header type")

    result = choice()
    take("end")
    return result


def format_type(t):
    """Render with minimal parentheses; parse_type(format_type(t)) == t up to spine shape."""
    if isinstance(t, Zero):
        return "0"
    if isinstance(t, One):
        return "1"
    if isinstance(t, Inst):
        return t.name
    if isinstance(t, Alt):
        return f"{format_type(t.left)}+{format_type(t.right)}"
    parts = []
    for side in (t.left, t.right):
        s = format_type(side)
        parts.append(f"({s})" if isinstance(side, Alt) else s)
    return ".".join(parts)
