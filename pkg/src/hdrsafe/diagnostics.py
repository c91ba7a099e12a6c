"""Located errors and warnings, bug classification and rendering."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

from hdrsafe import htypes
from hdrsafe.syntax import ControlDecl, Extract, If, IfValid, flatten


class BugCategory(enum.Enum):
    PARSER = "ParserBug"
    CONTROL = "ControlBug"
    TABLE_READS = "TableReadsBug"
    TABLE_ACTION = "TableActionBug"
    DEFAULT_ACTION = "DefaultActionBug"
    UNCLASSIFIED = "Unclassified"

    def __str__(self):
        return self.value


# provenance values
SYNTAX = "syntax"
PARSER = "parser-region"
CONTROL = "control-apply"
READS = "table-reads"
ACTION = "table-action"
DEFAULT = "table-default"
RUNTIME = "runtime"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    file: str
    span: object
    message: str
    category: BugCategory | None = None
    provenance: str | None = None
    instance: str | None = None
    table: str | None = None
    action: str | None = None
    # table whose implicit no-op default left ``instance`` possibly invalid
    default_gap: str | None = field(default=None, compare=False)

    @property
    def is_error(self):
        return self.severity == "error"

    def sort_key(self):
        s = self.span
        pos = (s.line, s.col, s.end_line, s.end_col) if s is not None else (0, 0, 0, 0)
        return (self.file, pos, 0 if self.is_error else 1, self.message)

    def text(self):
        where = f"{self.file}, {self.span}" if self.span is not None else self.file
        if self.is_error:
            return f"{where}: error {self.message}"
        return f"{where}: warning: {self.message}"

    def record(self):
        s = self.span
        return {
            "severity": self.severity,
            "category": str(self.category) if self.category else None,
            "file": self.file,
            "line": s.line if s else None,
            "col": s.col if s else None,
            "end_line": s.end_line if s else None,
            "end_col": s.end_col if s else None,
            "message": self.message,
            "provenance": self.provenance,
            "instance": self.instance,
            "table": self.table,
            "action": self.action,
        }


def not_valid_message(h):
    return f"{h} not guaranteed to be valid"


# -- classification ------------------------------------------------------------

def _extracted(p):
    found = set()

    def walk(c):
        for item in flatten(c):
            if isinstance(item, Extract):
                found.add(item.inst)
            elif isinstance(item, (If, IfValid)):
                walk(item.then)
                walk(item.other)

    for d in p.decls:
        if isinstance(d, ControlDecl):
            walk(d.body)
    walk(p.body)
    return found


def classify(d, p, ctx):
    """Bug category of an invalid-header error.

    Rules, first match wins:
      1. the header's validity was lost through a table's implicit no-op
         default (a table whose actions all make it valid) -> DefaultActionBug
      2. a reads key: the header is matched as valid in the same table, so
         only the match kind is wrong -> TableReadsBug; otherwise the table
         runs in a context that does not guarantee the header -> ControlBug
      3. an action body: other actions of the same table need different
         headers -> TableActionBug; otherwise -> ControlBug
      4. a control command: the header is extracted by the program and is
         valid on some path reaching the site (joined over all contexts the
         site is checked in) -> ParserBug; otherwise -> ControlBug
    """
    h = d.instance
    if not d.is_error or h is None:
        return BugCategory.UNCLASSIFIED
    if d.default_gap is not None:
        return BugCategory.DEFAULT_ACTION
    if d.provenance == READS:
        table = p.tables.get(d.table)
        if table is not None and h in table.valids:
            return BugCategory.TABLE_READS
        return BugCategory.CONTROL
    if d.provenance in (ACTION, DEFAULT):
        failures = ctx.action_failures.get(d.table, {})
        for other, needed in failures.items():
            if other != d.action and needed and h not in needed:
                return BugCategory.TABLE_ACTION
        return BugCategory.CONTROL
    if d.provenance in (PARSER, CONTROL):
        site = ctx.site_types.get(d.span, htypes.ZERO)
        if h in _extracted(p) and not htypes.is_empty(htypes.restrict(site, h)):
            return BugCategory.PARSER
        return BugCategory.CONTROL
    return BugCategory.UNCLASSIFIED


def classify_all(ds, p, ctx):
    out = []
    for d in ds:
        if d.is_error and d.instance is not None:
            d = replace(d, category=classify(d, p, ctx))
        elif d.is_error:
            d = replace(d, category=BugCategory.UNCLASSIFIED)
        out.append(d)
    return out


@dataclass(frozen=True)
class BugRecord:
    """Errors folded into one root cause; ``sites`` are the symptom spans."""

    category: BugCategory
    key: str
    instance: str | None
    sites: tuple


def group_bugs(ds):
    """Fold classified errors into root causes.

    Parser and control bugs group by faulting instance. Table bugs group by
    table, since one table edit fixes them. Default-action bugs group by the
    table whose default is missing.
    """
    groups = {}
    order = []
    for d in sorted((d for d in ds if d.is_error), key=Diagnostic.sort_key):
        cat = d.category or BugCategory.UNCLASSIFIED
        if cat in (BugCategory.TABLE_READS, BugCategory.TABLE_ACTION):
            key = d.table
        elif cat is BugCategory.DEFAULT_ACTION:
            key = d.default_gap
        elif cat is BugCategory.UNCLASSIFIED:
            key = d.message
        else:
            key = d.instance
        k = (cat, key)
        if k not in groups:
            groups[k] = (d.instance, [])
            order.append(k)
        if d.span not in groups[k][1]:
            groups[k][1].append(d.span)
    return [BugRecord(c, key, groups[(c, key)][0], tuple(groups[(c, key)][1])) for c, key in order]


# -- rendering -------------------------------------------------------------------

def sort_diagnostics(ds):
    return sorted(ds, key=Diagnostic.sort_key)


def summary(ds):
    errors = sum(1 for d in ds if d.is_error)
    warnings = len(ds) - errors
    return f"{errors} error{'s' * (errors != 1)}, {warnings} warning{'s' * (warnings != 1)}"


def render(ds, mode="text"):
    """Text lines in source order, or a JSON document in structured mode."""
    ds = sort_diagnostics(ds)
    if mode == "structured":
        return json.dumps([d.record() for d in ds], indent=2)
    if mode != "text":
        raise ValueError(f"unknown render mode {mode!r}")
    return "".join(d.text() + "\n" for d in ds)
