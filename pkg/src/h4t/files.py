"""Reading and writing the `.h3t` structure format and its constraint extension.

Structure files are UTF-8 and line based::

    h3t 1
    points <n>
    triple <i> <j> <k> <+|->

with ``i < j < k``, one line per assigned sorted triple and ``#`` starting a
comment.  A total structure assigns every sorted triple; a partial one may
omit lines.  Constraint files additionally allow::

    var <name>
    lit <a> <b> <c> <+|->

where each of a, b, c is a point index or a declared variable name and the
sign says whether R holds in the written argument order.
"""

from __future__ import annotations

from .core import DomainError, Hypertournament, PartialHypertournament, triples
from .solver import ConstraintSet, Literal


class H3tParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _tokenize(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_h3t(text: str) -> PartialHypertournament:
    """Parse a structure file; returns a partial structure (possibly total)."""
    part, cs = parse_constraints(text)
    if cs.variables or cs.literals:
        raise DomainError("file declares variables/literals; use parse_constraints")
    return part


def parse_total(text: str) -> Hypertournament:
    part = parse_h3t(text)
    if not part.is_total():
        missing = len(triples(part.n)) - len(part.orient)
        raise DomainError(f"structure file leaves {missing} triples unassigned")
    return part.to_hypertournament()


def parse_constraints(text: str) -> tuple[PartialHypertournament, ConstraintSet]:
    """Parse the constraint extension: base structure plus variables and literals."""
    tokens = list(_tokenize(text))
    if not tokens:
        raise H3tParseError(1, "empty file")
    lineno, head = tokens[0]
    if head != ["h3t", "1"]:
        raise H3tParseError(lineno, f"expected header 'h3t 1', got {' '.join(head)!r}")
    if len(tokens) < 2:
        raise H3tParseError(lineno, "expected 'points <n>' after the header")
    lineno, pts = tokens[1]
    if pts[0] != "points":
        raise H3tParseError(lineno, "expected 'points <n>' after the header")
    try:
        n = int(pts[1])
    except (IndexError, ValueError):
        raise H3tParseError(lineno, "expected 'points <n>' with integer n") from None
    if n < 0:
        raise H3tParseError(lineno, "point count must be non-negative")

    part = PartialHypertournament.empty(n)
    variables: list[str] = []
    literals: list[Literal] = []

    def resolve(tok: str, lineno: int):
        if tok.lstrip("-").isdigit():
            p = int(tok)
            if not 0 <= p < n:
                raise H3tParseError(lineno, f"point {p} out of range 0..{n - 1}")
            return p
        if tok not in variables:
            raise H3tParseError(lineno, f"unknown name {tok!r} (declare with 'var {tok}')")
        return tok

    for lineno, fields in tokens[2:]:
        kind = fields[0]
        if kind == "triple":
            if len(fields) != 5 or fields[4] not in "+-":
                raise H3tParseError(lineno, "expected 'triple <i> <j> <k> <+|->'")
            try:
                i, j, k = (int(x) for x in fields[1:4])
            except ValueError:
                raise H3tParseError(lineno, "triple indices must be integers") from None
            if not i < j < k:
                raise H3tParseError(lineno, f"triple ({i},{j},{k}) is not strictly increasing")
            if i < 0 or k >= n:
                raise H3tParseError(lineno, f"triple ({i},{j},{k}) out of range for {n} points")
            if (i, j, k) in part.orient:
                raise H3tParseError(lineno, f"duplicate triple ({i},{j},{k})")
            part.orient[(i, j, k)] = 1 if fields[4] == "+" else 0
        elif kind == "var":
            if len(fields) != 2:
                raise H3tParseError(lineno, "expected 'var <name>'")
            name = fields[1]
            if name.lstrip("-").isdigit():
                raise H3tParseError(lineno, "variable names must not be integers")
            if name in variables:
                raise H3tParseError(lineno, f"duplicate variable {name!r}")
            variables.append(name)
        elif kind == "lit":
            if len(fields) != 5 or fields[4] not in "+-":
                raise H3tParseError(lineno, "expected 'lit <a> <b> <c> <+|->'")
            a, b, c = (resolve(tok, lineno) for tok in fields[1:4])
            if len({a, b, c}) != 3:
                raise H3tParseError(lineno, "literal arguments must be distinct")
            literals.append(Literal(a, b, c, fields[4] == "+"))
        else:
            raise H3tParseError(lineno, f"unknown directive {kind!r}")
    return part, ConstraintSet(tuple(variables), tuple(literals))


def dump_h3t(struct: Hypertournament | PartialHypertournament, comment: str | None = None) -> str:
    lines = ["h3t 1"]
    if comment:
        for row in comment.splitlines():
            lines.append(f"# {row}")
    lines.append(f"points {struct.n}")
    if isinstance(struct, Hypertournament):
        assigned = {t: struct.bits[r] for r, t in enumerate(triples(struct.n))}
    else:
        assigned = struct.orient
    for key in triples(struct.n):
        if key in assigned:
            sign = "+" if assigned[key] else "-"
            lines.append(f"triple {key[0]} {key[1]} {key[2]} {sign}")
    return "\n".join(lines) + "\n"


def load_total(path: str) -> Hypertournament:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_total(fh.read())


def load_partial(path: str) -> PartialHypertournament:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_h3t(fh.read())


def save(path: str, struct: Hypertournament | PartialHypertournament, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_h3t(struct, comment))
