"""Solver-neutral constraint model: integer/boolean variables, linear,
clause, at-most-k and implication constraints, and a linear objective.

Literals are variable indices; the negation of variable ``v`` is ``~v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

INF = math.inf


class ModelError(ValueError):
    def __init__(self, message: str, constraint_id: int | None = None):
        self.constraint_id = constraint_id
        super().__init__(message if constraint_id is None else f"constraint {constraint_id}: {message}")


class Constraint(NamedTuple):
    kind: str  # linear | clause | atmost | implies
    terms: tuple[tuple[int, int], ...] = ()  # linear: (coef, var)
    lits: tuple[int, ...] = ()  # clause/atmost/implies consequents
    ante: tuple[int, ...] = ()  # implies antecedents
    lo: float = -INF
    hi: float = INF
    tag: str = ""


def lit_var(lit: int) -> int:
    return lit if lit >= 0 else ~lit


def lit_value(lit: int, values: Sequence[int]) -> int:
    return values[lit] if lit >= 0 else 1 - values[~lit]


def to_linear(c: Constraint) -> tuple[tuple[tuple[int, int], ...], float, float]:
    """Rewrite any constraint as ``lo <= sum(coef * var) <= hi``."""
    if c.kind == "linear":
        return c.terms, c.lo, c.hi
    lits = c.lits if c.kind != "implies" else tuple(~a for a in c.ante) + c.lits
    terms = tuple((1, l) if l >= 0 else (-1, ~l) for l in lits)
    neg = sum(1 for l in lits if l < 0)
    if c.kind in ("clause", "implies"):
        return terms, 1 - neg, INF
    if c.kind == "atmost":
        return terms, -INF, c.hi - neg
    raise ModelError(f"unknown constraint kind {c.kind!r}")


@dataclass
class ConstraintModel:
    name: str = "model"
    names: list[str] = field(default_factory=list)
    lo: list[int] = field(default_factory=list)
    hi: list[int] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: list[tuple[int, int]] = field(default_factory=list)
    objective_offset: int = 0
    groups: dict[str, list[int]] = field(default_factory=dict)

    # -- declarations -------------------------------------------------------
    def new_int(self, name: str, lo: int, hi: int) -> int:
        if lo > hi:
            raise ModelError(f"empty domain for {name}: [{lo}, {hi}]")
        self.names.append(name)
        self.lo.append(int(lo))
        self.hi.append(int(hi))
        return len(self.names) - 1

    def new_bool(self, name: str) -> int:
        return self.new_int(name, 0, 1)

    def const(self, value: int) -> int:
        key = f"const[{value}]"
        group = self.groups.setdefault("__const__", [])
        for v in group:
            if self.names[v] == key:
                return v
        v = self.new_int(key, value, value)
        group.append(v)
        return v

    def add_to_group(self, group: str, *variables: int) -> None:
        self.groups.setdefault(group, []).extend(variables)

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def is_bool(self, v: int) -> bool:
        return self.lo[v] >= 0 and self.hi[v] <= 1

    # -- constraints --------------------------------------------------------
    def _add(self, c: Constraint) -> int:
        self.constraints.append(c)
        return len(self.constraints) - 1

    def add_linear(self, terms: Iterable[tuple[int, int]], lo: float = -INF, hi: float = INF,
                   tag: str = "") -> int:
        merged: dict[int, int] = {}
        for coef, var in terms:
            merged[var] = merged.get(var, 0) + int(coef)
        t = tuple((c, v) for v, c in merged.items() if c != 0)
        return self._add(Constraint("linear", terms=t, lo=lo, hi=hi, tag=tag))

    def add_eq(self, terms: Iterable[tuple[int, int]], rhs: int, tag: str = "") -> int:
        return self.add_linear(terms, rhs, rhs, tag)

    def add_clause(self, lits: Iterable[int], tag: str = "") -> int:
        return self._add(Constraint("clause", lits=tuple(lits), tag=tag))

    def add_atmost(self, lits: Iterable[int], k: int, tag: str = "") -> int:
        return self._add(Constraint("atmost", lits=tuple(lits), hi=k, tag=tag))

    def add_implies(self, ante: Iterable[int], cons: Iterable[int] | int, tag: str = "") -> int:
        """``all(ante) => any(cons)``."""
        cons_t = (cons,) if isinstance(cons, int) else tuple(cons)
        return self._add(Constraint("implies", lits=cons_t, ante=tuple(ante), tag=tag))

    def add_and(self, out: int, inputs: Sequence[int], tag: str = "") -> None:
        """``out <=> all(inputs)`` over literals."""
        for x in inputs:
            self.add_implies([out], x, tag)
        self.add_implies(list(inputs), out, tag)

    def add_or(self, out: int, inputs: Sequence[int], tag: str = "") -> None:
        """``out <=> any(inputs)`` over literals."""
        for x in inputs:
            self.add_implies([x], out, tag)
        self.add_implies([out], list(inputs), tag)

    def minimize(self, terms: Iterable[tuple[int, int]], offset: int = 0) -> None:
        merged: dict[int, int] = {}
        for coef, var in terms:
            merged[var] = merged.get(var, 0) + int(coef)
        self.objective = [(c, v) for v, c in merged.items() if c != 0]
        self.objective_offset = int(offset)

    # -- evaluation ---------------------------------------------------------
    def objective_value(self, values: Sequence[int]) -> int:
        return self.objective_offset + sum(c * values[v] for c, v in self.objective)

    def check_wellformed(self) -> None:
        n = self.num_vars
        for cid, c in enumerate(self.constraints):
            refs = [v for _, v in c.terms] + [lit_var(l) for l in c.lits + c.ante]
            for v in refs:
                if not 0 <= v < n:
                    raise ModelError(f"references undeclared variable {v}", cid)
            if c.kind in ("clause", "atmost", "implies"):
                for v in refs:
                    if not self.is_bool(v):
                        raise ModelError(f"literal on non-boolean variable {self.names[v]}", cid)
            if c.kind not in ("linear", "clause", "atmost", "implies"):
                raise ModelError(f"unknown kind {c.kind!r}", cid)
        for _, v in self.objective:
            if not 0 <= v < n:
                raise ModelError(f"objective references undeclared variable {v}")

    def stats(self) -> dict[str, int]:
        kinds: dict[str, int] = {}
        for c in self.constraints:
            kinds[c.kind] = kinds.get(c.kind, 0) + 1
        return {"vars": self.num_vars, "bools": sum(1 for v in range(self.num_vars) if self.is_bool(v)),
                "constraints": len(self.constraints), **kinds}


# -- text IR ----------------------------------------------------------------
#   model <name>
#   var <index> <name> <lo> <hi>
#   linear <tag> <lo> <hi> : <coef> <var> ...
#   clause <tag> : <lit> ...            (negated literal written !<var>)
#   atmost <tag> <k> : <lit> ...
#   implies <tag> : <lit> ... -> <lit> ...
#   objective <offset> : <coef> <var> ...
#   group <name> : <var> ...

def _fmt_lit(l: int) -> str:
    return str(l) if l >= 0 else f"!{~l}"


def _parse_lit(tok: str) -> int:
    return ~int(tok[1:]) if tok.startswith("!") else int(tok)


def _fmt_bound(x: float) -> str:
    return "inf" if x == INF else "-inf" if x == -INF else str(int(x))


def _parse_bound(tok: str) -> float:
    return INF if tok == "inf" else -INF if tok == "-inf" else int(tok)


def _tag(t: str) -> str:
    return t.replace(" ", "_") or "-"


def model_to_text(m: ConstraintModel) -> str:
    out = [f"model {_tag(m.name)}"]
    for i, (name, lo, hi) in enumerate(zip(m.names, m.lo, m.hi)):
        out.append(f"var {i} {_tag(name)} {lo} {hi}")
    for c in m.constraints:
        if c.kind == "linear":
            body = " ".join(f"{coef} {v}" for coef, v in c.terms)
            out.append(f"linear {_tag(c.tag)} {_fmt_bound(c.lo)} {_fmt_bound(c.hi)} : {body}")
        elif c.kind == "clause":
            out.append(f"clause {_tag(c.tag)} : " + " ".join(map(_fmt_lit, c.lits)))
        elif c.kind == "atmost":
            out.append(f"atmost {_tag(c.tag)} {_fmt_bound(c.hi)} : " + " ".join(map(_fmt_lit, c.lits)))
        else:
            out.append(f"implies {_tag(c.tag)} : " + " ".join(map(_fmt_lit, c.ante)) + " -> "
                       + " ".join(map(_fmt_lit, c.lits)))
    out.append(f"objective {m.objective_offset} : " + " ".join(f"{c} {v}" for c, v in m.objective))
    for g, vs in sorted(m.groups.items()):
        out.append(f"group {_tag(g)} : " + " ".join(map(str, vs)))
    return "\n".join(out) + "\n"


def model_from_text(text: str) -> ConstraintModel:
    m = ConstraintModel()
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        pre, sep, body = rest.partition(" : ")
        if not sep and rest.endswith(" :"):
            pre, body = rest[:-2], ""
        toks = body.split()
        try:
            if head == "model":
                m.name = rest
            elif head == "var":
                idx, name, lo, hi = rest.split()
                if int(idx) != m.num_vars:
                    raise ModelError(f"line {no}: variables must be declared in order")
                m.new_int(name, int(lo), int(hi))
            elif head == "linear":
                tag, lo, hi = pre.split()
                terms = [(int(toks[i]), int(toks[i + 1])) for i in range(0, len(toks), 2)]
                m.constraints.append(Constraint("linear", terms=tuple(terms), lo=_parse_bound(lo),
                                                hi=_parse_bound(hi), tag=tag))
            elif head == "clause":
                m.constraints.append(Constraint("clause", lits=tuple(map(_parse_lit, toks)), tag=pre))
            elif head == "atmost":
                tag, k = pre.split()
                m.constraints.append(Constraint("atmost", lits=tuple(map(_parse_lit, toks)),
                                                hi=_parse_bound(k), tag=tag))
            elif head == "implies":
                left, _, right = body.partition("->")
                m.constraints.append(Constraint("implies", ante=tuple(map(_parse_lit, left.split())),
                                                lits=tuple(map(_parse_lit, right.split())), tag=pre))
            elif head == "objective":
                m.objective_offset = int(pre)
                m.objective = [(int(toks[i]), int(toks[i + 1])) for i in range(0, len(toks), 2)]
            elif head == "group":
                m.groups[pre] = [int(t) for t in toks]
            else:
                raise ModelError(f"line {no}: unknown record {head!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"line {no}: malformed record: {exc}") from exc
    return m
