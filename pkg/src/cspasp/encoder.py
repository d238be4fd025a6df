"""Four translations from CSP instances to ground programs.

direct   -- one atom e(v,i) per value; constraints as forbidden combinations.
support  -- direct's atoms plus support-driven rules, so unit propagation
            prunes exactly like arc consistency on the binary view.
bound    -- atoms b(v,i) meaning v <= i; propagation works on interval
            endpoints only and stays small on wide domains.
range    -- atoms r(v,l,u) meaning v in [l,u] for every subrange, the
            most propagation-complete (and largest) of the four.

All atom arguments live in an internal window 1..d shared by every
variable (d spans the union of the initial domains); EncodingMap is the
only place that knows about the shift back to original values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .csp import (
    ALLDIFFERENT,
    BOUND_CONSISTENCY,
    PERMUTATION,
    TABLE,
    CspInstance,
    DomainState,
    validate_state,
)
from .errors import CapExceeded
from .program import (
    Atom,
    ChoiceRule,
    GroundProgram,
    IntegrityRule,
    Lit,
    NormalRule,
    completion_nogoods,
    make_cardinality,
    neg,
    normalize_cardinality,
    pos,
)
from .propagation import SignedLiteral, Trail, unit_propagate

ENCODING_NAMES = ("direct", "support", "bound", "range")

TABLE_COMPLEMENT_CAP = 10 ** 6
BOX_GRID_CAP = 3 * 10 ** 7


@dataclass(frozen=True)
class EncodingKind:
    """Which translation to use, plus the optional Hall-width limit.

    ``hall_limit`` caps the width of the intervals that get a pigeonhole
    cardinality rule in the bound/range translations; it trades pruning
    strength for encoding size and has no meaning elsewhere.
    """

    name: str
    hall_limit: int | None = None

    def __post_init__(self):
        if self.name not in ENCODING_NAMES:
            raise ValueError(f"unknown encoding: {self.name!r}")
        if self.hall_limit is not None:
            if self.name not in ("bound", "range"):
                raise ValueError("hall_limit only applies to the bound/range encodings")
            if self.hall_limit < 1:
                raise ValueError("hall_limit must be at least 1")


class EncodingMap:
    """Bidirectional map between variable/value meanings and atoms."""

    def __init__(self, instance: CspInstance):
        union: set[int] = set()
        for decl in instance.variables:
            union.update(instance.effective_domain(decl.name))
        self.lo = min(union)
        self.d = max(union) - self.lo + 1
        # internal (shifted) values per variable, ascending
        self.values: dict[str, tuple[int, ...]] = {
            decl.name: tuple(v - self.lo + 1 for v in instance.effective_domain(decl.name))
            for decl in instance.variables
        }

    def internal(self, value: int) -> int:
        return value - self.lo + 1

    def original(self, internal: int) -> int:
        return internal + self.lo - 1

    def window(self, name: str) -> tuple[int, int]:
        vals = self.values[name]
        return vals[0], vals[-1]

    def e_atom(self, name: str, i: int) -> Atom:
        return Atom("e", (name, i))

    def b_atom(self, name: str, i: int) -> Atom:
        return Atom("b", (name, i))

    def r_atom(self, name: str, l: int, u: int) -> Atom:
        return Atom("r", (name, l, u))

    def meaning(self, atom: Atom):
        """Decode an encoding atom to ('eq'|'le'|'in', name, original values)."""
        if atom.name == "e":
            name, i = atom.args
            return ("eq", name, self.original(i))
        if atom.name == "b":
            name, i = atom.args
            return ("le", name, self.original(i))
        if atom.name == "r":
            name, l, u = atom.args
            return ("in", name, self.original(l), self.original(u))
        raise ValueError(f"not an encoding atom: {atom!r}")


@dataclass
class Encoding:
    """A ground program together with its instance and value map."""

    instance: CspInstance
    kind: EncodingKind
    emap: EncodingMap
    program: GroundProgram


def encode(instance: CspInstance, kind: EncodingKind) -> Encoding:
    """Translate an instance; raises CapExceeded on oversized tables."""
    emap = EncodingMap(instance)
    if kind.hall_limit is not None and kind.hall_limit > emap.d - 1:
        raise ValueError(
            f"hall_limit {kind.hall_limit} exceeds the largest proper interval width {emap.d - 1}"
        )
    rules: list = []
    if kind.name in ("direct", "support"):
        _encode_value_lane(instance, emap, kind, rules)
    elif kind.name == "range":
        _encode_range_lane(instance, emap, kind, rules)
    else:
        _encode_bound_lane(instance, emap, kind, rules)
    return Encoding(instance, kind, emap, GroundProgram(rules))


# -- direct / support ----------------------------------------------------------


def _encode_value_lane(instance, emap, kind, rules):
    support = kind.name == "support"
    for decl in instance.variables:
        name = decl.name
        vals = emap.values[name]
        atoms = [emap.e_atom(name, i) for i in vals]
        rules.append(ChoiceRule(tuple(atoms)))
        rules.append(IntegrityRule(tuple(neg(a) for a in atoms)))
        card = make_cardinality(2, tuple(pos(a) for a in atoms))
        if card is not None:
            rules.append(card)
    for c in instance.constraints:
        if c.kind in (ALLDIFFERENT, PERMUTATION):
            if support:
                _support_distinct(instance, emap, c, rules)
            else:
                _direct_distinct(emap, c, rules)
        else:
            _value_lane_table(instance, emap, c, rules, support)


def _direct_distinct(emap, c, rules):
    """Pairwise conflict rules over shared values."""
    for a, b in itertools.combinations(c.scope, 2):
        shared = sorted(set(emap.values[a]) & set(emap.values[b]))
        for i in shared:
            rules.append(IntegrityRule((pos(emap.e_atom(a, i)), pos(emap.e_atom(b, i)))))


def _support_distinct(instance, emap, c, rules):
    """Per-value at-most-one cardinality rules; permutations also demand
    every value be taken by someone."""
    memb = {v: set(emap.values[v]) for v in c.scope}
    union = sorted(set().union(*memb.values()))
    for i in union:
        lits = tuple(pos(emap.e_atom(v, i)) for v in c.scope if i in memb[v])
        card = make_cardinality(2, lits)
        if card is not None:
            rules.append(card)
    if c.kind == PERMUTATION:
        for i in union:
            lits = tuple(neg(emap.e_atom(v, i)) for v in c.scope if i in memb[v])
            rules.append(IntegrityRule(lits))


def _effective_tuples(emap, c):
    """The constraint's forbidden set, in internal coordinates.

    Allowed tables are complemented against the product of the initial
    domains (capped); forbidden tables are filtered to tuples that are
    actually assignable.
    """
    domains = [emap.values[v] for v in c.scope]
    membs = [set(dom) for dom in domains]
    internal = set()
    for t in c.tuples:
        it = tuple(emap.internal(x) for x in t)
        if all(x in memb for x, memb in zip(it, membs)):
            internal.add(it)
    if c.polarity == "forbidden":
        return sorted(internal)
    size = math.prod(len(d) for d in domains)
    if size > TABLE_COMPLEMENT_CAP:
        raise CapExceeded(
            f"complementing an allowed table needs {size} candidate tuples"
        )
    return sorted(t for t in itertools.product(*domains) if t not in internal)


def _value_lane_table(instance, emap, c, rules, support):
    arity = len(c.scope)
    if support and arity >= 2:
        _support_table_rules(emap, c, rules)
    if not support or arity != 2:
        # the direct form; for wide tables under support it also backs up
        # the pairwise support rules, which alone cannot reject every tuple
        for t in _effective_tuples(emap, c):
            rules.append(
                IntegrityRule(tuple(pos(emap.e_atom(v, x)) for v, x in zip(c.scope, t)))
            )


def _support_table_rules(emap, c, rules):
    domains = {v: emap.values[v] for v in c.scope}
    memb = {v: set(vals) for v, vals in domains.items()}
    if c.polarity == "allowed":
        allowed = set()
        for t in c.tuples:
            it = tuple(emap.internal(x) for x in t)
            if all(x in memb[v] for v, x in zip(c.scope, it)):
                allowed.add(it)
    else:
        size = math.prod(len(d) for d in domains.values())
        if size > TABLE_COMPLEMENT_CAP:
            raise CapExceeded(f"support analysis over {size} tuples exceeds the cap")
        forb = {tuple(emap.internal(x) for x in t) for t in c.tuples}
        allowed = {t for t in itertools.product(*(domains[v] for v in c.scope)) if t not in forb}
    for vi, v in enumerate(c.scope):
        for wi, w in enumerate(c.scope):
            if v == w:
                continue
            for i in domains[v]:
                supports = sorted({t[wi] for t in allowed if t[vi] == i})
                body = [pos(emap.e_atom(v, i))]
                body.extend(neg(emap.e_atom(w, j)) for j in supports)
                rules.append(IntegrityRule(tuple(body)))


# -- range ---------------------------------------------------------------------


def _encode_range_lane(instance, emap, kind, rules):
    d = emap.d
    for decl in instance.variables:
        name = decl.name
        r = emap.r_atom
        for l in range(1, d + 1):
            for u in range(l, d + 1):
                body = []
                if l >= 2:
                    body.append(neg(r(name, 1, l - 1)))
                if u <= d - 1:
                    body.append(neg(r(name, u + 1, d)))
                rules.append(NormalRule(r(name, l, u), tuple(body)))
        for l in range(2, d + 1):
            for u in range(l, d + 1):
                rules.append(IntegrityRule((pos(r(name, l, u)), neg(r(name, l - 1, u)))))
        for l in range(1, d + 1):
            for u in range(l, d):
                rules.append(IntegrityRule((pos(r(name, l, u)), neg(r(name, l, u + 1)))))
        _carve_initial_domain(emap, name, rules, use_bounds=False)
    for c in instance.constraints:
        if c.kind in (ALLDIFFERENT, PERMUTATION):
            _interval_count_rules(emap, kind, c, rules, lit_of=lambda v, l, u: pos(emap.r_atom(v, l, u)),
                                  dual_lit_of=lambda v, l, u: neg(emap.r_atom(v, l, u)))
        else:
            for box in _table_boxes(emap, c):
                rules.append(
                    IntegrityRule(
                        tuple(pos(emap.r_atom(v, l, u)) for v, (l, u) in zip(c.scope, box))
                    )
                )


def _carve_initial_domain(emap, name, rules, use_bounds):
    """Pin the initial domain: forbid the window edges and interior holes."""
    vals = emap.values[name]
    lo, hi = vals[0], vals[-1]
    d = emap.d
    declared = set(vals)
    if use_bounds:
        b = emap.b_atom
        rules.append(IntegrityRule((neg(b(name, hi)),)))
        if lo >= 2:
            rules.append(IntegrityRule((pos(b(name, lo - 1)),)))
        for i in range(lo + 1, hi):
            if i not in declared:
                rules.append(IntegrityRule((pos(b(name, i)), neg(b(name, i - 1)))))
    else:
        r = emap.r_atom
        if lo >= 2:
            rules.append(IntegrityRule((pos(r(name, 1, lo - 1)),)))
        if hi <= d - 1:
            rules.append(IntegrityRule((pos(r(name, hi + 1, d)),)))
        for i in range(lo + 1, hi):
            if i not in declared:
                rules.append(IntegrityRule((pos(r(name, i, i)),)))


def _interval_count_rules(emap, kind, c, rules, lit_of, dual_lit_of, collect=None):
    """Pigeonhole cardinality rules over intervals (the Hall-style rules).

    For every interval [l,u] (width-capped by hall_limit) at most u-l+1
    of the scope variables fit inside, so u-l+2 inside is a conflict.
    Permutations add the dual: every interval must absorb its share, so
    too many variables *outside* [l,u] is a conflict as well.
    """
    d = emap.d
    h = kind.hall_limit
    n = len(c.scope)
    union = set().union(*(emap.values[v] for v in c.scope))
    for l in range(1, d + 1):
        for u in range(l, d + 1):
            if h is not None and u - l + 1 > h:
                continue
            card = make_cardinality(u - l + 2, tuple(lit_of(v, l, u) for v in c.scope))
            if card is not None:
                rules.append(card)
                if collect is not None:
                    collect.update((v, l, u) for v in c.scope)
    if c.kind == PERMUTATION:
        for l in range(1, d + 1):
            for u in range(l, d + 1):
                if h is not None and u - l + 1 > h:
                    continue
                outside = n - len(union & set(range(l, u + 1)))
                card = make_cardinality(outside + 1, tuple(dual_lit_of(v, l, u) for v in c.scope))
                if card is not None:
                    rules.append(card)
                    if collect is not None:
                        collect.update((v, l, u) for v in c.scope)


# -- bound ---------------------------------------------------------------------


def _encode_bound_lane(instance, emap, kind, rules):
    d = emap.d
    for decl in instance.variables:
        name = decl.name
        b = emap.b_atom
        atoms = [b(name, i) for i in range(1, d + 1)]
        rules.append(ChoiceRule(tuple(atoms)))
        for i in range(1, d):
            rules.append(IntegrityRule((pos(b(name, i)), neg(b(name, i + 1)))))
        _carve_initial_domain(emap, name, rules, use_bounds=True)
    linked: set[tuple[str, int, int]] = set()
    for c in instance.constraints:
        if c.kind in (ALLDIFFERENT, PERMUTATION):
            _interval_count_rules(
                emap,
                kind,
                c,
                rules,
                lit_of=lambda v, l, u: pos(emap.r_atom(v, l, u)),
                dual_lit_of=lambda v, l, u: neg(emap.r_atom(v, l, u)),
                collect=linked,
            )
        else:
            for box in _table_boxes(emap, c):
                body = []
                for v, (l, u) in zip(c.scope, box):
                    body.append(pos(emap.b_atom(v, u)))
                    if l >= 2:
                        body.append(neg(emap.b_atom(v, l - 1)))
                rules.append(IntegrityRule(tuple(body)))
    # interval atoms exist only where the counting rules need them,
    # tied to the bound atoms by the link rules below
    for decl in instance.variables:
        name = decl.name
        ranges = sorted((l, u) for v, l, u in linked if v == name)
        for l, u in ranges:
            r = emap.r_atom(name, l, u)
            body = []
            if l >= 2:
                body.append(neg(emap.b_atom(name, l - 1)))
            body.append(pos(emap.b_atom(name, u)))
            rules.append(NormalRule(r, tuple(body)))
            if l >= 2:
                rules.append(IntegrityRule((pos(r), pos(emap.b_atom(name, l - 1)))))
            rules.append(IntegrityRule((pos(r), neg(emap.b_atom(name, u)))))


# -- table boxes -----------------------------------------------------------------


def _table_boxes(emap, c):
    """Maximal all-violating boxes of a table, in internal coordinates.

    A box assigns each scope variable an interval inside its initial
    hull; it is all-violating when no contained point satisfies the
    constraint (window points outside a variable's actual domain cannot
    be taken, so they count as violating).  Posting one conflict rule
    per *maximal* such box rejects every forbidden tuple while keeping
    the rule count small.
    """
    windows = [emap.window(v) for v in c.scope]
    sizes = [hi - lo + 1 for lo, hi in windows]
    if math.prod(s * s for s in sizes) > BOX_GRID_CAP:
        raise CapExceeded("table too large for box analysis")
    sat = np.zeros(sizes, dtype=bool)
    domains = [emap.values[v] for v in c.scope]
    if c.polarity == "allowed":
        membs = [set(dom) for dom in domains]
        for t in c.tuples:
            it = tuple(emap.internal(x) for x in t)
            if all(x in memb for x, memb in zip(it, membs)):
                sat[tuple(x - w[0] for x, w in zip(it, windows))] = True
    else:
        grids = [[x - w[0] for x in dom] for dom, w in zip(domains, windows)]
        sat[np.ix_(*grids)] = True
        for t in c.tuples:
            it = tuple(emap.internal(x) for x in t)
            if all(w[0] <= x <= w[1] for x, w in zip(it, windows)):
                sat[tuple(x - w[0] for x, w in zip(it, windows))] = False

    boxes = _maximal_empty_boxes(sat)
    out = []
    for row in boxes:
        out.append(
            tuple(
                (int(row[2 * k]) + windows[k][0], int(row[2 * k + 1]) + windows[k][0])
                for k in range(len(sizes))
            )
        )
    return out


def _maximal_empty_boxes(sat: np.ndarray) -> np.ndarray:
    """All maximal axis-aligned boxes containing no True cell.

    Returns rows (l1, u1, l2, u2, ...) of 0-based inclusive interval
    endpoints, in lexicographic order.
    """
    k = sat.ndim
    sizes = sat.shape
    padded = np.zeros(tuple(s + 1 for s in sizes), dtype=np.int32)
    inner = tuple(slice(1, None) for _ in range(k))
    padded[inner] = sat.astype(np.int32)
    for axis in range(k):
        np.cumsum(padded, axis=axis, out=padded)

    # counts[l1,u1,...,lk,uk] via inclusion-exclusion over the prefix sums
    counts = np.zeros(tuple(sizes[a // 2] for a in range(2 * k)), dtype=np.int32)
    for signs in itertools.product((0, 1), repeat=k):
        index = []
        for axis, s in enumerate(signs):
            if s:
                idx = np.arange(sizes[axis])  # l_axis
                shaped_axis = 2 * axis
            else:
                idx = np.arange(1, sizes[axis] + 1)  # u_axis + 1
                shaped_axis = 2 * axis + 1
            shape = [1] * (2 * k)
            shape[shaped_axis] = sizes[axis]
            index.append(idx.reshape(shape))
        term = padded[tuple(index)]
        if sum(signs) % 2 == 0:
            counts += term
        else:
            counts -= term

    empty = counts == 0
    # invalidate l > u slots
    for axis in range(k):
        l = np.arange(sizes[axis]).reshape(
            [sizes[axis] if a == 2 * axis else 1 for a in range(2 * k)]
        )
        u = np.arange(sizes[axis]).reshape(
            [sizes[axis] if a == 2 * axis + 1 else 1 for a in range(2 * k)]
        )
        empty &= l <= u

    maximal = empty.copy()
    for axis in range(k):
        # extending the box by one step in either direction must hit a True
        low = np.zeros_like(empty)
        src = tuple(
            slice(None) if a != 2 * axis else slice(None, -1) for a in range(2 * k)
        )
        dst = tuple(
            slice(None) if a != 2 * axis else slice(1, None) for a in range(2 * k)
        )
        low[dst] = empty[src]  # box with l_axis lowered by one is still empty
        maximal &= ~low
        high = np.zeros_like(empty)
        src = tuple(
            slice(None) if a != 2 * axis + 1 else slice(1, None) for a in range(2 * k)
        )
        dst = tuple(
            slice(None) if a != 2 * axis + 1 else slice(None, -1) for a in range(2 * k)
        )
        high[dst] = empty[src]  # box with u_axis raised by one is still empty
        maximal &= ~high
    return np.argwhere(maximal)


# -- seeds, readback, decoding ---------------------------------------------------


def seed_assignment(enc: Encoding, state: DomainState) -> list[SignedLiteral]:
    """Literals expressing a pruned domain state, ready for a fresh trail.

    Removal is relative to the instance's initial domains.  Variables
    with an empty current domain are rejected: express those as a
    conflict, not a seed.
    """
    validate_state(enc.instance, state)
    emap = enc.emap
    kind = enc.kind.name
    seeds: list[SignedLiteral] = []
    seen = set()

    def emit(lit):
        if lit not in seen:
            seen.add(lit)
            seeds.append(lit)

    for decl in enc.instance.variables:
        name = decl.name
        current = [emap.internal(v) for v in state.domains[name]]
        if not current:
            raise ValueError(f"variable {name} has an empty current domain")
        declared = emap.values[name]
        removed = [i for i in declared if i not in set(current)]
        if kind in ("direct", "support"):
            for i in removed:
                emit(SignedLiteral(emap.e_atom(name, i), False))
        elif kind == "range":
            for i in removed:
                emit(SignedLiteral(emap.r_atom(name, i, i), False))
            lo, hi = current[0], current[-1]
            if lo >= 2:
                emit(SignedLiteral(emap.r_atom(name, 1, lo - 1), False))
            if hi <= emap.d - 1:
                emit(SignedLiteral(emap.r_atom(name, hi + 1, emap.d), False))
        else:
            lo, hi = current[0], current[-1]
            if hi < declared[-1]:
                emit(SignedLiteral(emap.b_atom(name, hi), True))
            if lo > declared[0]:
                emit(SignedLiteral(emap.b_atom(name, lo - 1), False))
    return seeds


def pruned_domains(enc: Encoding, assignment) -> DomainState:
    """Read a (partial) assignment back as pruned initial domains."""
    emap = enc.emap
    kind = enc.kind.name
    removed: dict[str, set[int]] = {d.name: set() for d in enc.instance.variables}
    upper: dict[str, int] = {}
    lower: dict[str, int] = {}
    for lit in assignment:
        atom = lit.entity
        if not isinstance(atom, Atom):
            continue
        if kind in ("direct", "support") and atom.name == "e" and not lit.truth:
            name, i = atom.args
            removed[name].add(i)
        elif kind == "range" and atom.name == "r" and not lit.truth:
            name, l, u = atom.args
            if l == u:
                removed[name].add(l)
        elif kind == "bound" and atom.name == "b":
            name, i = atom.args
            if lit.truth:
                upper[name] = min(upper.get(name, i), i)
            else:
                lower[name] = max(lower.get(name, i), i)
    domains = {}
    for decl in enc.instance.variables:
        name = decl.name
        vals = emap.values[name]
        if kind == "bound":
            lo = lower.get(name, 0) + 1
            hi = upper.get(name, emap.d)
            keep = [i for i in vals if lo <= i <= hi]
        else:
            keep = [i for i in vals if i not in removed[name]]
        domains[name] = tuple(emap.original(i) for i in keep)
    return DomainState(domains)


def decode(enc: Encoding, assignment) -> dict[str, int]:
    """Extract the CSP solution from a total assignment.

    Raises ValueError when the assignment does not determine a single
    value for some variable -- that would mean the encoding is broken,
    so it fails loudly.
    """
    emap = enc.emap
    kind = enc.kind.name
    names = enc.instance.names()
    chosen: dict[str, list[int]] = {name: [] for name in names}
    if kind in ("direct", "support"):
        for lit in assignment:
            atom = lit.entity
            if isinstance(atom, Atom) and atom.name == "e" and lit.truth:
                chosen[atom.args[0]].append(atom.args[1])
    elif kind == "range":
        for lit in assignment:
            atom = lit.entity
            if isinstance(atom, Atom) and atom.name == "r" and lit.truth:
                name, l, u = atom.args
                if l == u:
                    chosen[name].append(l)
    else:
        best: dict[str, int] = {}
        for lit in assignment:
            atom = lit.entity
            if isinstance(atom, Atom) and atom.name == "b" and lit.truth:
                name, i = atom.args
                best[name] = min(best.get(name, emap.d), i)
        for name, i in best.items():
            chosen[name].append(i)
    solution = {}
    for name in names:
        picks = sorted(set(chosen[name]))
        if len(picks) != 1:
            raise ValueError(
                f"assignment determines {len(picks)} values for {name}; encoding bug"
            )
        solution[name] = emap.original(picks[0])
    return solution


class EncodingPropagator:
    """Unit propagation harness over an encoding's completion nogoods.

    The program is normalized and completed once; each propagate() call
    runs from a fresh trail so states can be replayed cheaply.
    """

    def __init__(self, enc: Encoding, method: str = "counter"):
        self.enc = enc
        self.store = completion_nogoods(normalize_cardinality(enc.program, method))

    def propagate(self, state: DomainState) -> DomainState | None:
        """UP fixpoint from the state's seed; None signals a conflict."""
        trail = Trail(self.store)
        for lit in seed_assignment(self.enc, state):
            idx = self.store.index_of(lit.entity)
            if idx is None:
                raise RuntimeError(f"seed literal over unknown atom {lit.entity!r}")
            code = 2 * idx + (0 if lit.truth else 1)
            if trail.falsified(code):
                return None
            if not trail.holds(code):
                trail.assign(code, None)
        if unit_propagate(self.store, trail) is not None:
            return None
        return pruned_domains(self.enc, trail.assignment())
