"""Nogood stores, trails, and two-watched unit propagation.

This layer is deliberately agnostic about what it assigns: entities are
arbitrary hashable objects (atoms, rule bodies, plain test strings).
The hot loops run on integer literal codes -- ``2*index`` for "entity is
true", ``2*index + 1`` for "entity is false" -- and never touch the
entity objects themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple

UNASSIGNED, TRUE, FALSE = 0, 1, 2


class SignedLiteral(NamedTuple):
    """``T entity`` or ``F entity``."""

    entity: Any
    truth: bool

    @property
    def complement(self) -> "SignedLiteral":
        return SignedLiteral(self.entity, not self.truth)

    def __str__(self) -> str:
        return ("T " if self.truth else "F ") + str(self.entity)


@dataclass(frozen=True, slots=True)
class BodyId:
    """Stand-in entity for a rule body; bodies are first-class here."""

    index: int

    def __repr__(self) -> str:
        return f"body#{self.index}"


class Nogood:
    """A list of literal codes; positions 0 and 1 are the watches."""

    __slots__ = ("lits", "learned", "activity", "deleted")

    def __init__(self, lits: list[int], learned: bool):
        self.lits = lits
        self.learned = learned
        self.activity = 0.0
        self.deleted = False

    def __repr__(self):  # debugging aid only
        return "Nogood(%r%s)" % (self.lits, ", learned" if self.learned else "")


class NogoodStore:
    """Nogoods over interned entities, two watched literals per nogood.

    Static nogoods are deduplicated structurally.  Learned nogoods are
    installed verbatim so the caller controls watch order (position 0
    should be the literal that is unit under the current assignment).
    """

    def __init__(self):
        self.entities: list[Any] = []
        self._index: dict[Any, int] = {}
        self.nogoods: list[Nogood] = []
        self.units: list[int] = []  # ids of size-1 nogoods, never watched
        self.watches: dict[int, list[int]] = {}
        self._static_keys: dict[tuple[int, ...], int] = {}
        self.n_static = 0

    # -- entities and codes ------------------------------------------------

    def intern(self, entity) -> int:
        idx = self._index.get(entity)
        if idx is None:
            idx = len(self.entities)
            self._index[entity] = idx
            self.entities.append(entity)
        return idx

    def index_of(self, entity) -> int | None:
        """Index of an already-interned entity, or None."""
        return self._index.get(entity)

    def code(self, lit: SignedLiteral) -> int:
        return 2 * self.intern(lit.entity) + (0 if lit.truth else 1)

    def literal(self, code: int) -> SignedLiteral:
        return SignedLiteral(self.entities[code >> 1], not (code & 1))

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    def __len__(self) -> int:
        return len(self.nogoods)

    # -- nogood installation -----------------------------------------------

    def add(self, literals: Iterable[SignedLiteral], *, learned: bool = False) -> int:
        """Intern a nogood given as signed literals; returns its id.

        Literals are deduplicated and sorted by code, which keeps the
        store deterministic no matter how callers ordered them.
        """
        codes = sorted({self.code(lit) for lit in literals})
        if learned:
            return self._install(codes, True)
        return self.add_static_codes(codes)

    def add_static_codes(self, codes) -> int:
        """Fast path for pre-sorted, deduplicated code lists."""
        key = tuple(codes)
        hit = self._static_keys.get(key)
        if hit is not None:
            return hit
        ng_id = self._install(list(codes), False)
        self._static_keys[key] = ng_id
        return ng_id

    def add_codes(self, codes: list[int], *, learned: bool = True) -> int:
        """Install a nogood from raw codes, preserving watch order."""
        return self._install(list(codes), learned)

    def _install(self, codes: list[int], learned: bool) -> int:
        if not codes:
            raise ValueError("empty nogood: the problem is trivially inconsistent")
        ng = Nogood(codes, learned)
        ng_id = len(self.nogoods)
        self.nogoods.append(ng)
        if len(codes) == 1:
            self.units.append(ng_id)
        else:
            self.watches.setdefault(codes[0], []).append(ng_id)
            self.watches.setdefault(codes[1], []).append(ng_id)
        if not learned:
            self.n_static += 1
        return ng_id

    def delete(self, ng_id: int) -> None:
        """Mark a learned nogood deleted; watch lists are cleaned lazily."""
        ng = self.nogoods[ng_id]
        if not ng.learned:
            raise ValueError("static nogoods are permanent")
        ng.deleted = True


class Trail:
    """Assignment sequence with decision levels and reasons.

    Backed by flat per-entity arrays so the propagation loop stays cheap.
    ``reason_of`` holds the nogood id that implied an entity, or None for
    decisions and externally seeded literals.
    """

    def __init__(self, store: NogoodStore):
        n = store.n_entities
        self.store = store
        self.values = bytearray(n)
        self.level_of = [0] * n
        self.reason_of: list[int | None] = [None] * n
        self.pos_of = [0] * n
        self.codes: list[int] = []
        self.level_starts = [0]  # codes offset where each level begins
        self.head = 0  # propagation queue position
        self.units_seen = 0  # prefix of store.units already applied

    def grow(self) -> None:
        """Extend the arrays after new entities were interned."""
        n = self.store.n_entities
        extra = n - len(self.values)
        if extra > 0:
            self.values.extend(b"\x00" * extra)
            self.level_of.extend([0] * extra)
            self.reason_of.extend([None] * extra)
            self.pos_of.extend([0] * extra)

    @property
    def level(self) -> int:
        return len(self.level_starts) - 1

    def holds(self, code: int) -> bool:
        return self.values[code >> 1] == 1 + (code & 1)

    def falsified(self, code: int) -> bool:
        return self.values[code >> 1] == 2 - (code & 1)

    def assign(self, code: int, reason: int | None) -> None:
        """Append a literal; the entity must be unassigned."""
        idx = code >> 1
        if self.values[idx]:
            raise ValueError(f"entity {self.store.entities[idx]!r} already assigned")
        self.values[idx] = 1 + (code & 1)
        self.level_of[idx] = len(self.level_starts) - 1
        self.reason_of[idx] = reason
        self.pos_of[idx] = len(self.codes)
        self.codes.append(code)

    def decide(self, code: int) -> None:
        self.level_starts.append(len(self.codes))
        self.assign(code, None)

    def backjump(self, level: int) -> list[int]:
        """Pop every assignment above ``level``; returns the popped codes."""
        cut = self.level_starts[level + 1] if level < self.level else len(self.codes)
        popped = self.codes[cut:]
        values = self.values
        for code in popped:
            values[code >> 1] = 0
        del self.codes[cut:]
        del self.level_starts[level + 1:]
        if self.head > cut:
            self.head = cut
        return popped

    def assignment(self) -> list[SignedLiteral]:
        """The current assignment as signed literals, in trail order."""
        literal = self.store.literal
        return [literal(c) for c in self.codes]


def unit_propagate(store: NogoodStore, trail: Trail) -> int | None:
    """Run two-watched unit propagation to fixpoint.

    Returns the id of a violated nogood, or None on success.  Implied
    literals are appended to the trail with their reason recorded.
    Pending unit nogoods are applied first whenever the trail is at the
    root level.
    """
    nogoods = store.nogoods
    values = trail.values
    codes = trail.codes
    watches = store.watches

    if trail.units_seen < len(store.units) and trail.level == 0:
        for ng_id in store.units[trail.units_seen:]:
            c = nogoods[ng_id].lits[0]
            v = values[c >> 1]
            if v == 0:
                trail.assign(c ^ 1, ng_id)
            elif v == 1 + (c & 1):
                return ng_id
        trail.units_seen = len(store.units)

    head = trail.head
    while head < len(codes):
        sigma = codes[head]
        head += 1
        wl = watches.get(sigma)
        if not wl:
            continue
        write = 0
        i = 0
        n_watchers = len(wl)
        while i < n_watchers:
            ng_id = wl[i]
            i += 1
            ng = nogoods[ng_id]
            if ng.deleted:
                continue
            lits = ng.lits
            other = lits[1] if lits[0] == sigma else lits[0]
            ov = values[other >> 1]
            if ov == 2 - (other & 1):
                # the other watch is falsified: nogood cannot fire
                wl[write] = ng_id
                write += 1
                continue
            moved = False
            for k in range(2, len(lits)):
                c = lits[k]
                if values[c >> 1] != 1 + (c & 1):
                    # c does not hold: watch it instead of sigma
                    if lits[0] == sigma:
                        lits[0] = c
                    else:
                        lits[1] = c
                    lits[k] = sigma
                    watches.setdefault(c, []).append(ng_id)
                    moved = True
                    break
            if moved:
                continue
            wl[write] = ng_id
            write += 1
            if ov == 0:
                trail.assign(other ^ 1, ng_id)
            else:
                # every literal holds: violation
                wl[write:] = wl[i:]
                trail.head = head
                return ng_id
        del wl[write:]
    trail.head = head
    return None


def add_nogood(store: NogoodStore, literals, trail: Trail) -> tuple[int, str]:
    """Install a nogood under a possibly advanced trail.

    Returns ``(nogood_id, status)`` where status is ``"conflict"`` (all
    literals hold), ``"unit"`` (one unassigned, the rest hold), or
    ``"ok"``.  The caller is responsible for acting on unit/conflict --
    typically by asserting the complement or starting conflict analysis.
    """
    codes = sorted({store.code(lit) for lit in literals})
    trail.grow()
    values = trail.values
    pos_of = trail.pos_of

    def watch_rank(c):
        # prefer non-holding literals as watches, then latest-assigned
        if values[c >> 1] != 1 + (c & 1):
            return (0, 0)
        return (1, -pos_of[c >> 1])

    codes.sort(key=watch_rank)
    ng_id = store.add_codes(codes, learned=True)

    unassigned = falsified = 0
    for c in codes:
        v = values[c >> 1]
        if v == 0:
            unassigned += 1
        elif v == 2 - (c & 1):
            falsified += 1
    if falsified:
        status = "ok"
    elif unassigned == 0:
        status = "conflict"
    elif unassigned == 1:
        status = "unit"
    else:
        status = "ok"
    return ng_id, status


def propagate_naive(nogoods, assignment) -> tuple[list[SignedLiteral], str]:
    """Reference fixpoint computation: repeated full scans, no watches.

    ``nogoods`` is a sequence of signed-literal collections, ``assignment``
    the initial literals.  Each round first checks for a violated nogood,
    then extends the assignment from the first unit nogood in sequence
    order, exactly as the textbook loop does.  Returns the extended
    assignment in derivation order plus ``"conflict"`` or ``"success"``.
    Kept deliberately naive as an independent oracle for the watched
    engine.
    """
    state: dict[Any, bool] = {}
    order: list[SignedLiteral] = []
    for lit in assignment:
        prev = state.get(lit.entity)
        if prev is None:
            state[lit.entity] = lit.truth
            order.append(lit)
        elif prev != lit.truth:
            raise ValueError("initial assignment contains a complementary pair")
    nogood_list = [tuple(ng) for ng in nogoods]

    while True:
        for ng in nogood_list:
            if all(state.get(l.entity) == l.truth for l in ng):
                return order, "conflict"
        derived = None
        for ng in nogood_list:
            free = None
            for lit in ng:
                t = state.get(lit.entity)
                if t is None:
                    if free is not None:
                        free = None
                        break
                    free = lit
                elif t != lit.truth:
                    free = None
                    break
            if free is not None:
                derived = free.complement
                break
        if derived is None:
            return order, "success"
        state[derived.entity] = derived.truth
        order.append(derived)


def dump_nogoods(store: NogoodStore) -> str:
    """Text dump: one nogood per line, literals in code order."""
    lines = []
    for ng in store.nogoods:
        if ng.deleted:
            continue
        lines.append(", ".join(str(store.literal(c)) for c in sorted(ng.lits)))
    return "\n".join(lines) + ("\n" if lines else "")
