"""Conflict-driven search: restarts, learning, enumeration, budgets."""

import random

import pytest

from cspasp.benchmarks import gen_php
from cspasp.encoder import EncodingKind, encode
from cspasp.program import (
    Atom,
    ChoiceRule,
    GroundProgram,
    IntegrityRule,
    Lit,
    NormalRule,
    completion_nogoods,
    normalize_cardinality,
)
from cspasp.propagation import NogoodStore
from cspasp.solver import (
    SAT,
    UNKNOWN,
    UNSAT,
    SolverConfig,
    Stats,
    enumerate_models,
    luby,
    solve,
)

from .helpers import random_tight_program, sl, true_atoms

a, b = Atom("a"), Atom("b")


def php_store(n, kind="support", hall_limit=None):
    enc = encode(gen_php(n), EncodingKind(kind, hall_limit))
    return completion_nogoods(normalize_cardinality(enc.program))


# -- restart schedule ---------------------------------------------------------------


def test_luby_prefix():
    assert [luby(i) for i in range(1, 16)] == [
        1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8,
    ]


def test_luby_against_recursive_definition():
    def reference(i):
        k = 1
        while (1 << k) - 1 < i:
            k += 1
        if (1 << k) - 1 == i:
            return 1 << (k - 1)
        return reference(i - (1 << (k - 1)) + 1)

    assert [luby(i) for i in range(1, 300)] == [reference(i) for i in range(1, 300)]


# -- configuration ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(heuristic="random")
    with pytest.raises(ValueError):
        SolverConfig(activity_decay=0.0)
    with pytest.raises(ValueError):
        SolverConfig(luby_unit=0)


def test_stats_text_layout():
    text = Stats(decisions=3, conflicts=1, propagations=9, time_ms=5).as_text()
    assert text == (
        "decisions=3 conflicts=1 propagations=9 restarts=0 learned=0 time_ms=5"
    )


# -- plain solving ------------------------------------------------------------------


def test_empty_store_is_satisfiable():
    res = solve(NogoodStore())
    assert res.status == SAT and res.assignment == []


def test_unit_nogoods_force_values():
    store = NogoodStore()
    store.add([sl("a", True)])  # forbidding T a forces a false
    res = solve(store)
    assert res.status == SAT
    assert res.assignment == [sl("a", False)]
    assert res.stats.decisions == 0


def test_contradictory_units_are_unsatisfiable():
    store = NogoodStore()
    store.add([sl("a", True)])
    store.add([sl("a", False)])
    assert solve(store).status == UNSAT


def test_program_with_self_blocking_fact_is_unsat():
    program = GroundProgram((NormalRule(a, ()), IntegrityRule((Lit(a, True),))))
    assert solve(completion_nogoods(program)).status == UNSAT


def test_forced_atom_round_trip():
    program = GroundProgram((ChoiceRule((a,)), IntegrityRule((Lit(a, False),))))
    res = solve(completion_nogoods(program))
    assert res.status == SAT
    assert true_atoms(res.assignment) == {a}


@pytest.mark.parametrize("heuristic", ["activity", "lexicographic"])
@pytest.mark.parametrize("phase", [False, True])
def test_status_is_config_independent(heuristic, phase):
    rng = random.Random(f"cfg:{heuristic}:{phase}")
    cfg = SolverConfig(heuristic=heuristic, default_phase=phase)
    for _ in range(40):
        program = random_tight_program(rng)
        store = completion_nogoods(program)
        res = solve(store, cfg)
        baseline = solve(completion_nogoods(program))
        assert res.status == baseline.status


def test_runs_are_deterministic():
    first = solve(php_store(5))
    second = solve(php_store(5))
    assert first.status == second.status == UNSAT
    for name in ("decisions", "conflicts", "propagations", "restarts", "learned"):
        assert getattr(first.stats, name) == getattr(second.stats, name)


# -- pigeonhole behaviour ------------------------------------------------------------


def test_interval_forms_refute_pigeonhole_without_deciding():
    for kind in ("bound", "range"):
        res = solve(php_store(6, kind))
        assert res.status == UNSAT
        assert res.stats.decisions == 0, kind


def test_support_form_needs_search_on_pigeonhole():
    res = solve(php_store(4))
    assert res.status == UNSAT
    assert res.stats.decisions >= 1
    assert res.stats.conflicts >= 1


def test_hall_cap_restores_search_on_pigeonhole():
    res = solve(php_store(6, "range", hall_limit=3))  # caps below n-1 = 5
    assert res.status == UNSAT
    assert res.stats.decisions >= 1


# -- conflict analysis ---------------------------------------------------------------


def test_learned_nogoods_are_asserting():
    """Each learned nogood is violated at conflict time, with a single
    literal from the conflict level first, and becomes unit after the
    reported backjump."""
    records = []

    def hook(store, trail, conflict_id, learned, jump):
        level = trail.level
        # the conflicting nogood really is violated
        assert all(trail.holds(c) for c in store.nogoods[conflict_id].lits)
        # every learned literal holds right now
        assert all(trail.holds(c) for c in learned)
        # exactly one literal from the conflict level, placed first
        levels = [trail.level_of[c >> 1] for c in learned]
        assert levels[0] == level
        assert all(lvl < level for lvl in levels[1:])
        assert jump == (max(levels[1:]) if levels[1:] else 0)
        records.append(len(learned))

    res = solve(php_store(5), SolverConfig(learn_hook=hook))
    assert res.status == UNSAT
    assert records, "expected at least one learned nogood"


def test_learned_nogoods_only_shrink_the_search():
    plain = solve(php_store(5))
    assert plain.stats.learned >= 1
    assert plain.stats.conflicts >= plain.stats.learned


# -- budgets -------------------------------------------------------------------------


def test_conflict_budget_reports_unknown():
    res = solve(php_store(7), SolverConfig(max_conflicts=1))
    assert res.status == UNKNOWN
    assert res.assignment is None


def test_time_budget_reports_unknown():
    res = solve(php_store(7), SolverConfig(timeout_s=0.0))
    assert res.status == UNKNOWN


# -- enumeration ---------------------------------------------------------------------


def as_set(models):
    return {frozenset(m) for m in models}


def test_enumerates_all_models_of_a_free_choice():
    program = GroundProgram((ChoiceRule((a, b)),))
    models, stats, status = enumerate_models(completion_nogoods(program))
    assert status == UNSAT  # the space was exhausted
    assert len(models) == 4
    assert {frozenset(true_atoms(m)) for m in models} == {
        frozenset(), frozenset({a}), frozenset({b}), frozenset({a, b}),
    }


def test_enumeration_limit_stops_early():
    program = GroundProgram((ChoiceRule((a, b)),))
    models, _, status = enumerate_models(completion_nogoods(program), limit=2)
    assert status == SAT and len(models) == 2
    assert len(as_set(models)) == 2


def test_enumeration_handles_decision_free_models():
    program = GroundProgram((NormalRule(a, ()),))
    models, stats, status = enumerate_models(completion_nogoods(program))
    assert status == UNSAT and len(models) == 1
    assert stats.decisions == 0


def test_enumeration_of_unsatisfiable_store():
    models, _, status = enumerate_models(php_store(4))
    assert (models, status) == ([], UNSAT)


def test_enumeration_is_deterministic_and_duplicate_free():
    rng = random.Random(77)
    for _ in range(30):
        program = random_tight_program(rng)
        store1 = completion_nogoods(program)
        store2 = completion_nogoods(program)
        m1, _, s1 = enumerate_models(store1)
        m2, _, s2 = enumerate_models(store2)
        assert s1 == s2 == UNSAT
        assert m1 == m2
        assert len(as_set(m1)) == len(m1)


def test_enumeration_respects_budgets():
    models, _, status = enumerate_models(
        php_store(7), SolverConfig(max_conflicts=1)
    )
    assert status == UNKNOWN and models == []
