"""Shared helpers for the test suite."""

from __future__ import annotations

import itertools
import random

from cspasp import (
    Atom,
    ChoiceRule,
    GroundProgram,
    IntegrityRule,
    Lit,
    NormalRule,
    SignedLiteral,
    completion_nogoods,
    enumerate_models,
)


def true_atoms(model) -> frozenset:
    """Project a solver model (signed-literal list) onto its true atoms."""
    return frozenset(lit.entity for lit in model if lit.truth and isinstance(lit.entity, Atom))


def store_answer_sets(program) -> set[frozenset]:
    """All answer sets of a (cardinality-free) program via the solver."""
    store = completion_nogoods(program)
    models, _, status = enumerate_models(store)
    assert status == "UNSAT", "enumeration must exhaust the space"
    return {true_atoms(m) for m in models}


def random_tight_program(rng: random.Random, n_atoms: int = 5) -> GroundProgram:
    """A random tight program over a0..a{n-1}.

    Tightness is forced by only allowing positive body atoms with a
    strictly smaller index than the head.
    """
    atoms = [Atom("a", (i,)) for i in range(n_atoms)]
    rules = []
    if rng.random() < 0.8:
        heads = rng.sample(atoms, rng.randint(1, n_atoms))
        rules.append(ChoiceRule(tuple(heads)))
    for _ in range(rng.randint(1, 6)):
        shape = rng.random()
        if shape < 0.6:
            head_idx = rng.randrange(n_atoms)
            body = []
            for b_idx in rng.sample(range(n_atoms), rng.randint(0, min(3, n_atoms))):
                if b_idx < head_idx:
                    body.append(Lit(atoms[b_idx], rng.random() < 0.6))
                elif b_idx != head_idx:
                    body.append(Lit(atoms[b_idx], False))
            try:
                rules.append(NormalRule(atoms[head_idx], tuple(body)))
            except ValueError:
                pass  # head in its own negative body; skip this draw
        else:
            chosen = rng.sample(atoms, rng.randint(1, min(3, n_atoms)))
            body = tuple(Lit(a, rng.random() < 0.5) for a in chosen)
            rules.append(IntegrityRule(body))
    return GroundProgram(tuple(rules))


def all_subsets(atoms):
    for r in range(len(atoms) + 1):
        yield from (frozenset(c) for c in itertools.combinations(atoms, r))


def sl(entity, truth: bool) -> SignedLiteral:
    return SignedLiteral(entity, truth)
