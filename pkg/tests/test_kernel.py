import itertools
import math
from collections import Counter

import numpy as np
import pytest

from cyclekernel.cycleloss import LossConfig, pure_loss
from cyclekernel.errors import NotAutomorphism, NotExactSolution, TooLarge
from cyclekernel.kernel import (Solution, act, automorphism_group_order, enumerate_automorphisms,
                                enumerate_isomorphisms, format_orbit_summary, is_exact_solution, mass_classes,
                                transporter, verify_free_transitive)
from cyclekernel.maps import compose, tabular_from_table, tabular_map
from cyclekernel.probspace import make_finite


def space(masses, prefix='x'):
    return make_finite([f'{prefix}{i}' for i in range(len(masses))], masses)


def uniform(k):
    return [1.0 / k] * k


# a fixed suite of mass partitions with at most 6 atoms
PARTITIONS = [
    *[uniform(k) for k in range(1, 7)],
    [0.5, 0.3, 0.2], [0.4, 0.4, 0.2], [0.5, 0.5], [0.7, 0.3], [0.6, 0.2, 0.2],
    [0.25, 0.25, 0.5], [0.1, 0.2, 0.3, 0.4], [0.25, 0.25, 0.25, 0.25], [0.3, 0.3, 0.2, 0.2],
    [0.4, 0.2, 0.2, 0.2], [0.1, 0.1, 0.4, 0.4], [0.2, 0.2, 0.2, 0.2, 0.2], [0.3, 0.1, 0.2, 0.1, 0.3],
    [0.4, 0.15, 0.15, 0.15, 0.15], [0.05, 0.15, 0.2, 0.25, 0.35], [0.2, 0.2, 0.2, 0.1, 0.1, 0.2],
    [0.3, 0.3, 0.1, 0.1, 0.1, 0.1], [0.25, 0.25, 0.125, 0.125, 0.125, 0.125],
    [0.05, 0.1, 0.15, 0.2, 0.25, 0.25], [0.5, 0.1, 0.1, 0.1, 0.1, 0.1], [0.3, 0.2, 0.2, 0.1, 0.1, 0.1],
    [0.35, 0.35, 0.1, 0.1, 0.05, 0.05], [0.4, 0.3, 0.2, 0.1], [0.6, 0.4],
]


def expected_order(masses):
    counts = Counter(round(m, 12) for m in masses)
    return math.prod(math.factorial(c) for c in counts.values())


# catalogues small enough to check the action law over every pair of automorphisms
SMALL_GROUPS = list(dict.fromkeys(tuple(p) for p in PARTITIONS if expected_order(p) <= 24))
THREE_ATOMS = [p for p in SMALL_GROUPS if len(p) <= 3]


def catalogue(masses):
    X = space(masses)
    Y = space(masses[::-1], prefix='y')
    return X, Y, enumerate_automorphisms(X), enumerate_isomorphisms(X, Y)


def all_maps(domain, codomain):
    for table in itertools.product(range(len(codomain)), repeat=len(domain)):
        yield tabular_from_table(domain, codomain, np.array(table))


def test_suite_has_thirty_partitions():
    assert len(PARTITIONS) == 30
    assert all(sum(p) == pytest.approx(1.0) for p in PARTITIONS)


@pytest.mark.parametrize('masses', PARTITIONS, ids=str)
def test_action_is_free_and_transitive(masses):
    X = space(masses)
    # Y carries the same masses in another order and under other labels
    Y = space(masses[::-1], prefix='y')
    report = verify_free_transitive(X, Y)
    assert report.free and report.transitive
    assert report.group_size == expected_order(masses)
    assert report.expected_group_size == report.group_size
    assert report.closure_order == report.group_size
    assert len(report.catalogue.isomorphisms) == report.group_size
    assert report.verdict


@pytest.mark.parametrize('masses', PARTITIONS[6:12], ids=str)
def test_unmatched_masses_give_empty_kernel(masses):
    X = space(masses)
    Y = space(uniform(len(masses)) if len(set(masses)) > 1 else [0.9] + [0.1 / (len(masses) - 1)] * (len(masses) - 1))
    report = verify_free_transitive(X, Y)
    assert report.iso_empty
    assert report.catalogue.isomorphisms == []
    assert report.verdict


def test_uniform3_catalogue(uniform3, uniform3_y):
    report = verify_free_transitive(uniform3, uniform3_y)
    assert report.group_size == 6
    assert report.orbit_size == 6
    assert report.catalogue.action_table.shape == (6, 6)
    # each row of the action table is a permutation of the solutions
    for row in report.catalogue.action_table:
        assert sorted(row.tolist()) == list(range(6))
    assert 'verdict: PASS' in format_orbit_summary(report)


def test_mismatch_has_empty_kernel():
    X = make_finite(['a', 'b', 'c'], [0.5, 0.3, 0.2])
    Y = make_finite(['u', 'v', 'w'], [0.4, 0.4, 0.2])
    report = verify_free_transitive(X, Y)
    assert report.iso_empty
    assert report.group_size == 1
    assert 'empty' in format_orbit_summary(report)


def test_different_sizes_have_no_isomorphisms():
    assert enumerate_isomorphisms(space([0.5, 0.5]), space(uniform(3))) == []


def test_identity_comes_first(uniform3):
    autos = enumerate_automorphisms(uniform3)
    assert autos[0].is_identity
    assert autos[0].name == 'id'
    assert len({tuple(a.table) for a in autos}) == 6


def test_mass_classes_cluster_within_tolerance():
    classes = mass_classes([0.25, 0.25 + 1e-12, 0.5])
    assert classes[0] == classes[1] != classes[2]
    assert automorphism_group_order(make_finite('abc', [0.25, 0.25, 0.5])) == 2


def test_too_large():
    with pytest.raises(TooLarge):
        enumerate_automorphisms(space(uniform(10)))


def test_twisted_solutions_keep_zero_loss(uniform3, uniform3_y):
    config = LossConfig()
    solutions = enumerate_isomorphisms(uniform3, uniform3_y)
    for phi in enumerate_automorphisms(uniform3):
        for sol in solutions:
            moved = act(phi, sol)
            assert pure_loss(moved.G, moved.F, uniform3, uniform3_y, config).total_pure == pytest.approx(0.0, abs=1e-12)
            assert is_exact_solution(moved.G, moved.F, uniform3, uniform3_y)
            assert (moved == sol) == phi.is_identity


def test_action_composes(uniform3, uniform3_y):
    autos = enumerate_automorphisms(uniform3)
    sol = enumerate_isomorphisms(uniform3, uniform3_y)[0]
    phi, psi = autos[1], autos[4]
    assert act(phi, act(psi, sol)) == act(compose(phi, psi), sol)


def test_transporter_carries_solutions(uniform3, uniform3_y):
    solutions = enumerate_isomorphisms(uniform3, uniform3_y)
    for s1 in solutions:
        for s2 in solutions:
            phi = transporter(s1, s2)
            assert act(phi, s1) == s2
            assert phi.is_identity == (s1 == s2)


def test_transporter_rejects_non_solutions(uniform3, uniform3_y):
    sol = enumerate_isomorphisms(uniform3, uniform3_y)[0]
    G = tabular_map(uniform3, uniform3_y, {'a': 'u', 'b': 'u', 'c': 'v'})
    F = tabular_map(uniform3_y, uniform3, {'u': 'a', 'v': 'b', 'w': 'c'})
    with pytest.raises(NotExactSolution):
        transporter(Solution(G, F), sol)


def test_act_rejects_mass_moving_permutation(skewed):
    Y = make_finite(['u', 'v', 'w'], [0.5, 0.3, 0.2])
    sol = enumerate_isomorphisms(skewed, Y)[0]
    phi = tabular_map(skewed, skewed, {'a': 'b', 'b': 'a', 'c': 'c'})
    with pytest.raises(NotAutomorphism):
        act(phi, sol)


def test_solutions_compare_by_tables(uniform3, uniform3_y):
    a = enumerate_isomorphisms(uniform3, uniform3_y)
    b = enumerate_isomorphisms(uniform3, uniform3_y)
    assert a == b
    assert len(set(a)) == 6
    assert np.array_equal(a[0].G.table, [0, 1, 2])


# -----------------------------------------------------------------------------
# exhaustive checks on small catalogues

def test_small_groups_cover_uniform4():
    assert (0.25, 0.25, 0.25, 0.25) in SMALL_GROUPS
    assert len(THREE_ATOMS) >= 5


@pytest.mark.parametrize('masses', SMALL_GROUPS, ids=str)
def test_action_law_on_every_pair(masses):
    _, _, autos, solutions = catalogue(masses)
    for phi in autos:
        for psi in autos:
            both = compose(phi, psi)
            for sol in solutions:
                assert act(both, sol) == act(phi, act(psi, sol))


@pytest.mark.parametrize('masses', SMALL_GROUPS, ids=str)
def test_transporter_recovers_the_automorphism(masses):
    _, _, autos, solutions = catalogue(masses)
    for phi in autos:
        for sol in solutions:
            assert np.array_equal(transporter(sol, act(phi, sol)).table, phi.table)


@pytest.mark.parametrize('masses', SMALL_GROUPS, ids=str)
def test_every_twist_keeps_zero_loss(masses):
    X, Y, autos, solutions = catalogue(masses)
    config = LossConfig()
    for phi in autos:
        for sol in solutions:
            moved = act(phi, sol)
            assert pure_loss(moved.G, moved.F, X, Y, config).total_pure == pytest.approx(0.0, abs=1e-12)
            assert is_exact_solution(moved.G, moved.F, X, Y)


@pytest.mark.parametrize('masses', THREE_ATOMS, ids=str)
def test_zero_loss_exactly_at_exact_solutions(masses):
    X, Y, _, solutions = catalogue(masses)
    config = LossConfig()
    zero = set()
    for G in all_maps(X, Y):
        for F in all_maps(Y, X):
            loss = pure_loss(G, F, X, Y, config).total_pure
            exact = is_exact_solution(G, F, X, Y)
            assert (loss <= 1e-12) == exact, (G.assignment, F.assignment, loss)
            if exact:
                zero.add(Solution(G, F))
    assert zero == set(solutions)
