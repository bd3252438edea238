"""
The exact kernel of the pure loss on finite spaces.

Iso(X, Y) is the set of mass-preserving bijections G: X -> Y paired with
F = G^-1, i.e. the pairs with zero pure loss. Aut(X) acts on it on the right,
(G, F) -> (G . phi, phi^-1 . F), and the action is free and transitive
whenever Iso(X, Y) is nonempty. Everything here is exhaustive enumeration,
so spaces are capped at MAX_ATOMS atoms.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sympy.combinatorics import Permutation, PermutationGroup

from .errors import NotAutomorphism, NotExactSolution, TooLarge
from .maps import tabular_from_table, compose, is_measure_preserving, pushforward

MAX_ATOMS = 9
MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Solution:
    G: object # MeasurableMap X -> Y
    F: object # MeasurableMap Y -> X

    @property
    def key(self):
        return tuple(int(i) for i in self.G.table)

    def __eq__(self, other):
        return (isinstance(other, Solution)
                and np.array_equal(self.G.table, other.G.table)
                and np.array_equal(self.F.table, other.F.table))

    def __hash__(self):
        return hash(self.key)


def mass_classes(masses, mass_tol=MASS_TOL):
    """
    Class id per atom: masses are sorted and consecutive masses within
    mass_tol share a class.
    """
    masses = np.asarray(masses, dtype=np.float64)
    order = np.argsort(masses, kind='stable')
    classes = np.empty(len(masses), dtype=np.int64)
    current = 0
    for rank, i in enumerate(order):
        if rank > 0 and masses[i] - masses[order[rank - 1]] > mass_tol:
            current += 1
        classes[i] = current
    return classes


def _check_size(*spaces):
    for space in spaces:
        if len(space) > MAX_ATOMS:
            raise TooLarge(f"exhaustive enumeration is capped at {MAX_ATOMS} atoms, got {len(space)}")


def _bijections(allowed):
    """Backtracking over bijections i -> allowed[i], in lexicographic order of the table."""
    n = len(allowed)
    used = [False] * n
    table = [0] * n

    def extend(i):
        if i == n:
            yield tuple(table)
            return
        for j in allowed[i]:
            if not used[j]:
                used[j] = True
                table[i] = j
                yield from extend(i + 1)
                used[j] = False

    yield from extend(0)


def _compatible(source_classes, target_classes):
    return [[j for j, c in enumerate(target_classes) if c == ci] for ci in source_classes]


def enumerate_automorphisms(X, mass_tol=MASS_TOL):
    """All mass-preserving self-bijections of X; the identity comes first."""
    _check_size(X)
    classes = mass_classes(X.masses, mass_tol)
    return [tabular_from_table(X, X, table, name=_perm_name(table))
            for table in _bijections(_compatible(classes, classes))]


def enumerate_isomorphisms(X, Y, mass_tol=MASS_TOL):
    """All exact solutions (G, G^-1), sorted by G's assignment."""
    _check_size(X, Y)
    if len(X) != len(Y):
        return []
    classes = mass_classes(np.concatenate([X.masses, Y.masses]), mass_tol)
    solutions = []
    for table in _bijections(_compatible(classes[:len(X)], classes[len(X):])):
        G = tabular_from_table(X, Y, table, name='G')
        solutions.append(Solution(G, G.inverse))
    return solutions


def automorphism_group_order(X, mass_tol=MASS_TOL):
    """prod_k m_k! over the mass classes of X."""
    _, counts = np.unique(mass_classes(X.masses, mass_tol), return_counts=True)
    return math.prod(math.factorial(int(c)) for c in counts)


def _perm_name(table):
    cycles = Permutation(list(table)).cyclic_form
    return 'id' if not cycles else ''.join(str(tuple(c)).replace(' ', '') for c in cycles)


def is_exact_solution(G, F, X, Y, mass_tol=MASS_TOL):
    """G is a mass-preserving bijection X -> Y and F = G^-1."""
    if not (G.is_tabular and F.is_tabular and G.has_inverse):
        return False
    if G.domain.labels != X.labels or G.codomain.labels != Y.labels or F.domain.labels != Y.labels:
        return False
    pushed = pushforward(G, X)
    if np.max(np.abs(pushed.masses - Y.masses), initial=0.0) > mass_tol:
        return False
    return np.array_equal(F.table, G.inverse.table)


def _check_automorphism(phi, X, mass_tol):
    if not (phi.is_tabular and phi.has_inverse and phi.domain.labels == X.labels
            and phi.codomain.labels == X.labels):
        raise NotAutomorphism(f"{phi.name} is not a bijection of {X.labels}")
    report = is_measure_preserving(phi, X, 'TV', mass_tol)
    if not report.verdict:
        raise NotAutomorphism(f"{phi.name} moves mass: TV(phi_* X, X) = {report.discrepancy:.3e}")


def act(phi, solution, mass_tol=MASS_TOL):
    """(G, F) -> (G . phi, phi^-1 . F)."""
    _check_automorphism(phi, solution.G.domain, mass_tol)
    return Solution(compose(phi, solution.G), compose(solution.F, phi.inverse))


def transporter(sol1, sol2, mass_tol=MASS_TOL):
    """The automorphism phi = F1 . G2 with act(phi, sol1) == sol2."""
    for sol in (sol1, sol2):
        if not is_exact_solution(sol.G, sol.F, sol.G.domain, sol.G.codomain, mass_tol):
            raise NotExactSolution(f"{sol.G.name} with its partner is not an exact solution")
    if sol1.G.domain.labels != sol2.G.domain.labels or sol1.G.codomain.labels != sol2.G.codomain.labels:
        raise NotExactSolution("solutions live on different spaces")
    phi = compose(sol2.G, sol1.F)
    assert act(phi, sol1, mass_tol) == sol2, "transporter does not carry sol1 to sol2"
    return phi


# -----------------------------------------------------------------------------
# catalogue

def _encode(tables, n):
    """Integer code per table row, so rows can be looked up with searchsorted."""
    return np.asarray(tables, dtype=np.int64) @ (n ** np.arange(n, dtype=np.int64))


@dataclass
class KernelCatalogue:
    isomorphisms: list
    automorphisms: list
    action_table: np.ndarray # [automorphism, solution] -> index of act(phi, solution)

    def to_dict(self):
        return {
            'solutions': [{'G': {str(k): v for k, v in s.G.assignment.items()},
                           'F': {str(k): v for k, v in s.F.assignment.items()}} for s in self.isomorphisms],
            'automorphisms': [{str(k): v for k, v in phi.assignment.items()} for phi in self.automorphisms],
            'action_table': self.action_table.tolist(),
        }


@dataclass
class KernelReport:
    catalogue: KernelCatalogue
    free: bool
    transitive: bool
    orbit_size: int
    group_size: int
    iso_empty: bool
    expected_group_size: int # prod_k m_k!
    closure_order: int # order of the permutation group the automorphisms generate
    labels: tuple = field(default=())

    @property
    def verdict(self):
        return self.free and self.transitive and (self.iso_empty or self.orbit_size == self.group_size)

    def to_dict(self):
        return {'free': self.free, 'transitive': self.transitive, 'orbit_size': self.orbit_size,
                'group_size': self.group_size, 'iso_size': len(self.catalogue.isomorphisms),
                'iso_empty': self.iso_empty, 'expected_group_size': self.expected_group_size,
                'closure_order': self.closure_order, 'verdict': self.verdict,
                'catalogue': self.catalogue.to_dict()}


def build_action_table(automorphisms, solutions):
    """
    action_table[a, s] = index of act(automorphisms[a], solutions[s]). Computed
    on assignment tables: G . phi has table G[phi].
    """
    if not solutions:
        return np.zeros((len(automorphisms), 0), dtype=np.int64)
    n = len(solutions[0].G.table)
    g_tables = np.stack([s.G.table for s in solutions])
    codes = _encode(g_tables, n)
    order = np.argsort(codes)
    table = np.empty((len(automorphisms), len(solutions)), dtype=np.int64)
    for a, phi in enumerate(automorphisms):
        moved = _encode(g_tables[:, phi.table], n)
        pos = np.searchsorted(codes, moved, sorter=order)
        idx = order[np.minimum(pos, len(order) - 1)]
        assert np.array_equal(codes[idx], moved), f"{phi.name} does not act on the solution set"
        table[a] = idx
    return table


def verify_free_transitive(X, Y, mass_tol=MASS_TOL):
    automorphisms = enumerate_automorphisms(X, mass_tol)
    solutions = enumerate_isomorphisms(X, Y, mass_tol)
    action_table = build_action_table(automorphisms, solutions)
    catalogue = KernelCatalogue(solutions, automorphisms, action_table)

    group = PermutationGroup([Permutation([int(i) for i in phi.table]) for phi in automorphisms])
    closure_order = int(group.order())
    expected = automorphism_group_order(X, mass_tol)

    if not solutions:
        return KernelReport(catalogue, True, True, 0, len(automorphisms), True, expected, closure_order,
                            X.labels)
    identity_rows = [a for a, phi in enumerate(automorphisms) if phi.is_identity]
    free = all(not np.any(action_table[a] == np.arange(len(solutions)))
               for a in range(len(automorphisms)) if a not in identity_rows)
    orbit = set(action_table[:, 0].tolist())
    return KernelReport(catalogue, free, len(orbit) == len(solutions), len(orbit), len(automorphisms),
                        False, expected, closure_order, X.labels)


def format_orbit_summary(report):
    lines = [f"automorphisms: {report.group_size} (expected {report.expected_group_size}, "
             f"closure {report.closure_order})",
             f"exact solutions: {len(report.catalogue.isomorphisms)}"]
    if report.iso_empty:
        lines.append("Iso(X, Y) is empty; the action is vacuously free and transitive")
    else:
        lines.append(f"orbit of solution 0: {report.orbit_size}")
        lines.append(f"free: {report.free}, transitive: {report.transitive}")
        for phi, row in zip(report.catalogue.automorphisms, report.catalogue.action_table):
            lines.append(f"  {phi.name:>16}: {' '.join(str(i) for i in row)}")
    lines.append(f"verdict: {'PASS' if report.verdict else 'FAIL'}")
    return '\n'.join(lines)
