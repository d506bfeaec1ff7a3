"""Propositional satisfiability with assumption tracking.

A complete DPLL procedure (unit propagation, pure-literal elimination,
deterministic branching: ascending atom index, true first) over clause sets
whose health assumptions are kept retractable. On unsatisfiability the
solver reports a deletion-minimized core over the assumptions; on top of
that sit the enumeration of all minimal conflicts and minimal hitting sets,
the two halves of consistency-based fault localization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations


class EncodingError(ValueError):
    pass


class ClauseSet:
    """Indexed atoms, hard clauses and retractable assumption literals.

    Literals are non-zero ints: +(index+1) for a positive atom, negative for
    its negation.
    """

    def __init__(self):
        self.atoms: list[str] = []
        self.index: dict[str, int] = {}
        self.clauses: list[tuple[int, ...]] = []
        self.assumptions: list[int] = []

    def atom(self, name: str) -> int:
        """Index of the named atom, registering it if new."""
        if name not in self.index:
            self.index[name] = len(self.atoms)
            self.atoms.append(name)
        return self.index[name]

    def literal(self, name: str, positive: bool = True) -> int:
        idx = self.atom(name) + 1
        return idx if positive else -idx

    def add_clause(self, literals) -> None:
        lits = tuple(literals)
        if not lits:
            raise EncodingError("empty clause at construction")
        for lit in lits:
            if lit == 0 or abs(lit) > len(self.atoms):
                raise EncodingError(f"unregistered literal {lit}")
        self.clauses.append(lits)

    def assume(self, literal: int) -> None:
        if literal == 0 or abs(literal) > len(self.atoms):
            raise EncodingError(f"unregistered literal {literal}")
        self.assumptions.append(literal)

    def name_of(self, literal: int) -> str:
        return self.atoms[abs(literal) - 1]


@dataclass
class SatResult:
    satisfiable: bool
    # Complete assignment atom name -> truth value (SAT only).
    model: dict[str, bool] | None = None
    # Deletion-minimized subset of the assumptions (UNSAT only).
    core: tuple[int, ...] | None = None


def _dpll(clauses, n_atoms, assignment):
    """Complete search; returns a model dict {var: bool} or None."""
    assignment = dict(assignment)
    while True:
        # Unit propagation to fixpoint.
        progressed = True
        while progressed:
            progressed = False
            for clause in clauses:
                satisfied = False
                unassigned = []
                for lit in clause:
                    val = assignment.get(abs(lit))
                    if val is None:
                        unassigned.append(lit)
                    elif (lit > 0) == val:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not unassigned:
                    return None
                if len(unassigned) == 1:
                    lit = unassigned[0]
                    assignment[abs(lit)] = lit > 0
                    progressed = True

        open_clauses = []
        for clause in clauses:
            if any(assignment.get(abs(l)) == (l > 0) for l in clause):
                continue
            open_clauses.append(clause)
        if not open_clauses:
            return assignment

        # Pure-literal elimination over still-open clauses.
        polarity: dict[int, int] = {}
        for clause in open_clauses:
            for lit in clause:
                if abs(lit) in assignment:
                    continue
                polarity[abs(lit)] = polarity.get(abs(lit), 0) | (1 if lit > 0 else 2)
        pures = [v for v in sorted(polarity) if polarity[v] in (1, 2)]
        if pures:
            for v in pures:
                assignment[v] = polarity[v] == 1
            continue

        # Branch on the lowest-index open variable, true first.
        var = min(polarity)
        for value in (True, False):
            child = dict(assignment)
            child[var] = value
            result = _dpll(open_clauses, n_atoms, child)
            if result is not None:
                assignment.update(result)
                return assignment
        return None


def _solve_with(cs: ClauseSet, assumptions) -> dict | None:
    clauses = list(cs.clauses) + [(lit,) for lit in assumptions]
    return _dpll(clauses, len(cs.atoms), {})


def solve(cs: ClauseSet) -> SatResult:
    """SAT with a complete model, or UNSAT with a minimal assumption core.

    The core is shrunk by deletion (drop one assumption, re-solve); because
    unsatisfiability is monotone in the assumption set, the result is
    genuinely minimal: removing any single member restores satisfiability.
    """
    model = _solve_with(cs, cs.assumptions)
    if model is not None:
        full = {name: model.get(i + 1, False) for i, name in enumerate(cs.atoms)}
        return SatResult(True, model=full)
    core = list(cs.assumptions)
    for lit in list(core):
        trial = [x for x in core if x != lit]
        if _solve_with(cs, trial) is None:
            core = trial
    return SatResult(False, core=tuple(core))


def all_minimal_conflicts(cs: ClauseSet) -> list[frozenset[str]]:
    """Every minimal subset of the assumptions that is jointly untenable.

    Iterated core extraction: each unsatisfiable assumption subset is shrunk
    to a minimal core, then the search recurses on the subsets obtained by
    retracting one core member at a time (this reaches every minimal core).
    Results are reported as sets of assumption atom names and filtered by a
    final pairwise subset check.
    """
    cores: list[frozenset[int]] = []
    seen: set[frozenset[int]] = set()
    stack = [frozenset(cs.assumptions)]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        subset = sorted(node, key=abs)
        if _solve_with(cs, subset) is not None:
            continue
        core = list(subset)
        for lit in list(core):
            trial = [x for x in core if x != lit]
            if _solve_with(cs, trial) is None:
                core = trial
        core_set = frozenset(core)
        if core_set not in cores:
            cores.append(core_set)
        for lit in core_set:
            stack.append(node - {lit})

    minimal = [c for c in cores if not any(o < c for o in cores)]
    named = [frozenset(cs.name_of(l) for l in c) for c in minimal]
    return sorted(named, key=lambda c: (len(c), tuple(sorted(c))))


def minimal_hitting_sets(conflicts, max_size: int = 3) -> list[frozenset[str]]:
    """All inclusion-minimal sets of size <= max_size hitting every conflict.

    Breadth-first enumeration by candidate size with subset pruning; an
    empty conflict family is hit by the empty set alone.
    """
    if max_size < 1:
        raise EncodingError("max_size must be >= 1")
    conflicts = [frozenset(c) for c in conflicts]
    if not conflicts:
        return [frozenset()]
    if any(not c for c in conflicts):
        return []
    universe = sorted(set().union(*conflicts))
    found: list[frozenset[str]] = []
    for size in range(1, max_size + 1):
        for combo in combinations(universe, size):
            cand = frozenset(combo)
            if any(f <= cand for f in found):
                continue
            if all(cand & c for c in conflicts):
                found.append(cand)
    return sorted(found, key=lambda s: (len(s), tuple(sorted(s))))
