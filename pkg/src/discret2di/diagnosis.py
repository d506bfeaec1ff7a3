"""Per-timestamp consistency-based diagnosis of a discretized run.

Every observation is checked against the rule base with all components
assumed healthy; on inconsistency the minimal conflicts are extracted and
their minimal hitting sets reported as candidate diagnoses. Each diagnosis
is re-verified: marking exactly its components abnormal must restore
satisfiability.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .discretize import SymbolSequence
from .kb import Observation, RuleBase, ab_atom, encode_cnf
from .sat import all_minimal_conflicts, minimal_hitting_sets, solve


@dataclass(frozen=True)
class DiagnosisResult:
    """One minimal abnormality assumption restoring satisfiability."""

    timestamp: int
    delta: frozenset[str]
    conflicts: tuple[frozenset[str], ...]
    state: int
    ok: bool


def _ab_names_to_components(conflicts):
    # Atoms are AB(<comp>); strip the wrapper for reporting.
    return [frozenset(name[3:-1] for name in c) for c in conflicts]


def _verify_delta(rules: RuleBase, obs: Observation, delta: frozenset[str]) -> bool:
    cs = encode_cnf(rules, obs, assume_healthy=())
    for comp in rules.comps:
        cs.add_clause([cs.literal(ab_atom(comp), positive=comp in delta)])
    return solve(cs).satisfiable


def diagnose_observation(rules: RuleBase, obs: Observation, max_size: int = 3):
    """(conflicts, diagnoses) for a single observation; both empty if consistent."""
    cs = encode_cnf(rules, obs, assume_healthy=rules.comps)
    if solve(cs).satisfiable:
        return [], []
    conflicts = _ab_names_to_components(all_minimal_conflicts(cs))
    diagnoses = minimal_hitting_sets(conflicts, max_size=max_size)
    checked = []
    for delta in diagnoses:
        if not _verify_delta(rules, obs, delta):
            raise AssertionError(
                f"hitting set {sorted(delta)} fails to restore satisfiability"
            )
        checked.append(delta)
    return conflicts, checked


def diagnose(rules: RuleBase, seq: SymbolSequence, max_size: int = 3) -> list[DiagnosisResult]:
    """All per-timestamp diagnoses of the run, in timestamp order.

    Observations with identical (state, residual) pairs share one solver
    result.
    """
    cache: dict[tuple[int, bool], tuple] = {}
    results: list[DiagnosisResult] = []
    for rec in seq:
        key = (rec.state, rec.ok)
        if key not in cache:
            cache[key] = diagnose_observation(
                rules, Observation(rec.state, rec.ok, rec.timestamp), max_size
            )
        conflicts, diagnoses = cache[key]
        for delta in diagnoses:
            results.append(
                DiagnosisResult(rec.timestamp, delta, tuple(conflicts), rec.state, rec.ok)
            )
    return results


def diagnosed_timestamps(results: list[DiagnosisResult]) -> list[int]:
    return sorted({r.timestamp for r in results})


def implicated_components(results: list[DiagnosisResult]) -> Counter:
    """Component -> number of timestamps where it appears in some diagnosis."""
    per_comp: dict[str, set[int]] = {}
    for r in results:
        for comp in r.delta:
            per_comp.setdefault(comp, set()).add(r.timestamp)
    return Counter({c: len(ts) for c, ts in per_comp.items()})


def report_dict(seq: SymbolSequence, results: list[DiagnosisResult]) -> dict:
    """JSON-ready report: per-timestamp entries plus a per-component summary."""
    by_ts: dict[int, dict] = {}
    for r in results:
        entry = by_ts.setdefault(
            r.timestamp,
            {
                "timestamp": r.timestamp,
                "state_id": r.state,
                "residual": "ok" if r.ok else "not_ok",
                "conflicts": [sorted(c) for c in r.conflicts],
                "diagnoses": [],
            },
        )
        entry["diagnoses"].append(sorted(r.delta))
    summary = implicated_components(results)
    return {
        "format_version": 1,
        "n_timestamps": len(seq),
        "n_diagnosed_timestamps": len(by_ts),
        "component_summary": {c: summary[c] for c in sorted(summary)},
        "timestamps": [by_ts[t] for t in sorted(by_ts)],
    }


def save_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
