"""Health-component knowledge and the weak-fault-model rule base.

A completed rule has the shape

    not-AB(c1) and ... and not-AB(ck)  ->  (state_i -> residual)

where the components c1..ck are the ones causally responsible for the
observational state. Rules plus one timestamped observation are encoded into
propositional clauses over atoms AB(c), state_i and r_ok; the health
assumptions enter as retractable literals so the SAT layer can report which
of them participate in an inconsistency.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .mining import CandidateRule
from .sat import ClauseSet


class KnowledgeError(ValueError):
    pass


class UnmappedStateError(KnowledgeError):
    """A mined state id has no health-component entry; the map must be extended."""

    def __init__(self, state_ids):
        self.state_ids = sorted(state_ids)
        super().__init__(
            "no health components mapped for state id(s): "
            + ", ".join(str(s) for s in self.state_ids)
        )


@dataclass(frozen=True)
class HealthMap:
    """Expert mapping state id -> responsible components, over a component set.

    JSON format: {"comps": [names], "aliases": {alias: id}, "map":
    {id-or-alias: [component names]}}. Aliases are presentation sugar; all
    logic runs on numeric state ids.
    """

    comps: tuple[str, ...]
    mapping: dict[int, frozenset[str]]
    aliases: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(self.comps))
        comps = set(self.comps)
        if len(comps) != len(self.comps):
            raise KnowledgeError("duplicate component names")
        for state, members in self.mapping.items():
            if not members:
                raise KnowledgeError(f"state {state} maps to no components")
            unknown = members - comps
            if unknown:
                raise KnowledgeError(
                    f"state {state} references undeclared component(s): {sorted(unknown)}"
                )

    def to_dict(self) -> dict:
        return {
            "comps": list(self.comps),
            "aliases": dict(self.aliases),
            "map": {str(k): sorted(v) for k, v in sorted(self.mapping.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HealthMap":
        aliases = {str(k): int(v) for k, v in d.get("aliases", {}).items()}
        mapping: dict[int, frozenset[str]] = {}
        for key, members in d.get("map", {}).items():
            if key in aliases:
                state = aliases[key]
            else:
                try:
                    state = int(key)
                except ValueError:
                    raise KnowledgeError(
                        f"health-map key {key!r} is neither a state id nor a known alias"
                    ) from None
            mapping[state] = frozenset(members)
        return cls(tuple(d["comps"]), mapping, aliases)

    @classmethod
    def load(cls, path) -> "HealthMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


@dataclass(frozen=True)
class Rule:
    """Completed implication health -> (state -> residual), with provenance."""

    components: frozenset[str]
    state: int
    ok: bool
    support: float
    confidence: float
    source: str = "mined"


@dataclass(frozen=True)
class RuleBase:
    """The weak-fault-model system description: all completed rules."""

    comps: tuple[str, ...]
    rules: tuple[Rule, ...]

    def state_ids(self) -> list[int]:
        return sorted({r.state for r in self.rules})

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "comps": list(self.comps),
            "rules": [
                {
                    "components": sorted(r.components),
                    "state_id": r.state,
                    "residual": "ok" if r.ok else "not_ok",
                    "support": r.support,
                    "confidence": r.confidence,
                    "source": r.source,
                }
                for r in self.rules
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RuleBase":
        rules = tuple(
            Rule(
                components=frozenset(r["components"]),
                state=int(r["state_id"]),
                ok=r["residual"] == "ok",
                support=float(r["support"]),
                confidence=float(r["confidence"]),
                source=r.get("source", "mined"),
            )
            for r in d["rules"]
        )
        return cls(tuple(d["comps"]), rules)

    @classmethod
    def load(cls, path) -> "RuleBase":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Observation:
    """One timestamped (state, residual) observation."""

    state: int
    ok: bool
    timestamp: int = 0


def complete_rules(partial: list[CandidateRule], health_map: HealthMap) -> RuleBase:
    """Attach health components to every mined rule.

    Every mined state id must be present in the map; missing ids abort with
    the full offending list so the expert can extend the map in one pass.
    """
    missing = {r.state for r in partial if r.state not in health_map.mapping}
    if missing:
        raise UnmappedStateError(missing)
    rules = tuple(
        Rule(
            components=health_map.mapping[r.state],
            state=r.state,
            ok=r.ok,
            support=r.support,
            confidence=r.confidence,
        )
        for r in partial
    )
    return RuleBase(tuple(health_map.comps), rules)


def ab_atom(component: str) -> str:
    return f"AB({component})"


def state_atom(state: int) -> str:
    return f"state_{state}"


R_OK_ATOM = "r_ok"


def encode_cnf(rules: RuleBase, obs: Observation, assume_healthy) -> ClauseSet:
    """Clauses for SD plus the observation, health assumptions retractable.

    Each rule h -> (s -> r) becomes AB(c1) | ... | AB(ck) | -s | lit(r).
    The observation closes the world over states: exactly the observed state
    atom is true, every other known state atom is false, and r_ok carries
    the observed polarity.
    """
    cs = ClauseSet()
    for comp in rules.comps:
        cs.atom(ab_atom(comp))
    state_ids = sorted(set(rules.state_ids()) | {obs.state})
    for sid in state_ids:
        cs.atom(state_atom(sid))
    cs.atom(R_OK_ATOM)

    for rule in rules.rules:
        clause = [cs.literal(ab_atom(c)) for c in sorted(rule.components)]
        clause.append(cs.literal(state_atom(rule.state), positive=False))
        clause.append(cs.literal(R_OK_ATOM, positive=rule.ok))
        cs.add_clause(clause)

    for sid in state_ids:
        cs.add_clause([cs.literal(state_atom(sid), positive=sid == obs.state)])
    cs.add_clause([cs.literal(R_OK_ATOM, positive=obs.ok)])

    for comp in sorted(assume_healthy):
        if comp not in rules.comps:
            raise KnowledgeError(f"cannot assume health of undeclared component {comp!r}")
        cs.assume(cs.literal(ab_atom(comp), positive=False))
    return cs
