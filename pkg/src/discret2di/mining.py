"""Frequent-itemset mining over (state, residual) transactions.

FP-Growth builds a prefix tree compressed by item frequency and mines it
depth-first through conditional pattern bases. Output is the complete set of
itemsets whose support reaches min_support, identical to brute-force
enumeration; candidate rules are then restricted to the shape
state -> residual and filtered by confidence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .discretize import SymbolSequence

STATE_PREFIX = "state:"
RESIDUAL_OK = "residual:ok"
RESIDUAL_NOT_OK = "residual:not_ok"

DEFAULT_MIN_SUPPORT = 0.01
DEFAULT_MIN_CONFIDENCE = 0.005


class MiningError(ValueError):
    pass


def build_transactions(seq: SymbolSequence) -> list[frozenset[str]]:
    """One 2-item transaction (state symbol, residual symbol) per timestamp."""
    if len(seq) == 0:
        raise MiningError("cannot build transactions from an empty sequence")
    out = []
    for rec in seq:
        residual = RESIDUAL_OK if rec.ok else RESIDUAL_NOT_OK
        out.append(frozenset((f"{STATE_PREFIX}{rec.state}", residual)))
    return out


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children: dict[str, _Node] = {}


def _build_tree(weighted_transactions, counts, order):
    """FP-tree from (items, weight) pairs; returns header table item -> nodes."""
    root = _Node(None, None)
    header: dict[str, list[_Node]] = {item: [] for item in order}
    rank = {item: i for i, item in enumerate(order)}
    for items, weight in weighted_transactions:
        path = sorted((i for i in items if i in rank), key=rank.__getitem__)
        node = root
        for item in path:
            child = node.children.get(item)
            if child is None:
                child = _Node(item, node)
                node.children[item] = child
                header[item].append(child)
            child.count += weight
            node = child
    return header


def _mine(weighted_transactions, n_total, min_support, suffix, result):
    counts: dict[str, float] = {}
    for items, weight in weighted_transactions:
        for item in items:
            counts[item] = counts.get(item, 0.0) + weight
    frequent = {i: c for i, c in counts.items() if c / n_total >= min_support}
    # Global order: descending count, lexicographic tie-break (deterministic).
    order = sorted(frequent, key=lambda i: (-frequent[i], i))
    header = _build_tree(weighted_transactions, frequent, order)

    for item in reversed(order):
        nodes = header[item]
        support_count = sum(node.count for node in nodes)
        itemset = suffix | {item}
        result[frozenset(itemset)] = support_count / n_total
        # Conditional pattern base: prefix paths of every node for this item.
        base = []
        for node in nodes:
            path = []
            parent = node.parent
            while parent is not None and parent.item is not None:
                path.append(parent.item)
                parent = parent.parent
            if path:
                base.append((frozenset(path), node.count))
        if base:
            _mine(base, n_total, min_support, itemset, result)


def fp_growth(
    transactions: list[frozenset[str]], min_support: float = DEFAULT_MIN_SUPPORT
) -> dict[frozenset[str], float]:
    """All itemsets with support >= min_support, mapped to their support."""
    if not (0.0 < min_support <= 1.0):
        raise MiningError("min_support must be in (0, 1]")
    if not transactions:
        raise MiningError("no transactions to mine")
    result: dict[frozenset[str], float] = {}
    weighted = [(frozenset(t), 1) for t in transactions]
    _mine(weighted, len(transactions), min_support, frozenset(), result)
    return result


@dataclass(frozen=True)
class CandidateRule:
    """Mined implication: observational state -> residual truth value."""

    state: int
    ok: bool
    support: float
    confidence: float

    @property
    def antecedent(self) -> str:
        return f"{STATE_PREFIX}{self.state}"

    @property
    def consequent(self) -> str:
        return RESIDUAL_OK if self.ok else RESIDUAL_NOT_OK


def generate_rules(
    frequent: dict[frozenset[str], float],
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
    one_rule_per_state: bool = True,
) -> list[CandidateRule]:
    """Confidence-filtered state -> residual rules from frequent itemsets.

    A state seen with both residual polarities keeps only its strongest rule
    (ties prefer ok): the mined base describes normal behavior and
    association strength is the noise filter. Sorted by (confidence desc,
    support desc, state asc).
    """
    rules = []
    for itemset, support in frequent.items():
        if len(itemset) != 2:
            continue
        states = [i for i in itemset if i.startswith(STATE_PREFIX)]
        residuals = [i for i in itemset if i in (RESIDUAL_OK, RESIDUAL_NOT_OK)]
        if len(states) != 1 or len(residuals) != 1:
            continue
        antecedent_support = frequent.get(frozenset(states))
        if not antecedent_support:
            continue
        confidence = support / antecedent_support
        if confidence >= min_confidence:
            rules.append(
                CandidateRule(
                    state=int(states[0][len(STATE_PREFIX):]),
                    ok=residuals[0] == RESIDUAL_OK,
                    support=support,
                    confidence=confidence,
                )
            )
    if one_rule_per_state:
        best: dict[int, CandidateRule] = {}
        for rule in rules:
            cur = best.get(rule.state)
            if cur is None or (rule.confidence, rule.support, rule.ok) > (
                cur.confidence, cur.support, cur.ok
            ):
                best[rule.state] = rule
        rules = list(best.values())
    rules.sort(key=lambda r: (-r.confidence, -r.support, r.state))
    return rules


def mine_rules(
    seq: SymbolSequence,
    min_support: float = DEFAULT_MIN_SUPPORT,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> list[CandidateRule]:
    """build_transactions + fp_growth + generate_rules in one call."""
    frequent = fp_growth(build_transactions(seq), min_support)
    return generate_rules(frequent, min_confidence)


def save_candidate_rules(rules: list[CandidateRule], path) -> None:
    doc = [
        {
            "antecedent": r.antecedent,
            "consequent": r.consequent,
            "support": r.support,
            "confidence": r.confidence,
        }
        for r in rules
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_candidate_rules(path) -> list[CandidateRule]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    out = []
    for entry in doc:
        out.append(
            CandidateRule(
                state=int(entry["antecedent"][len(STATE_PREFIX):]),
                ok=entry["consequent"] == RESIDUAL_OK,
                support=float(entry["support"]),
                confidence=float(entry["confidence"]),
            )
        )
    return out
