"""Lineage of a query result: the endogenous tuples partitioned by relation.

A tuple is in the lineage iff it participates in at least one join
combination satisfying all predicates (witness membership).  Relations not
marked endogenous in the schema never contribute players, even when they
join.  The flattened player list is ordered relation-major (relations in
query order, rows in table order), which fixes the bit positions used for
coalition encoding everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .relcore import DatabaseInstance, QuerySpec, bind, iter_combinations

__all__ = ["EndogenousPartition", "compute_lineage", "is_endogenous"]


@dataclass(frozen=True)
class EndogenousPartition:
    """Per-relation endogenous tuple ids and the induced player ordering."""

    relations: tuple[str, ...]
    members: dict[str, tuple[str, ...]]

    def __post_init__(self):
        players = []
        relation_of = {}
        for rel in self.relations:
            for tid in self.members[rel]:
                relation_of[tid] = rel
                players.append(tid)
        object.__setattr__(self, "players", tuple(players))
        object.__setattr__(self, "index", {t: i for i, t in enumerate(players)})
        object.__setattr__(self, "player_relation", relation_of)

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def r(self) -> int:
        return len(self.relations)

    def counts(self) -> tuple[int, ...]:
        return tuple(len(self.members[rel]) for rel in self.relations)

    def player_index(self, tid: str) -> int:
        try:
            return self.index[tid]
        except KeyError:
            raise DomainError(f"tuple {tid!r} is not endogenous for this query") from None

    def encode(self, ids) -> int:
        """Canonical coalition encoding: order-independent bit vector."""
        mask = 0
        for tid in ids:
            mask |= 1 << self.player_index(tid)
        return mask

    def decode(self, mask: int) -> frozenset:
        return frozenset(
            tid for i, tid in enumerate(self.players) if (mask >> i) & 1
        )

    def to_dict(self) -> dict:
        return {
            "relations": {rel: list(self.members[rel]) for rel in self.relations},
            "counts": {rel: len(self.members[rel]) for rel in self.relations},
            "n": self.n,
            "r": self.r,
        }


def compute_lineage(query: QuerySpec, instance: DatabaseInstance) -> EndogenousPartition:
    """Witness-based lineage over the full instance, split by relation."""
    binding = bind(query, instance)
    endo_positions = [
        (p, rel) for p, rel in enumerate(binding.rels) if rel.endogenous
    ]
    seen: dict[str, set[int]] = {rel.name: set() for _, rel in endo_positions}
    for idxs, _rows in iter_combinations(binding, None):
        for p, rel in endo_positions:
            seen[rel.name].add(idxs[p])
    members = {
        rel.name: tuple(rel.ids[i] for i in sorted(seen[rel.name]))
        for _, rel in endo_positions
    }
    return EndogenousPartition(
        tuple(rel.name for _, rel in endo_positions), members
    )


def is_endogenous(partition: EndogenousPartition, tid: str) -> bool:
    """Membership test; callers short-circuit an attribution of 0 when false."""
    return tid in partition.index
