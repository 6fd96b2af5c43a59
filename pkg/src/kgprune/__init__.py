"""kgprune: bounded subgraph extraction from Wikidata-shaped knowledge graphs.

Given seed entities and properties to traverse, the engine walks the graph
breadth-first and decides keep/prune for every encountered neighbor with an
analogy classifier over translational embeddings.  Results export as JSON or
N-Triples, through either the CLI or the HTTP job service.
"""

from .kgstore import (
    AdjacencySnapshot,
    Direction,
    EntityId,
    PropertySpec,
    Triple,
    parse_entity_id,
    parse_property_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencySnapshot",
    "Direction",
    "EntityId",
    "PropertySpec",
    "Triple",
    "parse_entity_id",
    "parse_property_spec",
    "__version__",
]
