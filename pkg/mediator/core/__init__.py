"""
Core module for the mediator tool.

This module contains the ontology model, the structure mapping engine,
commonsense expansion and the case-based reasoning cycle.
"""

from .ontology import Case, Concept, Ontology, Relation, Stance
from .sme import compute_gmaps, match_total

__all__ = ['Case', 'Concept', 'Ontology', 'Relation', 'Stance', 'compute_gmaps', 'match_total']
