"""
Test module for the mediator tool.

Unit tests for the ontology model, case files, structure mapping,
expansion, case-based reasoning, mediation sessions and the CLI.
"""
