"""Early-warning pipeline for student dropout risk.

Tabular socio-demographic records and free-text learner comments are fused
by a gated cross-modal attention model; alerts carry retrieval-grounded
rationales and rule-mapped interventions.
"""

__version__ = "0.1.0"
