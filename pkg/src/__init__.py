"""
Interpretable Recidivism Toolkit - Source Package

This package contains the complete source code for the toolkit, organized
into clear layers:

- core: Domain models (records, scoring tables, PSA, stumps) and pure logic
- trainers: Model families (penalized logistic, Additive Stumps, RiskSLIM-lite, CART)
- evaluation: AUC, nested cross-validation, cross-region protocol, fairness audits
- services: CSV/schema IO, synthetic populations, run artifacts
- cli: Command-line orchestration
"""

__version__ = "1.0.0"
