"""Segment-wise ACSL specification synthesis toolkit.

The package decomposes a C translation unit into dependency-ordered
segments, asks a language-model backend for candidate ACSL clauses per
point of interest, filters the candidates through a verifier, and then
strengthens the surviving specification by measuring how well it
discriminates mutated program variants.
"""

__version__ = "0.1.0"
