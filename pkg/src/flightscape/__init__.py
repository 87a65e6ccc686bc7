"""Probabilistic mission landscapes from uncertain geodata and declarative rules.

The pipeline: typed map features are perturbed according to a per-type affine
error model, turned into per-cell distance/occupancy clauses, combined with a
mission rule program, and queried per grid cell to produce a raster of
probabilities that every constraint holds at that location.
"""

__version__ = "0.1.0"
