"""Exact K-theory of square substitution tilings.

Modules:

* :mod:`tilingk.intlin`: integer matrices, Smith and Hermite forms, lattices, spectra.
* :mod:`tilingk.subst`: substitution systems, border forcing, edges, vertex stars.
* :mod:`tilingk.dimgroup`: stationary direct limits and maps between them.
* :mod:`tilingk.ktheory`: boundary maps, exact sequences, the full pipeline.
* :mod:`tilingk.cli`: the ``tilingk`` command.
"""

__version__ = "0.1.0"
