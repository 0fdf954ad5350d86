"""Numerical laboratory for observability and control of the free Schrödinger
equation on R^d with periodic control sets.

Modules: ``geometry`` (control sets, thickness, line condition), ``floquet``
(Bloch reduction and modal dynamics), ``lattice`` (lifted lattices and gap
decompositions), ``gramian`` (Ingham-type Gram matrices), ``control``
(observability Gramians and HUM), ``counterexample`` (Gaussian states in
clearings) and ``cli``.
"""
__version__ = "0.1.0"
