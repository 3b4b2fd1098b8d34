"""Numerical constructions for large-t limits of SU(1,2) Hitchin equations.

Modules
-------
hermlin
    Small Hermitian matrix algebra.
painleve
    The distinguished Painlevé III transcendent.
localmodel
    The lambda-family of rank-two local model metrics and the coefficient c_lambda.
gluing
    Approximate solutions on model disks and the Hitchin residual operator.
weights
    Stability, admissible weight polytopes and t-compatible weights.
spectral
    First Neumann eigenvalue of a disk Schrödinger operator with a shrinking well.
disksolver
    Newton and Picard solves of the full equation on a model disk.
cli
    Command-line front end.
"""

__version__ = "0.1.0"
