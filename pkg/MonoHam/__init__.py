"""
MonoHam - cyclic and joint monotonicity, Hamiltonian representations and sigma-invariant transport on finite samples.
"""

__version__ = "0.1.0"
