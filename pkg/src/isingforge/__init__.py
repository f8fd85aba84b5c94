"""Hard Ising instances with planted ground states from code-based crypto.

Pipeline: key generation over binary Goppa codes -> public-key linear
system -> p-local spin Hamiltonian -> decoding attacks (information set
decoding, parallel tempering) -> hardness benchmarking and energy
landscape analytics.
"""

__version__ = "0.1.0"
