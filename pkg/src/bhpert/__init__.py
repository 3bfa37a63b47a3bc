"""High-order hopping-expansion engine for the Bose-Hubbard model.

Computes Landau coefficients of the effective potential via process-chain
perturbation theory, and from them phase boundaries, condensate and
superfluid densities, and critical exponents.
"""

__version__ = "0.1.0"
