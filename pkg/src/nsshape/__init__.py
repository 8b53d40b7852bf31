"""High-order DG Navier-Stokes solver with discrete adjoints and Hadamard shape gradients."""

__version__ = "0.1.0"
