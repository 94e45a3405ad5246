"""Numerical toolkit for compactness of Calderón-Zygmund operators on the line.

Dyadic geometry, admissible decay profiles, kernels, adapted bumps,
orthonormal wavelets, operator matrices, BMO/CMO norms and paraproducts.
"""

__version__ = "0.1.0"
