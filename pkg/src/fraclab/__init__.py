"""Numerical laboratory for multilinear fractional integrals and weighted Lipschitz classes."""
