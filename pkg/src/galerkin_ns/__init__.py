"""Spectral Galerkin toolkit for the 2D stochastic Navier-Stokes equation with
space-time white noise and its enstrophy Gaussian invariant measure."""

__version__ = "0.1.0"
