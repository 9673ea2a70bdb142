"""Pseudo-spectral simulator and estimate auditor for the 3D stochastic
globally modified Navier-Stokes equations on a periodic box."""

__version__ = "0.1.0"

from .kernels import backend_name as kernel_backend
