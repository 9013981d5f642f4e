"""Spectral toolkit for rotating Navier-Stokes-alpha flows on anisotropic periodic boxes."""

__version__ = "0.1.0"
