"""Weighted finite difference solvers for the semiclassical cubic NLS.

    i eps u_t + (eps^2 / 2) u_xx = eps * lam * |u|^2 u

on a periodic interval, with highly oscillatory single- or multiphase
initial data.
"""

from oscidiff.core import (
    ComplexField,
    PhaseSet,
    SchemeParams,
    TimeGrid,
    TorusGrid,
    adjust_wavenumber,
    demodulate,
    linf_error,
    make_initial_data,
    modulate,
)

__all__ = [
    "ComplexField",
    "PhaseSet",
    "SchemeParams",
    "TimeGrid",
    "TorusGrid",
    "adjust_wavenumber",
    "demodulate",
    "linf_error",
    "make_initial_data",
    "modulate",
]

__version__ = "0.1.0"
