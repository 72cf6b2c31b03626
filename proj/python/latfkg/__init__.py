"""Lattice fractional Klein-Gordon toolkit.

Lattice fields are numpy arrays of shape (N,)*n in signed index order, so
element 0 along each axis is the site j = -N/2.
"""

from ._latfkg import (
    NyquistError,
    SpecMismatchError,
    UnsupportedError,
    __version__,
    apply_conv,
    apply_spectral,
    build_table,
    coeff_closed_form,
    coeff_richardson,
    energy,
    fit_rate,
    forward_transform,
    inverse_transform,
    run_sweep,
    solve,
    symbol,
    symbol_gap,
)

__all__ = [
    "NyquistError",
    "SpecMismatchError",
    "UnsupportedError",
    "__version__",
    "apply_conv",
    "apply_spectral",
    "build_table",
    "coeff_closed_form",
    "coeff_richardson",
    "energy",
    "fit_rate",
    "forward_transform",
    "inverse_transform",
    "run_sweep",
    "solve",
    "symbol",
    "symbol_gap",
]
