"""
GLT Laboratory Package
======================

A numerical laboratory for the asymptotic spectral analysis of matrix
sequences: Toeplitz and diagonal sampling sequences, the a.c.s. and
convergence-in-measure pseudometrics, and checks of singular value
distributions against GLT symbols.
"""


def main(argv=None):
    """Entry point for the command line."""
    from .app import main as app_main

    return app_main(argv)


__all__ = ["main"]
