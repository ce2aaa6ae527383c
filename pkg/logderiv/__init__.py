"""Moments of the logarithmic derivative of characteristic polynomials over SO(2N), SO(2N+1) and USp(2N)"""

__version__ = "0.1.0"
