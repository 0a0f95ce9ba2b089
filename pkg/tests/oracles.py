"""Frozen reference values, derived by hand from the closed forms.

Every value here was fixed before the implementation was run against it;
tests import these rather than recomputing expectations with package code.
"""

from fractions import Fraction as F
from math import comb

# One-copy W_1(-1/2) over (B1, B2, B3, B4), normalized by the traces.
ONE_COPY_C = (F(-1, 15), F(16, 15), F(0), F(0))
# Tr(W_1 pi*) with pi* = B1/7 + 6/7 B4/24.
ONE_COPY_VALUE = F(-1, 105)
PI_STAR = (F(1, 7), F(0), F(0), F(6, 7))
P_STAR = F(6, 7)
ONE_COPY_RR = 36 * F(1, 105)

# Two-copy W_2(-1/2): raw eigenvalues (4/225)(1/4, -1/2, 1) over B^2.
TWO_COPY_RAW = (F(1, 225), F(-2, 225), F(4, 225))
TWO_COPY_TRACES = (1, 16, 64, 3, 48, 192)
# Most detected PPT state over the enlarged two-copy basis.
TWO_COPY_PI = (F(1, 36), F(8, 36), F(0), F(1, 12), F(0), F(2, 3))
TWO_COPY_PI_VALUE = F(-1, 540)
# Line family B2 -> B6 crosses the PPT boundary at 6/7.
TWO_COPY_TILDE_P = F(6, 7)
TWO_COPY_TILDE_VALUE = F(-2, 1575)
TWO_COPY_TILDE_RR = 324 * F(2, 1575)


def wn_eigenvalues(d, beta, n):
    """``(1 + d beta)^(N - j) / (d^2 + d beta)^N`` for ``j = 0..N``."""
    beta = F(beta)
    return tuple((1 + d * beta) ** (n - j) / (d * d + d * beta) ** n for j in range(n + 1))


def b_traces(d, n):
    return tuple(comb(n, j) * (d * d - 1) ** j for j in range(n + 1))


def rank_two_closed_form(d, beta):
    """Minimum over Schmidt rank two of ``<psi|rho_w^{T_A}|psi>`` for ``beta < 0``."""
    beta = F(beta)
    return (1 + 2 * beta) / (d * d + d * beta)


# Figure geometry: G1 = 8 B1 - B2, G2 = 8 B3 - B4, G3 = -3 (B1 + B2) + B3 + B4.
G_MATRIX = ((8, -1, 0, 0), (0, 0, 8, -1), (-3, -3, 1, 1))
# Every W_1(beta) plane contains the line g1 = 0, g3 = 1/108, directed along G2.
AXIS_DIRECTION = (0, 1, 0)
AXIS_G3 = F(1, 108)
# Exit scale of pi* from the separable region: 1 / (1 + Rr).
PI_STAR_EXIT_SCALE = 1 / (1 + ONE_COPY_RR)
