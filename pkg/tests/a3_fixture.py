"""Transcription of the printed D=2, M=3 coefficient matrix."""
import numpy as np


def printed_a3(s, fix_row6: bool = False) -> np.ndarray:
    """Printed matrix evaluated at ``s``.

    ``fix_row6`` replaces the printed ``p_{2e_2}`` in entry (6, 2) by
    ``p_{2e_2}/2``, the value that makes the row consistent with the
    conservation form.
    """
    rho, (u1, _), th = s.rho, s.u, s.theta
    f = lambda m, n: s.fval((m, n))
    p1 = s.p + 2 * f(2, 0)
    p2 = s.p + 2 * f(0, 2)
    f11, f20, f30, f21, f12, f03 = f(1, 1), f(2, 0), f(3, 0), f(2, 1), f(1, 2), f(0, 3)
    A = np.zeros((10, 10))
    A[0, :2] = u1, rho
    A[1, [1, 3]] = u1, 2 / rho
    A[2, [2, 4]] = u1, 1 / rho
    A[3, [1, 3, 6]] = 1.5 * p1, u1, 3
    A[4, [1, 2, 4, 7]] = 2 * f11, p1, u1, 2
    A[5, [1, 2, 5, 8]] = (p2 / 2 if fix_row6 else p2), f11, u1, 1
    A[6, [0, 1, 3, 5, 6]] = (rho * th**2 - 2 * th * p1) / (2 * rho), 4 * f30, th, 2 * f20 / rho, u1
    A[7, :8] = (-3 * th * f11 / (2 * rho), 3 * f21, 3 * f30, -f11 / (2 * rho),
                (rho * th - f20) / rho, 3 * f11 / (2 * rho), 0, u1)
    A[8, [0, 1, 2, 3, 4, 5, 8]] = -0.5 * th**2, 2 * f12, 2 * f21, 2 * f20 / rho, -f11 / rho, th, u1
    A[9, [0, 1, 2, 3, 4, 5, 9]] = (-th * f11 / (2 * rho), f03, f12, f11 / (2 * rho), f20 / rho,
                                   f11 / (2 * rho), u1)
    return A
