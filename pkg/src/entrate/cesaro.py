"""Cesaro averages of a linear map applied to a vector.

The running average ``(1/n) sum_{k<n} F^k x`` is advanced on a doubling
schedule: ``avg_2n = (avg_n + F^n avg_n) / 2`` with ``F^n`` obtained by
repeated squaring.  Periodic components make the average converge like
``1/n``; doubling reaches ``n ~ 1e10`` in about 35 matrix products.
"""

import numpy as np

DEFAULT_TOL = 1e-10
DEFAULT_MAX_N = 2**40


def cesaro_average(F, x, tol=DEFAULT_TOL, max_n=DEFAULT_MAX_N, mass_preserving=False):
    """Cesaro average of the orbit ``x, Fx, F^2x, ...``.

    Stops once two successive averages differ by less than ``tol`` in l1.
    If ``F^n avg_n == avg_n`` at some ``n`` then every later average on the
    schedule equals ``avg_n`` and so does the limit, hence the stopping rule
    never ends on a transient plateau.

    With ``mass_preserving`` the column sums of each power are reset to one,
    which is exact for maps that preserve total mass (transposed stochastic
    matrices, shift operators in a basis of probability measures) and keeps
    rounding from compounding over many squarings.

    Returns
    -------
    avg : ndarray
    n : int
        Number of orbit terms averaged.
    converged : bool
    increment : float
        l1 size of the last update.
    """
    F = np.asarray(F)
    avg = np.asarray(x, dtype=np.result_type(F, x, float)).copy()
    power = F.copy()
    n = 1
    increment = np.inf
    while 2 * n <= max_n:
        new = 0.5 * (avg + power @ avg)
        increment = float(np.abs(new - avg).sum())
        avg = new
        n *= 2
        if increment < tol:
            return avg, n, True, increment
        power = power @ power
        if mass_preserving:
            power = power / power.sum(axis=0, keepdims=True)
    return avg, n, False, increment
