"""Cyclic Jacobi eigensolver for small dense symmetric matrices.

Agent counts in practice stay below a few dozen, so a short, verifiable
rotation loop is preferred over a general-purpose LAPACK path.  Tests check
it against closed-form characteristic-polynomial roots for n <= 3 and
against trace/Frobenius reconstruction for larger n.
"""

import numpy as np

MAX_SWEEPS = 100


class NoConvergence(RuntimeError):
    """Off-diagonal mass failed to fall below tolerance within the sweep budget."""


def _offdiag_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigenvalues(matrix, max_sweeps=MAX_SWEEPS):
    """Return the eigenvalues of a symmetric matrix, descending.

    Cyclic-by-row Jacobi rotations; converged when the off-diagonal
    Frobenius norm drops below 1e-12 * n.

    Raises NoConvergence if the sweep budget is exhausted.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])

    tol = 1e-12 * n
    for _ in range(max_sweeps):
        if _offdiag_norm(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                # standard stable rotation angle (Golub & Van Loan)
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e10:
                    t = 1.0 / (2.0 * theta)  # avoids overflow in theta**2
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    else:
        raise NoConvergence(
            f"Jacobi sweeps exhausted ({max_sweeps}) with off-diagonal norm "
            f"{_offdiag_norm(a):.3e}"
        )

    return np.sort(np.diag(a))[::-1].copy()
