"""Dense complex linear algebra used by the precoders.

Matrices here are small (a few dozen rows at most), so clarity and
deterministic behaviour win over asymptotic tricks throughout.
"""

import numpy as np

from .errors import NotHermitian, SingularMatrix

# Magnitude below which a triangular pivot is treated as exactly zero.
SINGULARITY_TOL = 1e-12

# Default accuracy contract for smallest-eigenvalue extraction.
EIGEN_TOL = 1e-10


def qr_decompose(A):
    """Reduced QR factorization with a real, nonnegative R diagonal.

    Parameters
    ----------
    A : (m, n) array_like, complex, with m >= n.

    Returns
    -------
    Q : (m, n) ndarray
        Orthonormal columns.
    R : (n, n) ndarray
        Upper-triangular with ``diag(R)`` real and >= 0.

    Notes
    -----
    Rank deficiency is legal here: a zero column simply leaves a zero
    diagonal entry. The nonnegative-diagonal convention makes the
    factorization unique for full-rank input, which keeps downstream
    searches deterministic.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError("expected a tall matrix (rows >= cols)")
    Q, R = np.linalg.qr(A, mode="reduced")
    d = np.diagonal(R).copy()
    absd = np.abs(d)
    phase = np.ones_like(d)
    nz = absd > 0
    phase[nz] = d[nz] / absd[nz]
    R = phase.conj()[:, None] * R
    Q = Q * phase[None, :]
    # the diagonal is |d| by construction; assign it exactly to drop the
    # rounding residue left in the imaginary part
    n = R.shape[0]
    R[np.arange(n), np.arange(n)] = absd
    return Q, R


def sorted_qr(A):
    """Column-pivoted Gram-Schmidt QR: ``A[:, perm] = Q @ R``.

    At every elimination step the remaining column with the smallest
    residual norm is processed next (ties resolved towards the lowest
    original column index), which tends to sort ``diag(R)`` in ascending
    order and is the ordering the tree search wants near its root.

    Parameters
    ----------
    A : (m, n) array_like, complex, with m >= n.

    Returns
    -------
    Q : (m, n) ndarray
        Orthonormal columns (zero columns where the residual vanished).
    R : (n, n) ndarray
        Upper-triangular, ``diag(R)`` real and >= 0.
    perm : (n,) ndarray of int
        Forward column permutation, so column ``j`` of the factorization
        corresponds to original column ``perm[j]``.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError("expected a tall matrix (rows >= cols)")
    m, n = A.shape
    V = A.copy()
    Q = np.zeros((m, n), dtype=np.complex128)
    R = np.zeros((n, n), dtype=np.complex128)
    perm = np.arange(n)
    for i in range(n):
        norms = np.linalg.norm(V[:, i:], axis=0)
        best = i
        for j in range(i + 1, n):
            nj = norms[j - i]
            nb = norms[best - i]
            if nj < nb or (nj == nb and perm[j] < perm[best]):
                best = j
        if best != i:
            V[:, [i, best]] = V[:, [best, i]]
            R[:i, [i, best]] = R[:i, [best, i]]
            perm[[i, best]] = perm[[best, i]]
        rii = float(np.linalg.norm(V[:, i]))
        R[i, i] = rii
        if rii > 0.0:
            Q[:, i] = V[:, i] / rii
            proj = Q[:, i].conj() @ V[:, i + 1:]
            R[i, i + 1:] = proj
            V[:, i + 1:] -= np.outer(Q[:, i], proj)
    return Q, R, perm


def back_substitute(R, b, tol=SINGULARITY_TOL):
    """Solve ``R x = b`` for upper-triangular ``R``.

    Raises
    ------
    SingularMatrix
        If any diagonal entry of ``R`` has magnitude below ``tol``.
    """
    R = np.asarray(R, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    n = R.shape[0]
    if R.shape != (n, n) or b.shape != (n,):
        raise ValueError("R must be square and b conformant")
    if n and np.min(np.abs(np.diagonal(R))) < tol:
        raise SingularMatrix(f"triangular pivot below {tol:g}")
    x = np.zeros(n, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def min_eigenvalue_hermitian(G, tol=EIGEN_TOL):
    """Smallest eigenvalue of a Hermitian PSD matrix, clamped to >= 0.

    ``tol`` bounds both the accepted asymmetry (relative to the matrix
    magnitude) and the accuracy of the returned value. The LAPACK solver
    used underneath is accurate to machine precision, well inside any
    reasonable ``tol``.

    Raises
    ------
    NotHermitian
        If ``max|G - G^H|`` exceeds ``tol`` times the matrix magnitude.
    """
    G = np.asarray(G, dtype=np.complex128)
    n = G.shape[0] if G.ndim == 2 else -1
    if G.shape != (n, n) or n < 1:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(G))))
    asym = float(np.max(np.abs(G - G.conj().T)))
    if asym > tol * scale:
        raise NotHermitian(f"asymmetry {asym:g} exceeds {tol * scale:g}")
    lam = float(np.linalg.eigvalsh(G)[0])
    return max(lam, 0.0)


def invert_permutation(perm):
    """Inverse of a forward permutation map."""
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv
