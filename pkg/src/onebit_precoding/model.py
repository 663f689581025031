"""Problem types and closed-form quantities for the quantized MU-MIMO downlink.

A base station with ``B`` antennas serves ``U`` single-antenna users over a
known channel ``H`` (U x B). The precoded vector ``x`` is drawn entrywise from
a constant-modulus alphabet with ``|x_b|^2 = 1/B`` (so every full vector has
unit transmit energy), and each receiver scales its observation by a common
positive factor ``beta``. For a data vector ``s`` the figure of merit is the
sum MSE

    ``||s - beta H x||^2 + beta^2 U N0``

minimized jointly over ``x`` and ``beta > 0``. Eliminating ``beta`` in closed
form turns this into the fractional objective

    ``||H~ x||^2 / Re{x^H z_mrt}^2``

over the alphabet, where ``H~`` stacks ``H`` on top of ``sqrt(N0 U) I_B`` and
``z_mrt = H^H s``. The helpers in this module construct those quantities and
evaluate both objectives.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateInstance, SingularMatrix, ZeroCorrelation

# Absolute slack accepted on |x_b|^2 = 1/B and on alphabet symmetry.
MODULUS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TransmitAlphabet:
    """Constant-modulus transmit alphabet for a ``B``-antenna array.

    Every point has squared modulus ``1/B`` and the point set is closed
    under negation, so full vectors always satisfy ``||x||^2 = 1`` and a
    global sign flip never leaves the alphabet.
    """

    B: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        object.__setattr__(self, "points", pts)
        if self.B < 1:
            raise ValueError("need B >= 1")
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("need at least two alphabet points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("alphabet points must be finite")
        if float(np.max(np.abs(np.abs(pts) ** 2 - 1.0 / self.B))) > MODULUS_TOL:
            raise ValueError("alphabet is not constant-modulus with |x|^2 = 1/B")
        for p in pts:
            if float(np.min(np.abs(pts + p))) > MODULUS_TOL:
                raise ValueError("alphabet is not symmetric under negation")
        gaps = np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)
        if float(np.min(gaps)) <= MODULUS_TOL:
            raise ValueError("alphabet points must be distinct")

    @classmethod
    def one_bit(cls, B):
        """The four phase states of a 1-bit DAC pair per antenna,
        ``(+-1 +- 1j) / sqrt(2 B)``, ordered counter-clockwise from the first
        quadrant. Built from exact signs (not via ``exp``) so that negation
        symmetry holds bit-for-bit, which downstream cancellation tests rely
        on."""
        re = np.array([1.0, -1.0, -1.0, 1.0])
        im = np.array([1.0, 1.0, -1.0, -1.0])
        return cls(B, (re + 1j * im) / np.sqrt(2.0 * B))

    @property
    def size(self):
        return int(self.points.size)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Data-symbol constellation with per-point bit labels.

    ``points`` has unit average energy; ``labels`` holds one row of bits per
    point and all rows are distinct.
    """

    points: np.ndarray
    labels: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        labels = np.asarray(self.labels, dtype=np.uint8)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        if pts.ndim != 1 or labels.ndim != 2 or labels.shape[0] != pts.size:
            raise ValueError("need one label row per constellation point")
        if len({tuple(row) for row in labels.tolist()}) != pts.size:
            raise ValueError("bit labels must be distinct")
        if abs(float(np.mean(np.abs(pts) ** 2)) - 1.0) > 1e-9:
            raise ValueError("constellation must have unit average energy")

    @classmethod
    def qpsk(cls):
        """Gray-labelled QPSK: bits ``(b0, b1)`` map to
        ``((1 - 2 b0) + 1j (1 - 2 b1)) / sqrt(2)``."""
        bits = np.array([[b0, b1] for b0 in (0, 1) for b1 in (0, 1)], dtype=np.uint8)
        pts = ((1 - 2 * bits[:, 0].astype(float)) + 1j * (1 - 2 * bits[:, 1].astype(float))) / np.sqrt(2.0)
        return cls(pts, bits, name="qpsk")

    @property
    def bits_per_symbol(self):
        return int(self.labels.shape[1])

    def nearest_index(self, values):
        """Index of the closest point in Euclidean distance, lowest index on ties."""
        values = np.asarray(values, dtype=np.complex128)
        d2 = np.abs(values[..., None] - self.points) ** 2
        return np.argmin(d2, axis=-1)

    @cached_property
    def _label_lut(self):
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        codes = self.labels.astype(np.int64) @ weights
        lut = np.full(1 << self.bits_per_symbol, -1, dtype=np.int64)
        lut[codes] = np.arange(self.points.size)
        return weights, lut

    def bits_to_symbols(self, bits):
        """Map a flat bit array (a multiple of bits_per_symbol long) to points."""
        weights, lut = self._label_lut
        bits = np.asarray(bits, dtype=np.int64).reshape(-1, self.bits_per_symbol)
        idx = lut[bits @ weights]
        if np.any(idx < 0):
            raise ValueError("bit pattern without a constellation point")
        return self.points[idx]


class PrecodingProblem:
    """One downlink instance: channel, data vector and noise level.

    Parameters
    ----------
    H : (U, B) array_like, complex
        Flat-fading channel matrix.
    s : (U,) array_like, complex
        Data vector intended for the users; must not be all zero.
    N0 : float
        Per-user noise variance, >= 0. The operating SNR is ``1 / N0``.
    alphabet : TransmitAlphabet, optional
        Defaults to the 1-bit set for ``B`` antennas.
    """

    def __init__(self, H, s, N0, alphabet=None):
        H = np.asarray(H, dtype=np.complex128)
        s = np.asarray(s, dtype=np.complex128)
        if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
            raise ValueError("H must be a U x B matrix with U, B >= 1")
        if s.shape != (H.shape[0],):
            raise ValueError("s must hold one symbol per user")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(s))):
            raise ValueError("H and s must be finite")
        N0 = float(N0)
        if not np.isfinite(N0) or N0 < 0.0:
            raise ValueError("N0 must be finite and nonnegative")
        if not np.any(s != 0):
            raise DegenerateInstance("all-zero data vector")
        if alphabet is None:
            alphabet = TransmitAlphabet.one_bit(H.shape[1])
        elif alphabet.B != H.shape[1]:
            raise ValueError("alphabet was built for a different antenna count")
        self.H = H
        self.s = s
        self.N0 = N0
        self.alphabet = alphabet

    @property
    def U(self):
        return self.H.shape[0]

    @property
    def B(self):
        return self.H.shape[1]

    @cached_property
    def H_tilde(self):
        return augment_channel(self.H, self.N0)

    @cached_property
    def z_mrt(self):
        return mrt_vector(self.H, self.s)


@dataclass
class SearchStats:
    """Bookkeeping for one precoder run.

    ``nodes_visited`` counts child-cost evaluations, ``leaves_reached``
    counts exact leaf evaluations, ``radius_updates`` counts incumbent
    improvements. ``leaf_value_drift`` is the worst relative gap observed
    between the incrementally tracked numerator and its from-scratch
    recomputation at a leaf (a consistency diagnostic, not an error bound
    on the result, which is always computed from scratch).
    """

    nodes_visited: int = 0
    leaves_reached: int = 0
    radius_updates: int = 0
    wall_time: float = 0.0
    leaf_value_drift: float = 0.0


@dataclass(eq=False)
class PrecodeResult:
    """Solution of one precoding instance.

    ``x`` is sign-canonicalized so that ``beta > 0``. ``qp_mse`` is the sum
    MSE at ``(x, beta)`` and ``cmqp_value`` the fractional objective of ``x``.
    """

    x: np.ndarray
    beta: float
    qp_mse: float
    cmqp_value: float
    stats: SearchStats


def augment_channel(H, N0):
    """Stack ``H`` on top of ``sqrt(N0 U) I_B``.

    The augmented matrix satisfies
    ``||H~ x||^2 = ||H x||^2 + N0 U ||x||^2`` for every ``x``, which absorbs
    the noise penalty of the MSE into a single quadratic form.
    """
    H = np.asarray(H, dtype=np.complex128)
    U, B = H.shape
    return np.vstack([H, np.sqrt(N0 * U) * np.eye(B, dtype=np.complex128)])


def mrt_vector(H, s):
    """Matched-filter (MRT) direction ``H^H s``."""
    H = np.asarray(H, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    return H.conj().T @ s


def wf_vector(H, s, N0):
    """Wiener-filter precoding direction ``H^H (H H^H + U N0 I)^{-1} s``.

    Raises
    ------
    SingularMatrix
        If the U x U system is numerically singular (only possible at
        ``N0 = 0``).
    """
    H = np.asarray(H, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    U = H.shape[0]
    gram = H @ H.conj().T + U * float(N0) * np.eye(U, dtype=np.complex128)
    try:
        w = np.linalg.solve(gram, s)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("H H^H + U N0 I is singular") from exc
    return H.conj().T @ w


def quantize_to_indices(z, alphabet):
    """Entrywise index of the nearest alphabet point.

    Ties resolve to the lowest point index, which makes quantization a
    deterministic function of its input.
    """
    z = np.asarray(z, dtype=np.complex128)
    d2 = np.abs(z[:, None] - alphabet.points[None, :]) ** 2
    return np.argmin(d2, axis=1)


def quantize_to_alphabet(z, alphabet):
    """Entrywise nearest alphabet point in Euclidean distance.

    For a symmetric constant-modulus alphabet this also maximizes
    ``Re{x_b^* z_b}`` entry by entry.
    """
    return alphabet.points[quantize_to_indices(z, alphabet)]


def optimal_beta(x, problem):
    """Receive scaling that minimizes the sum MSE for a fixed ``x``:
    ``Re{x^H z_mrt} / (||H x||^2 + N0 U)``. The result may be negative;
    see :func:`canonicalize_sign`.

    Raises
    ------
    DegenerateInstance
        If the denominator is zero (``H x = 0`` and ``N0 = 0``), in which
        case the MSE does not depend on ``beta`` at all.
    """
    Hx = problem.H @ x
    den = float(np.vdot(Hx, Hx).real) + problem.N0 * problem.U
    if den == 0.0:
        raise DegenerateInstance("MSE independent of beta (H x = 0 and N0 = 0)")
    return float(np.vdot(x, problem.z_mrt).real) / den


def qp_objective(x, beta, problem):
    """Sum MSE ``||s - beta H x||^2 + beta^2 U N0`` at a given scaling."""
    r = problem.s - beta * (problem.H @ x)
    return float(np.vdot(r, r).real) + beta * beta * problem.U * problem.N0


def cmqp_objective(x, R, z_mrt):
    """Fractional objective ``||R x||^2 / Re{x^H z_mrt}^2``.

    ``R`` may be the upper-triangular factor of the augmented channel or the
    augmented channel itself; any matrix with the same Gram matrix yields the
    same value.

    Raises
    ------
    ZeroCorrelation
        If ``Re{x^H z_mrt} = 0``; such an ``x`` cannot serve the users and
        searches treat its value as +inf.
    """
    x = np.asarray(x, dtype=np.complex128)
    Rx = np.asarray(R, dtype=np.complex128) @ x
    corr = float(np.vdot(x, z_mrt).real)
    if corr == 0.0:
        raise ZeroCorrelation("Re{x^H z_mrt} = 0")
    return float(np.vdot(Rx, Rx).real) / (corr * corr)


def canonicalize_sign(x, problem):
    """Flip the sign of ``x`` if needed so the optimal scaling is positive.

    The sum MSE is invariant under ``(x, beta) -> (-x, -beta)``, so every
    solution is reported with ``beta > 0``. Returns ``(x, beta)``.

    Raises
    ------
    DegenerateInstance
        If the optimal scaling is exactly zero, in which case no sign
        preference exists.
    """
    beta = optimal_beta(x, problem)
    if beta == 0.0:
        raise DegenerateInstance("optimal scaling is exactly zero")
    if beta > 0.0:
        return x, beta
    return -x, -beta
