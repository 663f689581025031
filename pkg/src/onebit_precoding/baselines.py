"""Reference precoders: exhaustive ground truth and Wiener-filter baselines."""

import time

import numpy as np

from . import model
from .errors import DegenerateInstance, InstanceTooLarge, ZeroCorrelation
from .model import PrecodeResult, SearchStats

# Hard guard on exhaustive enumeration: 2 * 4^13 is ~134M candidates.
MAX_EXHAUSTIVE_ANTENNAS = 14

_CHUNK = 1 << 15


def exhaustive_visit_count(B):
    """Candidates evaluated by :func:`exhaustive_solve`.

    The global sign symmetry halves the root, so ``2 * 4^(B-1)``.
    """
    return 2 * 4 ** (B - 1)


def reference_visit_count(B):
    """Commonly quoted exhaustive node count ``(7 * 4^(B-1) - 4) / 3`` for
    the sign-halved quaternary tree when interior nodes are counted as well.

    A different bookkeeping convention from :func:`exhaustive_visit_count`
    (which counts evaluated leaves only); reported for comparison.
    """
    return (7 * 4 ** (B - 1) - 4) // 3


def exhaustive_solve(problem):
    """Global minimizer of the fractional objective by direct enumeration.

    Serves as ground truth for the tree search and deliberately shares no
    code with it: candidates are scored against the augmented channel
    itself, with no triangularization involved. The ``2 * 4^(B-1)``
    sign-reduced vectors (last entry restricted to the first half of the
    alphabet; the excluded half consists of global sign flips with
    identical objective) are enumerated in lexicographic order with the
    last entry outermost, and ties keep the earliest candidate.

    Raises
    ------
    InstanceTooLarge
        If ``B`` exceeds ``MAX_EXHAUSTIVE_ANTENNAS``.
    DegenerateInstance
        If every candidate has zero correlation with the MRT direction.
    """
    t0 = time.perf_counter()
    B = problem.B
    if B > MAX_EXHAUSTIVE_ANTENNAS:
        raise InstanceTooLarge(
            f"exhaustive enumeration rejected for B = {B} > {MAX_EXHAUSTIVE_ANTENNAS}")
    pts = problem.alphabet.points
    M = pts.size
    Ht = problem.H_tilde
    z = problem.z_mrt
    total = (M // 2) * M ** (B - 1)
    place = M ** np.arange(B, dtype=np.int64)
    best_val = np.inf
    best_k = 0
    for start in range(0, total, _CHUNK):
        ks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (ks[:, None] // place[None, :]) % M
        X = pts[digits]
        num = np.sum(np.abs(X @ Ht.T) ** 2, axis=1)
        corr = (X.conj() @ z).real
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = num / (corr * corr)
        vals[corr == 0.0] = np.inf
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_k = int(ks[i])
    if not np.isfinite(best_val):
        raise DegenerateInstance("no alphabet vector correlates with the MRT direction")
    x = pts[(best_k // place) % M]
    x, beta = model.canonicalize_sign(x, problem)
    stats = SearchStats(nodes_visited=int(total), leaves_reached=int(total),
                        radius_updates=0, wall_time=time.perf_counter() - t0)
    return PrecodeResult(x=x, beta=float(beta),
                         qp_mse=model.qp_objective(x, beta, problem),
                         cmqp_value=best_val, stats=stats)


def wf_quantized_precoder(problem):
    """Entrywise quantization of the Wiener-filter direction onto the alphabet.

    This is also the vector that seeds the tree search's initial radius, so
    its reported objective matches that radius exactly.
    """
    t0 = time.perf_counter()
    z_wf = model.wf_vector(problem.H, problem.s, problem.N0)
    x = model.quantize_to_alphabet(z_wf, problem.alphabet)
    try:
        val = model.cmqp_objective(x, problem.H_tilde, problem.z_mrt)
    except ZeroCorrelation as exc:
        raise DegenerateInstance(
            "quantized Wiener-filter vector is orthogonal to the MRT direction") from exc
    x, beta = model.canonicalize_sign(x, problem)
    stats = SearchStats(wall_time=time.perf_counter() - t0)
    return PrecodeResult(x=x, beta=float(beta),
                         qp_mse=model.qp_objective(x, beta, problem),
                         cmqp_value=float(val), stats=stats)


def wf_infinite_precoder(problem):
    """Unquantized Wiener-filter precoder at full transmit power.

    The infinite-resolution reference: ``x`` is the WF direction scaled to
    ``||x|| = 1`` and is generally not in the alphabet. Returns ``(x, beta)``.
    """
    z_wf = model.wf_vector(problem.H, problem.s, problem.N0)
    nrm = float(np.linalg.norm(z_wf))
    if nrm == 0.0:
        raise DegenerateInstance("Wiener-filter direction is zero")
    return model.canonicalize_sign(z_wf / nrm, problem)
