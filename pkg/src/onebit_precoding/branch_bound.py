"""Depth-first branch-and-bound solver for constant-modulus precoding.

The fractional objective ``||R x||^2 / Re{x^H z}^2`` over the 1-bit alphabet
is minimized exactly by a quaternary tree search on the triangularized
problem. The search fixes the LAST vector entry first: a node at 1-based
level ``L`` has entries ``x_L .. x_B`` chosen (its partial symbol vector) and
branches over the four alphabet candidates for entry ``L - 1``. Because ``R``
is upper-triangular, rows ``L-1 .. B-1`` of ``R x`` are already final at such
a node, which gives every child the lower bound

    cost = (num_past + num_present [+ eigen future bound]) /
           (|den_past + den_present| + den_future_max)^2

valid for every completion below it. Children are explored best-first;
whenever a leaf beats the incumbent, the search radius shrinks, and any
node whose cost exceeds the current radius is pruned (strictly greater,
so exact ties are still explored and optimality is preserved).

Four accelerations can be toggled independently of each other:

* ``radius_init``  seeds the radius with the quantized Wiener-filter vector
  instead of +inf;
* ``sorted_qr``    triangularizes with column sorting so that low-gain
  columns are fixed near the root;
* ``eigen_future`` adds a spectral lower bound on the numerator mass of the
  still-open levels;
* ``preprune``     branches the root over half the alphabet only, since the
  objective is even under a global sign flip.

The best-first depth-first traversal with radius reduction is the core
algorithm and is always on. None of the toggles affects the returned
minimizer or value, only the node count.
"""

import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import linalg, model
from .errors import DegenerateInstance, SingularMatrix, ZeroCorrelation
from .linalg import EIGEN_TOL, SINGULARITY_TOL
from .model import PrecodeResult, SearchStats


@dataclass(frozen=True)
class TrickConfig:
    """Which of the optional accelerations to apply."""

    radius_init: bool = True
    sorted_qr: bool = True
    eigen_future: bool = True
    preprune: bool = True

    @classmethod
    def none(cls):
        return cls(False, False, False, False)


@dataclass(frozen=True, eq=False)
class ChannelFactor:
    """Triangularization of one (H, N0) pair, reusable across data vectors.

    ``lambda_min[k]`` is the smallest eigenvalue of the Gram matrix of the
    leading k x k block of ``R`` (zeros when the eigen bound is off), and
    ``diag_ok[k]`` says whether that block is safely invertible. Column ``k``
    of ``winv`` caches ``R[:k,:k]^{-1} R[:k,k]``; the spectral bound needs
    ``R[:k,:k]^{-1} rhs`` for four right-hand sides that differ only in the
    candidate point, and this column turns three of those solves into
    axpy updates.
    """

    R: np.ndarray
    perm: np.ndarray
    lambda_min: np.ndarray
    diag_ok: np.ndarray
    winv: np.ndarray


@dataclass(frozen=True, eq=False)
class TriangularizedProblem:
    """One instance in search coordinates.

    ``R`` is the (possibly column-sorted) triangular factor of the augmented
    channel, ``perm`` the forward column permutation (identity when sorting
    is off), and ``z`` the MRT vector in the same permuted order.
    ``mrt_quantized`` is the entrywise quantization of ``z`` onto the
    alphabet; ``den_future[k]`` pre-accumulates the largest achievable
    correlation mass of entries below level ``k``, which is exactly the sum
    of ``Re{mrt_quantized[l]^* z[l]}`` over ``l < k`` (each summand is >= 0
    by alphabet symmetry, so this prefix is nonnegative and nondecreasing).
    """

    R: np.ndarray
    perm: np.ndarray
    z: np.ndarray
    mrt_quantized: np.ndarray
    den_future: np.ndarray
    lambda_min: np.ndarray
    diag_ok: np.ndarray
    winv: np.ndarray
    alphabet: model.TransmitAlphabet


@dataclass(frozen=True, eq=False)
class SearchNode:
    """State of one partial symbol vector.

    ``lo`` is the 0-based position of the first fixed entry (``lo == B`` at
    the virtual root); the node sits at 1-based level ``lo + 1`` and branches
    over entry ``lo - 1``. ``partials[b]`` carries
    ``sum_{l >= lo} R[b, l] x_l`` for every still-open row ``b < lo``.
    """

    lo: int
    suffix: np.ndarray
    num_past: float
    den_past: float
    partials: np.ndarray


def factorize_channel(H, N0, config):
    """Triangularize the augmented channel once per (H, N0) pair."""
    Ht = model.augment_channel(H, N0)
    B = Ht.shape[1]
    if config.sorted_qr:
        _, R, perm = linalg.sorted_qr(Ht)
    else:
        _, R = linalg.qr_decompose(Ht)
        perm = np.arange(B)
    lam = np.zeros(B)
    if config.eigen_future:
        for k in range(1, B):
            blk = R[:k, :k]
            lam[k] = linalg.min_eigenvalue_hermitian(blk.conj().T @ blk)
    diag_ok = np.zeros(B, dtype=np.bool_)
    diag_ok[0] = True
    for k in range(1, B):
        diag_ok[k] = bool(diag_ok[k - 1]) and abs(R[k - 1, k - 1]) > SINGULARITY_TOL
    winv = np.zeros((B, B), dtype=np.complex128)
    if config.eigen_future:
        for k in range(1, B):
            if diag_ok[k] and lam[k] > EIGEN_TOL:
                winv[:k, k] = linalg.back_substitute(R[:k, :k], R[:k, k])
    return ChannelFactor(R=np.ascontiguousarray(R), perm=perm,
                         lambda_min=lam, diag_ok=diag_ok,
                         winv=np.ascontiguousarray(winv))


def prepare(problem, config, factor=None):
    """Build the search-coordinate view of an instance.

    A precomputed :class:`ChannelFactor` may be passed when many data
    vectors share one channel; it must come from the same (H, N0, config).
    """
    if factor is None:
        factor = factorize_channel(problem.H, problem.N0, config)
    z = np.ascontiguousarray(problem.z_mrt[factor.perm])
    alphabet = problem.alphabet
    idx = model.quantize_to_indices(z, alphabet)
    xq = alphabet.points[idx]
    corr = (xq.conj() * z).real
    den_future = np.concatenate(([0.0], np.cumsum(corr)[:-1]))
    return TriangularizedProblem(R=factor.R, perm=factor.perm, z=z,
                                 mrt_quantized=xq, den_future=den_future,
                                 lambda_min=factor.lambda_min,
                                 diag_ok=factor.diag_ok, winv=factor.winv,
                                 alphabet=alphabet)


def node_state(tp, suffix):
    """From-scratch :class:`SearchNode` for the given fixed entries.

    ``suffix`` holds alphabet indices for positions ``B - len(suffix)`` to
    ``B - 1`` in that order.
    """
    B = tp.R.shape[0]
    suffix = np.asarray(suffix, dtype=np.int64)
    lo = B - suffix.size
    if lo < 0:
        raise ValueError("suffix longer than the vector")
    x = tp.alphabet.points[suffix]
    num_past = float(np.sum(np.abs(tp.R[lo:, lo:] @ x) ** 2))
    den_past = float(np.sum((x.conj() * tp.z[lo:]).real))
    partials = tp.R[:lo, lo:] @ x
    return SearchNode(lo=lo, suffix=suffix, num_past=num_past,
                      den_past=den_past, partials=partials)


def extend_node(node, m, tp):
    """Node reached by fixing alphabet index ``m`` at the branching entry.

    Implements the incremental update the search kernel uses: one new
    present row enters the past numerator, one correlation term enters the
    past denominator, and the candidate's column rank-1 update lands on the
    remaining partial sums.
    """
    k = node.lo - 1
    if k < 0:
        raise ValueError("node is already a leaf")
    c = tp.alphabet.points[m]
    amp = tp.R[k, k] * c + node.partials[k]
    return SearchNode(
        lo=k,
        suffix=np.concatenate(([m], node.suffix)).astype(np.int64),
        num_past=node.num_past + float(abs(amp) ** 2),
        den_past=node.den_past + float((np.conj(c) * tp.z[k]).real),
        partials=node.partials[:k] + tp.R[:k, k] * c,
    )


@njit(cache=True, nogil=True)
def _eigen_future(R, lam, points, k, partial, c, scratch):
    # Right-hand side that the candidate and the fixed suffix push onto the
    # still-open rows 0 .. k-1.
    for b in range(k):
        scratch[b] = R[b, k] * c + partial[b]
    # Unconstrained minimizer of ||R[:k,:k] v + rhs||: v = -R^{-1} rhs. The
    # alphabet is symmetric, so the distance from the alphabet to v equals
    # the distance to -v and the sign of the substitution does not matter.
    for i in range(k - 1, -1, -1):
        acc = scratch[i]
        for j in range(i + 1, k):
            acc -= R[i, j] * scratch[j]
        scratch[i] = acc / R[i, i]
    dist2 = 0.0
    for b in range(k):
        v = scratch[b]
        best = 1e300
        for m in range(points.shape[0]):
            dr = points[m].real - v.real
            di = points[m].imag - v.imag
            d2 = dr * dr + di * di
            if d2 < best:
                best = d2
        dist2 += best
    return lam[k] * dist2


@njit(cache=True, nogil=True)
def _cost_eval(R, z, den_future, lam, diag_ok, points, k,
               num_past, den_past, partial, c, eigen_on, scratch):
    amp = R[k, k] * c + partial[k]
    n = num_past + amp.real * amp.real + amp.imag * amp.imag
    if eigen_on and k > 0 and lam[k] > EIGEN_TOL and diag_ok[k]:
        n += _eigen_future(R, lam, points, k, partial, c, scratch)
    d = abs(den_past + (c.conjugate() * z[k]).real) + den_future[k]
    if n == 0.0:
        return 0.0
    if d == 0.0:
        return np.inf
    return n / (d * d)


@njit(cache=True, nogil=True)
def _search(R, winv, z, den_future, lam, diag_ok, points, std_scale,
            eigen_on, preprune, rho, best_idx, has_inc):
    B = R.shape[0]
    x_idx = np.zeros(B, np.int64)
    partial = np.zeros(B, np.complex128)
    scratch = np.zeros(B, np.complex128)
    cand_m = np.zeros((B, 4), np.int64)
    cand_cost = np.zeros((B, 4), np.float64)
    cand_n = np.zeros(B, np.int64)
    cand_pos = np.zeros(B, np.int64)
    tmp_cost = np.zeros(4, np.float64)
    tmp_num = np.zeros(4, np.float64)
    tmp_den = np.zeros(4, np.float64)
    num_past = 0.0
    den_past = 0.0
    nodes = 0
    leaves = 0
    updates = 0
    max_drift = 0.0

    k = B - 1
    fresh = True
    while True:
        if fresh:
            # Enumerate and sort this level's children once; at the root the
            # sign symmetry makes the second half of the alphabet redundant.
            nc = 2 if (preprune and k == B - 1) else 4
            eig_level = eigen_on and k > 0 and lam[k] > EIGEN_TOL and diag_ok[k]
            need_eigen = False
            for m in range(nc):
                c = points[m]
                amp = R[k, k] * c + partial[k]
                n = num_past + amp.real * amp.real + amp.imag * amp.imag
                d = abs(den_past + (c.conjugate() * z[k]).real) + den_future[k]
                if n == 0.0:
                    cost = 0.0
                elif d == 0.0:
                    cost = np.inf
                else:
                    cost = n / (d * d)
                tmp_num[m] = n
                tmp_den[m] = d
                tmp_cost[m] = cost
                if eig_level and cost <= rho:
                    need_eigen = True
            if need_eigen:
                # The spectral term needs R[:k,:k]^{-1} (c R[:k,k] + partial).
                # Solve once for partial; each child then shifts the solution
                # by c times the cached column winv[:, k]. Children whose base
                # cost already exceeds the radius are pruned either way, so
                # tightening their bound would change nothing and is skipped.
                for i in range(k - 1, -1, -1):
                    acc = partial[i]
                    for j in range(i + 1, k):
                        acc -= R[i, j] * scratch[j]
                    scratch[i] = acc / R[i, i]
                for m in range(nc):
                    if tmp_cost[m] > rho:
                        continue
                    c = points[m]
                    dist2 = 0.0
                    if std_scale > 0.0:
                        # nearest point of {(+-a) + (+-a) j} splits per axis
                        for b in range(k):
                            v = scratch[b] + c * winv[b, k]
                            dr = abs(v.real) - std_scale
                            di = abs(v.imag) - std_scale
                            dist2 += dr * dr + di * di
                    else:
                        for b in range(k):
                            v = scratch[b] + c * winv[b, k]
                            best = 1e300
                            for mm in range(points.shape[0]):
                                dr = points[mm].real - v.real
                                di = points[mm].imag - v.imag
                                d2 = dr * dr + di * di
                                if d2 < best:
                                    best = d2
                            dist2 += best
                    n = tmp_num[m] + lam[k] * dist2
                    d = tmp_den[m]
                    if n == 0.0:
                        tmp_cost[m] = 0.0
                    elif d == 0.0:
                        tmp_cost[m] = np.inf
                    else:
                        tmp_cost[m] = n / (d * d)
            for m in range(nc):
                cost = tmp_cost[m]
                j = m
                while j > 0 and cand_cost[k, j - 1] > cost:
                    cand_cost[k, j] = cand_cost[k, j - 1]
                    cand_m[k, j] = cand_m[k, j - 1]
                    j -= 1
                cand_cost[k, j] = cost
                cand_m[k, j] = m
            nodes += nc
            cand_n[k] = nc
            cand_pos[k] = 0
            fresh = False
        descended = False
        while cand_pos[k] < cand_n[k]:
            i = cand_pos[k]
            cand_pos[k] += 1
            # Lazy radius re-check: the radius may have shrunk since this
            # list was built, and the list is sorted, so one exceedance
            # discards the whole remainder of the level.
            if cand_cost[k, i] > rho:
                cand_pos[k] = cand_n[k]
                break
            m = cand_m[k, i]
            c = points[m]
            x_idx[k] = m
            if k == 0:
                leaves += 1
                # Exact leaf objective, recomputed from scratch so that
                # incremental rounding can never leak into results.
                num = 0.0
                for b in range(B):
                    acc = 0.0 + 0.0j
                    for l in range(b, B):
                        acc += R[b, l] * points[x_idx[l]]
                    num += acc.real * acc.real + acc.imag * acc.imag
                corr = 0.0
                for l in range(B):
                    corr += (points[x_idx[l]].conjugate() * z[l]).real
                amp = R[0, 0] * c + partial[0]
                inc = num_past + amp.real * amp.real + amp.imag * amp.imag
                if num > 0.0:
                    drift = abs(inc - num) / num
                    if drift > max_drift:
                        max_drift = drift
                if corr != 0.0:
                    val = num / (corr * corr)
                    if val < rho:
                        rho = val
                        for l in range(B):
                            best_idx[l] = x_idx[l]
                        has_inc = True
                        updates += 1
            else:
                den_past += (c.conjugate() * z[k]).real
                amp = R[k, k] * c + partial[k]
                num_past += amp.real * amp.real + amp.imag * amp.imag
                for b in range(k):
                    partial[b] += R[b, k] * c
                k -= 1
                fresh = True
                descended = True
                break
        if descended:
            continue
        if k == B - 1:
            break
        # Backtrack: undo the parent's increments.
        k += 1
        c = points[x_idx[k]]
        for b in range(k):
            partial[b] -= R[b, k] * c
        amp = R[k, k] * c + partial[k]
        num_past -= amp.real * amp.real + amp.imag * amp.imag
        den_past -= (c.conjugate() * z[k]).real
    return rho, nodes, leaves, updates, has_inc, max_drift


def child_cost(node, point, tp, config):
    """Lower bound on the objective of every completion below ``point`` at
    the node's branching entry; exact at leaf level (up to the eigen term,
    which vanishes there)."""
    k = node.lo - 1
    if k < 0:
        raise ValueError("node is already a leaf")
    scratch = np.zeros(max(k, 1), dtype=np.complex128)
    return float(_cost_eval(tp.R, tp.z, tp.den_future, tp.lambda_min,
                            tp.diag_ok, tp.alphabet.points, k,
                            node.num_past, node.den_past,
                            np.ascontiguousarray(node.partials),
                            complex(point), bool(config.eigen_future), scratch))


def future_numerator_bound(point, node, tp, config):
    """Spectral lower bound on the numerator mass of the still-open levels.

    Returns 0 when branching at the deepest entry, when the trick is off,
    or when the leading block is (near) singular, so the bound is always
    safe to add.
    """
    k = node.lo - 1
    if (k <= 0 or not config.eigen_future
            or tp.lambda_min[k] <= EIGEN_TOL or not tp.diag_ok[k]):
        return 0.0
    scratch = np.zeros(k, dtype=np.complex128)
    return float(_eigen_future(tp.R, tp.lambda_min, tp.alphabet.points, k,
                               np.ascontiguousarray(node.partials),
                               complex(point), scratch))


def bb1_solve(problem, config=None, factor=None):
    """Exact minimizer of the fractional precoding objective.

    Runs the branch-and-bound search and returns a
    :class:`~onebit_precoding.model.PrecodeResult` whose ``x`` attains the
    global minimum of ``||H~ x||^2 / Re{x^H z_mrt}^2`` over the 1-bit
    alphabet, sign-canonicalized so ``beta > 0``.

    Parameters
    ----------
    problem : PrecodingProblem
    config : TrickConfig, optional
        Defaults to all accelerations on.
    factor : ChannelFactor, optional
        Reuse a triangularization across data vectors on the same channel.

    Raises
    ------
    DegenerateInstance
        If no alphabet vector has nonzero correlation with the MRT
        direction (then the objective is +inf everywhere).
    """
    t0 = time.perf_counter()
    if config is None:
        config = TrickConfig()
    tp = prepare(problem, config, factor)
    if tp.alphabet.size != 4:
        raise ValueError("the tree search expects the 4-point 1-bit alphabet")
    B = problem.B
    points = np.ascontiguousarray(tp.alphabet.points)
    rho = np.inf
    has_inc = False
    best_idx = np.zeros(B, dtype=np.int64)
    if config.radius_init:
        try:
            z_wf = model.wf_vector(problem.H, problem.s, problem.N0)
            wf_idx = model.quantize_to_indices(z_wf, tp.alphabet)
            rho = model.cmqp_objective(tp.alphabet.points[wf_idx],
                                       problem.H_tilde, problem.z_mrt)
            best_idx[:] = wf_idx[tp.perm]
            has_inc = True
        except (SingularMatrix, ZeroCorrelation):
            # keep the infinite radius; the search finds its own incumbent
            pass
    a = float(points[0].real)
    standard = (a > 0.0 and points[0] == a + a * 1j
                and points[1] == -a + a * 1j
                and points[2] == -points[0] and points[3] == -points[1])
    rho, nodes, leaves, updates, has_inc, drift = _search(
        tp.R, tp.winv, tp.z, tp.den_future, tp.lambda_min, tp.diag_ok, points,
        a if standard else 0.0,
        bool(config.eigen_future), bool(config.preprune),
        rho, best_idx, has_inc)
    if not has_inc:
        raise DegenerateInstance("no alphabet vector correlates with the MRT direction")
    x = np.empty(B, dtype=np.complex128)
    x[tp.perm] = points[best_idx]
    x, beta = model.canonicalize_sign(x, problem)
    stats = SearchStats(nodes_visited=int(nodes), leaves_reached=int(leaves),
                        radius_updates=int(updates),
                        wall_time=time.perf_counter() - t0,
                        leaf_value_drift=float(drift))
    return PrecodeResult(x=x, beta=float(beta),
                         qp_mse=model.qp_objective(x, beta, problem),
                         cmqp_value=float(rho), stats=stats)
