"""Seeded Monte-Carlo engine: Rayleigh channels, modulated data, AWGN
transmission and BER / complexity aggregation over an SNR sweep.

Reproducibility contract: every random stream is derived from
``(master_seed, snr_index, trial_index, purpose)`` through numpy's
``SeedSequence`` spawn keys, so results are bit-identical for a given seed
regardless of how trials are scheduled, and different precoders see exactly
the same channels, data and noise (common random numbers). Channels are
redrawn per trial; data and noise are redrawn per transmitted vector.
"""

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baselines, branch_bound, model
from .branch_bound import TrickConfig
from .errors import DegenerateInstance
from .model import Constellation, PrecodingProblem
from .version import __version__

PRECODERS = ("bb1", "exhaustive", "wf_quantized", "wf_infinite")

CSV_COLUMNS = ("snr_db", "ber", "bit_errors", "bits_sent", "mean_nodes", "mean_ms")

_PURPOSE_CHANNEL = 0
_PURPOSE_SYMBOLS = 1
_PURPOSE_NOISE = 2


def snr_db_to_n0(snr_db):
    """The operating SNR is ``1 / N0``, so ``N0 = 10^(-snr_db / 10)``."""
    return float(10.0 ** (-snr_db / 10.0))


def stream(master_seed, snr_index, trial_index, purpose):
    """Independent generator for one (SNR point, trial, purpose) triple."""
    ss = np.random.SeedSequence(master_seed,
                                spawn_key=(snr_index, trial_index, purpose))
    return np.random.default_rng(ss)


def generate_channel(rng, U, B):
    """U x B i.i.d. circularly symmetric complex Gaussian entries of unit
    variance (real and imaginary parts each N(0, 1/2))."""
    return np.sqrt(0.5) * (rng.standard_normal((U, B))
                           + 1j * rng.standard_normal((U, B)))


def generate_symbols(rng, constellation, U):
    """Draw one uniform constellation point per user.

    Returns ``(bits, s)`` where ``bits`` concatenates the per-user labels.
    """
    idx = rng.integers(0, constellation.points.size, size=U)
    return constellation.labels[idx].ravel(), constellation.points[idx]


def transmit_detect(x, beta, H, N0, rng, constellation):
    """Send ``x`` over ``y = H x + n`` and detect each user from ``beta y``.

    The receivers apply the precoder's exact scaling (genie-aided) and map
    to the nearest constellation point; returns the concatenated bit labels
    of the decisions. ``N0 = 0`` transmits noiselessly but still consumes
    the same amount of randomness, keeping streams aligned across SNRs.
    """
    U = H.shape[0]
    noise = np.sqrt(N0 / 2.0) * (rng.standard_normal(U)
                                 + 1j * rng.standard_normal(U))
    s_hat = beta * (H @ x + noise)
    return constellation.labels[constellation.nearest_index(s_hat)].ravel()


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One Monte-Carlo sweep: system size, SNR grid, sample counts, seed and
    precoder selection. ``tricks`` only affects the ``bb1`` precoder."""

    B: int
    U: int
    snr_db_points: tuple
    trials: int
    symbols_per_trial: int
    master_seed: int
    precoder: str = "bb1"
    tricks: TrickConfig = TrickConfig()
    constellation: Constellation = None

    def __post_init__(self):
        object.__setattr__(self, "snr_db_points",
                           tuple(float(p) for p in self.snr_db_points))
        if self.constellation is None:
            object.__setattr__(self, "constellation", Constellation.qpsk())
        if self.B < 1 or self.U < 1:
            raise ValueError("need B >= 1 and U >= 1")
        if self.trials < 1 or self.symbols_per_trial < 1:
            raise ValueError("need at least one trial and one vector per trial")
        if not self.snr_db_points or not all(math.isfinite(p) for p in self.snr_db_points):
            raise ValueError("need a nonempty finite SNR grid")
        if self.precoder not in PRECODERS:
            raise ValueError(f"unknown precoder '{self.precoder}'")
        if int(self.master_seed) < 0:
            raise ValueError("master_seed must be nonnegative")

    @property
    def bits_per_point(self):
        return (self.trials * self.symbols_per_trial * self.U
                * self.constellation.bits_per_symbol)


@dataclass(frozen=True)
class SnrPoint:
    """Aggregates for one SNR grid point. ``mean_nodes`` and
    ``mean_wall_time`` (seconds) are averaged per solved vector."""

    snr_db: float
    bit_errors: int
    bits_sent: int
    mean_nodes: float
    mean_wall_time: float

    @property
    def ber(self):
        return self.bit_errors / self.bits_sent


@dataclass(frozen=True, eq=False)
class SimResult:
    config: SimConfig
    points: tuple


def _run_trial(config, snr_index, trial_index, N0):
    rng_ch = stream(config.master_seed, snr_index, trial_index, _PURPOSE_CHANNEL)
    rng_sym = stream(config.master_seed, snr_index, trial_index, _PURPOSE_SYMBOLS)
    rng_noise = stream(config.master_seed, snr_index, trial_index, _PURPOSE_NOISE)
    H = generate_channel(rng_ch, config.U, config.B)
    const = config.constellation
    factor = None
    if config.precoder == "bb1":
        # the triangularization depends only on (H, N0); share it across
        # every data vector of the trial
        factor = branch_bound.factorize_channel(H, N0, config.tricks)
    errors = 0
    nodes = 0
    elapsed = 0.0
    for _ in range(config.symbols_per_trial):
        bits, s = generate_symbols(rng_sym, const, config.U)
        problem = PrecodingProblem(H, s, N0)
        t0 = time.perf_counter()
        if config.precoder == "bb1":
            res = branch_bound.bb1_solve(problem, config.tricks, factor=factor)
            x, beta, n = res.x, res.beta, res.stats.nodes_visited
        elif config.precoder == "exhaustive":
            res = baselines.exhaustive_solve(problem)
            x, beta, n = res.x, res.beta, res.stats.nodes_visited
        elif config.precoder == "wf_quantized":
            res = baselines.wf_quantized_precoder(problem)
            x, beta, n = res.x, res.beta, 0
        else:
            x, beta = baselines.wf_infinite_precoder(problem)
            n = 0
        elapsed += time.perf_counter() - t0
        nodes += n
        detected = transmit_detect(x, beta, H, N0, rng_noise, const)
        errors += int(np.count_nonzero(detected != bits))
    return errors, nodes, elapsed


def run_ber_sweep(config, jobs=1):
    """Run the sweep and return a :class:`SimResult`.

    ``jobs > 1`` distributes trials over a thread pool (the search kernel
    releases the GIL); aggregation always happens in trial order, so the
    result is identical for any job count.
    """
    points = []
    for si, snr_db in enumerate(config.snr_db_points):
        N0 = snr_db_to_n0(snr_db)
        try:
            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    rows = list(pool.map(
                        lambda ti: _run_trial(config, si, ti, N0),
                        range(config.trials)))
            else:
                rows = [_run_trial(config, si, ti, N0)
                        for ti in range(config.trials)]
        except DegenerateInstance as exc:
            raise DegenerateInstance(
                f"sweep aborted at snr_db={snr_db}: {exc}") from exc
        errors = sum(r[0] for r in rows)
        nodes = sum(r[1] for r in rows)
        elapsed = math.fsum(r[2] for r in rows)
        solves = config.trials * config.symbols_per_trial
        points.append(SnrPoint(snr_db=float(snr_db), bit_errors=errors,
                               bits_sent=config.bits_per_point,
                               mean_nodes=nodes / solves,
                               mean_wall_time=elapsed / solves))
    return SimResult(config=config, points=tuple(points))


def config_metadata(config):
    """Provenance dictionary embedded in every output file."""
    return {
        "version": __version__,
        "B": config.B,
        "U": config.U,
        "constellation": config.constellation.name,
        "snr_db_points": list(config.snr_db_points),
        "trials": config.trials,
        "symbols_per_trial": config.symbols_per_trial,
        "master_seed": int(config.master_seed),
        "precoder": config.precoder,
        "tricks": {
            "radius_init": config.tricks.radius_init,
            "sorted_qr": config.tricks.sorted_qr,
            "eigen_future": config.tricks.eigen_future,
            "preprune": config.tricks.preprune,
        },
    }


def write_csv(result, fh):
    """Write one row per SNR point, preceded by a '#'-prefixed JSON line
    carrying the full config and seed.

    All columns except ``mean_ms`` are deterministic for a given config and
    seed; ``mean_ms`` is measured wall time and varies run to run.
    """
    fh.write("# " + json.dumps(config_metadata(result.config), sort_keys=True) + "\n")
    fh.write(",".join(CSV_COLUMNS) + "\n")
    for p in result.points:
        fh.write(",".join([
            repr(float(p.snr_db)),
            repr(p.ber),
            str(p.bit_errors),
            str(p.bits_sent),
            repr(float(p.mean_nodes)),
            repr(float(p.mean_wall_time * 1e3)),
        ]) + "\n")


def to_json_dict(result):
    """JSON document mirroring the per-point results plus the config."""
    return {
        "config": config_metadata(result.config),
        "results": [
            {
                "snr_db": float(p.snr_db),
                "ber": p.ber,
                "bit_errors": p.bit_errors,
                "bits_sent": p.bits_sent,
                "mean_nodes": float(p.mean_nodes),
                "mean_ms": float(p.mean_wall_time * 1e3),
            }
            for p in result.points
        ],
    }
