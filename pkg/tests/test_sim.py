import io
import json
import math

import numpy as np
import pytest

from onebit_precoding import (
    Constellation,
    SimConfig,
    exhaustive_visit_count,
    generate_channel,
    generate_symbols,
    run_ber_sweep,
    snr_db_to_n0,
    stream,
    to_json_dict,
    transmit_detect,
    write_csv,
)


class TestStreams:
    def test_snr_to_noise(self):
        assert snr_db_to_n0(0.0) == pytest.approx(1.0, rel=1e-15)
        assert snr_db_to_n0(10.0) == pytest.approx(0.1, rel=1e-15)
        assert snr_db_to_n0(-10.0) == pytest.approx(10.0, rel=1e-15)

    def test_reproducible(self):
        a = stream(7, 1, 2, 0).standard_normal(8)
        b = stream(7, 1, 2, 0).standard_normal(8)
        assert np.array_equal(a, b)

    def test_purposes_are_independent(self):
        draws = [stream(7, 1, 2, p).standard_normal(8) for p in range(3)]
        assert not np.array_equal(draws[0], draws[1])
        assert not np.array_equal(draws[1], draws[2])

    def test_channel_moments(self):
        rng = stream(0, 0, 0, 0)
        H = generate_channel(rng, 100, 1000)
        flat = H.ravel()
        assert abs(flat.mean()) <= 0.02
        assert np.mean(np.abs(flat) ** 2) == pytest.approx(1.0, abs=0.02)
        assert np.var(flat.real) == pytest.approx(0.5, abs=0.02)
        assert np.var(flat.imag) == pytest.approx(0.5, abs=0.02)

    def test_symbol_distribution_and_labels(self):
        rng = stream(1, 0, 0, 1)
        q = Constellation.qpsk()
        bits, s = generate_symbols(rng, q, 20000)
        assert bits.size == 40000
        for p in q.points:
            freq = np.mean(s == p)
            assert freq == pytest.approx(0.25, abs=0.01)
        # the emitted bits are exactly the labels of the emitted symbols
        assert np.array_equal(q.labels[q.nearest_index(s)].ravel(), bits)


class TestTransmitDetect:
    def test_noiseless_is_error_free(self):
        rng_data = np.random.default_rng(90)
        q = Constellation.qpsk()
        for _ in range(20):
            U = int(rng_data.integers(1, 6))
            bits, s = generate_symbols(rng_data, q, U)
            H = np.eye(U)
            detected = transmit_detect(s, 1.0, H, 0.0, np.random.default_rng(0), q)
            assert np.array_equal(detected, bits)

    def test_sign_flipped_precoder_is_equivalent(self):
        # (x, beta) and (-x, -beta) produce the same received signal sample
        # by sample, with or without noise
        q = Constellation.qpsk()
        rng_data = np.random.default_rng(91)
        bits, s = generate_symbols(rng_data, q, 4)
        H = generate_channel(np.random.default_rng(92), 4, 4)
        x = np.linalg.solve(H, s)
        for N0 in (0.0, 0.3):
            a = transmit_detect(x, 1.0, H, N0, np.random.default_rng(5), q)
            b = transmit_detect(-x, -1.0, H, N0, np.random.default_rng(5), q)
            assert np.array_equal(a, b)

    def test_noise_stream_consumed_at_zero_noise(self):
        # the same generator must land in the same state whether or not the
        # point is noiseless, so SNR grids stay comparable
        q = Constellation.qpsk()
        s = q.points[:2]
        rng = np.random.default_rng(93)
        transmit_detect(s, 1.0, np.eye(2), 0.0, rng, q)
        after_zero = rng.standard_normal()
        rng = np.random.default_rng(93)
        transmit_detect(s, 1.0, np.eye(2), 0.7, rng, q)
        after_noisy = rng.standard_normal()
        assert after_zero == after_noisy

    def test_awgn_ber_matches_qfunction(self):
        # genie-scaled identity channel: each user sees s_u + n with
        # n ~ CN(0, N0), so the per-bit error rate is Q(1/sqrt(N0))
        q = Constellation.qpsk()
        N0 = 0.5
        U = 200
        rounds = 500
        rng_sym = stream(11, 0, 0, 1)
        rng_noise = stream(11, 0, 0, 2)
        H = np.eye(U)
        errors = 0
        total = 0
        for _ in range(rounds):
            bits, s = generate_symbols(rng_sym, q, U)
            detected = transmit_detect(s, 1.0, H, N0, rng_noise, q)
            errors += int(np.count_nonzero(detected != bits))
            total += bits.size
        assert total == 200000
        expected = 0.5 * math.erfc(math.sqrt(1.0 / N0) / math.sqrt(2.0))
        assert errors / total == pytest.approx(expected, abs=0.003)


class TestSweep:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SimConfig(B=0, U=1, snr_db_points=(0,), trials=1,
                      symbols_per_trial=1, master_seed=0)
        with pytest.raises(ValueError):
            SimConfig(B=2, U=1, snr_db_points=(), trials=1,
                      symbols_per_trial=1, master_seed=0)
        with pytest.raises(ValueError):
            SimConfig(B=2, U=1, snr_db_points=(0,), trials=0,
                      symbols_per_trial=1, master_seed=0)
        with pytest.raises(ValueError):
            SimConfig(B=2, U=1, snr_db_points=(0,), trials=1,
                      symbols_per_trial=1, master_seed=0, precoder="zf")
        with pytest.raises(ValueError):
            SimConfig(B=2, U=1, snr_db_points=(0,), trials=1,
                      symbols_per_trial=1, master_seed=-3)

    def test_bits_per_point(self):
        cfg = SimConfig(B=4, U=3, snr_db_points=(0,), trials=5,
                        symbols_per_trial=7, master_seed=0)
        assert cfg.bits_per_point == 5 * 7 * 3 * 2

    def test_deterministic_across_runs_and_jobs(self):
        cfg = SimConfig(B=4, U=2, snr_db_points=(0.0, 6.0), trials=6,
                        symbols_per_trial=10, master_seed=42)
        results = [run_ber_sweep(cfg, jobs=j) for j in (1, 1, 4)]
        for other in results[1:]:
            for a, b in zip(results[0].points, other.points):
                assert a.snr_db == b.snr_db
                assert a.bit_errors == b.bit_errors
                assert a.bits_sent == b.bits_sent
                assert a.mean_nodes == b.mean_nodes

    def test_optimal_precoders_agree_bitwise(self):
        # the tree search and the exhaustive oracle solve the same instances
        # on common random numbers, so every detected bit matches
        common = dict(B=3, U=2, snr_db_points=(0.0, 6.0), trials=8,
                      symbols_per_trial=10, master_seed=9)
        a = run_ber_sweep(SimConfig(precoder="bb1", **common))
        b = run_ber_sweep(SimConfig(precoder="exhaustive", **common))
        for pa, pb in zip(a.points, b.points):
            assert pa.bit_errors == pb.bit_errors

    def test_exhaustive_node_count_is_exact(self):
        cfg = SimConfig(B=3, U=2, snr_db_points=(4.0,), trials=3,
                        symbols_per_trial=5, master_seed=1,
                        precoder="exhaustive")
        res = run_ber_sweep(cfg)
        assert res.points[0].mean_nodes == float(exhaustive_visit_count(3))

    def test_linear_precoder_runs(self):
        cfg = SimConfig(B=4, U=2, snr_db_points=(2.0,), trials=3,
                        symbols_per_trial=5, master_seed=2,
                        precoder="wf_infinite")
        res = run_ber_sweep(cfg)
        assert res.points[0].mean_nodes == 0.0
        assert 0 <= res.points[0].bit_errors <= res.points[0].bits_sent


class TestOutputs:
    @staticmethod
    def _result():
        cfg = SimConfig(B=3, U=2, snr_db_points=(0.0, 4.0), trials=2,
                        symbols_per_trial=5, master_seed=3)
        return run_ber_sweep(cfg)

    def test_csv_shape(self):
        res = self._result()
        buf = io.StringIO()
        write_csv(res, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("# {")
        meta = json.loads(lines[0][2:])
        assert meta["master_seed"] == 3
        assert meta["precoder"] == "bb1"
        assert lines[1] == "snr_db,ber,bit_errors,bits_sent,mean_nodes,mean_ms"
        assert len(lines) == 2 + 2
        row = lines[2].split(",")
        assert float(row[0]) == 0.0
        assert float(row[1]) == int(row[2]) / int(row[3])

    def test_json_shape(self):
        res = self._result()
        doc = to_json_dict(res)
        assert doc["config"]["B"] == 3
        assert len(doc["results"]) == 2
        for entry in doc["results"]:
            assert entry["ber"] == entry["bit_errors"] / entry["bits_sent"]
            assert entry["mean_ms"] >= 0.0
        json.dumps(doc)  # fully serializable
