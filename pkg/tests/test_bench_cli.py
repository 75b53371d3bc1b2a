import csv

import numpy as np
import pytest

from loclets.bench import (
    BENCH_HEADER,
    ENTROPY_HEADER,
    NOISE_HEADER,
    SignalSpec,
    add_noise,
    generate_signal,
    mix_seed,
    resolve_graph,
    run_denoise_benchmark,
    run_entropy_scan,
    run_noise_estimation,
)
from loclets.cli import main
from loclets.denoise import snr_db
from loclets.graph import DenseCapError, dense_eigendecomposition, laplacian, load_dataset
from loclets.spectrum import partition_entropy


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def table(rows, header):
    return [dict(zip(header, r)) for r in rows]


@pytest.fixture(scope="module")
def minnesota():
    L = laplacian(load_dataset("minnesota"))
    return L, dense_eigendecomposition(L)


@pytest.fixture(scope="module")
def bench_rows(swissroll):
    _, L, eig = swissroll
    rows = run_denoise_benchmark(L, eig, [SignalSpec(501, 550)], [0.015], K=22, reps=10)
    return {r["method"]: r for r in table(rows, BENCH_HEADER)}


class TestSeeds:
    def test_mix_seed(self):
        assert mix_seed(0, 1, 2) == mix_seed(0, 1, 2)
        seeds = {mix_seed(0, a, b) for a in range(20) for b in range(20)}
        assert len(seeds) == 400
        assert mix_seed(0, 1, 2) != mix_seed(0, 2, 1)
        assert 0 <= mix_seed(2**64 - 1, 2**63) < 2**64


class TestSignals:
    def test_constant_signal(self, small):
        g, L, eig = small
        assert g.is_connected()
        f = generate_signal(eig, SignalSpec(L.n, L.n))
        assert np.linalg.norm(f) == pytest.approx(1.0)
        np.testing.assert_allclose(f, f[0], atol=1e-12)

    def test_range_orthogonality(self, small):
        _, L, eig = small
        f = generate_signal(eig, SignalSpec(1, 2, seed=4))
        coef = eig.eigenvectors.T @ f
        assert np.abs(coef[2:]).max() <= 1e-12
        assert np.linalg.norm(f) == pytest.approx(1.0)

    def test_covering_interval_projection(self, small):
        _, L, eig = small
        lam = eig.eigenvalues
        f = generate_signal(eig, SignalSpec(40, 60, seed=2))
        # smallest closed interval covering the eigenvalues of f
        m = eig.interval_mask(lam[59], lam[39], closed=True)
        assert np.linalg.norm(eig.project(m, f) - f) <= 1e-12

    def test_unnormalized(self, small):
        _, _, eig = small
        f = generate_signal(eig, SignalSpec(3, 30, seed=1, unit_norm=False))
        assert np.linalg.norm(f) != pytest.approx(1.0)

    @pytest.mark.parametrize("spec", [SignalSpec(0, 3), SignalSpec(5, 4), SignalSpec(1, 201)])
    def test_bad_range(self, small, spec):
        with pytest.raises(ValueError):
            generate_signal(small[2], spec)

    def test_parse(self):
        s = SignalSpec.parse("f951-1000", seed=3)
        assert (s.i, s.j, s.seed, s.label) == (951, 1000, 3, "f951-1000")
        assert SignalSpec.parse("501-550").i == 501
        with pytest.raises(ValueError):
            SignalSpec.parse("501:550")


class TestNoise:
    def test_zero_sigma(self, rng):
        f = rng.standard_normal(30)
        np.testing.assert_array_equal(add_noise(f, 0.0, 1), f)

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            add_noise(np.ones(3), -0.1)

    def test_deterministic(self):
        np.testing.assert_array_equal(add_noise(np.zeros(10), 1.0, 5), add_noise(np.zeros(10), 1.0, 5))

    def test_snr_in_expectation(self, small):
        _, L, eig = small
        f = generate_signal(eig, SignalSpec(10, 20))
        for sigma in (0.005, 0.05, 0.2):
            got = np.mean([snr_db(f, add_noise(f, sigma, s)) for s in range(10)])
            assert got == pytest.approx(10 * np.log10(1.0 / (L.n * sigma**2)), abs=1.0)

    def test_swissroll_snr_in(self, swissroll):
        # reported input SNR for f951-1000 at sigma 0.005 is about 16.2 dB
        _, L, eig = swissroll
        f = generate_signal(eig, SignalSpec(951, 1000))
        got = np.mean([snr_db(f, add_noise(f, 0.005, s)) for s in range(10)])
        assert got == pytest.approx(16.2, abs=0.5)


class TestNoiseEstimation:
    def test_row_count_and_header(self, small, tmp_path):
        _, L, eig = small
        out = tmp_path / "noise.csv"
        rows = run_noise_estimation(L, eig, SignalSpec(150, 170), [0.01, 0.1], [5, 10, 20],
                                    [1, 2], reps=3, N=100, n_H=10, out=out)
        assert len(rows) == 2 * 3 * 2 * 3
        got = read_csv(out)
        assert list(got[0]) == NOISE_HEADER
        assert len(got) == len(rows)

    def test_reps_precondition(self, small):
        _, L, eig = small
        with pytest.raises(ValueError):
            run_noise_estimation(L, eig, SignalSpec(1, 2), [0.1], [5], [1], reps=0)

    def test_minnesota_median(self, minnesota):
        L, eig = minnesota
        rows = table(run_noise_estimation(L, eig, SignalSpec(1343, 1392), [0.01], [5, 10], [1],
                                          reps=10), NOISE_HEADER)
        for K in (5, 10):
            est = np.array([r["sigma_med"] for r in rows if r["K"] == K])
            assert np.sum((est >= 0.005) & (est <= 0.015)) >= 8, (K, est)

    def test_low_K_control_biased_high(self, minnesota):
        L, eig = minnesota
        rows = table(run_noise_estimation(L, eig, SignalSpec(1343, 1392), [0.01], [1, 2], [1],
                                          reps=10), NOISE_HEADER)
        est = np.array([r["sigma_med"] for r in rows])
        assert np.all(est >= 0.015), est


class TestDenoiseBenchmark:

    def test_snr_in_row(self, swissroll, bench_rows):
        _, L, eig = swissroll
        f = generate_signal(eig, SignalSpec(501, 550))
        snr = [snr_db(f, add_noise(f, 0.015, mix_seed(0, 2, 501, 550, 0, rep))) for rep in range(10)]
        row = bench_rows["SNR_in"]
        assert row["best_snr"] == pytest.approx(max(snr), abs=1e-12)
        assert row["mean_snr"] == pytest.approx(np.mean(snr), abs=1e-12)

    def test_denoising_helps(self, bench_rows):
        s_in = bench_rows["SNR_in"]["mean_snr"]
        for m in ("PF", "LLet", "LLet+PF"):
            assert bench_rows[m]["mean_snr"] > s_in
            assert bench_rows[m]["best_snr"] >= bench_rows[m]["mean_snr"]

    def test_reported_means(self, bench_rows):
        # reported: mu_LLet+PF about 13.4 dB, mu_PF about 9.5 dB, LLet+PF ahead
        mu_lp = bench_rows["LLet+PF"]["mean_snr"]
        mu_pf = bench_rows["PF"]["mean_snr"]
        assert mu_lp > mu_pf
        assert mu_lp == pytest.approx(13.398, abs=1.5), bench_rows
        assert mu_pf == pytest.approx(9.540, abs=1.5), bench_rows

    def test_needs_dense_oracle(self, small):
        _, L, _ = small
        with pytest.raises(DenseCapError):
            run_denoise_benchmark(L, None, [SignalSpec(1, 2)], [0.1])

    def test_method_subset(self, small):
        _, L, eig = small
        rows = run_denoise_benchmark(L, eig, [SignalSpec(150, 170)], [0.05], K=8, reps=2,
                                     methods=("PF",), N=100, n_H=10)
        assert [r[0] for r in rows] == ["SNR_in", "PF"]


class TestEntropyScan:
    def test_single_interval_entropy_zero(self, small):
        _, L, eig = small
        rows = table(run_entropy_scan(L, [1, 5, 10], N=100, n_H=10, eig=eig), ENTROPY_HEADER)
        assert rows[0]["entropy"] == 0.0
        assert partition_entropy([L.n]) == 0.0
        assert all(r["mre_kind"] == "exact" for r in rows)
        assert sum(r["elbow"] for r in rows) == 1

    def test_mre_increases(self, small, swissroll):
        for _, L, eig in (small, swissroll):
            rows = table(run_entropy_scan(L, [5, 10, 20, 40], eig=eig), ENTROPY_HEADER)
            assert np.all(np.diff([r["mre"] for r in rows]) > 0)

    def test_proxy_without_oracle(self, small):
        rows = table(run_entropy_scan(small[1], [5, 10, 15], N=100, n_H=10), ENTROPY_HEADER)
        assert all(r["mre_kind"] == "proxy" for r in rows)

    def test_flat_beyond_elbow(self, minnesota):
        L, _ = minnesota
        rows = table(run_entropy_scan(L, list(range(5, 55, 5))), ENTROPY_HEADER)
        E = np.array([r["entropy"] for r in rows])
        e = [r["elbow"] for r in rows].index(1)
        gain = np.diff(E) / E[:-1]
        assert np.all(gain[e:] < 0.05)


class TestCLI:
    args = ["--matrix", "swissroll:200,8", "--N", "100", "--n-H", "10"]

    def test_load(self, capsys):
        assert main(["load", *self.args]) == 0
        out = capsys.readouterr().out
        assert "n=200" in out
        assert "connected=True" in out

    def test_load_matrix_market(self, tmp_path, capsys):
        p = tmp_path / "g.mtx"
        p.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 1.0\n3 2 2.0\n")
        assert main(["load", "--matrix", str(p)]) == 0
        assert "edges=2" in capsys.readouterr().out

    def test_gen_signal_and_denoise(self, tmp_path, capsys):
        clean, noisy, out = tmp_path / "f.txt", tmp_path / "g.txt", tmp_path / "h.txt"
        assert main(["gen-signal", *self.args, "--signal", "150-170", "--out", str(clean)]) == 0
        assert main(["gen-signal", *self.args, "--signal", "150-170", "--sigma", "0.02",
                     "--out", str(noisy)]) == 0
        f, g = np.loadtxt(clean), np.loadtxt(noisy)
        assert f.shape == (200,) and np.linalg.norm(f) == pytest.approx(1.0)
        assert main(["denoise", *self.args, "--K", "10", "--input", str(noisy),
                     "--clean", str(clean), "--t1", "0.02", "--t2", "0.05", "--out", str(out)]) == 0
        err = capsys.readouterr().err
        assert "snr_out=" in err
        assert snr_db(f, np.loadtxt(out)) > snr_db(f, g)

    def test_estimate_noise(self, tmp_path):
        out = tmp_path / "n.csv"
        assert main(["estimate-noise", *self.args, "--signal", "150-170", "--sigma", "0.01",
                     "--K", "5,10", "--r", "1", "--reps", "2", "--out", str(out)]) == 0
        assert len(read_csv(out)) == 2 * 1 * 2

    def test_entropy_scan_stdout(self, capsys):
        assert main(["entropy-scan", *self.args, "--K-grid", "5,10,15"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(ENTROPY_HEADER)
        assert len(lines) == 4

    def test_bench_byte_identical(self, tmp_path):
        cmd = ["bench", *self.args, "--K", "8", "--signals", "150-170", "--sigma", "0.02",
               "--reps", "2"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main([*cmd, "--out", str(a)]) == 0
        assert main([*cmd, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(read_csv(a)) == 4
        assert main([*cmd[:-2], "--reps", "2", "--seed", "1", "--out", str(b)]) == 0
        assert a.read_bytes() != b.read_bytes()

    @pytest.mark.parametrize("argv", [
        ["load", "--matrix", "/nonexistent/graph.mtx"],
        ["gen-signal", "--matrix", "swissroll:50,5", "--signal", "0-3"],
        ["bench", "--matrix", "swissroll:50,5", "--signals", "1-2", "--sigma", "0.1", "--reps", "0"],
    ])
    def test_error_exit_code(self, argv, capsys):
        assert main(argv) == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_bad_matrix_market_diagnostic(self, tmp_path, capsys):
        p = tmp_path / "bad.mtx"
        p.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 1\n4 1 1.0\n")
        assert main(["load", "--matrix", str(p)]) == 1
        assert f"{p}:3" in capsys.readouterr().err

    def test_resolve_graph(self):
        assert resolve_graph("swissroll:120,6").n == 120
