import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rectexpm.bench import (
    METHODS,
    REGIONS,
    ConvergenceRecord,
    SpectrumRegion,
    emit,
    gen_test_matrix,
    parse_csv,
    reference_expm,
    region_by_name,
    run_convergence,
)
from rectexpm.cli import EXIT_DOMAIN, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, load_config, main
from rectexpm.errors import ParameterDomainError
from rectexpm.linalg import mm_read, mm_write

HEADER = "method,n,N,k,alpha,d,resolvents,err2,wall_ns,matrix"


class TestRegions:
    @pytest.mark.parametrize(
        "name,im", [("omega1", (0.0, 0.0)), ("omega2", (-10.0, 10.0)), ("omega3", (-100.0, 100.0)),
                    ("omega4", (-1000.0, 1000.0))]
    )
    def test_presets(self, name, im):
        r = REGIONS[name]
        assert r.re_range == (-100.0, -5.0) and r.im_range == im

    def test_envelope(self):
        env = REGIONS["omega3"].envelope()
        assert (env.max_abs_im, env.min_abs_re, env.max_abs_re) == (100.0, 5.0, 100.0)

    @pytest.mark.parametrize("re,im", [((-1.0, 0.0), (0.0, 0.0)), ((-1.0, -2.0), (0.0, 0.0)), ((-2.0, -1.0), (1.0, 0.0))])
    def test_invalid(self, re, im):
        with pytest.raises(ParameterDomainError):
            SpectrumRegion(re, im)

    def test_unknown_name(self):
        with pytest.raises(ParameterDomainError):
            region_by_name("omega9")


class TestGenTestMatrix:
    def test_real_symmetric(self):
        tm = gen_test_matrix(4, "omega1", 7)
        assert tm.A.dtype == float
        np.testing.assert_array_equal(tm.A, tm.A.T)
        assert np.all(tm.D.real < 0) and not np.any(tm.D.imag)
        rec = (tm.Q * tm.D) @ tm.Q.T
        assert np.max(np.abs(rec - tm.A)) <= 1e-13
        np.testing.assert_allclose(tm.Q.T @ tm.Q, np.eye(4), atol=1e-14)

    def test_conjugate_pair(self):
        tm = gen_test_matrix(2, "omega2", 3)
        assert tm.A.dtype == float
        assert tm.D[1] == np.conj(tm.D[0])
        np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(tm.A)), np.sort_complex(tm.D), atol=1e-12)

    @pytest.mark.parametrize("name", ["omega2", "omega3", "omega4"])
    def test_paired_factors(self, name):
        tm = gen_test_matrix(10, name, 5)
        r = REGIONS[name]
        assert np.all((tm.D.real >= r.re_range[0]) & (tm.D.real <= r.re_range[1]))
        assert np.all((tm.D.imag >= r.im_range[0]) & (tm.D.imag <= r.im_range[1]))
        np.testing.assert_allclose(tm.Q.conj().T @ tm.Q, np.eye(10), atol=1e-13)
        rec = (tm.Q * tm.D) @ tm.Q.conj().T
        assert np.max(np.abs(rec - tm.A)) <= 1e-11 * np.max(np.abs(tm.A))

    def test_complex_mode(self):
        tm = gen_test_matrix(5, "omega3", 2, complex_mode=True)
        assert np.iscomplexobj(tm.A)
        rec = (tm.Q * tm.D) @ tm.Q.T
        assert np.max(np.abs(rec - tm.A)) <= 1e-12

    def test_deterministic(self):
        a, b = gen_test_matrix(20, "omega3", 11), gen_test_matrix(20, "omega3", 11)
        assert a.A.tobytes() == b.A.tobytes()
        assert not np.array_equal(a.A, gen_test_matrix(20, "omega3", 12).A)

    def test_odd_m_complex_region(self):
        with pytest.raises(ParameterDomainError, match="even"):
            gen_test_matrix(3, "omega2", 0)

    @pytest.mark.parametrize("m", [0, -1, 2.5])
    def test_bad_m(self, m):
        with pytest.raises(ParameterDomainError):
            gen_test_matrix(m, "omega1", 0)


class TestReference:
    def test_scalar(self):
        assert reference_expm(np.array([-1.0]), np.eye(1))[0, 0] == pytest.approx(math.exp(-1), rel=1e-15)

    def test_spd_result(self):
        tm = gen_test_matrix(4, "omega1", 7)
        E = reference_expm(tm.D, tm.Q)
        np.testing.assert_allclose(E, E.conj().T, atol=1e-16 * np.abs(E).max())
        w = np.linalg.eigvalsh(E)
        # eigensolver accuracy is relative to the largest eigenvalue
        np.testing.assert_allclose(np.sort(w), np.sort(np.exp(tm.D.real)), rtol=1e-10, atol=1e-16 * w.max())
        assert np.all(w > 0)

    def test_norm_of_normal(self):
        tm = gen_test_matrix(20, "omega1", 3)
        E = reference_expm(tm.D, tm.Q)
        assert np.linalg.norm(E, 2) == pytest.approx(math.exp(tm.D.real.max()), rel=1e-12)

    def test_accepts_diagonal_matrix(self):
        tm = gen_test_matrix(4, "omega1", 7)
        np.testing.assert_array_equal(reference_expm(np.diag(tm.D), tm.Q), reference_expm(tm.D, tm.Q))

    def test_paired_reference_is_real(self):
        tm = gen_test_matrix(8, "omega3", 1)
        E = reference_expm(tm.D, tm.Q)
        assert np.max(np.abs(E.imag)) <= 1e-14 * np.max(np.abs(E))


class TestRunConvergence:
    def test_accounting_and_decay(self):
        recs = run_convergence({"seed": 1, "methods": [{"method": "proposed", "n": [5, 10, 20, 40, 60]}]})
        assert [r.n for r in recs] == [5, 10, 20, 40, 60]
        for r in recs:
            assert r.method == "proposed" and r.matrix == "omega1"
            assert r.resolvents == (4 + r.k) * r.n + 2
            assert r.wall_ns == 0
        errs = [r.err2 for r in recs]
        assert errs[-1] <= 1e-11
        # strictly decreasing until the rounding floor
        assert errs[0] > errs[1] > errs[2]

    def test_n60_sanity(self):
        (r,) = run_convergence({"seed": 0, "methods": [{"method": "proposed", "n": 60}]})
        assert r.err2 <= 1e-10

    def test_k_sweep_accounting(self):
        cfg = {"seed": 0, "matrices": ["omega3"], "methods": [{"method": "proposed", "n": [40], "k": [1, 2, 4, 8, 16, 32]}]}
        recs = run_convergence(cfg)
        assert len(recs) == 6
        assert all(r.resolvents == (4 + r.k) * r.n + 2 for r in recs)
        assert all(a.alpha < b.alpha for a, b in zip(recs, recs[1:]))

    def test_all_methods(self):
        cfg = {
            "seed": 0,
            "m": 6,
            "matrices": ["omega2"],
            "methods": [
                {"method": "proposed", "n": 20},
                {"method": "talbot", "M": 32},
                {"method": "fixed_talbot", "M": 32},
                {"method": "laguerre_I", "N": 10},
                {"method": "de_I", "n": 20},
            ],
        }
        recs = run_convergence(cfg)
        assert [r.method for r in recs] == list(METHODS)
        by = {r.method: r for r in recs}
        assert by["talbot"].resolvents == 16
        assert by["laguerre_I"].resolvents == 20
        assert by["de_I"].resolvents == 4 * 20 + 2 and by["de_I"].N == 0
        assert all(r.err2 < 1e-6 for r in recs)

    def test_failure_is_nan_record(self):
        cfg = {"seed": 0, "m": 4, "methods": [{"method": "proposed", "n": [10, 20], "alpha": 1.0}]}
        recs = run_convergence(cfg)
        assert len(recs) == 2 and all(math.isnan(r.err2) for r in recs)

    def test_reserved_tag(self):
        with pytest.raises(ParameterDomainError, match="reserved"):
            run_convergence({"methods": [{"method": "tatsuoka_de", "n": 10}]})

    def test_unknown_method(self):
        with pytest.raises(ParameterDomainError):
            run_convergence({"methods": [{"method": "pade", "n": 10}]})

    def test_matrix_seed_offset(self):
        cfg = {"seed": 4, "m": 4, "matrices": ["omega1", "omega1"], "methods": [{"method": "proposed", "n": 10}]}
        a, b = run_convergence(cfg)
        assert a.err2 != b.err2

    def test_parallel_matches_serial(self):
        cfg = {"seed": 2, "m": 8, "matrices": ["omega1", "omega2"],
               "methods": [{"method": "proposed", "n": [10, 20]}, {"method": "talbot", "M": [16, 24]}]}
        assert run_convergence(cfg) == run_convergence({**cfg, "workers": 3})


@pytest.fixture
def records():
    return [
        ConvergenceRecord("proposed", 10, 40, 4.0, 0.1 + 1 / 3, 0.3, 82, 1.2345678901234567e-9, 0, "omega1"),
        ConvergenceRecord("talbot", 32, 0, math.nan, math.nan, math.nan, 16, math.inf, 0, "omega1"),
    ]


class TestEmit:
    def test_single_record(self, tmp_path, records):
        csv_path, script = emit(records[:1], tmp_path / "r.csv")
        lines = csv_path.read_text().splitlines()
        assert len(lines) == 2 and lines[0] == HEADER
        assert script.name == "r.plot.py"
        compile(script.read_text(), str(script), "exec")

    def test_roundtrip(self, tmp_path, records):
        csv_path, _ = emit(records, tmp_path / "r.csv")
        back = parse_csv(csv_path)
        assert back[0] == records[0]
        assert math.isnan(back[1].k) and back[1].err2 == math.inf

    def test_empty(self, tmp_path):
        with pytest.raises(ParameterDomainError):
            emit([], tmp_path / "r.csv")

    def test_io_error_names_path(self, tmp_path, records):
        with pytest.raises(OSError, match="missing"):
            emit(records, tmp_path / "missing" / "r.csv")


class TestCli:
    def test_params(self, capsys):
        assert main(["params", "--im", "100", "--re-min", "5", "--re-max", "5", "--n", "50"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "alpha = 106.623" in out and "N     = 200" in out and "resolvents = 402" in out

    def test_params_domain_error(self, capsys):
        code = main(["params", "--im", "100", "--re-min", "5", "--re-max", "5", "--alpha", "50"])
        assert code == EXIT_DOMAIN
        assert "parameter error" in capsys.readouterr().err

    def test_gen_and_compute(self, tmp_path):
        a, e, out = tmp_path / "a.mtx", tmp_path / "e.mtx", tmp_path / "x.mtx"
        assert main(["gen", "--m", "6", "--region", "omega2", "--seed", "3", "--out", str(a), "--eigs-out", str(e)]) == 0
        tm = gen_test_matrix(6, "omega2", 3)
        np.testing.assert_array_equal(mm_read(a), tm.A)
        np.testing.assert_array_equal(mm_read(e).ravel(), tm.D)
        code = main(["compute", "--matrix", str(a), "--out", str(out), "--n", "60",
                     "--im", "10", "--re-min", "5", "--re-max", "100"])
        assert code == EXIT_OK
        assert np.linalg.norm(mm_read(out) - reference_expm(tm.D, tm.Q), 2) <= 1e-10

    def test_compute_gershgorin_default(self, tmp_path):
        a, out = tmp_path / "a.mtx", tmp_path / "x.mtx"
        mm_write(a, np.array([[-5.0, 0.5], [0.5, -6.0]]))
        assert main(["compute", "--matrix", str(a), "--out", str(out), "--n", "40"]) == EXIT_OK
        from scipy.linalg import expm as sp_expm

        np.testing.assert_allclose(mm_read(out), sp_expm(np.array([[-5.0, 0.5], [0.5, -6.0]])), atol=1e-12)

    def test_compute_action_and_shift(self, tmp_path):
        A = np.diag([-1.0, -2.0, 3.0])
        a, b, out = tmp_path / "a.mtx", tmp_path / "b.mtx", tmp_path / "x.mtx"
        mm_write(a, A)
        mm_write(b, np.ones(3))
        args = ["compute", "--matrix", str(a), "--out", str(out), "--n", "60", "--shift", "5", "--action", str(b)]
        assert main(args) == EXIT_OK
        np.testing.assert_allclose(mm_read(out).ravel(), np.exp([-1.0, -2.0, 3.0]), rtol=1e-9)

    def test_compute_right_half_plane(self, tmp_path):
        a = tmp_path / "a.mtx"
        mm_write(a, np.diag([1.0, -2.0]))
        assert main(["compute", "--matrix", str(a), "--out", str(tmp_path / "x.mtx"), "--n", "30"]) == EXIT_DOMAIN

    def test_numerical_failure_exit(self, tmp_path, monkeypatch):
        import rectexpm.cli as cli
        from rectexpm.errors import NumericalFailure

        def boom(*a, **k):
            raise NumericalFailure("solve broke down")

        monkeypatch.setattr(cli, "expm", boom)
        a = tmp_path / "a.mtx"
        mm_write(a, -np.eye(2))
        code = main(["compute", "--matrix", str(a), "--out", str(tmp_path / "x.mtx"), "--n", "30"])
        assert code == EXIT_NUMERICAL

    def test_missing_file(self, tmp_path):
        code = main(["compute", "--matrix", str(tmp_path / "nope.mtx"), "--out", str(tmp_path / "x"), "--n", "10"])
        assert code == EXIT_IO

    def test_bench_json(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"m": 6, "methods": [{"method": "proposed", "n": [10, 20]}]}))
        out = tmp_path / "r.csv"
        assert main(["bench", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == EXIT_OK
        recs = parse_csv(out)
        assert len(recs) == 2 and (tmp_path / "r.plot.py").exists()

    def test_bench_toml(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('seed = 1\nm = 6\nmatrices = ["omega2"]\n\n[[methods]]\nmethod = "talbot"\nM = [16, 32]\n')
        assert load_config(cfg)["methods"][0]["M"] == [16, 32]
        out = tmp_path / "r.csv"
        assert main(["bench", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert [r.n for r in parse_csv(out)] == [16, 32]

    def test_bench_reserved_tag(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"methods": [{"method": "tatsuoka_de", "n": 10}]}))
        assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == EXIT_DOMAIN

    def test_bench_byte_identical(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"m": 8, "matrices": ["omega1", "omega3"],
                                   "methods": [{"method": "proposed", "n": [10, 30]},
                                               {"method": "fixed_talbot", "M": [16]}]}))
        outs = []
        for i, workers in enumerate(["1", "1", "4"]):
            out = tmp_path / f"r{i}.csv"
            assert main(["bench", "--config", str(cfg), "--out", str(out), "--seed", "5", "--workers", workers]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_bench_timing(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"m": 4, "methods": [{"method": "proposed", "n": 10}]}))
        out = tmp_path / "r.csv"
        assert main(["bench", "--config", str(cfg), "--out", str(out), "--timing"]) == EXIT_OK
        assert parse_csv(out)[0].wall_ns > 0

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "rectexpm.cli", "params", "--im", "0", "--re-min", "5",
                               "--re-max", "100", "--n", "20"], capture_output=True, text=True)
        assert proc.returncode == 0 and "alpha" in proc.stdout
