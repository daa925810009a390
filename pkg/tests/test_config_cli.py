import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cadlag_stable import (
    ConfigError,
    ExperimentConfig,
    ParetoSumMarginals,
    TailModel,
    emit_reports,
    load_config,
    map_replicates,
    parse_config,
    run_experiment,
)
from cadlag_stable.cli import main

PARETO = TailModel("pareto", 1.5, 1.0)


class TestConfig:
    @settings(max_examples=100, deadline=None)
    @given(
        alpha=st.floats(1.01, 1.99),
        n=st.integers(1, 10**6),
        seed=st.integers(0, 2**63),
        times=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5),
        experiment=st.sampled_from(["partial_sum", "lepage", "renewal_reward"]),
    )
    def test_round_trip(self, alpha, n, seed, times, experiment):
        cfg = parse_config({"alpha": alpha, "n": n, "seed": seed, "times": times, "experiment": experiment})
        again = parse_config(cfg.serialize())
        assert again == cfg
        assert again.digest() == cfg.digest()

    def test_text_with_comments(self):
        cfg = parse_config("# desk run\nalpha = 1.3  # heavier\n\nreplicates=50\n")
        assert (cfg.alpha, cfg.replicates) == (1.3, 50)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            parse_config("alpah = 1.5\nbogus = 2")
        assert info.value.keys == ("alpah", "bogus")

    def test_bad_values_name_keys(self):
        with pytest.raises(ConfigError) as info:
            parse_config("alpha = 2.5\nreplicates = 0\nreward = gamma:2")
        assert set(info.value.keys) == {"alpha", "replicates", "reward"}
        with pytest.raises(ConfigError) as info:
            parse_config("n = many")
        assert info.value.keys == ("n",)

    def test_missing_equals(self):
        with pytest.raises(ConfigError):
            parse_config("alpha 1.5")

    def test_digest_ignores_execution_settings(self):
        base = ExperimentConfig()
        assert base.with_overrides({"workers": "8", "output_dir": "elsewhere"}).digest() == base.digest()
        assert base.with_overrides({"seed": "1"}).digest() != base.digest()

    def test_load_config(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("experiment = lepage\nK = 500\n")
        cfg = load_config(p)
        assert cfg.experiment == "lepage" and cfg.K == 500


class TestParallel:
    def test_worker_invariance(self):
        fn = ParetoSumMarginals(PARETO, 200, (0.5, 1.0))
        one = map_replicates(fn, 3, 37, workers=1)
        four = map_replicates(fn, 3, 37, workers=4)
        np.testing.assert_array_equal(one, four)

    def test_stream_offset(self):
        fn = ParetoSumMarginals(PARETO, 50, (1.0,))
        full = map_replicates(fn, 3, 20)
        np.testing.assert_array_equal(map_replicates(fn, 3, 10, stream_offset=10), full[10:])


def _cfg(tmp_path, **kw):
    pairs = {"output_dir": str(tmp_path)}
    pairs.update({k: str(v) for k, v in kw.items()})
    return parse_config(pairs)


class TestRunner:
    def test_constants(self, tmp_path):
        bundle = run_experiment(_cfg(tmp_path))
        assert bundle.passed
        rows = dict((r[0], r[1]) for r in bundle.tables["constants"][1])
        assert float(rows["c_alpha_pow"]) == pytest.approx(math.sqrt(2 * math.pi), abs=1e-10)
        assert emit_reports(bundle) == 0
        text = (tmp_path / "summary.csv").read_text()
        assert text.startswith(f"# config_sha256={bundle.config_echo.digest()} version=0.1.0 experiment=constants")
        assert parse_config((tmp_path / "config.txt").read_text()) == bundle.config_echo

    def test_failure_exit_code(self, tmp_path):
        bundle = run_experiment(_cfg(tmp_path, experiment="partial_sum", n=50, replicates=200))
        assert not bundle.passed
        assert emit_reports(bundle) == 1

    def test_unwritable_output(self, tmp_path):
        bundle = run_experiment(_cfg(tmp_path))
        blocker = tmp_path / "file"
        blocker.write_text("x")
        bundle.config_echo = bundle.config_echo.with_overrides({"output_dir": str(blocker / "sub")})
        assert emit_reports(bundle) == 3

    def test_pareto_sum_needs_indicator(self, tmp_path):
        with pytest.raises(ConfigError):
            run_experiment(_cfg(tmp_path, experiment="pareto_sum", spectral="constant_one"))

    @pytest.mark.parametrize(
        "experiment, extra",
        [
            ("partial_sum", {"n": 300, "replicates": 300}),
            ("lepage", {"n": 300, "K": 300, "replicates": 200, "tail_tol": 5.0}),
            ("exceedance", {"n": 300, "replicates": 200}),
            ("negligibility", {"n": 300, "replicates": 200}),
            ("renewal_reward", {"T": 300, "replicates": 100}),
        ],
    )
    def test_worker_count_invariance(self, tmp_path, experiment, extra):
        outs = []
        for workers in (1, 3):
            d = tmp_path / f"w{workers}"
            bundle = run_experiment(_cfg(d, experiment=experiment, workers=workers, seed=11, **extra))
            emit_reports(bundle)
            outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
        assert outs[0].keys() == outs[1].keys() and len(outs[0]) >= 2
        assert outs[0] == outs[1]


class TestMain:
    def test_constants(self, tmp_path, capsys):
        assert main(["constants", "--out", str(tmp_path)]) == 0
        assert "PASS  c_alpha_pow" in capsys.readouterr().out
        assert (tmp_path / "constants.csv").exists()

    def test_config_error(self, tmp_path, capsys):
        assert main(["constants", "--out", str(tmp_path), "--set", "alpha=2.5"]) == 2
        assert "alpha" in capsys.readouterr().err

    def test_bad_set_syntax(self, tmp_path):
        assert main(["constants", "--out", str(tmp_path), "--set", "alpha"]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.cfg")]) == 3

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["constants", "--out", str(blocker / "sub")]) == 3

    def test_counterexamples(self, tmp_path, capsys):
        assert main(["counterexamples", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "levy_j1_not_uniform" in out and "m1_mean_sup" in out

    def test_lepage_truncation_failure(self, tmp_path):
        code = main(["lepage", "--out", str(tmp_path), "--set", "K=2", "--set", "tail_tol=0.01",
                     "--set", "replicates=5"])
        assert code == 1

    def test_simulate_from_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"experiment = exceedance\nn = 200\nreplicates = 100\noutput_dir = {tmp_path / 'o'}\n")
        assert main(["simulate", "--config", str(cfg)]) in (0, 1)
        assert Path(tmp_path / "o" / "summary.csv").exists()
