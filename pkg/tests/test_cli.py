import json

import pytest
from click.testing import CliRunner

from ellipdiff.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(main, list(args), env=env or {},
                         catch_exceptions=False)


class TestExitCodes:
    def test_build_pass_is_zero(self, runner):
        res = invoke(runner, "build", "special", "--rank", "1")
        assert res.exit_code == 0
        assert json.loads(res.output)["passed"]

    def test_missing_file_is_usage_error(self, runner):
        res = invoke(runner, "check-consistency", "/nonexistent.json")
        assert res.exit_code == 2

    def test_bad_option_is_usage_error(self, runner):
        res = invoke(runner, "build", "special", "--omega1", "nonsense")
        assert res.exit_code == 2

    def test_verification_failure_is_one(self, runner, tmp_path):
        res = invoke(runner, "build", "special", "--rank", "1")
        pair = json.loads(res.output)["pair"]
        pair["A"] = {"atom": "const", "c": [1.0, 0.0]}  # schema break
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(pair))
        res2 = invoke(runner, "check-consistency", str(bad))
        assert res2.exit_code == 2  # malformed matrix JSON -> schema error

    def test_corrupted_pair_exits_one(self, runner, tmp_path):
        res = invoke(runner, "build", "special", "--rank", "2")
        pair = json.loads(res.output)["pair"]
        pair["A"]["matrix"][0][0] = {"atom": "const", "c": [1.07, 0.0]}
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(pair))
        res2 = invoke(runner, "check-consistency", str(bad))
        assert res2.exit_code == 1
        assert not json.loads(res2.output)["passed"]


class TestSubcommands:
    def test_roundtrip_build_check(self, runner, tmp_path):
        out = tmp_path / "pair.json"
        res = invoke(runner, "build", "special", "--rank", "2",
                     "--out", str(out))
        assert res.exit_code == 0
        pair = json.loads(out.read_text())["pair"]
        pair_file = tmp_path / "only.json"
        pair_file.write_text(json.dumps(pair))
        res2 = invoke(runner, "check-consistency", str(pair_file))
        assert res2.exit_code == 0

    def test_reduce_synthesized(self, runner):
        res = invoke(runner, "reduce", "--synthesize-rank", "2",
                     "--order", "30")
        assert res.exit_code == 0
        body = json.loads(res.output)
        assert body["relation_residual"] < 1e-9

    def test_continue_rank1(self, runner):
        res = invoke(runner, "continue", "--kind", "rank1-product",
                     "--point", "1,0")
        assert res.exit_code == 0
        assert json.loads(res.output)["max_oracle_error"] < 1e-10

    def test_classify_emit_table(self, runner):
        res = invoke(runner, "classify", "--emit-table", "--per-class", "1")
        assert res.exit_code == 0
        body = json.loads(res.output)
        assert len(body["table"]) == 5

    def test_periodicity_demo_scenario_file(self, runner, tmp_path):
        # assemble a tiny valid scenario: empty divisors are periodic and
        # satisfy both cocycles; s empty except the germ at 0
        scenario = {
            "p": 2, "q": 3,
            "lattice": {"omega1": [1.0, 0.0], "omega2": [0.3, 1.1]},
            "half_width": 1.55,
            "s": [{"point": [0.0, 0.0], "mult": 2}],
            "divA": [],
            "divB": [],
        }
        f = tmp_path / "scenario.json"
        f.write_text(json.dumps(scenario))
        res = invoke(runner, "periodicity-demo", str(f))
        assert res.exit_code == 0
        body = json.loads(res.output)
        assert body["periodic"]
        # the modification clears the stray germ at 0
        assert body["s_prime"] == []

    def test_periodicity_demo_corrupt(self, runner):
        res = invoke(runner, "periodicity-demo", "--corrupt", "divA")
        assert res.exit_code == 1

    def test_descent(self, runner, tmp_path):
        g = tmp_path / "g.json"
        g.write_text(json.dumps({"2": [1.0, 0.0]}))
        res = invoke(runner, "descent", "--t", "3,0", "--g", str(g))
        assert res.exit_code == 0
        body = json.loads(res.output)
        assert abs(body["h"]["2"][0] + 4.0 / 11.0) < 1e-12


class TestSelfTestAndSeed:
    def test_module_self_test_flags(self, runner):
        res = invoke(runner, "descent", "--self-test")
        assert res.exit_code == 0
        body = json.loads(res.output)
        assert body["modules"]["descent"]["passed"]

    def test_env_seed_override(self, runner):
        a = invoke(runner, "self-test", "--module", "descent", "--seed", "1")
        b = invoke(runner, "self-test", "--module", "descent",
                   env={"ELLIPDIFF_SEED": "1"})
        assert a.output == b.output
        assert json.loads(b.output)["seed"] == 1

    def test_bad_env_seed(self, runner):
        res = invoke(runner, "self-test", env={"ELLIPDIFF_SEED": "abc"})
        assert res.exit_code == 2

    def test_determinism_byte_identical(self, runner):
        a = invoke(runner, "self-test", "--module", "descent",
                   "--module", "diffmod", "--seed", "3")
        b = invoke(runner, "self-test", "--module", "descent",
                   "--module", "diffmod", "--seed", "3")
        assert a.output == b.output
