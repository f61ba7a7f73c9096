import csv
import json
import math
from pathlib import Path

import pytest

from shareable_bandits.cli import main
from shareable_bandits.harness import (
    aggregate,
    emit_outputs,
    run_experiment,
    run_one,
)
from shareable_bandits.scenarios import (
    Scenario,
    ScenarioError,
    default_checkpoints,
    load_scenario,
    preset_scenarios,
)


def tiny_scenario(**kw):
    base = dict(
        name="tiny",
        num_arms=4,
        num_players=2,
        capacities=[1, 1, 1, 1],
        means=[0.9, 0.6, 0.3, 0.1],
        horizon=400,
        feedback="sdi",
        algorithms=["dpe-sdi", "sic-sda"],
        seeds=[0, 1],
        checkpoints=[100, 400],
    )
    base.update(kw)
    return Scenario(**base)


class TestPresets:
    def test_synthetic_means_match_published_array(self):
        sc = preset_scenarios()["synthetic-0.025"]
        assert sc.means == pytest.approx(
            [0.90, 0.875, 0.85, 0.825, 0.80, 0.775, 0.75, 0.725, 0.70]
        )
        assert sc.capacities == [3, 2, 4, 2, 1, 5, 2, 1, 3]
        assert (sc.num_arms, sc.num_players) == (9, 6)

    def test_edge_preset_values(self):
        sc = preset_scenarios()["edge-computing"]
        assert sc.means[3] == pytest.approx(2.5 / 3, abs=1e-9)
        assert sc.capacities[3] == 2
        assert sc.feedback == "sdi"
        assert "dpe-sdi" in sc.algorithms

    def test_cellular_preset_values(self):
        sc = preset_scenarios()["cellular-5g4g"]
        assert sc.means[0] == pytest.approx(1 / 1.2)
        assert sc.capacities[0] == 9
        assert sc.capacities[1] == 8
        assert (sc.num_arms, sc.num_players) == (20, 18)
        assert sc.feedback == "sda"

    def test_permutation_reproducible_and_seed_dependent(self):
        sc = preset_scenarios()["synthetic-0.025"]
        assert sc.means_for_seed(3) == sc.means_for_seed(3)
        assert sorted(sc.means_for_seed(3)) == sorted(sc.means)
        assert any(
            sc.means_for_seed(3) != sc.means_for_seed(s) for s in range(4, 10)
        )

    def test_env_spec_feedback_per_algorithm(self):
        sc = preset_scenarios()["synthetic-0.025"]
        assert sc.env_spec("dpe-sdi", 0).feedback.value == "sdi"
        assert sc.env_spec("sic-sda", 0).feedback.value == "sda"
        assert sc.env_spec("sic-sdi", 0).feedback.value == "sdi"

    def test_matched_seed_means_equal_across_algorithms(self):
        sc = preset_scenarios()["synthetic-0.025"]
        assert sc.env_spec("sic-sda", 5).means == sc.env_spec("sic-sdi", 5).means


class TestScenarioValidation:
    def test_infeasible_capacity_rejected(self):
        with pytest.raises(ScenarioError, match="total capacity"):
            tiny_scenario(num_players=3, num_arms=4,
                          capacities=[0, 0, 1, 1], means=[0.5] * 4)

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ScenarioError, match="unknown algorithms"):
            tiny_scenario(algorithms=["nonsense"])

    def test_bad_checkpoints_rejected(self):
        with pytest.raises(ScenarioError, match="checkpoints"):
            tiny_scenario(checkpoints=[400, 100])

    def test_default_checkpoints(self):
        cps = default_checkpoints(10_000)
        assert cps[-1] == 10_000
        assert cps == sorted(set(cps))

    def test_file_round_trip(self, tmp_path):
        sc = tiny_scenario()
        path = tmp_path / "scenario.json"
        path.write_text(sc.to_json())
        again = Scenario.from_file(path)
        assert again == sc

    def test_load_unknown_name(self):
        with pytest.raises(ScenarioError, match="unknown scenario"):
            load_scenario("nope-does-not-exist")


class TestRunExperiment:
    def test_results_shape_and_determinism(self):
        sc = tiny_scenario(algorithms=["dpe-sdi"], seeds=[0, 0])
        agg, results = run_experiment(sc)
        assert len(results) == 2
        # identical seeds listed twice: zero std at every checkpoint
        for cp in sc.checkpoints:
            assert agg.std("dpe-sdi", cp) == pytest.approx(0.0)

    def test_aggregate_matches_recomputation(self):
        sc = tiny_scenario()
        agg, results = run_experiment(sc)
        for alg in sc.algorithms:
            for i, cp in enumerate(sc.checkpoints):
                vals = [r.checkpoint_regret[i] for r in results if r.algorithm == alg]
                mean = sum(vals) / len(vals)
                var = sum((v - mean) ** 2 for v in vals) / len(vals)
                assert agg.mean(alg, cp) == pytest.approx(mean)
                assert agg.std(alg, cp) == pytest.approx(math.sqrt(var))

    def test_parallel_equals_serial(self):
        sc = tiny_scenario()
        agg1, res1 = run_experiment(sc, jobs=1)
        agg2, res2 = run_experiment(sc, jobs=2)
        assert sorted((r.algorithm, r.seed, r.final_regret) for r in res1) == sorted(
            (r.algorithm, r.seed, r.final_regret) for r in res2
        )


class TestEmitOutputs:
    def test_csv_layout_and_roundtrip(self, tmp_path):
        sc = tiny_scenario()
        agg, results = run_experiment(sc)
        paths = emit_outputs(agg, results, sc, tmp_path / "out")
        with paths["raw"].open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["algorithm", "seed", "checkpoint", "cum_regret"]
        assert len(rows) == 1 + len(results) * len(sc.checkpoints)

        # re-ingesting the resolved scenario reproduces identical raw bytes
        again = Scenario.from_file(paths["scenario"])
        agg2, results2 = run_experiment(again)
        paths2 = emit_outputs(agg2, results2, again, tmp_path / "out2")
        assert paths["raw"].read_bytes() == paths2["raw"].read_bytes()

    def test_empty_results_header_only(self, tmp_path):
        sc = tiny_scenario(algorithms=["dpe-sdi"], seeds=[])
        paths = emit_outputs(aggregate([]), [], sc, tmp_path / "out")
        assert paths["raw"].read_text() == "algorithm,seed,checkpoint,cum_regret\n"

    def test_summary_contains_stats(self, tmp_path):
        sc = tiny_scenario()
        agg, results = run_experiment(sc)
        paths = emit_outputs(agg, results, sc, tmp_path / "out")
        text = paths["summary"].read_text()
        assert "scenario: tiny" in text
        assert "mean_regret" in text


class TestCli:
    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        assert "synthetic-0.025" in out
        assert "cellular-5g4g" in out

    def test_validate_good_file(self, tmp_path, capsys):
        path = tmp_path / "sc.json"
        path.write_text(tiny_scenario().to_json())
        assert main(["validate", "--scenario", str(path)]) == 0

    def test_validate_bad_file(self, tmp_path, capsys):
        data = json.loads(tiny_scenario().to_json())
        data["capacities"] = [1, 1, 1]
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(data))
        assert main(["validate", "--scenario", str(path)]) == 1

    def test_run_end_to_end(self, tmp_path, capsys):
        path = tmp_path / "sc.json"
        path.write_text(tiny_scenario().to_json())
        code = main([
            "run", "--scenario", str(path), "--algo", "dpe-sdi",
            "--seeds", "2", "--horizon", "300", "--out", str(tmp_path / "out"),
        ])
        assert code == 0
        raw = (tmp_path / "out" / "raw.csv").read_text().strip().splitlines()
        assert raw[0] == "algorithm,seed,checkpoint,cum_regret"
        assert all(line.startswith("dpe-sdi,") for line in raw[1:])
