"""Verification suites plus the command-line surface: exit codes, schema
round-trips, determinism, and the corrupted-fixture drill."""

import json

import pytest

from sqfrep.cli import (
    EXIT_CAPACITY,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    ExperimentConfig,
    encode_csv,
    encode_json,
    main,
    parse_csv,
)
from sqfrep.counting import count_representations, psi_in_ap, squarefree_count_in_ap
from sqfrep.localmodel import star_scale
from sqfrep.verify import (
    run_arith_suite,
    run_estimator_suite,
    run_local_suite,
    run_suites,
)


class TestSuites:
    def test_arith_suite_reduced_bounds(self, tables):
        results = run_arith_suite(
            tables,
            r_bound=40,
            n_bound=40,
            mult_r_bound=40,
            mult_n_bound=20,
            oracle_bound=20,
            detect_bound=60,
            orth_bound=30,
        )
        assert results
        for r in results:
            assert r.passed, f"{r.name}: {r.counterexample}"
            assert r.cases > 0

    def test_local_suite_reduced_bounds(self, tables):
        results = run_local_suite(
            tables,
            q_bound=36,
            qprime_bound=6,
            product_q_bound=36,
            pair_bound=36,
            trials=10,
        )
        names = {r.name for r in results}
        assert "squarefree-density-star-closed-form" in names
        assert "adjoint-identity" in names
        for r in results:
            assert r.passed, f"{r.name}: {r.counterexample}"

    def test_estimator_suite_reduced_bounds(self, tables):
        results = run_estimator_suite(
            tables, q1_bound=3, q2_bound=1, length_bound=400, trials=8
        )
        for r in results:
            assert r.passed, f"{r.name}: {r.counterexample}"

    def test_unknown_suite_rejected(self, tables):
        with pytest.raises(KeyError):
            run_suites(["nonsense"], tables)


class TestCorruptedFixture:
    """Flipping the sign of the star-vector scale must be caught, by the
    suite and through the CLI, with the broken check named."""

    def test_sign_flip_fails_named_check(self, tables, monkeypatch):
        monkeypatch.setattr(
            "sqfrep.verify.star_scale", lambda f: -star_scale(f)
        )
        results = run_local_suite(
            tables,
            q_bound=20,
            qprime_bound=4,
            product_q_bound=20,
            pair_bound=20,
            trials=4,
        )
        by_name = {r.name: r for r in results}
        broken = by_name["squarefree-density-star-closed-form"]
        assert not broken.passed
        assert broken.failures > 0
        assert broken.counterexample

    def test_cli_reports_failure_and_exits_nonzero(self, monkeypatch, capsys):
        monkeypatch.setattr(
            "sqfrep.verify.star_scale", lambda f: -star_scale(f)
        )
        rc = main(["verify", "local", "--q-max", "20", "--qprime", "4"])
        out = capsys.readouterr().out
        assert rc == EXIT_VERIFY
        assert "FAIL squarefree-density-star-closed-form" in out
        assert "counterexample" in out

    def test_cli_passes_when_untouched(self, capsys):
        rc = main(["verify", "estimator", "--q1", "3", "--q2", "1", "--n", "300"])
        out = capsys.readouterr().out
        assert rc == EXIT_OK
        assert out.strip()
        for line in out.strip().split("\n"):
            assert line.startswith("PASS ")
            assert "cases=" in line


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == EXIT_USAGE
        capsys.readouterr()

    def test_invalid_value(self, capsys):
        assert main(["count", "--n", "0"]) == EXIT_USAGE
        capsys.readouterr()

    def test_capacity_error(self, capsys):
        rc = main(["estimate", "--n", "20000001"])
        err = capsys.readouterr().err
        assert rc == EXIT_CAPACITY
        assert "capacity" in err

    def test_help_is_success(self, capsys):
        assert main(["--help"]) == EXIT_OK
        capsys.readouterr()


class TestConfig:
    def test_rejects_nonpositive_bounds(self):
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(100,), q1_bound=0)
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(100,), threads=-1)
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(0,))
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(100,), compare_tolerance=0.0)

    def test_rejects_unknown_modes(self):
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(100,), weight_mode="guesswork")
        with pytest.raises(ValueError):
            ExperimentConfig(targets=(100,), out_format="xml")


class TestRoundTrip:
    def test_csv_json_lossless(self, tmp_path):
        csv_path = tmp_path / "rows.csv"
        json_path = tmp_path / "rows.json"
        base = ["compare", "--n", "10000", "--q-max", "5"]
        assert main([*base, "--out", str(csv_path)]) == EXIT_OK
        assert main([*base, "--format", "json", "--out", str(json_path)]) == EXIT_OK
        schema, csv_rows = parse_csv(csv_path.read_text())
        json_rows = json.loads(json_path.read_text())
        assert schema == "sqfrep-compare"
        assert csv_rows == json_rows

    def test_every_cell_survives_reencoding(self, tmp_path):
        path = tmp_path / "est.csv"
        rc = main(
            ["estimate", "--n", "4000", "--q1", "4", "--q2", "1", "--out", str(path)]
        )
        assert rc == EXIT_OK
        text = path.read_text()
        schema, rows = parse_csv(text)
        assert encode_csv(schema, rows) == text
        assert json.loads(encode_json(schema, rows)) == rows

    def test_header_names_schema_and_types(self, capsys):
        assert main(["count", "--n", "500"]) == EXIT_OK
        out = capsys.readouterr().out
        head = out.split("\n", 1)[0]
        assert head.startswith("# sqfrep-count v1 columns=")
        assert "weighted:float" in head
        assert "unweighted:int" in head

    def test_parse_rejects_headerless_text(self):
        with pytest.raises(ValueError):
            parse_csv("a,b\n1,2\n")


class TestDeterminism:
    def test_identical_config_identical_bytes(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        args = ["compare", "--n", "30000", "--q-max", "6"]
        assert main([*args, "--out", str(first)]) == EXIT_OK
        assert main([*args, "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_thread_count_does_not_change_rows(self, tmp_path):
        lone = tmp_path / "t1.csv"
        many = tmp_path / "t4.csv"
        assert main(
            ["count", "--n", "200000", "--q", "7", "--a", "3", "--out", str(lone)]
        ) == EXIT_OK
        assert main(
            [
                "count", "--n", "200000", "--q", "7", "--a", "3",
                "--threads", "4", "--out", str(many),
            ]
        ) == EXIT_OK
        assert lone.read_bytes() == many.read_bytes()

    def test_selftest_rows_are_seed_stable(self, capsys):
        assert main(["sieve-selftest", "--seed", "7"]) == EXIT_OK
        first = capsys.readouterr().out
        assert main(["sieve-selftest", "--seed", "7"]) == EXIT_OK
        second = capsys.readouterr().out
        assert first == second
        assert main(["sieve-selftest", "--seed", "8"]) == EXIT_OK
        third = capsys.readouterr().out
        assert third != first
        for line in first.strip().split("\n")[2:]:
            assert line.endswith("true")


class TestRows:
    def test_count_rows_match_library(self, tables, capsys):
        assert main(["count", "--n", "3000", "--q", "5", "--a", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        _, rows = parse_csv(out)
        want = count_representations(3000, 2, 5, tables)
        assert rows[0]["weighted"] == want.weighted
        assert rows[0]["unweighted"] == want.unweighted
        assert rows[0]["lambda_weighted"] == want.lambda_weighted

    def test_compare_obstructed_rows_exact(self, capsys):
        # 4 divides both the modulus and 101 - 1, so the class is obstructed
        assert main(["compare", "--n", "101", "--q", "4", "--a", "1"]) == EXIT_OK
        out = capsys.readouterr().out
        _, rows = parse_csv(out)
        assert rows[0]["vanished"] is True
        assert rows[0]["weighted"] == 0.0
        assert rows[0]["series"] == 0.0
        assert rows[0]["ratio"] == 0.0

    def test_series_obstructed_object(self, capsys):
        assert main(
            ["series", "--n", "101", "--q", "4", "--a", "1", "--format", "json"]
        ) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["vanished"] is True
        assert rows[0]["rudimentary_value"] == 0.0
        assert rows[0]["euler_value"] == 0.0

    def test_series_forms_agree(self, capsys):
        assert main(["series", "--n", "987654", "--q", "3", "--a", "2"]) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)
        row = rows[0]
        assert row["delta"] <= row["rudimentary_tail"] + row["euler_tail"]
        assert row["rudimentary_value"] > 0

    def test_estimate_rank_one_identity(self, tables, capsys):
        # Family {1} collapses the estimate to (sum f)(sum g)/N.
        main(
            ["estimate", "--n", "2000", "--q1", "1", "--q2", "1", "--format", "json"]
        )
        rows = json.loads(capsys.readouterr().out)
        got = rows[0]["estimate"]
        want = (
            psi_in_ap(2000, 0, 1, tables)
            * squarefree_count_in_ap(2000, 0, 1, tables)
            / 2000
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_estimate_defects_nonnegative_exact_mode(self, capsys):
        rc = main(["estimate", "--n", "6000", "--q1", "5", "--q2", "1"])
        out = capsys.readouterr().out
        _, rows = parse_csv(out)
        assert rows[0]["defect_f"] >= 0
        assert rows[0]["defect_g"] >= 0
        assert rc == EXIT_OK

    def test_estimate_paper_weights_run(self, capsys):
        # keep the additive padding small next to N so the gate stays shut
        rc = main(
            [
                "estimate", "--n", "6000", "--q1", "5", "--q2", "1",
                "--weights", "paper", "--padding-constant", "1.0",
                "--tolerance", "0.5",
            ]
        )
        out = capsys.readouterr().out
        _, rows = parse_csv(out)
        assert rc == EXIT_OK
        assert rows[0]["estimate"] > 0

    def test_per_q_breakdown_table(self, capsys):
        rc = main(
            ["estimate", "--n", "3000", "--q1", "4", "--q2", "1", "--per-q"]
        )
        out = capsys.readouterr().out
        schema, rows = parse_csv(out)
        assert rc == EXIT_OK
        assert schema == "sqfrep-estimate-per-q"
        assert {r["q"] for r in rows} == {1, 2, 3}
        total = sum(r["contribution"] for r in rows)
        assert total == pytest.approx(
            sum(r["f_phi"] * r["phi_g"] / r["m_phi"] for r in rows if r["m_phi"])
            + sum(r["f_psi"] * r["psi_g"] / r["m_psi"] for r in rows if r["m_psi"]),
            rel=1e-9,
        )
