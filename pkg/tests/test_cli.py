import json

import pytest

from cryptaudit import cli, datagen, report

TINY = ["--n-train", "2000", "--n-test", "1000", "--epochs", "3", "--batch-size", "500"]


def settings_for(argv):
    return cli.resolve(cli.build_parser().parse_args(argv))


def test_precedence(tmp_path, monkeypatch):
    conf = tmp_path / "c.conf"
    conf.write_text("# comment\nseed = 5\nepochs = 7  # trailing\nhuncc.j_star = 2\n")
    monkeypatch.setenv("CAUD_SEED", "9")
    assert settings_for(["mine", "--scheme", "otp"])["seed"] == 9
    s = settings_for(["mine", "--scheme", "otp", "--config", str(conf)])
    assert (s["seed"], s["epochs"], s["huncc.j_star"]) == (5, 7, 2)
    s = settings_for(["mine", "--scheme", "otp", "--config", str(conf), "--seed", "1"])
    assert (s["seed"], s["epochs"]) == (1, 7)
    monkeypatch.delenv("CAUD_SEED")
    assert settings_for(["mine", "--scheme", "otp"])["seed"] == 0


def test_net_mapping_and_full_scale():
    small = cli.audit_config(settings_for(["mine", "--scheme", "otp"])).train_config()
    assert (small.hidden_layers, small.hidden_width) == (2, 100)
    assert (small.epochs, small.batch_size) == (200, 2000)
    cfg = cli.audit_config(settings_for(["mine", "--scheme", "otp", "--net", "big", "--full"]))
    big = cfg.train_config()
    assert (big.hidden_layers, big.hidden_width, big.epochs, big.batch_size) == (4, 600, 1000, 10000)
    assert cfg.resolved_sizes() == (100_000, 20_000)
    assert cli.audit_config(settings_for(["mine", "--scheme", "otp"])).resolved_sizes() == (20_000, 4_000)


def test_unknown_scheme_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["gen", "--scheme", "rot13"])
    assert exc.value.code == 2
    assert "aes_ctr_faulted" in capsys.readouterr().err


def test_bad_config_is_usage_error(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    assert cli.main(["mine", "--scheme", "otp", "--config", str(bad)]) == 2
    bad.write_text("epochs = many\n")
    assert cli.main(["mine", "--scheme", "otp", "--config", str(bad)]) == 2
    assert cli.main(["mine", "--scheme", "otp", "--config", str(tmp_path / "missing")]) == 2


def test_missing_scheme_is_usage_error(tmp_path):
    assert cli.main(["mine", "--out", str(tmp_path)]) == 2


def test_fault_period_defaults_to_train_size(tmp_path, capsys):
    assert cli.main(["gen", "--scheme", "aes_ctr_faulted", "--n-train", "20", "--n-test", "4",
                     "--out", str(tmp_path)]) == 0
    ss = datagen.load_sampleset(tmp_path / "aes_ctr_faulted_s0.train.cads")
    assert "ctr_reset_period=20" in ss.scheme_name


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 7


def test_gen_sizes_and_fault_metadata(tmp_path, capsys):
    assert cli.main(["gen", "--scheme", "identity", "--bits", "16", "--n-train", "200", "--n-test", "40",
                     "--out", str(tmp_path)]) == 0
    for split, rows in (("train", 200), ("test", 40)):
        path = tmp_path / f"identity_s0.{split}.cads"
        assert path.stat().st_size == datagen.expected_file_size("identity", 16, 16, rows)
    assert cli.main(["gen", "--scheme", "aes_ctr_faulted", "--ctr-period", "100000", "--n-train", "20",
                     "--n-test", "4", "--out", str(tmp_path)]) == 0
    ss = datagen.load_sampleset(tmp_path / "aes_ctr_faulted_s0.train.cads")
    assert "ctr_reset_period=100000" in ss.scheme_name


def test_mine_and_cpa_outputs(tmp_path, capsys):
    out = str(tmp_path)
    assert cli.main(["mine", "--scheme", "identity", "--out", out, *TINY]) == 0
    assert cli.main(["cpa", "--scheme", "identity", "--out", out, *TINY]) == 0
    for which in ("mine", "cpa"):
        doc = json.loads((tmp_path / f"identity_small_s0_{which}.json").read_text())
        report.validate_report(doc)
        assert doc[which] is not None
        assert (tmp_path / f"identity_small_s0_{which}_trace.csv").stat().st_size > 0
        assert (tmp_path / f"identity_small_s0_{which}_trace.png").read_bytes()[:4] == b"\x89PNG"
    doc = json.loads((tmp_path / "identity_small_s0_cpa.json").read_text())
    assert doc["cpa"]["verdict"] == "BROKEN"
    assert doc["config"]["cli"]["epochs"] == 3


def test_audit_from_dataset_files(tmp_path, capsys):
    out = str(tmp_path)
    gen = ["--scheme", "otp", "--n-train", "2000", "--n-test", "1000", "--out", out]
    assert cli.main(["gen", *gen]) == 0
    files = ["--train", str(tmp_path / "otp_s0.train.cads"), "--test", str(tmp_path / "otp_s0.test.cads")]
    assert cli.main(["cpa", *gen, "--epochs", "2", "--batch-size", "500", *files]) == 0
    doc = json.loads((tmp_path / "otp_small_s0_cpa.json").read_text())
    assert doc["cpa"]["verdict"] == "SECURE-CONSISTENT"
    assert cli.main(["cpa", "--scheme", "identity", "--out", out, *files]) == 2
    assert cli.main(["cpa", "--scheme", "otp", "--out", out, files[0], files[1]]) == 2


def test_reproduce_table_one(tmp_path, capsys):
    assert cli.main(["reproduce", "--table", "1", "--out", str(tmp_path), *TINY]) == 0
    out = capsys.readouterr().out
    doc = json.loads((tmp_path / "table1.json").read_text())
    report.validate_report(doc)
    assert {r["scheme"] for r in doc["rows"]} == {"identity", "otp", "xor_const"}
    assert "published" in out and "reproduced" in out
    assert (tmp_path / "table1_accuracy.png").exists()
    assert (tmp_path / "table1" / "otp.json").exists()


def test_reproduce_row_errors_give_nonzero_exit(tmp_path, capsys):
    # a 512-bit modulus cannot carry OAEP padding around a 128-bit message
    args = ["reproduce", "--table", "3", "--out", str(tmp_path), "--modulus-bits", "512",
            "--n-train", "2000", "--n-test", "1000", "--epochs", "1", "--batch-size", "1000"]
    assert cli.main(args) == 1
    doc = json.loads((tmp_path / "table3.json").read_text())
    assert doc["errors"] and any(r["value"] is not None for r in doc["rows"])


def test_numeric_failure_exit_code(monkeypatch, capsys):
    from cryptaudit.errors import NumericFailure

    def boom(args, settings):
        raise NumericFailure("nan in layer 1")

    parser = cli.build_parser()
    monkeypatch.setattr(cli, "build_parser", lambda: parser)
    parser.set_defaults(func=boom)
    for action in parser._subparsers._group_actions[0].choices.values():
        action.set_defaults(func=boom)
    assert cli.main(["selftest"]) == 3
