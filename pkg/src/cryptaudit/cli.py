"""``caudit``: generate datasets, run either audit, reproduce a published table, or self-test.

Settings resolve as command-line flag > ``--config`` file > built-in
default. The seed default can also come from ``CAUD_SEED``. The effective
settings are echoed to stderr and recorded in every report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, audit, datagen
from .ciphers import SCHEME_NAMES
from .errors import AuditError, ConfigurationError, FormatError, NumericFailure, UsageError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# key -> (type, default); these are the keys a config file may set.
SETTINGS = {
    "seed": (int, 0),
    "scheme": (str, None),
    "net": (str, "small"),
    "full": (bool, False),
    "n_train": (int, None),
    "n_test": (int, None),
    "bits": (int, None),
    "epochs": (int, None),
    "batch_size": (int, None),
    "learning_rate": (float, None),
    "optimizer": (str, "adam"),
    "ctr_period": (int, None),
    "oaep_period": (int, None),
    "modulus_bits": (int, 1024),
    "marginal_repeats": (int, 1),
    "eval_permutation": (str, "derangement"),
    "bit_map": (str, "01"),
    "jobs": (int, 1),
    "out": (str, "."),
    "huncc.n_channels": (int, None),
    "huncc.channel_bytes": (int, None),
    "huncc.encrypted_channels": (int, None),
    "huncc.inner_scheme": (str, None),
    "huncc.matrix_seed": (int, None),
    "huncc.j_star": (int, None),
}


class CliUsageError(AuditError):
    pass


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliUsageError(f"not a boolean: {text!r}")


def _convert(key, raw):
    kind = SETTINGS[key][0]
    try:
        return _parse_bool(raw) if kind is bool else kind(raw)
    except ValueError as exc:
        raise CliUsageError(f"setting {key}: cannot parse {raw!r} as {kind.__name__}") from exc


def read_config(path) -> dict:
    """Line-based ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliUsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliUsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise CliUsageError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve(args) -> dict:
    """Effective settings: flags over config file over environment over defaults."""
    settings = {k: d for k, (_, d) in SETTINGS.items()}
    env_seed = os.environ.get("CAUD_SEED")
    if env_seed is not None:
        settings["seed"] = _convert("seed", env_seed)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in SETTINGS:
        value = getattr(args, key.replace(".", "_"), None)
        if value is not None:
            settings[key] = value
    if settings["seed"] < 0:
        raise CliUsageError("seed must be non-negative")
    return settings


def audit_config(settings, *, mine=True, cpa=True) -> audit.AuditConfig:
    if settings["scheme"] is None:
        raise CliUsageError("--scheme is required")
    huncc = {k.split(".", 1)[1]: v for k, v in settings.items() if k.startswith("huncc.") and v is not None}
    return audit.AuditConfig(
        scheme=settings["scheme"],
        seed=settings["seed"],
        scale="full" if settings["full"] else "desk",
        net=settings["net"],
        mine=mine,
        cpa=cpa,
        n_train=settings["n_train"],
        n_test=settings["n_test"],
        plaintext_bits=settings["bits"],
        epochs=settings["epochs"],
        batch_size=settings["batch_size"],
        learning_rate=settings["learning_rate"],
        optimizer=settings["optimizer"],
        ctr_reset_period=settings["ctr_period"],
        reuse_oaep_seed_period=settings["oaep_period"],
        modulus_bits=settings["modulus_bits"],
        marginal_repeats=settings["marginal_repeats"],
        eval_permutation=settings["eval_permutation"],
        bit_map=settings["bit_map"],
        huncc=huncc,
    )


def _echo(settings):
    shown = {k: v for k, v in settings.items() if v is not None}
    print("effective config: " + json.dumps(shown, sort_keys=True), file=sys.stderr)


def _write_report(doc, path):
    from .report import write_json

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    write_json(doc, path)
    return path


def _load_datasets(args, cfg):
    """Datasets from ``--train/--test`` files when given, else generated from the flags."""
    if args.train is None and args.test is None:
        return None
    if args.train is None or args.test is None:
        raise CliUsageError("--train and --test must be given together")
    train, test = datagen.load_sampleset(args.train), datagen.load_sampleset(args.test)
    if (train.split, test.split) != ("train", "test"):
        raise CliUsageError("--train must be a train split and --test a test split")
    scheme = audit.build_scheme(cfg)
    if train.scheme_name != scheme.descriptor():
        raise CliUsageError(f"dataset was made by {train.scheme_name!r}, flags describe {scheme.descriptor()!r}")
    return scheme, train, test


# -- subcommands -------------------------------------------------------------

def cmd_gen(args, settings):
    cfg = audit_config(settings, mine=False, cpa=False)
    scheme, train, test = audit.build_datasets(cfg)
    os.makedirs(settings["out"], exist_ok=True)
    for ss in (train, test):
        path = os.path.join(settings["out"], f"{cfg.scheme}_s{cfg.seed}.{ss.split}.cads")
        digest = datagen.save_sampleset(ss, path)
        print(f"{path}\t{len(ss)} rows\t{os.path.getsize(path)} bytes\tsha256 {digest}")
    print(f"fingerprint {datagen.fingerprint(train, test)}\t{scheme.descriptor()}")
    return EXIT_OK


def _cmd_audit(args, settings, which):
    cfg = audit_config(settings, mine=(which == "mine"), cpa=(which == "cpa"))
    datasets = _load_datasets(args, cfg)
    doc = audit.run_audit(cfg, out_dir=settings["out"], datasets=datasets)
    doc["config"]["cli"] = {k: v for k, v in settings.items() if v is not None}
    path = os.path.join(settings["out"], f"{cfg.scheme}_{cfg.net}_s{cfg.seed}_{which}.json")
    _write_report(doc, path)
    part = doc[which]
    if which == "mine":
        print(f"{doc['scheme']}\ttest MI {part['test_mi_nats']:.4f} nats\tbest train MI {part['best_train_mi_nats']:.4f}")
    else:
        print(f"{doc['scheme']}\taccuracy {part['accuracy']:.4f} ({part['correct']}/{part['trials']})\t{part['verdict']}")
    print(f"report {path}")
    return EXIT_OK


def cmd_mine(args, settings):
    return _cmd_audit(args, settings, "mine")


def cmd_cpa(args, settings):
    return _cmd_audit(args, settings, "cpa")


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def cmd_reproduce(args, settings):
    from .plotting import plot_table
    from .report import write_json

    overrides = {}
    for key, name in (("n_train", "n_train"), ("n_test", "n_test"), ("epochs", "epochs"),
                      ("batch_size", "batch_size"), ("learning_rate", "learning_rate"),
                      ("optimizer", "optimizer"), ("marginal_repeats", "marginal_repeats"),
                      ("eval_permutation", "eval_permutation"), ("bit_map", "bit_map"),
                      ("modulus_bits", "modulus_bits"), ("ctr_period", "ctr_reset_period"),
                      ("oaep_period", "reuse_oaep_seed_period")):
        if settings[key] != SETTINGS[key][1]:
            overrides[name] = settings[key]
    out = settings["out"]
    os.makedirs(out, exist_ok=True)
    status = EXIT_OK
    for number in args.table:
        def progress(outcome):
            scheme, _, err = outcome
            print(f"  table {number} row {scheme}: {'error: ' + err if err else 'done'}", file=sys.stderr)

        doc = audit.reproduce_table(
            number, scale="full" if settings["full"] else "desk", net=settings["net"], seed=settings["seed"],
            jobs=settings["jobs"], out_dir=os.path.join(out, f"table{number}"), overrides=overrides,
            on_row=progress,
        )
        reports = doc.pop("reports")
        for scheme, rep in reports.items():
            if rep is not None:
                path = os.path.join(out, f"table{number}", f"{scheme}.json")
                _write_report(rep, path)
                for row in doc["rows"]:
                    if row["scheme"] == scheme:
                        row["report"] = path
        doc["config"]["cli"] = {k: v for k, v in settings.items() if v is not None}
        path = os.path.join(out, f"table{number}.json")
        write_json(doc, path)
        print(f"Table {number}: {doc['caption']} ({doc['scale']} scale, {doc['net']} net, seed {doc['seed']})")
        print(f"  {'row':32s} {'metric':13s} {'published':>9s} {'reproduced':>18s}  {'check':16s} result")
        for row in doc["rows"]:
            verdict = {True: "PASS", False: "FAIL", None: "info"}[row["passed"]]
            if row["error"]:
                verdict = "ERROR"
            print(f"  {row['row'][:32]:32s} {row['metric']:13s} {_fmt(row['published']):>9s} "
                  f"{_fmt(row['value']):>18s}  {row['check']:16s} {verdict}")
        for metric, label in (("accuracy", "IND-CPA accuracy"), ("test_mi_nats", "test MI (nats)")):
            rows = [r for r in doc["rows"] if r["metric"] == metric and "," not in r["scheme"]]
            if rows:
                plot_table(rows, os.path.join(out, f"table{number}_{metric}.png"),
                           f"Table {number}: {label}", label)
        print(f"  report {path}")
        if doc["errors"]:
            numeric = any(r["error"] and r["error"].startswith("numeric") for r in doc["rows"])
            status = max(status, EXIT_NUMERIC if numeric else EXIT_FAIL)
        elif args.strict and not doc["all_passed"]:
            status = max(status, EXIT_FAIL)
    return status


def cmd_selftest(args, settings):
    from . import selftest

    results = selftest.run_all(seed=settings["seed"])
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


# -- argument parsing --------------------------------------------------------

def _common(p, *, scheme=True, training=True):
    p.add_argument("--config", help="key=value settings file (flags override it)")
    p.add_argument("--seed", type=int, help="master seed (default: $CAUD_SEED or 0)")
    p.add_argument("--out", help="output directory (default: current directory)")
    if scheme:
        p.add_argument("--scheme", choices=SCHEME_NAMES, help="cipher scheme")
        p.add_argument("--bits", type=int, help="plaintext width in bits")
        p.add_argument("--ctr-period", dest="ctr_period", type=int,
                       help="counter reset period for aes_ctr_faulted (default: train size)")
        p.add_argument("--oaep-period", dest="oaep_period", type=int,
                       help="padding seed reuse period for rsa_oaep_faulted (default: train size)")
        p.add_argument("--modulus-bits", dest="modulus_bits", type=int, help="RSA modulus size")
    p.add_argument("--full", action="store_const", const=True, default=None,
                   help="full scale: 100k/20k rows, 1000 epochs, batch 10000, lr 1e-4")
    p.add_argument("--n-train", dest="n_train", type=int, help="train rows")
    p.add_argument("--n-test", dest="n_test", type=int, help="test rows")
    if training:
        p.add_argument("--net", choices=sorted(audit.NET_SIZES), help="small = 2x100, big = 4x600")
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float)
        p.add_argument("--optimizer", choices=("adam", "sgd"))
        p.add_argument("--bit-map", dest="bit_map", choices=("01", "pm1"), help="real encoding of bits")
        p.add_argument("--marginal-repeats", dest="marginal_repeats", type=int,
                       help="marginal draws averaged in the test MI estimate")
        p.add_argument("--eval-permutation", dest="eval_permutation", choices=("derangement", "uniform"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write train/test dataset files")
    _common(p, training=False)
    p.set_defaults(func=cmd_gen)

    for name, func, text in (("mine", cmd_mine, "estimate plaintext/ciphertext MI"),
                             ("cpa", cmd_cpa, "play the IND-CPA distinguishing game")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--train", help="train split file from `gen` (otherwise generated in memory)")
        p.add_argument("--test", help="test split file from `gen`")
        p.set_defaults(func=func)

    p = sub.add_parser("reproduce", help="run every row of a published table")
    _common(p, scheme=False)
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4), action="append", required=True,
                   help="table number; repeat for several")
    p.add_argument("--jobs", type=int, help="rows run in parallel (default 1)")
    p.add_argument("--ctr-period", dest="ctr_period", type=int)
    p.add_argument("--oaep-period", dest="oaep_period", type=int)
    p.add_argument("--modulus-bits", dest="modulus_bits", type=int)
    p.add_argument("--strict", action="store_true", help="exit 1 when any tolerance check fails")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("selftest", help="oracle, gradient and cipher known-answer checks")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve(args)
        if settings.get("jobs", 1) < 1:
            raise CliUsageError("--jobs must be >= 1")
        _echo(settings)
        return args.func(args, settings)
    except NumericFailure as exc:
        print(f"caudit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CliUsageError, UsageError, ConfigurationError, FormatError) as exc:
        print(f"caudit: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AuditError as exc:
        print(f"caudit: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
