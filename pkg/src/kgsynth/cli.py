"""Command-line entry point: ``kgsynth <generate|evaluate|ablate|select|baseline>``.

Every option can also be given in a JSON file passed with ``--config``;
keys are the option names with dashes replaced by underscores.  Values
given on the command line take precedence over the file, which takes
precedence over the built-in defaults.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 backend
error, 5 generation finished with skipped patients.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .errors import BackendError, ConfigError, DataError, GenerationError, KgSynthError, MissingNoKBVariant
from .fidelity import evaluate_fidelity
from .generation import (
    BackendConfig,
    ChatCompletionBackend,
    KbMode,
    PersonaConfig,
    PersonaMockBackend,
    generate_dataset,
    load_kb,
    random_baseline,
)
from .privacy import DEFAULT_QI, evaluate_privacy
from .resampling import DEFAULT_RESAMPLES, METRICS, bootstrap_delta, metric_ci
from .selection import GateConfig, load_manifest, score_candidate, select
from .tabular import (
    DisorderSchema,
    builtin_schema,
    load_schema,
    load_table,
    stratified_split,
    table_to_csv,
)

log = logging.getLogger("kgsynth")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4
EXIT_PARTIAL = 5

DEFAULT_DISORDER = "social_anxiety"

DEFAULTS: dict[str, dict[str, Any]] = {
    "generate": {"kb": "none", "n": 100, "seed": 0, "k": 4, "max_retries": 2, "workers": 1, "mock": False},
    "evaluate": {"qi": ",".join(DEFAULT_QI), "ci": 0, "seed": 0, "name": "evaluation"},
    "ablate": {"n_resamples": DEFAULT_RESAMPLES, "seed": 0, "name": "ablation"},
    "select": {"eo_max": 0.01, "near_share_max": 0.10, "q05_min": 1.0, "train_fraction": 0.7,
               "split_seed": 0, "stratify": "sex", "name": "selection"},
    "baseline": {"seed": 0},
}


def _add_schema_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schema", help="schema JSON file")
    p.add_argument("--disorder", help=f"bundled schema name (default {DEFAULT_DISORDER})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kgsynth {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values")
    common.add_argument("--out-dir", help="directory for all outputs (default .)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate a synthetic dataset")
    _add_schema_args(g)
    g.add_argument("--kb", choices=[m.value for m in KbMode], help="knowledge mode (default none)")
    g.add_argument("--kb-manifest", help="knowledge base manifest JSON (needed unless --kb none)")
    g.add_argument("--n", type=int, help="number of patients (default 100)")
    g.add_argument("--seed", type=int, help="master seed (default 0)")
    g.add_argument("--k", type=int, help="snippets retrieved per item (default 4)")
    g.add_argument("--max-retries", type=int, help="re-prompts per item (default 2)")
    g.add_argument("--workers", type=int, help="patients generated concurrently (default 1)")
    g.add_argument("--mock", action="store_true", default=None, help="use the deterministic mock backend")
    g.add_argument("--backend-config", help="backend JSON (endpoint, model, ...)")
    g.add_argument("--persona-config", help="persona distribution overrides JSON")
    g.add_argument("--name", help="output file stem (default <disorder>_<kb>)")

    e = sub.add_parser("evaluate", parents=[common], help="fidelity and privacy of a synthetic table")
    _add_schema_args(e)
    e.add_argument("--real", help="real CSV")
    e.add_argument("--syn", help="synthetic CSV")
    e.add_argument("--qi", help="comma-separated quasi-identifiers (default sex,age)")
    e.add_argument("--ci", type=int, help="bootstrap resamples for metric intervals (default 0 = none)")
    e.add_argument("--seed", type=int, help="bootstrap seed (default 0)")
    e.add_argument("--name", help="report file stem (default evaluation)")

    a = sub.add_parser("ablate", parents=[common], help="paired bootstrap deltas against No-KB")
    _add_schema_args(a)
    a.add_argument("--real", help="real CSV")
    a.add_argument("--variant", action="append", metavar="MODE=CSV",
                   help="synthetic CSV for a knowledge mode; repeat, must include none=...")
    a.add_argument("--n-resamples", type=int, help=f"bootstrap resamples (default {DEFAULT_RESAMPLES})")
    a.add_argument("--seed", type=int, help="bootstrap seed (default 0)")
    a.add_argument("--name", help="report file stem (default ablation)")

    s = sub.add_parser("select", parents=[common], help="privacy-gated candidate selection")
    _add_schema_args(s)
    s.add_argument("--real", help="real CSV")
    s.add_argument("--manifest", help="candidate manifest JSON")
    s.add_argument("--eo-max", type=float, help="exact-overlap gate (default 0.01)")
    s.add_argument("--near-share-max", type=float, help="near-match share gate (default 0.10)")
    s.add_argument("--q05-min", type=float, help="minimum 5th percentile Hamming distance (default 1)")
    s.add_argument("--train-fraction", type=float, help="train share of the split (default 0.7)")
    s.add_argument("--split-seed", type=int, help="split seed (default 0)")
    s.add_argument("--stratify", help="stratification column, '' for none (default sex)")
    s.add_argument("--name", help="report file stem (default selection)")

    b = sub.add_parser("baseline", parents=[common], help="random reference dataset")
    _add_schema_args(b)
    b.add_argument("--real", help="real CSV")
    b.add_argument("--seed", type=int, help="seed (default 0)")
    b.add_argument("--name", help="output file stem (default <disorder>_random)")
    return parser


def _resolve(args: argparse.Namespace) -> dict[str, Any]:
    opts = dict(DEFAULTS.get(args.command, {}))
    opts["out_dir"] = "."
    if args.config:
        try:
            file_opts = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_opts, dict):
            raise ConfigError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in file_opts.items()})
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command"):
            opts[key] = value
    return opts


def _require(opts: dict, *keys: str) -> None:
    missing = [k for k in keys if not opts.get(k)]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _require_files(opts: dict, *keys: str) -> None:
    for k in keys:
        if opts.get(k) and not Path(opts[k]).is_file():
            raise ConfigError(f"--{k.replace('_', '-')}: file not found: {opts[k]}")


def _schema(opts: dict) -> DisorderSchema:
    if opts.get("schema"):
        return load_schema(opts["schema"])
    return builtin_schema(opts.get("disorder") or DEFAULT_DISORDER)


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _out_dir(opts: dict) -> Path:
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def cmd_generate(opts: dict) -> int:
    mode = KbMode(opts["kb"])
    _require_files(opts, "schema", "kb_manifest", "backend_config", "persona_config")
    schema = _schema(opts)
    if mode is not KbMode.NO_KB:
        _require(opts, "kb_manifest")
    if not opts.get("mock"):
        _require(opts, "backend_config")
    persona_config = None
    if opts.get("persona_config"):
        data = json.loads(Path(opts["persona_config"]).read_text(encoding="utf-8"))
        try:
            persona_config = PersonaConfig.from_dict(data)
        except TypeError as exc:
            raise ConfigError(f"bad persona config: {exc}") from None
    index = load_kb(opts["kb_manifest"]) if mode is not KbMode.NO_KB else None
    if opts.get("mock"):
        backend = PersonaMockBackend()
    else:
        cfg = json.loads(Path(opts["backend_config"]).read_text(encoding="utf-8"))
        backend = ChatCompletionBackend(BackendConfig.from_dict(cfg))

    result = generate_dataset(
        n_patients=int(opts["n"]),
        schema=schema,
        mode=mode,
        backend=backend,
        index=index,
        master_seed=int(opts["seed"]),
        k=int(opts["k"]),
        persona_config=persona_config,
        max_retries=int(opts["max_retries"]),
        max_workers=int(opts["workers"]),
    )
    out = _out_dir(opts)
    stem = opts.get("name") or f"{schema.disorder_name}_{mode.value}"
    (out / f"{stem}.csv").write_text(table_to_csv(result.table), encoding="utf-8")
    run_config = {
        "disorder": schema.disorder_name,
        "kb": mode.value,
        "n": int(opts["n"]),
        "seed": int(opts["seed"]),
        "k": int(opts["k"]),
        "max_retries": int(opts["max_retries"]),
        "backend": "mock" if opts.get("mock") else "http",
    }
    _write_json(out / f"{stem}.runlog.json", result.run_log(run_config))
    print(f"wrote {len(result.table)} rows to {out / (stem + '.csv')}")
    if result.shortfall:
        print(f"{result.shortfall} patient(s) skipped; see the run log", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def evaluation_report(real, syn, qi: Sequence[str], ci: int = 0, seed: int = 0) -> dict:
    report = {
        "fidelity": evaluate_fidelity(real, syn).to_dict(),
        "privacy": evaluate_privacy(syn, real, qi).to_dict(),
    }
    if ci:
        report["intervals"] = {m: metric_ci(real, syn, m, ci, seed).to_dict() for m in METRICS}
    return report


def cmd_evaluate(opts: dict) -> int:
    _require(opts, "real", "syn")
    _require_files(opts, "schema", "real", "syn")
    schema = _schema(opts)
    real = load_table(opts["real"], schema)
    syn = load_table(opts["syn"], schema)
    qi = [c for c in str(opts["qi"]).split(",") if c]
    report = evaluation_report(real, syn, qi, int(opts["ci"]), int(opts["seed"]))
    out = _out_dir(opts)
    _write_json(out / f"{opts['name']}.json", report)

    f, p = report["fidelity"], report["privacy"]
    rows = [
        ("mean JSD", f["mean_jsd"]),
        ("MAE_V error", f["mae_v_error"]),
        ("MAE_V complement", f["mae_v_complement"]),
        ("ED^2 (Hamming)", f["energy_distance_sq"]),
        ("exact overlap", p["exact_overlap"]),
        ("NN q05 (normalized)", p["nn_q05_normalized"]),
        ("NN q05 (Hamming)", p["nn_q05_hamming"]),
        ("share d_ham <= 1", p["near_match_share_le1"]),
        ("k-map risk (avg)", p["k_map_risk_avg"]),
    ]
    for label, value in rows:
        print(f"{label:<22}{_fmt(value):>10}")
    return EXIT_OK


def parse_variants(specs: Sequence[str]) -> dict[str, str]:
    variants = {}
    for spec in specs or ():
        mode, sep, path = spec.partition("=")
        if not sep or not path:
            raise ConfigError(f"--variant expects MODE=CSV, got {spec!r}")
        try:
            mode = KbMode(mode).value
        except ValueError:
            raise ConfigError(f"unknown knowledge mode {mode!r}") from None
        variants[mode] = path
    return variants


def ablation_table(real, variants: dict, n_resamples: int, seed: int, disorder: str) -> list[dict]:
    if KbMode.NO_KB.value not in variants:
        raise MissingNoKBVariant("ablation needs a 'none' variant as reference")
    reference = variants[KbMode.NO_KB.value]
    out = []
    for mode in (m.value for m in KbMode):
        if mode == KbMode.NO_KB.value or mode not in variants:
            continue
        for metric in METRICS:
            est = bootstrap_delta(real, reference, variants[mode], metric, n_resamples, seed)
            out.append({"disorder": disorder, "kb_mode": mode, **est.to_dict()})
    return out


def cmd_ablate(opts: dict) -> int:
    _require(opts, "real", "variant")
    variants = opts["variant"]
    paths = parse_variants(variants) if isinstance(variants, list) else {KbMode(k).value: v for k, v in variants.items()}
    if KbMode.NO_KB.value not in paths:
        raise MissingNoKBVariant("ablation needs a 'none' variant as reference")
    _require_files(opts, "schema", "real")
    for path in paths.values():
        if not Path(path).is_file():
            raise ConfigError(f"variant file not found: {path}")
    schema = _schema(opts)
    real = load_table(opts["real"], schema)
    tables = {m: load_table(p, schema) for m, p in paths.items()}
    deltas = ablation_table(real, tables, int(opts["n_resamples"]), int(opts["seed"]), schema.disorder_name)
    out = _out_dir(opts)
    _write_json(out / f"{opts['name']}.json", {"deltas": deltas})
    print(f"{'kb_mode':<8}{'metric':<8}{'delta':>10}{'ci_low':>10}{'ci_high':>10}")
    for d in deltas:
        print(f"{d['kb_mode']:<8}{d['metric_name']:<8}{_fmt(d['point']):>10}{_fmt(d['ci_low']):>10}{_fmt(d['ci_high']):>10}")
    return EXIT_OK


def cmd_select(opts: dict) -> int:
    _require(opts, "real", "manifest")
    _require_files(opts, "schema", "real", "manifest")
    gates = GateConfig(float(opts["eo_max"]), float(opts["near_share_max"]), float(opts["q05_min"]))
    schema = _schema(opts)
    candidates = load_manifest(opts["manifest"])
    for c in candidates:
        if not Path(c.sample_path).is_file():
            raise ConfigError(f"candidate {c.candidate_id!r}: file not found: {c.sample_path}")
    real = load_table(opts["real"], schema)
    stratify = opts.get("stratify") or None
    if stratify and stratify not in schema.columns:
        stratify = None
    train, tune = stratified_split(real, float(opts["train_fraction"]), stratify, int(opts["split_seed"]))

    scored = [replace(c, scores=score_candidate(load_table(c.sample_path, schema), train, tune)) for c in candidates]
    winner, mode = select(scored, gates)
    payload = {
        "winner_id": winner.candidate_id,
        "mode": mode,
        "all_scores": {c.candidate_id: c.scores.to_dict() for c in sorted(scored, key=lambda c: c.candidate_id)},
        "split": {"n_train": len(train), "n_tune": len(tune), "stratify": stratify, "seed": int(opts["split_seed"])},
        "gates": {"eo_max": gates.eo_max, "near_share_max": gates.near_share_max, "q05_ham_min": gates.q05_ham_min},
    }
    out = _out_dir(opts)
    _write_json(out / f"{opts['name']}.json", payload)
    print(f"{'candidate':<24}{'jsd':>9}{'eo':>9}{'share<=1':>10}{'q05_ham':>9}  gates")
    for c in sorted(scored, key=lambda c: c.candidate_id):
        s = c.scores
        mark = "pass" if gates.passes(s) else "fail"
        print(f"{c.candidate_id:<24}{_fmt(s.jsd):>9}{_fmt(s.eo):>9}{_fmt(s.near_share_le1):>10}{s.q05_ham:>9.2f}  {mark}")
    print(f"winner: {winner.candidate_id} ({mode})")
    return EXIT_OK


def cmd_baseline(opts: dict) -> int:
    _require(opts, "real")
    _require_files(opts, "schema", "real")
    schema = _schema(opts)
    real = load_table(opts["real"], schema)
    table = random_baseline(real, int(opts["seed"]))
    out = _out_dir(opts)
    stem = opts.get("name") or f"{schema.disorder_name}_random"
    (out / f"{stem}.csv").write_text(table_to_csv(table), encoding="utf-8")
    print(f"wrote {len(table)} rows to {out / (stem + '.csv')}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "select": cmd_select,
    "baseline": cmd_baseline,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        opts = _resolve(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KgSynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
