"""Command-line entry point.

Subcommands: kstar, simulate, run, analyze, bounds, fit-alpha.
Exit codes: 0 success, 2 usage/validation error, 3 backend/environment error.
"""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from masinfo import analysis, coverage, harness, info_theory, spectral

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ENV = 3


def _fail(message, code=EXIT_USAGE):
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_out(text, output):
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# kstar


def cmd_kstar(args):
    try:
        ids, raw = spectral.load_embeddings_jsonl(args.embeddings)
        emb = spectral.normalize_embeddings(raw, ids)
        summary = spectral.k_star(emb)
        result = json.loads(summary.to_json())
        if args.mask:
            with open(args.mask) as fh:
                mask = json.load(fh)
            if not isinstance(mask, list) or len(mask) != emb.n:
                raise ValueError(f"mask must be a JSON list of {emb.n} booleans")
            c, w = spectral.k_star_conditioned(emb, [bool(m) for m in mask])
            result["k_star_c"] = c
            result["k_star_w"] = w
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    _write_out(json.dumps(result), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    try:
        params = coverage.CoverageParams.equal_bits(
            alpha=args.alpha, num_channels=args.k_max, seed=args.seed, num_bits=args.m
        )
        curve = coverage.simulate_coverage(params, trials=args.trials)
    except coverage.BadParams as exc:
        return _fail(str(exc))
    text = curve.to_json() if args.format == "json" else curve.to_csv()
    _write_out(text, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def cmd_bounds(args):
    try:
        with open(args.joint) as fh:
            joint = info_theory.DiscreteJoint.from_json(json.load(fh))
        report = info_theory.usable_evidence(joint, n_calls=args.calls)
    except (ValueError, OSError, KeyError) as exc:
        return _fail(str(exc))
    _write_out(report.to_json(), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit-alpha


def cmd_fit_alpha(args):
    try:
        points = []
        with open(args.curve) as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    points.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header row
        alpha_hat, rss = coverage.fit_alpha(points)
    except (coverage.DegenerateCurve, ValueError, OSError, IndexError) as exc:
        return _fail(str(exc))
    _write_out(json.dumps({"alpha_hat": alpha_hat, "rss": rss}), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# run


def _config_hash(config):
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    for key in ("dataset_path", "workflow", "layer", "n_agents_list", "model_pool",
                "seed", "output_dir", "backend"):
        if key not in cfg:
            raise ValueError(f"config missing required field {key!r}")
    if cfg["workflow"] not in ("vote", "debate"):
        raise ValueError(f"invalid workflow {cfg['workflow']!r}")
    if cfg["layer"] not in harness.LAYERS:
        raise ValueError(f"invalid layer {cfg['layer']!r}")
    if not cfg["n_agents_list"]:
        raise ValueError("n_agents_list must be nonempty")
    if not os.path.exists(cfg["dataset_path"]):
        raise ValueError(f"dataset not found: {cfg['dataset_path']}")
    if cfg.get("persona_catalog_path") and not os.path.exists(cfg["persona_catalog_path"]):
        raise ValueError(f"persona catalog not found: {cfg['persona_catalog_path']}")
    return cfg


def _build_backends(cfg):
    b = cfg["backend"]
    kind = b.get("kind", "mock")
    if kind == "mock":
        chat = harness.MockChatBackend(seed=cfg["seed"])
        embed = harness.MockEmbeddingBackend(dim=b.get("dim", 8), seed=cfg["seed"])
        return chat, embed
    if kind == "openai":
        # secrets come only from the environment variable named in config
        api_key = os.environ.get(b.get("api_key_env", ""), None)
        chat = harness.OpenAIChatBackend(b["chat_url"], api_key=api_key)
        embed = None
        if b.get("embed_url"):
            embed = harness.OpenAIEmbeddingBackend(
                b["embed_url"], b.get("embed_model", ""), api_key=api_key
            )
        return chat, embed
    raise ValueError(f"unknown backend kind {kind!r}")


def cmd_run(args):
    try:
        cfg = _load_config(args.config)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc))

    out_dir = cfg["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    chash = _config_hash(cfg)
    manifest_path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            old = json.load(fh)
        if old.get("config_hash") != chash:
            return _fail("output_dir holds a run with a different config; resume refused")

    try:
        tasks = harness.load_tasks_jsonl(cfg["dataset_path"])
        chat, embed = _build_backends(cfg)
        catalog = dict(harness.DEFAULT_PERSONAS)
        if cfg.get("persona_catalog_path"):
            catalog = harness.load_persona_catalog(cfg["persona_catalog_path"])
        plan = harness.DiversityPlan(
            layer=cfg["layer"],
            model_pool=tuple(cfg["model_pool"]),
            persona_pool=tuple(cfg.get("persona_pool", list(catalog))),
            persona_catalog=catalog,
        )
    except (ValueError, OSError) as exc:
        return _fail(str(exc))

    workflow = cfg["workflow"]
    rounds = cfg.get("rounds", 1 if workflow == "vote" else 4)
    concurrency = cfg.get("concurrency_limit", 4)
    dataset_name = cfg.get("dataset_name", os.path.basename(cfg["dataset_path"]))
    started = time.time()
    files = []
    all_invalid = True
    emb_path = os.path.join(out_dir, "embeddings.jsonl")

    for n in cfg["n_agents_list"]:
        store_path = os.path.join(out_dir, f"{workflow}_{cfg['layer']}_N{n}.jsonl")
        store = harness.TranscriptStore(store_path)
        done = store.task_ids()
        files.append(os.path.basename(store_path))
        for task in tasks:
            if str(task["id"]) in done:
                continue
            if workflow == "vote":
                t = harness.run_vote(task, plan, n, chat, concurrency=concurrency,
                                     dataset=dataset_name)
            else:
                t = harness.run_debate(task, plan, n, rounds=rounds, backend=chat,
                                       concurrency=concurrency, dataset=dataset_name)
            store.append(t)
            if not t.invalid:
                all_invalid = False
            if embed is not None and not t.invalid:
                texts = [c["raw_output"] or "" for c in t.calls]
                try:
                    vectors = harness.fetch_embeddings(texts, embed)
                except harness.BackendError:
                    vectors = None
                if vectors:
                    with open(emb_path, "a") as fh:
                        for c, v in zip(t.calls, vectors):
                            fh.write(json.dumps(
                                {"id": f"{t.task_id}:{c['call_index']}", "vector": v}
                            ) + "\n")
        if done:
            all_invalid = False

    manifest = {
        "schema": 1,
        "config_hash": chash,
        "seed": cfg["seed"],
        "workflow": workflow,
        "layer": cfg["layer"],
        "n_agents_list": cfg["n_agents_list"],
        "files": files,
        "started": started,
        "finished": time.time(),
    }
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    if all_invalid:
        return _fail("backend unreachable: every transcript is invalid", EXIT_ENV)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_store_dir(store_dir):
    transcripts = []
    for name in sorted(os.listdir(store_dir)):
        if not name.endswith(".jsonl") or name == "embeddings.jsonl":
            continue
        transcripts.extend(harness.TranscriptStore(os.path.join(store_dir, name)))
    embeddings = None
    emb_path = os.path.join(store_dir, "embeddings.jsonl")
    if os.path.exists(emb_path):
        ids, raw = spectral.load_embeddings_jsonl(emb_path)
        embeddings = {i: v for i, v in zip(ids, raw.tolist())}
    return transcripts, embeddings


def cmd_analyze(args):
    store_dirs = [args.store_dir] + (args.merge or [])
    transcripts, embeddings = [], {}
    try:
        for d in store_dirs:
            ts, emb = _load_store_dir(d)
            transcripts.extend(ts)
            if emb:
                embeddings.update(emb)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    if not transcripts:
        return _fail("store contains no transcripts")
    if not embeddings:
        embeddings = None
        print("warning: no embeddings found; spectral columns omitted", file=sys.stderr)

    try:
        summaries = analysis.summarize_runs(transcripts, embeddings, mode=args.mode)
    except analysis.MissingEmbeddings as exc:
        return _fail(str(exc))

    out_dir = args.output or os.path.join(args.store_dir, "reports")
    os.makedirs(out_dir, exist_ok=True)

    def emit(name, text):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)

    header = ["dataset", "workflow", "layer", "n_agents", "accuracy", "k_star",
              "k_star_c", "k_star_w", "mean_cosine", "task_count", "mode"]
    rows = [
        [s.dataset, s.workflow, s.layer, s.n_agents, s.accuracy, s.k_star,
         s.k_star_c, s.k_star_w, s.mean_cosine, s.task_count, s.mode]
        for s in summaries
    ]
    emit("summaries.csv", _csv_text(header, rows))
    emit("summaries.json", json.dumps([dict(zip(header, r)) for r in rows], indent=2))

    # accuracy-vs-N plot data plus marginal gains per configuration series
    series = {}
    for s in summaries:
        series.setdefault((s.dataset, s.workflow, s.layer), []).append((s.n_agents, s.accuracy))
    acc_rows, gain_rows = [], []
    for (dataset, workflow, layer), pts in sorted(series.items()):
        pts.sort()
        acc_rows += [[dataset, workflow, layer, n, a] for n, a in pts]
        if len(pts) >= 2:
            gain_rows += [
                [dataset, workflow, layer, n, g] for n, g in analysis.marginal_gains(pts)
            ]
    emit("accuracy_vs_n.csv", _csv_text(["dataset", "workflow", "layer", "n_agents", "accuracy"], acc_rows))
    emit("marginal_gains.csv", _csv_text(["dataset", "workflow", "layer", "n_agents", "delta_per_agent"], gain_rows))

    # agents-to-match: L1 series is the baseline within each (dataset, workflow)
    match_rows = []
    for (dataset, workflow), _ in {(d, w): None for d, w, _l in series}.items():
        base = series.get((dataset, workflow, "L1"))
        if not base:
            continue
        for layer in harness.LAYERS[1:]:
            cand = series.get((dataset, workflow, layer))
            if not cand:
                continue
            n_match, acc = analysis.agents_to_match(sorted(base), sorted(cand))
            match_rows.append([dataset, workflow, layer, n_match, acc])
    emit("agents_to_match.csv",
         _csv_text(["dataset", "workflow", "layer", "n_match", "acc_at_match"], match_rows))

    if embeddings is not None:
        entries, skipped = analysis.boundary_classification(summaries)
        emit("boundary.csv", _csv_text(
            ["config", "side", "tie"], [[c, side, t] for c, side, t in entries]
        ))
        spec_rows = [(s.k_star, s.accuracy) for s in summaries if s.k_star is not None]
        emit("kstar_vs_accuracy.csv",
             _csv_text(["k_star", "accuracy"], [list(r) for r in spec_rows]))
        if len(spec_rows) >= 5:
            x = [r[0] for r in spec_rows]
            y = [r[1] for r in spec_rows]
            try:
                perm = analysis.permutation_test(x, y, shuffles=1000, seed=args.seed)
                emit("permutation_report.json", json.dumps(perm.__dict__, indent=2))
            except analysis.DegenerateInput:
                pass
            layers = sorted({s.layer for s in summaries})
            base_feats = [
                [s.n_agents] + [1.0 if s.layer == l else 0.0 for l in layers[1:]]
                for s in summaries if s.k_star is not None
            ]
            extra = [[s.k_star] for s in summaries if s.k_star is not None]
            try:
                reg = analysis.ols_incremental_r2(
                    np.array(base_feats), np.array(extra), np.array(y),
                    names=["n_agents"] + [f"layer_{l}" for l in layers[1:]] + ["k_star"],
                )
                emit("regression_report.json", json.dumps({
                    "r2_baseline": reg.r2_baseline,
                    "r2_augmented": reg.r2_augmented,
                    "delta_r2": reg.delta_r2,
                    "coefficients": list(reg.coefficients),
                    "n_obs": reg.n_obs,
                }, indent=2))
            except (analysis.SingularDesign, analysis.DegenerateInput):
                pass
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="masinfo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kstar", help="effective channel count from an embedding JSONL file")
    k.add_argument("embeddings")
    k.add_argument("--mask", help="JSON list of per-row correctness booleans")
    k.add_argument("--output")
    k.set_defaults(func=cmd_kstar)

    s = sub.add_parser("simulate", help="Monte Carlo evidence-coverage contraction curve")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--m", type=int, default=16, help="number of evidence bits")
    s.add_argument("--k-max", type=int, default=10)
    s.add_argument("--trials", type=int, default=coverage.DEFAULT_TRIALS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--output")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="information budget report for a joint JSON file")
    b.add_argument("joint")
    b.add_argument("--calls", type=int, default=None)
    b.add_argument("--output")
    b.set_defaults(func=cmd_bounds)

    f = sub.add_parser("fit-alpha", help="fit the coverage rate to a (k, fraction) CSV")
    f.add_argument("curve")
    f.add_argument("--output")
    f.set_defaults(func=cmd_fit_alpha)

    r = sub.add_parser("run", help="execute a vote/debate experiment from a config file")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="report bundle from a transcript store directory")
    a.add_argument("store_dir")
    a.add_argument("--merge", nargs="*", help="additional store directories to merge")
    a.add_argument("--mode", choices=("per-question", "pooled"), default="per-question")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--output")
    a.set_defaults(func=cmd_analyze)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
