"""Command-line interface.

Subcommands cover each pipeline stage plus the full run:

    ingest, density, mfpca (fit | scores | reconstruct), cluster,
    evaluate, bootstrap, export (mean | eigenfunction | player | medoids),
    run

Exit codes: 0 on success, 1 for usage or configuration problems, and a
distinct code per failing stage: ingest 2, density 3, mfpca 4,
cluster 5, evaluate 6, bootstrap 7, export 8. The COURT_FDA_THREADS
environment variable sets the default worker count; --threads overrides.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from court_fda import bootstrap as bt
from court_fda import cluster as cl
from court_fda import metrics as mt
from court_fda import pipeline as pl
from court_fda.density import build_samples
from court_fda.export import export_heatmap, write_heatmap_csv
from court_fda.fda import load_model, project_scores_all, reconstruct, save_model, fit_mfpca
from court_fda.grids import GridSpec
from court_fda.ingest import (
    CourtSpec,
    exclude_impossible,
    filter_players,
    load_events,
    read_players_json,
    write_players_json,
)

USAGE_EXIT = 1
STAGE_EXIT = {stage: code for code, stage in enumerate(pl.STAGES, start=2)}
STAGE_EXIT["run"] = USAGE_EXIT


def _threads_default() -> int:
    raw = os.environ.get("COURT_FDA_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _court(args) -> CourtSpec:
    return CourtSpec(args.court_width, args.court_depth)


def cmd_ingest(args) -> int:
    events = load_events(args.input, _court(args))
    if not events:
        raise ValueError(f"no shot events in {args.input}")
    retained = exclude_impossible(events)
    records = filter_players(retained, args.min_attempts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_players_json(records, out / "players.json")
    print(
        f"parsed {len(events)} events, retained {len(retained)} in bounds, "
        f"{len(records)} players above {args.min_attempts} attempts -> {out / 'players.json'}"
    )
    return 0


def cmd_density(args) -> int:
    records = read_players_json(args.players)
    grid = GridSpec(args.grid, args.grid)
    samples = build_samples(records, grid, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_densities(out, samples)
    if args.dump_densities:
        dump = Path(args.dump_densities)
        dump.mkdir(parents=True, exist_ok=True)
        for s in samples:
            safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in s.player_id)
            for comp in ("missed", "made"):
                write_heatmap_csv(getattr(s, comp).values, grid, dump / f"{safe}_{comp}.csv")
    print(f"estimated {len(samples)} density pairs on a {grid.nx}x{grid.ny} grid -> {out}")
    return 0


def cmd_mfpca_fit(args) -> int:
    samples = pl.read_densities(args.densities)
    model = fit_mfpca(samples, n_components=args.components, variance_threshold=args.variance)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    pl.write_scores_csv(model.scores, out / "scores.csv")
    shares = ", ".join(f"{r:.4f}" for r in model.variance_ratios)
    print(f"fitted {model.n_components} components (variance shares {shares}) -> {out / 'model.json'}")
    return 0


def cmd_mfpca_scores(args) -> int:
    model = load_model(args.model)
    samples = pl.read_densities(args.densities)
    scores = project_scores_all(samples, model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_scores_csv(scores, out / "scores.csv")
    print(f"projected {len(samples)} samples onto {model.n_components} components -> {out / 'scores.csv'}")
    return 0


def cmd_mfpca_reconstruct(args) -> int:
    model = load_model(args.model)
    try:
        idx = model.scores.player_ids.index(args.player)
    except ValueError:
        raise ValueError(f"player {args.player!r} is not in the fitted model") from None
    k = args.k if args.k is not None else model.n_components
    field = reconstruct(model.scores.values[idx, :k], model)
    out = Path(args.out)
    for comp_idx, comp in enumerate(("missed", "made")):
        export_heatmap(field[comp_idx], model.grid, out / f"reconstruction_{args.player}_k{k}_{comp}", mode="unit")
    print(f"reconstructed {args.player} with {k} components -> {out}")
    return 0


def cmd_cluster(args) -> int:
    scores = pl.read_scores_csv(args.scores)
    scheme = cl.WeightScheme(args.weights)
    eigenvalues = None
    if scheme is cl.WeightScheme.VARIANCE_PROPORTION:
        if not args.model:
            raise ValueError("--model is required for variance-proportion weighting")
        eigenvalues = load_model(args.model).eigenvalues
    standardized = cl.standardize_scores(scores)
    dist = cl.distance_matrix(standardized, scheme, eigenvalues)
    clustering = cl.kmedoids(dist, args.k, seed=args.seed)
    weights = cl.resolve_weights(scheme, scores.n_components, eigenvalues)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = pl.clustering_to_dict(clustering, scheme, weights, scores.player_ids)
    (out / f"clusters_{scheme.value}.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    if args.players:
        records = read_players_json(args.players)
        by_id = {r.player_id: r for r in records}
        ordered = [by_id[pid] for pid in scores.player_ids]
        (out / f"roster_{scheme.value}.txt").write_text(
            cl.format_roster(clustering, ordered), encoding="utf-8"
        )
    print(
        f"k-medoids (k={args.k}, {scheme.value} weights): total cost {clustering.total_cost:.6f} -> {out}"
    )
    return 0


def _load_cluster_partition(path: str) -> tuple[mt.Partition, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not {"players", "weights", "scheme"} <= set(doc):
        raise ValueError(f"malformed clustering document {path}")
    labels = np.array([p["cluster"] for p in doc["players"]], dtype=int)
    return mt.Partition(labels), doc


def cmd_evaluate(args) -> int:
    part_a, doc_a = _load_cluster_partition(args.clusters)
    ids_a = [p["player_id"] for p in doc_a["players"]]
    scores = pl.read_scores_csv(args.scores)
    if scores.player_ids != ids_a:
        raise ValueError("score rows do not match the clustering's player order")
    standardized = cl.standardize_scores(scores)
    weights = np.array(doc_a["weights"], dtype=float)
    scaled = standardized.values * np.sqrt(weights)
    diff = scaled[:, None, :] - scaled[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))

    if args.against == "nba":
        if not args.players:
            raise ValueError("--players is required to evaluate against the position labels")
        records = read_players_json(args.players)
        by_id = {r.player_id: r for r in records}
        part_b = mt.positions_partition([by_id[pid] for pid in ids_a])
        name_b = "nba"
    else:
        part_b, doc_b = _load_cluster_partition(args.against)
        if [p["player_id"] for p in doc_b["players"]] != ids_a:
            raise ValueError("the two clusterings cover different players")
        name_b = doc_b["scheme"]

    values, mean = mt.silhouette(dist, part_a)
    result = {
        "comparison": pl.comparison_report(doc_a["scheme"], part_a, name_b, part_b),
        "silhouette": {
            "mean": mean,
            "per_cluster": {f"cluster_{c + 1}": v for c, v in mt.per_cluster_silhouette(values, part_a).items()},
        },
    }
    text = json.dumps(result, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_bootstrap(args) -> int:
    samples = pl.read_densities(args.densities)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = bt.stability_study(
        samples,
        n_replicates=args.replicates,
        n_components=args.components,
        seed=args.seed,
        dump_dir=out / "replicates",
    )
    (out / "stability.json").write_text(
        json.dumps(bt.report_to_dict(report), sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    mean_alignment = ", ".join(f"{a:.4f}" for a in report.mean_alignment())
    print(f"{args.replicates} replicates, mean alignments per component: {mean_alignment} -> {out}")
    return 0


def cmd_export(args) -> int:
    out = Path(args.out)
    if args.what in ("mean", "eigenfunction"):
        model = load_model(args.model)
        if args.what == "mean":
            for comp_idx, comp in enumerate(("missed", "made")):
                export_heatmap(model.mean[comp_idx], model.grid, out / f"mean_{comp}")
            print(f"exported mean components -> {out}")
        else:
            if args.k is None or not 1 <= args.k <= model.n_components:
                raise ValueError(f"--k must be in [1, {model.n_components}]")
            pair = model.pairs[args.k - 1]
            for comp_idx, comp in enumerate(("missed", "made")):
                export_heatmap(pair.eigenfunction[comp_idx], model.grid, out / f"eigenfunction_{args.k}_{comp}")
            print(f"exported eigenfunction {args.k} -> {out}")
    elif args.what == "player":
        model = load_model(args.model)
        samples = pl.read_densities(args.densities)
        sample = next((s for s in samples if s.player_id == args.player), None)
        if sample is None:
            raise ValueError(f"player {args.player!r} is not in the density set")
        idx = model.scores.player_ids.index(args.player) if args.player in model.scores.player_ids else None
        scores = model.scores.values[idx] if idx is not None else None
        for comp_idx, comp in enumerate(("missed", "made")):
            export_heatmap(sample.stacked()[comp_idx], model.grid, out / f"player_{args.player}_{comp}", mode="unit")
            export_heatmap(model.mean[comp_idx], model.grid, out / f"player_{args.player}_mean_{comp}")
            if scores is not None:
                for j, pair in enumerate(model.pairs, start=1):
                    contribution = scores[j - 1] * pair.eigenfunction[comp_idx]
                    export_heatmap(
                        contribution, model.grid, out / f"player_{args.player}_component_{j}_{comp}"
                    )
        print(f"exported decomposition of {args.player} -> {out}")
    else:  # medoids
        _, doc = _load_cluster_partition(args.clusters)
        samples = pl.read_densities(args.densities)
        by_id = {s.player_id: s for s in samples}
        for j, pid in enumerate(doc["medoid_player_ids"], start=1):
            if pid not in by_id:
                raise ValueError(f"medoid player {pid!r} is not in the density set")
            for comp in ("missed", "made"):
                export_heatmap(
                    getattr(by_id[pid], comp).values,
                    by_id[pid].grid,
                    out / f"medoid_{doc['scheme']}_cluster{j}_{comp}",
                    mode="unit",
                )
        print(f"exported {len(doc['medoid_player_ids'])} medoid charts -> {out}")
    return 0


def cmd_run(args) -> int:
    base = pl.PipelineConfig.from_file(args.config).to_dict() if args.config else pl.PipelineConfig().to_dict()
    overrides = {
        "input": args.input,
        "out": args.out,
        "min_attempts": args.min_attempts,
        "grid": args.grid,
        "components": args.components,
        "variance_threshold": args.variance,
        "clusters": args.k,
        "weight_scheme": args.weights,
        "bootstrap_replicates": args.replicates,
        "seed": args.seed,
        "court_width": args.court_width,
        "court_depth": args.court_depth,
        "threads": args.threads,
        "dump_densities": args.dump_densities or None,
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if args.variance is not None and args.components is None:
        base["components"] = None
    if args.components is not None and args.variance is None:
        base["variance_threshold"] = None
    config = pl.PipelineConfig.from_dict(base)
    manifest = pl.run_pipeline(config)
    print(
        f"pipeline complete: {manifest['summary']['players_retained']} players, "
        f"{manifest['summary']['components']} components, "
        f"{len(manifest['files'])} files -> {Path(config.out) / 'run.json'}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="court-fda", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    threads = _threads_default()

    def add_court(p):
        p.add_argument("--court-width", type=float, default=50.0)
        p.add_argument("--court-depth", type=float, default=47.0)

    p = sub.add_parser("ingest", help="parse, normalize, and filter a shot export")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-attempts", type=int, default=1000)
    add_court(p)
    p.set_defaults(func=cmd_ingest, stage="ingest")

    p = sub.add_parser("density", help="estimate per-player density pairs")
    p.add_argument("--players", required=True, help="players.json from ingest")
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--dump-densities", default=None, help="directory for per-player CSV dumps")
    p.add_argument("--threads", type=int, default=threads)
    p.set_defaults(func=cmd_density, stage="density")

    p = sub.add_parser("mfpca", help="fit, score, or reconstruct")
    msub = p.add_subparsers(dest="subcommand", required=True)

    pf = msub.add_parser("fit")
    pf.add_argument("--densities", required=True, help="directory holding the density stack")
    pf.add_argument("--out", required=True)
    group = pf.add_mutually_exclusive_group()
    group.add_argument("--components", type=int, default=None)
    group.add_argument("--variance", type=float, default=None)
    pf.set_defaults(func=lambda a: cmd_mfpca_fit(_default_components(a)), stage="mfpca")

    ps = msub.add_parser("scores")
    ps.add_argument("--model", required=True)
    ps.add_argument("--densities", required=True)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_mfpca_scores, stage="mfpca")

    pr = msub.add_parser("reconstruct")
    pr.add_argument("--model", required=True)
    pr.add_argument("--player", required=True)
    pr.add_argument("--k", type=int, default=None)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_mfpca_reconstruct, stage="mfpca")

    p = sub.add_parser("cluster", help="k-medoids on component scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--weights", choices=["equal", "variance"], default="equal")
    p.add_argument("--model", default=None, help="model.json (required for variance weights)")
    p.add_argument("--players", default=None, help="players.json for the roster listing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster, stage="cluster")

    p = sub.add_parser("evaluate", help="compare a clustering to another partition")
    p.add_argument("--clusters", required=True)
    p.add_argument("--against", required=True, help="'nba' or another clusters JSON")
    p.add_argument("--scores", required=True)
    p.add_argument("--players", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate, stage="evaluate")

    p = sub.add_parser("bootstrap", help="resampling stability of the components")
    p.add_argument("--densities", required=True)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--components", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bootstrap, stage="bootstrap")

    p = sub.add_parser("export", help="heatmap exports of fitted or raw fields")
    p.add_argument("what", choices=["mean", "eigenfunction", "player", "medoids"])
    p.add_argument("--model", default=None)
    p.add_argument("--densities", default=None)
    p.add_argument("--clusters", default=None)
    p.add_argument("--player", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export, stage="export")

    p = sub.add_parser("run", help="full pipeline with manifest")
    p.add_argument("--input", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None, help="flat JSON config; flags override its values")
    p.add_argument("--min-attempts", type=int, default=None)
    p.add_argument("--grid", type=int, default=None)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--components", type=int, default=None)
    group.add_argument("--variance", type=float, default=None)
    p.add_argument("--k", type=int, default=None, help="cluster count")
    p.add_argument("--weights", choices=["equal", "variance", "both"], default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--court-width", type=float, default=None)
    p.add_argument("--court-depth", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dump-densities", action="store_true", default=False)
    p.set_defaults(func=cmd_run, stage="run")

    return parser


def _default_components(args):
    if args.components is None and args.variance is None:
        args.components = 4
    return args


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except pl.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return STAGE_EXIT.get(exc.stage, USAGE_EXIT)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return STAGE_EXIT.get(getattr(args, "stage", ""), USAGE_EXIT)


if __name__ == "__main__":
    sys.exit(main())
