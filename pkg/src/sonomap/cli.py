"""Command-line surface for batch workflows.

One executable, subcommand style. Every subcommand prints a one-line
human summary to stdout and, when --out is given, writes a JSON report
with stable key ordering (pass --no-timestamp for byte-reproducible
output). Exit codes: 0 success, 1 input/validation error, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import Modality
from .errors import AdapterFailure, SonomapError, UnknownId, WrongModality
from .evaluate import (
    correlate,
    inconsistency_histogram,
    mos_aggregate,
    pair_stats,
    read_metric_csv,
    read_pair_list,
    read_ratings,
)
from .metrics import InconsistencyReport, SlerpParams, inconsistency
from .retrieval import AdapterSpec, sonorize_scheme1, sonorize_scheme2
from .store import ingest, read_manifest, write_archive, write_manifest
from .synth import SyntheticSpaceConfig, generate

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; bad flags are validation failures here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _write_report(path, kind: str, payload: dict, no_timestamp: bool) -> None:
    report = {"schema_version": SCHEMA_VERSION, "kind": kind, **payload}
    if not no_timestamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _load_store(args):
    return ingest(args.manifest, args.archive, normalize_vectors=not args.no_normalize)


def _slerp_params(args) -> SlerpParams:
    return SlerpParams(theta=args.theta, distance_kind=args.distance)


# -- subcommand handlers -------------------------------------------------------


def _cmd_ingest(args) -> int:
    store = _load_store(args)
    counts = store.counts()
    payload = {
        "dim": store.dim,
        "counts": counts,
        "n_assets": len(store.assets()),
        "scenes": sorted(store.scenes()),
        "normalized": not args.no_normalize,
    }
    if args.out:
        _write_report(args.out, "ingest", payload, args.no_timestamp)
    total = sum(counts.values())
    print(
        f"ingested {total} embeddings ({counts['image']} image, {counts['text']} text, "
        f"{counts['audio']} audio) across {len(store.scenes())} scenes, dim={store.dim}"
    )
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = SyntheticSpaceConfig(
        dim=args.dim,
        n_scenes=args.scenes,
        frames_per_scene=args.frames_per_scene,
        texts_per_frame=args.texts_per_frame,
        audios_per_frame=args.audios_per_frame,
        gap_angle=args.gap_angle,
        intra_scene_spread=args.spread,
        noise=args.noise,
        seed=args.seed,
    )
    records, store = generate(cfg)
    write_manifest(args.manifest, records)
    write_archive(args.archive, store.dim, [store.get(i) for i in store.ids()])
    counts = store.counts()
    if args.out:
        payload = {"config": {**cfg.__dict__}, "counts": counts}
        _write_report(args.out, "synth", payload, args.no_timestamp)
    print(
        f"generated {len(store)} embeddings ({counts['image']} image, {counts['text']} text, "
        f"{counts['audio']} audio) -> {args.manifest}, {args.archive}"
    )
    return EXIT_OK


def _cmd_rank(args) -> int:
    store = _load_store(args)
    if args.frames:
        frame_ids = [f.strip() for f in args.frames.split(",") if f.strip()]
    else:
        frame_ids = [emb.id for emb in store.by_modality(Modality.IMAGE)]
    if not frame_ids:
        raise UnknownId("no image embeddings to rank for")
    results = []
    for fid in frame_ids:
        frame = store.get(fid)
        if frame.modality is not Modality.IMAGE:
            raise WrongModality(f"id {fid!r} is {frame.modality.wire_name}, not image")
        plan = sonorize_scheme1(frame, store, k=args.k)
        results.append(
            {
                "query_id": plan.frame_id,
                "metric_name": plan.candidates.metric_name,
                "entries": [[cid, score] for cid, score in plan.candidates.entries],
                "chosen_audio_id": plan.chosen_audio_id,
                "scheme": plan.scheme,
            }
        )
    if args.out:
        _write_report(args.out, "rank", {"k": args.k, "results": results}, args.no_timestamp)
    print(f"ranked audio candidates for {len(results)} frames (k={args.k})")
    return EXIT_OK


def _cmd_sonorize2(args) -> int:
    assets = {rec.id: rec for rec in read_manifest(args.manifest)}
    if args.frame_id not in assets:
        raise UnknownId(f"frame {args.frame_id!r} not in manifest")
    frame_asset = assets[args.frame_id]
    captioner = AdapterSpec("captioner", args.captioner_cmd, args.captioner_variants, args.timeout)
    generator = AdapterSpec("audio_generator", args.generator_cmd, args.generator_variants, args.timeout)
    encoder = AdapterSpec("encoder", args.encoder_cmd, 1, args.timeout)
    plan = sonorize_scheme2(
        frame_asset, captioner, generator, encoder, k=args.k, workdir=args.workdir
    )
    if args.out:
        payload = {
            "frame_id": plan.frame_id,
            "scheme": plan.scheme,
            "chosen_audio_id": plan.chosen_audio_id,
            "entries": [[cid, score] for cid, score in plan.candidates.entries],
            "metric_name": plan.candidates.metric_name,
            "lineage": [
                {
                    "audio_id": lin.audio_id,
                    "caption_id": lin.caption_id,
                    "caption_index": lin.caption_index,
                    "variant_index": lin.variant_index,
                    "caption": lin.caption,
                }
                for lin in plan.lineage
            ],
        }
        _write_report(args.out, "sonorize2", payload, args.no_timestamp)
    print(
        f"frame {plan.frame_id}: chose {plan.chosen_audio_id} "
        f"from {len(plan.lineage)} generated candidates"
    )
    return EXIT_OK


def _iter_inconsistency_reports(store) -> list[InconsistencyReport]:
    reports = []
    for frame in store.by_modality(Modality.IMAGE):
        texts = store.siblings(frame.id, Modality.TEXT)
        audios = store.siblings(frame.id, Modality.AUDIO)
        for text, audio in zip(texts, audios):
            reports.append(inconsistency(frame, text, audio))
    return reports


def _cmd_inc(args) -> int:
    store = _load_store(args)
    reports = _iter_inconsistency_reports(store)
    payload = {
        "reports": [
            {
                "frame_id": rep.frame_id,
                "text_id": rep.text_id,
                "audio_id": rep.audio_id,
                "d_image_text": rep.d_image_text,
                "d_image_audio": rep.d_image_audio,
                "inc": rep.inc,
            }
            for rep in reports
        ],
        "count": len(reports),
    }
    if reports:
        payload["mean_inc"] = sum(r.inc for r in reports) / len(reports)
        payload["mean_d_image_text"] = sum(r.d_image_text for r in reports) / len(reports)
        payload["mean_d_image_audio"] = sum(r.d_image_audio for r in reports) / len(reports)
    if args.out:
        _write_report(args.out, "inconsistency", payload, args.no_timestamp)
    mean_part = f", mean inc {payload['mean_inc']:+.4f}" if reports else ""
    print(f"computed {len(reports)} inconsistency triples{mean_part}")
    return EXIT_OK


def _cmd_slerp_eval(args) -> int:
    store = _load_store(args)
    references = read_pair_list(args.references)
    targets = read_pair_list(args.targets)
    cells = pair_stats(store, references, targets, _slerp_params(args))
    payload = {
        "theta": args.theta,
        "distance": args.distance,
        "cells": [
            {
                "audio_relation": c.audio_relation,
                "image_relation": c.image_relation,
                "mean": c.mean,
                "std": c.std,
                "n": c.n,
            }
            for c in cells
        ],
    }
    if args.out:
        _write_report(args.out, "slerp-eval", payload, args.no_timestamp)
    populated = sum(1 for c in cells if c.n)
    print(
        f"target-distance stats over {len(references)} references x {len(targets)} targets "
        f"({populated}/4 cells populated, distance={args.distance}, theta={args.theta})"
    )
    return EXIT_OK


def _cmd_hist(args) -> int:
    data = json.loads(Path(args.reports).read_text(encoding="utf-8"))
    raw = data.get("reports")
    if raw is None:
        raise SonomapError(f"{args.reports}: no 'reports' array (expected an inc report)")
    reports = [
        InconsistencyReport(
            frame_id=r["frame_id"],
            text_id=r["text_id"],
            audio_id=r["audio_id"],
            d_image_text=r["d_image_text"],
            d_image_audio=r["d_image_audio"],
            inc=r["inc"],
        )
        for r in raw
    ]
    hist = inconsistency_histogram(reports, args.component, args.bins)
    payload = {
        "component": args.component,
        "bin_edges": list(hist.bin_edges),
        "counts": list(hist.counts),
        "total": hist.total,
    }
    if args.out:
        _write_report(args.out, "histogram", payload, args.no_timestamp)
    print(f"histogram of {args.component}: {hist.total} values in {len(hist.counts)} bins")
    return EXIT_OK


def _cmd_mos(args) -> int:
    ratings = read_ratings(args.ratings)
    assets = read_manifest(args.manifest) if args.manifest else None
    groups = mos_aggregate(ratings, group_by=args.group_by, assets=assets)
    payload = {
        "group_by": args.group_by,
        "groups": [
            {"group": g.group, "mean": g.mean, "std": g.std, "n": g.n} for g in groups
        ],
    }
    if args.out:
        _write_report(args.out, "mos", payload, args.no_timestamp)
    print(f"aggregated {len(ratings)} ratings into {len(groups)} {args.group_by} groups")
    return EXIT_OK


def _cmd_correlate(args) -> int:
    ratings = read_ratings(args.ratings)
    metric_values = read_metric_csv(args.metrics)
    report = correlate(
        ratings, metric_values, args.metric_name, average_raters=not args.no_average
    )
    payload = {"metric_name": report.metric_name, "r": report.r, "n": report.n}
    if args.out:
        _write_report(args.out, "correlation", payload, args.no_timestamp)
    print(f"pearson r between {report.metric_name} and MOS: {report.r:+.4f} (n={report.n})")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    pair_sets = None
    if args.pair_sets:
        raw = json.loads(Path(args.pair_sets).read_text(encoding="utf-8"))
        pair_sets = {name: [tuple(p) for p in pairs] for name, pairs in raw.items()}
    reference_audio = None
    if args.reference_audio:
        reference_audio = json.loads(Path(args.reference_audio).read_text(encoding="utf-8"))
    app = create_app(
        args.manifest,
        args.ratings,
        args.journal,
        media_root=args.media_root,
        pair_sets=pair_sets,
        reference_audio=reference_audio,
        ui_dist=args.ui_dist,
    )
    print(f"serving rating sessions on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def _add_store_flags(p, normalize_flag=True):
    p.add_argument("--manifest", required=True, help="asset manifest (JSON lines)")
    p.add_argument("--archive", required=True, help="embedding archive (EMB1)")
    if normalize_flag:
        p.add_argument(
            "--no-normalize",
            action="store_true",
            help="keep raw vector magnitudes instead of unit-normalizing on ingest",
        )


def _add_report_flags(p):
    p.add_argument("--out", help="write a JSON report here")
    p.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit generated_at from reports (byte-reproducible output)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sonomap", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sonomap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and summarize a manifest + archive")
    _add_store_flags(p)
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_ingest)

    p = sub.add_parser("synth", help="emit a synthetic manifest + archive")
    p.add_argument("--manifest", required=True, help="output manifest path")
    p.add_argument("--archive", required=True, help="output archive path")
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--scenes", type=int, default=3)
    p.add_argument("--frames-per-scene", type=int, default=4)
    p.add_argument("--texts-per-frame", type=int, default=1)
    p.add_argument("--audios-per-frame", type=int, default=1)
    p.add_argument("--gap-angle", type=float, default=0.3, help="modality gap, radians")
    p.add_argument("--spread", type=float, default=0.05, help="intra-scene spread, radians")
    p.add_argument("--noise", type=float, default=0.0, help="per-child noise, radians")
    p.add_argument("--seed", type=int, default=0)
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("rank", help="retrieval-based sonorization over a store")
    _add_store_flags(p)
    p.add_argument("--frames", help="comma-separated frame ids (default: every image)")
    p.add_argument("--k", type=int, default=10, help="candidates kept per frame")
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("sonorize2", help="caption -> generate -> encode -> rank for one frame")
    p.add_argument("--manifest", required=True)
    p.add_argument("--frame-id", required=True)
    p.add_argument("--captioner-cmd", required=True, help="template with {input} {output}")
    p.add_argument("--generator-cmd", required=True, help="template with {input} {output} [{k}]")
    p.add_argument("--encoder-cmd", required=True, help="template with {input} {output}")
    p.add_argument("--captioner-variants", type=int, default=20)
    p.add_argument("--generator-variants", type=int, default=1)
    p.add_argument("--timeout", type=float, default=60.0, help="per-invocation timeout, seconds")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--workdir", help="keep intermediate files here instead of a temp dir")
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_sonorize2)

    p = sub.add_parser("inc", help="batch inconsistency over sibling (text, audio) pairs")
    _add_store_flags(p)
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_inc)

    p = sub.add_parser("slerp-eval", help="target-distance pair statistics")
    _add_store_flags(p)
    p.add_argument("--references", required=True, help="CSV of reference frame_id,audio_id pairs")
    p.add_argument("--targets", required=True, help="CSV of target frame_id,audio_id pairs")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--distance", choices=["cosine", "euclidean"], default="cosine")
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_slerp_eval)

    p = sub.add_parser("hist", help="histogram a component of an inc report")
    p.add_argument("--reports", required=True, help="JSON report produced by `sonomap inc`")
    p.add_argument(
        "--component",
        choices=["d_image_text", "d_image_audio", "inc"],
        default="inc",
    )
    p.add_argument("--bins", type=int, default=20)
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_hist)

    p = sub.add_parser("mos", help="aggregate MOS ratings per scene or pair")
    p.add_argument("--ratings", required=True, help="ratings CSV")
    p.add_argument("--group-by", choices=["scene", "pair"], default="scene")
    p.add_argument("--manifest", help="manifest for frame -> scene lookup")
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_mos)

    p = sub.add_parser("correlate", help="Pearson correlation between a metric and MOS")
    p.add_argument("--ratings", required=True, help="ratings CSV")
    p.add_argument("--metrics", required=True, help="CSV with header frame_id,audio_id,value")
    p.add_argument("--metric-name", default="metric")
    p.add_argument(
        "--no-average",
        action="store_true",
        help="treat each rating as an independent point instead of averaging per pair",
    )
    _add_report_flags(p)
    p.set_defaults(handler=_cmd_correlate)

    p = sub.add_parser("serve", help="run the rating service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratings", required=True, help="append-only ratings CSV")
    p.add_argument("--journal", required=True, help="append-only session journal")
    p.add_argument("--media-root", help="directory served under /media/")
    p.add_argument("--pair-sets", help="JSON file of named pair lists")
    p.add_argument("--reference-audio", help="JSON file mapping scene -> reference audio id")
    p.add_argument("--ui-dist", help="built rating UI to serve at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except AdapterFailure as exc:
        print(f"sonomap: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (SonomapError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"sonomap: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - unexpected breakage
        print(f"sonomap: internal error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
