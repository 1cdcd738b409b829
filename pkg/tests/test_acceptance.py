"""Acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line (run
with `pytest -s tests/test_acceptance.py` to see them inline). Headline
corpus-scale numbers are not reproducible without the proprietary assets
and encoders, so these criteria are property-based plus fixed corner
cases, at the stated tolerances.
"""

import json
import time
from contextlib import contextmanager
from datetime import datetime, timezone

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sonomap.cli import EXIT_OK, main
from sonomap.core import Embedding, Modality, cosine_similarity, dis_cos, slerp
from sonomap.errors import ParseError
from sonomap.evaluate import (
    RatingRecord,
    correlate,
    mos_aggregate,
    pair_stats,
    pearson,
    read_ratings,
    write_metric_csv,
    write_ratings,
)
from sonomap.metrics import (
    DistanceKind,
    SlerpParams,
    inconsistency,
    slerp_distance,
)
from sonomap.retrieval import sonorize_scheme1
from sonomap.service import create_app
from sonomap.store import AssetRecord, build_store, read_archive, write_archive, write_manifest
from sonomap.synth import SyntheticSpaceConfig, generate

from conftest import random_unit_emb, unit_emb

TS = datetime(2026, 3, 1, tzinfo=timezone.utc)


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL: {name}")
        raise
    print(f"ACCEPTANCE PASS: {name}")


def test_ec1_corner_cases():
    with criterion("ec1-corner-cases (inc = 0, 2, -1, 1 at the distance corners)"):
        img = unit_emb("i", Modality.IMAGE, [1.0, 0.0])
        plus = [1.0, 0.0]
        minus = [-1.0, 0.0]
        cases = [
            (plus, plus, 0.0),    # d_it=0, d_ia=0
            (minus, plus, 2.0),   # d_it=1, d_ia=0
            (plus, minus, -1.0),  # d_it=0, d_ia=1
            (minus, minus, 1.0),  # d_it=1, d_ia=1
        ]
        for text_vec, audio_vec, expected in cases:
            rep = inconsistency(
                img,
                unit_emb("t", Modality.TEXT, text_vec),
                unit_emb("a", Modality.AUDIO, audio_vec),
            )
            assert rep.inc == pytest.approx(expected, abs=1e-9)
            assert -1.0 <= rep.inc <= 2.0


def test_slerp_suite():
    with criterion("slerp-suite (endpoints/norm/equidistance/symmetry, 1000 pairs x dims 3/64/1024, <5s)"):
        start = time.perf_counter()
        for dim in (3, 64, 1024):
            rng = np.random.default_rng(dim)
            for i in range(1000):
                a = random_unit_emb(rng, "a", Modality.IMAGE, dim)
                b = random_unit_emb(rng, "b", Modality.IMAGE, dim)
                theta = float(rng.uniform(0.0, 1.0))

                np.testing.assert_allclose(slerp(a, b, 0.0).vector, a.vector, atol=1e-6)
                np.testing.assert_allclose(slerp(a, b, 1.0).vector, b.vector, atol=1e-6)

                out = slerp(a, b, theta)
                assert abs(np.linalg.norm(out.as_float64()) - 1.0) <= 1e-6

                mid = slerp(a, b, 0.5)
                assert abs(cosine_similarity(mid, a) - cosine_similarity(mid, b)) <= 1e-6

                np.testing.assert_allclose(
                    slerp(a, b, theta).vector, slerp(b, a, 1.0 - theta).vector, atol=1e-6
                )
        elapsed = time.perf_counter() - start
        assert elapsed < 5.0, f"slerp suite took {elapsed:.2f}s"


def test_ec3_identity_and_ranking_equivalence():
    with criterion("ec3-identity (distance(x,x)=0 both kinds; cosine/euclidean rank identically)"):
        rng = np.random.default_rng(99)
        x = random_unit_emb(rng, "x", Modality.AUDIO, 16)
        for kind in DistanceKind:
            assert slerp_distance(x, x, SlerpParams(distance_kind=kind)) == pytest.approx(
                0.0, abs=1e-9
            )
        for trial in range(100):
            target = random_unit_emb(rng, "t", Modality.AUDIO, 16)
            candidates = [
                random_unit_emb(rng, f"c{i:02d}", Modality.AUDIO, 16) for i in range(25)
            ]
            orders = []
            for kind in DistanceKind:
                params = SlerpParams(distance_kind=kind)
                scored = sorted(
                    ((slerp_distance(c, target, params), c.id) for c in candidates)
                )
                orders.append([cid for _, cid in scored])
            assert orders[0] == orders[1], f"ranking diverged on trial {trial}"


def test_table1_ordering_property():
    with criterion("table1-ordering (related-audio cells < unrelated-audio cells, 10 seeds)"):
        for seed in range(10):
            cfg = SyntheticSpaceConfig(
                dim=24,
                n_scenes=5,
                frames_per_scene=3,
                texts_per_frame=0,
                audios_per_frame=1,
                gap_angle=0.3,
                intra_scene_spread=0.05,
                noise=0.02,
                seed=seed,
            )
            _, store = generate(cfg)
            references = [
                (f"s{s:02d}f000", f"s{s:02d}f000#a0") for s in range(cfg.n_scenes)
            ]
            frames = store.by_modality(Modality.IMAGE)
            audios = store.by_modality(Modality.AUDIO)
            targets = [(f.id, a.id) for f in frames for a in audios]
            cells = pair_stats(store, references, targets, SlerpParams())
            means = {(c.audio_relation, c.image_relation): c.mean for c in cells}
            assert all(m is not None for m in means.values())
            for related_cell in (("related", "related"), ("related", "unrelated")):
                for unrelated_cell in (("unrelated", "related"), ("unrelated", "unrelated")):
                    assert means[related_cell] < means[unrelated_cell], (
                        f"seed {seed}: {related_cell}={means[related_cell]:.4f} not below "
                        f"{unrelated_cell}={means[unrelated_cell]:.4f}"
                    )


def test_scheme1_oracle_equivalence():
    with criterion("scheme1-oracle (argmin equals exhaustive scan on 10k audios; crafted ties)"):
        rng = np.random.default_rng(123)
        dim, n = 16, 10_000
        frame = random_unit_emb(rng, "query", Modality.IMAGE, dim)
        vectors = rng.standard_normal((n, dim)).astype(np.float32)
        audios = [Embedding(f"a{i:05d}", Modality.AUDIO, vectors[i]) for i in range(n)]
        assets = [AssetRecord(e.id, e.modality, "s", "u") for e in [frame] + audios]
        store = build_store(assets, [frame] + audios, normalize_vectors=True)

        plan = sonorize_scheme1(frame, store, k=10)
        oracle = sorted(
            ((dis_cos(frame, store.get(a.id)), a.id) for a in store.by_modality(Modality.AUDIO)),
        )
        assert plan.chosen_audio_id == oracle[0][1]
        assert [cid for cid, _ in plan.candidates.entries] == [cid for _, cid in oracle[:10]]

        # crafted ties: identical vectors, ids chosen to invert insertion order
        twin_vec = random_unit_emb(rng, "ignored", Modality.AUDIO, dim).vector
        ties = [Embedding("zz-tie", Modality.AUDIO, twin_vec), Embedding("aa-tie", Modality.AUDIO, twin_vec)]
        tie_assets = [AssetRecord("q", Modality.IMAGE, "s", "u")] + [
            AssetRecord(e.id, e.modality, "s", "u") for e in ties
        ]
        tie_store = build_store(tie_assets, [Embedding("q", Modality.IMAGE, frame.vector)] + ties)
        tie_plan = sonorize_scheme1(tie_store.get("q"), tie_store, k=2)
        assert [cid for cid, _ in tie_plan.candidates.entries] == ["aa-tie", "zz-tie"]


def test_pearson_fixture_and_affine_invariance():
    with criterion("pearson (fixture r=-0.5; affine invariance x100; negative MOS/distance smoke)"):
        assert pearson([1, 2, 3], [6, 4, 5]) == pytest.approx(-0.5, abs=1e-9)

        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.standard_normal(30)
            y = rng.standard_normal(30)
            r = pearson(x, y)
            a, b = float(rng.uniform(0.1, 5.0)), float(rng.uniform(-10, 10))
            assert pearson(a * x + b, y) == pytest.approx(r, abs=1e-9)
            assert pearson(x, a * y + b) == pytest.approx(r, abs=1e-9)

        # MOS constructed to fall as distance grows -> negative correlation
        distances = {(f"f{i}", f"a{i}"): 0.1 * i for i in range(6)}
        ratings = [
            RatingRecord("r", f"f{i}", f"a{i}", 5 - (i * 4) // 5, TS) for i in range(6)
        ]
        report = correlate(ratings, distances, "target_distance", average_raters=False)
        assert report.r < 0


def test_format_round_trips(tmp_path):
    with criterion("format-round-trips (archive + ratings byte-identical; line-anchored errors)"):
        rng = np.random.default_rng(11)
        embeddings = [
            Embedding(f"e{i}", Modality(i % 3), rng.standard_normal(9).astype(np.float32))
            for i in range(12)
        ]
        first, second = tmp_path / "a1.emb", tmp_path / "a2.emb"
        write_archive(first, 9, embeddings)
        dim, loaded = read_archive(first)
        write_archive(second, dim, loaded)
        assert first.read_bytes() == second.read_bytes()

        ratings = [RatingRecord(f"r{i}", f"f{i}", f"a{i}", 1 + i % 5, TS) for i in range(7)]
        r1, r2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        write_ratings(r1, ratings)
        write_ratings(r2, read_ratings(r1))
        assert r1.read_bytes() == r2.read_bytes()

        bad_csv = tmp_path / "bad.csv"
        bad_csv.write_text(
            "rater_id,frame_id,audio_id,mos,timestamp\nu,f,a,11,2026-03-01T00:00:00+00:00\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as excinfo:
            read_ratings(bad_csv)
        assert excinfo.value.line == 2

        bad_archive = tmp_path / "bad.emb"
        blob = bytearray(first.read_bytes())
        bad_archive.write_bytes(bytes(blob[:40]))
        with pytest.raises(ParseError) as excinfo:
            read_archive(bad_archive)
        assert excinfo.value.line >= 1


def test_end_to_end_mock_run(tmp_path):
    with criterion("e2e-mock-run (synth -> rank -> ratings -> correlate, <60s, reproducible)"):
        start = time.perf_counter()

        def pipeline(root):
            root.mkdir()
            manifest, archive = root / "m.jsonl", root / "a.emb"
            rank_out, corr_out = root / "rank.json", root / "corr.json"
            assert main([
                "synth", "--manifest", str(manifest), "--archive", str(archive),
                "--dim", "32", "--scenes", "4", "--frames-per-scene", "3",
                "--texts-per-frame", "1", "--audios-per-frame", "1",
                "--gap-angle", "0.25", "--spread", "0.05", "--noise", "0.05",
                "--seed", "42", "--no-timestamp",
            ]) == EXIT_OK
            # k=5 over 3 same-scene audios forces cross-scene candidates
            # into every ranking, so the simulated MOS spans its range
            assert main([
                "rank", "--manifest", str(manifest), "--archive", str(archive),
                "--k", "5", "--out", str(rank_out), "--no-timestamp",
            ]) == EXIT_OK

            rank_report = json.loads(rank_out.read_text())
            assert rank_report["schema_version"] == 1
            assert rank_report["kind"] == "rank"

            # simulated raters: MOS falls as the retrieval distance grows
            metric, ratings = {}, []
            for result in rank_report["results"]:
                for cid, score in result["entries"]:
                    metric[(result["query_id"], cid)] = score
                    mos = 5 if score < 0.1 else (3 if score < 0.3 else 1)
                    ratings.append(RatingRecord("sim", result["query_id"], cid, mos, TS))
            assert len({rec.mos for rec in ratings}) > 1
            ratings_path, metrics_path = root / "ratings.csv", root / "metrics.csv"
            write_ratings(ratings_path, ratings)
            write_metric_csv(metrics_path, metric)

            assert main([
                "correlate", "--ratings", str(ratings_path), "--metrics", str(metrics_path),
                "--metric-name", "dis_cos", "--out", str(corr_out), "--no-timestamp",
            ]) == EXIT_OK
            corr = json.loads(corr_out.read_text())
            assert corr["schema_version"] == 1
            assert corr["r"] < 0  # larger distance, worse rating
            return rank_out.read_bytes(), corr_out.read_bytes()

        first = pipeline(tmp_path / "one")
        second = pipeline(tmp_path / "two")
        assert first == second, "pipeline is not byte-reproducible"
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"pipeline took {elapsed:.1f}s"


def test_secondary_rating_round_trip(tmp_path):
    with criterion("rating-round-trip (5 scripted HTTP items -> 5 export rows -> mos_aggregate)"):
        cfg = SyntheticSpaceConfig(dim=8, n_scenes=2, frames_per_scene=3, seed=3)
        records, _ = generate(cfg)
        manifest = tmp_path / "manifest.jsonl"
        write_manifest(manifest, records)
        app = create_app(manifest, tmp_path / "ratings.csv", tmp_path / "journal.jsonl")

        frames = [r.id for r in records if r.modality is Modality.IMAGE]
        pairs = [[fid, f"{fid}#a0"] for fid in frames[:5]]
        with TestClient(app) as client:
            created = client.post(
                "/sessions", json={"rater_id": "tester", "pairs": pairs, "seed": 1}
            ).json()
            sid = created["session_id"]
            assert created["total"] == 5
            scores = iter([5, 4, 3, 2, 1])
            while True:
                nxt = client.get(f"/sessions/{sid}/next").json()
                if nxt["done"]:
                    break
                item = nxt["item"]
                ack = client.post(
                    f"/sessions/{sid}/ratings",
                    json={
                        "frame_id": item["frame_id"],
                        "audio_id": item["audio_id"],
                        "mos": next(scores),
                    },
                )
                assert ack.status_code == 201
            export = client.get("/ratings/export").text
        app.state.service.close()

        export_path = tmp_path / "export.csv"
        export_path.write_text(export, encoding="utf-8")
        exported = read_ratings(export_path)
        assert len(exported) == 5
        assert all(1 <= rec.mos <= 5 for rec in exported)
        rows = mos_aggregate(exported, group_by="pair")
        assert sum(row.n for row in rows) == 5
