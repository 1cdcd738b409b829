import numpy as np
import pytest

from sonomap.core import Modality
from sonomap.errors import (
    DimMismatch,
    DuplicateId,
    OrphanEmbedding,
    ParseError,
    UnknownId,
    UnknownScene,
    WrongModality,
)
from sonomap.store import (
    AssetRecord,
    build_store,
    ingest,
    parent_frame_id,
    read_archive,
    read_manifest,
    write_archive,
    write_manifest,
)

from conftest import emb, unit_emb


def small_fixture():
    assets = [
        AssetRecord("f0", Modality.IMAGE, "forest", "frames/f0.png"),
        AssetRecord("f0#t0", Modality.TEXT, "forest", "caps/f0t0.txt", "trees"),
        AssetRecord("f0#a0", Modality.AUDIO, "forest", "audio/f0a0.wav"),
        AssetRecord("g0", Modality.IMAGE, "river", "frames/g0.png"),
        AssetRecord("g0#a0", Modality.AUDIO, "river", "audio/g0a0.wav"),
    ]
    embeddings = [
        emb("f0", Modality.IMAGE, [1.0, 0.0, 0.0]),
        emb("f0#t0", Modality.TEXT, [0.9, 0.1, 0.0]),
        emb("f0#a0", Modality.AUDIO, [0.8, 0.0, 0.2]),
        emb("g0", Modality.IMAGE, [0.0, 1.0, 0.0]),
        emb("g0#a0", Modality.AUDIO, [0.0, 0.9, 0.1]),
    ]
    return assets, embeddings


def write_fixture(tmp_path, assets, embeddings, dim=3):
    manifest = tmp_path / "assets.jsonl"
    archive = tmp_path / "vectors.emb"
    write_manifest(manifest, assets)
    write_archive(archive, dim, embeddings)
    return manifest, archive


class TestManifest:
    def test_round_trip(self, tmp_path):
        assets, _ = small_fixture()
        path = tmp_path / "m.jsonl"
        write_manifest(path, assets)
        assert read_manifest(path) == assets

    def test_unknown_keys_ignored(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"id": "x", "modality": "image", "scene": "s", "uri": "u", "extra": 42}\n',
            encoding="utf-8",
        )
        [rec] = read_manifest(path)
        assert rec.id == "x"

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"id": "x", "modality": "image", "scene": "s", "uri": "u"}\nnot-json\n',
            encoding="utf-8",
        )
        with pytest.raises(ParseError, match=":2:"):
            read_manifest(path)

    def test_missing_key_names_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id": "x", "modality": "image", "scene": "s"}\n', encoding="utf-8")
        with pytest.raises(ParseError, match="uri"):
            read_manifest(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        line = '{"id": "x", "modality": "image", "scene": "s", "uri": "u"}\n'
        path.write_text(line + line, encoding="utf-8")
        with pytest.raises(DuplicateId, match="x"):
            read_manifest(path)

    def test_bad_modality(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id": "x", "modality": "video", "scene": "s", "uri": "u"}\n', encoding="utf-8")
        with pytest.raises(ParseError, match="video"):
            read_manifest(path)


class TestArchive:
    def test_round_trip_byte_identical(self, tmp_path):
        _, embeddings = small_fixture()
        first = tmp_path / "a.emb"
        second = tmp_path / "b.emb"
        write_archive(first, 3, embeddings)
        dim, loaded = read_archive(first)
        assert dim == 3
        write_archive(second, dim, loaded)
        assert first.read_bytes() == second.read_bytes()

    def test_preserves_vectors_exactly(self, tmp_path):
        rng = np.random.default_rng(3)
        embeddings = [
            emb(f"v{i}", Modality.AUDIO, rng.standard_normal(7).astype(np.float32))
            for i in range(5)
        ]
        assets = [AssetRecord(e.id, Modality.AUDIO, "s", "u") for e in embeddings]
        path = tmp_path / "a.emb"
        write_archive(path, 7, embeddings)
        _, loaded = read_archive(path)
        for orig, back in zip(embeddings, loaded):
            assert orig.id == back.id
            assert orig.modality is back.modality
            np.testing.assert_array_equal(orig.vector, back.vector)
        assert len(assets) == len(loaded)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.emb"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ParseError, match="magic"):
            read_archive(path)

    def test_truncated_record(self, tmp_path):
        _, embeddings = small_fixture()
        path = tmp_path / "a.emb"
        write_archive(path, 3, embeddings)
        blob = path.read_bytes()
        path.write_bytes(blob[:-5])
        with pytest.raises(ParseError, match="truncated"):
            read_archive(path)

    def test_trailing_garbage(self, tmp_path):
        _, embeddings = small_fixture()
        path = tmp_path / "a.emb"
        write_archive(path, 3, embeddings)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(ParseError, match="trailing"):
            read_archive(path)

    def test_duplicate_id(self, tmp_path):
        e = emb("dup", Modality.IMAGE, [1.0, 0.0])
        path = tmp_path / "a.emb"
        write_archive(path, 2, [e, e])
        with pytest.raises(DuplicateId, match="dup"):
            read_archive(path)

    def test_wrong_dim_rejected_at_write(self, tmp_path):
        with pytest.raises(DimMismatch):
            write_archive(tmp_path / "a.emb", 3, [emb("x", 0, [1.0, 0.0])])


class TestIngest:
    def test_happy_path(self, tmp_path):
        assets, embeddings = small_fixture()
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        store = ingest(manifest, archive)
        assert len(store) == 5
        assert store.dim == 3
        assert store.counts() == {"image": 2, "text": 1, "audio": 2}

    def test_normalizes_by_default(self, tmp_path):
        assets, embeddings = small_fixture()
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        store = ingest(manifest, archive)
        for asset_id in store.ids():
            assert abs(np.linalg.norm(store.get(asset_id).as_float64()) - 1.0) <= 1e-6

    def test_no_normalize_preserves_magnitudes(self, tmp_path):
        assets, embeddings = small_fixture()
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        store = ingest(manifest, archive, normalize_vectors=False)
        np.testing.assert_array_equal(store.get("f0#t0").vector, embeddings[1].vector)

    def test_orphan_embedding_names_id(self, tmp_path):
        assets, embeddings = small_fixture()
        embeddings.append(emb("ghost", Modality.AUDIO, [0.0, 0.0, 1.0]))
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        with pytest.raises(OrphanEmbedding, match="ghost"):
            ingest(manifest, archive)

    def test_modality_disagreement(self, tmp_path):
        assets, embeddings = small_fixture()
        embeddings[2] = emb("f0#a0", Modality.TEXT, [0.8, 0.0, 0.2])
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        with pytest.raises(WrongModality, match="f0#a0"):
            ingest(manifest, archive)

    def test_ingestion_order_deterministic(self, tmp_path):
        assets, embeddings = small_fixture()
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        first = ingest(manifest, archive)
        second = ingest(manifest, archive)
        assert first.ids() == second.ids()


class TestStoreQueries:
    @pytest.fixture()
    def store(self, tmp_path):
        assets, embeddings = small_fixture()
        manifest, archive = write_fixture(tmp_path, assets, embeddings)
        return ingest(manifest, archive)

    def test_by_modality(self, store):
        audio = store.by_modality(Modality.AUDIO)
        assert [e.id for e in audio] == ["f0#a0", "g0#a0"]
        assert [e.id for e in store.by_modality(Modality.IMAGE)] == ["f0", "g0"]

    def test_by_scene(self, store):
        forest_images = store.by_scene("forest", Modality.IMAGE)
        assert [e.id for e in forest_images] == ["f0"]
        assert store.by_scene("river", Modality.TEXT) == []

    def test_unknown_scene(self, store):
        with pytest.raises(UnknownScene, match="desert"):
            store.by_scene("desert", Modality.IMAGE)

    def test_unknown_id(self, store):
        with pytest.raises(UnknownId):
            store.get("nope")

    def test_matrix_rows_follow_partition_order(self, store):
        ids, matrix = store.matrix(Modality.AUDIO)
        assert ids == ("f0#a0", "g0#a0")
        np.testing.assert_array_equal(matrix[0], store.get("f0#a0").vector)
        assert not matrix.flags.writeable

    def test_siblings(self, store):
        assert [e.id for e in store.siblings("f0", Modality.TEXT)] == ["f0#t0"]
        assert [e.id for e in store.siblings("f0", Modality.AUDIO)] == ["f0#a0"]
        assert store.siblings("g0", Modality.TEXT) == []

    def test_parent_frame_id(self):
        assert parent_frame_id("f0#a12") == "f0"
        assert parent_frame_id("plain") == "plain"


class TestBuildStore:
    def test_duplicate_embedding_id(self):
        assets = [AssetRecord("x", Modality.IMAGE, "s", "u")]
        e = emb("x", Modality.IMAGE, [1.0, 0.0])
        with pytest.raises(DuplicateId):
            build_store(assets, [e, e])

    def test_dim_mismatch(self):
        assets = [
            AssetRecord("x", Modality.IMAGE, "s", "u"),
            AssetRecord("y", Modality.IMAGE, "s", "u2"),
        ]
        embeddings = [
            emb("x", Modality.IMAGE, [1.0, 0.0]),
            emb("y", Modality.IMAGE, [1.0, 0.0, 0.0]),
        ]
        with pytest.raises(DimMismatch):
            build_store(assets, embeddings)

    def test_assets_without_vectors_are_allowed(self):
        assets = [
            AssetRecord("x", Modality.IMAGE, "s", "u"),
            AssetRecord("vectorless", Modality.AUDIO, "s", "u2"),
        ]
        store = build_store(assets, [unit_emb("x", Modality.IMAGE, [1.0, 1.0])])
        assert len(store) == 1
        assert store.asset("vectorless").modality is Modality.AUDIO
