import json

import numpy as np
import pytest

from albumseq.errors import CorpusFormatError, ValidationError
from albumseq.ingest import (
    Corpus,
    SyntheticSpec,
    generate_synthetic,
    latent_positions,
    load_corpus,
    parse_corpus_text,
    save_corpus,
    split_corpus,
    standardization_stats,
)

HEADER4 = "album_id,track_id,track_position,title,f0,f1,f2,f3\n"


def write(tmp_path, text, name="corpus.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def row(album, track, pos, feats):
    return f"{album},{track},{pos},Song {track},{','.join(str(f) for f in feats)}\n"


def test_load_single_album(tmp_path):
    text = HEADER4 + "".join(row("a1", f"t{i}", i, [i, 0, 0, 1]) for i in range(3))
    corpus = load_corpus(write(tmp_path, text))
    assert corpus.n_albums == 1 and corpus.dimension == 4
    assert corpus.albums[0].n_tracks == 3
    assert corpus.dropped == 0


def test_size_filter_drops_small_albums(tmp_path):
    text = HEADER4
    text += "".join(row("small", f"s{i}", i, [1, 2, 3, 4]) for i in range(2))
    text += "".join(row("big", f"b{i}", i, [1, 2, 3, 4]) for i in range(5))
    corpus = load_corpus(write(tmp_path, text), m_min=3)
    assert [a.album_id for a in corpus.albums] == ["big"]
    assert corpus.dropped == 1


def test_size_filter_drops_21_track_album(tmp_path):
    # default training bounds keep 3..20 tracks inclusive
    text = HEADER4 + "".join(row("x", f"t{i}", i, [0, 0, 0, 0]) for i in range(21))
    corpus = load_corpus(write(tmp_path, text))
    assert corpus.n_albums == 0 and corpus.dropped == 1
    text20 = HEADER4 + "".join(row("y", f"t{i}", i, [0, 0, 0, float(i)]) for i in range(20))
    assert load_corpus(write(tmp_path, text20, "c20.csv")).n_albums == 1


def test_track_position_orders_tracks(tmp_path):
    text = HEADER4
    for pos in (2, 0, 1):
        text += row("a", f"t{pos}", pos, [pos, 0, 0, 0])
    corpus = load_corpus(write(tmp_path, text))
    assert corpus.albums[0].track_ids == ("t0", "t1", "t2")


def test_malformed_float_reports_line(tmp_path):
    text = HEADER4 + row("a", "t0", 0, [1, 2, 3, 4]) + "a,t1,1,Song,1,2,oops,4\n" + row(
        "a", "t2", 2, [1, 2, 3, 4]
    )
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(write(tmp_path, text))
    assert err.value.line == 3
    assert "f2" in str(err.value)


def test_non_finite_feature_rejected(tmp_path):
    text = HEADER4 + "".join(row("a", f"t{i}", i, [1, 2, 3, 4]) for i in range(2))
    text += "a,t9,2,Song,1,2,inf,4\n"
    with pytest.raises(CorpusFormatError):
        load_corpus(write(tmp_path, text))


def test_wrong_field_count_rejected(tmp_path):
    text = HEADER4 + "a,t0,0,Song,1,2,3\n"
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(write(tmp_path, text))
    assert err.value.line == 2


def test_duplicate_position_rejected(tmp_path):
    text = HEADER4 + row("a", "t0", 0, [1, 2, 3, 4]) + row("a", "t1", 0, [1, 2, 3, 4])
    with pytest.raises(CorpusFormatError) as err:
        load_corpus(write(tmp_path, text))
    assert "track_position" in str(err.value)


def test_bad_header_rejected(tmp_path):
    with pytest.raises(CorpusFormatError):
        load_corpus(write(tmp_path, "album,track,pos,title,f0\n"))
    with pytest.raises(CorpusFormatError):
        load_corpus(write(tmp_path, "album_id,track_id,track_position,title,f0,f2\n"))


def test_crlf_accepted(tmp_path):
    text = HEADER4.replace("\n", "\r\n")
    for i in range(3):
        text += row("a", f"t{i}", i, [i, 1, 2, 3]).replace("\n", "\r\n")
    assert load_corpus(write(tmp_path, text)).n_albums == 1


def test_csv_round_trip(tmp_path):
    spec = SyntheticSpec(seed=9, n_albums=6, m_range=(3, 6), dimension=5, noise_scale=0.3)
    corpus = generate_synthetic(spec)
    p1 = tmp_path / "one.csv"
    p2 = tmp_path / "two.csv"
    save_corpus(corpus, p1)
    loaded = load_corpus(p1)
    save_corpus(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    again = load_corpus(p2)
    assert again.dimension == corpus.dimension
    for a, b in zip(corpus.albums, again.albums):
        assert a.album_id == b.album_id and a.track_ids == b.track_ids
        assert np.array_equal(a.feature_matrix(), b.feature_matrix())


def test_json_round_trip(tmp_path):
    corpus = generate_synthetic(SyntheticSpec(seed=2, n_albums=4, m_range=(3, 4), dimension=3))
    p = tmp_path / "corpus.json"
    save_corpus(corpus, p)
    loaded = load_corpus(p)
    assert loaded.n_albums == 4
    for a, b in zip(corpus.albums, loaded.albums):
        assert np.array_equal(a.feature_matrix(), b.feature_matrix())
    rows = json.loads(p.read_text())
    assert {"album_id", "track_id", "track_position", "title", "features"} <= set(rows[0])


def test_parse_corpus_text_matches_file_loader(tmp_path):
    corpus = generate_synthetic(SyntheticSpec(seed=4, n_albums=3, m_range=(3, 3), dimension=2))
    p = tmp_path / "c.csv"
    save_corpus(corpus, p)
    from_text = parse_corpus_text(p.read_text(), fmt="csv")
    assert from_text.n_albums == 3
    assert np.array_equal(
        from_text.albums[0].feature_matrix(), corpus.albums[0].feature_matrix()
    )


def test_synthetic_noise_free_signal_is_sortable():
    spec = SyntheticSpec(seed=11, n_albums=40, m_range=(3, 8), dimension=16,
                         signal_strength=1.0, noise_scale=0.0)
    corpus = generate_synthetic(spec)
    rng = np.random.default_rng(spec.seed)
    direction = rng.normal(size=spec.dimension)
    direction /= np.linalg.norm(direction)
    for album in corpus.albums:
        proj = album.feature_matrix() @ direction
        assert np.array_equal(np.argsort(proj), np.arange(album.n_tracks))
        assert np.allclose(proj, latent_positions(album.n_tracks), atol=1e-9)


def test_synthetic_no_signal_uncorrelated_with_position():
    spec = SyntheticSpec(seed=13, n_albums=300, m_range=(5, 5), dimension=16,
                         signal_strength=0.0, noise_scale=0.5)
    corpus = generate_synthetic(spec)
    rng = np.random.default_rng(spec.seed)
    direction = rng.normal(size=spec.dimension)
    direction /= np.linalg.norm(direction)
    correlations = []
    positions = np.arange(5)
    for album in corpus.albums:
        proj = album.feature_matrix() @ direction
        ranks = np.argsort(np.argsort(proj))
        correlations.append(np.corrcoef(ranks, positions)[0, 1])
    assert abs(float(np.mean(correlations))) < 0.05


def test_synthetic_deterministic():
    spec = SyntheticSpec(seed=21, n_albums=10, m_range=(3, 6), dimension=8, noise_scale=0.2)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert a.provenance == b.provenance == "synthetic:21"
    for x, y in zip(a.albums, b.albums):
        assert x.track_ids == y.track_ids
        assert np.array_equal(x.feature_matrix(), y.feature_matrix())


def test_split_counts_and_partition():
    corpus = generate_synthetic(SyntheticSpec(seed=1, n_albums=10, m_range=(3, 4), dimension=2))
    parts = split_corpus(corpus, {"train": 0.8, "validation": 0.1, "test": 0.1}, seed=0)
    assert [parts[k].n_albums for k in ("train", "validation", "test")] == [8, 1, 1]
    all_ids = sorted(a.album_id for p in parts.values() for a in p.albums)
    assert all_ids == sorted(a.album_id for a in corpus.albums)


def test_split_deterministic_and_validates():
    corpus = generate_synthetic(SyntheticSpec(seed=1, n_albums=12, m_range=(3, 4), dimension=2))
    p1 = split_corpus(corpus, {"a": 0.5, "b": 0.5}, seed=7)
    p2 = split_corpus(corpus, {"a": 0.5, "b": 0.5}, seed=7)
    assert [x.album_id for x in p1["a"].albums] == [x.album_id for x in p2["a"].albums]
    with pytest.raises(ValidationError):
        split_corpus(corpus, {"a": 0.6, "b": 0.5}, seed=0)
    tiny = generate_synthetic(SyntheticSpec(seed=1, n_albums=2, m_range=(3, 3), dimension=2))
    with pytest.raises(ValidationError):
        split_corpus(tiny, {"a": 0.9, "b": 0.05, "c": 0.05}, seed=0)


def test_standardization_stats():
    corpus = generate_synthetic(SyntheticSpec(seed=3, n_albums=20, m_range=(3, 6), dimension=4,
                                              noise_scale=1.0))
    mean, std = standardization_stats(corpus)
    feats = np.concatenate([a.feature_matrix() for a in corpus.albums])
    standardized = (feats - mean) / std
    assert np.allclose(standardized.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(standardized.std(axis=0), 1.0, atol=1e-12)
