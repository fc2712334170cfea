import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsgate.corpus import (OOV_INDEX, CorpusError, DocumentSet, NewsDocument, PolarityLabel,
                             build_vocabulary, load_corpus, parse_label, save_corpus, tokenize,
                             train_test_split)


def write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def rec(i, label=1, **kw):
    return json.dumps({"id": i, "title": "t", "body": "b", "source": "s", "label": label, **kw})


def test_load_jsonl_order(tmp_path):
    p = write(tmp_path / "c.jsonl", [rec("x"), rec("a", -1), rec("m", 0)])
    ds = load_corpus(p)
    assert ds.ids == ["x", "a", "m"]
    assert [d.gold_label for d in ds] == [1, -1, 0]


def test_unknown_label(tmp_path):
    p = write(tmp_path / "c.jsonl", [rec("x", "2")])
    with pytest.raises(CorpusError, match="unknown label"):
        load_corpus(p)


def test_duplicate_id(tmp_path):
    p = write(tmp_path / "c.jsonl", [rec("a1"), rec("a1")])
    with pytest.raises(CorpusError, match="duplicate"):
        load_corpus(p)


def test_bad_json_names_line(tmp_path):
    p = write(tmp_path / "c.jsonl", [rec("a"), "{nope"])
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(p)


def test_tsv(tmp_path):
    p = write(tmp_path / "c.tsv", ["id\ttitle\tbody\tlabel", "a\tHi\tthere\t1", "b\tX\ty\t"])
    ds = load_corpus(p, "tsv")
    assert ds.ids == ["a", "b"]
    assert ds.documents[0].gold_label == PolarityLabel.POSITIVE
    assert ds.documents[1].gold_label is None


def test_parse_label():
    assert parse_label("-1") == PolarityLabel.NEGATIVE
    assert parse_label(0) == PolarityLabel.NEUTRAL
    assert parse_label(None) is None
    with pytest.raises(CorpusError):
        parse_label("pos")


def test_tokenize_examples():
    assert len(tokenize("")) == 0 and tokenize("").exclamation_count == 0
    seq = tokenize("GREAT win!!")
    assert seq.normalized == ["great", "win"]
    assert [t.is_allcaps for t in seq] == [True, False]
    assert seq.exclamation_count == 2
    assert tokenize("don't stop").normalized == ["don't", "stop"]


def test_vocabulary_examples():
    docs = [NewsDocument("1", "", "a b a"), NewsDocument("2", "", "b c")]
    v = build_vocabulary(docs, 1)
    assert v.index_to_token == ("a", "b", "c")
    assert v.frequencies == {"a": 2, "b": 2, "c": 1}
    assert build_vocabulary(docs, 2).index_to_token == ("a", "b")
    empty = build_vocabulary([], 1)
    assert len(empty.index_to_token) == 0 and empty.lookup("zzz") == OOV_INDEX


def test_content_hash_tracks_contents():
    docs = [NewsDocument("1", "", "a b a")]
    assert build_vocabulary(docs).content_hash() == build_vocabulary(docs).content_hash()
    assert build_vocabulary(docs).content_hash() != build_vocabulary(docs + [NewsDocument("2", "", "z")]).content_hash()


def numbered(n, labels=None):
    return DocumentSet(tuple(NewsDocument(f"d{i}", "", "x", gold_label=None if labels is None else labels[i])
                             for i in range(n)))


def test_split_sizes_and_determinism():
    ds = numbered(1000)
    tr, te = train_test_split(ds, 0.2, 7)
    assert (len(tr), len(te)) == (800, 200)
    tr2, te2 = train_test_split(ds, 0.2, 7)
    assert tr.ids == tr2.ids and te.ids == te2.ids


def test_split_stratified():
    labels = [1] * 5 + [-1] * 5
    tr, te = train_test_split(numbered(10), 0.2, 3, labels=labels)
    got = sorted(labels[int(i[1:])] for i in te.ids)
    assert got == [-1, 1]


# --- properties --------------------------------------------------------------

@given(st.text(max_size=80))
def test_tokenize_idempotent(text):
    first = tokenize(text).normalized
    assert tokenize(" ".join(first)).normalized == first


@given(st.lists(st.lists(st.sampled_from("abcdefg"), min_size=1, max_size=8).map(" ".join), max_size=10))
def test_frequencies_sum_to_token_count(bodies):
    docs = [NewsDocument(str(i), "", b) for i, b in enumerate(bodies)]
    v = build_vocabulary(docs, 1)
    assert sum(v.frequencies.values()) == sum(len(tokenize(d.text)) for d in docs)


@given(st.integers(2, 200), st.floats(0.05, 0.95), st.integers(0, 2**31))
@settings(max_examples=60)
def test_split_partitions(n, frac, seed):
    ds = numbered(n)
    tr, te = train_test_split(ds, frac, seed)
    assert set(tr.ids).isdisjoint(te.ids)
    assert len(tr) + len(te) == n


ident = st.text("abcxyz019_-", min_size=1, max_size=6)
free = st.text(st.characters(blacklist_categories=("Cs",)), max_size=30)


@given(st.lists(st.tuples(free, free, st.sampled_from([None, -1, 0, 1])), max_size=6),
       st.sampled_from(["jsonl", "tsv"]))
@settings(max_examples=60)
def test_save_load_roundtrip(tmp_path_factory, rows, fmt):
    if fmt == "tsv":
        rows = [(t.replace("\t", " ").replace("\n", " ").replace("\r", " "),
                 b.replace("\t", " ").replace("\n", " ").replace("\r", " "), l) for t, b, l in rows]
    rows = [(t, b or "x", l) for t, b, l in rows]
    ds = DocumentSet(tuple(NewsDocument(f"id{i}", t, b, gold_label=l) for i, (t, b, l) in enumerate(rows)))
    path = tmp_path_factory.mktemp("rt") / f"c.{fmt}"
    save_corpus(ds, path, fmt)
    back = load_corpus(path, fmt)
    assert [(d.id, d.title, d.body, d.gold_label) for d in back] == \
           [(d.id, d.title, d.body, d.gold_label) for d in ds]
