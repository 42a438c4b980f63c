import struct

import numpy as np
import numpy.testing as npt
import pytest

from relqa.embeddings import (
    DimensionMismatchError,
    EmbeddingFormatError,
    EmbeddingTable,
    MalformedHeaderError,
    TruncatedPayloadError,
    init_oov,
    load_word_embeddings,
    save_word2vec,
)
from relqa.text import build_vocab


def write_binary_by_hand(path, entries, newline_after=True):
    """Reference word2vec binary writer, independent of the package."""
    dim = len(entries[0][1])
    with open(path, "wb") as f:
        f.write(f"{len(entries)} {dim}\n".encode("ascii"))
        for token, vec in entries:
            f.write(token.encode("utf-8") + b" ")
            f.write(struct.pack(f"<{dim}f", *vec))
            if newline_after:
                f.write(b"\n")


def write_text(path, entries, header=None):
    dim = len(entries[0][1])
    with open(path, "w", encoding="utf-8") as f:
        f.write(header if header is not None else f"{len(entries)} {dim}\n")
        for token, vec in entries:
            f.write(token + " " + " ".join(repr(float(v)) for v in vec) + "\n")


# values exactly representable in float32, so text and binary must agree bit for bit
ENTRIES = [("cat", [0.5, -1.25, 2.0]), ("dog", [0.125, 3.0, -0.75]), ("émigré", [1.0, 0.0, -2.5])]


class TestTextFormat:
    def test_two_words_in_vocab(self, tmp_path):
        p = tmp_path / "e.txt"
        write_text(p, ENTRIES[:2])
        vocab = build_vocab([["cat", "dog"]])
        table, coverage = load_word_embeddings(str(p), "word2vec-text", vocab)
        npt.assert_array_equal(table.vectors[vocab.index("cat")], ENTRIES[0][1])
        npt.assert_array_equal(table.vectors[vocab.index("dog")], ENTRIES[1][1])
        assert table.pretrained.tolist() == [False, True, True]
        assert coverage == pytest.approx(2 / 3)

    def test_empty_intersection(self, tmp_path):
        p = tmp_path / "e.txt"
        write_text(p, ENTRIES)
        vocab = build_vocab([["zebra", "yak"]])
        table, coverage = load_word_embeddings(str(p), "word2vec-text", vocab, seed=3)
        assert coverage == 0.0
        assert not table.pretrained.any()
        assert np.all(np.abs(table.vectors) <= 0.25)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "e.txt"
        write_text(p, ENTRIES, header="three 3\n")
        with pytest.raises(MalformedHeaderError, match="line 1"):
            load_word_embeddings(str(p), "word2vec-text", build_vocab([["cat"]]))

    def test_dimension_mismatch_names_line(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("2 3\ncat 1 2 3\ndog 1 2\n", encoding="utf-8")
        with pytest.raises(DimensionMismatchError, match="line 3"):
            load_word_embeddings(str(p), "word2vec-text", build_vocab([["cat"]]))

    def test_too_few_entries(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("3 2\ncat 1 2\n", encoding="utf-8")
        with pytest.raises(TruncatedPayloadError):
            load_word_embeddings(str(p), "word2vec-text", build_vocab([["cat"]]))

    def test_requested_dim_checked(self, tmp_path):
        p = tmp_path / "e.txt"
        write_text(p, ENTRIES)
        with pytest.raises(DimensionMismatchError):
            load_word_embeddings(str(p), "word2vec-text", build_vocab([["cat"]]), dim=50)

    def test_save_load_roundtrip_exact(self, tmp_path):
        vocab = build_vocab([["a", "b", "c"]])
        table = EmbeddingTable.random(vocab, 7, seed=11)
        p = tmp_path / "rt.txt"
        save_word2vec(table, str(p), "word2vec-text")
        back, coverage = load_word_embeddings(str(p), "word2vec-text", vocab)
        assert coverage == 1.0
        npt.assert_array_equal(back.vectors, table.vectors)


class TestBinaryFormat:
    @pytest.mark.parametrize("newline_after", [True, False])
    def test_matches_text_equivalent(self, tmp_path, newline_after):
        tp, bp = tmp_path / "e.txt", tmp_path / "e.bin"
        write_text(tp, ENTRIES)
        write_binary_by_hand(bp, ENTRIES, newline_after)
        vocab = build_vocab([["émigré", "cat", "owl", "dog"]])
        t_tab, t_cov = load_word_embeddings(str(tp), "word2vec-text", vocab, seed=5)
        b_tab, b_cov = load_word_embeddings(str(bp), "word2vec-binary", vocab, seed=5)
        assert t_cov == b_cov == pytest.approx(3 / 5)
        npt.assert_array_equal(t_tab.vectors, b_tab.vectors)
        npt.assert_array_equal(t_tab.pretrained, b_tab.pretrained)

    def test_package_writer_read_by_hand(self, tmp_path):
        vocab = build_vocab([["x", "y"]])
        table = EmbeddingTable.random(vocab, 4, seed=2)
        p = tmp_path / "o.bin"
        save_word2vec(table, str(p), "word2vec-binary")
        raw = p.read_bytes()
        head, body = raw.split(b"\n", 1)
        assert head == b"3 4"
        pos = 0
        for tok, row in zip(vocab.itos, table.vectors):
            sp = body.index(b" ", pos)
            assert body[pos:sp].decode() == tok
            got = struct.unpack("<4f", body[sp + 1:sp + 17])
            npt.assert_array_equal(got, row.astype(np.float32))
            pos = sp + 17
        assert pos == len(body)

    def test_truncated_payload_names_byte(self, tmp_path):
        p = tmp_path / "e.bin"
        write_binary_by_hand(p, ENTRIES)
        data = p.read_bytes()
        p.write_bytes(data[:-7])
        with pytest.raises(TruncatedPayloadError, match="byte"):
            load_word_embeddings(str(p), "word2vec-binary", build_vocab([["cat"]]))

    def test_missing_header_newline(self, tmp_path):
        p = tmp_path / "e.bin"
        p.write_bytes(b"2 3")
        with pytest.raises(MalformedHeaderError):
            load_word_embeddings(str(p), "word2vec-binary", build_vocab([["cat"]]))

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.bin"
        p.write_bytes(b"")
        with pytest.raises(MalformedHeaderError):
            load_word_embeddings(str(p), "word2vec-binary", build_vocab([["cat"]]))

    def test_errors_are_distinct(self):
        kinds = {MalformedHeaderError, DimensionMismatchError, TruncatedPayloadError}
        assert all(issubclass(k, EmbeddingFormatError) for k in kinds)
        assert len({k.__name__ for k in kinds}) == 3

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            load_word_embeddings(str(tmp_path / "x"), "glove", build_vocab([["a"]]))


class TestInitOov:
    def test_deterministic(self):
        vocab = build_vocab([["a", "b", "c"]])
        t1 = EmbeddingTable.random(vocab, 5, seed=9)
        t2 = EmbeddingTable.random(vocab, 5, seed=9)
        npt.assert_array_equal(t1.vectors, t2.vectors)

    def test_range(self):
        vocab = build_vocab([[str(i) for i in range(200)]])
        t = EmbeddingTable.random(vocab, 10, half_width=0.25, seed=1)
        assert np.all(t.vectors >= -0.25) and np.all(t.vectors <= 0.25)

    def test_mean_within_three_sigma(self):
        vocab = build_vocab([[f"w{i}" for i in range(999)]])
        t = EmbeddingTable.random(vocab, 10, half_width=0.25, seed=4)
        sample = t.vectors.ravel()
        assert sample.size == 10_000
        sigma = 0.25 / np.sqrt(3) / np.sqrt(sample.size)
        assert abs(sample.mean()) < 3 * sigma
        assert sample.var() == pytest.approx(0.25 ** 2 / 3, rel=0.05)

    def test_pretrained_rows_untouched(self):
        vocab = build_vocab([["a", "b"]])
        vecs = np.full((3, 2), 7.0)
        t = init_oov(EmbeddingTable(vocab, vecs, np.array([False, True, False])), 0.1, 0)
        npt.assert_array_equal(t.vectors[1], [7.0, 7.0])
        assert np.all(np.abs(t.vectors[[0, 2]]) <= 0.1)

    def test_nonpositive_range_rejected(self):
        vocab = build_vocab([["a"]])
        with pytest.raises(ValueError):
            EmbeddingTable.random(vocab, 3, half_width=0.0)
