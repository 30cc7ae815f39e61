import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import METADATA_HEADER, random_tensor
from kronprec.data import (
    ReplicateTensor,
    ResidualTensor,
    WordRecord,
    load_metadata,
    load_tensor,
    load_wide_tensor,
    residualize,
    subset_words,
    trial_mean,
    write_tensor,
)
from kronprec.errors import (
    BadEnum,
    DuplicateCell,
    IndexOutOfRange,
    MissingCell,
    MissingWord,
    NonNumericValue,
    RaggedTimeAxis,
    TooFewWords,
    UnknownWord,
    ValidationError,
)


def _long_rows(n_s, n_w, n_r, n_t):
    for s, w, r, t in itertools.product(range(n_s), range(n_w), range(n_r), range(n_t)):
        yield f"s{s},w{w},{r + 1},{t + 1},{100 + 10 * s + w + 0.5 * r + 0.01 * t}"


def _write(tmp_path, lines, header="speaker,word,trial,time,value", name="t.csv"):
    p = tmp_path / name
    p.write_text(header + "\n" + "\n".join(lines) + "\n", encoding="utf-8")
    return p


class TestLoadTensor:
    def test_complete_grid(self, tmp_path):
        t = load_tensor(_write(tmp_path, _long_rows(2, 1, 2, 3)))
        assert (t.n_s, t.n_w, t.n_r, t.n_t) == (2, 1, 2, 3)
        assert t.speaker_ids == ("s0", "s1")
        assert t.values[1, 0, 1, 2] == pytest.approx(110.52)

    def test_missing_row_names_the_cell(self, tmp_path):
        rows = list(_long_rows(2, 1, 2, 3))
        del rows[4]  # s0,w0,trial 2,time 2
        with pytest.raises(MissingCell, match="speaker=s0 word=w0 trial=2 time=2"):
            load_tensor(_write(tmp_path, rows))

    def test_duplicate_row(self, tmp_path):
        rows = list(_long_rows(1, 1, 1, 2))
        with pytest.raises(DuplicateCell):
            load_tensor(_write(tmp_path, rows + rows[:1]))

    def test_non_numeric_value(self, tmp_path):
        rows = list(_long_rows(1, 1, 1, 2))
        rows[0] = "s0,w0,1,1,abc"
        with pytest.raises(NonNumericValue):
            load_tensor(_write(tmp_path, rows))

    def test_ragged_time_axis(self, tmp_path):
        rows = ["s0,w0,1,1,1.0", "s0,w0,1,3,2.0"]
        with pytest.raises(RaggedTimeAxis):
            load_tensor(_write(tmp_path, rows))

    def test_first_appearance_order_and_crlf(self, tmp_path):
        rows = ["b,y,1,1,1", "a,y,1,1,2", "b,x,1,1,3", "a,x,1,1,4"]
        p = tmp_path / "crlf.csv"
        p.write_bytes(("speaker,word,trial,time,value\r\n" + "\r\n".join(rows) + "\r\n").encode())
        t = load_tensor(p)
        assert t.speaker_ids == ("b", "a") and t.word_ids == ("y", "x")
        assert t.values[:, :, 0, 0].tolist() == [[1.0, 3.0], [2.0, 4.0]]

    def test_schema_mapping(self, tmp_path):
        p = _write(tmp_path, ["s,w,1,1,5.0"], header="spk,wd,rep,idx,hz")
        t = load_tensor(p, {"speaker": "spk", "word": "wd", "trial": "rep", "time": "idx", "value": "hz"})
        assert t.values.shape == (1, 1, 1, 1)

    def test_missing_column(self, tmp_path):
        with pytest.raises(ValidationError, match="missing column"):
            load_tensor(_write(tmp_path, ["s,w,1,1"], header="speaker,word,trial,time"))

    def test_wide_matches_long(self, tmp_path):
        long_t = load_tensor(_write(tmp_path, _long_rows(2, 2, 2, 3)))
        lines = []
        for s, w, r in itertools.product(range(2), range(2), range(2)):
            vals = [f"{100 + 10 * s + w + 0.5 * r + 0.01 * t}" for t in range(3)]
            lines.append(f"s{s},w{w},{r + 1}," + ",".join(vals))
        wide = load_wide_tensor(_write(tmp_path, lines, header="speaker,word,trial,t1,t2,t3", name="w.csv"))
        np.testing.assert_array_equal(wide.values, long_t.values)

    def test_write_then_load_roundtrip(self, tmp_path, rng):
        t = random_tensor(rng, 2, 3, 2, 4, scale=17.3, offset=120.0)
        p = tmp_path / "rt.csv"
        write_tensor(t, p)
        back = load_tensor(p)
        np.testing.assert_array_equal(back.values, t.values)
        assert type(back) is ReplicateTensor


class TestTensorInvariants:
    def test_values_are_read_only(self, rng):
        t = random_tensor(rng)
        with pytest.raises(ValueError):
            t.values[0, 0, 0, 0] = 1.0

    def test_label_length_mismatch(self):
        with pytest.raises(ValidationError):
            ReplicateTensor(np.zeros((1, 2, 1, 1)), ("s",), ("w",))

    def test_duplicate_labels(self):
        with pytest.raises(ValidationError):
            ReplicateTensor(np.zeros((1, 2, 1, 1)), ("s",), ("w", "w"))


class TestMetadata:
    def test_parse_row(self, metadata_csv):
        m = load_metadata(metadata_csv)
        rec = m["met"]
        assert rec.vowel_length == "short" and rec.onset == "m" and rec.consonant_class == "nasal"
        assert rec.vowel == "ɛ"

    def test_bad_enum(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(METADATA_HEADER + "kat,a,short,k,t,t,velar\n", encoding="utf-8")
        with pytest.raises(BadEnum):
            load_metadata(p)

    def test_missing_word_listed(self, metadata_csv):
        with pytest.raises(MissingWord, match="absent"):
            load_metadata(metadata_csv, ["met", "absent"])

    def test_unknown_word_warns(self, metadata_csv):
        with pytest.warns(UnknownWord):
            load_metadata(metadata_csv, ["met", "man"])

    def test_alias_column(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            METADATA_HEADER.rstrip("\n") + ",onset_group\n"
            "met,e,short,m,t,t,nasal,mn\nnet,e,short,n,t,t,nasal,mn\n",
            encoding="utf-8",
        )
        m = load_metadata(p)
        assert m.attribute("met", "onset_group") == m.attribute("net", "onset_group") == "mn"
        assert "onset_group" in m.attribute_names

    def test_empty_codas_allowed(self):
        WordRecord("a", "a", "long", "", "", "", "labial")


class TestTrialMean:
    def test_mean_of_two(self):
        v = np.array([100.0, 110.0]).reshape(1, 1, 2, 1)
        t = ReplicateTensor(v, ("s",), ("w",))
        assert trial_mean(t, 0)[0, 0] == 105.0

    def test_single_trial(self, rng):
        t = random_tensor(rng, n_r=1)
        np.testing.assert_array_equal(trial_mean(t, 1), t.values[1, :, 0, :])

    def test_constant_trials(self):
        t = ReplicateTensor(np.full((1, 2, 4, 3), 7.25), ("s",), ("a", "b"))
        np.testing.assert_array_equal(trial_mean(t, 0), np.full((2, 3), 7.25))

    def test_out_of_range(self, rng):
        with pytest.raises(IndexOutOfRange):
            trial_mean(random_tensor(rng), 3)


class TestResidualize:
    def test_two_trials(self):
        v = np.array([100.0, 110.0]).reshape(1, 1, 2, 1)
        r = residualize(ReplicateTensor(v, ("s",), ("w",)))
        assert r.values.ravel().tolist() == [-5.0, 5.0]
        assert isinstance(r, ResidualTensor)

    def test_identical_trials(self):
        r = residualize(ReplicateTensor(np.full((2, 2, 3, 2), 140.0), ("a", "b"), ("x", "y")))
        assert not np.any(r.values)

    def test_sums_vanish_on_3x4x4x5(self, rng):
        t = random_tensor(rng, 3, 4, 4, 5, scale=30.0, offset=150.0)
        r = residualize(t)
        # oracle: explicit per-cell sums
        worst = 0.0
        for i, j, k in itertools.product(range(3), range(4), range(5)):
            worst = max(worst, abs(sum(r.values[i, j, rr, k] for rr in range(4))))
        assert worst <= 1e-9 * np.max(np.abs(t.values))

    def test_idempotent(self, rng):
        r = residualize(random_tensor(rng))
        assert residualize(r) is r
        np.testing.assert_array_equal(residualize(r).values, r.values)

    @given(arrays(np.float64, (2, 3, 3, 2), elements=st.floats(-500, 500)))
    def test_trial_mean_of_residuals_is_zero(self, values):
        t = ReplicateTensor(values, ("a", "b"), ("x", "y", "z"))
        r = residualize(t)
        scale = max(float(np.max(np.abs(values))), 1.0)
        for i in range(2):
            assert np.max(np.abs(trial_mean(r, i))) <= 1e-9 * scale

    def test_residual_file_loads_as_residual(self, tmp_path, rng):
        r = residualize(random_tensor(rng))
        p = tmp_path / "r.csv"
        write_tensor(r, p)
        assert p.read_text().splitlines()[0] == "speaker,word,trial,time,residual"
        assert isinstance(load_tensor(p), ResidualTensor)


class TestSubsetWords:
    def _tensor(self, rng):
        v = rng.standard_normal((2, 5, 2, 3))
        return ReplicateTensor(v, ("s1", "s2"), ("met", "man", "baat", "deur", "vaal"))

    def test_long_vowels(self, rng, metadata_csv):
        m = load_metadata(metadata_csv)
        sub = subset_words(self._tensor(rng), m, {"vowel_length": "long"})
        assert sub.word_ids == ("baat", "deur", "vaal")

    def test_single_match_is_too_few(self, rng, metadata_csv):
        with pytest.raises(TooFewWords):
            subset_words(self._tensor(rng), load_metadata(metadata_csv), {"onset": "b"})

    def test_union_of_classes(self, rng, metadata_csv):
        m = load_metadata(metadata_csv)
        sub = subset_words(self._tensor(rng), m, {"consonant_class": ["labial", "alveolar"]})
        assert sub.word_ids == ("baat", "deur")

    def test_callable_predicate(self, rng, metadata_csv):
        m = load_metadata(metadata_csv)
        sub = subset_words(self._tensor(rng), m, lambda rec: rec.vowel == "a")
        assert sub.word_ids == ("man", "baat", "vaal")

    def test_commutes_with_residualize(self, rng, metadata_csv):
        m = load_metadata(metadata_csv)
        t = self._tensor(rng)
        pred = {"vowel_length": "long"}
        a = subset_words(residualize(t), m, pred)
        b = residualize(subset_words(t, m, pred))
        np.testing.assert_array_equal(a.values, b.values)
        assert isinstance(a, ResidualTensor) and isinstance(b, ResidualTensor)
