from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretap_lab.errors import MalformedRowError, MissingFileError, ModelFileError, RowSumError
from wiretap_lab.modelfile import ModelFile, format_model, parse_model, parse_model_text

MODELS = Path(__file__).resolve().parent.parent / "models"

BSC = """\
# main then wiretapper
alpha 0.25
channel 2 2 main
0.9 0.1
0.1 0.9

channel 2 2 wtp   # trailing comment
0.7 0.3
0.3 0.7
"""


def test_valid_bsc_pair():
    mf = parse_model_text(BSC)
    m = mf.model
    assert (m.main.input_size, m.main.output_size, m.wtp.output_size) == (2, 2, 2)
    assert m.alpha == 0.25 and mf.alpha_given
    assert mf.source is None
    np.testing.assert_allclose(m.wtp.rows, [[0.7, 0.3], [0.3, 0.7]])


def test_unnamed_blocks_default_order():
    mf = parse_model_text("channel 2 2\n1 0\n0 1\nchannel 2 3\n0 0 1\n0 0 1\n")
    assert mf.model.main.output_size == 2 and mf.model.wtp.output_size == 3
    assert mf.model.alpha == 0.0 and not mf.alpha_given


def test_named_blocks_any_order_and_source():
    text = "dist 3 source\n0.2 0.3 0.5\nchannel 3 2 wiretap\n1 0\n0 1\n0.5 0.5\nchannel 3 1 main\n1\n1\n1\n"
    mf = parse_model_text(text)
    assert mf.model.wtp.output_size == 2 and mf.model.main.output_size == 1
    np.testing.assert_allclose(mf.source.probs, [0.2, 0.3, 0.5])


def test_comments_and_blank_lines_ignored():
    noisy = "\n\n# header\n   \n" + BSC.replace("\n0.1 0.9", "\n  # inside a block\n0.1 0.9")
    a, b = parse_model_text(BSC), parse_model_text(noisy)
    np.testing.assert_array_equal(a.model.main.rows, b.model.main.rows)


def test_row_sum_error_names_line():
    bad = BSC.replace("0.1 0.9\n\nchannel", "0.1 0.8\n\nchannel")
    with pytest.raises(RowSumError) as exc:
        parse_model_text(bad, "m.txt")
    assert exc.value.line == 5 and exc.value.column == 1
    assert str(exc.value).startswith("m.txt:5:1:")
    assert exc.value.code == 23


def test_row_sum_tolerance():
    ok = BSC.replace("0.9 0.1\n", "0.9 0.1000000005\n")
    parse_model_text(ok)
    with pytest.raises(RowSumError):
        parse_model_text(BSC.replace("0.9 0.1\n", "0.9 0.100000002\n"))


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("channel 2 2 main\n0.9 x\n0.1 0.9\n", 2, 5),
        ("channel 2 2 main\n0.9 0.1 0.0\n0.1 0.9\n", 2, 9),
        ("channel 2 2 main\n0.9\n", 2, 1),
        ("channel 2 2 main\n1.2 -0.2\n", 2, 5),
        ("channel two 2\n", 1, 9),
        ("channel 2 2 main\n0.9 0.1\n", 1, 1),
        ("bogus 1\n", 1, 1),
        ("alpha 1.5\n", 1, 7),
        ("channel 1 1 side\n1\n", 1, 13),
    ],
)
def test_malformed_rows(text, line, column):
    with pytest.raises(MalformedRowError) as exc:
        parse_model_text(text)
    assert (exc.value.line, exc.value.column) == (line, column)
    assert exc.value.code == 22


def test_structural_errors():
    with pytest.raises(ModelFileError, match="missing wtp"):
        parse_model_text("channel 2 2\n1 0\n0 1\n")
    with pytest.raises(ModelFileError, match="inputs"):
        parse_model_text("channel 2 2\n1 0\n0 1\nchannel 3 2\n1 0\n0 1\n1 0\n")
    with pytest.raises(ModelFileError, match="source"):
        parse_model_text(BSC + "dist 3 source\n0.2 0.3 0.5\n")


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError) as exc:
        parse_model(tmp_path / "nope.txt")
    assert exc.value.code == 21
    with pytest.raises(MissingFileError):
        parse_model(tmp_path)


def test_error_codes_distinct():
    assert len({MissingFileError.code, MalformedRowError.code, RowSumError.code, ModelFileError.code}) == 4


@pytest.mark.parametrize("name", ["bsc_bsc.txt", "erasure.txt", "ternary.txt"])
def test_shipped_models_parse(name):
    mf = parse_model(MODELS / name)
    assert isinstance(mf, ModelFile)
    assert mf.path.endswith(name)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.booleans())
def test_format_round_trip(seed, k, y, v, with_source):
    rng = np.random.default_rng(seed)
    mf = parse_model_text(
        f"alpha {float(rng.uniform())!r}\n"
        + f"channel {k} {y} main\n" + "\n".join(" ".join(repr(float(p)) for p in row) for row in rng.dirichlet(np.ones(y), k)) + "\n"
        + f"channel {k} {v} wtp\n" + "\n".join(" ".join(repr(float(p)) for p in row) for row in rng.dirichlet(np.ones(v), k)) + "\n"
        + (f"dist {k} source\n" + " ".join(repr(float(p)) for p in rng.dirichlet(np.ones(k))) + "\n" if with_source else "")
    )
    again = parse_model_text(format_model(mf))
    np.testing.assert_allclose(again.model.main.rows, mf.model.main.rows, rtol=0, atol=1e-15)
    np.testing.assert_allclose(again.model.wtp.rows, mf.model.wtp.rows, rtol=0, atol=1e-15)
    assert again.model.alpha == mf.model.alpha
    assert (again.source is None) == (mf.source is None)
