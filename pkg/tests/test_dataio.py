import numpy as np
import pytest

from regime_split.dataio import (Dataset, Quarter, apply_trend_scaling, build_design,
                                 load_dataset, polynomial_trend, write_dataset)
from regime_split.errors import (ContinuityError, DomainError, InputError,
                                 InsufficientDataError, ParseError, SchemaError)

HEADER = "year,quarter,gdp,gov,unemp,news\n"


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(n, start=1950):
    lines = []
    for i in range(n):
        y, q = start + i // 4, i % 4 + 1
        lines.append(f"{y},{q},{1 + 0.01 * i},{0.2 + 0.001 * i},{5 + (i % 7)},{0.01 * (i % 3)}\n")
    return lines


def test_quarter_ordering_and_parse():
    q = Quarter.parse("1945Q4")
    assert q == Quarter(1945, 4)
    assert q.succ() == Quarter(1946, 1)
    assert Quarter(1946, 1) > q
    assert str(q) == "1945Q4"
    assert Quarter.parse("1950:2") == Quarter(1950, 2)
    with pytest.raises(ValueError):
        Quarter.parse("1950Q5")


def test_roundtrip_is_exact(tmp_path, sim_dataset):
    p = tmp_path / "rt.csv"
    write_dataset(sim_dataset, p)
    back = load_dataset(p)
    assert back.index == sim_dataset.index
    for name in ("gdp", "gov", "unemp", "news"):
        np.testing.assert_array_equal(back.series(name), sim_dataset.series(name))


def test_schema_mapping(tmp_path):
    text = "yr,qtr,Y,G,U,N\n" + "".join(_rows(12))
    p = _write(tmp_path, text)
    schema = {"year": "yr", "quarter": "qtr", "gdp": "Y", "gov": "G", "unemp": "U", "news": "N"}
    ds = load_dataset(p, schema)
    assert len(ds) == 12
    assert ds.span == (Quarter(1950, 1), Quarter(1952, 4))
    with pytest.raises(SchemaError):
        load_dataset(p)


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(InputError) as info:
        load_dataset(tmp_path / "absent.csv")
    assert info.value.kind == "io"
    assert info.value.exit_code == 2


def test_edges_trimmed_interior_missing_rejected(tmp_path):
    rows = _rows(12)
    rows[0] = "1950,1,,0.2,5,0.0\n"
    rows[-1] = "1952,4,1.1,0.2,5,NA\n"
    ds = load_dataset(_write(tmp_path, HEADER + "".join(rows)))
    assert ds.span == (Quarter(1950, 2), Quarter(1952, 3))

    rows = _rows(12)
    rows[5] = "1951,2,1.05,,5,0.0\n"
    with pytest.raises(ParseError) as info:
        load_dataset(_write(tmp_path, HEADER + "".join(rows), "bad.csv"))
    assert info.value.row == 7
    assert info.value.column == "gov"


def test_gap_and_duplicate(tmp_path):
    rows = _rows(12)
    del rows[4]
    with pytest.raises(ContinuityError, match="1951Q1"):
        load_dataset(_write(tmp_path, HEADER + "".join(rows)))
    rows = _rows(12)
    rows[5] = rows[4]
    with pytest.raises(ContinuityError, match="duplicate"):
        load_dataset(_write(tmp_path, HEADER + "".join(rows), "dup.csv"))


def test_unsorted_rows_are_ordered(tmp_path):
    rows = _rows(8)
    ds = load_dataset(_write(tmp_path, HEADER + "".join(rows[::-1])))
    assert ds.index[0] == Quarter(1950, 1)
    assert ds.gdp[0] == 1.0


def test_negative_unemployment_is_domain_error(tmp_path):
    rows = _rows(8)
    rows[3] = "1950,4,1.0,0.2,-1,0.0\n"
    with pytest.raises(DomainError):
        load_dataset(_write(tmp_path, HEADER + "".join(rows)))


def test_trend_scaling_with_column(tmp_path):
    lines = ["year,quarter,gdp,gov,unemp,news,trend\n"]
    for i in range(8):
        k = i + 1
        lines.append(f"{1950 + i // 4},{i % 4 + 1},{10.0 * k},{2.0 * k},5,{k},{5.0 * k}\n")
    ds = load_dataset(_write(tmp_path, "".join(lines)), scaled=False)
    np.testing.assert_allclose(ds.gdp, 2.0)
    np.testing.assert_allclose(ds.gov, 0.4)
    np.testing.assert_allclose(ds.news, 0.2)
    np.testing.assert_allclose(ds.raw["raw_gdp"], 10.0 * np.arange(1, 9))
    assert apply_trend_scaling(ds) is ds


def test_trend_nonpositive(sim_dataset):
    with pytest.raises(DomainError):
        Dataset(sim_dataset.index, sim_dataset.gdp, sim_dataset.gov, sim_dataset.unemp,
                sim_dataset.news, trend=np.zeros(len(sim_dataset)))


def test_polynomial_trend_recovers_exponential_growth():
    t = np.arange(120)
    g = 100 * np.exp(0.008 * t)
    np.testing.assert_allclose(polynomial_trend(g), g, rtol=1e-9)


def test_build_design_alignment(sim_dataset):
    d = build_design(sim_dataset, 4)
    assert len(d) == len(sim_dataset) - 4
    assert d.regressors.shape == (len(d), 1 + 3 * 4 + 1)
    t = 10
    pos = d.positions[t]
    assert d.response[t] == sim_dataset.gdp[pos]
    assert d.threshold_var[t] == sim_dataset.unemp[pos - 1]
    assert d.controls[t, 1] == sim_dataset.gdp[pos - 1]
    assert d.controls[t, 4] == sim_dataset.gdp[pos - 4]
    assert d.controls[t, 5] == sim_dataset.gov[pos - 1]
    assert d.shock[t] == sim_dataset.news[pos]
    assert d.names[-1] == "shock"
    with pytest.raises(InsufficientDataError):
        build_design(Dataset(sim_dataset.index[:5], *(s[:5] for s in (
            sim_dataset.gdp, sim_dataset.gov, sim_dataset.unemp, sim_dataset.news))), 4)


def test_arrays_are_read_only(sim_dataset):
    with pytest.raises(ValueError):
        sim_dataset.gdp[0] = 0.0


def test_build_design_lags_shift_by_one_row(sim_dataset):
    d = build_design(sim_dataset, 4)
    for name in ("gdp", "gov", "news"):
        cols = [d.names.index(f"{name}_lag{k}") for k in range(1, 5)]
        for a, b in zip(cols, cols[1:]):
            np.testing.assert_array_equal(d.controls[1:, b], d.controls[:-1, a])
