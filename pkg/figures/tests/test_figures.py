import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from figures import (  # noqa: E402
    EmptyInputError,
    FigureSpec,
    SUMMARY_COLUMNS,
    SchemaError,
    load_summary,
    main,
    plot,
    series,
)

REFERENCE = Path(__file__).resolve().parents[1] / "reference"
JAYWALK = REFERENCE / "summary_jaywalk.csv"
COMPUTE = REFERENCE / "summary_compute.csv"


def test_reference_summaries_are_committed():
    assert JAYWALK.exists() and COMPUTE.exists()


def test_both_kinds_render_from_reference(tmp_path):
    for kind, src in (("miss-vs-density", JAYWALK), ("compute-gain", COMPUTE)):
        out = tmp_path / f"{kind}.png"
        plot(FigureSpec(src, kind, out))
        assert out.exists() and out.stat().st_size > 1000


def test_cli_directory_input(tmp_path, capsys):
    out = tmp_path / "miss.png"
    assert main(["--input", str(REFERENCE), "--kind", "miss-vs-density",
                 "--out", str(out)]) == 0
    assert out.exists()
    assert "wrote" in capsys.readouterr().out


def test_fog0_series_dominates_fog100_pointwise():
    rows = load_summary(JAYWALK)
    x0, y0, _ = series(rows, "mean_misses", "density_veh_per_100m",
                       where=(("fog_fraction", 0.0),))
    x1, y1, _ = series(rows, "mean_misses", "density_veh_per_100m",
                       where=(("fog_fraction", 1.0),))
    assert x0 == x1 and len(x0) >= 5
    assert all(a > b for a, b in zip(y0, y1))


def test_rendering_is_idempotent(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    plot(FigureSpec(JAYWALK, "miss-vs-density", a))
    plot(FigureSpec(JAYWALK, "miss-vs-density", b))
    assert a.read_bytes() == b.read_bytes()
    before = JAYWALK.read_bytes()
    assert JAYWALK.read_bytes() == before  # inputs never mutated


def test_empty_csv_errors_without_output(tmp_path, capsys):
    empty = tmp_path / "summary_jaywalk.csv"
    empty.write_text(",".join(SUMMARY_COLUMNS) + "\n")
    out = tmp_path / "out.png"
    code = main(["--input", str(empty), "--kind", "miss-vs-density", "--out", str(out)])
    assert code == 4
    assert not out.exists()
    with pytest.raises(EmptyInputError):
        load_summary(empty)


def test_schema_mismatch_reports_column_diff(tmp_path, capsys):
    bad = tmp_path / "summary_jaywalk.csv"
    cols = [c for c in SUMMARY_COLUMNS if c != "mean_misses"] + ["surprise"]
    bad.write_text(",".join(cols) + "\n" + ",".join(["0"] * len(cols)) + "\n")
    out = tmp_path / "out.png"
    code = main(["--input", str(bad), "--kind", "miss-vs-density", "--out", str(out)])
    assert code == 3
    err = capsys.readouterr().err
    assert "mean_misses" in err and "surprise" in err
    assert not out.exists()


def test_missing_input_is_usage_error(tmp_path, capsys):
    code = main(["--input", str(tmp_path / "nope"), "--kind", "compute-gain",
                 "--out", str(tmp_path / "x.png")])
    assert code == 2
