import json
import struct

import numpy as np
import pytest
from click.testing import CliRunner

from tablechain.cli import (
    EXIT_IO, EXIT_NUMERIC, EXIT_PARSE, EXIT_SEMANTIC, main, split_blocks,
)

GOLDEN_SCRIPT = (
    "# rank movies by how much they made relative to cost\n"
    "DERIVE profit_margin = (box_office - cost) / cost;\n"
    "SORT profit_margin DESC;\n"
    "SLICE TOP 5\n"
)
GOLDEN_REPLY = (
    "Derived `profit_margin`; sorted by `profit_margin` descending; "
    "returned top 5 of 6 rows."
)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def movies_file(tmp_path, movies_csv):
    path = tmp_path / "movies.csv"
    path.write_bytes(movies_csv)
    return str(path)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- split_blocks -------------------------------------------------------------

def test_split_blocks_numbers_and_comments():
    text = "# header comment\nSORT a ASC\n\n\nSLICE TOP 2;\nSELECT a\n"
    blocks = split_blocks(text)
    assert [(line, chain.strip()) for line, chain in blocks] == [
        (1, "SORT a ASC"),
        (5, "SLICE TOP 2;\nSELECT a"),
    ]


def test_split_blocks_empty_input():
    assert split_blocks("") == []
    assert split_blocks("# only a comment\n\n") == []


# --- run ----------------------------------------------------------------------

def test_run_golden_table_format(runner, tmp_path, movies_file):
    script = write(tmp_path, "golden.tc", GOLDEN_SCRIPT)
    result = runner.invoke(main, ["run", script, movies_file])
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0].split() == ["title", "box_office", "cost", "profit_margin"]
    assert set(lines[1]) == {"-", " "}
    order = [row.split()[0] for row in lines[2:7]]
    assert order == ["B", "E", "A", "D", "F"]
    assert lines[2].split() == ["B", "300", "100", "2.0"]
    assert result.output.rstrip().endswith(GOLDEN_REPLY)


def test_run_csv_format(runner, tmp_path, movies_file):
    script = write(tmp_path, "golden.tc", GOLDEN_SCRIPT)
    result = runner.invoke(main, ["run", script, movies_file, "--format", "csv"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "title,box_office,cost,profit_margin"
    assert lines[1] == "B,300,100,2.0"
    assert lines[5] == "F,30,20,0.5"
    assert lines[6] == ""
    assert lines[7] == GOLDEN_REPLY


def test_run_json_byte_identical_across_runs(runner, tmp_path, movies_file):
    script = write(tmp_path, "golden.tc", GOLDEN_SCRIPT)
    args = ["run", script, movies_file, "--format", "json"]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == b.exit_code == 0
    assert a.output == b.output
    payload = json.loads(a.output.splitlines()[0])
    assert payload["columns"] == ["title", "box_office", "cost", "profit_margin"]
    assert [row[0] for row in payload["cells"]] == ["B", "E", "A", "D", "F"]


def test_run_blocks_evolve_table(runner, tmp_path, movies_file):
    script = write(
        tmp_path, "mutate.tc",
        "UPDATE cost = 0 WHERE title = 'A'\n"
        "\n"
        "FILTER cost = 0;\nSELECT title, cost\n",
    )
    result = runner.invoke(main, ["run", script, movies_file, "--format", "csv"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[:2] == ["title,cost", "A,0"]
    assert lines[3] == "Updated `cost` in 1 row."
    assert lines[4] == "Filtered to 1 of 6 rows; selected `title`, `cost`; result: title = A, cost = 0."


def test_run_empty_script_reports_unchanged(runner, tmp_path, movies_file):
    script = write(tmp_path, "empty.tc", "# nothing here\n")
    result = runner.invoke(main, ["run", script, movies_file])
    assert result.exit_code == 0
    assert "table unchanged (6 rows × 3 columns)" in result.output


def test_run_synonym_config(runner, tmp_path):
    table = write(tmp_path, "t.csv", "gross,cost\n10,5\n30,2\n")
    config = write(
        tmp_path, "planner.yaml",
        "synonyms:\n  gross: [box_office]\n",
    )
    script = write(tmp_path, "s.tc", "SORT box_office DESC\n")
    result = runner.invoke(
        main, ["run", script, table, "--config", config, "--format", "csv"]
    )
    assert result.exit_code == 0
    assert result.output.splitlines()[1] == "30,2"


def test_run_missing_files_exit_1(runner, tmp_path, movies_file):
    r = runner.invoke(main, ["run", str(tmp_path / "no.tc"), movies_file])
    assert r.exit_code == EXIT_IO == 1
    script = write(tmp_path, "ok.tc", "SLICE TOP 1\n")
    r = runner.invoke(main, ["run", script, str(tmp_path / "no.csv")])
    assert r.exit_code == EXIT_IO


def test_run_parse_error_exit_2_with_position(runner, tmp_path, movies_file):
    script = write(tmp_path, "bad.tc", "SLICE TOP 1\n\nSORT cost NOPE\n")
    result = runner.invoke(main, ["run", script, movies_file])
    assert result.exit_code == EXIT_PARSE == 2
    assert f"{script}:3:11: parse error:" in result.stderr


def test_run_unknown_column_exit_3(runner, tmp_path, movies_file):
    script = write(tmp_path, "bad.tc", "SORT nosuch ASC\n")
    result = runner.invoke(main, ["run", script, movies_file])
    assert result.exit_code == EXIT_SEMANTIC == 3
    assert "UnknownColumn" in result.stderr


def test_run_ambiguous_column_exit_3(runner, tmp_path):
    table = write(tmp_path, "t.csv", "cost,cast\n1,a\n")
    script = write(tmp_path, "s.tc", "SORT cst ASC\n")
    result = runner.invoke(main, ["run", script, table])
    assert result.exit_code == EXIT_SEMANTIC
    assert "ambiguous column 'cst'" in result.stderr
    assert "cast, cost" in result.stderr


def test_run_exec_error_exit_3(runner, tmp_path):
    table = write(tmp_path, "t.csv", "d\n2021-01-01\n")
    script = write(tmp_path, "s.tc", "FILTER d > 'nope'\n")
    result = runner.invoke(main, ["run", script, table])
    assert result.exit_code == EXIT_SEMANTIC
    assert "execution failed at command 0" in result.stderr


# --- repl ---------------------------------------------------------------------

def test_repl_session(runner, movies_file):
    feed = (
        "Give me some numbers\n"
        ":SLICE TOP 1\n"
        "sort by cost\n"
        ":BOGUS\n"
        ":quit\n"
    )
    result = runner.invoke(main, ["repl", movies_file], input=feed)
    assert result.exit_code == 0
    out = result.output
    assert "Which columns or statistics do you want?" in out
    assert "candidates: title, cost, box_office" in out
    assert "Returned top 1 of 6 rows" in out
    assert "(ordering rows by `cost` ascending)" in out
    assert "SORT cost ASC" in out
    assert "error: ParseError:" in out


def test_repl_eof_exits_cleanly(runner, movies_file):
    result = runner.invoke(main, ["repl", movies_file], input="")
    assert result.exit_code == 0


def test_repl_does_not_mutate_base_table(runner, movies_file):
    feed = ":UPDATE cost = 0 WHERE TRUE\n:SELECT cost; SLICE TOP 1\n:quit\n"
    result = runner.invoke(main, ["repl", movies_file], input=feed)
    assert result.exit_code == 0
    assert "Updated `cost` in 6 rows." in result.output
    # the follow-up still sees the original value
    assert "result: cost = 50." in result.output


def test_repl_preview_caps_at_ten_rows(runner, tmp_path):
    rows = "\n".join(str(i) for i in range(25))
    table = write(tmp_path, "big.csv", f"x\n{rows}\n")
    result = runner.invoke(main, ["repl", str(table)], input=":quit\n")
    assert result.exit_code == 0
    assert "... (25 rows total)" in result.output


# --- pretrain / encode ----------------------------------------------------------

@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    result = CliRunner().invoke(
        main, ["synth-corpus", str(out), "--n-tables", "4", "--seed", "3"]
    )
    assert result.exit_code == 0
    return out


def test_synth_corpus_deterministic_files(runner, tmp_path, corpus_dir):
    again = tmp_path / "again"
    result = runner.invoke(
        main, ["synth-corpus", str(again), "--n-tables", "4", "--seed", "3"]
    )
    assert result.exit_code == 0
    ours = sorted(p.name for p in again.glob("*.csv"))
    theirs = sorted(p.name for p in corpus_dir.glob("*.csv"))
    assert ours == theirs and len(ours) == 4
    for name in ours:
        assert (again / name).read_bytes() == (corpus_dir / name).read_bytes()


def test_pretrain_writes_params_and_loss_curve(runner, tmp_path, corpus_dir):
    out = tmp_path / "enc.tge1"
    result = runner.invoke(
        main,
        ["pretrain", str(corpus_dir), str(out), "--steps", "6", "--seed", "1"],
    )
    assert result.exit_code == 0, result.output
    assert "trained 6 steps on 4 tables" in result.output

    blob = out.read_bytes()
    assert blob[:4] == b"TGE1"
    assert struct.unpack("<4I", blob[4:20]) == (64, 4, 37, 12)

    curve = (tmp_path / "enc.loss.csv").read_text().splitlines()
    assert curve[0] == "step,loss"
    assert len(curve) == 7
    losses = [float(line.split(",")[1]) for line in curve[1:]]
    assert all(np.isfinite(l) for l in losses)

    # the trained file round-trips through encode
    encoded = runner.invoke(
        main, ["encode", str(corpus_dir / sorted(
            p.name for p in corpus_dir.glob("*.csv"))[0]), str(out)]
    )
    assert encoded.exit_code == 0
    vec = json.loads(encoded.output)
    assert len(vec) == 64


def test_pretrain_config_file_and_overrides(runner, tmp_path, corpus_dir):
    cfg = write(tmp_path, "train.yaml", "steps: 3\nlearning_rate: 0.01\n")
    out = tmp_path / "enc.tge1"
    result = runner.invoke(
        main,
        ["pretrain", str(corpus_dir), str(out), "--config", cfg, "--steps", "2"],
    )
    assert result.exit_code == 0
    assert "trained 2 steps" in result.output  # the flag beats the file


def test_pretrain_unknown_config_key(runner, tmp_path, corpus_dir):
    cfg = write(tmp_path, "bad.yaml", "stepss: 3\n")
    result = runner.invoke(
        main, ["pretrain", str(corpus_dir), str(tmp_path / "o.tge1"),
               "--config", cfg],
    )
    assert result.exit_code == EXIT_IO
    assert "unknown pretrain config key" in result.stderr


def test_pretrain_empty_corpus_exit_1(runner, tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    result = runner.invoke(
        main, ["pretrain", str(empty), str(tmp_path / "o.tge1")]
    )
    assert result.exit_code == EXIT_IO
    assert "no usable CSV tables" in result.stderr


def test_pretrain_missing_dir_exit_1(runner, tmp_path):
    result = runner.invoke(
        main, ["pretrain", str(tmp_path / "gone"), str(tmp_path / "o.tge1")]
    )
    assert result.exit_code == EXIT_IO


def test_pretrain_divergence_exit_4(runner, tmp_path, corpus_dir):
    with np.errstate(all="ignore"):
        result = runner.invoke(
            main,
            ["pretrain", str(corpus_dir), str(tmp_path / "o.tge1"),
             "--steps", "6", "--lr", "1e100"],
        )
    assert result.exit_code == EXIT_NUMERIC == 4
    assert "training diverged at step" in result.stderr
    assert not (tmp_path / "o.tge1").exists()


def test_encode_seeded_determinism(runner, movies_file):
    a = runner.invoke(main, ["encode", movies_file, "--seed", "5"])
    b = runner.invoke(main, ["encode", movies_file, "--seed", "5"])
    c = runner.invoke(main, ["encode", movies_file, "--seed", "6"])
    assert a.exit_code == b.exit_code == c.exit_code == 0
    assert a.output == b.output
    assert a.output != c.output
    vec = json.loads(a.output)
    assert len(vec) == 64
    assert all(np.isfinite(v) for v in vec)


def test_encode_bad_params_file_exit_1(runner, tmp_path, movies_file):
    bogus = tmp_path / "junk.tge1"
    bogus.write_bytes(b"not params")
    result = runner.invoke(main, ["encode", movies_file, str(bogus)])
    assert result.exit_code == EXIT_IO
    assert "cannot load params" in result.stderr
