"""Command-line entry points.

Subcommands:

- ``run`` — execute a script of chain blocks against a CSV table.
- ``repl`` — interactive loop; plain lines go through the planner, lines
  starting with ``:`` are raw chain text.
- ``pretrain`` / ``encode`` — train the table encoder on a corpus of CSVs,
  or print a table's 64-dim embedding with saved parameters.
- ``serve`` — launch the HTTP service.
- ``synth-corpus`` — write a synthetic CSV corpus for pretraining runs.

Exit codes: 1 for I/O problems, 2 for parse errors, 3 for validation or
execution errors, 4 for a non-finite training loss.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click
import yaml

from .corrector import correct
from .encoder import (
    TrainConfig, encode as encode_table, init_params, load_params_file,
    save_params_file, synth_corpus, train_mtm,
)
from .errors import (
    AmbiguousColumn, ExecError, NonFiniteLoss, ParseError, TableChainError,
)
from .executor import execute
from .parser import parse_chain
from .planner import load_planner_config
from .service import (
    ServiceConfig, canonical_json, load_service_config, serve as run_service,
    table_payload,
)
from .session import AnalysisSession, Clarify
from .table import Table, format_cell, load_csv, to_csv, with_meta
from .validator import validate

EXIT_IO = 1
EXIT_PARSE = 2
EXIT_SEMANTIC = 3
EXIT_NUMERIC = 4


def _fail(code: int, message: str) -> None:
    click.echo(message, err=True)
    raise SystemExit(code)


def _read_bytes(path: str, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        _fail(EXIT_IO, f"cannot read {what} {path!r}: {e.strerror or e}")


def _load_table(path: str, synonyms: dict) -> Table:
    data = _read_bytes(path, "table")
    try:
        table = load_csv(data, table_name=Path(path).stem)
    except TableChainError as e:
        _fail(EXIT_IO, f"cannot load table {path!r}: {e}")
    return with_meta(table, synonyms)


def _load_synonyms(config_path: Optional[str]) -> tuple[dict, object, float]:
    """Returns (synonyms, measure registry, vagueness threshold)."""
    from .planner import DEFAULT_VAGUENESS_THRESHOLD, default_registry

    if config_path is None:
        return {}, default_registry(), DEFAULT_VAGUENESS_THRESHOLD
    text = _read_bytes(config_path, "config").decode("utf-8")
    cfg = load_planner_config(text)
    return cfg.synonyms, cfg.registry, cfg.vagueness_threshold


def render_table(t: Table, max_rows: Optional[int] = None) -> str:
    names = list(t.schema.names)
    rows = list(t.rows())
    clipped = False
    if max_rows is not None and len(rows) > max_rows:
        rows = rows[:max_rows]
        clipped = True
    cells = [[format_cell(v) for v in row] for row in rows]
    widths = [
        max(len(names[j]), max((len(r[j]) for r in cells), default=0))
        for j in range(len(names))
    ]
    header = "  ".join(n.ljust(w) for n, w in zip(names, widths))
    rule = "  ".join("-" * w for w in widths)
    lines = [header.rstrip(), rule.rstrip()]
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    if clipped:
        lines.append(f"... ({t.n_rows} rows total)")
    return "\n".join(lines)


def _print_table(t: Table, fmt: str) -> None:
    if fmt == "table":
        click.echo(render_table(t))
    elif fmt == "json":
        click.echo(canonical_json(table_payload(t)))
    else:
        sys.stdout.write(to_csv(t).decode("utf-8"))


def split_blocks(text: str) -> list[tuple[int, str]]:
    """Split script text into (start_line, chain_text) blocks.

    Blocks are separated by blank lines. Whole-line '#' comments are
    replaced with empty lines so positions inside a block stay accurate.
    """
    lines = text.splitlines()
    blocks: list[tuple[int, str]] = []
    current: list[str] = []
    start = 0
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            if current and any(l.strip() for l in current):
                blocks.append((start, "\n".join(current)))
            current = []
            continue
        if not current:
            start = i + 1
        current.append("" if stripped.startswith("#") else line)
    if current and any(l.strip() for l in current):
        blocks.append((start, "\n".join(current)))
    return blocks


@click.group()
def main() -> None:
    """Tabular command-chain toolkit."""


@main.command()
@click.argument("script")
@click.argument("table")
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]),
              default="table", show_default=True,
              help="How to print the final table.")
@click.option("--config", "config_path", default=None,
              help="Planner/synonym YAML config.")
def run(script: str, table: str, fmt: str, config_path: Optional[str]) -> None:
    """Run a script of chain blocks against TABLE, printing the final state.

    Blocks are separated by blank lines; '#' starts a comment line. Each
    block is corrected, validated, and executed against the table produced
    by the previous block.
    """
    script_text = _read_bytes(script, "script").decode("utf-8")
    synonyms, _, _ = _load_synonyms(config_path)
    current = _load_table(table, synonyms)

    replies: list[str] = []
    blocks = split_blocks(script_text)
    for start_line, chain_text in blocks:
        try:
            chain = parse_chain(chain_text)
        except ParseError as e:
            _fail(EXIT_PARSE,
                  f"{script}:{start_line + e.line - 1}:{e.col}: parse error: "
                  f"expected {e.expected}, found {e.found}")
        try:
            corrected = correct(chain, current.schema)
        except AmbiguousColumn as e:
            _fail(EXIT_SEMANTIC,
                  f"block at line {start_line}: ambiguous column {e.name!r} "
                  f"(candidates: {', '.join(e.candidates)})")
        report = validate(corrected.chain, current.schema)
        if not report.ok:
            issue = report.issues[0]
            _fail(EXIT_SEMANTIC,
                  f"block at line {start_line}: {issue.kind} at command "
                  f"{issue.command_index}: {issue.detail}")
        try:
            result = execute(corrected.chain, current)
        except ExecError as e:
            _fail(EXIT_SEMANTIC,
                  f"block at line {start_line}: execution failed at command "
                  f"{e.command_index}: {e.cause}")
        current = result.table
        replies.append(result.reply)

    if not blocks:
        replies.append(execute(parse_chain(""), current).reply)
    _print_table(current, fmt)
    click.echo("")
    for reply in replies:
        click.echo(reply)


@main.command()
@click.argument("table")
@click.option("--config", "config_path", default=None,
              help="Planner/synonym YAML config.")
def repl(table: str, config_path: Optional[str]) -> None:
    """Interactive loop over TABLE.

    Plain lines are planned as natural-language queries; lines starting
    with ':' run as raw chain text; ':quit' exits. The base table is never
    modified; mutating chains show their result without persisting it.
    """
    synonyms, registry, threshold = _load_synonyms(config_path)
    base = _load_table(table, synonyms)
    session = AnalysisSession(
        base, registry=registry, synonyms=synonyms,
        vagueness_threshold=threshold,
    )
    click.echo(render_table(session.table, max_rows=10))
    click.echo("type a query, ':CHAIN' for raw commands, ':quit' to leave")
    while True:
        try:
            line = input("> ")
        except EOFError:
            click.echo("")
            return
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            return
        try:
            if line.startswith(":"):
                outcome = session.run_chain_text(line[1:])
            else:
                outcome = session.ask(line)
        except TableChainError as e:
            click.echo(f"error: {type(e).__name__}: {e}")
            continue
        if isinstance(outcome, Clarify):
            click.echo(outcome.question)
            if outcome.candidates:
                click.echo("candidates: " + ", ".join(outcome.candidates))
            continue
        for note in outcome.rationale:
            click.echo(f"  ({note})")
        click.echo(outcome.chain_text)
        click.echo(render_table(outcome.result.table, max_rows=10))
        click.echo(outcome.result.reply)


@main.command()
@click.argument("corpus_dir")
@click.argument("out_params")
@click.option("--config", "config_path", default=None,
              help="YAML with steps/learning_rate/mask_frac/seed/batch_size.")
@click.option("--steps", type=int, default=None, help="Training steps [200].")
@click.option("--lr", type=float, default=None, help="Learning rate [0.001].")
@click.option("--mask-frac", type=float, default=None,
              help="Fraction of columns to mask [0.15].")
@click.option("--seed", type=int, default=None, help="RNG seed [0].")
def pretrain(corpus_dir: str, out_params: str, config_path: Optional[str],
             steps: Optional[int], lr: Optional[float],
             mask_frac: Optional[float], seed: Optional[int]) -> None:
    """Train the table encoder on every CSV in CORPUS_DIR.

    Writes the parameter file to OUT_PARAMS and the loss curve next to it
    as '<stem>.loss.csv'.
    """
    settings = {"steps": 200, "learning_rate": 1e-3, "mask_frac": 0.15,
                "seed": 0, "batch_size": 8}
    if config_path is not None:
        raw = yaml.safe_load(
            _read_bytes(config_path, "config").decode("utf-8")) or {}
        for key, value in raw.items():
            if key not in settings:
                _fail(EXIT_IO, f"unknown pretrain config key {key!r}")
            settings[key] = value
    for key, value in (("steps", steps), ("learning_rate", lr),
                       ("mask_frac", mask_frac), ("seed", seed)):
        if value is not None:
            settings[key] = value

    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        _fail(EXIT_IO, f"corpus directory {corpus_dir!r} does not exist")
    tables = []
    for path in sorted(corpus.glob("*.csv")):
        data = _read_bytes(str(path), "corpus file")
        try:
            t = load_csv(data, table_name=path.stem)
        except TableChainError as e:
            _fail(EXIT_IO, f"cannot load corpus file {path}: {e}")
        if t.n_cols >= 2:
            tables.append(t)
    if not tables:
        _fail(EXIT_IO, f"no usable CSV tables in {corpus_dir!r}")

    try:
        cfg = TrainConfig(**settings)
    except ValueError as e:
        _fail(EXIT_IO, str(e))
    losses: list[float] = []
    try:
        params = train_mtm(tables, cfg,
                           on_step=lambda step, loss: losses.append(loss))
    except NonFiniteLoss as e:
        _fail(EXIT_NUMERIC, f"training diverged at step {e.step}")
    try:
        save_params_file(params, out_params)
        curve_path = Path(out_params).with_suffix(".loss.csv")
        with open(curve_path, "w", encoding="utf-8") as fh:
            fh.write("step,loss\n")
            for i, loss in enumerate(losses):
                fh.write(f"{i},{loss!r}\n")
    except OSError as e:
        _fail(EXIT_IO, f"cannot write output: {e}")
    click.echo(f"trained {cfg.steps} steps on {len(tables)} tables; "
               f"loss {losses[0]:.6f} -> {losses[-1]:.6f}")
    click.echo(f"params: {out_params}")
    click.echo(f"loss curve: {curve_path}")


@main.command()
@click.argument("table")
@click.argument("params", required=False, default=None)
@click.option("--seed", type=int, default=42, show_default=True,
              help="Seed for fresh parameters when PARAMS is omitted.")
def encode(table: str, params: Optional[str], seed: int) -> None:
    """Print the 64-dim global embedding of TABLE as a JSON array."""
    t = _load_table(table, {})
    if params is not None:
        try:
            p = load_params_file(params)
        except (OSError, ValueError) as e:
            _fail(EXIT_IO, f"cannot load params {params!r}: {e}")
    else:
        p = init_params(seed)
    try:
        emb = encode_table(t, p)
    except TableChainError as e:
        _fail(EXIT_SEMANTIC, f"cannot encode table: {e}")
    click.echo(json.dumps([float(x) for x in emb.global_vec]))


@main.command()
@click.option("--config", "config_path", default=None, help="Service YAML config.")
@click.option("--bind", default=None, help="host:port to listen on.")
@click.option("--data-dir", default=None, help="Journal directory.")
def serve(config_path: Optional[str], bind: Optional[str],
          data_dir: Optional[str]) -> None:
    """Start the HTTP service."""
    try:
        cfg = load_service_config(config_path)
    except (OSError, ValueError) as e:
        _fail(EXIT_IO, f"bad service config: {e}")
    if bind is not None:
        cfg.bind = bind
    if data_dir is not None:
        cfg.data_dir = Path(data_dir)
    run_service(cfg)


@main.command("synth-corpus")
@click.argument("out_dir")
@click.option("--n-tables", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def synth_corpus_cmd(out_dir: str, n_tables: int, seed: int) -> None:
    """Write a deterministic synthetic CSV corpus into OUT_DIR."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = synth_corpus(n_tables=n_tables, seed=seed)
    for t in tables:
        (out / f"{t.schema.table_name}.csv").write_bytes(to_csv(t))
    click.echo(f"wrote {len(tables)} tables to {out_dir}")


if __name__ == "__main__":
    main()
