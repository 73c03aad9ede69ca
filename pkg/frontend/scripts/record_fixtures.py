#!/usr/bin/env python3
"""Record real service responses into a JSON fixture for the UI tests.

Runs the service core in-process (no sockets) and captures every call the
browser client is allowed to make, so the TypeScript suite can verify its
rendering against genuine payloads instead of hand-written approximations.
Re-run after changing the service:

    python3 scripts/record_fixtures.py tests/fixtures/session.json
"""
import json
import sys
import tempfile
from pathlib import Path

from tablechain.service import ServiceConfig, ServiceCore

MOVIES_CSV = (
    "title,box_office,cost\n"
    "A,100,50\n"
    "B,300,100\n"
    "C,60,80\n"
    "D,240,120\n"
    "E,90,30\n"
    "F,30,20\n"
)

GOLDEN_QUERY = "Show me the five movies with the highest profit margin"
VAGUE_QUERY = "Give me some numbers"
PLOT_QUERY = "histogram of cost"
TYPO_CHAIN = "SORT cst DESC; SLICE TOP 2"
BROKEN_CHAIN = "FROB x"


def main(out_path: str) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        core = ServiceCore(ServiceConfig(data_dir=Path(tmp)), journaling=False)
        calls = []

        def record(op, args, status, body):
            calls.append({"op": op, "args": args, "status": status, "body": body})

        status, body = core.upload(MOVIES_CSV.encode(), table_name="movies")
        record("upload", {"name": "movies"}, status, body)
        tid = body["table_id"]

        for text in (GOLDEN_QUERY, VAGUE_QUERY, PLOT_QUERY):
            status, body = core.query(tid, text)
            record("query", {"text": text}, status, body)

        for chain_text in (TYPO_CHAIN, BROKEN_CHAIN):
            status, body = core.commands(tid, chain_text)
            record("commands", {"chain_text": chain_text}, status, body)

        status, body = core.history(tid)
        record("history", {}, status, body)

        status, body = core.upload(b"   ", table_name="blank")
        record("upload", {"name": "blank"}, status, body)

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"table_id": tid, "calls": calls}, indent=2))
    print(f"recorded {len(calls)} calls to {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/session.json")
