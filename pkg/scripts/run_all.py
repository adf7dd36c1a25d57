"""Run every shipped config through the CLI and print a one-line verdict per experiment.

    python scripts/run_all.py [--seed 1] [--out reports] [--only marginal_a08 fdd ...]
"""
import argparse
import contextlib
import io
import json
import pathlib
import sys
import time

from stablelab.cli import main as cli_main

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"


def run(path: pathlib.Path, seed: int | None, out: str) -> tuple[int, float, list[str]]:
    exp = json.loads(path.read_text())["experiment"]
    argv = [exp, "--config", str(path), "--out", out]
    if seed is not None:
        argv += ["--seed", str(seed)]
    buf = io.StringIO()
    t = time.perf_counter()
    with contextlib.redirect_stdout(buf):
        rc = cli_main(argv)
    lines = [l for l in buf.getvalue().splitlines() if l.startswith(("PASS", "FAIL"))]
    return rc, time.perf_counter() - t, lines


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="reports")
    ap.add_argument("--only", nargs="*")
    ap.add_argument("-v", action="store_true", help="print every criterion line")
    a = ap.parse_args()
    paths = sorted(CONFIGS.glob("*.json"))
    if a.only:
        paths = [p for p in paths if p.stem in a.only]
    worst = 0
    for p in paths:
        rc, dt, lines = run(p, a.seed, a.out)
        worst = max(worst, rc)
        tag = {0: "PASS", 2: "FAIL"}.get(rc, "ERROR")
        print(f"{tag} {p.stem:18s} {dt:7.1f}s  ({sum(l.startswith('FAIL') for l in lines)} failing)")
        if a.v or rc:
            for l in lines:
                print("    " + l)
    sys.exit(worst)


if __name__ == "__main__":
    main()
