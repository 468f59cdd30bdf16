"""Bundled toy diffusion simulator.

Reads a key=value config file (``steps``, ``seed``) given as argv[1] and
writes ``output.csv`` in the working directory: one row per step with the
simulated core/fringe concentration of a diffusing quantity.  Output is a
pure function of the config, so identical configs give identical bytes.

Run as: ``python -m urbanlab.analysis.toy_simulator sim.cfg``
"""

from __future__ import annotations

import random
import sys
from pathlib import Path


def read_config(path: str) -> dict[str, str]:
    config: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


def simulate(steps: int, seed: int) -> list[tuple[int, float, float]]:
    rng = random.Random(seed)
    core, fringe = 1.0, 0.0
    rows: list[tuple[int, float, float]] = []
    for step in range(1, steps + 1):
        leak = core * (0.05 + 0.1 * rng.random())
        core -= leak
        fringe += leak * (0.6 + 0.2 * rng.random())
        rows.append((step, core, fringe))
    return rows


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print("usage: toy_simulator CONFIG_FILE", file=sys.stderr)
        return 2
    config = read_config(argv[1])
    try:
        steps = int(config["steps"])
        seed = int(config.get("seed", "0"))
    except (KeyError, ValueError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    if steps < 1:
        print("steps must be >= 1", file=sys.stderr)
        return 2

    rows = simulate(steps, seed)
    with open("output.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("step,core,fringe\n")
        for step, core, fringe in rows:
            fh.write(f"{step},{core:.8f},{fringe:.8f}\n")
    print(f"simulated {steps} step(s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
