#!/usr/bin/env python
"""Reproduce the penalty-ratio curves rho(N) and rho_tilde(N).

Builds Monte Carlo hull tables for direct (sigma_k = eps) and inverse
(sigma_k = eps * k) noise and writes the ratio of the hull-penalized to
the plain URE penalty with alpha = 0.1.  The inverse curve dominating the
direct one at small N is what separates RHM from URE on ill-posed
problems.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from riskhull.cli import main as cli_main


def run() -> None:
    p = argparse.ArgumentParser(description="Hull/URE penalty ratio curves")
    p.add_argument("--out", default="out/ratio", help="output root directory")
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--hull-seed", type=int, default=1)
    args = p.parse_args()

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    for name, beta in (("direct", 0.0), ("inverse", 1.0)):
        config = {
            "problem": {"kind": "power-law", "epsilon": 1.0, "beta": beta},
            "experiment": {"kind": "ratio", "n_max": args.n_max},
            "selector": {"alpha": args.alpha},
            "hull": {"samples": args.samples, "seed": args.hull_seed},
            "output": {"directory": str(root / name)},
        }
        cfg_path = root / f"{name}.json"
        cfg_path.write_text(json.dumps(config, indent=2))
        print(f"== {name} (beta = {beta:g})")
        rc = cli_main(["bench", "--config", str(cfg_path)])
        if rc != 0:
            raise SystemExit(rc)


if __name__ == "__main__":
    run()
