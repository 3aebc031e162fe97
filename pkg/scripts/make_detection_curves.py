#!/usr/bin/env python3
"""Regenerate detection-probability curve data for all six methods.

Writes CSV to stdout or --out; plot with any CSV-aware tool.
"""

import argparse
import json
import tempfile

from gammaclutter import cli

SCENARIO = {
    "M": 10, "kappa": 2, "q": 0.5, "nu": 2.0,
    "rho_c": 0.75, "rho_s": 0.9, "pfa": 1e-6,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None)
    ap.add_argument("--sir-grid-db", default="0:18:37")
    ap.add_argument("--pfa", type=float, default=1e-6)
    args = ap.parse_args()
    with tempfile.NamedTemporaryFile("w", suffix=".json") as fh:
        json.dump({**SCENARIO, "pfa": args.pfa}, fh)
        fh.flush()
        argv = ["pd", "--scenario", fh.name,
                "--methods", "eff-sdp,eff-sp,dmg-sdp,dmg-sp,diag-sdp,diag-sp",
                "--sir-grid-db", args.sir_grid_db]
        if args.out:
            argv += ["--out", args.out]
        raise SystemExit(cli.main(argv))


if __name__ == "__main__":
    main()
