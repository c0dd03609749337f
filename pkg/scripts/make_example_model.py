#!/usr/bin/env python3
"""Emit ready-to-run example files for the command-line interface.

Writes a solvable team model (with a one-step-delay information field), a
decoupled variant, and a fixed agent-2 prescription family, then prints the
commands that consume them.

Usage:
    python scripts/make_example_model.py [--out DIR] [--seed 0]
"""

import argparse
import json
import sys
from pathlib import Path

from nested_dp.decoupled import decoupled_to_json
from nested_dp.generators import certification_instance, convergence_instance, decoupled_instance
from nested_dp.model import model_to_json


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=".", help="directory to write into")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    doc = model_to_json(certification_instance(args.seed))
    doc["info"] = {"kind": "delayed", "d": 1}
    (out / "model.json").write_text(json.dumps(doc, indent=1, sort_keys=True))

    conv = model_to_json(convergence_instance(1))
    conv["info"] = {"kind": "delayed", "d": 1}
    (out / "model_rich_obs.json").write_text(json.dumps(conv, indent=1, sort_keys=True))

    ddoc = decoupled_to_json(decoupled_instance(args.seed))
    ddoc["info"] = {"kind": "delayed", "d": 1}
    (out / "decoupled.json").write_text(json.dumps(ddoc, indent=1, sort_keys=True))

    (out / "psi2.json").write_text(json.dumps({"kind": "hashed", "seed": 7}))

    print(f"wrote model.json, model_rich_obs.json, decoupled.json, psi2.json under {out}/")
    print("try:")
    print(f"  nested-dp solve {out / 'model.json'}")
    print(f"  nested-dp oracle {out / 'model.json'} --with-solve")
    print(f"  nested-dp pbp-approx {out / 'model_rich_obs.json'} --psi2 {out / 'psi2.json'} --n 4")
    print(f"  nested-dp alpha {out / 'model_rich_obs.json'} --psi2 {out / 'psi2.json'} --n 4")
    print(f"  nested-dp simulate {out / 'model.json'} --seed 7 --episodes 100000")
    print(f"  nested-dp check-factorization {out / 'decoupled.json'}")
    print(f"  nested-dp solve {out / 'decoupled.json'} --decoupled")
    return 0


if __name__ == "__main__":
    sys.exit(main())
