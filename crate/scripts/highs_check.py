#!/usr/bin/env python3
"""Solve an exported ktsel model with HiGHS and print the selection as JSON.

usage: highs_check.py MODEL.(lp|mps) [--time-limit SECONDS]

Prints {"status", "z", "model_objective", "objective"}, where "objective" is
mapped back to the alignment value using the offset and scale recorded in the
model header.
"""

import argparse
import json
import re
import sys

import highspy


def header_scaling(path):
    with open(path) as f:
        for line in f:
            m = re.search(r"objective_offset=(\S+) objective_scale=(\S+)", line)
            if m:
                return float(m.group(1)), float(m.group(2))
            if not line.startswith(("\\", "*")):
                break
    return 0.0, 1.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("model")
    ap.add_argument("--time-limit", type=float, default=600.0)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 0.0)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(json.dumps({"error": "could not read " + args.model}), file=sys.stderr)
        return 1
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    lp = h.getLp()
    values = h.getSolution().col_value
    z = {}
    for name, v in zip(lp.col_names_, values):
        m = re.fullmatch(r"z_(\d+)", name)
        if m:
            z[int(m.group(1))] = 1 if v > 0.5 else 0
    offset, scale = header_scaling(args.model)
    obj = h.getInfo().objective_function_value
    print(json.dumps({
        "status": status,
        "z": [z[k] for k in sorted(z)],
        "model_objective": obj,
        "objective": offset + scale * obj,
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
