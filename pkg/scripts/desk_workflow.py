"""Scaled-down training and retrieval experiment.

Generates the training corpus, trains the embedding and the scale
regressor, reports hold-out MAE against the predict-the-mean baseline, then
compares detection against random robust-partition selection on fresh test
graphs. Writes the full report as JSON.

    python3 scripts/desk_workflow.py --out desk_report.json
"""
from __future__ import annotations

import argparse
import json
import logging
from dataclasses import fields

from markstab import desk


def main() -> None:
    defaults = desk.DeskConfig()
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="desk_report.json")
    ap.add_argument("-v", "--verbose", action="store_true")
    for f in fields(desk.DeskConfig):
        value = getattr(defaults, f.name)
        if isinstance(value, tuple):
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(value[0]), nargs="+", default=list(value))
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(value), default=value)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = desk.DeskConfig(**{f.name: (tuple(v) if isinstance(v := getattr(args, f.name), list) else v)
                             for f in fields(desk.DeskConfig)})
    report = desk.run(cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1, default=str)
        fh.write("\n")
    print(desk.summary(report))


if __name__ == "__main__":
    main()
