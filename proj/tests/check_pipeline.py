#!/usr/bin/env python3
"""Checks the artifacts of a pipeline run: files, SVG panels and eval thresholds."""

import json
import pathlib
import sys
import xml.etree.ElementTree as ET

SVG = "{http://www.w3.org/2000/svg}"
ARTIFACTS = ["dataset.ccds", "dissimilarity.ccdm", "geodesic.ccdm", "chart.ccch", "eval.json", "table.txt", "chart.svg"]


def main():
    if len(sys.argv) != 4:
        print("usage: check_pipeline.py OUT_DIR POINTS DIAMETER", file=sys.stderr)
        return 2
    out = pathlib.Path(sys.argv[1])
    points = int(sys.argv[2])
    diameter = float(sys.argv[3])
    failures = []

    for name in ARTIFACTS:
        path = out / name
        if not path.is_file() or path.stat().st_size == 0:
            failures.append(f"missing or empty artifact {name}")

    if (out / "chart.svg").is_file():
        root = ET.parse(out / "chart.svg").getroot()
        for group in ("truth", "chart"):
            node = root.find(f".//{SVG}g[@id='{group}']")
            if node is None:
                failures.append(f"chart.svg has no <g id='{group}'>")
                continue
            count = len(node.findall(f"{SVG}circle"))
            if count != points:
                failures.append(f"chart.svg group {group} has {count} circles, expected {points}")

    if (out / "eval.json").is_file():
        report = json.loads((out / "eval.json").read_text())
        print(f"ct={report['ct']:.4f} tw={report['tw']:.4f} ks={report['ks']:.4f} mae={report['mae']:.4f} m")
        if report["mae"] is None or not report["mae"] < 0.1 * diameter:
            failures.append(f"mae {report['mae']} is not below {0.1 * diameter:.4f}")
        for key in ("ct", "tw"):
            if not report[key] >= 0.9:
                failures.append(f"{key} {report[key]:.4f} is below 0.9")

    for f in failures:
        print("FAIL:", f)
    if not failures:
        print("pipeline artifacts OK")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
