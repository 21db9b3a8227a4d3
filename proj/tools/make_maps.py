#!/usr/bin/env python3
"""Writes the synthetic lake rasters under maps/."""
import math
import pathlib
import sys


def lake(width, height, cell, blobs, cuts):
    rows = []
    for r in range(height):
        y = (height - r - 0.5) / height
        row = []
        for c in range(width):
            x = (c + 0.5) / width
            inside = any(((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0 for cx, cy, rx, ry in blobs)
            cut = any(((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0 for cx, cy, rx, ry in cuts)
            row.append("1" if inside and not cut else "0")
        rows.append("".join(row))
    return f"cellsize {cell}\n" + "\n".join(rows) + "\n"


# Elongated basin with a western bay, an eastern peninsula and a small island.
BLOBS = [(0.52, 0.50, 0.40, 0.42), (0.22, 0.66, 0.18, 0.22), (0.70, 0.28, 0.24, 0.20)]
CUTS = [(0.95, 0.55, 0.22, 0.08), (0.40, 0.42, 0.06, 0.09), (0.15, 0.30, 0.12, 0.14)]


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "desk_lake.txt").write_text(lake(30, 24, 0.45, BLOBS, CUTS))
    (out / "lake_75x60.txt").write_text(lake(75, 60, 0.225, BLOBS, CUTS))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "maps")
