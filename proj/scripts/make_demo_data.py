#!/usr/bin/env python3
"""Synthetic CSV files for the example specs in docs/specs.

Every file comes from a fixed seed, so rerunning the script reproduces data/ exactly.
"""

import argparse
import pathlib

import numpy as np


def write(path, columns):
    names = list(columns)
    rows = np.column_stack([columns[n] for n in names])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def quartic(rng):
    x = np.sort(rng.uniform(-1.5, 1.5, 50))
    y = 3 * x**4 - 6 * x**2 + 2 + rng.normal(0, 0.5, x.size)
    return {"x": x, "y": y}


def monotone(rng):
    x = np.sort(rng.uniform(-1, 1, 40))
    y = (1 + x) / 2 + rng.normal(0, 0.3, x.size)
    return {"x": x, "y": y}


def trig(rng):
    x = np.sort(rng.uniform(-np.pi, np.pi, 60))
    y = np.cos(x) ** 3 - np.sin(x) ** 3 + rng.normal(0, 0.1, x.size)
    return {"x": x, "y": y}


def spatial(rng):
    x = np.sort(rng.uniform(0, 3, 200))
    y = np.sin(x**3) + rng.normal(0, 0.1, x.size)
    return {"x": x, "y": y}


def jump(rng):
    x = np.sort(rng.uniform(0, 4, 100))
    y = np.sin(x) + (x > 2) + rng.normal(0, 0.1, x.size)
    return {"x": x, "y": y}


def surface(rng):
    x1 = rng.uniform(0, 1, 200)
    x2 = rng.uniform(0, 1, 200)
    y = 0.5 * x1 + 4 * (x2 - 0.5) ** 2 / (1 + 2 * x1) + rng.normal(0, 0.05, x1.size)
    return {"x1": x1, "x2": x2, "y": y}


def three_term(rng):
    # Components as in the classic GAM simulation: one smoothness level per input.
    x = rng.uniform(0, 1, (3, 400))
    f1 = 2 * np.sin(np.pi * x[0])
    f2 = np.exp(2 * x[1])
    f3 = 0.2 * x[2] ** 11 * (10 * (1 - x[2])) ** 6 + 10 * (10 * x[2]) ** 3 * (1 - x[2]) ** 10
    y = f1 + f2 + f3 + rng.normal(0, 1.0, x.shape[1])
    return {"x1": x[0], "x2": x[1], "x3": x[2], "y": y}


def varcoef(rng):
    # y = a(t) * x with a smoothly varying slope a(t) = 1 + sin(2 pi t).
    t = rng.uniform(0, 1, 200)
    x = rng.normal(0, 1, 200)
    y = (1 + np.sin(2 * np.pi * t)) * x + rng.normal(0, 0.2, t.size)
    return {"t": t, "x": x, "y": y}


DATASETS = {
    "quartic.csv": (quartic, 2),
    "monotone.csv": (monotone, 3),
    "trig.csv": (trig, 4),
    "spatial.csv": (spatial, 5),
    "jump.csv": (jump, 6),
    "surface.csv": (surface, 7),
    "three_term.csv": (three_term, 8),
    "varcoef.csv": (varcoef, 9),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data", type=pathlib.Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (make, seed) in DATASETS.items():
        write(args.out / name, make(np.random.default_rng(seed)))
        print("wrote", args.out / name)


if __name__ == "__main__":
    main()
