#!/usr/bin/env python3
"""Generate data/winequality-red.csv, a synthetic stand-in for the UCI
red-wine quality file: same schema (11 physicochemical columns + quality,
semicolon-separated), 1599 rows, marginals close to the published summary
statistics, and a nonlinear quality relation."""
import numpy as np

RNG = np.random.default_rng(20260823)
N = 1599

COLS = [
    ("fixed acidity", 8.32, 1.74, 4.6, 15.9),
    ("volatile acidity", 0.53, 0.18, 0.12, 1.58),
    ("citric acid", 0.27, 0.19, 0.0, 1.0),
    ("residual sugar", 2.54, 1.41, 0.9, 15.5),
    ("chlorides", 0.087, 0.047, 0.012, 0.611),
    ("free sulfur dioxide", 15.87, 10.46, 1.0, 72.0),
    ("total sulfur dioxide", 46.47, 32.9, 6.0, 289.0),
    ("density", 0.9967, 0.0019, 0.990, 1.004),
    ("pH", 3.31, 0.15, 2.74, 4.01),
    ("sulphates", 0.66, 0.17, 0.33, 2.0),
    ("alcohol", 10.42, 1.07, 8.4, 14.9),
]


def skew_normal(n, loc, scale, skew):
    u = RNG.normal(size=n)
    v = RNG.normal(size=n)
    d = skew / np.sqrt(1 + skew**2)
    x = d * np.abs(u) + np.sqrt(1 - d**2) * v
    return loc + scale * x


def main():
    cols = {}
    # mild skew for the typically right-skewed columns
    skews = {"residual sugar": 4.0, "chlorides": 4.0, "total sulfur dioxide": 2.5,
             "free sulfur dioxide": 2.0, "sulphates": 2.0, "alcohol": 1.2,
             "volatile acidity": 1.0}
    for name, mean, sd, lo, hi in COLS:
        s = skews.get(name, 0.0)
        if s > 0:
            raw = skew_normal(N, 0.0, 1.0, s)
            raw = (raw - raw.mean()) / raw.std()
            vals = mean + sd * raw
        else:
            vals = RNG.normal(mean, sd, size=N)
        cols[name] = np.clip(vals, lo, hi)

    # couple total/free SO2 and density/alcohol a little
    cols["free sulfur dioxide"] = np.clip(
        0.35 * cols["total sulfur dioxide"] + RNG.normal(0, 4.0, N), 1.0, 72.0)
    cols["density"] = np.clip(
        0.9967 - 0.0012 * (cols["alcohol"] - 10.42) + RNG.normal(0, 0.0012, N),
        0.990, 1.004)

    z = {name: (cols[name] - cols[name].mean()) / cols[name].std() for name, *_ in COLS}
    score = (5.63
             + 0.75 * z["alcohol"]
             - 0.55 * z["volatile acidity"]
             + 0.30 * z["sulphates"]
             - 0.12 * z["pH"]
             - 0.18 * z["total sulfur dioxide"]
             + 0.10 * z["citric acid"]
             - 0.08 * z["chlorides"]
             - 0.25 * z["alcohol"] * z["volatile acidity"]
             - 0.15 * np.square(z["sulphates"]).clip(0, 4)
             + 0.12 * np.tanh(2.0 * z["alcohol"])
             + RNG.normal(0, 0.45, N))
    quality = np.clip(np.rint(score), 3, 8).astype(int)

    header = ";".join(f'"{name}"' for name, *_ in COLS) + ';"quality"'
    lines = [header]
    for i in range(N):
        vals = [f"{cols[name][i]:.4g}" for name, *_ in COLS]
        lines.append(";".join(vals) + f";{quality[i]}")
    with open("data/winequality-red.csv", "w") as f:
        f.write("\n".join(lines) + "\n")
    print("rows:", N, "quality counts:", np.bincount(quality)[3:])


if __name__ == "__main__":
    main()
