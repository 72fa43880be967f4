# Plot l-infinity error against spacing from converge/operator-test CSV files.

import csv
from pathlib import Path

import numpy as np
import matplotlib.pyplot as plt


def read_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    h, err = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["error"] == "nan":
                continue
            h.append(float(row["h"]))
            err.append(float(row["error"]))
    return np.array(h), np.array(err)


def plot_convergence(paths: list[str | Path], out: str | Path | None = None) -> None:
    plt.figure(figsize=(6, 5))
    for path in paths:
        h, err = read_table(path)
        plt.loglog(h, err, "o-", label=Path(path).stem)

    # slope-2 guide anchored at the coarsest point of the first table
    h0, e0 = read_table(paths[0])
    if h0.size:
        guide = e0[0] * (h0 / h0[0]) ** 2
        plt.loglog(h0, guide, "k--", label="slope 2")

    plt.xlabel("h")
    plt.ylabel("max error")
    plt.legend()
    plt.grid(True, which="both")
    plt.tight_layout()

    if out:
        plt.savefig(out, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    RESULTS = Path("./results")
    PATTERN = "converge_cd1d_a*.csv"
    OUT     = RESULTS / "convergence.png"

    plot_convergence(sorted(RESULTS.glob(PATTERN)), OUT)
