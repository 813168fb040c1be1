"""Plot one or more ROC CSVs (columns fpr,tpr,threshold) written by `rigcast evaluate`.

usage: python plot_roc.py roc.csv [other.csv ...] [-o roc.png]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--out", default="roc.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(5, 5))
    for path in args.csv:
        df = pd.read_csv(path)
        area = ((df.fpr.diff() * (df.tpr + df.tpr.shift()) / 2).sum())
        ax.plot(df.fpr, df.tpr, label=f"{path} (AUC {area:.3f})")
    ax.plot([0, 1], [0, 1], color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
