"""Plot CSV output of the dcf tool.

    python scripts/plot.py out/fig7/fig7.csv fig7.png
    python scripts/plot.py out/lambda_sweep/sweep.csv sweep.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_fig7(df, ax):
    mid = (df.t_start_s + df.t_end_s) / 2
    ax.step(mid, df.S_optimized_bps / 1e3, where="mid", label="optimized")
    ax.step(mid, df.S_baseline_bps / 1e3, where="mid", label="W0 = 32")
    ax.step(mid, df.S_m_bps / 1e3, where="mid", linestyle="--", color="k", label="S_m")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("throughput [kbit/s]")


def plot_sweep(df, ax):
    ax.plot(df.axis_value, df.S_bps / 1e3, marker=".", label="S")
    ax.plot(df.axis_value, df.S_m_bps / 1e3, linestyle="--", color="k", label="S_m")
    ax.set_xscale("log")
    ax.set_xlabel("axis value")
    ax.set_ylabel("throughput [kbit/s]")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("png")
    args = parser.parse_args()

    df = pd.read_csv(args.csv, comment="#")
    fig, ax = plt.subplots(figsize=(7, 4))
    if "S_optimized_bps" in df:
        plot_fig7(df, ax)
    elif "axis_value" in df:
        plot_sweep(df, ax)
    else:
        raise SystemExit(f"no plot for columns {list(df.columns)}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.png, dpi=120)


if __name__ == "__main__":
    main()
