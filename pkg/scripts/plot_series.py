"""Plot a CSV written by ``spinrouter evolve``, ``compare-analytic`` or ``sweep``.

Usage::

    python scripts/plot_series.py out/evolve.csv [-o plot.png] [--columns F F_bar]

Needs matplotlib, which is not a dependency of the package itself.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from spinrouter.output import read_csv  # noqa: E402


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("-o", "--output", help="image file (default: CSV name with .png)")
    parser.add_argument("--columns", nargs="+", help="columns to plot against the first one")
    args = parser.parse_args(argv)

    meta, header, rows = read_csv(args.csv)
    numeric = [i for i, _ in enumerate(header) if all(isinstance(r[i], float) for r in rows)]
    wanted = args.columns or [header[i] for i in numeric[1:]]
    x = [r[0] for r in rows]

    fig, ax = plt.subplots(figsize=(7, 4))
    for name in wanted:
        i = header.index(name)
        ax.plot(x, [r[i] for r in rows], label=name)
    ax.set_xlabel(f"{header[0]} [{meta.get('time_unit', '')}]" if header[0] == "t" else header[0])
    ax.set_title(f"{meta.get('command', '')}  {meta.get('target', '')}".strip())
    ax.legend()
    fig.tight_layout()
    out = args.output or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
