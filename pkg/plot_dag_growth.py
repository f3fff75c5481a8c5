"""Plot DAG and tree sizes of the bench families against n."""

import argparse

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

from formula_families import dag_growth_table

sns.set_style("whitegrid")
plt.rcParams.update({'font.size': 12, 'font.family': 'serif'})


def plot_growth(df: pd.DataFrame, out: str) -> None:
    long = df.melt(id_vars=["family", "n", "role"], value_vars=["dag_size", "tree_size"],
                   var_name="measure", value_name="size")
    long["series"] = long["family"] + " " + long["role"] + " (" + long["measure"] + ")"

    plt.figure(figsize=(10, 6))
    ax = sns.lineplot(x="n", y="size", hue="series", data=long, marker="o")
    ax.set_yscale("log")
    plt.title("Formula size by family", pad=20)
    plt.ylabel("Size (nodes, log scale)")
    plt.xlabel("n")
    plt.tight_layout()
    plt.savefig(out, dpi=300)
    print(f"Generated {out}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Plot formula growth of the bench families")
    parser.add_argument("--csv", nargs="*", default=[], help="growth CSVs written by 'bench growth'")
    parser.add_argument("--out", default="fig_dag_growth.png")
    args = parser.parse_args()

    if args.csv:
        frame = pd.concat([pd.read_csv(path) for path in args.csv], ignore_index=True)
    else:
        frame = pd.concat([dag_growth_table("phi_n", range(2, 9)),
                           dag_growth_table("chi_n", range(0, 9)),
                           dag_growth_table("lower_bound", range(1, 5))], ignore_index=True)
    plot_growth(frame, args.out)
