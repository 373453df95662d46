"""
verify_manifest.py
------------------
Recompute the island truth of a synthetic dataset straight from its
per-tract manifest and census, and optionally score an impact table
against it.

Usage:
  python -m udikit.tools.verify_manifest data/
  python -m udikit.tools.verify_manifest data/ --impact work/impact.csv
  python -m udikit.tools.verify_manifest data/ --impact work/impact.csv --tolerance 0.05

Exit status is 0 when the island table matches the manifest (and every
impact month lies within tolerance), 1 otherwise.
"""

import argparse
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

console = Console()

# Relative agreement required between island.csv and the recomputed totals
ISLAND_RTOL = 1e-9


def recompute_island(manifest: pd.DataFrame, census: pd.DataFrame) -> pd.DataFrame:
    """Per-month island totals and fractions from manifest rows"""
    per_month = manifest.groupby(["year", "month"], sort=True)[["persons_out", "buildings_lost"]].sum()
    per_month = per_month.reset_index()
    per_month["population"] = float(census["population"].sum())
    per_month["building_count"] = float(census["building_count"].sum())
    per_month["persons_fraction"] = per_month["persons_out"] / per_month["population"]
    per_month["buildings_fraction"] = per_month["buildings_lost"] / per_month["building_count"]
    return per_month


def island_mismatches(recomputed: pd.DataFrame, island: pd.DataFrame, rtol: float = ISLAND_RTOL) -> list[str]:
    """Descriptions of every month where island.csv disagrees with the recomputation"""
    merged = recomputed.merge(island, on=["year", "month"], how="outer", suffixes=("", "_file"), indicator="side")
    problems = []
    for row in merged.to_dict("records"):
        label = f"{int(row['year']):04d}-{int(row['month']):02d}"
        if row["side"] != "both":
            problems.append(f"{label}: present in only one table")
            continue
        for column in ("persons_out", "buildings_lost", "persons_fraction", "buildings_fraction"):
            expected = row[column]
            found = row[f"{column}_file"]
            if not np.isclose(found, expected, rtol=rtol, atol=0.0):
                problems.append(f"{label}: {column} {found!r} != {expected!r}")
    return problems


def score_impact(recomputed: pd.DataFrame, impact: pd.DataFrame) -> pd.DataFrame:
    """Estimated vs true persons fraction for every month the impact table covers"""
    merged = impact.merge(recomputed, on=["year", "month"], how="left", suffixes=("_est", ""))
    return pd.DataFrame(
        {
            "year": merged["year"],
            "month": merged["month"],
            "estimated": merged["persons_fraction_est"],
            "truth": merged["persons_fraction"],
            "error": merged["persons_fraction_est"] - merged["persons_fraction"],
        }
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Verify synthetic ground truth against its manifest")
    parser.add_argument("data_dir", type=Path, help="Dataset directory written by 'udikit synth'")
    parser.add_argument("--impact", type=Path, help="Impact CSV to score against the truth")
    parser.add_argument(
        "--tolerance", type=float, default=0.05, help="Allowed absolute persons-fraction error (default: 0.05)"
    )
    args = parser.parse_args(argv)

    manifest = pd.read_csv(args.data_dir / "truth" / "manifest.csv", dtype={"tract_id": str})
    census = pd.read_csv(args.data_dir / "census.csv", dtype={"tract_id": str})
    island = pd.read_csv(args.data_dir / "truth" / "island.csv")

    recomputed = recompute_island(manifest, census)
    problems = island_mismatches(recomputed, island)
    for problem in problems:
        console.print(f"[red]✗ {problem}[/red]")
    if not problems:
        console.print(f"[green]✓ island.csv matches the manifest ({len(recomputed)} months)[/green]")

    failed = bool(problems)
    if args.impact is not None:
        scores = score_impact(recomputed, pd.read_csv(args.impact))
        table = Table(title="Persons without power (fraction)")
        for column in ("month", "estimated", "truth", "error"):
            table.add_column(column, justify="right")
        for row in scores.itertuples(index=False):
            ok = abs(row.error) <= args.tolerance
            failed = failed or not ok
            style = "green" if ok else "red"
            table.add_row(
                f"{row.year:04d}-{row.month:02d}",
                f"{row.estimated:.4f}",
                f"{row.truth:.4f}",
                f"[{style}]{row.error:+.4f}[/{style}]",
            )
        console.print(table)

    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
