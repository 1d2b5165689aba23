"""Monthly Mauna Loa CO2 snapshot for the bundled example and tests.

Source: the weekly Mauna Loa record shipped with statsmodels (statsmodels.datasets.co2,
Scripps Institution of Oceanography, 1958-2001), averaged per calendar month. Months
without any valid weekly value are dropped.

The NOAA monthly file (co2_mm_mlo.csv from gml.noaa.gov) can be converted with
--noaa PATH instead; it yields the same columns.
"""
import argparse
import csv
import sys


def from_statsmodels():
    from statsmodels.datasets import co2

    df = co2.load_pandas().data
    monthly = df["co2"].resample("MS").mean().dropna()
    for ts, value in monthly.items():
        yield ts.year, ts.month, float(value)


def from_noaa(path):
    with open(path) as fh:
        rows = (line for line in fh if not line.startswith("#"))
        for rec in csv.DictReader(rows):
            value = float(rec["average"])
            if value > 0:
                yield int(rec["year"]), int(rec["month"]), value


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--noaa", help="NOAA co2_mm_mlo.csv to convert instead")
    ap.add_argument("-o", "--out", default="data/mauna_loa_monthly.csv")
    args = ap.parse_args()
    records = from_noaa(args.noaa) if args.noaa else from_statsmodels()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "month", "co2"])
        n = 0
        for year, month, value in records:
            # month is 0.5..11.5 so that the 0..12 knot range wraps one full year
            w.writerow([f"{year + (month - 0.5) / 12:.6f}", f"{month - 0.5:.1f}", f"{value:.4f}"])
            n += 1
    print(f"wrote {n} months to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
