"""Writes crashes_synthetic.csv: a synthetic stand-in for the public aviation
accident table (same Date column format, MM/DD/YYYY, 1908-2009).

Yearly counts follow a logistic rise to a plateau near 1970, a gentle decline
after 1975 and a mild 8-year cycle,
drawn from a Poisson distribution; dates are uniform within each year.
"""

import csv
import datetime as dt
import math
import pathlib

import numpy as np

rng = np.random.default_rng(1908)
rows = []
for year in range(1908, 2010):
    level = 90.0 / (1.0 + math.exp(-(year - 1945) / 8.0))
    decline = 1.0 - 0.4 * max(0.0, (year - 1975) / 35.0)
    rate = level * decline + 6.0 * math.sin(2 * math.pi * year / 8.0)
    for _ in range(rng.poisson(max(rate, 0.5))):
        first = dt.date(year, 1, 1).toordinal()
        last = dt.date(year, 12, 31).toordinal()
        day = dt.date.fromordinal(int(rng.integers(first, last + 1)))
        rows.append((day, int(rng.integers(0, 200))))
rows.sort()

out = pathlib.Path(__file__).with_name("crashes_synthetic.csv")
with out.open("w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["Date", "Location", "Fatalities"])
    for day, fatalities in rows:
        w.writerow([day.strftime("%m/%d/%Y"), "synthetic", fatalities])
print(f"{len(rows)} rows -> {out}")
