#!/usr/bin/env python3
"""Convert the Statlog Landsat Satellite data into the CSV layout used here.

The UCI archive is the canonical source. When it is not reachable, the copy
bundled in the `keel_ds` wheel (KEEL "satimage", identical rows) is used.
Columns are named x.1 .. x.36 plus `classes`, the layout of R's mlbench
`Satellite` data frame.

    python3 scripts/fetch_landsat.py data/landsat.csv
"""

import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

UCI_URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/satimage/sat.trn",
    "https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/satimage/sat.tst",
]
KEEL_MEMBER = "keel_ds/data/balanced/raw/satimage.dat"


def from_uci():
    rows = []
    for url in UCI_URLS:
        with urllib.request.urlopen(url, timeout=20) as resp:
            for line in resp.read().decode().splitlines():
                if line.strip():
                    rows.append(line.split())
    return rows


def from_keel():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "keel_ds"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("keel_ds-*.whl"))
        text = zipfile.ZipFile(wheel).read(KEEL_MEMBER).decode()
    rows = []
    for line in text.splitlines():
        if line.strip() and not line.startswith("@"):
            rows.append([cell.strip() for cell in line.split(",")])
    return rows


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/landsat.csv")
    try:
        rows = from_uci()
    except Exception as err:  # noqa: BLE001
        print(f"UCI unavailable ({err}); using keel_ds copy", file=sys.stderr)
        rows = from_keel()
    if len(rows) != 6435 or any(len(r) != 37 for r in rows):
        sys.exit(f"unexpected shape: {len(rows)} rows")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x.{i}" for i in range(1, 37)] + ["classes"])
    writer.writerows(rows)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(buf.getvalue())
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
