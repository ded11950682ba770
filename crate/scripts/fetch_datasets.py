#!/usr/bin/env python3
"""Download and normalize the UCI datasets used by the benchmark harness.

`data/wdbc.csv` ships with the repository; this script fetches the larger
sets on demand and rewrites them as plain numeric CSVs that `cefs` can load
directly (comma-separated, header row, '.' decimals, missing cells left as
'?' so the loader drops those rows).

Per-dataset column handling is spelled out below rather than guessed at run
time; edit the TRANSFORMS if you need a different encoding.

  wdbc            id column dropped; diagnosis M -> 1, B -> 0 (shipped file,
                  listed here for reference only).
  advertisements  3 leading geometry columns kept (missing values stay '?'),
                  1555 binary token columns kept, label ad. -> 1, nonad. -> 0.
  blog_feedback   train = blogData_train.csv; test = the first test file
                  (blogData_test-2012.02.01.00_00.csv). 280 numeric columns
                  and the comment-count label pass through unchanged.
  connect4        board cells x -> 1, o -> 2, b -> 3; outcome win -> 1,
                  loss -> 0, draw -> 2.
  forest_fires    month -> 1..12, day -> 1..7 (mon..sun); burned area kept
                  as the real-valued label.
  gesture_phase   processed files a1_va3..c3_va3 concatenated; 32 numeric
                  feature columns; phase label Rest -> 1, Preparation -> 2,
                  Stroke -> 3, Hold -> 4, Retraction -> 5.

Usage:
  python3 scripts/fetch_datasets.py [--out data] [dataset ...]
"""

import argparse
import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

MONTHS = "jan feb mar apr may jun jul aug sep oct nov dec".split()
DAYS = "mon tue wed thu fri sat sun".split()


def fetch(url: str) -> bytes:
    print(f"  fetching {url}")
    with urllib.request.urlopen(url) as response:
        return response.read()


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"  wrote {path} ({len(rows)} rows)")


def advertisements(out: Path):
    raw = fetch(f"{UCI}/internet_ads/ad.data").decode("utf-8")
    rows = []
    for line in raw.splitlines():
        cells = [c.strip() for c in line.split(",")]
        if len(cells) < 1559:
            continue
        label = "1" if cells[-1] == "ad." else "0"
        rows.append(cells[:-1] + [label])
    header = [f"f{i}" for i in range(1558)] + ["ad"]
    write_csv(out / "advertisements.csv", header, rows)


def blog_feedback(out: Path):
    blob = fetch(f"{UCI}/00304/BlogFeedback.zip")
    archive = zipfile.ZipFile(io.BytesIO(blob))
    header = [f"f{i}" for i in range(280)] + ["comments"]
    for name, dest in [
        ("blogData_train.csv", "blog_feedback_train.csv"),
        ("blogData_test-2012.02.01.00_00.csv", "blog_feedback_test.csv"),
    ]:
        rows = list(csv.reader(io.TextIOWrapper(archive.open(name))))
        write_csv(out / dest, header, rows)


def connect4(out: Path):
    blob = fetch(f"{UCI}/connect-4/connect-4.data.Z")
    try:
        import unlzw3

        raw = unlzw3.unlzw(blob).decode("utf-8")
    except ImportError:
        sys.exit("connect4 needs the 'unlzw3' package: pip install unlzw3")
    cell = {"x": "1", "o": "2", "b": "3"}
    outcome = {"win": "1", "loss": "0", "draw": "2"}
    rows = []
    for line in raw.splitlines():
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 43:
            continue
        rows.append([cell[c] for c in cells[:-1]] + [outcome[cells[-1]]])
    header = [f"pos{i}" for i in range(42)] + ["result"]
    write_csv(out / "connect4.csv", header, rows)


def forest_fires(out: Path):
    raw = fetch(f"{UCI}/forest-fires/forestfires.csv").decode("utf-8")
    reader = csv.reader(io.StringIO(raw))
    header = next(reader)
    rows = []
    for cells in reader:
        cells[2] = str(MONTHS.index(cells[2]) + 1)
        cells[3] = str(DAYS.index(cells[3]) + 1)
        rows.append(cells)
    write_csv(out / "forest_fires.csv", header, rows)


def gesture_phase(out: Path):
    blob = fetch(f"{UCI}/00302/gesture_phase_dataset.zip")
    archive = zipfile.ZipFile(io.BytesIO(blob))
    phase = {
        "Rest": "1",
        "Preparation": "2",
        "Stroke": "3",
        "Hold": "4",
        "Retraction": "5",
    }
    rows = []
    header = None
    for name in sorted(archive.namelist()):
        if not name.endswith("_va3.csv"):
            continue
        reader = csv.reader(io.TextIOWrapper(archive.open(name)))
        file_header = next(reader)
        if header is None:
            header = [h.strip() or f"f{i}" for i, h in enumerate(file_header)]
            header[-1] = "phase"
        for cells in reader:
            if not cells:
                continue
            cells[-1] = phase[cells[-1].strip()]
            rows.append(cells)
    write_csv(out / "gesture_phase.csv", header, rows)


DATASETS = {
    "advertisements": advertisements,
    "blog_feedback": blog_feedback,
    "connect4": connect4,
    "forest_fires": forest_fires,
    "gesture_phase": gesture_phase,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", type=Path)
    parser.add_argument("datasets", nargs="*", default=list(DATASETS))
    args = parser.parse_args()
    for name in args.datasets:
        if name not in DATASETS:
            sys.exit(f"unknown dataset {name!r}; known: {', '.join(DATASETS)}")
        print(f"{name}:")
        DATASETS[name](args.out)


if __name__ == "__main__":
    main()
