# Copyright 2026 The vfdebug Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the Diabetes and BreastCancer datasets bundled with scikit-learn as
headed CSV files the harness can ingest.

Diabetes keeps the raw (unscaled) features and the continuous target; the
harness thresholds it. BreastCancer feature names have spaces replaced by
underscores so they are valid query column names.
"""

import argparse
import csv
import pathlib
import sys


def _write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if not float(v).is_integer()
                        else str(int(v)) for v in row])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data",
                        help="directory receiving the CSV files")
    parser.add_argument("--dataset", choices=["diabetes", "breast_cancer",
                                              "all"], default="all")
    parser.add_argument("--optional", action="store_true",
                        help="exit 0 without output when scikit-learn is "
                        "not installed")
    args = parser.parse_args(argv)
    try:
        from sklearn import datasets
    except ImportError:
        print("scikit-learn is required", file=sys.stderr)
        return 0 if args.optional else 2
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.dataset in ("diabetes", "all"):
        d = datasets.load_diabetes(scaled=False)
        header = [str(n) for n in d.feature_names] + ["target"]
        rows = [list(x) + [t] for x, t in zip(d.data, d.target)]
        _write(out / "diabetes.csv", header, rows)
        print(out / "diabetes.csv")
    if args.dataset in ("breast_cancer", "all"):
        b = datasets.load_breast_cancer()
        header = [str(n).replace(" ", "_") for n in b.feature_names]
        header.append("target")
        rows = [list(x) + [t] for x, t in zip(b.data, b.target)]
        _write(out / "breast_cancer.csv", header, rows)
        print(out / "breast_cancer.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
