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
"""Smoke test of every vfdebug subcommand on a small planted dataset.

Usage: cli_smoke_test.py <path to vfdebug binary>
"""

import csv
import json
import pathlib
import subprocess
import sys
import tempfile


def run(binary, *args, expect=0):
    proc = subprocess.run([binary, *args], capture_output=True, text=True)
    ok = proc.returncode != 0 if expect == "nonzero" else (
        proc.returncode == expect)
    if not ok:
        raise AssertionError(
            f"{' '.join(args)}: exit {proc.returncode}, expected {expect}\n"
            f"stdout: {proc.stdout}\nstderr: {proc.stderr}")
    return proc.stdout


def main():
    binary = sys.argv[1]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        cfg_path = tmp / "cfg.json"
        run(binary, "default-config", "-o", str(cfg_path))
        cfg = json.loads(cfg_path.read_text())
        assert cfg["train"]["rounds"] == 1000
        assert cfg["debug"]["step"] == 10
        cfg["dataset"]["source"] = "planted"
        cfg["synthetic"]["planted"].update(
            n_train=60, n_infer=40, n_holdout=40, flips=6)
        cfg["train"]["rounds"] = 200
        cfg["debug"].update(step=2, retrain_rounds=20)
        cfg["session"]["key_bits"] = 256
        cfg_path.write_text(json.dumps(cfg))
        cfg_arg = ["-c", str(cfg_path)]

        keys = tmp / "keys"
        run(binary, "gen-keys", "--bits", "256", "-o", str(keys))
        for name in ("party_a.key.json", "party_b.key.json",
                     "party_a.pub.json", "party_b.pub.json"):
            assert (keys / name).exists(), name

        run_dir = tmp / "run"
        run(binary, "train", *cfg_arg, "-o", str(run_dir))
        model = json.loads((run_dir / "model.json").read_text())
        assert model["model"]["kind"] == "frog"
        assert (run_dir / "train_transcript.jsonl").exists()

        run(binary, "infer", *cfg_arg, "-m", str(run_dir / "model.json"),
            "-o", str(run_dir))
        with open(run_dir / "predictions.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 40

        q = json.loads(run(binary, "query", *cfg_arg, "-p",
                           str(run_dir / "predictions.csv")))
        assert q["value"] == sum(int(r["label"]) for r in rows)

        run(binary, "debug", *cfg_arg, "-o", str(run_dir))
        dbg = json.loads((run_dir / "debug.json").read_text())
        assert len(dbg["deleted_ids"]) == 6

        reports = []
        for name in ("eval1", "eval2"):
            out = tmp / name
            run(binary, "eval", *cfg_arg, "-o", str(out))
            for f in ("report.json", "timing.json", "recall.csv",
                      "transcript.jsonl"):
                assert (out / f).exists(), f
            reports.append((out / "report.json").read_bytes())
        assert reports[0] == reports[1], "eval reports differ"
        report = json.loads(reports[0])
        curve = report["recall_curve"]
        assert len(curve) == report["budget"]
        assert curve == sorted(curve)
        assert "wall_seconds" not in reports[0].decode()

        transcript = tmp / "eval1" / "transcript.jsonl"
        verdict = json.loads(run(binary, "audit", str(transcript)))
        assert verdict["pass"] is True
        truncated = tmp / "truncated.jsonl"
        lines = transcript.read_text().splitlines()
        truncated.write_text("\n".join(lines[:-1]) + "\n")
        run(binary, "audit", str(truncated), expect=3)

        cmp_dir = tmp / "cmp"
        out = run(binary, "compare", *cfg_arg, "-o", str(cmp_dir),
                  "--frameworks", "frog,loss")
        assert out.splitlines()[1].startswith("frog,")
        header = (cmp_dir / "recall.csv").read_text().splitlines()[0]
        assert header == "k,frog,loss", header

        run(binary, "eval", "-d", str(tmp / "missing.csv"), "-o",
            str(tmp / "x"), expect=1)
        run(binary, "nonsense", expect="nonzero")
    print("cli smoke test passed")


if __name__ == "__main__":
    main()
