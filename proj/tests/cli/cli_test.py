# Copyright 2026 The askcap Authors
# SPDX-License-Identifier: Apache-2.0
"""Command-line checks for the askcap tool."""

import json
import pathlib
import socket
import subprocess
import sys
import tempfile
import time
import unittest

ASKCAP = None
TINY = None


def run(*args, timeout=300):
    return subprocess.run([ASKCAP, *map(str, args)], capture_output=True, text=True, timeout=timeout)


class GenWorld(unittest.TestCase):
    def test_rerun_is_byte_identical(self):
        with tempfile.TemporaryDirectory() as tmp:
            a, b = pathlib.Path(tmp, "a"), pathlib.Path(tmp, "b")
            for out in (a, b):
                r = run("gen-world", "--scenes", 50, "--seed", 7, "--out", out)
                self.assertEqual(r.returncode, 0, r.stderr)
            for name in ("corpus.jsonl", "vocab.tsv"):
                self.assertEqual((a / name).read_bytes(), (b / name).read_bytes())
            records = [json.loads(l) for l in (a / "corpus.jsonl").read_text().splitlines()]
            self.assertEqual(sum("scene" in r for r in records), 50)
            self.assertEqual(sum("caption" in r for r in records), 250)

    def test_missing_out_is_usage_error(self):
        self.assertEqual(run("gen-world", "--scenes", 5).returncode, 2)

    def test_bad_world_config_is_config_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(run("gen-world", "--scenes", 0, "--out", tmp).returncode, 2)


class Score(unittest.TestCase):
    def test_identical_pair_prints_one(self):
        r = run("score", "--candidate", "a dog runs", "--refs", "a dog runs", "--metric", "bleu1")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(float(r.stdout.strip()), 1.0)

    def test_mix_with_weight_file_is_weighted_sum(self):
        refs = ["a red dog runs left", "the dog runs"]
        everything = run("score", "--candidate", "a dog runs left", "--refs", *refs, "--metric", "all")
        values = dict(kv.split("=") for kv in everything.stdout.split())
        weights = {"bleu2": 3.0, "rouge": 2.0, "meteor": 0.5}
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump(weights, f)
        mix = run("score", "--candidate", "a dog runs left", "--refs", *refs, "--metric", "mix",
                  "--weights", f.name)
        self.assertEqual(mix.returncode, 0, mix.stderr)
        expected = sum(w * float(values[k]) for k, w in weights.items())
        self.assertAlmostEqual(float(mix.stdout.strip()), expected, places=9)

    def test_thousand_pair_batch_under_five_seconds(self):
        words = ["a", "dog", "cat", "runs", "sits", "red", "big", "left", "two"]
        with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False) as f:
            for i in range(1000):
                cand = " ".join(words[(i + k) % len(words)] for k in range(2 + i % 5))
                refs = [" ".join(words[(i * j + k) % len(words)] for k in range(3 + j)) for j in range(1, 6)]
                f.write(json.dumps({"candidate": cand, "refs": refs}) + "\n")
        start = time.monotonic()
        r = run("score", "--batch", f.name, "--metric", "mix")
        elapsed = time.monotonic() - start
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(len(r.stdout.splitlines()), 1000)
        self.assertLess(elapsed, 5.0)

    def test_unknown_metric_is_usage_error(self):
        self.assertEqual(run("score", "--candidate", "a", "--refs", "a", "--metric", "spice").returncode, 2)


class Report(unittest.TestCase):
    def test_empty_trace_dir_gives_header_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            r = run("report", "--traces", pathlib.Path(tmp, "none"), "--out", tmp)
            self.assertEqual(r.returncode, 0, r.stderr)
            lines = pathlib.Path(tmp, "summary.csv").read_text().splitlines()
            self.assertEqual(len(lines), 1)
            self.assertTrue(lines[0].startswith("mode,round,runs,mix_median"))


class Run(unittest.TestCase):
    def test_seed_range_mute_mode_and_resume(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = pathlib.Path(tmp, "runs")
            r = run("run", "--config", TINY, "--mode", "mute", "--seed", "1..2", "--out", out)
            self.assertEqual(r.returncode, 0, r.stderr)
            for seed in (1, 2):
                rows = (out / f"seed_{seed}" / "results.csv").read_text().splitlines()
                self.assertEqual(len(rows), 4)
                manifest = json.loads((out / f"seed_{seed}" / "manifest.json").read_text())
                self.assertEqual(manifest["config"]["mode"], "mute")
            for line in (out / "seed_1" / "traces" / "round_1.jsonl").read_text().splitlines():
                record = json.loads(line)
                if record["type"] == "interaction":
                    self.assertEqual(record["asks"], [])
            passes = {json.loads(l)["pass"] for l in (out / "seed_1" / "traces" / "round_1.jsonl").read_text().splitlines()
                      if json.loads(l)["type"] == "interaction"}
            self.assertEqual(passes, {0, 1})

            full, cut = pathlib.Path(tmp, "full"), pathlib.Path(tmp, "cut")
            self.assertEqual(run("run", "--config", TINY, "--seed", 4, "--out", full).returncode, 0)
            self.assertEqual(run("run", "--config", TINY, "--seed", 4, "--out", cut, "--stop-after", 1).returncode, 0)
            self.assertEqual(run("run", "--config", TINY, "--seed", 4, "--out", cut, "--resume").returncode, 0)
            self.assertEqual((full / "results.csv").read_bytes(), (cut / "results.csv").read_bytes())

    def test_config_errors_exit_two(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = pathlib.Path(tmp, "bad.yaml")
            bad.write_text("chunks: -3\n")
            self.assertEqual(run("run", "--config", bad, "--out", tmp).returncode, 2)
            self.assertEqual(run("run", "--config", pathlib.Path(tmp, "none.yaml"), "--out", tmp).returncode, 2)
            self.assertEqual(run("run", "--config", TINY, "--mode", "loud", "--out", tmp).returncode, 2)

    def test_busy_port_fails(self):
        with socket.socket() as s, tempfile.TemporaryDirectory() as tmp:
            s.bind(("127.0.0.1", 0))
            s.listen(1)
            port = s.getsockname()[1]
            r = run("run", "--config", TINY, "--serve-teacher", f"127.0.0.1:{port}", "--out", tmp,
                    "--teacher-timeout", 1, timeout=60)
            self.assertNotEqual(r.returncode, 0)
            self.assertIn("bind", r.stderr)


if __name__ == "__main__":
    ASKCAP, TINY = sys.argv[1], sys.argv[2]
    unittest.main(argv=sys.argv[:1], verbosity=2)
