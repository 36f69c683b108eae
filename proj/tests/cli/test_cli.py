import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("ARTTRACK_CLI", "arttrack")


def run(*args, check=True, cwd=None):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def summary(proc):
    lines = proc.stderr.strip().splitlines()
    assert len(lines) == 1, proc.stderr
    return json.loads(lines[0])


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    train = []
    for seed in (100, 101, 102):
        d = root / f"train{seed}"
        run("--seed", seed, "synth-generate", "--out-dir", d, "--sigma", 4, "--miss-rate", 0.1, "--clutter-rate", 0.1)
        train.append(d)
    for feats in ("l2", "l2,sift,dm"):
        run("--features", feats, "train-pairwise", "--scenes", *train, "--out", root / f"models_{feats}.jsonl")
    run("synth-generate", "--out-dir", root / "clean")
    return root


def test_zero_noise_track_then_mota(work):
    for model in ("bu-full", "bu-sparse", "tdbu"):
        tracks = work / f"tracks_{model}.jsonl"
        proc = run("--model", model, "track", "--scene", work / "clean", "--models", work / "models_l2,sift,dm.jsonl",
                   "--out", tracks)
        s = summary(proc)
        assert s["exit_code"] == 0 and s["model"] == model
        assert {"load", "seed", "build", "solve", "graph", "total"} <= set(s["timings_ms"])
        report = json.loads(run("eval-mota", "--tracks", tracks, "--gt", work / "clean" / "groundtruth.jsonl").stdout)
        assert report["average"]["mota"] == 1.0
        assert all(p["mota"] == 1.0 for p in report["parts"])
        ap = json.loads(run("eval-ap", "--tracks", tracks, "--gt", work / "clean" / "groundtruth.jsonl").stdout)
        assert ap["mean_ap"] == 1.0
        hung = json.loads(run("--hungarian", "eval-mota", "--tracks", tracks,
                              "--gt", work / "clean" / "groundtruth.jsonl").stdout)
        assert hung["matching"] == "hungarian" and hung["average"]["mota"] == 1.0


def test_feature_ablation_ordering(work):
    means = {}
    for feats in ("l2", "l2,sift,dm"):
        values = []
        for seed in range(10):
            scene = work / f"noisy{seed}"
            if not scene.exists():
                run("--seed", seed, "synth-generate", "--out-dir", scene, "--sigma", 4, "--miss-rate", 0.1,
                    "--clutter-rate", 0.1)
            out = work / f"ablation_{feats}_{seed}.jsonl"
            run("--features", feats, "track", "--scene", scene, "--models", work / f"models_{feats}.jsonl",
                "--out", out)
            rep = json.loads(run("eval-mota", "--tracks", out, "--gt", scene / "groundtruth.jsonl").stdout)
            values.append(rep["average"]["mota"])
        means[feats] = sum(values) / len(values)
    assert means["l2,sift,dm"] >= means["l2"]


def test_oracle_check_reports_the_gap(tmp_path):
    graph = tmp_path / "g.jsonl"
    lines = [{"format": "arttrack.graph", "version": 1, "parts": ["a", "b"]}]
    for i, cost in enumerate([-1.0, -1.0, -1.5, 0.5]):
        lines.append({"type": "node", "node": i, "frame": 0, "part": "ab"[i % 2], "x": i, "y": 0,
                      "score": 0.7, "cost": cost})
    lines += [{"type": "edge", "u": 0, "v": 1, "kind": "cross_type", "cost": -1.0},
              {"type": "edge", "u": 1, "v": 2, "kind": "cross_type", "cost": -0.5},
              {"type": "edge", "u": 2, "v": 3, "kind": "cross_type", "cost": -2.0},
              {"type": "edge", "u": 0, "v": 2, "kind": "same_type", "cost": 3.0}]
    graph.write_text("".join(json.dumps(r) + "\n" for r in lines))
    report = json.loads(run("oracle-check", "--graph", graph).stdout)
    assert report["gap"] == pytest.approx(0.0, abs=1e-9)
    assert report["optimal"] and report["local_feasible"]
    assert report["exact_objective"] == pytest.approx(-6.0)

    sol = tmp_path / "sol.jsonl"
    s = summary(run("solve", "--graph", graph, "--exact", "--out", sol))
    assert s["objective"] == pytest.approx(report["exact_objective"])
    assert sol.read_text().splitlines()[0].startswith('{"format":"arttrack.solution"')


def test_build_graph_and_solve(work, tmp_path):
    graph = tmp_path / "g.jsonl"
    s = summary(run("--model", "tdbu", "build-graph", "--scene", work / "clean",
                    "--models", work / "models_l2,sift,dm.jsonl", "--out", graph))
    assert s["nodes"] == 3 * 21 * 14 and s["must_cut"] == 3 * 21
    s = summary(run("--seed", 5, "solve", "--graph", graph, "--out", tmp_path / "sol.jsonl"))
    assert s["seed"] == 5 and s["objective"] < 0


def test_outputs_are_deterministic(work, tmp_path):
    def outputs(tag):
        d = tmp_path / tag
        run("--seed", 7, "synth-generate", "--out-dir", d / "scene", "--sigma", 3, "--miss-rate", 0.1,
            "--clutter-rate", 0.1)
        run("train-pairwise", "--scenes", d / "scene", "--out", d / "models.jsonl")
        run("--model", "tdbu", "track", "--scene", d / "scene", "--models", d / "models.jsonl",
            "--out", d / "tracks.jsonl")
        run("build-graph", "--scene", d / "scene", "--models", d / "models.jsonl", "--out", d / "graph.jsonl")
        run("solve", "--graph", d / "graph.jsonl", "--out", d / "sol.jsonl")
        run("eval-mota", "--tracks", d / "tracks.jsonl", "--gt", d / "scene" / "groundtruth.jsonl",
            "--out", d / "mota.json")
        run("eval-ap", "--tracks", d / "tracks.jsonl", "--gt", d / "scene" / "groundtruth.jsonl",
            "--out", d / "ap.json")
        run("export-overlay", "--tracks", d / "tracks.jsonl", "--out", d / "overlay.jsonl")
        return {p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}

    a, b = outputs("a"), outputs("b")
    assert len(a) == 12
    assert a == b


def test_exit_codes_and_diagnostics(work, tmp_path):
    assert run("frobnicate", check=False).returncode == 1
    assert run(check=False).returncode == 1
    assert run("--model", "nope", "solve", "--graph", "x", "--out", "y", check=False).returncode == 1

    missing = run("solve", "--graph", tmp_path / "missing.jsonl", "--out", tmp_path / "o", check=False)
    assert missing.returncode == 2
    assert len(missing.stderr.strip().splitlines()) == 1
    assert missing.stderr.startswith("arttrack: error:")

    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"format":"arttrack.detections","version":1,"parts":["a"]}\n'
                   '{"frame":0,"part":"b","x":0,"y":0,"score":0.5}\n')
    proc = run("build-graph", "--detections", bad, "--models", work / "models_l2.jsonl", "--out", tmp_path / "g",
               check=False)
    assert proc.returncode == 2 and ":2:" in proc.stderr

    inf = tmp_path / "inf.jsonl"
    recs = [{"format": "arttrack.graph", "version": 1, "parts": ["a"]}]
    recs += [{"type": "node", "node": i, "frame": 0, "part": "a", "x": i, "y": 0, "score": 0.5, "cost": -1}
             for i in range(3)]
    recs += [{"type": "edge", "u": 0, "v": 1, "kind": "same_type", "cost": 1},
             {"type": "edge", "u": 1, "v": 2, "kind": "same_type", "cost": 1},
             {"type": "must_link", "u": 0, "v": 1}, {"type": "must_link", "u": 1, "v": 2},
             {"type": "must_cut", "u": 0, "v": 2}]
    inf.write_text("".join(json.dumps(r) + "\n" for r in recs))
    summary_file = tmp_path / "summary.json"
    proc = run("--summary", summary_file, "solve", "--graph", inf, "--out", tmp_path / "o", check=False)
    assert proc.returncode == 3
    s = json.loads(summary_file.read_text())
    assert s["exit_code"] == 3 and "must_link" in s["error"]

    cfg = tmp_path / "c.json"
    cfg.write_text('{"tracking": {"windw": 3}}')
    assert run("--config", cfg, "solve", "--graph", inf, "--out", tmp_path / "o", check=False).returncode == 1
    assert run("--features", "l2,hog", "solve", "--graph", inf, "--out", tmp_path / "o",
               check=False).returncode == 1
    too_big = run("solve", "--exact", "--graph", tmp_path / "a" / "graph.jsonl", "--out", tmp_path / "o",
                  check=False) if (tmp_path / "a").exists() else None
    assert too_big is None or too_big.returncode == 1


def test_config_file_is_applied(work, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synth": {"persons": 2, "frames": 5}, "tracking": {"window": 3, "overlap": 1}}))
    run("--config", cfg, "synth-generate", "--out-dir", tmp_path / "s", "--frames", 6)
    gt = (tmp_path / "s" / "groundtruth.jsonl").read_text().splitlines()
    assert json.loads(gt[0])["frames"] == 6
    assert len(gt) == 1 + 2 * 6
    s = summary(run("--config", cfg, "track", "--scene", tmp_path / "s", "--models", work / "models_l2,sift,dm.jsonl",
                    "--out", tmp_path / "t.jsonl"))
    assert s["windows"] == 3
