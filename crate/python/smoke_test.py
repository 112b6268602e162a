"""Smoke test for the terranav_py extension.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, or copy
target/release/libterranav_py.so to terranav_py.so on PYTHONPATH.
"""
import json
import math
import pathlib
import tempfile

import terranav_py as tn

ROOT = pathlib.Path(__file__).resolve().parents[1]


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    # a ramp rising 0.2 per metre along x
    res = 0.25
    heights = [[0.2 * (c * res + res / 2) for c in range(80)] for _ in range(80)]
    world = tn.ElevationMap(heights, res)
    assert world.shape == (80, 80)
    dx, dy = world.gradient()
    assert close(dx[40][40], 0.2) and close(dy[40][40], 0.0)

    pose = tn.Pose2D(10.0, 10.0, 0.0)
    roll, pitch, rough = world.attitude(pose)
    assert close(pitch, math.atan(0.2), 1e-6) and close(roll, 0.0, 1e-6), (roll, pitch)

    win = world.window(pose, 40)
    assert win.shape == (40, 40)
    assert all(close(g, 0.2) for g in win.heading_gradient(10))

    channel = tn.elevation_channel(win)
    ones = tn.compose_costmap([[1.0] * 40 for _ in range(40)], win)
    assert ones.values() == channel
    zeros = tn.compose_costmap([[0.0] * 40 for _ in range(40)], win)
    assert all(v == 0.0 for row in zeros.values() for v in row)

    att = tn.reference_attention(win, 0.0)
    costmap = tn.compose_costmap(att, win)
    # the far end of the ramp is masked; a nearer goal is reachable
    cells, cost = costmap.least_cost_path((26, 20))
    assert cells[0] == (20, 20) and cells[-1] == (26, 20) and cost > 0.0

    flat = tn.CostMap([[0.0] * 41 for _ in range(41)], 0.25)
    out = tn.plan_velocity(flat, tn.Pose2D(0.0, 0.0, 0.0), (3.0, 0.0), v=0.5)
    assert out["status"] == "nominal" and out["omega"] == 0.0 and out["v"] > 0.5, out
    capped = tn.plan_velocity(flat, tn.Pose2D(0.0, 0.0, 0.0), (3.0, 0.0), v=0.5, vibration=(2.0, 1.0),
                              limits={"sigma_act": 0.5})
    assert capped["v"] < out["v"], capped
    try:
        tn.plan_velocity(flat, tn.Pose2D(0.0, 0.0, 0.0), (3.0, 0.0), limits={"warp": 1})
        raise AssertionError("unknown limit accepted")
    except ValueError:
        pass

    samples = [[0.4 * (1 if i % 2 else -1), 0, 0.3 * (1 if (i // 2) % 2 else -1), 0, 0, 0] for i in range(40)]
    s1, s2, mag = tn.pca_sigma(samples)
    k = math.sqrt(40 / 39)
    assert close(mag, 0.5 * k, 1e-12) and s1 >= s2

    assert tn.r_goal(3.5, 0.0) == (-3.5, -0.0)
    assert close(tn.r_elev([1.0], 1.0), -math.exp(-1))
    assert tn.r_vibration(0.4, 0.3) == -0.5
    assert close(tn.r_stable(0.0, 0.0), 0.0)
    total = tn.r_total({"dist": -1.0, "head": -0.5, "stable": -0.2, "elev": -0.1, "vibr": -0.3},
                       {"beta_dist": 1, "beta_head": 1, "beta_stable": 1, "beta_elev": 1, "beta_vibr": 1})
    assert close(total, -2.1, 1e-12)

    m = tn.run_batch(str(ROOT / "scenarios" / "flat.json"), "ours_full", 2, 0)
    assert m["success_rate"] == 1.0 and close(m["norm_traj_length"], 1.0, 0.05), m

    with tempfile.NamedTemporaryFile("w", suffix=".json") as f:
        json.dump({"name": "x", "world": {"kind": "flat", "width": 8, "height": 8, "resolution": 0.25}, "bogus": 1}, f)
        f.flush()
        try:
            tn.run_batch(f.name, "ours_full", 1, 0)
            raise AssertionError("bad scenario accepted")
        except ValueError as e:
            assert "bogus" in str(e)

    print("terranav_py smoke test: ok")


if __name__ == "__main__":
    main()
