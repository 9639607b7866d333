import json
import os
import pathlib

import numpy as np
import pytest

import loosectl as lc

DATA = pathlib.Path(os.environ.get("LC_TEST_DATA_DIR", pathlib.Path(__file__).parents[2] / "tests" / "data"))


def fixture():
    return json.loads((DATA / "minimal_scene.json").read_text())


def test_intrinsics():
    cam = lc.intrinsics_from_fov(60.0, 64, 48)
    assert cam.width == 64 and cam.height == 48
    assert cam.horizontal_fov_deg == pytest.approx(60.0)
    assert cam.fx == pytest.approx(32.0 / np.tan(np.radians(30.0)))
    with pytest.raises(ValueError):
        lc.CameraIntrinsics(0, 48, 1.0, 1.0, 0.0, 0.0)


def test_render_and_round_trip():
    depth = lc.render_scene(fixture())
    assert depth.dtype == np.float32
    assert depth.ndim == 2
    assert np.all(np.isfinite(depth))
    assert np.count_nonzero(depth) > 0
    scene, notes = lc.canonical_scene(fixture())
    assert notes == []
    assert np.array_equal(lc.render_scene(scene), depth)


def test_invalid_scene():
    doc = fixture()
    doc["footprint"] = [[0, 0], [2, 2], [2, 0], [0, 2]]
    with pytest.raises(lc.ValidationError, match="/footprint"):
        lc.render_scene(doc)


def test_boundary_proxy_bounds_its_input():
    room = fixture()
    room["include_ceiling"] = True
    depth = lc.render_scene(room)
    cond, scene = lc.boundary_proxy(depth, room["camera"]["fov_deg"], include_ceiling=True)
    assert cond.shape == depth.shape
    assert "footprint" in scene
    report, violation = lc.check_boundary(depth, cond)
    assert report["passed"]
    assert violation.shape == depth.shape
    bad, _ = lc.check_boundary(cond + 1.0, cond)
    assert not bad["passed"]
    assert lc.check_exact(cond, cond)["passed"]


@pytest.mark.parametrize("fmt", ["pfm", "png16", "png8inv"])
def test_codec_round_trip(fmt):
    depth = lc.render_scene(fixture())
    h, w = depth.shape
    cam = lc.intrinsics_from_fov(55.0, w, h)
    data = lc.encode_depth(depth, cam, fmt)
    assert isinstance(data, bytes)
    decoded, name, embedded = lc.decode_depth(data)
    assert name == fmt
    assert decoded.shape == depth.shape
    if fmt == "pfm":
        assert np.array_equal(decoded, depth)
    else:
        assert embedded == cam
    with pytest.raises(lc.DecodeError):
        lc.decode_depth(data[:10])


def test_box_fit_and_proxy():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(2000, 3)) * [0.8, 0.4, 0.3]
    yaw = 0.3
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    box = lc.fit_min_obb_yaw(pts @ rot.T + [0.0, -1.0, 4.0])
    assert box["center"] == pytest.approx([0.0, -1.0, 4.0], abs=0.05)
    assert sorted(box["half_extents"]) == pytest.approx(sorted([0.8, 0.4, 0.3]), abs=0.05)

    cam = lc.intrinsics_from_fov(60.0, 32, 24)
    depth = np.full((24, 32), 3.0, dtype=np.float32)
    seg = np.zeros((24, 32), dtype=np.uint32)
    seg[6:18, 8:24] = 1
    cond, doc = lc.box_proxy(depth, seg, cam, min_area=50)
    assert cond.shape == depth.shape
    assert len(doc["boxes"]) + len(doc["skipped"]) >= 1


def test_edit_numerics():
    rng = np.random.default_rng(4)
    W = rng.normal(size=(5, 4))
    A = rng.normal(size=(2, 4))
    B = rng.normal(size=(5, 2))
    x = rng.normal(size=4)
    y = lc.lora_forward(W, A, B, 0.5, x)
    assert y == pytest.approx(W @ x + 0.5 * B @ (A @ x))

    M = rng.normal(size=(6, 4))
    J = lc.jacobian_fd(lambda v: M @ v, x)
    assert np.allclose(J, M, atol=1e-6)

    dirs, sigmas, xdirs = lc.top_directions(M, 3)
    assert dirs.shape == (6, 3) and xdirs.shape == (4, 3)
    assert sigmas == pytest.approx(np.linalg.svd(M, compute_uv=False)[:3])
    assert np.allclose(np.linalg.norm(dirs, axis=0), 1.0)


def test_cli_entry():
    code, out, err = lc.run_cli(["--help"])
    assert code == 0 and "render" in out
    code, _, err = lc.run_cli(["render", "--bogus"])
    assert code == 2 and err.startswith("error:")


def test_canonical_scenes_match_the_published_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((pathlib.Path(__file__).parents[2] / "docs" / "scene.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    room = fixture()
    room["boxes"] = [{"center": [0, -1, 3], "half_extents": [0.5, 0.5, 0.3], "yaw_deg": 200, "label": "bed"}]
    scene, notes = lc.canonical_scene(room)
    assert len(notes) == 1
    jsonschema.validate(room, schema)
    jsonschema.validate(scene, schema)
    depth = lc.render_scene(dict(room, include_ceiling=True))
    _, proxy_scene = lc.boundary_proxy(depth, room["camera"]["fov_deg"], include_ceiling=True)
    jsonschema.validate(proxy_scene, schema)
    bad = dict(room, extra=1)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, schema)
