import json

import numpy as np
import pytest

from coneradon import io
from coneradon.cli import main
from coneradon.grids import VlineSinogram, vline_psi_grid


def test_phantom_then_forward_vline(tmp_path):
    f, g = tmp_path / "f.crtd", tmp_path / "g.crtd"
    assert main(["phantom", "--smiley", "-n", "201", "-o", str(f)]) == 0
    assert main(["forward-vline", "-i", str(f), "--nphi", "256", "--npsi", "201", "-o", str(g)]) == 0
    assert io.read(f).values.shape == (201, 201)
    assert io.read(g).data.shape == (256, 201)
    assert main(["render", "-i", str(g), "-o", str(tmp_path / "g.pgm")]) == 0
    assert (tmp_path / "g.pgm").read_bytes().startswith(b"P5\n201 256\n255\n")


def test_invert_vline_zero(tmp_path):
    zero = tmp_path / "zero.crtd"
    io.write(zero, VlineSinogram(np.zeros((32, 15)), vline_psi_grid(15)))
    for cmd in ("invert-vline", "invert-xray"):
        out = tmp_path / f"{cmd}.crtd"
        assert main([cmd, "-i", str(zero), "-o", str(out), "--nx", "33"]) == 0
        img = io.read(out)
        assert img.values.shape == (33, 33) and np.all(img.values == 0)


def test_exit_codes(tmp_path, capsys):
    assert main(["phantom", "--smiley", "--bogus", "-o", "x"]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["nosuch"]) == 2
    assert main(["phantom", "--smiley", "-n", "10", "-o", str(tmp_path / "x.crtd")]) == 2
    assert main(["invert-vline", "-i", str(tmp_path / "missing.crtd"), "-o", "y"]) == 3
    bad = tmp_path / "bad.crtd"
    bad.write_bytes(b"CRTD\x01\x00\x02\x00" + b"\x00" * 5)
    assert main(["render", "-i", str(bad), "-o", str(tmp_path / "b.pgm")]) == 3
    assert "offset" in capsys.readouterr().err
    img = tmp_path / "img.crtd"
    assert main(["phantom", "--disc", "0.5", "-n", "21", "-o", str(img)]) == 0
    assert main(["invert-vline", "-i", str(img), "-o", str(tmp_path / "y.crtd")]) == 2


def test_cone_pipeline_and_norms(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CRT_THREADS", "1")
    vol, cone, rec = (tmp_path / n for n in ("v.crtd", "c.crtd", "r.crtd"))
    assert main(["phantom", "--ball", "0.5", "--kind", "gaussian", "-n", "12", "-o", str(vol)]) == 0
    assert main(["forward-cone", "-i", str(vol), "-o", str(cone), "-k", "1", "--nphi", "8", "--nz", "12",
                 "--nbeta", "16", "--npsi", "16", "--zmax", "2", "--neta", "16", "--step", "0.0625"]) == 0
    c = io.read(cone)
    assert c.data.shape == (8, 12, 16, 16) and c.k_weight == 1
    assert main(["invert-cone", "-i", str(cone), "-o", str(rec), "--method", "radon", "-n", "8"]) == 0
    assert io.read(rec).values.shape == (8, 8, 8)
    assert main(["invert-cone", "-i", str(cone), "-o", str(rec), "--method", "vline", "-n", "9",
                 "--ngamma", "32"]) == 0
    assert io.read(rec).values.shape == (9, 9, 12)
    capsys.readouterr()
    assert main(["norms", "--volume", str(vol), "--cone", str(cone)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert {"sobolev_minus_1", "cone_norm", "cone_norm_1", "l2"} <= set(res)
    monkeypatch.setenv("CRT_THREADS", "-1")
    assert main(["norms", "--volume", str(vol), "--cone", str(cone)]) == 2


def test_deterministic_noise(tmp_path):
    f = tmp_path / "f.crtd"
    main(["phantom", "--gaussian2d", "0.2", "-n", "41", "-o", str(f)])
    outs = []
    for i in range(2):
        g = tmp_path / f"g{i}.crtd"
        assert main(["forward-xray", "-i", str(f), "--nphi", "16", "--npsi", "9", "--noise", "0.05",
                     "--seed", "3", "--step", "0.01", "-o", str(g)]) == 0
        outs.append(g.read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.slow
def test_reproduce_fig4(tmp_path):
    out = tmp_path / "fig4"
    assert main(["reproduce-fig4", "--outdir", str(out)]) == 0
    m = json.loads((out / "metrics.json").read_text())
    for name in ("vline_clean", "vline_noisy", "xray_clean", "xray_noisy"):
        assert (out / f"{name}.pgm").exists()
    assert m["vline_noisy_error"] >= m["vline_clean_error"]
    assert m["noisy_ge_clean"] is True
