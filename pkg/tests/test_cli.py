import json

import numpy as np
import pytest

from kcnat.cli import main
from kcnat.gsm import gsm_texture
from kcnat.image import load_raw_f32, save_pgm, save_raw_f32


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def noise_pgm(tmp_path):
    img = np.clip(np.random.default_rng(0).normal(0.5, 0.1, (256, 256)), 0, 1)
    path = tmp_path / "noise.pgm"
    save_pgm(path, img)
    return path


@pytest.fixture
def spec_file(tmp_path):
    def make(**extra):
        d = {"dimension": 8, "mixing": {"values": [0.5, 1.5], "probs": [0.5, 0.5]},
             "covariance": "identity", "noise_sigma2": 0.0}
        d.update(extra)
        p = tmp_path / f"spec{len(list(tmp_path.iterdir()))}.json"
        p.write_text(json.dumps(d))
        return p
    return make


def test_analyze_single_image(capsys, noise_pgm):
    code, out, _ = run(capsys, "analyze", noise_pgm)
    doc = json.loads(out)
    assert code == 0
    assert list(doc) == ["tool_version", "command", "inputs", "seed", "payload"]
    assert doc["payload"]["images"][0]["report"]["deviation"] < 0.2
    assert "summary" not in doc["payload"]


def test_analyze_directory_partial_failure(capsys, tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    r = np.random.default_rng(1)
    for i in range(99):
        save_pgm(d / f"img{i:03d}.pgm", r.random((32, 32)))
    (d / "img050_bad.pgm").write_bytes(b"P5\n32 32\n255\n\x00\x01")
    code, out, err = run(capsys, "analyze", d, "--csv", tmp_path / "s.csv",
                         "--boxplot-csv", tmp_path / "b.csv")
    doc = json.loads(out)
    assert code == 2
    assert doc["payload"]["summary"]["n_ok"] == 99
    assert doc["payload"]["failures"][0]["image_id"].endswith("img050_bad.pgm")
    assert "img050_bad.pgm" in err
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 100
    assert len((tmp_path / "s.csv").read_text().splitlines()) == 1 + 99 * 12


def test_analyze_total_failure_and_usage(capsys, tmp_path):
    assert run(capsys, "analyze")[0] == 1
    assert run(capsys, "analyze", tmp_path / "missing.pgm")[0] == 1
    assert run(capsys, "analyze", "--bank", "nope", tmp_path / "x.pgm")[0] == 1


def test_analyze_raw_and_filter_table(capsys, tmp_path):
    save_raw_f32(tmp_path / "a.f32", np.random.default_rng(2).random((16, 20)))
    s = 1 / np.sqrt(2)
    (tmp_path / "k.txt").write_text(f"myhaar {s} {s}\n")
    code, out, _ = run(capsys, "analyze", tmp_path / "a.f32", "--shape", "16x20",
                       "--filter-table", tmp_path / "k.txt", "--bank", "myhaar,db2",
                       "--include-ll")
    assert code == 0
    subs = json.loads(out)["payload"]["images"][0]["report"]["subbands"]
    assert [(e["kernel"], e["plane"]) for e in subs][:2] == [("myhaar", "LL"), ("myhaar", "LH")]
    assert len(subs) == 8


def test_verify_lemma1(capsys, spec_file):
    code, out, _ = run(capsys, "verify", "--lemma", 1, "--spec", spec_file(),
                       "--seed", 0, "--samples", 10 ** 6, "--tolerance", 0.05)
    assert code == 0
    assert json.loads(out)["payload"]["theory"] == 0.75


def test_verify_lemma2(capsys, spec_file):
    code, out, _ = run(capsys, "verify", "--lemma", 2, "--spec", spec_file(noise_sigma2=1.0),
                       "--seed", 0, "--tolerance", 0.1)
    assert code == 0
    assert json.loads(out)["payload"]["predicted"] == 0.1875


def test_verify_tolerance_failure(capsys, spec_file):
    code, _, _ = run(capsys, "verify", "--lemma", 1, "--spec", spec_file(), "--seed", 0,
                     "--samples", 1000, "--tolerance", 0.001)
    assert code == 3


def test_verify_configuration_errors(capsys, spec_file, tmp_path):
    cov = (np.eye(8) * 2).tolist()
    code, _, err = run(capsys, "verify", "--lemma", 2, "--spec",
                       spec_file(covariance=cov, noise_sigma2=1.0), "--seed", 0,
                       "--samples", 1000)
    assert code == 1 and "identity covariance" in err
    (tmp_path / "bad.json").write_text("{not json")
    assert run(capsys, "verify", "--lemma", 1, "--spec", tmp_path / "bad.json",
               "--seed", 0)[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["verify", "--lemma", "1", "--spec", str(spec_file())])
    assert info.value.code == 1


def test_noise_command(capsys, tmp_path):
    save_raw_f32(tmp_path / "n.f32", np.random.default_rng(3).normal(0, 0.1, (256, 256)))
    save_raw_f32(tmp_path / "z.f32", np.zeros((256, 256)))
    code, out, _ = run(capsys, "noise", tmp_path / "n.f32", tmp_path / "z.f32",
                       "--shape", "256x256")
    lines = [json.loads(l) for l in out.splitlines()]
    assert code == 0
    assert abs(lines[0]["payload"]["sigma"] - 0.1) < 0.005
    assert lines[1]["payload"]["sigma"] == 0
    assert run(capsys, "noise", tmp_path / "missing.pgm")[0] == 1


def test_denoise_command(capsys, tmp_path):
    clean = gsm_texture((64, 64), seed=0)
    noisy = clean + np.random.default_rng(4).normal(0, 0.1, clean.shape)
    save_raw_f32(tmp_path / "noisy.f32", noisy)
    save_raw_f32(tmp_path / "clean.f32", clean)
    code, out, _ = run(capsys, "denoise", tmp_path / "noisy.f32", "--shape", "64x64",
                       "-o", tmp_path / "out.f32", "--ground-truth", tmp_path / "clean.f32",
                       "--max-iters", 20)
    payload = json.loads(out)["payload"]
    assert code == 0
    assert payload["final_deviation"] <= payload["initial_deviation"]
    assert {"psnr_noisy", "psnr_final"} <= set(payload)
    assert (tmp_path / "out.f32.trace.csv").exists()


def test_denoise_zero_lambda(capsys, tmp_path):
    x = np.random.default_rng(5).random((32, 32)).astype(np.float32)
    save_raw_f32(tmp_path / "in.f32", x)
    code, _, _ = run(capsys, "denoise", tmp_path / "in.f32", "--shape", "32x32",
                     "-o", tmp_path / "out.f32", "--lambda-kc", 0, "--max-iters", 10)
    assert code == 0
    assert np.max(np.abs(load_raw_f32(tmp_path / "out.f32", 32, 32) - x)) < 1e-9


def test_denoise_divergence(capsys, tmp_path):
    save_raw_f32(tmp_path / "in.f32", np.random.default_rng(6).random((32, 32)))
    code, out, _ = run(capsys, "denoise", tmp_path / "in.f32", "--shape", "32x32",
                       "-o", tmp_path / "out.f32", "--trace", tmp_path / "t.csv",
                       "--step-size", 1e6)
    assert code == 4
    assert json.loads(out)["payload"]["status"] == "diverged"
    assert len((tmp_path / "t.csv").read_text().splitlines()) >= 2
    assert not (tmp_path / "out.f32").exists()


def test_loss_matches_analyze(capsys, noise_pgm, tmp_path):
    _, out_a, _ = run(capsys, "analyze", noise_pgm)
    code, out_l, _ = run(capsys, "loss", noise_pgm, "--dump-grad", tmp_path / "g.f32")
    assert code == 0
    assert (json.loads(out_l)["payload"]["loss"]
            == json.loads(out_a)["payload"]["images"][0]["report"]["deviation"])
    raw = np.fromfile(tmp_path / "g.f32", dtype="<f4")
    assert raw.size == 256 * 256 and np.all(np.isfinite(raw))


def test_loss_constant_image(capsys, tmp_path):
    save_pgm(tmp_path / "c.pgm", np.full((16, 16), 0.5))
    assert run(capsys, "loss", tmp_path / "c.pgm")[0] == 1
