import json

import numpy as np
import pytest

from pedcast.cli import DEFAULT_CONFIG, load_config, main
from pedcast.reporting import validate_report

TINY_CONFIG = """\
[dataset]
l = 4
l_prime = 4

[scenario]
dest_anchors = 10,0; 0,10
origin_anchors = -6,-6
priors = 0.8,0.2; 0.2,0.8; 0.8,0.2; 0.2,0.8
counts = 30, 30, 30, 30
noise_sigma = 0.4
samples_per_traj = 10

[cluster]
init_centroids = 10,0; 0,10
drop_same_origin_dest = false

[hyper]
epochs = 4
batch_size = 32
lr = 0.005
hidden = 8
embed_dim = 6
fuse_dim = 6
predictor_epochs = 4
predictor_batch_size = 64
predictor_hidden = 6

[run]
seed = 3
out_dir = {out_dir}
"""


@pytest.fixture
def tiny_run(tmp_path):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(TINY_CONFIG.format(out_dir=tmp_path / "run"))
    return tmp_path, cfg


def test_print_config_parses(capsys, tmp_path):
    assert main(["print-config"]) == 0
    text = capsys.readouterr().out
    p = tmp_path / "default.ini"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg.dataset.L == 10  # desk-scale demo default
    assert cfg.dataset.peak_windows[0] == (12 * 3600, 16 * 3600 + 59 * 60 + 59)


def test_default_config_matches_module_constant(capsys):
    main(["print-config"])
    assert capsys.readouterr().out == DEFAULT_CONFIG


def test_synth_deterministic(tiny_run):
    tmp, cfg = tiny_run
    a, b = tmp / "a.csv", tmp / "b.csv"
    assert main(["synth", "--config", str(cfg), "--output", str(a)]) == 0
    assert main(["synth", "--config", str(cfg), "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_input_exits_with_data_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(TINY_CONFIG.format(out_dir=tmp_path))
    code = main(["cluster", "--data", str(tmp_path / "nope.csv"),
                 "--config", str(cfg), "--output", str(tmp_path / "m.json")])
    assert code == 3
    assert "error" in capsys.readouterr().err


def test_bad_config_exits_with_config_code(tmp_path, capsys):
    cfg = tmp_path / "broken.ini"
    cfg.write_text("[dataset]\nl = -3\n")
    code = main(["synth", "--config", str(cfg), "--output", str(tmp_path / "x.csv")])
    assert code == 2


def test_sensor_ingest_fixture(tmp_path):
    # raw log layout: time, person_id, x, y, z, velocity, motion, facing
    raw = tmp_path / "sensor.csv"
    base = 1369196700.0  # falls on 2013-05-22 UTC
    rows = []
    for ped in (101, 102, 103):
        for i in range(4):
            rows.append(f"{base + ped + i * 0.5},{ped},{1000 * i},{500 * i},1700,1.2,0.0,0.1")
    raw.write_text("\n".join(rows) + "\n")
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(
        "[dataset]\ncalendar = 2013-05-22:0\n[run]\nout_dir = " + str(tmp_path) + "\n"
    )
    out = tmp_path / "canon.csv"
    code = main(["ingest", "--input", str(raw), "--output", str(out),
                 "--format", "sensor", "--unit-scale", "0.001", "--config", str(cfg)])
    assert code == 0
    from pedcast.data import ingest_csv

    trajs = ingest_csv(out)
    assert len(trajs) == 3
    assert trajs[0].points[1][0] == pytest.approx(1.0)  # millimetres scaled


def test_wt_test_counts_fixture(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("\n".join([
        "645,601,1135,1722", "71,102,113,256", "25,46,123,230", "625,953,2010,3912",
        "75,106,281,445", "126,186,439,667", "653,1044,1226,2303", "938,1072,2637,3436",
        "21,40,61,211",
    ]) + "\n")
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[run]\nout_dir = " + str(tmp_path) + "\n")
    out = tmp_path / "wt.json"
    code = main(["wt-test", "--config", str(cfg), "--counts", str(counts),
                 "--output", str(out)])
    assert code == 0
    result = json.loads(out.read_text())
    assert result["chi2"] == pytest.approx(588.64, rel=0.015)
    assert result["dof"] == 24
    assert result["log10_p"] < -100
    assert result["significant"]


def test_wt_test_observed_equals_expected(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("20,40\n10,20\n")
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[run]\nout_dir = " + str(tmp_path) + "\n")
    assert main(["wt-test", "--config", str(cfg), "--counts", str(counts)]) == 0
    assert "chi2 = 0.00" in capsys.readouterr().out


def test_wt_test_zero_expected_cell_exits_compute(tmp_path, capsys):
    counts = tmp_path / "counts.csv"
    counts.write_text("5,0\n7,0\n")
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[run]\nout_dir = " + str(tmp_path) + "\n")
    code = main(["wt-test", "--config", str(cfg), "--counts", str(counts)])
    assert code == 4
    assert "merge" in capsys.readouterr().err


def test_cluster_separable_and_merge_logged(tiny_run, capsys):
    tmp, cfg = tiny_run
    data = tmp / "data.csv"
    main(["synth", "--config", str(cfg), "--output", str(data)])
    model_path = tmp / "model.json"
    labels_path = tmp / "labels.csv"
    code = main(["cluster", "--data", str(data), "--config", str(cfg),
                 "--output", str(model_path), "--labels", str(labels_path)])
    assert code == 0
    from pedcast.clustering import ClusterModel

    model = ClusterModel.load(model_path)
    assert model.K == 2
    np.testing.assert_allclose(
        model.surviving_centroids(), [[10.0, 0.0], [0.0, 10.0]], atol=0.5
    )
    assert labels_path.read_text().startswith("ped_id,label")


def test_full_pipeline_report_schema_and_idempotent_regeneration(tiny_run):
    tmp, cfg = tiny_run
    data = tmp / "data.csv"
    model = tmp / "model.json"
    assert main(["synth", "--config", str(cfg), "--output", str(data)]) == 0
    assert main(["cluster", "--data", str(data), "--config", str(cfg),
                 "--output", str(model)]) == 0
    assert main(["train", "--data", str(data), "--model", str(model),
                 "--config", str(cfg)]) == 0
    assert main(["ablate", "--data", str(data), "--model", str(model),
                 "--config", str(cfg)]) == 0
    run_dir = tmp / "run"
    assert main(["report", "--run-dir", str(run_dir)]) == 0
    report_path = run_dir / "report.json"
    report = json.loads(report_path.read_text())
    validate_report(report)
    assert (run_dir / "learning_curves.png").exists()
    assert (run_dir / "displacement_comparison.png").exists()
    first = report_path.read_bytes()
    assert main(["report", "--run-dir", str(run_dir)]) == 0
    assert report_path.read_bytes() == first


def test_fit_and_eval_round_trip(tiny_run, capsys):
    tmp, cfg = tiny_run
    data = tmp / "data.csv"
    model = tmp / "model.json"
    main(["synth", "--config", str(cfg), "--output", str(data)])
    main(["cluster", "--data", str(data), "--config", str(cfg), "--output", str(model)])
    assert main(["fit", "--data", str(data), "--model", str(model),
                 "--config", str(cfg)]) == 0
    run_dir = tmp / "run"
    code = main(["eval", "--data", str(data), "--model", str(model),
                 "--config", str(cfg),
                 "--checkpoint", str(run_dir / "classifier.ckpt"),
                 "--meta", str(run_dir / "classifier_meta.json")])
    assert code == 0
    assert "accuracy" in capsys.readouterr().out
