from fairmapf.bench import build_series, summarize
from fairmapf.report import render_figures
from tests.test_bench import _record


def _series():
    records = []
    for alg in ("icts", "cbs"):
        for agents in (2, 4):
            for eps in (0.2, 1.0):
                records.append(_record(algorithm=alg, agents=agents,
                                       epsilon=eps, run=0))
    return build_series(summarize(records))


def test_renders_one_png_per_panel(tmp_path):
    paths = render_figures(_series(), tmp_path, "bench")
    names = sorted(p.name for p in paths)
    assert names == [
        "bench_runtime_vs_agents.png",
        "bench_success_vs_agents.png",
        "bench_success_vs_epsilon.png",
        "bench_welfare_vs_epsilon.png",
    ]
    for p in paths:
        data = p.read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"
        assert len(data) > 1000


def test_skips_unknown_and_empty_panels(tmp_path):
    series = _series()
    series["bogus_panel"] = [{"label": "x", "x": [1], "y": [1.0]}]
    series["success_vs_epsilon"] = []
    paths = render_figures(series, tmp_path, "out")
    names = {p.name for p in paths}
    assert "out_bogus_panel.png" not in names
    assert "out_success_vs_epsilon.png" not in names
    assert len(paths) == 3


def test_none_values_are_dropped(tmp_path):
    series = {
        "welfare_vs_epsilon": [
            {"label": "icts n=2", "x": [0.2, 1.0], "y": [None, 1.5]},
        ]
    }
    (path,) = render_figures(series, tmp_path, "gaps")
    assert path.exists()


def test_creates_missing_directory(tmp_path):
    target = tmp_path / "nested" / "dir"
    paths = render_figures(_series(), target, "bench")
    assert all(p.parent == target for p in paths)
    assert target.is_dir()
