import csv

import numpy as np
import pytest

from bdpi_transfer import approximator
from bdpi_transfer.cli import main
from bdpi_transfer.errors import ConfigurationError
from bdpi_transfer.harness import (
    CSV_HEADER, SETTINGS, ExperimentConfig, RunRecord, parse_config, ranking, read_records, read_stats,
    render_svg, run_setting, summarize, write_stats,
)
from bdpi_transfer.transfer import Advisor

TINY = dict(n_critics=2, batch_size=8, hidden=6, critic_hidden=6, critic_epochs=1, actor_epochs=1)


def tiny(setting, tmp_path=None, **kw):
    kw.setdefault("episodes", 2)
    kw.setdefault("episode_cap", 15)
    kw.setdefault("seeds", (1,))
    return ExperimentConfig(setting, agent_overrides=dict(TINY), out_dir=tmp_path, **kw)


@pytest.fixture
def advisor_file(tmp_path):
    net = approximator.Network.build((8, 6, 5), np.random.default_rng(0), output_activation="softmax")
    path = tmp_path / "advisor.net"
    approximator.save(net, path)
    return path


@pytest.mark.parametrize("setting,observation,actor_lr,epochs,acting,tl", [
    ("sensors-no-transfer", "sensors", 1e-4, 20, False, 0.0),
    ("camera-no-transfer", "camera", 1e-6, 1, False, 0.0),
    ("camera-act", "camera", 1e-6, 1, True, 0.0),
    ("camera-learn", "camera", 1e-6, 1, False, 0.03),
    ("camera-act-learn", "camera", 1e-6, 1, True, 0.01),
])
def test_setting_defaults(setting, observation, actor_lr, epochs, acting, tl):
    cfg = ExperimentConfig(setting, advisor_path="x" if SETTINGS[setting].needs_advisor else None)
    agent = cfg.agent_config()
    assert cfg.preset.observation == observation
    assert (agent.actor_lr, agent.actor_epochs, agent.critic_epochs) == (actor_lr, epochs, epochs)
    assert (agent.acting_transfer, agent.tl) == (acting, tl)


class TestConfigFile:
    def test_parses_every_section(self):
        parsed = parse_config("""
            # comment
            gamma = 0.95
            acting_transfer = yes
            n_critics = 4
            pillar_radius = 0.1   # trailing comment
            episodes = 7
            seeds = 4,5
        """)
        assert parsed["agent"] == {"gamma": 0.95, "acting_transfer": True, "n_critics": 4}
        assert parsed["scene"] == {"pillar_radius": 0.1}
        assert parsed["run"] == {"episodes": 7, "seeds": "4,5"}

    @pytest.mark.parametrize("text", ["gamme = 0.9", "gamma 0.9", "n_critics = 2.5", "acting_transfer = maybe",
                                      "gamma = 0.9\ngamma = 0.8"])
    def test_rejects(self, text):
        with pytest.raises(ConfigurationError):
            parse_config(text)

    def test_file_then_keywords(self, tmp_path):
        f = tmp_path / "c.cfg"
        f.write_text("episodes = 7\nseeds = 4,5\ngamma = 0.5\nroom_size = 2.0\n")
        cfg = ExperimentConfig.from_file("sensors-no-transfer", f, episodes=3)
        assert (cfg.episodes, cfg.seeds) == (3, (4, 5))
        assert cfg.agent_config().gamma == 0.5
        assert cfg.geometry().room_size == 2.0

    def test_override_beats_setting_default(self):
        cfg = ExperimentConfig("camera-no-transfer", agent_overrides={"actor_lr": 0.1})
        assert cfg.agent_config().actor_lr == 0.1

    def test_bad_agent_value_surfaces(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig("sensors-no-transfer", agent_overrides={"gamma": 1.5}).agent_config()


class TestRunSetting:
    def test_missing_advisor_fails_before_simulation(self, tmp_path):
        with pytest.raises(ConfigurationError):
            run_setting(tiny("camera-act", tmp_path))
        assert not (tmp_path / "camera-act.csv").exists()

    def test_unreadable_advisor_path(self, tmp_path):
        with pytest.raises(ConfigurationError):
            run_setting(tiny("camera-learn", tmp_path, advisor_path=tmp_path / "nope.net"))

    def test_zero_episodes_gives_header_only(self, tmp_path):
        assert run_setting(tiny("sensors-no-transfer", tmp_path, episodes=0)) == []
        rows = list(csv.reader(open(tmp_path / "sensors-no-transfer.csv")))
        assert rows == [list(CSV_HEADER)]

    def test_csv_contents(self, tmp_path):
        records = run_setting(tiny("sensors-no-transfer", tmp_path, seeds=(1, 2), episodes=3))
        assert len(records) == 6
        back = read_records(tmp_path / "sensors-no-transfer.csv")
        assert [(r.seed, r.episode) for r in back] == [(s, e) for s in (1, 2) for e in range(3)]
        assert [r.env_steps for r in back[:3]] == [15, 30, 45]
        assert back[2].seconds == pytest.approx(45 * 0.05)
        assert [r.episode_return for r in back] == [r.episode_return for r in records]

    def test_deterministic(self, tmp_path, advisor_file):
        outs = []
        for name in ("a", "b"):
            run_setting(tiny("camera-act-learn", tmp_path / name, advisor_path=advisor_file, episodes=3))
            outs.append((tmp_path / name / "camera-act-learn.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_train_every(self, tmp_path, monkeypatch):
        from bdpi_transfer.harness import runner
        calls = []
        monkeypatch.setattr(runner, "train_epoch", lambda agent: calls.append(1))
        run_setting(tiny("sensors-no-transfer", None, train_every=4, episodes=2, episode_cap=10))
        assert len(calls) == 20 // 4

    def test_saved_advisor_drives_transfer(self, tmp_path):
        path = tmp_path / "src.net"
        run_setting(tiny("sensors-no-transfer", tmp_path, save_advisor=path))
        adv = Advisor.load(path)
        assert adv.observation_width == 8
        run_setting(tiny("camera-act", tmp_path, advisor_path=path))

    def test_camera_advisor_rejected(self, tmp_path):
        net = approximator.Network.build((32, 5), np.random.default_rng(0), output_activation="softmax")
        approximator.save(net, tmp_path / "cam.net")
        with pytest.raises(ConfigurationError):
            run_setting(tiny("camera-act", tmp_path, advisor_path=tmp_path / "cam.net"))


def records_from(table):
    return [RunRecord(s, seed, ep, ret, 0, 0.0) for s, seed, ep, ret in table]


class TestSummaries:
    def test_population_std(self):
        stats = summarize(records_from([("a", 1, 0, 1.0), ("a", 2, 0, 3.0)]))
        assert stats["a"].mean[0] == 2.0 and stats["a"].std[0] == 1.0

    def test_single_seed_has_zero_std(self):
        stats = summarize(records_from([("a", 1, 0, 5.0), ("a", 1, 1, 6.0)]))
        assert np.array_equal(stats["a"].std, [0.0, 0.0])

    def test_ranking_uses_last_tenth(self):
        rows = [("lo", 1, e, 100.0 if e < 18 else 0.0) for e in range(20)]
        rows += [("hi", 1, e, 1.0) for e in range(20)]
        assert ranking(summarize(records_from(rows))) == [("hi", 1.0), ("lo", 0.0)]

    def test_stats_round_trip(self, tmp_path):
        stats = summarize(records_from([("a", 1, 0, 1.5), ("a", 2, 0, 2.5), ("b", 1, 0, -1.0)]))
        write_stats(stats, tmp_path / "s.csv")
        back = read_stats(tmp_path / "s.csv")
        assert set(back) == {"a", "b"}
        assert np.array_equal(back["a"].mean, stats["a"].mean)


class TestPlot:
    def test_single_point_is_a_marker(self):
        svg = render_svg(summarize(records_from([("only", 1, 0, 3.0)])))
        assert svg.count('class="marker"') == 1 and 'class="curve"' not in svg
        assert ">only</text>" in svg

    def test_one_band_per_setting(self):
        rows = [(s, seed, e, float(e * seed)) for s in ("x", "y", "z") for seed in (1, 2) for e in range(5)]
        svg = render_svg(summarize(records_from(rows)))
        assert svg.count('class="band"') == 3 and svg.count('class="legend"') == 3

    def test_names_are_escaped(self):
        svg = render_svg(summarize(records_from([("a<b", 1, 0, 1.0)])))
        assert "a&lt;b" in svg

    def test_deterministic(self):
        stats = summarize(records_from([("a", 1, e, float(e)) for e in range(4)]))
        assert render_svg(stats) == render_svg(stats)


def test_cli_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text("\n".join(f"{k} = {v}" for k, v in TINY.items()) + "\nepisode_cap = 10\n")
    out = tmp_path / "runs"
    assert main(["run", "--config", str(cfg), "--setting", "sensors-no-transfer", "--seeds", "1,2",
                 "--episodes", "2", "--out", str(out), "--save-advisor", str(tmp_path / "adv.net")]) == 0
    assert main(["run", "--config", str(cfg), "--setting", "camera-act", "--seeds", "1", "--episodes", "2",
                 "--out", str(out), "--advisor", str(tmp_path / "adv.net")]) == 0
    assert main(["summarize", "--in", str(out), "--out", str(tmp_path / "stats.csv")]) == 0
    ranked = capsys.readouterr().out.strip().splitlines()[-2:]
    assert {line.split("\t")[0] for line in ranked} == {"sensors-no-transfer", "camera-act"}
    assert main(["plot", "--in", str(tmp_path / "stats.csv"), "--out", str(tmp_path / "c.svg")]) == 0
    assert (tmp_path / "c.svg").read_text().startswith("<svg")


def test_cli_reports_configuration_errors(tmp_path, capsys):
    assert main(["run", "--setting", "camera-act", "--out", str(tmp_path)]) == 2
    assert "advisor" in capsys.readouterr().err
