import numpy as np
import pytest

from tsmc.errors import ConfigError
from tsmc.harness import cli
from tsmc.harness.config import load_config
from tsmc.harness.experiments import (BerPoint, build_taps, emit_csv, fit_log_linear, run_ber,
                                      run_reaction, run_taps)
from tsmc.reaction_fdm import ZETA_PER_NM


def cfg(text="", **over):
    return load_config(text="seed = 5\n" + text, overrides={k: str(v) for k, v in over.items()})


def test_units_are_converted():
    c = cfg("V_R_cm3 = 5e-16\nreaction = fdm(10, 1e-5)\nzeta_nm = 2")
    assert c.V_R == pytest.approx(5e-22)
    assert c.reaction.zeta == pytest.approx(10 * ZETA_PER_NM) and c.reaction.T_r == 1e-5
    assert c.zeta == pytest.approx(2e-9)


def test_lists_and_specs_parse():
    c = cfg("powers = 1, 2.5e3\nquantizer = lloyd(8)\nlevels = 2,4\nL = auto")
    assert c.powers == (1.0, 2500.0) and c.quantizer.rule == "lloyd" and c.quantizer.M == 8
    assert c.levels == (2, 4) and c.L is None


@pytest.mark.parametrize("text", [
    "trials = 999", "scheme = PSK", "quantizer = lloyd(x)", "reaction = partial",
    "nonsense = 1", "powers = -1", "epsilon = 1.5", "no equals sign",
])
def test_bad_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        cfg(text)


def test_seed_must_be_explicit():
    with pytest.raises(ConfigError):
        load_config(text="trials = 1000")


def test_overrides_win(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("seed = 1\nepsilon = 0.3  # comment\n")
    assert load_config(p, {"epsilon": "0.2"}).epsilon == 0.2


def test_ber_point_counts():
    pt = BerPoint.from_counts(1.0, 25, 10, 1000)
    assert pt.ber == 0.025 and pt.ci95 == pytest.approx(1.96 * np.sqrt(0.025 * 0.975 / 1000))


def test_ci_coverage_on_known_flip_rate():
    p, n = 0.02, 20_000
    covered = 0
    for seed in range(100):
        errors = int(np.count_nonzero(np.random.default_rng(seed).random(n) < p))
        pt = BerPoint.from_counts(1.0, errors, 1, n)
        covered += abs(pt.ber - p) <= pt.ci95
    assert covered >= 90


def test_csv_schema_and_empty(tmp_path):
    emit_csv([BerPoint(1.0, 0.5, 0.1, 5, 10)], tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text() == "power,ber,ci95,errors,trials\n1.0,0.5,0.1,5,10\n"
    emit_csv([], tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text() == "power,ber,ci95,errors,trials\n"


def test_csv_io_failure_surfaces(tmp_path):
    with pytest.raises(OSError):
        emit_csv([], tmp_path / "missing" / "x.csv")


def test_ber_without_signal_is_a_coin_flip():
    c = cfg(powers="1e10", frame_length=200)
    pt = run_ber(c)[0]
    assert abs(pt.ber - 0.5) <= pt.ci95


@pytest.mark.parametrize("scheme", ["CSK_nomem", "CSK_genie", "MCSK_nomem", "MCSK_genie"])
def test_other_schemes_run(scheme):
    pt = run_ber(cfg(scheme=scheme, powers="2e16", frame_length=100, power_normalize=1))[0]
    assert 0 <= pt.ber <= 0.6 and pt.trials == 1000


def test_ber_is_deterministic():
    c = cfg(powers="5e21,1e22", frame_length=50)
    assert run_ber(c) == run_ber(c)
    assert run_ber(c) != run_ber(c.with_overrides(seed=6))


def test_unstable_precoder_aborts():
    from tsmc.errors import PreconditionError
    with pytest.raises(PreconditionError):
        run_ber(cfg(powers="1e22", frame_length=10), taps=[1.0, 1.5])


def test_reaction_regimes_are_ordered():
    """More reaction leaves less total concentration, so less noise."""
    bers = [run_ber(cfg(powers="6e21", frame_length=200, reaction=r))[0].ber
            for r in ("none", "fdm(1, 1e-5)", "full")]
    assert bers[0] >= bers[1] >= bers[2]


def test_taps_table():
    rows = run_taps(cfg())
    assert rows[0].ratio == 1.0 and len(rows) == build_taps(cfg()).L + 1


def test_reaction_without_local_reaction_keeps_no_reaction_value():
    rows = run_reaction(cfg(zeta_tr="0,1e-3"))
    assert rows[0].mean_limiting > rows[1].mean_limiting > 0


def test_log_linear_fit():
    x = np.linspace(0, 1, 6)
    slope, r2 = fit_log_linear(x, 3 * np.exp(-2 * x))
    assert slope == pytest.approx(-2) and r2 == pytest.approx(1)


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "g.cfg"
    good.write_text("seed = 1\nepsilon = 0.2\n")
    out = tmp_path / "t.csv"
    assert cli.main(["taps", "--config", str(good), "--out", str(out)]) == 0
    assert out.read_text().startswith("j,time,tap,ratio\n")
    assert cli.main(["ber", "--config", str(good), "--set", "trials=5"]) == 2
    assert cli.main(["taps", "--config", str(tmp_path / "nope.cfg")]) == 2
    assert cli.main(["taps", "--config", str(good), "--set", "epsilon=1e-3"]) == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_matched_mismatch_run_coincides_with_ber_sweep():
    from tsmc.harness.experiments import run_mismatch
    c = cfg(powers="5e21", frame_length=1000)
    matched = run_mismatch(c, ratios=(1.0,))[0]
    ref = run_ber(c)[0]
    assert abs(matched.ber - ref.ber) <= ref.ci95
