"""End-to-end command line checks: routing, exit codes, file formats."""

import csv
import json
import math

import pytest

from vitalkit.cli import main

B, C = 0.0001744, 1.082

GOMP_INI = """\
[model]
age = 60
[model.initial]
kind = degenerate
value = 1.0
[model.trend]
kind = gompertz
b = 0.0001744
c = 1.082
[survive]
t_max = 40
t_step = 1
"""

JD_INI = """\
[model]
age = 60
[model.initial]
kind = degenerate
value = 1.0
[model.trend]
kind = constant
rate = 0.1
[model.diffusion]
kind = brownian
sigma = 0.2
[model.jumps]
kind = exponential
intensity = 0.05
size_rate = 1.0
[survive]
t_max = 5
t_step = 1
n_paths = 4000
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows_of(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_closed_form_survival_curve(tmp_path):
    cfg = write(tmp_path, "gomp.ini", GOMP_INI)
    out = str(tmp_path / "gomp.csv")
    assert main(["survive", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert len(rows) == 41
    assert float(rows[0]["survival"]) == 1.0
    assert all(r["method"] == "closed-form" for r in rows)
    surv = [float(r["survival"]) for r in rows]
    assert all(a >= b for a, b in zip(surv, surv[1:]))
    # point-mass start: a step at the deterministic depletion time 20.406
    assert float(rows[20]["survival"]) == 1.0
    assert float(rows[21]["survival"]) == 0.0


def test_monte_carlo_requires_seed_and_reproduces(tmp_path):
    cfg = write(tmp_path, "jd.ini", JD_INI)
    out1 = str(tmp_path / "a.csv")
    out2 = str(tmp_path / "b.csv")
    assert main(["survive", "--config", cfg, "--out", out1]) == 2
    assert main(["survive", "--config", cfg, "--seed", "42", "--out", out1]) == 0
    assert main(["survive", "--config", cfg, "--seed", "42", "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()
    rows = rows_of(out1)
    assert all(r["method"] == "monte-carlo" for r in rows)
    assert all(float(r["std_error"]) > 0 for r in rows[1:])
    out3 = str(tmp_path / "c.csv")
    assert main(["survive", "--config", cfg, "--seed", "43", "--out", out3]) == 0
    assert open(out1, "rb").read() != open(out3, "rb").read()


def test_laplace_route(tmp_path):
    cfg = write(tmp_path, "lap.ini", JD_INI.replace("n_paths = 4000",
                                                    "method = laplace"))
    out = str(tmp_path / "lap.csv")
    assert main(["survive", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert all(r["method"] == "laplace" for r in rows)
    assert float(rows[0]["survival"]) == 1.0
    surv = [float(r["survival"]) for r in rows]
    assert all(a >= b - 1e-9 for a, b in zip(surv, surv[1:]))


def test_pure_jump_closed_form(tmp_path):
    cfg = write(tmp_path, "pj.ini", """\
[model]
age = 60
[model.initial]
kind = exponential
rate = 1.0
[model.trend]
kind = gompertz
b = 0.0001744
c = 1.082
[model.jumps]
kind = exponential
intensity = 0.05
size_rate = 1.0
[survive]
t_max = 30
t_step = 5
""")
    out = str(tmp_path / "pj.csv")
    assert main(["survive", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert all(r["method"] == "closed-form" for r in rows)
    y25 = B * C**60 * (C**25 - 1.0) / math.log(C)
    want = math.exp(-y25 - 0.05 * 25 * (1.0 - 1.0 / 2.0))
    got = [float(r["survival"]) for r in rows if float(r["t"]) == 25.0][0]
    assert got == pytest.approx(want, abs=1e-14)


def test_price_annuity_value(tmp_path):
    cfg = write(tmp_path, "price.ini", """\
[model]
[model.initial]
kind = degenerate
value = 1.0
[model.trend]
kind = constant
rate = 0.1
[price]
product = annuity
interest = 0.05
""")
    out = str(tmp_path / "price.csv")
    assert main(["price", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert float(rows[0]["value"]) == pytest.approx(7.8693868057473315, abs=1e-10)


COD_BASE = """\
[model]
age = 60
[model.initial]
kind = degenerate
value = 1.0
[model.trend]
kind = gompertz
b = 0.0001744
c = 1.082
"""


def test_cod_split_and_formats(tmp_path):
    # no jumps at all: the accident share is exactly zero
    cfg0 = write(tmp_path, "cod0.ini", COD_BASE)
    out0 = str(tmp_path / "cod0.csv")
    assert main(["cod", "--config", cfg0, "--out", out0]) == 0
    r0 = rows_of(out0)
    assert float(r0[0]["probability"]) == 0.0
    assert float(r0[1]["probability"]) == 1.0

    cfg1 = write(tmp_path, "cod1.ini", COD_BASE + """\
[model.jumps]
kind = exponential
intensity = 0.03
size_rate = 1.0
""")
    out1 = str(tmp_path / "cod1.csv")
    outj = str(tmp_path / "cod1.json")
    assert main(["cod", "--config", cfg1, "--out", out1]) == 0
    assert main(["cod", "--config", cfg1, "--format", "json", "--out", outj]) == 0
    r1 = rows_of(out1)
    assert sum(float(r["probability"]) for r in r1) == pytest.approx(1.0, abs=1e-9)
    j = json.load(open(outj))
    assert j["columns"] == ["cause", "probability"]
    assert j["rows"][0][1] == pytest.approx(float(r1[0]["probability"]), abs=1e-15)


LIFE_INI = """\
[lifecycle]
r = 0.04
theta = 0.3
sigma_s = 0.2
beta = 0.03
bequest = 5.0
delta = 0.1
sigma_v = 0.0
v0 = 1.0
v_max = 12
n_points = {n}
"""


def test_lifecycle_policy_table(tmp_path):
    cfg = write(tmp_path, "life.ini", LIFE_INI.format(n=41))
    out = str(tmp_path / "life.csv")
    assert main(["lifecycle", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert len(rows) == 41
    assert all(float(r["consumption_factor"]) > 0 for r in rows)


def test_lifecycle_simulation_writes_path_file(tmp_path):
    cfg = write(tmp_path, "sim.ini", LIFE_INI.format(n=11) + """\
simulate = 2
dt = 0.003968253968253968
a0 = 100
""")
    out = str(tmp_path / "sim.csv")
    assert main(["lifecycle", "--config", cfg, "--seed", "7"]) == 2
    assert main(["lifecycle", "--config", cfg, "--seed", "7", "--out", out]) == 0
    paths = rows_of(str(tmp_path / "sim-paths.csv"))
    assert {r["path"] for r in paths} == {"0", "1"}
    assert set(paths[0]) == {"path", "t", "assets", "consumption", "vitality"}


def test_disability_recovery_table(tmp_path):
    cfg = write(tmp_path, "dis.ini", """\
[model]
[model.initial]
kind = degenerate
value = 0.25
[model.trend]
kind = constant
rate = 0.1
[model.diffusion]
kind = brownian
sigma = 0.3
[disability]
metric = recovery
threshold = 0.5
denominator = disabled
t_max = 3
t_step = 1
""")
    out = str(tmp_path / "dis.csv")
    assert main(["disability", "--config", cfg, "--out", out]) == 0
    rows = rows_of(out)
    assert len(rows) == 3
    assert all(0.0 <= float(r["probability"]) <= 1.0 for r in rows)


def test_disability_healthy_stay_exact(tmp_path):
    cfg = write(tmp_path, "stay.ini", """\
[model]
[model.initial]
kind = exponential
rate = 1.0
[model.trend]
kind = constant
rate = 0.1
[disability]
metric = healthy-stay
threshold = 0.5
t_max = 3
t_step = 1
""")
    out = str(tmp_path / "stay.csv")
    assert main(["disability", "--config", cfg, "--out", out]) == 0
    got = [float(r["probability"]) for r in rows_of(out)]
    want = [math.exp(-0.1 * t) for t in (1, 2, 3)]
    assert got == pytest.approx(want, abs=1e-12)


def make_cohort_csv(tmp_path):
    b, c, x, E = B, C, 60, 100_000
    surv = lambda t: math.exp(-b * c**x * (c**t - 1.0) / math.log(c))
    lines = ["# exposure=100000 start_age=60", "age,deaths"]
    for k in range(60):
        lines.append(f"{60 + k},{round(E * (surv(k) - surv(k + 1)))}")
    return write(tmp_path, "cohort.csv", "\n".join(lines) + "\n")


def test_fit_recovers_parameters(tmp_path):
    data = make_cohort_csv(tmp_path)
    cfg = write(tmp_path, "fit.ini", f"[fit]\nlaw = gompertz\ndata = {data}\n")
    out = str(tmp_path / "fit.csv")
    assert main(["fit", "--config", cfg, "--out", out]) == 0
    fit = {r["key"]: r["value"] for r in rows_of(out)}
    assert float(fit["params.b"]) == pytest.approx(B, rel=0.10)
    assert float(fit["params.c"]) == pytest.approx(C, rel=0.002)


def test_validation_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "bad.ini", GOMP_INI.replace("b = 0.0001744", "b = -3"))
    assert main(["survive", "--config", bad]) == 2
    assert "model.trend" in capsys.readouterr().err
    assert main(["survive", "--config", str(tmp_path / "nope.ini")]) == 2


def test_no_closed_form_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "noform.ini", GOMP_INI + """\
[model.diffusion]
kind = brownian
sigma = 0.1
""")
    code = main(["survive", "--config", cfg])
    capsys.readouterr()
    assert code == 3


def test_stdout_default_and_full_precision(tmp_path, capsys):
    cfg = write(tmp_path, "gomp.ini", GOMP_INI.replace(
        "kind = degenerate\nvalue = 1.0", "kind = exponential\nrate = 1.0"))
    assert main(["survive", "--config", cfg]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 41
    # full round-trip precision in the CSV payload
    y10 = B * C**60 * (C**10 - 1.0) / math.log(C)
    assert float(rows[10]["survival"]) == math.exp(-y10)
