import json
import math

from hxplore.cli import main


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_theory_json_values(capsys):
    code, out, _ = _run(capsys, ["theory", "--r", "3", "--lambda", "2"])
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["rho_lambda"] - 0.796812) < 1e-5
    assert abs(doc["lambda_star"] - 0.406376) < 1e-5
    assert abs(doc["rho_r"] - (1 - math.sqrt(1 - doc["rho_lambda"]))) < 1e-12


def test_theory_with_targets(capsys):
    code, out, _ = _run(capsys, ["theory", "--r", "3", "--eps", "0.15", "--n", "300000"])
    doc = json.loads(out)
    assert code == 0
    assert abs(doc["clt_targets"]["sd_L1"] - 2000.0) < 1e-9
    assert abs(doc["clt_targets"]["corr"] - math.sqrt(0.6)) < 1e-12


def test_theory_usage_conflicts(capsys):
    code, _, err = _run(capsys, ["theory", "--r", "3", "--lambda", "2", "--eps", "0.1"])
    assert code == 2 and "usage-error" in err
    code, _, err = _run(capsys, ["theory", "--r", "3"])
    assert code == 2


def test_run_isolated_vertex_component_row(capsys):
    code, out, _ = _run(capsys, ["run", "--n", "1", "--r", "3", "--p", "0.1", "--seed", "7"])
    assert code == 0
    trace_part, comp_part = out.split("\n\n")
    assert comp_part.splitlines()[0] == "index,t_start,t_end,vertices,edges,nullity"
    assert comp_part.splitlines()[1] == "1,0,1,1,0,0"
    assert trace_part.splitlines()[0] == "t,edges,eta,xi,zeta,nullity_inc,A,C,X,new_component"


def test_run_writes_files(tmp_path, capsys):
    prefix = str(tmp_path / "out")
    code, _, _ = _run(capsys, [
        "run", "--n", "50", "--r", "3", "--lambda", "1.2", "--seed", "3",
        "--doob", "--out", prefix,
    ])
    assert code == 0
    trace = (tmp_path / "out.trace.csv").read_text()
    comps = (tmp_path / "out.components.csv").read_text()
    doob = (tmp_path / "out.doob.csv").read_text()
    assert trace.splitlines()[0] == "t,edges,eta,xi,zeta,nullity_inc,A,C,X,new_component"
    assert len(trace.splitlines()) == 51
    assert comps.splitlines()[0] == "index,t_start,t_end,vertices,edges,nullity"
    assert doob.splitlines()[0] == "t,D,Delta,Dstar,DeltaStar,S,Xtilde,Shat"
    assert doob.splitlines()[-1].startswith("# V1=")


def test_mc_deterministic_across_invocations_and_threads(tmp_path, capsys):
    base = ["mc", "--n", "20000", "--r", "3", "--eps", "0.2",
            "--replicates", "12", "--seed", "42"]
    outs = []
    for tag, threads in (("a", "1"), ("b", "2"), ("c", "1")):
        prefix = str(tmp_path / tag)
        code, _, _ = _run(capsys, base + ["--threads", threads, "--out", prefix])
        assert code == 0
        outs.append(((tmp_path / f"{tag}.cells.csv").read_bytes(),
                     (tmp_path / f"{tag}.report.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_mc_stdout_sections(capsys):
    code, out, _ = _run(capsys, ["mc", "--n", "20000", "--r", "3", "--eps", "0.2",
                                 "--replicates", "5", "--seed", "1"])
    assert code == 0
    csv_part = out.split("\n\n")[0]
    header = csv_part.splitlines()[0]
    assert header == ("cell,n,r,eps,R,mean_L1,var_L1,mean_N1,var_N1,cov,corr,"
                      "z1_mean,z1_var,z2_mean,z2_var,ks_z1,ks_z2")


def test_tails_csv_schema(tmp_path, capsys):
    prefix = str(tmp_path / "t")
    code, _, _ = _run(capsys, [
        "tails", "--kind", "sub", "--n", "2000", "--r", "3", "--eps", "0.3",
        "--replicates", "60", "--seed", "9", "--L-grid", "10,20", "--out", prefix,
    ])
    assert code == 0
    lines = (tmp_path / "t.tails.csv").read_text().splitlines()
    assert lines[0] == "L,exceed_count,R,p_hat,wilson_lo,wilson_hi,bound"
    assert len(lines) == 3
    rep = json.loads((tmp_path / "t.report.json").read_text())
    assert rep["kind"] == "subcritical"


def test_tails_super_omega_rows(tmp_path, capsys):
    prefix = str(tmp_path / "s")
    code, _, _ = _run(capsys, [
        "tails", "--kind", "super", "--n", "20000", "--r", "3", "--eps", "0.2",
        "--replicates", "80", "--seed", "9", "--L-grid", "50,100",
        "--omega-grid", "2,3", "--out", prefix,
    ])
    assert code == 0
    rep = json.loads((tmp_path / "s.report.json").read_text())
    assert rep["kind"] == "supercritical"
    freqs = [row["freq"] for row in rep["omega_rows"]]
    assert freqs == sorted(freqs, reverse=True)


def test_oracle_subcommand(capsys):
    code, out, _ = _run(capsys, ["oracle", "--n", "3", "--r", "2", "--p", "0.5"])
    assert code == 0
    doc = json.loads(out)
    got = {tuple(k): v for k, v in zip(doc["support"], doc["probability"])}
    assert abs(got[(3, 1, 0)] + got[(3, 0, 0)] + got.get((3, 2, 0), 0) + got.get((3, 3, 0), 0)
               - 0.5) < 1e-12


def test_oracle_step_subcommand(capsys):
    code, out, _ = _run(capsys, ["oracle", "--n", "8", "--r", "3", "--p", "0.1", "--step"])
    assert code == 0
    doc = json.loads(out)
    assert abs(sum(doc["probability"]) - 1.0) < 1e-10
    assert doc["t"] == 1 and doc["v"] == 0


def test_run_json_format(capsys):
    code, out, _ = _run(capsys, ["run", "--n", "1", "--r", "3", "--p", "0.1",
                                 "--seed", "7", "--format", "json"])
    assert code == 0
    doc = json.loads(out)
    assert doc["components"] == [
        {"index": 1, "t_start": 0, "t_end": 1, "vertices": 1, "edges": 0, "nullity": 0}
    ]
    assert len(doc["trace"]) == 1 and doc["complete"]


def test_usage_error_exit_code(capsys):
    code, _, err = _run(capsys, ["run", "--n", "10", "--r", "3", "--seed", "1"])
    assert code == 2 and "usage-error" in err
    code, _, err = _run(capsys, ["theory", "--r", "3", "--lambda", "2", "--format", "csv"])
    assert code == 2


def test_runtime_error_exit_code(capsys):
    # oracle guard: binom(9,2) = 36 exceeds the enumeration limit
    code, _, err = _run(capsys, ["oracle", "--n", "9", "--r", "2", "--p", "0.1"])
    assert code == 3 and err.startswith("error:")


def test_argparse_usage_exit_code(capsys):
    assert main(["frobnicate"]) == 2


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"r": 3, "lambda": 2.0}))
    code, out, _ = _run(capsys, ["theory", "--config", str(cfg)])
    assert code == 0
    assert abs(json.loads(out)["lambda"] - 2.0) < 1e-15
    # explicit flag wins over the config file
    code, out, _ = _run(capsys, ["theory", "--config", str(cfg), "--lambda", "1.5"])
    assert abs(json.loads(out)["lambda"] - 1.5) < 1e-15


def test_verify_subset(capsys):
    code, out, _ = _run(capsys, ["verify", "--criteria", "1,2", "--threads", "2"])
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("criterion")]
    assert len(lines) == 2 and all("[PASS]" in l for l in lines)
