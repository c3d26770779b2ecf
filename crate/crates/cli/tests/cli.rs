use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qinv_core::io::{parse_stochastic, read_channel, ChannelFile};
use serde_json::Value;

fn qinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qinv"))
        .args(args)
        .env_remove("QINV_JOBS")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = qinv(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_hadamard(dir: &Path) -> String {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let text = format!(
        r#"{{"dim": 2, "form": "kraus", "data": [[[[{h}, 0], [{h}, 0]], [[{h}, 0], [{m}, 0]]]]}}"#,
        m = -h
    );
    let p = dir.join("hadamard.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn werner_holevo_file_gain() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("wh.json");
    let out = qinv(&["construct", "transverse-depolarizing", "--dim", "3", "--w", "1.5", "-o", path_str(&f)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());

    for extra in [&["--analytic"][..], &[][..]] {
        let mut args = vec!["qi", path_str(&f)];
        args.extend_from_slice(extra);
        let r = ok_json(&args);
        let gain = r["fidelity_after"].as_f64().unwrap() - r["fidelity_before"].as_f64().unwrap();
        assert!((gain - 0.25).abs() < 1e-6, "{extra:?}: gain {gain}");
    }
}

#[test]
fn depolarizing_analytic_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("dep.json");
    qinv(&["construct", "depolarizing", "--dim", "3", "--q", "0.5", "-o", path_str(&f)]);
    let r = ok_json(&["qi", path_str(&f), "--analytic"]);
    let gain = r["fidelity_after"].as_f64().unwrap() - r["fidelity_before"].as_f64().unwrap();
    assert!(gain.abs() < 1e-15);
    let qi = ChannelFile::from_json(&r["qi"].to_string()).unwrap().to_rep().unwrap();
    let c = qi.to_choi().unwrap();
    let id = qinv_core::Superoperator::identity(3).to_choi();
    assert!((c.matrix() - id.matrix()).norm() < 1e-12);
}

#[test]
fn fidelity_reports() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    let ls = dir.path().join("ls.json");
    qinv(&["construct", "identity", "--dim", "3", "-o", path_str(&id)]);
    qinv(&["construct", "landau-streater", "--j", "1", "-o", path_str(&ls)]);

    let r = ok_json(&["fidelity", path_str(&id)]);
    assert!((r["avg_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["ent_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let r = ok_json(&["fidelity", path_str(&ls)]);
    assert!((r["avg_fidelity"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let b = &r["bounds"];
    assert!(b["lower"].as_f64().unwrap() <= b["upper"].as_f64().unwrap() + 1e-9);

    let r = ok_json(&["fidelity", path_str(&ls), path_str(&ls)]);
    assert!((r["corrected_fidelity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn random_channel_qi_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("pauli.json");
    let qi = dir.path().join("qi.json");
    qinv(&["construct", "pauli", "--p", "0.4,0.3,0.2,0.1", "--form", "choi", "-o", path_str(&f)]);
    let out = qinv(&["qi", path_str(&f), "-o", path_str(&qi)]);
    assert!(out.status.success() && out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&qi).unwrap()).unwrap();
    let after = r["fidelity_after"].as_f64().unwrap();
    let b = &r["bounds"];
    assert!(after >= b["lower"].as_f64().unwrap() - 1e-7);
    assert!(after <= b["upper"].as_f64().unwrap() + 1e-7);

    // the qi written inside the result is itself a readable channel
    let qf = dir.path().join("qi_channel.json");
    fs::write(&qf, r["qi"].to_string()).unwrap();
    let comp = ok_json(&["fidelity", path_str(&f), path_str(&qf)]);
    assert!((comp["corrected_fidelity"].as_f64().unwrap() - after).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"dim": 2, "form": "choi", "data": [[[1, 0]]]}"#).unwrap();
    let out = qinv(&["qi", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("data"));

    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{\"dim\": 2,\n \"form\": }").unwrap();
    let out = qinv(&["validate", path_str(&garbled)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // positive but not trace preserving
    let ntp = dir.path().join("ntp.json");
    fs::write(
        &ntp,
        r#"{"dim": 2, "form": "choi", "data": [[[1, 0], [0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0], [0, 0]]]}"#,
    )
    .unwrap();
    let out = qinv(&["validate", path_str(&ntp)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tp"], Value::Bool(false));
    assert_eq!(qinv(&["qi", path_str(&ntp)]).status.code(), Some(1));

    let out = qinv(&["construct", "transverse-depolarizing", "--dim", "3", "--w", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("<= w <="));

    let ls = dir.path().join("ls.json");
    let id2 = dir.path().join("id2.json");
    qinv(&["construct", "landau-streater", "--j", "1", "-o", path_str(&ls)]);
    qinv(&["construct", "identity", "--dim", "2", "-o", path_str(&id2)]);
    assert_eq!(qinv(&["fidelity", path_str(&ls), path_str(&id2)]).status.code(), Some(1));

    let out = qinv(&["qi", path_str(&ls), "--max-cuts", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["solver"]["converged"], Value::Bool(false));

    assert_eq!(qinv(&["ensemble", "--mode", "classical", "--dim", "3"]).status.code(), Some(1));
    assert_eq!(qinv(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(qinv(&["--help"]).status.code(), Some(0));
}

#[test]
fn channel_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for form in ["kraus", "choi", "superop", "affine"] {
        let f = dir.path().join(format!("ls_{form}.json"));
        let out = qinv(&["construct", "landau-streater", "--j", "1.5", "--form", form, "-o", path_str(&f)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let file = read_channel(&f).unwrap();
        assert_eq!(file.form, form);
        assert!(file.constructor.is_some());
        let again = ChannelFile::from_rep(&file.to_rep().unwrap(), file.constructor.clone());
        assert_eq!(again, file);
        let out = qinv(&["validate", path_str(&f)]);
        assert!(out.status.success());
    }
}

#[test]
fn stochastic_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ls = dir.path().join("ls.json");
    qinv(&["construct", "landau-streater", "--j", "1", "-o", path_str(&ls)]);
    let json = qinv(&["superdecohere", path_str(&ls)]);
    let csv = qinv(&["superdecohere", path_str(&ls), "--format", "csv"]);
    let a = parse_stochastic(&String::from_utf8(json.stdout).unwrap()).unwrap();
    let b = parse_stochastic(&String::from_utf8(csv.stdout).unwrap()).unwrap();
    assert!((a.matrix() - b.matrix()).abs().max() <= 1e-15);
    assert!(a.is_bistochastic(1e-10));

    // and the classical qi reads the same file
    let f = dir.path().join("t.csv");
    fs::write(&f, "0.2,0.6\n0.8,0.4\n").unwrap();
    let r = ok_json(&["qi", "--kind", "classical", path_str(&f)]);
    assert!((r["fidelity_before"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((r["fidelity_after"].as_f64().unwrap() - 0.7).abs() < 1e-12);
}

#[test]
fn superdecoherence() {
    let dir = tempfile::tempdir().unwrap();
    let h = write_hadamard(dir.path());
    let t = parse_stochastic(&String::from_utf8(qinv(&["superdecohere", &h]).stdout).unwrap()).unwrap();
    for x in t.matrix().iter() {
        assert!((x - 0.5).abs() < 1e-12);
    }

    // quasi-inverting commutes with decoherence only up to a gap here
    let r = ok_json(&["superdecohere", &h, "--then-qi"]);
    assert!(r["difference"].as_f64().unwrap() > 0.1);
    assert!((r["quantum_qi_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-7);
    assert!((r["classical_qi"]["fidelity_after"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn ensembles_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run = |out: &Path, jobs: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qinv"))
            .args(["ensemble", "--mode", "quantum", "--dim", "2", "--n", "6", "--seed", "11", "-o"])
            .arg(out)
            .env("QINV_JOBS", jobs)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    };
    run(&a, "1");
    run(&b, "2");
    let ca = fs::read(a.join("samples_d2.csv")).unwrap();
    assert_eq!(ca, fs::read(b.join("samples_d2.csv")).unwrap());
    let header = String::from_utf8(ca).unwrap();
    assert!(header.starts_with("index,d,f_before,f_unitary,f_qi,jam_purity,unitality,lp_iters,converged"));
    let s: Value = serde_json::from_str(&fs::read_to_string(a.join("summary_d2.json")).unwrap()).unwrap();
    assert_eq!(s["samples"], 6);
    assert_eq!(s["seed"], 11);
}

#[test]
fn classical_sweep_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = qinv(&[
        "ensemble", "--mode", "classical", "--sweep", "2..6", "--n", "2000", "--seed", "3", "--fit", "-o",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for d in 2..=6 {
        assert!(dir.path().join(format!("samples_d{d}.csv")).exists());
    }
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 6);
    let fit: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    let x = fit["monte_carlo"]["exponent"].as_f64().unwrap();
    let xt = fit["theory"]["exponent"].as_f64().unwrap();
    assert!(x < 0.0 && (x - xt).abs() < 0.05, "{x} vs {xt}");

    let s: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary_d3.json")).unwrap()).unwrap();
    assert!((s["mean_before"]["mean"].as_f64().unwrap() - 1.0 / 3.0).abs() < 0.02);
}

#[test]
fn spin1_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = qinv(&[
        "ensemble", "--mode", "spin1", "--seed", "0", "--p-steps", "3", "--tau-steps", "4", "-o",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("spin1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,tau0,f_before,f_after,delta_f,tau_m"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert!(r[4] >= -1e-12);
        if r[0] == 0.0 || r[1] == 0.0 {
            assert!((r[2] - 1.0).abs() < 1e-12);
        }
    }
}
