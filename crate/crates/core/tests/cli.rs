use std::process::{Command, Output};

fn yb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yb-ofr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(yb(&["--help"]).status.code(), Some(0));
    assert_eq!(yb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(yb(&["channels", "--T", "1"]).status.code(), Some(2));
    assert_eq!(yb(&["channels", "--T", "1", "--parity", "sideways"]).status.code(), Some(2));
    assert_eq!(yb(&["bound-states", "--window", "9:3"]).status.code(), Some(2));
    assert_eq!(yb(&["scan", "--line", "396.5", "--intensity", "1", "--detuning=-1:1:0"]).status.code(), Some(2));
    let v = yb(&["validate"]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn channel_tables() {
    let s = yb(&["channels", "--T", "1", "--parity", "odd"]);
    let text = stdout(&s);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# {"), "config echo first");
    assert_eq!(lines[1], "manifold,T,parity,index,f1,f2,F,R");
    assert_eq!(lines.len(), 2 + 5);
    let p = stdout(&yb(&["channels", "--wave", "p", "--basis", "c"]));
    assert_eq!(p.lines().count(), 2 + 19);
    assert!(p.lines().nth(1).unwrap().contains("Omega"));
}

#[test]
fn output_is_deterministic() {
    for args in [&["channels", "--wave", "p", "--format", "json"][..], &["validate", "--format", "json"][..], &["calibrate"][..]] {
        let (a, b) = (yb(args), yb(args));
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn bound_states_agree_across_execution_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[grid]\nr_max = 2000.0\n").unwrap();
    let run = |mode: &str| {
        let out = dir.path().join(format!("{mode}.csv"));
        let o = yb(&["--config", cfg.to_str().unwrap(), "--exec", mode, "-o", out.to_str().unwrap(), "bound-states", "--block", "2,even", "--window", "200:700"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read_to_string(out).unwrap()
    };
    let (seq, par) = (run("sequential"), run("parallel"));
    let body = |s: &str| s.lines().skip(1).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(body(&seq), body(&par));
    assert!(body(&seq).len() > 2);
}

#[test]
fn configuration_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_owned()
    };
    let typo = write("typo.toml", "[grid]\nr_maxx = 3.0\n");
    let o = yb(&["--config", &typo, "config"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("r_maxx"), "{}", stderr(&o));
    let pol = write("pol.toml", "[optics]\npolarization = \"1,1,1\"\n");
    assert_eq!(yb(&["--config", &pol, "config"]).status.code(), Some(2));
    let neg = write("neg.toml", "[model]\nc6_excited = -5.0\n");
    assert_eq!(yb(&["--config", &neg, "config"]).status.code(), Some(2));
    assert_eq!(yb(&["--config", "/nonexistent/run.toml", "config"]).status.code(), Some(2));
}

#[test]
fn config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resolved.toml");
    let first = yb(&["-o", path.to_str().unwrap(), "config"]);
    assert_eq!(first.status.code(), Some(0));
    let again = yb(&["--config", path.to_str().unwrap(), "config"]);
    assert_eq!(stdout(&again), std::fs::read_to_string(&path).unwrap());
}
