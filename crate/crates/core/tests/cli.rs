use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffeo-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn csv_schemas() {
    let cases: [(&[&str], &str); 5] = [
        (&["family", "--t", "0.1", "--grid", "5"], "t,x,c,dc_dx"),
        (&["flow", "--seeds", "0.5"], "seed,t,x"),
        (&["seminorm", "--t-list", "0.125", "--indices", "1:0,3:2", "--grid", "201"], "t,1:0,3:2"),
        (&["manifold", "--seeds", "0.5"], "seed_x0,t,s,r"),
        (&["constants"], "name,value"),
    ];
    for (args, header) in cases {
        let o = run(args);
        assert!(o.status.success(), "{args:?}");
        assert_eq!(stdout(&o).lines().next(), Some(header), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    for args in
        [&["family", "--t-list", "0.1,-0.2", "--grid", "33"][..], &["flow", "--field", "logistic"], &["manifold"]]
    {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn files_are_written_under_prefix() {
    let dir = std::env::temp_dir().join(format!("diffeo-lab-cli-{}", std::process::id()));
    let prefix = dir.join("run-");
    let o = run(&["manifold", "--seeds", "0.5", "--out", prefix.to_str().unwrap()]);
    assert!(o.status.success());
    let traj = std::fs::read_to_string(dir.join("run-manifold.csv")).unwrap();
    let verdict = std::fs::read_to_string(dir.join("run-manifold-verdict.csv")).unwrap();
    assert!(traj.starts_with("seed_x0,t,s,r\n"));
    assert!(verdict.starts_with("x0,predicted,measured,abs_error\n"));
    let o = run(&["family", "--format", "svg", "--out", prefix.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(dir.join("run-family.svg")).unwrap().starts_with("<svg"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors() {
    let o = run(&["seminorm", "--grid", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--grid"));
    let o = run(&["flow", "--seeds", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seeds"));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn all_reports_every_criterion() {
    let o = run(&["all", "--format", "text"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 12);
    for (i, line) in lines[..11].iter().enumerate() {
        assert!(line.starts_with("PASS") || line.starts_with("FAIL"));
        assert!(line[4..].trim_start().starts_with(&format!("{} ", i + 1)));
    }
    let failed = lines[11].strip_prefix("failed_criteria: ").unwrap();
    assert_eq!(o.status.success(), failed == "[]");
}
