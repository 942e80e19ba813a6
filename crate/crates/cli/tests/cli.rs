use std::path::Path;
use std::process::{Command, Output};

fn alloc_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alloc-sim")).args(args).env_remove("ALLOC_BUDGET").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_arguments_are_a_usage_error() {
    let o = alloc_sim(&[]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(alloc_sim(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(alloc_sim(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_prints_depletion_times() {
    let o = alloc_sim(&["simulate", "--generator", "example1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("t1 = 2/3 (0.666667)  item 2"), "{text}");
    assert!(text.contains("t2 = 460/501"), "{text}");
    assert!(text.contains("t3 = 1 "), "{text}");
}

#[test]
fn example2_truthful_payoffs() {
    let text = stdout(&alloc_sim(&["simulate", "--generator", "example2"]));
    assert_eq!(text.matches(": 5/9 (0.555556)").count(), 2, "{text}");
}

#[test]
fn verify_ne_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let o = alloc_sim(&["verify-ne", "--generator", "example2", "--out", path(&cert)]);
    assert_eq!(o.status.code(), Some(3));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(json["verdict"], "refuted");
    assert_eq!(json["witness"]["agent"], 1);
    assert_eq!(json["witness"]["gain"], "1/36");

    // tolerating the gain certifies the same profile
    let o = alloc_sim(&["verify-ne", "--generator", "example2", "--epsilon", "1/36"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn identity_instance_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("identity.json");
    std::fs::write(&inst, r#"{"n": 3, "m": 3, "valuations": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]}"#).unwrap();
    let o = alloc_sim(&["verify-ne", "--instance", path(&inst)]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
}

#[test]
fn budget_is_read_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_alloc-sim"))
        .args(["verify-ne", "--generator", "example1"])
        .env("ALLOC_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn poa_csv_is_stable() {
    let o = alloc_sim(&["poa", "--generator", "sqrt-n-lb", "--n", "16", "--eps", "1/4096", "--mechanism", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,m,mechanism,welfare,welfare_decimal,opt,opt_decimal,ratio,ratio_decimal");
    assert!(lines[1].starts_with("16,16,cps,1281/1280,"), "{text}");
    assert_eq!(lines[2].split(',').nth(2), Some("ps"));
    assert_eq!(lines.len(), 3);

    let log = stdout(&alloc_sim(&["poa", "--generator", "log-m-lb", "--k", "8", "--q", "4"]));
    assert!(log.lines().nth(1).unwrap().starts_with("12,31,cps,5891/3520,"), "{log}");
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let args = ["rrp", "--generator", "random", "--n", "3", "--m", "4", "--seed", "17", "--samples", "500"];
    let mut first = args.to_vec();
    first.extend(["--save-config", path(&config)]);
    let a = alloc_sim(&first);
    assert_eq!(a.status.code(), Some(0));
    let b = alloc_sim(&["rrp", "--config", path(&config)]);
    assert_eq!(a.stdout, b.stdout);

    // a flag on top of the file takes precedence
    let c = alloc_sim(&["rrp", "--config", path(&config), "--seed", "18"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn bad_inputs_map_to_their_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"n": 1, "m": 2, "valuations": [["1/2", "1/3"]]}"#).unwrap();
    assert_eq!(alloc_sim(&["simulate", "--instance", path(&invalid)]).status.code(), Some(2));

    let malformed = dir.path().join("malformed.json");
    std::fs::write(&malformed, "{not json").unwrap();
    assert_eq!(alloc_sim(&["simulate", "--instance", path(&malformed)]).status.code(), Some(1));

    let missing = dir.path().join("missing.json");
    assert_eq!(alloc_sim(&["simulate", "--instance", path(&missing)]).status.code(), Some(1));

    assert_eq!(alloc_sim(&["simulate", "--generator", "no-such"]).status.code(), Some(64));
    assert_eq!(alloc_sim(&["simulate", "--generator", "example1", "--mechanism", "xyz"]).status.code(), Some(64));
}

#[test]
fn generated_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let prof = dir.path().join("prof.json");
    let o = alloc_sim(&[
        "generate", "--generator", "sqrt-n-lb", "--n", "9", "--out", path(&inst), "--profile-out", path(&prof),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let direct = stdout(&alloc_sim(&["poa", "--generator", "sqrt-n-lb", "--n", "9", "--profile", "bad"]));
    let from_files = stdout(&alloc_sim(&["poa", "--instance", path(&inst), "--profile", path(&prof)]));
    assert_eq!(direct, from_files);
}

#[test]
fn sample_is_seeded() {
    let a = alloc_sim(&["sample", "--generator", "example1", "--repetitions", "4", "--seed", "3"]);
    let b = alloc_sim(&["sample", "--generator", "example1", "--repetitions", "4", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).matches("seed ").count(), 4);
}
