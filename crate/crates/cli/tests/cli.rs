use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const A: &str = "[[3,4],[4,3]]";

fn mjf(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mjf"))
        .args(args)
        .env("MJF_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn theta_eval_args<'a>(e: &'a str) -> Vec<&'a str> {
    vec!["theta", "eval", "--inline", A, "--mode", "paper-L", "--e", e, "--ep", "[[4,-3]]", "--tau", "0.1+1.1i", "--z", "0.1+0.2i;0.3-0.1i"]
}

#[test]
fn lattice_analyze_paper_l() {
    let d = tempfile::tempdir().unwrap();
    let o = mjf(d.path(), &["lattice", "analyze", "--inline", A, "--mode", "paper-L"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["result"]["signature"], serde_json::json!([1, 1, 0]));
    assert_eq!(v["result"]["det"], "-7");
}

#[test]
fn lattice_analyze_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let o = mjf(d.path(), &["lattice", "analyze", "--inline", "[[2,1],[1,2]]"]);
    let f = d.path().join("l.json");
    std::fs::write(&f, &o.stdout).unwrap();
    let o2 = mjf(d.path(), &["lattice", "analyze", "--from-json", f.to_str().unwrap()]);
    assert_eq!(json(&o)["result"], json(&o2)["result"]);
}

#[test]
fn positive_frame_vector_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = mjf(d.path(), &theta_eval_args("[[1,1]]"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("positive frame vector"), "{}", stderr(&o));
}

#[test]
fn malformed_input_names_the_field() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 4] = [
        (&["lattice", "analyze", "--inline", "[[1,2],[3"], "matrix"),
        (&["lattice", "analyze", "--inline", A, "--mode", "weird"], "mode"),
        (&["mu", "eval", "--kind", "hat", "--m", "1", "--l", "0", "--tau", "0.1-1i", "--z", "0.1"], "tau"),
        (&["theta", "eval", "--inline", A, "--mode", "paper-L", "--e", "[[-3,4]]", "--ep", "[[4,-3]]", "--tau", "0.1+1i", "--z", "0.1"], "z"),
    ];
    for (args, field) in cases {
        let o = mjf(d.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
    let o = mjf(d.path(), &["--eps", "0.5", "cache", "stats"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps"));
}

#[test]
fn theta_eval_is_cached_and_transparent() {
    let d = tempfile::tempdir().unwrap();
    let args = theta_eval_args("[[-3,4]]");
    let a = json(&mjf(d.path(), &args));
    let b = json(&mjf(d.path(), &args));
    assert_eq!(a["metadata"]["cache"], "miss");
    assert_eq!(b["metadata"]["cache"], "hit");
    assert_eq!(a["result"], b["result"]);
    let mut off = args.clone();
    off.push("--no-cache");
    let c = json(&mjf(d.path(), &off));
    assert_eq!(c["metadata"]["cache"], "disabled");
    assert_eq!(a["result"], c["result"]);
    // a tighter ε cannot be served by the looser entry
    let mut tight = vec!["--eps", "1e-14"];
    tight.extend(&args);
    assert_eq!(json(&mjf(d.path(), &tight))["metadata"]["cache"], "stale");
}

#[test]
fn corrupt_cache_entry_is_recomputed() {
    let d = tempfile::tempdir().unwrap();
    let args = theta_eval_args("[[-3,4]]");
    let a = json(&mjf(d.path(), &args));
    for f in std::fs::read_dir(d.path()).unwrap() {
        std::fs::write(f.unwrap().path(), "{ truncated").unwrap();
    }
    let o = mjf(d.path(), &args);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
    let b = json(&o);
    assert_eq!(b["metadata"]["cache"], "corrupt");
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn cache_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--cache-dir", flag_dir.path().to_str().unwrap()];
    args.extend(theta_eval_args("[[-3,4]]"));
    assert!(mjf(env_dir.path(), &args).status.success());
    assert_eq!(std::fs::read_dir(env_dir.path()).unwrap().count(), 0);
    assert_eq!(std::fs::read_dir(flag_dir.path()).unwrap().count(), 1);
    let s = json(&mjf(env_dir.path(), &["--cache-dir", flag_dir.path().to_str().unwrap(), "cache", "stats"]));
    assert_eq!(s["result"]["entries"], 1);
    let c = json(&mjf(env_dir.path(), &["--cache-dir", flag_dir.path().to_str().unwrap(), "cache", "clear"]));
    assert_eq!(c["result"]["removed"], 1);
}

#[test]
fn qexp_round_trips_through_series_eval() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "theta", "qexp", "--inline", "[[1,2],[2,1]]", "--mode", "gram", "--e", "[[-1,2]]", "--ep", "[[-2,1]]",
        "--alpha", r#"["1/6","1/6"]"#, "--beta", r#"["1/6","1/6"]"#, "--order", "4",
    ];
    let o = mjf(d.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = json(&o);
    let f = d.path().join("q.json");
    std::fs::write(&f, &o.stdout).unwrap();
    // re-running from the emitted document reads the cache and gives the same series
    let again = json(&mjf(d.path(), &["theta", "qexp", "--from-json", f.to_str().unwrap()]));
    assert_eq!(again["metadata"]["cache"], "hit");
    assert_eq!(first["result"], again["result"]);
    let v = mjf(d.path(), &["series", "eval", "--from-json", f.to_str().unwrap(), "--tau", "0.05+1.3i"]);
    assert!(v.status.success(), "{}", stderr(&v));
    let val = json(&v)["result"]["value"].clone();
    assert!(val["re"].as_str().unwrap().parse::<f64>().is_ok());
    assert_eq!(json(&v)["metadata"]["exact_coefficients"], true);
}

#[test]
fn verify_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let o = mjf(d.path(), &["verify", "gz_product", "--copies", "1", "--order", "10", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    assert_eq!(v["schema"], "verify/1");
    assert_eq!(v["pass"], true);
    let o = mjf(d.path(), &["verify", "no_such_suite"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("suite"));
    let o = mjf(d.path(), &["verify", "gz_product", "--copies", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("copies"));
    let o = mjf(d.path(), &["verify", "weil"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS] weil"));
}

#[test]
fn mu_and_operators() {
    let d = tempfile::tempdir().unwrap();
    let r = json(&mjf(d.path(), &["mu", "residual", "--tau", "0.1+1.1i", "--u", "0.3+0.2i", "--v", "0.1+0.1i"]));
    let r2 = json(&mjf(d.path(), &["mu", "residual", "--tau", "0.1+1.1i", "--u", "0.35+0.25i", "--v", "0.15+0.15i"]));
    let c = |v: &Value, k: &str| v["result"]["value"][k].as_str().unwrap().parse::<f64>().unwrap();
    // the splitting residual depends on u − v only
    assert!((c(&r, "re") - c(&r2, "re")).abs() < 1e-9 && (c(&r, "im") - c(&r2, "im")).abs() < 1e-9);

    let ok = mjf(
        d.path(),
        &["op", "check", "--op", "Casimir", "--k", "1", "--target", "theta-definite", "--inline", "[[2,0],[0,4]]", "--tau", "0.1+1.1i", "--z", "0.13+0.61i;0.07+0.17i"],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    // the raising operator does not annihilate it
    let bad = mjf(
        d.path(),
        &["op", "check", "--op", "Xplus", "--k", "1", "--target", "theta-definite", "--inline", "[[2,0],[0,4]]", "--tau", "0.1+1.1i", "--z", "0.13+0.61i;0.07+0.17i"],
    );
    assert_eq!(bad.status.code(), Some(1), "{}", stderr(&bad));
}
