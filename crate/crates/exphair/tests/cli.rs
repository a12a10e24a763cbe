use std::path::PathBuf;
use std::process::{Command, Output};

fn exphair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exphair")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exphair-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn digest_of(text: &str) -> String {
    text.lines().find_map(|l| l.strip_prefix("digest ")).expect("digest line").to_string()
}

#[test]
fn trace_writes_csv_with_digest() {
    let out = exphair(&["trace", "[1] | repeat", "--eta-max", "33"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["eta", "re", "im", "depth", "err_bound", "config_digest"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.len() > 10);
    let first_re: f64 = rows[0][1].parse().unwrap();
    assert!((first_re - 30.0).abs() < 1e-6);
    let digest = &rows[0][5];
    assert_eq!(digest.len(), 64);
    assert!(rows.iter().all(|r| &r[5] == digest));
}

#[test]
fn trace_render_writes_ppm() {
    let ppm = scratch("hair.ppm");
    let out = exphair(&[
        "trace",
        "[1] | repeat",
        "--eta-max",
        "34",
        "--render",
        ppm.to_str().unwrap(),
        "--viewport",
        "25,40,0,12",
        "--res",
        "64x48",
    ]);
    assert!(out.status.success());
    let bytes = std::fs::read(&ppm).unwrap();
    let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
    let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
    assert!(header.starts_with("P6\n# config-digest "));
    assert!(header.ends_with("64 48\n255\n"));
    assert_eq!(bytes.len() - header_end, 64 * 48 * 3);
    assert!(bytes[header_end..].iter().any(|&b| b > 0));
}

#[test]
fn malformed_input_exits_2() {
    assert_eq!(exphair(&["trace", "[1 2"]).status.code(), Some(2));
    assert_eq!(exphair(&["construct", "[0]"]).status.code(), Some(2));
    assert_eq!(exphair(&["--lambda", "0.1", "trace", "[1] | repeat"]).status.code(), Some(2));
    assert_eq!(exphair(&["dynamics", "orbit", "--z", "(1,"]).status.code(), Some(2));
    assert_eq!(exphair(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn construct_is_deterministic() {
    let a = exphair(&["construct", "[1] [-1]"]);
    let b = exphair(&["construct", "[1] [-1]"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("crossings=2"));
    assert_eq!(digest_of(&text).len(), 64);
}

#[test]
fn deep_construction_is_infeasible() {
    let out = exphair(&["construct", "[1] [-1]", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(4));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\ntruncated "));
    assert!(text.trim_end().ends_with("end"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = scratch("run.cfg");
    std::fs::write(&cfg, "# run\nlambda = 2\nseed = 5\n").unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = exphair(&["--config", path, "construct", "[1] [-1]"]);
    let overridden = exphair(&["--config", path, "--lambda", "1", "--seed", "5", "construct", "[1] [-1]"]);
    let plain = exphair(&["--seed", "5", "construct", "[1] [-1]"]);
    let t = |o: &Output| String::from_utf8(o.stdout.clone()).unwrap();
    assert!(t(&from_file).contains("lambda 2e0"));
    assert_eq!(t(&overridden), t(&plain));
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(exphair(&["--config", path, "construct", "[1]"]).status.code(), Some(2));
}

#[test]
fn dynamics_subcommands() {
    let orbit = exphair(&["dynamics", "orbit", "--z", "(-5,0.3)", "--steps", "4"]);
    assert!(orbit.status.success());
    assert_eq!(String::from_utf8(orbit.stdout).unwrap().lines().count(), 6);

    let shadow = |seed: &str| exphair(&["--seed", seed, "dynamics", "shadow", "--samples", "5"]).stdout;
    let s1 = shadow("9");
    assert_eq!(s1, shadow("9"));
    assert_ne!(s1, shadow("10"));
    let text = String::from_utf8(s1).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",true,true,3,")));

    let contraction = exphair(&["dynamics", "contraction", "--n", "2", "--side", "plus", "--steps", "30"]);
    assert!(contraction.status.success());
    let text = String::from_utf8(contraction.stdout).unwrap();
    let diams: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(diams.windows(2).all(|w| w[1] < w[0]));

    let omega = exphair(&["dynamics", "omega", "--z", "(-50,0.1)", "--budget", "50"]);
    let text = String::from_utf8(omega.stdout).unwrap();
    assert!(text.contains("episodes [1]"));
    assert!(!text.contains("class Escaping"));

    let zs =
        exphair(&["dynamics", "find-zs", "0^10 [1] 0^10 [-1] | period [0 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0 -1]", "--depth", "2"]);
    assert!(zs.status.success(), "{}", String::from_utf8_lossy(&zs.stderr));
    let text = String::from_utf8(zs.stdout).unwrap();
    assert!(text.contains("diameter_bound"));
    assert_eq!(digest_of(&text).len(), 64);
}
