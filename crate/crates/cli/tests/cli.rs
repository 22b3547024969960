use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

/// Run the binary in `dir` against the recorded cassette, with a cache inside `dir`.
fn run_in(dir: &Path, args: &[&str]) -> Out {
    run_env(dir, args, &[])
}

fn run_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Out {
    let cassette = fixtures().join("cassette");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mementolens"));
    cmd.current_dir(dir)
        .env_remove("MEMENTOLENS_CACHE")
        .env_remove("MEMENTOLENS_RATE")
        .arg("--replay-cassette")
        .arg(&cassette)
        .args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    if !env.iter().any(|(k, _)| *k == "MEMENTOLENS_CACHE") && !args.contains(&"--cache-dir") {
        cmd.arg("--cache-dir").arg(dir.join("cache"));
    }
    let out = cmd.output().expect("binary runs");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn ok(out: Out) -> Out {
    assert_eq!(out.code, 0, "stdout:\n{}\nstderr:\n{}", out.stdout, out.stderr);
    out
}

fn manifest(dir: &Path, run: &str) -> Value {
    let text = std::fs::read_to_string(dir.join("runs").join(run).join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stage_calls(dir: &Path, run: &str, command: &str) -> u64 {
    manifest(dir, run)["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["command"] == command)
        .unwrap_or_else(|| panic!("no {command} stage"))["network_calls"]
        .as_u64()
        .unwrap()
}

/// Every file under `root` except manifests, by relative path.
fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn series(dir: &Path, run: &str) -> BTreeMap<String, Option<f64>> {
    let mut rdr = csv_rows(&dir.join("runs").join(run).join("replayability.csv"));
    let header = rdr.remove(0);
    let pct = header.iter().position(|h| h == "pct_replayable").unwrap();
    rdr.into_iter().map(|r| (r[0].clone(), r[pct].parse().ok())).collect()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|c| c.trim_matches('"').to_string()).collect())
        .collect()
}

const BEYONCE: &str = "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/";

#[test]
fn fetch_top25_writes_one_record_file_per_handle() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(run_in(dir.path(), &["fetch", "--dataset", "top25"]));
    assert!(out.stdout.contains("25 accounts"), "{}", out.stdout);
    let records = dir.path().join("runs/top25-wayback/records");
    assert_eq!(std::fs::read_dir(&records).unwrap().count(), 25);
    let m = manifest(dir.path(), "top25-wayback");
    assert_eq!(m["dataset"], "top25");
    assert_eq!(m["endpoints"], serde_json::json!(["wayback"]));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 25);
    assert!(stage_calls(dir.path(), "top25-wayback", "fetch") > 0);
}

#[test]
fn unknown_endpoint_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["fetch", "--dataset", "top25", "--endpoint", "perma"]);
    assert_eq!(out.code, 64);
    assert!(out.stderr.contains("unknown endpoint perma"), "{}", out.stderr);
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn argument_errors_are_usage_errors_but_help_is_not() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["fetch"]).code, 64);
    assert_eq!(run_in(dir.path(), &["frobnicate"]).code, 64);
    assert_eq!(run_in(dir.path(), &["fetch", "--dataset", "top25", "--from", "2019"]).code, 64);
    assert_eq!(run_in(dir.path(), &["analyze", "--run", "absent"]).code, 64);
    let help = ok(run_in(dir.path(), &["probe", "--help"]));
    assert!(help.stdout.contains("--i-understand-live-probing"));
}

#[test]
fn warm_cache_reruns_are_offline_and_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let probe_urls = fixtures().join("lists/probe_urls.txt");
    let probe_urls = probe_urls.to_str().unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec!["fetch", "--dataset", "top25"],
        vec!["classify", "--run", "top25-wayback"],
        vec!["analyze", "--run", "top25-wayback", "--login-from", "2019-08-01", "--login-to", "2019-08-31"],
        vec!["onset", "--run", "top25-wayback"],
        vec!["scrape", BEYONCE],
        vec!["probe", "--urls", probe_urls],
    ];
    let commands = ["fetch", "classify", "analyze", "onset", "scrape", "probe"];
    let run_of = |c: &str| match c {
        "scrape" => "scrape",
        "probe" => "probe",
        _ => "top25-wayback",
    };
    for s in &steps {
        ok(run_in(d, s));
    }
    let first = snapshot(&d.join("runs"));
    let first_manifests: Vec<Value> = ["top25-wayback", "scrape", "probe"].iter().map(|r| manifest(d, r)).collect();
    for s in &steps {
        ok(run_in(d, s));
    }
    for c in commands {
        assert_eq!(stage_calls(d, run_of(c), c), 0, "{c} touched the network on a warm cache");
    }
    assert_eq!(first, snapshot(&d.join("runs")));
    for (before, r) in first_manifests.iter().zip(["top25-wayback", "scrape", "probe"]) {
        let after = manifest(d, r);
        for key in ["run_id", "dataset", "endpoints", "from", "to", "counts", "outputs"] {
            assert_eq!(before[key], after[key], "{r}: manifest {key} changed");
        }
    }
}

#[test]
fn analyze_shows_the_decline_and_onset() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(run_in(d, &["fetch", "--dataset", "top25"]));
    let out = ok(run_in(
        d,
        &["analyze", "--run", "top25-wayback", "--login-from", "2019-08-01", "--login-to", "2019-08-31"],
    ));
    assert!(out.stdout.contains("largest daily jump: 2019-08-20 -> 2019-08-21"), "{}", out.stdout);

    let s = series(d, "top25-wayback");
    let pct = |m: &str| s[m].unwrap_or_else(|| panic!("{m} undefined"));
    let before: Vec<f64> = s.iter().filter(|(m, _)| m.as_str() < "2019-08").filter_map(|(_, p)| *p).collect();
    assert!(before.iter().all(|&p| p > pct("2019-09")), "decline starts in 2019-08");
    assert!(pct("2019-07") > pct("2019-08") && pct("2019-08") > pct("2019-09"));
    for m in ["2020-09", "2020-10", "2020-11", "2020-12"] {
        assert!(pct(m) < 40.0, "{m}: {}", pct(m));
    }

    let onset: Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("runs/top25-wayback/onset.json")).unwrap()).unwrap();
    assert_eq!(onset["max_daily_jump"]["date_from"], "2019-08-20");
    assert_eq!(onset["series"].as_array().unwrap().len(), 31);
}

#[test]
fn onset_pools_runs_and_finds_the_first_login_redirect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let health = fixtures().join("datasets/health_authorities.txt");
    ok(run_in(d, &["fetch", "--dataset", "top25"]));
    ok(run_in(d, &["fetch", "--dataset", health.to_str().unwrap()]));
    assert_eq!(run_in(d, &["onset", "--run", "top25-wayback"]).code, 64, "unclassified run");
    ok(run_in(d, &["classify", "--run", "top25-wayback"]));
    ok(run_in(d, &["classify", "--run", "health_authorities-wayback"]));
    let out = ok(run_in(d, &["onset", "--run", "top25-wayback", "--run", "health_authorities-wayback"]));
    assert!(out.stdout.contains("thisisbillgates at 20190822"), "{}", out.stdout);
}

#[test]
fn empty_run_gives_an_empty_series() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cassette = d.join("empty-cassette");
    std::fs::create_dir_all(&cassette).unwrap();
    std::fs::write(
        cassette.join("cdx.jsonl"),
        r#"{"url": "https://web.archive.org/cdx/search/cdx?url=www.instagram.com%2Fnobody%2F&output=json", "status": 200, "body": "[]"}
"#,
    )
    .unwrap();
    std::fs::write(d.join("nobody.txt"), "nobody\n").unwrap();
    let c = cassette.to_str().unwrap();
    ok(run_in(d, &["--replay-cassette", c, "fetch", "--dataset", "nobody.txt"]));
    ok(run_in(d, &["--replay-cassette", c, "analyze", "--run", "nobody-wayback"]));
    let run = d.join("runs/nobody-wayback");
    assert!(series(d, "nobody-wayback").is_empty());
    assert_eq!(std::fs::read_to_string(run.join("replayability.json")).unwrap().trim(), "[]");
    assert!(!run.join("onset.json").exists());
}

#[test]
fn scraping_the_beyonce_memento() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(run_in(dir.path(), &["scrape", BEYONCE]));
    let path = PathBuf::from(out.stdout.trim());
    assert!(path.ends_with("beyonce_20170214033011.json"), "{}", out.stdout);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(path)).unwrap()).unwrap();
    let user = &v["profileUser"];
    assert_eq!(user["username"], "beyonce");
    assert_eq!(user["bio"], "#LEMONADE");
    assert_eq!(user["id"], "247944034");
    assert_eq!(user["isVerified"], true);
    assert_eq!(user["profile_picture"]["status_code"], 200);
    let post = v["userMedia"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["short_code"] == "BP-rXUGBPJa")
        .expect("golden post");
    assert_eq!(post["created_time"], 1485974340);
}

#[test]
fn batch_with_an_unsupported_page_is_a_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let batch = fixtures().join("lists/scrape_batch.txt");
    let out = run_in(dir.path(), &["scrape", "--no-probe", "--batch", batch.to_str().unwrap()]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    assert!(out.stderr.contains("no extractor matched"), "{}", out.stderr);
    let written = std::fs::read_dir(dir.path().join("runs/scrape/scrapes")).unwrap().count();
    assert_eq!(written, out.stdout.lines().count());
    assert!(written >= 2);
    let m = manifest(dir.path(), "scrape");
    assert_eq!(m["counts"]["scraped"], written as u64);
    assert_eq!(m["counts"]["failed"], 1);
}

#[test]
fn no_probe_leaves_out_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let read = |run: &str| {
        let p = d.join("runs").join(run).join("scrapes/beyonce_20170214033011.json");
        std::fs::read_to_string(p).unwrap()
    };
    ok(run_in(d, &["scrape", "--no-probe", "--run", "plain", BEYONCE]));
    ok(run_in(d, &["scrape", "--run", "probed", BEYONCE]));
    assert!(!read("plain").contains("status_code"));
    assert!(read("probed").contains("status_code"));
}

#[test]
fn probe_verdicts_and_live_safety() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let urls = fixtures().join("lists/probe_urls.txt");
    let live = fixtures().join("live");
    let urls = urls.to_str().unwrap();

    let refused = run_in(d, &["probe", "--urls", urls, "--live"]);
    assert_eq!(refused.code, 64);
    assert!(refused.stderr.contains("--i-understand-live-probing"));
    assert!(!d.join("runs/probe").exists());

    let out = ok(run_in(d, &["probe", "--urls", urls]));
    assert_eq!(out.stdout.lines().count(), 6);
    assert!(out.stdout.lines().all(|l| l.split('\t').nth(1) == Some("-")));

    let out = ok(run_in(
        d,
        &[
            "--replay-cassette",
            live.to_str().unwrap(),
            "probe",
            "--run",
            "live",
            "--urls",
            urls,
            "--live",
            "--i-understand-live-probing",
        ],
    ));
    let rows: Vec<(String, String)> = out
        .stdout
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let archived: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    let codes: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    assert_eq!(archived, ["true", "true", "true", "false", "false", "false"]);
    assert_eq!(codes, ["200", "200", "200", "410", "403", "404"]);
    assert_eq!(csv_rows(&d.join("runs/live/verdicts.csv")).len(), 7);
}

#[test]
fn empty_url_file_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("none.txt"), "").unwrap();
    let out = ok(run_in(dir.path(), &["probe", "--urls", "none.txt"]));
    assert!(out.stdout.is_empty());
    let rows = csv_rows(&dir.path().join("runs/probe/verdicts.csv"));
    assert_eq!(rows.len(), 1, "header only");
}

#[test]
fn report_verifies_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(run_in(d, &["fetch", "--dataset", "top25"]));
    ok(run_in(
        d,
        &["analyze", "--run", "top25-wayback", "--login-from", "2019-08-01", "--login-to", "2019-08-31"],
    ));
    let out = ok(run_in(d, &["report", "--run", "top25-wayback", "--format", "json"]));
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let outputs = v["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 25 + 4);
    assert!(outputs.iter().all(|o| o["lossless"] == true));

    // A hand-edited file no longer matches its own re-encoding.
    let csv = d.join("runs/top25-wayback/replayability.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    std::fs::write(&csv, text.replace('"', "")).unwrap();
    let out = run_in(d, &["report", "--run", "top25-wayback"]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("MISMATCH"), "{}", out.stdout);
}

#[test]
fn settings_precedence_flags_then_env_then_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("mementolens.toml"),
        "output_dir = \"from-file\"\ncache_dir = \"cache-file\"\nrate = 0.5\n",
    )
    .unwrap();
    let fetch = ["fetch", "--dataset", "top25"];

    ok(run_env(d, &fetch, &[("MEMENTOLENS_CACHE", "cache-env")]));
    assert!(d.join("from-file/runs/top25-wayback/manifest.json").is_file());
    assert!(d.join("cache-env").is_dir());
    assert!(!d.join("cache-file").exists());

    let mut args = vec!["--output-dir", "from-flag", "--cache-dir", "cache-flag"];
    args.extend(fetch);
    ok(run_env(d, &args, &[("MEMENTOLENS_CACHE", "cache-env")]));
    assert!(d.join("from-flag/runs/top25-wayback/manifest.json").is_file());
    assert!(d.join("cache-flag").is_dir());

    let bad = run_env(d, &fetch, &[("MEMENTOLENS_RATE", "fast")]);
    assert_eq!(bad.code, 64, "{}", bad.stderr);
    let zero = run_in(d, &["--workers", "0", "fetch", "--dataset", "top25"]);
    assert_eq!(zero.code, 64);
    std::fs::write(d.join("mementolens.toml"), "colour = \"blue\"\n").unwrap();
    assert_eq!(run_in(d, &fetch).code, 64, "unknown settings key");
}

#[test]
fn custom_endpoint_registry() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("endpoints.toml"),
        r#"
[[endpoint]]
name = "arquivo"
cdx_base = "https://arquivo.pt/wayback/cdx"
replay_template = "https://arquivo.pt/wayback/{timestamp}/{original}"
output = "json-lines"
"#,
    )
    .unwrap();
    let base = ["--endpoints", "endpoints.toml", "fetch", "--dataset", "top25"];
    let out = run_in(d, &base);
    assert_eq!(out.code, 64, "wayback is no longer configured");
    let mut args = base.to_vec();
    args.extend(["--endpoint", "arquivo"]);
    ok(run_in(d, &args));
}
