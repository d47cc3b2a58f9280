use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nudge_cli::config::ExperimentConfig;
use nudge_cli::manifest::RunManifest;
use nudge_cli::report::Table;
use nudge_cli::{run_pipeline, CliError, Pipeline, StageName};

fn demo_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo/config.toml")
}

fn demo() -> ExperimentConfig {
    ExperimentConfig::load(&demo_config_path()).unwrap()
}

fn stage_hashes(m: &RunManifest) -> Vec<(StageName, String, Vec<String>)> {
    m.stages
        .iter()
        .map(|(s, r)| {
            (
                *s,
                r.input_hash.clone(),
                r.outputs.iter().map(|o| o.sha256.clone()).collect(),
            )
        })
        .collect()
}

#[test]
fn full_run_then_cached_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let first = run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();
    assert!(t0.elapsed().as_secs() < 60);
    assert_eq!(first.stages.len(), 6);
    assert!(first
        .stages
        .values()
        .all(|r| !r.skipped && !r.outputs.is_empty()));

    let second = run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();
    assert!(second.stages.values().all(|r| r.skipped));
    assert_eq!(stage_hashes(&first), stage_hashes(&second));
    assert_eq!(first.config_hash, second.config_hash);

    let forced = run_pipeline(demo(), dir.path(), &StageName::ALL, true).unwrap();
    assert!(forced.stages.values().all(|r| !r.skipped));
    assert_eq!(stage_hashes(&first), stage_hashes(&forced));
}

#[test]
fn manifest_names_every_report_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();
    for rec in m.stages.values() {
        for o in &rec.outputs {
            let bytes = fs::read(dir.path().join(&o.path)).unwrap();
            assert_eq!(
                nudge_cli::manifest::sha256_hex(&bytes),
                o.sha256,
                "{}",
                o.path
            );
        }
    }
    let on_disk = RunManifest::load(dir.path()).unwrap().unwrap();
    assert_eq!(on_disk, m);
}

#[test]
fn changed_parameter_reruns_only_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();
    let mut cfg = demo();
    cfg.report.decimals = 2;
    let second = run_pipeline(cfg, dir.path(), &StageName::ALL, false).unwrap();
    for s in &StageName::ALL[..5] {
        assert!(second.stages[s].skipped, "{s}");
    }
    assert!(!second.stages[&StageName::Report].skipped);
    assert_ne!(
        first.stages[&StageName::Report].outputs,
        second.stages[&StageName::Report].outputs
    );
}

#[test]
fn estimate_without_measure_names_upstream() {
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(demo(), dir.path(), &[StageName::Estimate], false).unwrap_err();
    assert!(matches!(
        err,
        CliError::MissingUpstream {
            upstream: StageName::Measure,
            ..
        }
    ));
    assert!(err.to_string().contains("run measure first"), "{err}");
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    for s in StageName::ALL {
        run_pipeline(demo(), dir.path(), &[s], false).unwrap();
    }
    let m = RunManifest::load(dir.path()).unwrap().unwrap();
    assert_eq!(m.stages.len(), 6);
}

#[test]
fn concurrent_run_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let _held = Pipeline::open(demo(), dir.path(), false).unwrap();
    let err = run_pipeline(demo(), dir.path(), &StageName::ALL, false)
        .err()
        .unwrap();
    assert!(matches!(err, CliError::Locked(_)));
}

fn report_table(dir: &Path, name: &str) -> Table {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("report/{name}.json"))).unwrap())
        .unwrap()
}

#[test]
fn report_layouts() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();

    let t = report_table(dir.path(), "pre_post_means");
    assert_eq!(t.columns, ["Timing", "Metric", "Control", "Female", "Male"]);
    assert_eq!(t.rows.len(), 10);
    let metrics: Vec<&str> = t.rows[..5].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        metrics,
        [
            "Followed Accounts",
            "News Likes",
            "News (Re)tweets",
            "Political Likes",
            "Political Tweets"
        ]
    );
    assert!(t.rows[1][2].ends_with('%'));

    let t = report_table(dir.path(), "exclusion_variants");
    assert_eq!(t.columns, ["Estimand", "Treatment", "200", "500", "none"]);

    let t = report_table(dir.path(), "balance_account");
    assert_eq!(t.rows.len(), 4);
    assert_eq!(t.rows[3][0], "ANOVA");

    let t = report_table(dir.path(), "effects_treated");
    assert_eq!(t.columns.len(), 6);
    assert_eq!(
        t.rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["Female", "Male", "Combined"]
    );

    let t = report_table(dir.path(), "audit");
    assert_eq!(t.rows[0], ["407", "93", "81.4%"]);
}

#[test]
fn json_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(demo(), dir.path(), &StageName::ALL, false).unwrap();
    for entry in fs::read_dir(dir.path().join("report")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path).unwrap();
            let t: Table = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_string_pretty(&t).unwrap() + "\n", text);
            let csv = fs::read_to_string(path.with_extension("csv")).unwrap();
            assert_eq!(csv.lines().count(), t.rows.len() + 1, "{}", path.display());
        }
    }
}

#[test]
fn seed_override_changes_assignment() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(
        demo(),
        a.path(),
        &[StageName::Cohort, StageName::Assign],
        false,
    )
    .unwrap();
    let mut cfg = demo();
    cfg.seed += 1;
    run_pipeline(
        cfg,
        b.path(),
        &[StageName::Cohort, StageName::Assign],
        false,
    )
    .unwrap();
    let read = |d: &Path| fs::read(d.join("assign/assignment.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

fn nudge(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nudge"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = demo_config_path();
    let cfg = cfg.to_str().unwrap();

    let r = nudge(&["estimate", "--config", cfg, "--out", out]);
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(
        err.contains("estimate:") && err.contains("run measure first"),
        "{err}"
    );

    let r = nudge(&["run", "--config", cfg, "--out", out, "--seed", "7"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let r = nudge(&[
        "report", "--config", cfg, "--out", out, "--seed", "7", "--format", "text",
    ]);
    assert!(r.status.success());
    assert!(dir.path().join("report/funnel.txt").is_file());
    assert!(!dir.path().join("report/funnel.csv").exists());

    let r = nudge(&["audit", "--config", cfg]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("81.4%") && text.contains("Totals"), "{text}");

    let r = nudge(&["run", "--out", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("--config"));
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(
        &p,
        "[candidates]\nsynthetic = 10\n[cohort]\nfollowers_min = 10\nfollowers_max = 5\n",
    )
    .unwrap();
    let e = ExperimentConfig::load(&p).unwrap_err().to_string();
    assert!(e.starts_with("config:"), "{e}");
}
