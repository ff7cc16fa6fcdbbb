mod common;

use common::*;

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_config(dir.path(), "mode = \"synth\"\n[synth]\nsettings = [1]\n[ga]\npopulaton = 4\n", &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("populaton"), "{err}");
    let record: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(record["kind"], "config");
    assert!(!out.exists());
}

#[test]
fn missing_column_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (g, path) = plant_data(dir.path(), 1);
    let text = format!(
        "mode = \"analyze\"\n{}[goal]\nformulation = \"constrained_target\"\ntarget = 65.0\n",
        plant_section(&g, &path).replace("\"x1\"", "\"pressure\"")
    );
    let o = run_config(dir.path(), &text, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("pressure"));
}

#[test]
fn invalid_goal_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (g, path) = plant_data(dir.path(), 1);
    let text = format!("mode = \"analyze\"\n{}[goal]\nformulation = \"weighted\"\ntarget = 65.0\nalpha = 1.5\n", plant_section(&g, &path));
    let o = run_config(dir.path(), &text, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

const SYNTH: &str = "mode = \"synth\"\nseed = 3\n[synth]\nsettings = [1, 2, 3]\nruns = 2\n";

#[test]
fn synth_writes_per_setting_and_combined_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_config(dir.path(), SYNTH, &out, &["--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for id in ["setting_01", "setting_02", "setting_03"] {
        for f in ["aggregates.csv", "replications.csv", "summary.txt"] {
            assert!(out.join(id).join(f).is_file(), "{id}/{f}");
        }
    }
    let agg = std::fs::read_to_string(out.join("aggregates.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 3 * 3);
    let reps = std::fs::read_to_string(out.join("replications.csv")).unwrap();
    assert_eq!(reps.lines().count(), 1 + 3 * 3 * 2);

    let digest = robust_design_cli::RunConfig::parse(SYNTH).unwrap().digest();
    for f in ["aggregates.csv", "replications.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("config_digest,seed,"));
        assert!(lines.all(|l| l.starts_with(&format!("{digest},3,"))));
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains(&digest) && summary.contains("seed: 3"), "{summary}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = "mode = \"synth\"\n[synth]\nsettings = [2]\nruns = 2\n";
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_config(dir.path(), text, &a, &[]).status.success());
    assert!(run_config(dir.path(), text, &b, &["--jobs", "1"]).status.success());
    for f in ["aggregates.csv", "replications.csv", "summary.txt", "setting_02/replications.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let o = run_config(dir.path(), text, &a, &["--seed", "9"]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(a.join("aggregates.csv")).unwrap(), std::fs::read(b.join("aggregates.csv")).unwrap());
}

#[test]
fn analyze_meets_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let (g, path) = plant_data(dir.path(), 2);
    let text = format!(
        "mode = \"analyze\"\nseed = 1\n{}[goal]\nformulation = \"constrained_target\"\ntarget = {}\n[ga]\npopulation = 8\ngenerations = 8\n",
        plant_section(&g, &path),
        g.target
    );
    let out = dir.path().join("out");
    let o = run_config(dir.path(), &text, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, _, doc) = achieved(&g, &out.join("model.json"));
    let residual = doc["solution"]["constraint_residual"].as_f64().unwrap();
    assert!(residual <= 1e-3 * (1.0 + g.target.abs()), "{residual}");
    assert_eq!(doc["seed"], 1);
    assert_eq!(doc["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(doc["baselines"].as_array().unwrap().len(), 2);

    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 9);
    assert!(history.lines().nth(1).unwrap().starts_with(doc["config_digest"].as_str().unwrap()));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("proposed: selected"));
}
