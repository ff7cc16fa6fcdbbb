#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use robust_design::synth::{sample_observations, CaseStudyShape, GroundTruthModel};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_robust-design")
}

/// Write `text` as `run.toml` in `dir` and run the binary on it.
pub fn run_config(dir: &Path, text: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, text).unwrap();
    Command::new(bin())
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A case-study-shaped truth and its sample, written to `dir/plant.csv`.
pub fn plant_data(dir: &Path, seed: u64) -> (GroundTruthModel, PathBuf) {
    let shape = CaseStudyShape::default();
    let g = shape.generate(seed).unwrap();
    let d = sample_observations(&g, shape.observations, seed ^ 0x5A5A).unwrap();
    let path = dir.join("plant.csv");
    d.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    (g, path)
}

/// `[data]` section listing every column of a case-study sample.
pub fn plant_section(g: &GroundTruthModel, path: &Path) -> String {
    let quote = |v: Vec<String>| v.iter().map(|s| format!("\"{s}\"")).collect::<Vec<_>>().join(", ");
    let mut controls = g.true_controls().to_vec();
    controls.extend(g.dummy_ids.iter().cloned());
    format!(
        "[data]\npath = \"{}\"\nresponse = \"{}\"\ncontrols = [{}]\nnoise = [{}]\n",
        path.display(),
        robust_design::synth::RESPONSE,
        quote(controls),
        quote(g.model.noise_ids.clone()),
    )
}

/// True (mean, variance) of the design recorded in a `model.json`.
pub fn achieved(g: &GroundTruthModel, model_json: &Path) -> (f64, f64, serde_json::Value) {
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(model_json).unwrap()).unwrap();
    let ids: Vec<String> = serde_json::from_value(doc["selected"].clone()).unwrap();
    let x: Vec<f64> = serde_json::from_value(doc["solution"]["x_hat"].clone()).unwrap();
    let (m, v) = g.evaluate_design(&ids, &x).unwrap();
    (m, v, doc)
}
