mod common;

use common::*;
use robust_design::baseline::{equal_frequency_bins, mi_rank, mutual_information, rf_rank, sequential_pipeline, Bins, PipelineConfig, Ranker, RfConfig};
use robust_design::data::{Dataset, RoleSchema, VariableRole};
use robust_design::design::DesignGoal;
use robust_design::synth::{sample_observations, CaseStudyShape};

/// Two standard-normal controls with `y = x1 + 0.01 e`.
fn linear_pair(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x1: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let x2: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let z: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let y: Vec<f64> = x1.iter().map(|v| v + 0.01 * normal(&mut r)).collect();
    let schema = RoleSchema::new()
        .with("x1", VariableRole::Control)
        .with("x2", VariableRole::Control)
        .with("z", VariableRole::Noise)
        .with("y", VariableRole::Response);
    Dataset::from_columns(&schema, vec![x1, x2, z, y]).unwrap()
}

fn score(r: &robust_design::baseline::RankedVariables, id: &str) -> f64 {
    r.entries.iter().find(|e| e.id == id).unwrap().score
}

#[test]
fn self_information_of_four_equal_bins_is_two_bits() {
    let x: Vec<f64> = (0..400).map(|i| (i * 37 % 400) as f64).collect();
    let b = equal_frequency_bins(&x, 4);
    assert!((mutual_information(&b, &b) - 2.0).abs() < 1e-12);
}

#[test]
fn independent_control_scores_near_zero_bits() {
    let d = linear_pair(10_000, 1);
    let ranked = mi_rank(&d, &["x2".to_string()], Bins::Fixed(10)).unwrap();
    assert!(score(&ranked, "x2") < 0.05, "{}", score(&ranked, "x2"));
}

#[test]
fn mi_ranks_the_driver_first() {
    for seed in 0..20 {
        let d = linear_pair(500, 10 + seed);
        let ranked = mi_rank(&d, &d.control_ids(), Bins::Auto).unwrap();
        assert_eq!(ranked.entries[0].id, "x1");
    }
}

#[test]
fn forest_importance_concentrates_on_the_driver() {
    let d = linear_pair(500, 3);
    let cfg = RfConfig { seed: 4, ..RfConfig::default() };
    let ranked = rf_rank(&d, &d.control_ids(), &cfg).unwrap();
    assert!(score(&ranked, "x1") > 0.9);
    assert_eq!(ranked, rf_rank(&d, &d.control_ids(), &cfg).unwrap());
}

#[test]
fn forest_on_constant_response_scores_zero() {
    let d = linear_pair(200, 5);
    let schema = d.schema();
    let mut cols: Vec<Vec<f64>> = ["x1", "x2", "z"].iter().map(|c| d.column(c).unwrap().to_vec()).collect();
    cols.push(vec![7.0; 200]);
    let flat = Dataset::from_columns(&schema, cols).unwrap();
    let ranked = rf_rank(&flat, &flat.control_ids(), &RfConfig::default()).unwrap();
    assert!(ranked.entries.iter().all(|e| e.score == 0.0));
}

/// Two real controls with equal, strong effects and two independent dummies.
fn strong_pair(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut cols: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| normal(&mut r)).collect()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let (x1, x2, z) = (cols[0][i], cols[1][i], cols[4][i]);
            2.0 * x1 + 2.0 * x2 + z + 0.5 * x1 * z + 0.3 * normal(&mut r)
        })
        .collect();
    cols.push(y);
    let mut schema = RoleSchema::new();
    for id in ["x1", "x2", "d1", "d2"] {
        schema = schema.with(id, VariableRole::Control);
    }
    schema = schema.with("z", VariableRole::Noise).with("y", VariableRole::Response);
    Dataset::from_columns(&schema, cols).unwrap()
}

#[test]
fn mi_pipeline_usually_keeps_the_real_controls() {
    let goal = DesignGoal::constrained_target(0.0).unwrap();
    let hits = (0..20)
        .filter(|&seed| {
            let d = strong_pair(200, 40 + seed);
            let res = sequential_pipeline(&d, &d.control_ids(), Ranker::MutualInformation, 2, &goal, &PipelineConfig::default()).unwrap();
            res.selected == ["x1", "x2"]
        })
        .count();
    assert!(hits >= 15, "{hits}");
}

#[test]
fn pipeline_selection_sizes() {
    let s = small_setting(2, 2, 2, 120, 1.0);
    let (g, d) = truth_and_data(&s, 3);
    let goal = DesignGoal::constrained_target(g.target).unwrap();
    let pool = d.control_ids();
    for ranker in [Ranker::MutualInformation, Ranker::RandomForest] {
        let res = sequential_pipeline(&d, &pool, ranker, 4, &goal, &PipelineConfig::default()).unwrap();
        assert_eq!(res.selected, pool);
        let res = sequential_pipeline(&d, &pool, ranker, 9, &goal, &PipelineConfig::default()).unwrap();
        assert_eq!(res.selected, pool);
    }

    let shape = CaseStudyShape::default();
    let g = shape.generate(1).unwrap();
    let d = sample_observations(&g, shape.observations, 2).unwrap().standardize_noise(false);
    assert_eq!(d.control_ids().len(), 10);
    let goal = DesignGoal::constrained_target(65.0).unwrap();
    for ranker in [Ranker::MutualInformation, Ranker::RandomForest] {
        let res = sequential_pipeline(&d, &d.control_ids(), ranker, 6, &goal, &PipelineConfig::default()).unwrap();
        assert_eq!(res.selected.len(), 6);
    }
}
