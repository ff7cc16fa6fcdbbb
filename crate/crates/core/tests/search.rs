mod common;

use std::sync::Arc;

use common::*;
use robust_design::data::Dataset;
use robust_design::design::DesignGoal;
use robust_design::search::{
    default_folds, exhaustive_search, ga_search, BoundsPolicy, Chromosome, FitnessConfig, FitnessEvaluator, GaConfig,
};
use robust_design::synth::GroundTruthModel;
use robust_design::Error;

fn evaluator<'a>(g: &GroundTruthModel, d: &'a Dataset) -> FitnessEvaluator<'a> {
    let cfg = FitnessConfig {
        bounds: BoundsPolicy::SigmaBox(4.0),
        ..FitnessConfig::default()
    };
    let goal = DesignGoal::constrained_target(g.target).unwrap();
    FitnessEvaluator::new(d, goal, d.control_ids(), default_folds(d.n(), 1).unwrap(), cfg).unwrap()
}

fn true_bits(g: &GroundTruthModel, d: &Dataset) -> Chromosome {
    let pool = d.control_ids();
    let on: Vec<usize> = g.true_controls().iter().map(|id| pool.iter().position(|p| p == id).unwrap()).collect();
    Chromosome::from_indices(pool.len(), &on)
}

#[test]
fn near_noiseless_enumeration_prefers_the_true_subset() {
    let s = small_setting(2, 2, 4, 100, 1e-3);
    for seed in 0..3 {
        let (g, d) = truth_and_data(&s, seed);
        let eval = evaluator(&g, &d);
        let all = exhaustive_search(&eval).unwrap();
        let truth = true_bits(&g, &d);
        assert_eq!(all.best, truth, "seed {seed}");
        assert_eq!(all.evaluated.len(), 64);

        let best = eval.evaluate(&truth).unwrap();
        let empty = eval.evaluate(&Chromosome::empty(6)).unwrap();
        assert!(empty.objective > best.objective);
        let var_y = {
            let y = d.response();
            let m = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (y.len() - 1) as f64
        };
        assert!(empty.components.cv_sigma2 > 0.5 * var_y);
        for dummy in 2..6 {
            let mut bits = truth.clone();
            bits.0[dummy] = true;
            assert!(eval.evaluate(&bits).unwrap().objective >= best.objective);
        }
    }
}

#[test]
fn ga_with_elitism_never_regresses() {
    let s = small_setting(2, 2, 4, 100, 1.0);
    let (g, d) = truth_and_data(&s, 9);
    let eval = evaluator(&g, &d);
    let res = ga_search(&eval, &GaConfig::sized(4, 10).with_seed(3)).unwrap();
    assert_eq!(res.history.len(), 11);
    assert!(res.history.windows(2).all(|w| w[1].best_objective <= w[0].best_objective));
    assert!(res.fitness.objective <= res.history[0].best_objective);
    let all = exhaustive_search(&eval).unwrap();
    assert!(all.fitness.objective <= res.fitness.objective);
}

#[test]
fn ga_mostly_reaches_the_exhaustive_optimum() {
    let s = small_setting(2, 2, 4, 100, 1.0);
    let mut hits = 0;
    for ds in 0..6 {
        let (g, d) = truth_and_data(&s, ds);
        let eval = evaluator(&g, &d);
        let best = exhaustive_search(&eval).unwrap().fitness.objective;
        hits += (0..20)
            .filter(|&seed| {
                let res = ga_search(&eval, &GaConfig::sized(4, 10).with_seed(seed)).unwrap();
                res.fitness.objective <= best + 0.05 * best.abs()
            })
            .count();
    }
    assert!(hits >= 96, "{hits}/120");
}

#[test]
fn exhaustive_counts_and_cap() {
    let s = small_setting(2, 1, 0, 60, 1.0);
    let (g, d) = truth_and_data(&s, 2);
    let eval = evaluator(&g, &d);
    let res = exhaustive_search(&eval).unwrap();
    assert_eq!(res.evaluated.len(), 4);
    assert!(res.evaluated.iter().all(|(_, o)| res.fitness.objective <= *o));

    let wide = small_setting(1, 1, 20, 40, 1.0);
    let (g, d) = truth_and_data(&wide, 2);
    let eval = evaluator(&g, &d);
    assert!(matches!(exhaustive_search(&eval), Err(Error::PoolTooLarge { len: 21, cap: 20 })));
}

#[test]
fn search_is_deterministic_and_memoized() {
    let s = small_setting(2, 2, 2, 80, 1.0);
    let (g, d) = truth_and_data(&s, 4);
    let a = ga_search(&evaluator(&g, &d), &GaConfig::sized(6, 5).with_seed(8)).unwrap();
    let b = ga_search(&evaluator(&g, &d), &GaConfig::sized(6, 5).with_seed(8)).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.history, b.history);
    assert_eq!(a.evaluated, b.evaluated);
    assert_eq!(*a.fitness, *b.fitness);

    let eval = evaluator(&g, &d);
    let bits = Chromosome::from_indices(4, &[0, 3]);
    let first = eval.evaluate(&bits).unwrap();
    let again = eval.evaluate(&bits).unwrap();
    assert!(Arc::ptr_eq(&first, &again));
    assert_eq!(eval.computed(), 1);
}

#[test]
fn paper_sized_ga_is_accepted() {
    assert!(GaConfig::sized(4, 10).validate().is_ok());
    assert!(GaConfig::sized(1, 10).validate().is_err());
}
