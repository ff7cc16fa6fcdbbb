use std::cmp::Ordering;
use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use super::fitness::{Chromosome, Fitness, FitnessEvaluator};
use crate::error::{Error, Result};
use crate::rng;

/// Exhaustive enumeration refuses pools larger than this.
pub const EXHAUSTIVE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    /// Per-bit flip probability; `None` means `1 / L`.
    pub mutation_prob: Option<f64>,
    pub elitism: usize,
    pub seed: u64,
    /// Stop early once the best objective is at or below this value.
    pub target_objective: Option<f64>,
    /// Re-mutate children (and initial draws) that duplicate a current
    /// member, so each generation spends its budget on distinct patterns.
    pub distinct: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 10,
            generations: 25,
            tournament_size: 3,
            crossover_prob: 0.9,
            mutation_prob: None,
            elitism: 1,
            seed: 0,
            target_objective: None,
            distinct: true,
        }
    }
}

impl GaConfig {
    pub fn sized(population: usize, generations: usize) -> Self {
        Self {
            population,
            generations,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population must be >= 2, got {}",
                self.population
            )));
        }
        if self.elitism >= self.population {
            return Err(Error::InvalidConfig("elitism must be < population".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidConfig("tournament_size must be >= 1".into()));
        }
        let probs = [Some(self.crossover_prob), self.mutation_prob];
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_objective: f64,
    pub mean_objective: f64,
    pub best_bits: String,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Chromosome,
    pub fitness: Arc<Fitness>,
    /// One row per generation; generation 0 is the initial population.
    pub history: Vec<GenerationRecord>,
    /// Every (pattern, objective) scored, in evaluation order.
    pub evaluated: Vec<(Chromosome, f64)>,
}

/// Total order used for ranking: objective, then fewer selected bits, then
/// lexicographic bit order.
pub fn rank_cmp(a: (&Chromosome, f64), b: (&Chromosome, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then(a.0.count().cmp(&b.0.count()))
        .then(a.0.to_string().cmp(&b.0.to_string()))
}

fn evaluate_all(eval: &FitnessEvaluator<'_>, pop: &[Chromosome]) -> Result<Vec<Arc<Fitness>>> {
    pop.par_iter().map(|c| eval.evaluate(c)).collect()
}

/// Flip random bits of `c` until it differs from every member of `others`
/// and from every pattern already scored; gives up after a few tries (small pools can run out of patterns).
fn make_distinct(c: &mut Chromosome, others: &[Chromosome], seen: &HashSet<Chromosome>, r: &mut rng::Rng) {
    for _ in 0..4 * c.len() {
        if !others.contains(c) && !seen.contains(c) {
            return;
        }
        let bit = r.random_range(0..c.len());
        c.0[bit] = !c.0[bit];
    }
}

/// Generational GA over subset masks: tournament selection, uniform
/// crossover, per-bit flip mutation and elitism.
pub fn ga_search(eval: &FitnessEvaluator<'_>, cfg: &GaConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let len = eval.pool().len();
    if len == 0 {
        return Err(Error::InvalidConfig("control pool is empty".into()));
    }
    let mutation = cfg.mutation_prob.unwrap_or(1.0 / len as f64);
    let mut r = rng::rng_from(cfg.seed, &[0x6A]);

    let mut population: Vec<Chromosome> = Vec::with_capacity(cfg.population);
    while population.len() < cfg.population {
        let mut c = Chromosome((0..len).map(|_| r.random_bool(0.5)).collect());
        if cfg.distinct {
            make_distinct(&mut c, &population, &HashSet::new(), &mut r);
        }
        population.push(c);
    }

    let mut history = Vec::with_capacity(cfg.generations + 1);
    let mut evaluated = Vec::new();
    let mut seen: HashSet<Chromosome> = HashSet::new();
    let mut best: Option<(Chromosome, Arc<Fitness>)> = None;

    for generation in 0..=cfg.generations {
        let scores = evaluate_all(eval, &population)?;
        evaluated.extend(population.iter().cloned().zip(scores.iter().map(|f| f.objective)));
        seen.extend(population.iter().cloned());

        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            rank_cmp(
                (&population[a], scores[a].objective),
                (&population[b], scores[b].objective),
            )
        });
        let lead = order[0];
        let mean = scores.iter().map(|f| f.objective).sum::<f64>() / scores.len() as f64;
        history.push(GenerationRecord {
            generation,
            best_objective: scores[lead].objective,
            mean_objective: mean,
            best_bits: population[lead].to_string(),
        });
        let improves = match &best {
            None => true,
            Some((c, f)) => {
                rank_cmp((&population[lead], scores[lead].objective), (c, f.objective))
                    == Ordering::Less
            }
        };
        if improves {
            best = Some((population[lead].clone(), Arc::clone(&scores[lead])));
        }

        let done = generation == cfg.generations
            || cfg
                .target_objective
                .is_some_and(|t| best.as_ref().is_some_and(|(_, f)| f.objective <= t));
        if done {
            break;
        }

        let tournament = |r: &mut rng::Rng| -> usize {
            let mut winner = r.random_range(0..population.len());
            for _ in 1..cfg.tournament_size {
                let c = r.random_range(0..population.len());
                if rank_cmp((&population[c], scores[c].objective), (&population[winner], scores[winner].objective))
                    == Ordering::Less
                {
                    winner = c;
                }
            }
            winner
        };

        let mut next: Vec<Chromosome> = order[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population {
            let a = tournament(&mut r);
            let b = tournament(&mut r);
            let mut child = if r.random_bool(cfg.crossover_prob) {
                Chromosome(
                    population[a]
                        .0
                        .iter()
                        .zip(&population[b].0)
                        .map(|(x, y)| if r.random_bool(0.5) { *x } else { *y })
                        .collect(),
                )
            } else {
                population[a].clone()
            };
            for bit in child.0.iter_mut() {
                if r.random_bool(mutation) {
                    *bit = !*bit;
                }
            }
            if cfg.distinct {
                make_distinct(&mut child, &next, &seen, &mut r);
            }
            next.push(child);
        }
        population = next;
    }

    let (best, fitness) = best.expect("at least one generation");
    Ok(SearchResult {
        best,
        fitness,
        history,
        evaluated,
    })
}

/// Score all 2^L patterns and return the global minimum.
pub fn exhaustive_search(eval: &FitnessEvaluator<'_>) -> Result<SearchResult> {
    let len = eval.pool().len();
    if len > EXHAUSTIVE_CAP {
        return Err(Error::PoolTooLarge {
            len,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let patterns: Vec<Chromosome> = (0..1u64 << len).map(|i| Chromosome::from_index(len, i)).collect();
    let scores = evaluate_all(eval, &patterns)?;
    let lead = (0..patterns.len())
        .min_by(|&a, &b| {
            rank_cmp((&patterns[a], scores[a].objective), (&patterns[b], scores[b].objective))
        })
        .expect("2^L >= 1 patterns");
    let mean = scores.iter().map(|f| f.objective).sum::<f64>() / scores.len() as f64;
    let history = vec![GenerationRecord {
        generation: 0,
        best_objective: scores[lead].objective,
        mean_objective: mean,
        best_bits: patterns[lead].to_string(),
    }];
    Ok(SearchResult {
        best: patterns[lead].clone(),
        fitness: Arc::clone(&scores[lead]),
        history,
        evaluated: patterns
            .into_iter()
            .zip(scores.iter().map(|f| f.objective))
            .collect(),
    })
}
