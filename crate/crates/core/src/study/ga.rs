use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::GaConfig;
use super::logistic::{auc, cross_validated_scores, Design};
use crate::error::{Error, Result};
use crate::rng::substream;

const GA_STREAM: u64 = 0x6761;
/// Fitness of the intercept-only model, whose constant scores rank no pair.
pub const EMPTY_SUBSET_FITNESS: f64 = 0.5;

/// Penalized cross-validated AUC of the logistic model on the chosen columns.
pub fn subset_fitness(design: &Design, y: &[bool], genes: &[bool], folds: usize, penalty: f64) -> Result<f64> {
    let cols: Vec<usize> = genes.iter().enumerate().filter(|(_, &g)| g).map(|(i, _)| i).collect();
    if cols.is_empty() {
        return Ok(EMPTY_SUBSET_FITNESS);
    }
    let scores = cross_validated_scores(&design.select(&cols), y, folds)?;
    Ok(auc(&scores, y) - penalty * cols.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub genes: Vec<bool>,
    pub selected: Vec<String>,
    pub fitness: f64,
    /// Distinct chromosomes scored.
    pub evaluations: usize,
    pub generations: usize,
    pub warnings: Vec<String>,
}

struct Search<'a> {
    design: &'a Design,
    y: &'a [bool],
    config: &'a GaConfig,
    cache: HashMap<Vec<bool>, f64>,
}

impl Search<'_> {
    fn fitness(&mut self, genes: &[bool]) -> Result<f64> {
        if let Some(&f) = self.cache.get(genes) {
            return Ok(f);
        }
        let f = subset_fitness(self.design, self.y, genes, self.config.cv_folds, self.config.penalty)?;
        self.cache.insert(genes.to_vec(), f);
        Ok(f)
    }
}

fn ones(genes: &[bool]) -> usize {
    genes.iter().filter(|&&g| g).count()
}

/// Higher fitness first, then fewer features, then the lexicographically
/// smaller chromosome.
fn better(a: &(Vec<bool>, f64), b: &(Vec<bool>, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1)
        .then(ones(&a.0).cmp(&ones(&b.0)))
        .then(a.0.cmp(&b.0))
}

fn tournament<'a>(rng: &mut ChaCha8Rng, pop: &'a [(Vec<bool>, f64)]) -> &'a [bool] {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if better(a, b).is_le() {
        &a.0
    } else {
        &b.0
    }
}

/// Binary-chromosome genetic search over covariate subsets, one gene per
/// design column. Tournament selection, uniform crossover, per-gene
/// mutation and elitism; deterministic for a given seed.
pub fn ga_select_features(design: &Design, y: &[bool], config: &GaConfig, seed: u64) -> Result<GaResult> {
    config.validate()?;
    let n = design.columns.len();
    if n == 0 {
        return Err(Error::Config("feature selection needs at least one candidate covariate".into()));
    }
    let mut rng = substream(seed, GA_STREAM);
    let mut search = Search {
        design,
        y,
        config,
        cache: HashMap::new(),
    };
    let mut population: Vec<Vec<bool>> = vec![vec![true; n]];
    while population.len() < config.population {
        population.push((0..n).map(|_| rng.gen_bool(0.5)).collect());
    }
    let mut scored = Vec::with_capacity(config.population);
    for genes in population {
        let f = search.fitness(&genes)?;
        scored.push((genes, f));
    }
    scored.sort_by(better);
    for _ in 0..config.generations {
        let mut next: Vec<(Vec<bool>, f64)> = scored[..config.elitism].to_vec();
        while next.len() < config.population {
            let a = tournament(&mut rng, &scored).to_vec();
            let b = tournament(&mut rng, &scored);
            let mut child = if rng.gen_bool(config.crossover_rate) {
                a.iter().zip(b).map(|(&x, &y)| if rng.gen_bool(0.5) { x } else { y }).collect()
            } else {
                a
            };
            for g in child.iter_mut() {
                if rng.gen_bool(config.mutation_rate) {
                    *g = !*g;
                }
            }
            let f = search.fitness(&child)?;
            next.push((child, f));
        }
        next.sort_by(better);
        scored = next;
    }
    let (genes, fitness) = scored.swap_remove(0);
    let selected: Vec<String> = genes
        .iter()
        .zip(&design.names)
        .filter(|(&g, _)| g)
        .map(|(_, name)| name.clone())
        .collect();
    let mut warnings = Vec::new();
    if selected.is_empty() {
        warnings.push("genetic search selected no covariates; using the intercept-only model".to_string());
    }
    Ok(GaResult {
        genes,
        selected,
        fitness,
        evaluations: search.cache.len(),
        generations: config.generations,
        warnings,
    })
}
