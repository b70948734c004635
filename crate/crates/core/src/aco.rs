//! Ant colony search for the rule subset with the lowest prediction RMSE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::SubsetCost;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcoConfig {
    pub num_ants: usize,
    pub num_iterations: usize,
    /// Pheromone exponent.
    pub alpha: f64,
    /// Heuristic exponent.
    pub beta: f64,
    /// Evaporation rate.
    pub rho: f64,
    /// Deposit constant: each ant adds `deposit / (1 + cost)`.
    pub deposit: f64,
    pub initial_pheromone: f64,
    pub min_rules: usize,
    pub max_rules: usize,
    /// Iterations without improvement before stopping.
    pub patience: usize,
}

impl Default for AcoConfig {
    fn default() -> Self {
        AcoConfig {
            num_ants: 30,
            num_iterations: 200,
            alpha: 1.0,
            beta: 2.0,
            rho: 0.1,
            deposit: 1.0,
            initial_pheromone: 0.1,
            min_rules: 10,
            max_rules: 100,
            patience: 20,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self, universe_size: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_ants == 0 || self.num_iterations == 0 {
            return fail("num_ants and num_iterations must be >= 1".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) || !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail(format!("alpha and beta must be finite and >= 0, got {} and {}", self.alpha, self.beta));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return fail(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(self.deposit > 0.0 && self.deposit.is_finite()) {
            return fail(format!("deposit must be > 0, got {}", self.deposit));
        }
        if !(self.initial_pheromone > 0.0 && self.initial_pheromone.is_finite()) {
            return fail(format!("initial_pheromone must be > 0, got {}", self.initial_pheromone));
        }
        if self.min_rules == 0 || self.min_rules > self.max_rules || self.max_rules > universe_size {
            return fail(format!(
                "subset size range [{}, {}] infeasible for a universe of {universe_size} rules",
                self.min_rules, self.max_rules
            ));
        }
        Ok(())
    }

    /// Copy with the size range shrunk to fit `universe_size`.
    pub fn clipped(&self, universe_size: usize) -> AcoConfig {
        let max_rules = self.max_rules.min(universe_size);
        AcoConfig {
            max_rules,
            min_rules: self.min_rules.min(max_rules),
            ..self.clone()
        }
    }

    /// Lowest level pheromone may decay to.
    pub fn pheromone_floor(&self) -> f64 {
        self.initial_pheromone * 1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcoState {
    pub pheromone: Vec<f64>,
    /// Sorted rule indices.
    pub best_solution: Vec<usize>,
    pub best_cost: f64,
    pub stagnation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcoOutcome {
    pub state: AcoState,
    pub trace: Vec<TracePoint>,
}

/// The RNG of one ant in one iteration, independent of thread scheduling.
pub fn ant_rng(seed: u64, iteration: usize, num_ants: usize, ant: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((iteration * num_ants + ant) as u64);
    rng
}

/// Draws `size` distinct rules, each draw proportional to
/// `pheromone^alpha * heuristic^beta` over the rules not yet drawn.
/// Returns sorted indices.
pub fn sample_subset<R: Rng>(
    pheromone: &[f64],
    heuristic: &[f64],
    alpha: f64,
    beta: f64,
    size: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = pheromone.len();
    let size = size.min(n);
    let mut weight: Vec<f64> = pheromone
        .iter()
        .zip(heuristic)
        .map(|(&t, &h)| t.powf(alpha) * h.powf(beta))
        .map(|w| if w.is_finite() && w > 0.0 { w } else { 0.0 })
        .collect();
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let total: f64 = weight.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in weight.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if u < acc {
                        break;
                    }
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // Every remaining weight underflowed: draw uniformly.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[pick] = true;
        weight[pick] = 0.0;
        out.push(pick);
    }
    out.sort_unstable();
    out
}

/// Runs the colony and returns the best subset with the per-iteration
/// trace of the best cost so far.
///
/// Each iteration every ant draws a subset size uniformly from the
/// configured range and samples that many rules. Pheromone then
/// evaporates and every ant deposits on its rules. The search stops after
/// `patience` iterations without a strict improvement.
pub fn select_rules<C: SubsetCost>(
    cost: &C,
    heuristic: &[f64],
    config: &AcoConfig,
    seed: u64,
) -> Result<AcoOutcome> {
    let n = cost.num_rules();
    if n == 0 {
        return Err(Error::EmptyUniverse);
    }
    if heuristic.len() != n {
        return Err(Error::InvalidInput(format!("{} heuristic values for {n} rules", heuristic.len())));
    }
    config.validate(n)?;
    let floor = config.pheromone_floor();
    let mut state = AcoState {
        pheromone: vec![config.initial_pheromone; n],
        best_solution: Vec::new(),
        best_cost: f64::INFINITY,
        stagnation: 0,
    };
    // A range of exactly the whole universe admits a single subset.
    let single_solution = config.min_rules == n;
    let mut trace = Vec::new();
    for iteration in 0..config.num_iterations {
        let pheromone = &state.pheromone;
        let ants: Vec<(Vec<usize>, f64)> = (0..config.num_ants)
            .into_par_iter()
            .map(|ant| {
                let mut rng = ant_rng(seed, iteration, config.num_ants, ant);
                let size = rng.random_range(config.min_rules..=config.max_rules);
                let subset = sample_subset(pheromone, heuristic, config.alpha, config.beta, size, &mut rng);
                let c = cost.cost(&subset);
                (subset, c)
            })
            .collect();

        for t in state.pheromone.iter_mut() {
            *t = (*t * (1.0 - config.rho)).max(floor);
        }
        for (subset, c) in &ants {
            let amount = config.deposit / (1.0 + c);
            for &r in subset {
                state.pheromone[r] += amount;
            }
        }

        let (best_ant, best_cost) = ants
            .iter()
            .enumerate()
            .map(|(i, (_, c))| (i, *c))
            .fold((usize::MAX, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
        if best_cost < state.best_cost {
            state.best_cost = best_cost;
            state.best_solution = ants[best_ant].0.clone();
            state.stagnation = 0;
        } else {
            state.stagnation += 1;
        }
        trace.push(TracePoint {
            iteration: iteration + 1,
            best_rmse: state.best_cost,
        });
        if state.stagnation >= config.patience || single_solution {
            break;
        }
    }
    if state.best_solution.is_empty() {
        return Err(Error::Unfittable("no ant produced a finite cost".into()));
    }
    Ok(AcoOutcome { state, trace })
}
