//! Differential evolution, DE/rand/1/bin, on a box.
//!
//! Trial vectors of a generation are drawn sequentially from one seeded
//! stream, evaluated in parallel and then selected in index order, so a run
//! depends only on its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    UniformInBounds,
    /// `reference * (1 + fraction * U(-1, 1))`, clipped to the box.
    AroundReference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    pub population_size: usize,
    pub f_s: f64,
    pub c_r: f64,
    pub max_generations: usize,
    pub target_eps: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            f_s: 0.8,
            c_r: 0.7,
            max_generations: 300,
            target_eps: 1e-8,
            seed: 0,
            init: Init::UniformInBounds,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::Config(format!(
                "population size {} is below 4; rand/1 mutation needs three members besides the target",
                self.population_size
            )));
        }
        if !(self.f_s > 0.0 && self.f_s <= 2.0) {
            return Err(Error::Config(format!("mutation factor {} outside (0, 2]", self.f_s)));
        }
        if !(0.0..=1.0).contains(&self.c_r) {
            return Err(Error::Config(format!("crossover rate {} outside [0, 1]", self.c_r)));
        }
        if let Init::AroundReference(f) = self.init {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("initial spread {f} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_eps: f64,
    /// Best objective of the initial population, then after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub generations: usize,
}

/// Reflects `x` into `[lo, hi]` once about the violated bound, then clips.
#[inline]
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let y = if x < lo {
        lo + (lo - x)
    } else if x > hi {
        hi - (x - hi)
    } else {
        x
    };
    y.clamp(lo, hi)
}

fn check_bounds(lower: &[f64], upper: &[f64], reference: &[f64]) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::Config("no free coordinates to optimize".into()));
    }
    if lower.len() != upper.len() {
        return Err(Error::LengthMismatch(lower.len(), upper.len()));
    }
    if !reference.is_empty() && reference.len() != lower.len() {
        return Err(Error::LengthMismatch(lower.len(), reference.len()));
    }
    for (k, (lo, hi)) in lower.iter().zip(upper).enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("coordinate {k} has invalid bounds [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Minimizes `objective` over the box `[lower, upper]`. `reference` is used
/// by [`Init::AroundReference`] and may be empty otherwise.
pub fn de_optimize<F>(
    objective: F,
    lower: &[f64],
    upper: &[f64],
    reference: &[f64],
    cfg: &DeConfig,
) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    check_bounds(lower, upper, reference)?;
    let d = lower.len();
    if matches!(cfg.init, Init::AroundReference(_)) && reference.len() != d {
        return Err(Error::Config(
            "reference vector required for around-reference initialization".into(),
        ));
    }
    let np = cfg.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            (0..d)
                .map(|j| {
                    let (lo, hi) = (lower[j], upper[j]);
                    match cfg.init {
                        Init::UniformInBounds => lo + rng.gen::<f64>() * (hi - lo),
                        Init::AroundReference(frac) => {
                            let u: f64 = rng.gen_range(-1.0..=1.0);
                            (reference[j] * (1.0 + frac * u)).clamp(lo, hi)
                        }
                    }
                })
                .collect()
        })
        .collect();

    let evaluate = |xs: &[Vec<f64>], generation: usize| -> Result<Vec<f64>> {
        let vals: Vec<f64> = xs.par_iter().map(|x| objective(x)).collect();
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective {
                value: *v,
                generation,
            });
        }
        Ok(vals)
    };

    let mut cost = evaluate(&pop, 0)?;
    let mut evaluations = np;
    let argmin = |c: &[f64]| {
        c.iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let mut best = argmin(&cost);
    let mut history = vec![cost[best]];
    let mut generations = 0;

    while generations < cfg.max_generations && cost[best] > cfg.target_eps {
        generations += 1;
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let pick = |rng: &mut ChaCha8Rng, taken: &[usize]| loop {
                    let r = rng.gen_range(0..np);
                    if !taken.contains(&r) {
                        break r;
                    }
                };
                let r1 = pick(&mut rng, &[i]);
                let r2 = pick(&mut rng, &[i, r1]);
                let r3 = pick(&mut rng, &[i, r1, r2]);
                let j_rand = rng.gen_range(0..d);
                (0..d)
                    .map(|j| {
                        if j == j_rand || rng.gen::<f64>() < cfg.c_r {
                            let v = pop[r1][j] + cfg.f_s * (pop[r2][j] - pop[r3][j]);
                            reflect(v, lower[j], upper[j])
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_cost = evaluate(&trials, generations)?;
        evaluations += np;
        for (i, (x, c)) in trials.into_iter().zip(trial_cost).enumerate() {
            if c <= cost[i] {
                pop[i] = x;
                cost[i] = c;
            }
        }
        best = argmin(&cost);
        history.push(cost[best]);
    }

    Ok(DeOutcome {
        best: pop[best].clone(),
        best_eps: cost[best],
        history,
        evaluations,
        generations,
    })
}
