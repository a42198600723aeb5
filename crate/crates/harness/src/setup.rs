//! Problem construction and seeded initial conditions.

use genflow_core::numerics::Matrix;
use genflow_core::problems::{synthetic_clouds, LogisticRegression, PlNonconvex, Quadratic, QuadraticGame, SaddleTestFunction};
use genflow_core::Problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{ExperimentConfig, ProblemKind};
use crate::error::{HarnessError, Result};
use crate::formats::read_logistic_file;

/// Objective named by the config; `quadratic_game` is not a single objective.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<Box<dyn Problem>> {
    Ok(match cfg.problem {
        ProblemKind::Quadratic => Box::new(Quadratic::isotropic(cfg.dim)?),
        ProblemKind::Saddle => Box::new(SaddleTestFunction::new()),
        ProblemKind::PlNonconvex => Box::new(PlNonconvex::new()),
        ProblemKind::Logistic => Box::new(build_logistic(cfg)?),
        ProblemKind::QuadraticGame => {
            return Err(HarnessError::usage("quadratic_game is a min-max problem; use --experiment minimax"))
        }
    })
}

pub fn build_logistic(cfg: &ExperimentConfig) -> Result<LogisticRegression> {
    match &cfg.data {
        Some(path) => {
            let (features, labels) = read_logistic_file(path)?;
            Ok(LogisticRegression::new(features, labels, cfg.l2)?)
        }
        None => Ok(synthetic_clouds(cfg.samples, cfg.dim, cfg.l2, cfg.seed)?),
    }
}

/// `quadratic_game` with identity coupling of size `dim`.
pub fn build_game(cfg: &ExperimentConfig) -> Result<QuadraticGame> {
    if cfg.problem != ProblemKind::QuadraticGame {
        return Err(HarnessError::usage("the minimax experiment needs problem = quadratic_game"));
    }
    Ok(QuadraticGame::new(cfg.mu1, cfg.mu2, Matrix::identity(cfg.dim))?)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniformly distributed unit vector.
pub fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// `center + norm · direction`.
pub fn offset(center: &[f64], direction: &[f64], norm: f64) -> Vec<f64> {
    center.iter().zip(direction).map(|(c, d)| c + norm * d).collect()
}

/// Starting points near the saddle: each coordinate has a random sign and a
/// magnitude drawn log-uniformly from `[lo, hi]`.
pub fn saddle_starts(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    let mut rng = rng(seed);
    let (a, b) = (lo.ln(), hi.ln());
    let draw = |rng: &mut ChaCha8Rng| {
        let mag = (a + (b - a) * rng.random::<f64>()).exp();
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    };
    (0..count).map(|_| [draw(&mut rng), draw(&mut rng)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn directions_are_unit_and_seeded() {
        let a = unit_direction(&mut rng(3), 10);
        let b = unit_direction(&mut rng(3), 10);
        assert_eq!(a, b);
        assert!((a.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        assert_ne!(a, unit_direction(&mut rng(4), 10));
    }

    #[test]
    fn saddle_starts_in_band() {
        let s = saddle_starts(42, 200, 1e-3, 0.35);
        assert_eq!(s, saddle_starts(42, 200, 1e-3, 0.35));
        for p in &s {
            for c in p {
                assert!((1e-3..=0.35).contains(&c.abs()));
            }
            assert!(p[0].hypot(p[1]) < 0.5);
        }
        assert!(s.iter().any(|p| p[0] < 0.0) && s.iter().any(|p| p[1] > 0.0));
    }

    #[test]
    fn problems_resolve() {
        let mut cfg = ExperimentConfig::preset(Experiment::Simulate);
        for kind in [ProblemKind::Quadratic, ProblemKind::Saddle, ProblemKind::PlNonconvex, ProblemKind::Logistic] {
            cfg.problem = kind;
            assert_eq!(build_problem(&cfg).unwrap().name(), kind.as_str());
        }
        cfg.problem = ProblemKind::QuadraticGame;
        assert!(build_problem(&cfg).is_err());
        assert!(build_game(&cfg).is_ok());
    }
}
