//! Seeded evaluation points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Mode, ProblemConfig};

/// Samples with `|y|` below this are rejected in lagrangian mode.
pub const MIN_VELOCITY: f64 = 1e-3;
const MAX_ATTEMPTS: usize = 10_000;

/// Explicit points first, then `count` uniform samples from the box.
pub fn evaluation_points(cfg: &ProblemConfig) -> Result<Vec<Vec<f64>>, String> {
    let spec = &cfg.points;
    let mut out = spec.explicit.clone();
    if spec.count == 0 {
        return Ok(out);
    }
    let bounds = spec
        .bounds
        .as_ref()
        .ok_or("points.box: required when sampling points")?;
    if bounds.len() != cfg.dims.total() {
        return Err(format!("points.box: need {} [lo, hi] pairs", cfg.dims.total()));
    }
    let n = cfg.dims.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for k in 0..spec.count {
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let p: Vec<f64> = bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
            let speed = p[n..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if cfg.mode != Mode::Lagrangian || speed >= MIN_VELOCITY {
                accepted = Some(p);
                break;
            }
        }
        out.push(accepted.ok_or_else(|| format!("point {k}: the box leaves no room for |y| >= {MIN_VELOCITY}"))?);
    }
    Ok(out)
}
