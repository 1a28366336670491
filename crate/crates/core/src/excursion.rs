//! Brownian-excursion Monte Carlo via the three-dimensional Bessel bridge,
//! closed-form mean and covariance of the excursion, and the limit variable
//! sampled as a normalized inner product against the mean profile.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// `||E||_2^2 = 4 / (3 pi)`, the squared L2 norm of the mean excursion.
pub const E_NORM_SQ: f64 = 4.0 / (3.0 * std::f64::consts::PI);

/// Mean of the excursion at time t: `E_t = 4 sqrt(t(1-t) / (2 pi))`.
pub fn mean_excursion(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(4.0 * (t * (1.0 - t) / (2.0 * std::f64::consts::PI)).sqrt())
}

/// Second-moment kernel `g(t, u) = E[e_t e_u]`, symmetric, with the diagonal
/// evaluated as its limit `3 t (1 - t)` to sidestep arcsin(1) cancellation.
pub fn excursion_covariance(t: f64, u: f64) -> f64 {
    let (t, u) = if t <= u { (t, u) } else { (u, t) };
    if t <= 0.0 || u >= 1.0 {
        // boundary cases where the closed form degenerates to 0, except on
        // the diagonal endpoints where it is 0 as well
        if (u - t).abs() < 1e-10 {
            return 3.0 * t * (1.0 - t);
        }
        return 0.0;
    }
    if (u - t).abs() < 1e-10 {
        return 3.0 * t * (1.0 - t);
    }
    let ratio = (t * (1.0 - u) / (u * (1.0 - t))).sqrt();
    2.0 / std::f64::consts::PI
        * (3.0 * (t * (u - t) * (1.0 - u)).sqrt()
            + (2.0 * t * (1.0 - u) + u * (1.0 - t)) * ratio.asin())
}

/// Excursion sampled on the uniform grid `t_j = j / m`, j = 0..m.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionPath {
    values: Vec<f64>,
}

impl ExcursionPath {
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Builds a path from explicit grid values (used by tests and by the
    /// degenerate-stream checks).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::OutOfRange("grid must have at least 2 steps".into()));
        }
        Ok(ExcursionPath { values })
    }
}

/// Samples the excursion as the Euclidean norm of a three-dimensional
/// Brownian bridge on an `m`-step grid.
pub fn sample_excursion(m: usize, rng: &mut Rng) -> ExcursionPath {
    assert!(m >= 2, "grid size must be at least 2");
    let step_sd = (1.0 / m as f64).sqrt();
    // three Brownian motions, then bridge and take the norm in one pass
    let mut b = [vec![0.0f64; m + 1], vec![0.0f64; m + 1], vec![0.0f64; m + 1]];
    for motion in b.iter_mut() {
        for j in 1..=m {
            let z: f64 = rng.sample(StandardNormal);
            motion[j] = motion[j - 1] + step_sd * z;
        }
    }
    let mut values = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let t = j as f64 / m as f64;
        let mut sq = 0.0;
        for motion in &b {
            let bridged = motion[j] - t * motion[m];
            sq += bridged * bridged;
        }
        values.push(sq.sqrt());
    }
    // endpoints are exactly 0 by construction of the bridge
    values[0] = 0.0;
    values[m] = 0.0;
    ExcursionPath { values }
}

/// Trapezoid quadrature of the grid inner product `<e, E>` divided by the
/// exact `||E||_2^2`.
pub fn lambda_infinity_of_path(path: &ExcursionPath) -> f64 {
    let m = path.grid_size();
    let h = 1.0 / m as f64;
    let f = |j: usize| {
        let t = j as f64 / m as f64;
        path.values()[j] * mean_excursion(t).expect("grid point in range")
    };
    let mut acc = 0.5 * (f(0) + f(m));
    for j in 1..m {
        acc += f(j);
    }
    acc * h / E_NORM_SQ
}

/// One draw of the limit variable.
pub fn sample_lambda_infinity(m: usize, rng: &mut Rng) -> f64 {
    lambda_infinity_of_path(&sample_excursion(m, rng))
}

/// Tensor trapezoid quadrature of `Var = <g, E x E> / ||E||^4 - 1`.
pub fn lambda_variance_by_quadrature(grid: usize) -> f64 {
    assert!(grid >= 100, "grid must be at least 100");
    let h = 1.0 / grid as f64;
    let e: Vec<f64> = (0..=grid)
        .map(|j| mean_excursion(j as f64 * h).unwrap())
        .collect();
    let mut acc = 0.0;
    for i in 0..=grid {
        let wi = if i == 0 || i == grid { 0.5 } else { 1.0 };
        let ti = i as f64 * h;
        let mut row = 0.0;
        for j in 0..=grid {
            let wj = if j == 0 || j == grid { 0.5 } else { 1.0 };
            let tj = j as f64 * h;
            row += wj * excursion_covariance(ti, tj) * e[j];
        }
        acc += wi * e[i] * row;
    }
    acc * h * h / (E_NORM_SQ * E_NORM_SQ) - 1.0
}

/// Density and variance of the rescaled uniform-node limit
/// `sqrt(2/pi) * Delta`, Delta Rayleigh with scale 1.
pub fn rayleigh_reference() -> (impl Fn(f64) -> f64, f64) {
    let density = |x: f64| {
        if x < 0.0 {
            0.0
        } else {
            std::f64::consts::PI / 2.0 * x * (-std::f64::consts::PI * x * x / 4.0).exp()
        }
    };
    let variance = (4.0 - std::f64::consts::PI) / std::f64::consts::PI;
    (density, variance)
}

/// One draw of the rescaled Rayleigh limit `sqrt(2/pi) * Delta`.
pub fn sample_rescaled_rayleigh(rng: &mut Rng) -> f64 {
    let u: f64 = rng.gen::<f64>();
    // inverse CDF of Rayleigh(1), rescaled
    (2.0 / std::f64::consts::PI).sqrt() * (-2.0 * (1.0 - u).ln()).sqrt()
}
