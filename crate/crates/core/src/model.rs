//! The exceptional-spectrum exponent model: the rule system of upper
//! bounds on `E(q, y)`, its grid fixed point, the closed-form maps `M`
//! and `M*` it converges to, and the recursions driving the optimality
//! argument.
//!
//! The grid iteration starts from a large constant, seeds the base-rule
//! cells, and repeatedly clamps every cell by the rule right-hand sides
//! until the sup-norm change drops below tolerance. All rule
//! applications stay on the grid (`(q, y) -> (1+y-q, y)` is
//! grid-aligned), and cells referenced outside the grid fall back to the
//! variant's closed-form map.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::parallel;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence after {sweeps} sweeps, residual {residual}")]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// `M(q, y) = max(q, 1 + theta y, q + theta (1 + y - 2q))`.
pub fn map_m(q: f64, y: f64, theta: f64) -> f64 {
    q.max(1.0 + theta * y).max(q + theta * (1.0 + y - 2.0 * q))
}

/// `M*(q, y) = max(q, 1, 1 + theta (y - 1), q + theta (1 + y - 2q))`.
pub fn map_m_star(q: f64, y: f64, theta: f64) -> f64 {
    q.max(1.0)
        .max(1.0 + theta * (y - 1.0))
        .max(q + theta * (1.0 + y - 2.0 * q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Rules (monotone/shift, reflection, trivial line).
    Plain,
    /// Adds the interval superbound `E(q, max(q,1)) <= max(q,1)`.
    Starred,
}

/// Discretized rectangle `[0, q_max] x [0, y_max]` carrying the current
/// upper-bound estimate for `E`.
#[derive(Debug, Clone)]
pub struct ModelGrid {
    pub q_max: f64,
    pub y_max: f64,
    pub step: f64,
    pub theta: f64,
    pub variant: Variant,
    /// Row-major `[iq * ny + iy]`.
    pub values: Vec<f64>,
}

const TOP: f64 = 1e9;

impl ModelGrid {
    pub fn new(
        q_max: f64,
        y_max: f64,
        step: f64,
        theta: f64,
        variant: Variant,
    ) -> Result<Self, ModelError> {
        if !(step > 0.0 && q_max > step && y_max > step) {
            return Err(ModelError::Grid(format!(
                "need positive step below the extents, got step {step}, q_max {q_max}, y_max {y_max}"
            )));
        }
        // theta = 1/2 is allowed for the classical regression check
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(ModelError::Grid(format!(
                "theta must lie in (0, 1/2], got {theta}"
            )));
        }
        let nq = (q_max / step).round() as usize + 1;
        let ny = (y_max / step).round() as usize + 1;
        Ok(ModelGrid {
            q_max,
            y_max,
            step,
            theta,
            variant,
            values: vec![TOP; nq * ny],
        })
    }

    /// The default testing rectangle.
    pub fn default_grid(theta: f64, variant: Variant) -> Result<Self, ModelError> {
        Self::new(3.0, 6.0, 0.01, theta, variant)
    }

    pub fn nq(&self) -> usize {
        (self.q_max / self.step).round() as usize + 1
    }

    pub fn ny(&self) -> usize {
        (self.y_max / self.step).round() as usize + 1
    }

    /// The closed-form map this variant converges to.
    pub fn candidate(&self, q: f64, y: f64) -> f64 {
        match self.variant {
            Variant::Plain => map_m(q, y, self.theta),
            Variant::Starred => map_m_star(q, y, self.theta),
        }
    }

    /// Evaluate the grid with linear interpolation in `q` at an on-grid
    /// `y` index; columns beyond `q_max` use the closed-form candidate.
    fn lookup(&self, values: &[f64], q: f64, iy: usize) -> f64 {
        if q > self.q_max + 1e-12 {
            return self.candidate(q, iy as f64 * self.step);
        }
        let ny = self.ny();
        let pos = (q / self.step).max(0.0);
        let i0 = (pos.floor() as usize).min(self.nq() - 2);
        let frac = pos - i0 as f64;
        let a = values[i0 * ny + iy];
        let b = values[(i0 + 1) * ny + iy];
        a + frac * (b - a)
    }

    /// Bilinear evaluation at an arbitrary point (candidate map outside).
    pub fn eval(&self, q: f64, y: f64) -> f64 {
        if q < -1e-12 || y < -1e-12 || q > self.q_max + 1e-12 || y > self.y_max + 1e-12 {
            return self.candidate(q, y);
        }
        let ny = self.ny();
        let qpos = (q / self.step).clamp(0.0, (self.nq() - 1) as f64);
        let ypos = (y / self.step).clamp(0.0, (ny - 1) as f64);
        let (i0, j0) = (
            (qpos.floor() as usize).min(self.nq() - 2),
            (ypos.floor() as usize).min(ny - 2),
        );
        let (fq, fy) = (qpos - i0 as f64, ypos - j0 as f64);
        let at = |i: usize, j: usize| self.values[i * ny + j];
        at(i0, j0) * (1.0 - fq) * (1.0 - fy)
            + at(i0 + 1, j0) * fq * (1.0 - fy)
            + at(i0, j0 + 1) * (1.0 - fq) * fy
            + at(i0 + 1, j0 + 1) * fq * fy
    }

    fn apply_base_rules(&mut self) {
        let (nq, ny) = (self.nq(), self.ny());
        let step = self.step;
        for iq in 0..nq {
            let q = iq as f64 * step;
            for iy in 0..ny {
                let y = iy as f64 * step;
                let v = &mut self.values[iq * ny + iy];
                // trivial line: E <= max(q, 1) for y <= max(0, q-1)
                if y <= (q - 1.0).max(0.0) + 1e-12 {
                    *v = v.min(q.max(1.0));
                }
                if self.variant == Variant::Starred {
                    // superbound at y = max(q, 1)
                    let target = q.max(1.0);
                    if (y - target).abs() < 0.25 * step {
                        *v = v.min(target);
                    }
                }
            }
        }
    }
}

/// One clamp sweep; returns the new values. Columns are independent
/// given the previous state, so they run in parallel; the convergence
/// reduction afterwards is a fixed-order scan.
fn sweep(grid: &ModelGrid, next: &mut [f64]) {
    let ny = grid.ny();
    let step = grid.step;
    let th = grid.theta;
    let cur = &grid.values;
    parallel::for_each_chunk_mut(next, ny, |iq, col| {
        let q = iq as f64 * step;
        for (iy, c) in col.iter_mut().enumerate() {
            let y = iy as f64 * step;
            let mut v = cur[iq * ny + iy];
            // reflection rule at (1 + y - q, y)
            if q <= y + 1.0 + 1e-12 {
                let qp = 1.0 + y - q;
                let bound = grid
                    .lookup(cur, qp, iy)
                    .max(q)
                    .max(1.0)
                    .max(qp);
                v = v.min(bound);
            }
            *c = v;
        }
        // shift rule upward: E(q, y) <= E(q, y - dy) + theta dy
        for iy in 1..ny {
            let c = col[iy - 1] + th * step;
            if c < col[iy] {
                col[iy] = c;
            }
        }
        // monotone rule downward: E(q, z) <= E(q, y) for z <= y
        for iy in (0..ny - 1).rev() {
            if col[iy + 1] < col[iy] {
                col[iy] = col[iy + 1];
            }
        }
    });
}

/// Run clamp sweeps from the base rules until the sup-norm change drops
/// below `tol`; returns the converged grid and the sweep count.
pub fn iterate_e(
    mut grid: ModelGrid,
    max_sweeps: usize,
    tol: f64,
) -> Result<(ModelGrid, usize), ModelError> {
    if !(tol > 0.0) {
        return Err(ModelError::Grid(format!("tolerance must be positive, got {tol}")));
    }
    grid.apply_base_rules();
    let mut next = grid.values.clone();
    for s in 1..=max_sweeps {
        sweep(&grid, &mut next);
        let mut residual = 0.0f64;
        for (a, b) in grid.values.iter().zip(next.iter()) {
            residual = residual.max(a - b);
        }
        std::mem::swap(&mut grid.values, &mut next);
        if residual < tol {
            return Ok((grid, s));
        }
    }
    let mut residual = 0.0f64;
    sweep(&grid, &mut next);
    for (a, b) in grid.values.iter().zip(next.iter()) {
        residual = residual.max(a - b);
    }
    Err(ModelError::NoConvergence {
        sweeps: max_sweeps,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleViolation {
    pub rule: &'static str,
    pub q: f64,
    pub y: f64,
    pub excess: f64,
}

/// Check a candidate map against every rule instance on the grid; the
/// returned list is empty when the candidate satisfies the system up to
/// `tol`.
pub fn verify_model_rules(
    candidate: &dyn Fn(f64, f64) -> f64,
    q_max: f64,
    y_max: f64,
    step: f64,
    theta: f64,
    variant: Variant,
    tol: f64,
) -> Vec<RuleViolation> {
    let nq = (q_max / step).round() as usize + 1;
    let ny = (y_max / step).round() as usize + 1;
    let mut out = Vec::new();
    let mut push = |rule: &'static str, q: f64, y: f64, excess: f64| {
        if excess > tol {
            out.push(RuleViolation { rule, q, y, excess });
        }
    };
    for iq in 0..nq {
        let q = iq as f64 * step;
        for iy in 0..ny {
            let y = iy as f64 * step;
            let v = candidate(q, y);
            if iy > 0 {
                let below = candidate(q, y - step);
                push("monotone", q, y, below - v);
                push("shift", q, y, v - below - theta * step);
            }
            if q <= y + 1.0 + 1e-12 {
                let qp = 1.0 + y - q;
                let bound = candidate(qp, y).max(q).max(1.0).max(qp);
                push("reflection", q, y, v - bound);
            }
            if y <= (q - 1.0).max(0.0) + 1e-12 {
                push("trivial-line", q, y, v - q.max(1.0));
            }
            if variant == Variant::Starred {
                let target = q.max(1.0);
                if (y - target).abs() < 0.25 * step {
                    push("superbound", q, y, v - target);
                }
            }
        }
    }
    out
}

/// `alpha_0 = 1`, `alpha_{n+1} = (2 - theta alpha_n)/(1 - theta (alpha_n - 1))`;
/// increases to 2 for `theta < 1/2`.
pub fn alpha_sequence(n: u32, theta: f64) -> f64 {
    let mut a = 1.0f64;
    for _ in 0..n {
        a = (2.0 - theta * a) / (1.0 - theta * (a - 1.0));
    }
    a
}

/// `lambda_0 = 0`, `lambda_{n+1} = theta/(1-theta) (1 + lambda_n)`;
/// increases to `theta/(1-2 theta)`.
pub fn lambda_sequence(n: u32, theta: f64) -> f64 {
    let r = theta / (1.0 - theta);
    let mut l = 0.0f64;
    for _ in 0..n {
        l = r * (1.0 + l);
    }
    l
}

/// The limit of the lambda recursion; requires `theta < 1/2`.
pub fn lambda_limit(theta: f64) -> Result<f64, ModelError> {
    if !(theta < 0.5) {
        return Err(ModelError::Domain(format!(
            "the lambda limit needs theta < 1/2, got {theta}"
        )));
    }
    Ok(theta / (1.0 - 2.0 * theta))
}

/// The region-stability point map:
/// `q' = ((1+theta) q - theta (1+y)) / (1-theta)`, `y' = q - 1 + q'`.
/// Requires `q >= 1` and `y <= 2q - 1`; then `q' >= q` and `y' >= y`.
pub fn k_stab_map(q: f64, y: f64, theta: f64) -> Result<(f64, f64), ModelError> {
    if !(q >= 1.0 - 1e-12) {
        return Err(ModelError::Domain(format!("need q >= 1, got {q}")));
    }
    if !(y <= 2.0 * q - 1.0 + 1e-12) {
        return Err(ModelError::Domain(format!(
            "need y <= 2q - 1, got y = {y}, q = {q}"
        )));
    }
    let qp = ((1.0 + theta) * q - theta * (1.0 + y)) / (1.0 - theta);
    let yp = q - 1.0 + qp;
    debug_assert!(qp >= q - 1e-9 && yp >= y - 1e-9);
    Ok((qp, yp))
}

/// Exact-rational forms of the recursions, for the places where the
/// limits are exact rationals.
pub mod rational {
    use super::*;

    pub type Rat = BigRational;

    fn rat(n: i64, d: i64) -> Rat {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn alpha_sequence(n: u32, theta: &Rat) -> Rat {
        let one: Rat = One::one();
        let two = rat(2, 1);
        let mut a: Rat = One::one();
        for _ in 0..n {
            a = (&two - theta * &a) / (&one - theta * (&a - &one));
        }
        a
    }

    pub fn lambda_sequence(n: u32, theta: &Rat) -> Rat {
        let one: Rat = One::one();
        let r = theta / (&one - theta);
        let mut l = rat(0, 1);
        for _ in 0..n {
            l = &r * (&one + &l);
        }
        l
    }

    pub fn lambda_limit(theta: &Rat) -> Rat {
        let one: Rat = One::one();
        theta / (&one - rat(2, 1) * theta)
    }

    /// The eigen-decomposition constant `c = (1-theta)/(1-2 theta)`.
    pub fn decomposition_constant(theta: &Rat) -> Rat {
        let one: Rat = One::one();
        (&one - theta) / (&one - rat(2, 1) * theta)
    }

    pub fn from_i64(n: i64, d: i64) -> Rat {
        rat(n, d)
    }
}
