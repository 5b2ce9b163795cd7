//! Closed-form exponent maps for the level of distribution.
//!
//! All maps are pure functions of an [`ExponentConfig`] carrying the
//! exceptional-eigenvalue exponent `theta`, the residue-uniformity
//! exponent `alpha`, and the slack `delta` (zero in numeric mode).
//! Floating-point comparisons throughout use a `1e-12` slack; the
//! [`rational`] submodule re-implements the piecewise-linear maps in
//! exact arithmetic for the places where the headline constants are
//! exact rationals.

use thiserror::Error;

pub const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentConfig {
    /// Exceptional-eigenvalue exponent, in [0, 1/2].
    pub theta: f64,
    /// Residue-uniformity exponent (`|a| < x^alpha`); 0 or 1 in practice.
    pub alpha: f64,
    /// Slack applied to the right-hand sides of the constraint systems.
    pub delta: f64,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            theta: 7.0 / 32.0,
            alpha: 0.0,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ExponentError {
    #[error("invalid exponent config: {0}")]
    Config(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl ExponentConfig {
    pub fn new(theta: f64, alpha: f64, delta: f64) -> Result<Self, ExponentError> {
        if !(0.0..=0.5).contains(&theta) {
            return Err(ExponentError::Config(format!(
                "theta must lie in [0, 1/2], got {theta}"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(ExponentError::Config(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if !(delta >= 0.0) {
            return Err(ExponentError::Config(format!(
                "delta must be nonnegative, got {delta}"
            )));
        }
        Ok(ExponentConfig {
            theta,
            alpha,
            delta,
        })
    }

    /// Goldbach-style config: residues up to `x^1`.
    pub fn uniform(theta: f64) -> Result<Self, ExponentError> {
        Self::new(theta, 1.0, 0.0)
    }
}

/// Which of the three branches of the level map is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `(1+t)/2`, rising toward the balance point.
    Rising,
    /// `(1-(3/2-2 theta)t)/(1+theta)`, the exceptional-spectrum cap.
    SpectralCap,
    /// `1-(alpha theta+3t)/2`, the residue-uniformity cap.
    UniformCap,
}

/// The unimodal level map `theta(t)` together with its active branch.
pub fn level_theta_t_branch(t: f64, cfg: &ExponentConfig) -> (f64, Branch) {
    let b1 = 0.5 * (1.0 + t);
    let b2 = (1.0 - (1.5 - 2.0 * cfg.theta) * t) / (1.0 + cfg.theta);
    let b3 = 1.0 - 0.5 * (cfg.alpha * cfg.theta + 3.0 * t);
    let mut best = (b1, Branch::Rising);
    if b2 < best.0 {
        best = (b2, Branch::SpectralCap);
    }
    if b3 < best.0 {
        best = (b3, Branch::UniformCap);
    }
    best
}

/// The unimodal level map `theta(t)`; maximal at the balance point.
pub fn level_theta_t(t: f64, cfg: &ExponentConfig) -> f64 {
    level_theta_t_branch(t, cfg).0
}

/// The balance point `mu_alpha` where the level map peaks.
pub fn balance_point(cfg: &ExponentConfig) -> f64 {
    ((1.0 - cfg.theta) / (4.0 - 3.0 * cfg.theta)).min(0.25 * (1.0 - cfg.alpha * cfg.theta))
}

/// `psi(x, y) = x` when `x >= y`, else 0; the boundary is inclusive.
pub fn psi(x: f64, y: f64) -> f64 {
    if x >= y {
        x
    } else {
        0.0
    }
}

fn w_term(t1: f64, t2: f64, t3: f64, cfg: &ExponentConfig) -> f64 {
    let th = cfg.theta;
    let cap = ((5.0 - 4.0 * th - (3.0 - 4.0 * th) * t3) / (8.0 - 6.0 * th))
        .min((5.0 - cfg.alpha * th - 3.0 * t3) / 8.0)
        .min(1.0 - 2.0 * t2);
    psi(cap, 0.5 * (1.0 + t1))
}

/// The three-variable level map: an eight-term maximum over the levels
/// reachable from the largest three prime exponents of a modulus.
/// Arguments must be sorted `t1 >= t2 >= t3 >= 0`.
pub fn level_theta_t123(
    t1: f64,
    t2: f64,
    t3: f64,
    cfg: &ExponentConfig,
) -> Result<f64, ExponentError> {
    if !(t1 >= t2 && t2 >= t3 && t3 >= 0.0) {
        return Err(ExponentError::Argument(format!(
            "exponents must satisfy t1 >= t2 >= t3 >= 0, got ({t1}, {t2}, {t3})"
        )));
    }
    Ok(level_theta_t123_unchecked(t1, t2, t3, cfg))
}

pub(crate) fn level_theta_t123_unchecked(t1: f64, t2: f64, t3: f64, cfg: &ExponentConfig) -> f64 {
    let lvl = |t: f64| level_theta_t(t, cfg);
    lvl(t1)
        .max(lvl(t2))
        .max(lvl(t1 + t2))
        .max(lvl(t1 + t2 + t3))
        .max(w_term(t1, t2, t3, cfg))
        .max(w_term(t1, t3, t2, cfg))
        .max(psi(lvl(t1 + t3), t1 + 2.0 * t2 + t3))
        .max(psi(lvl(t2 + t3), 2.0 * t1 + t2 + t3))
}

/// The critical interval `[v, u]` for the middle factor, in exponent
/// space. May be empty (`v > u`), which is a legal return.
pub fn critical_interval(vartheta: f64, cfg: &ExponentConfig) -> Result<(f64, f64), ExponentError> {
    if !(0.5..0.625).contains(&vartheta) {
        return Err(ExponentError::Domain(format!(
            "critical interval needs 1/2 <= level < 5/8, got {vartheta}"
        )));
    }
    Ok(critical_interval_unchecked(vartheta, cfg))
}

pub(crate) fn critical_interval_unchecked(vartheta: f64, cfg: &ExponentConfig) -> (f64, f64) {
    let v = 2.0 * vartheta - 1.0;
    let u = ((1.0 - (1.0 + cfg.theta) * vartheta) / (1.5 - 2.0 * cfg.theta))
        .min((2.0 - 2.0 * vartheta - cfg.alpha * cfg.theta) / 3.0);
    (v, u)
}

/// The headline levels at zero slack: the triply-well-factorable level
/// `(5-4 theta)/(8-6 theta)` and the residue-uniform level `(5-theta)/8`.
pub fn headline_levels(cfg: &ExponentConfig) -> (f64, f64) {
    (
        (5.0 - 4.0 * cfg.theta) / (8.0 - 6.0 * cfg.theta),
        (5.0 - cfg.theta) / 8.0,
    )
}

/// Input sizes and norms for the quintilinear bound-shape evaluator.
#[derive(Debug, Clone)]
pub struct JBoundInput {
    pub a: f64,
    pub q0: f64,
    pub c: f64,
    pub d: f64,
    pub n: f64,
    pub r: f64,
    pub s: f64,
    /// Squared l2 norm of the full coefficient sequence.
    pub norm_b_sq: f64,
    /// Squared l2 norms of the divisor-restricted sequences, keyed by
    /// the divisor; the entry for divisor 1 must equal `norm_b_sq`.
    pub norms_by_divisor: Vec<(u64, f64)>,
}

/// Evaluate the bound shape `J` (the positive root of the printed
/// two-term expression for `J^2`).
pub fn evaluate_j_bound(input: &JBoundInput, cfg: &ExponentConfig) -> Result<f64, ExponentError> {
    for (label, v) in [
        ("a", input.a),
        ("q0", input.q0),
        ("C", input.c),
        ("D", input.d),
        ("N", input.n),
        ("R", input.r),
        ("S", input.s),
    ] {
        if !(v > 0.0) {
            return Err(ExponentError::Argument(format!(
                "size {label} must be positive, got {v}"
            )));
        }
    }
    if !(input.norm_b_sq >= 0.0) {
        return Err(ExponentError::Argument(format!(
            "norm_b_sq must be nonnegative, got {}",
            input.norm_b_sq
        )));
    }
    let th = cfg.theta;
    let (c, d, n, r, s) = (input.c, input.d, input.n, input.r, input.s);
    let mut divisor_part = 0.0;
    for &(npp, norm_sq) in &input.norms_by_divisor {
        if !(norm_sq >= 0.0) {
            return Err(ExponentError::Argument(format!(
                "norm for divisor {npp} must be nonnegative, got {norm_sq}"
            )));
        }
        if (npp as f64) > 2.0 * n {
            return Err(ExponentError::Argument(format!(
                "divisor {npp} exceeds 2N = {}",
                2.0 * n
            )));
        }
        if npp == 1 && (norm_sq - input.norm_b_sq).abs() > EPS * (1.0 + input.norm_b_sq) {
            return Err(ExponentError::Argument(format!(
                "norm for divisor 1 ({norm_sq}) must equal norm_b_sq ({})",
                input.norm_b_sq
            )));
        }
        let nf = npp as f64;
        divisor_part += (input.a * nf).powf(th)
            * (c * s * (n / nf + r * s) * (c + d * r) + input.a * n * r * s)
            * norm_sq;
    }
    let smooth_part = c
        * s
        * (c * d * r.sqrt()).powf(2.0 * th)
        * (n + r * s).powf(1.0 - th)
        * (c + d * r).powf(1.0 - 2.0 * th)
        + d * d * n * r;
    let j_sq = input.q0 * divisor_part + smooth_part * input.norm_b_sq;
    Ok(j_sq.sqrt())
}

/// Exact-rational versions of the piecewise-linear maps, used wherever
/// the constants are exact rationals.
pub mod rational {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    pub type Rat = BigRational;

    pub fn rat(num: i64, den: i64) -> Rat {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Parse "p/q" or a plain integer string.
    pub fn parse(s: &str) -> Option<Rat> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().ok()?;
            let q: i64 = q.trim().parse().ok()?;
            if q == 0 {
                return None;
            }
            Some(rat(p, q))
        } else {
            let p: i64 = s.parse().ok()?;
            Some(rat(p, 1))
        }
    }

    pub fn to_f64(x: &Rat) -> f64 {
        use num_traits::ToPrimitive;
        x.to_f64().unwrap()
    }

    fn min3(a: Rat, b: Rat, c: Rat) -> Rat {
        a.min(b).min(c)
    }

    pub fn level_theta_t(t: &Rat, theta: &Rat, alpha: &Rat) -> Rat {
        let one: Rat = One::one();
        let two = rat(2, 1);
        let b1 = (&one + t) / &two;
        let b2 = (&one - (rat(3, 2) - rat(2, 1) * theta) * t) / (&one + theta);
        let b3 = &one - (alpha * theta + rat(3, 1) * t) / &two;
        min3(b1, b2, b3)
    }

    pub fn balance_point(theta: &Rat, alpha: &Rat) -> Rat {
        let one: Rat = One::one();
        let a = (&one - theta) / (rat(4, 1) - rat(3, 1) * theta);
        let b = (&one - alpha * theta) / rat(4, 1);
        a.min(b)
    }

    pub fn critical_interval(vartheta: &Rat, theta: &Rat, alpha: &Rat) -> (Rat, Rat) {
        let one: Rat = One::one();
        let v = rat(2, 1) * vartheta - &one;
        let u1 = (&one - (&one + theta) * vartheta) / (rat(3, 2) - rat(2, 1) * theta);
        let u2 = (rat(2, 1) - rat(2, 1) * vartheta - alpha * theta) / rat(3, 1);
        (v, u1.min(u2))
    }

    /// (triply-well-factorable level, residue-uniform level)
    pub fn headline_levels(theta: &Rat) -> (Rat, Rat) {
        (
            (rat(5, 1) - rat(4, 1) * theta) / (rat(8, 1) - rat(6, 1) * theta),
            (rat(5, 1) - theta.clone()) / rat(8, 1),
        )
    }

    pub fn is_zero(x: &Rat) -> bool {
        x.is_zero()
    }
}
