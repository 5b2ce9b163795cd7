//! The sieve integrals: `I_9..I_21` over their ordered domains, the
//! `G`-family, and the Wu savings integral.
//!
//! Dimensions up to four are integrated by iterated adaptive
//! Gauss–Kronrod panels over the nested limits; the innermost variable
//! is clipped analytically at the support plane of the Buchstab factor
//! (the integrand jumps there), with extra breakpoints at its remaining
//! derivative kinks. The five- and six-dimensional integrals use a
//! deterministic low-discrepancy sequence mapped onto the ordered box,
//! accumulated in fixed-size blocks so the result is independent of the
//! worker count.
//!
//! The `G`-family sums terms of size ~1/eps^2 that cancel down to O(1),
//! so every term is integrated at a tight relative tolerance; the
//! `1/v^2` inner factors are flattened by the substitution `v -> 1/v`.

use crate::exponents::{balance_point, level_theta_t, level_theta_t123_unchecked, ExponentConfig};
use crate::parallel;
use crate::quad::{adaptive, adaptive_split, LowDiscrepancy, QuadEstimate, QuadTol};
use crate::special::{buchstab_omega, linear_sieve_big_f, linear_sieve_small_f, wu_savings_h};
use thiserror::Error;

/// The sieve parameter box; the fields obey the ordering chain
/// `0 < eps <= 0.1 <= rho' <= tau1 < mu <= tau2 < tau3 <= rho <= 0.3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveParams {
    pub rho: f64,
    pub rho_prime: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub mu: f64,
    pub eps: f64,
}

impl SieveParams {
    /// The twin-prime parameter set.
    pub fn twin() -> Self {
        SieveParams {
            rho: 0.275,
            rho_prime: 0.12313,
            tau1: 0.163,
            tau2: 0.211,
            tau3: 0.24589,
            mu: 0.210,
            eps: 0.002,
        }
    }

    /// The Goldbach parameter set.
    pub fn goldbach() -> Self {
        SieveParams {
            rho: 0.2445,
            rho_prime: 0.128,
            tau1: 0.163,
            tau2: 0.205,
            tau3: 0.224,
            mu: 0.169,
            eps: 0.002,
        }
    }

    pub fn validate(&self, cfg: &ExponentConfig) -> Result<(), IntegralError> {
        let p = self;
        let chain_ok = 0.0 < p.eps
            && p.eps <= 0.1
            && 0.1 <= p.rho_prime
            && p.rho_prime <= p.tau1
            && p.tau1 < p.mu
            && p.mu <= p.tau2
            && p.tau2 < p.tau3
            && p.tau3 <= p.rho
            && p.rho <= 0.3;
        if !chain_ok {
            return Err(IntegralError::Params(format!(
                "ordering chain 0 < eps <= 0.1 <= rho' <= tau1 < mu <= tau2 < tau3 <= rho <= 0.3 violated by {p:?}"
            )));
        }
        if p.mu > balance_point(cfg) + 1e-12 {
            return Err(IntegralError::Params(format!(
                "mu = {} exceeds the balance point {}",
                p.mu,
                balance_point(cfg)
            )));
        }
        Ok(())
    }
}

/// Quadrature controls shared by all the integral evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub qmc_points: u64,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_subdivisions: 2500,
            qmc_points: 10_000_000,
            seed: 0,
        }
    }
}

impl QuadratureSpec {
    /// A coarser spec for search loops; roughly two orders faster.
    pub fn coarse() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            max_subdivisions: 400,
            qmc_points: 200_000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), IntegralError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(IntegralError::Params(
                "quadrature tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    fn tol(&self) -> QuadTol {
        QuadTol {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_subdiv: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Error)]
pub enum IntegralError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{which}: tolerance not reached (estimate {value}, error bound {error})")]
    Tolerance {
        which: String,
        value: f64,
        error: f64,
    },
}

/// The Buchstab factor as the tables use it: zero once the remaining
/// exponent budget is exhausted (nonpositive argument), the continuous
/// extension 1 on (0, 1), and the Buchstab function proper beyond.
fn buchstab_weight(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        return 1.0;
    }
    let w = buchstab_omega(x).expect("argument is at least 1 here");
    debug_assert!(w >= 0.0, "buchstab value must be nonnegative");
    w
}

fn finish(which: &str, est: QuadEstimate, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    finish_scaled(which, est, 1.0, spec)
}

/// `scale` is the sum of the term magnitudes that cancel in `est.value`;
/// the quadrature tolerance is relative to the terms, not the residue.
fn finish_scaled(
    which: &str,
    est: QuadEstimate,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    let floor = scale.max(est.value.abs());
    let budget = 100.0 * spec.abs_tol.max(spec.rel_tol * floor);
    if est.error > budget {
        return Err(IntegralError::Tolerance {
            which: which.into(),
            value: est.value,
            error: est.error,
        });
    }
    Ok(est.value)
}

/// QMC estimates cannot honor panel-rule tolerances; the spread of the
/// block means is compared against a percent-level consistency budget.
fn finish_qmc(which: &str, est: QuadEstimate, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    let budget = (1000.0 * spec.abs_tol).max(0.01 * est.value.abs());
    if est.error > budget {
        return Err(IntegralError::Tolerance {
            which: which.into(),
            value: est.value,
            error: est.error,
        });
    }
    Ok(est.value)
}

/// Nested-limit description: a bound is a constant or a previous variable.
#[derive(Clone, Copy)]
enum B {
    C(f64),
    V(usize),
}

fn resolve(b: B, prefix: &[f64]) -> f64 {
    match b {
        B::C(c) => c,
        B::V(i) => prefix[i],
    }
}

/// Iterated adaptive integration over a chain of nested ranges. The
/// innermost upper limit is additionally clipped by `clip_hi`, and
/// `inner_breaks` supplies interior kink locations for the last variable.
fn nested(
    chain: &[(B, B)],
    clip_hi: &dyn Fn(&[f64]) -> f64,
    inner_breaks: &dyn Fn(&[f64], &mut Vec<f64>),
    integrand: &dyn Fn(&[f64]) -> f64,
    tol: &QuadTol,
) -> QuadEstimate {
    fn go(
        chain: &[(B, B)],
        clip_hi: &dyn Fn(&[f64]) -> f64,
        inner_breaks: &dyn Fn(&[f64], &mut Vec<f64>),
        integrand: &dyn Fn(&[f64]) -> f64,
        tol: &QuadTol,
        prefix: &mut Vec<f64>,
    ) -> QuadEstimate {
        let level = prefix.len();
        let (blo, bhi) = chain[level];
        let lo = resolve(blo, prefix);
        let mut hi = resolve(bhi, prefix);
        let last = level + 1 == chain.len();
        if last {
            hi = hi.min(clip_hi(prefix));
            let mut breaks = Vec::new();
            inner_breaks(prefix, &mut breaks);
            prefix.push(0.0);
            let est = adaptive_split(
                &mut |x: f64| {
                    *prefix.last_mut().unwrap() = x;
                    integrand(prefix)
                },
                lo,
                hi,
                &breaks,
                tol,
            );
            prefix.pop();
            est
        } else {
            let inner_tol = tol.inner();
            prefix.push(0.0);
            let est = adaptive(
                &mut |x: f64| {
                    *prefix.last_mut().unwrap() = x;
                    let mut p = prefix.clone();
                    go(chain, clip_hi, inner_breaks, integrand, &inner_tol, &mut p).value
                },
                lo,
                hi,
                tol,
            );
            prefix.pop();
            est
        }
    }
    let mut prefix = Vec::with_capacity(chain.len());
    go(chain, clip_hi, inner_breaks, integrand, tol, &mut prefix)
}

/// The 3-dimensional family: integrand `omega((1-t-u-v)/u) / (t u^2 v)`.
fn family3(chain: &[(B, B); 3], tol: &QuadTol) -> QuadEstimate {
    nested(
        chain,
        // support ends where the exponent budget runs out (argument 0)
        &|p: &[f64]| 1.0 - p[0] - p[1],
        &|p: &[f64], out: &mut Vec<f64>| {
            // kinks of the Buchstab factor at arguments 1, 2, 3
            out.push(1.0 - p[0] - 2.0 * p[1]);
            out.push(1.0 - p[0] - 3.0 * p[1]);
            out.push(1.0 - p[0] - 4.0 * p[1]);
        },
        &|x: &[f64]| {
            let (t, u, v) = (x[0], x[1], x[2]);
            buchstab_weight((1.0 - t - u - v) / u) / (t * u * u * v)
        },
        tol,
    )
}

/// The 4-dimensional family: integrand `omega((1-t-u-v-w)/v) / (t u v^2 w)`.
fn family4(chain: &[(B, B); 4], tol: &QuadTol) -> QuadEstimate {
    nested(
        chain,
        &|p: &[f64]| 1.0 - p[0] - p[1] - p[2],
        &|p: &[f64], out: &mut Vec<f64>| {
            out.push(1.0 - p[0] - p[1] - 2.0 * p[2]);
            out.push(1.0 - p[0] - p[1] - 3.0 * p[2]);
            out.push(1.0 - p[0] - p[1] - 4.0 * p[2]);
        },
        &|x: &[f64]| {
            let (t, u, v, w) = (x[0], x[1], x[2], x[3]);
            buchstab_weight((1.0 - t - u - v - w) / v) / (t * u * v * v * w)
        },
        tol,
    )
}

/// Deterministic QMC integration over a product of free ranges and one
/// sorted block; returns (value, spread-based error estimate).
fn qmc_sorted_box(
    free: &[(f64, f64)],
    sorted_range: (f64, f64),
    sorted_n: usize,
    integrand: &(dyn Fn(&[f64]) -> f64 + Sync),
    points: u64,
    seed: u64,
) -> (f64, f64) {
    let dim = free.len() + sorted_n;
    let (slo, shi) = sorted_range;
    let mut volume = (shi - slo).powi(sorted_n as i32);
    for k in 2..=sorted_n {
        volume /= k as f64;
    }
    for &(lo, hi) in free {
        volume *= hi - lo;
    }
    if !(volume > 0.0) {
        return (0.0, 0.0);
    }
    let seq = LowDiscrepancy::new(dim, seed);
    const BLOCK: u64 = 1 << 16;
    let n_blocks = points.div_ceil(BLOCK).max(1);
    let free = free.to_vec();
    let sums = parallel::map_indexed(n_blocks as usize, |bi| {
        let mut unit = vec![0.0f64; dim];
        let mut coords = vec![0.0f64; dim];
        let mut acc = 0.0f64;
        let mut count = 0u64;
        let start = bi as u64 * BLOCK;
        let end = (start + BLOCK).min(points);
        for i in start..end {
            seq.point(i, &mut unit);
            for (k, &(lo, hi)) in free.iter().enumerate() {
                coords[k] = lo + (hi - lo) * unit[k];
            }
            let tail = &mut coords[free.len()..];
            for (k, u) in unit[free.len()..].iter().enumerate() {
                tail[k] = slo + (shi - slo) * u;
            }
            tail.sort_by(|a, b| a.partial_cmp(b).unwrap());
            acc += integrand(&coords);
            count += 1;
        }
        (acc, count)
    });
    // fixed-order reduction keeps the result independent of thread count
    let mut total = 0.0;
    let mut block_means = Vec::with_capacity(sums.len());
    let mut n = 0u64;
    for (s, c) in sums {
        total += s;
        n += c;
        if c > 0 {
            block_means.push(s / c as f64);
        }
    }
    let mean = total / n as f64;
    let mut var = 0.0;
    for m in &block_means {
        var += (m - mean) * (m - mean);
    }
    let err = if block_means.len() > 1 {
        volume * (var / (block_means.len() as f64 - 1.0)).sqrt() / (block_means.len() as f64).sqrt()
    } else {
        0.0
    };
    (volume * mean, err)
}

/// Evaluate one of the sieve integrals `I_9 .. I_21`.
pub fn integral_in(n: usize, p: &SieveParams, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    spec.validate()?;
    if !(9..=21).contains(&n) {
        return Err(IntegralError::Domain(format!(
            "integral index must lie in 9..=21, got {n}"
        )));
    }
    let tol = spec.tol();
    let (r, rp, t1, t2, t3) = (p.rho, p.rho_prime, p.tau1, p.tau2, p.tau3);
    let name = format!("I{n}");
    let est = match n {
        9 => family3(
            &[(B::C(t1), B::C(t3)), (B::V(0), B::C(t3)), (B::V(1), B::C(t3))],
            &tol,
        ),
        10 => family3(
            &[(B::C(t1), B::C(t2)), (B::V(0), B::C(t2)), (B::C(t2), B::C(r))],
            &tol,
        ),
        11 => family3(
            &[(B::C(t1), B::C(t2)), (B::C(t2), B::C(t3)), (B::V(1), B::C(t3))],
            &tol,
        ),
        12 => family3(
            &[(B::C(rp), B::C(t1)), (B::V(0), B::C(t1)), (B::C(t3), B::C(r))],
            &tol,
        ),
        13 => family3(
            &[(B::C(rp), B::C(t1)), (B::C(t1), B::C(t2)), (B::C(t2), B::C(r))],
            &tol,
        ),
        14 => family3(
            &[(B::C(rp), B::C(t1)), (B::C(t2), B::C(r)), (B::V(1), B::C(r))],
            &tol,
        ),
        15 => family3(
            &[(B::C(t1), B::C(t2)), (B::C(t2), B::C(t3)), (B::C(t3), B::C(r))],
            &tol,
        ),
        16 => family4(
            &[
                (B::C(t2), B::C(t3)),
                (B::V(0), B::C(t3)),
                (B::V(1), B::C(t3)),
                (B::V(2), B::C(t3)),
            ],
            &tol,
        ),
        17 => family4(
            &[
                (B::C(t2), B::C(t3)),
                (B::V(0), B::C(t3)),
                (B::V(1), B::C(t3)),
                (B::C(t3), B::C(r)),
            ],
            &tol,
        ),
        18 => family4(
            &[
                (B::C(t2), B::C(t3)),
                (B::V(0), B::C(t3)),
                (B::C(t3), B::C(r)),
                (B::V(2), B::C(r)),
            ],
            &tol,
        ),
        19 => family4(
            &[
                (B::C(t1), B::C(t2)),
                (B::C(t3), B::C(r)),
                (B::V(1), B::C(r)),
                (B::V(2), B::C(r)),
            ],
            &tol,
        ),
        20 | 21 => {
            if spec.qmc_points < 100_000 {
                return Err(IntegralError::Params(
                    "dims >= 5 need at least 1e5 QMC points".into(),
                ));
            }
            let (value, error) = if n == 20 {
                qmc_sorted_box(
                    &[(t2, t3)],
                    (t3, r),
                    4,
                    &|x: &[f64]| {
                        let s = 1.0 - x.iter().sum::<f64>();
                        buchstab_weight(s / x[3]) / (x[0] * x[1] * x[2] * x[3] * x[3] * x[4])
                    },
                    spec.qmc_points,
                    spec.seed,
                )
            } else {
                qmc_sorted_box(
                    &[],
                    (t3, r),
                    6,
                    &|x: &[f64]| {
                        let s = 1.0 - x.iter().sum::<f64>();
                        buchstab_weight(s / x[4]) / (x[0] * x[1] * x[2] * x[3] * x[4] * x[4] * x[5])
                    },
                    spec.qmc_points,
                    spec.seed,
                )
            };
            return finish_qmc(&name, QuadEstimate { value, error }, spec);
        }
        _ => unreachable!(),
    };
    finish(&name, est, spec)
}

/// `F` composed with Wu's savings table.
fn wu_big_f(s: f64) -> f64 {
    let h = wu_savings_h(s);
    if h == 0.0 {
        0.0
    } else {
        linear_sieve_big_f(s) * h
    }
}

/// Integrate `g(v)/v^2` over `[lo, hi]` via `s = 1/v`, with optional
/// breakpoints given in v-space.
fn inv_square_split(
    g: &mut dyn FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    v_breaks: &[f64],
    tol: &QuadTol,
) -> QuadEstimate {
    if !(hi > lo) || lo <= 0.0 {
        return QuadEstimate {
            value: 0.0,
            error: 0.0,
        };
    }
    let s_breaks: Vec<f64> = v_breaks
        .iter()
        .filter(|&&v| v > lo && v < hi)
        .map(|&v| 1.0 / v)
        .collect();
    adaptive_split(&mut |s: f64| g(1.0 / s), 1.0 / hi, 1.0 / lo, &s_breaks, tol)
}

/// `G(c)` for `eps <= c <= mu`: the four-term truncation expression.
pub fn g_of_c(
    c: f64,
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    p.validate(cfg)?;
    spec.validate()?;
    if !(p.eps <= c + 1e-15 && c <= p.mu + 1e-15) {
        return Err(IntegralError::Domain(format!(
            "G(c) needs eps <= c <= mu, got c = {c}"
        )));
    }
    let eps = p.eps;
    let tol = spec.tol();
    let th3 = |a: f64, b: f64, cc: f64| level_theta_t123_unchecked(a, b.min(a), cc.min(b), cfg);
    let theta_eps = level_theta_t(eps, cfg);

    let term1 = linear_sieve_big_f(theta_eps / eps) / eps;

    let term2 = adaptive(
        &mut |t: f64| linear_sieve_small_f((th3(t, eps, eps) - t) / eps) / t,
        eps,
        c,
        &tol,
    );

    let term3 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((th3(t, u, eps) - t - u) / eps) / u,
                eps,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        eps,
        c,
        &tol,
    );

    let term4 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| {
                    inv_square_split(
                        &mut |v: f64| linear_sieve_small_f((th3(t, u, v) - t - u - v) / v),
                        eps,
                        u,
                        &[],
                        &tol.inner().inner(),
                    )
                    .value
                        / u
                },
                eps,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        eps,
        c,
        &tol,
    );

    let est = QuadEstimate {
        value: term1 - term2.value / eps + term3.value / eps - term4.value,
        error: term2.error / eps + term3.error / eps + term4.error,
    };
    let scale = term1.abs()
        + term2.value.abs() / eps
        + term3.value.abs() / eps
        + term4.value.abs();
    finish_scaled("G(c)", est, scale, spec)
}

/// `Gbar(c)` for `mu <= c <= rho`; zero at `c = mu`.
pub fn gbar_of_c(
    c: f64,
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    p.validate(cfg)?;
    spec.validate()?;
    if !(p.mu <= c + 1e-15 && c <= p.rho + 1e-15) {
        return Err(IntegralError::Domain(format!(
            "Gbar(c) needs mu <= c <= rho, got c = {c}"
        )));
    }
    let eps = p.eps;
    let tol = spec.tol();
    let lvl = |t: f64| level_theta_t(t, cfg);

    let term1 = adaptive(
        &mut |t: f64| linear_sieve_small_f((lvl(t) - t) / eps) / t,
        p.mu,
        c,
        &tol,
    );
    let term2 = adaptive(
        &mut |t: f64| {
            inv_square_split(
                &mut |u: f64| linear_sieve_big_f((lvl(t) - t - u) / u),
                eps,
                p.rho_prime,
                &[],
                &tol.inner(),
            )
            .value
                / t
        },
        p.mu,
        c,
        &tol,
    );
    let est = QuadEstimate {
        value: -term1.value / eps + term2.value,
        error: term1.error / eps + term2.error,
    };
    let scale = term1.value.abs() / eps + term2.value.abs();
    finish_scaled("Gbar(c)", est, scale, spec)
}

/// The `G_0` block shared by `G_2`, `G_3`, `G_4`.
pub fn g_zero(
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    p.validate(cfg)?;
    spec.validate()?;
    let eps = p.eps;
    let rp = p.rho_prime;
    let tol = spec.tol();
    let th3 = |a: f64, b: f64, cc: f64| level_theta_t123_unchecked(a, b.min(a), cc.min(b), cfg);

    let term1 = adaptive(
        &mut |t: f64| linear_sieve_small_f((th3(t, eps, eps) - t) / eps) / t,
        rp,
        p.mu,
        &tol,
    );
    let term2 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((th3(t, u, eps) - t - u) / eps) / u,
                eps,
                rp,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.mu,
        &tol,
    );
    let term3 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| {
                    inv_square_split(
                        &mut |v: f64| linear_sieve_small_f((th3(t, u, v) - t - u - v) / v),
                        eps,
                        u,
                        &[],
                        &tol.inner().inner(),
                    )
                    .value
                        / u
                },
                eps,
                rp,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.mu,
        &tol,
    );
    let est = QuadEstimate {
        value: -term1.value / eps + term2.value / eps - term3.value,
        error: term1.error / eps + term2.error / eps + term3.error,
    };
    let scale = term1.value.abs() / eps + term2.value.abs() / eps + term3.value.abs();
    finish_scaled("G0", est, scale, spec)
}

fn g5(p: &SieveParams, cfg: &ExponentConfig, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    let eps = p.eps;
    let rp = p.rho_prime;
    let tol = spec.tol();
    let lvl = |t: f64| level_theta_t(t, cfg);
    let th3 = |a: f64, b: f64, cc: f64| level_theta_t123_unchecked(a, b.min(a), cc.min(b), cfg);

    let term1 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((th3(t, u, eps) - t - u) / eps) / u,
                rp,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.mu,
        &tol,
    );
    let term2 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((lvl(t) - t - u) / rp) / u,
                rp,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        p.mu,
        p.tau2,
        &tol,
    );
    let term3 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| {
                    inv_square_split(
                        &mut |v: f64| linear_sieve_small_f((th3(t, u, v) - t - u - v) / v),
                        eps,
                        rp,
                        &[],
                        &tol.inner().inner(),
                    )
                    .value
                        / u
                },
                rp,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.mu,
        &tol,
    );
    let est = QuadEstimate {
        value: term1.value / eps + term2.value / rp - term3.value,
        error: term1.error / eps + term2.error / rp + term3.error,
    };
    let scale = term1.value.abs() / eps + term2.value.abs() / rp + term3.value.abs();
    finish_scaled("G5", est, scale, spec)
}

fn g6(p: &SieveParams, cfg: &ExponentConfig, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    let rp = p.rho_prime;
    let tol = spec.tol();
    let lvl = |t: f64| level_theta_t(t, cfg);
    let est = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((lvl(t) - t - u) / rp) / u,
                rp,
                p.tau1,
                &tol.inner(),
            )
            .value
                / t
        },
        p.tau2,
        p.tau3,
        &tol,
    );
    finish(
        "G6",
        QuadEstimate {
            value: est.value / rp,
            error: est.error / rp,
        },
        spec,
    )
}

fn g7(p: &SieveParams, cfg: &ExponentConfig, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    let eps = p.eps;
    let rp = p.rho_prime;
    let tol = spec.tol();
    let theta_eps = level_theta_t(eps, cfg);
    let th3 = |a: f64, b: f64, cc: f64| level_theta_t123_unchecked(a, b.min(a), cc.min(b), cfg);

    let term1 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((theta_eps - t - u) / eps) / u,
                rp,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.tau1,
        &tol,
    );
    let term2 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| {
                    inv_square_split(
                        &mut |v: f64| linear_sieve_small_f((th3(t, u, v) - t - u - v) / v),
                        eps,
                        u,
                        &[],
                        &tol.inner().inner(),
                    )
                    .value
                        / u
                },
                rp,
                t,
                &tol.inner(),
            )
            .value
                / t
        },
        rp,
        p.tau1,
        &tol,
    );
    let est = QuadEstimate {
        value: term1.value / eps - term2.value,
        error: term1.error / eps + term2.error,
    };
    let scale = term1.value.abs() / eps + term2.value.abs();
    finish_scaled("G7", est, scale, spec)
}

fn g8(p: &SieveParams, cfg: &ExponentConfig, spec: &QuadratureSpec) -> Result<f64, IntegralError> {
    let eps = p.eps;
    let rp = p.rho_prime;
    let tol = spec.tol();
    let lvl = |t: f64| level_theta_t(t, cfg);
    let th3 = |a: f64, b: f64, cc: f64| level_theta_t123_unchecked(a, b.min(a), cc.min(b), cfg);

    let term1 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| linear_sieve_big_f((th3(t, u, eps) - t - u) / eps) / u,
                rp,
                p.tau1,
                &tol.inner(),
            )
            .value
                / t
        },
        p.tau1,
        p.mu,
        &tol,
    );
    let term2 = adaptive(
        &mut |t: f64| {
            inv_square_split(
                &mut |u: f64| linear_sieve_big_f((lvl(t) - t - u) / u),
                rp,
                p.tau1,
                &[],
                &tol.inner(),
            )
            .value
                / t
        },
        p.mu,
        p.tau2,
        &tol,
    );
    let term3 = adaptive(
        &mut |t: f64| {
            adaptive(
                &mut |u: f64| {
                    inv_square_split(
                        &mut |v: f64| linear_sieve_small_f((th3(t, u, v) - t - u - v) / v),
                        eps,
                        u,
                        &[],
                        &tol.inner().inner(),
                    )
                    .value
                        / u
                },
                rp,
                p.tau1,
                &tol.inner(),
            )
            .value
                / t
        },
        p.tau1,
        p.mu,
        &tol,
    );
    let est = QuadEstimate {
        value: term1.value / eps + term2.value - term3.value,
        error: term1.error / eps + term2.error + term3.error,
    };
    let scale = term1.value.abs() / eps + term2.value.abs() + term3.value.abs();
    finish_scaled("G8", est, scale, spec)
}

/// `G_n` for `n = 1..=8`.
pub fn g_n(
    n: usize,
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    p.validate(cfg)?;
    spec.validate()?;
    match n {
        1 => Ok(4.0 * g_of_c(p.rho_prime, p, cfg, spec)? + g_of_c(p.tau1, p, cfg, spec)?),
        2 => Ok(g_zero(p, cfg, spec)? + gbar_of_c(p.rho, p, cfg, spec)?),
        3 => Ok(g_zero(p, cfg, spec)? + gbar_of_c(p.tau2, p, cfg, spec)?),
        4 => Ok(g_zero(p, cfg, spec)? + gbar_of_c(p.tau3, p, cfg, spec)?),
        5 => g5(p, cfg, spec),
        6 => g6(p, cfg, spec),
        7 => g7(p, cfg, spec),
        8 => g8(p, cfg, spec),
        _ => Err(IntegralError::Domain(format!(
            "G index must lie in 1..=8, got {n}"
        ))),
    }
}

/// The Wu savings integral over `G_2`'s region; the integrand jumps
/// where the scaled argument crosses the savings table rows, so those
/// surfaces become explicit breakpoints of the inner integral.
pub fn h2_wu(
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<f64, IntegralError> {
    p.validate(cfg)?;
    spec.validate()?;
    let eps = p.eps;
    let tol = spec.tol();
    let lvl = |t: f64| level_theta_t(t, cfg);
    let est = adaptive(
        &mut |t: f64| {
            let head = lvl(t) - t;
            let mut breaks = Vec::with_capacity(11);
            for k in 0..=10 {
                let s = 2.0 + 0.1 * k as f64;
                breaks.push(head / (1.0 + s));
            }
            inv_square_split(
                &mut |u: f64| wu_big_f((head - u) / u),
                eps,
                p.rho_prime,
                &breaks,
                &tol.inner(),
            )
            .value
                / t
        },
        p.mu,
        p.rho,
        &tol,
    );
    finish("H2Wu", est, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg0() -> ExponentConfig {
        ExponentConfig::default()
    }

    fn cfg1() -> ExponentConfig {
        ExponentConfig::uniform(7.0 / 32.0).unwrap()
    }

    #[test]
    fn params_validation() {
        let cfg = cfg0();
        assert!(SieveParams::twin().validate(&cfg).is_ok());
        assert!(SieveParams::goldbach().validate(&cfg1()).is_ok());
        let mut bad = SieveParams::twin();
        bad.tau2 = 0.209; // tau2 < mu
        assert!(bad.validate(&cfg).is_err());
        let mut bad = SieveParams::twin();
        bad.mu = 0.24; // above the balance point 25/107
        assert!(bad.validate(&cfg).is_err());
    }

    #[test]
    fn i9_matches_table() {
        let v = integral_in(9, &SieveParams::twin(), &QuadratureSpec::default()).unwrap();
        assert!((v - 0.0330294).abs() < 1e-4, "I9 = {v}");
    }

    #[test]
    fn i16_matches_table() {
        let v = integral_in(16, &SieveParams::twin(), &QuadratureSpec::default()).unwrap();
        assert!((v - 0.0000988).abs() < 5e-6, "I16 = {v}");
    }

    #[test]
    fn high_dim_integrals_below_bounds() {
        let spec = QuadratureSpec::default();
        let p = SieveParams::twin();
        let i20 = integral_in(20, &p, &spec).unwrap();
        let i21 = integral_in(21, &p, &spec).unwrap();
        assert!(i20 <= 3.80e-6, "I20 = {i20}");
        assert!(i21 <= 1.02e-8, "I21 = {i21}");
        let i9 = integral_in(9, &p, &spec).unwrap();
        assert!(i20 < i9 && i21 < i9);
    }

    #[test]
    fn all_integrals_nonnegative() {
        let spec = QuadratureSpec::coarse();
        let p = SieveParams::twin();
        for n in 9..=21 {
            let v = integral_in(n, &p, &spec).unwrap();
            assert!(v >= 0.0, "I{n} = {v}");
        }
    }

    #[test]
    fn degenerate_domain_is_exactly_zero() {
        // tau3 = rho empties every domain with a (tau3, rho) range
        let mut p = SieveParams::twin();
        p.rho = p.tau3;
        for n in [12, 15, 17, 18, 19, 20, 21] {
            let v = integral_in(n, &p, &QuadratureSpec::coarse()).unwrap();
            assert_eq!(v, 0.0, "I{n}");
        }
    }

    #[test]
    fn qmc_doubling_consistency() {
        // a parameter box where the 5-dim integral has nonzero support
        let p = SieveParams {
            rho: 0.17,
            rho_prime: 0.1,
            tau1: 0.11,
            mu: 0.12,
            tau2: 0.125,
            tau3: 0.13,
            eps: 0.002,
        };
        p.validate(&cfg0()).unwrap();
        let mut spec = QuadratureSpec {
            qmc_points: 2_000_000,
            ..QuadratureSpec::default()
        };
        let v1 = integral_in(20, &p, &spec).unwrap();
        spec.qmc_points *= 2;
        let v2 = integral_in(20, &p, &spec).unwrap();
        assert!(v1 > 0.0);
        assert!((v1 - v2).abs() < 1e-7, "QMC drift {} vs {}", v1, v2);
    }

    #[test]
    fn g_at_eps_is_first_term_only() {
        let p = SieveParams::twin();
        let cfg = cfg0();
        let spec = QuadratureSpec::default();
        let g = g_of_c(p.eps, &p, &cfg, &spec).unwrap();
        let expect =
            crate::special::linear_sieve_big_f(level_theta_t(p.eps, &cfg) / p.eps) / p.eps;
        assert_eq!(g, expect);
    }

    #[test]
    fn gbar_vanishes_at_mu() {
        let p = SieveParams::twin();
        let g = gbar_of_c(p.mu, &p, &cfg0(), &QuadratureSpec::default()).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn g_of_c_domain_checks() {
        let p = SieveParams::twin();
        let spec = QuadratureSpec::default();
        assert!(g_of_c(p.mu + 0.01, &p, &cfg0(), &spec).is_err());
        assert!(gbar_of_c(p.mu - 0.01, &p, &cfg0(), &spec).is_err());
        assert!(gbar_of_c(p.rho + 0.01, &p, &cfg0(), &spec).is_err());
    }

    #[test]
    fn g_mu_matches_reported_value() {
        let p = SieveParams::twin();
        let g = g_of_c(p.mu, &p, &cfg0(), &QuadratureSpec::default()).unwrap();
        assert!((g - 5.90044).abs() < 1e-3, "G(mu) = {g}");
    }

    #[test]
    fn h2_wu_matches_reported_value() {
        let spec = QuadratureSpec::default();
        let h = h2_wu(&SieveParams::twin(), &cfg0(), &spec).unwrap();
        assert!((h - 0.019309).abs() / 0.019309 < 0.02, "H2Wu = {h}");
        assert!(h >= 0.0);
    }

    #[test]
    fn unreachable_tolerance_reports_best_estimate() {
        let spec = QuadratureSpec {
            rel_tol: 1e-15,
            abs_tol: 1e-18,
            max_subdivisions: 1,
            qmc_points: 200_000,
            seed: 0,
        };
        match integral_in(9, &SieveParams::twin(), &spec) {
            Err(IntegralError::Tolerance { value, error, .. }) => {
                assert!((value - 0.0330294).abs() < 1e-3);
                assert!(error > 0.0);
            }
            other => panic!("expected tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn wu_composition_vanishes_off_table() {
        assert_eq!(wu_big_f(1.99), 0.0);
        assert_eq!(wu_big_f(5.0), 0.0);
        assert!(wu_big_f(2.5) > 0.0);
    }
}
