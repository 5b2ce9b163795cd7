//! Assembly of the final sieve bounds: the singular series and
//! Hardy–Littlewood main term, the combined ratio
//! `(sum G_n - H2 + G(mu) sum I_n) / (5 e^gamma)`, and a simplex search
//! over the sieve parameters that respects their ordering chain.

use crate::exponents::{balance_point, ExponentConfig};
use crate::integrals::{
    g_n, g_of_c, g_zero, gbar_of_c, h2_wu, integral_in, IntegralError, QuadratureSpec, SieveParams,
};
use crate::parallel;
use crate::special::exp_gamma;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Integral(#[from] IntegralError),
}

/// Sum of `log(1 - 1/(p-1)^2)` over odd primes up to `limit`, by a plain
/// bit sieve with compensated summation.
fn twin_log_sum(limit: usize) -> f64 {
    let mut composite = vec![0u64; limit / 64 + 1];
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut p = 3usize;
    while p <= limit {
        if composite[p / 64] & (1 << (p % 64)) == 0 {
            let x = 1.0 / ((p - 1) as f64);
            let term = (-x * x).ln_1p();
            // Kahan step
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            let mut m = p * p;
            while m <= limit {
                composite[m / 64] |= 1 << (m % 64);
                m += 2 * p;
            }
        }
        p += 2;
    }
    sum
}

/// The singular series for the shift `a`: the twin-prime product over
/// all odd primes times the correction over odd primes dividing `a`.
/// The product is truncated at `prime_cutoff` and the tail is restored
/// from its logarithmic estimate.
pub fn singular_series(a: i64, prime_cutoff: u64) -> Result<f64, BoundError> {
    if a == 0 || a % 2 != 0 {
        return Err(BoundError::Argument(format!(
            "the singular series needs a nonzero even shift, got {a}"
        )));
    }
    if prime_cutoff < 1000 {
        return Err(BoundError::Argument(format!(
            "prime cutoff must be at least 1000, got {prime_cutoff}"
        )));
    }
    let base = twin_log_sum(prime_cutoff as usize);
    // sum_{p > P} 1/(p-1)^2 ~ 1/(P log P) - 1/(P log^2 P)
    let pf = prime_cutoff as f64;
    let tail = 1.0 / (pf * pf.ln()) - 1.0 / (pf * pf.ln() * pf.ln());
    let mut value = (base - tail).exp();
    // (1 - 1/p)/(1 - 2/p) = (p-1)/(p-2) over odd primes dividing a
    let mut rest = (a.unsigned_abs() >> a.trailing_zeros()) as u64;
    let mut q = 3u64;
    while q * q <= rest {
        if rest % q == 0 {
            value *= (q - 1) as f64 / (q - 2) as f64;
            while rest % q == 0 {
                rest /= q;
            }
        }
        q += 2;
    }
    if rest > 1 {
        value *= (rest - 1) as f64 / (rest - 2) as f64;
    }
    Ok(value)
}

/// The Hardy–Littlewood main term `2 S_a x / (log x)^2`.
pub fn hardy_littlewood_main(a: i64, x: f64) -> Result<f64, BoundError> {
    if !(x > 1.0) {
        return Err(BoundError::Argument(format!(
            "main term needs x > 1, got {x}"
        )));
    }
    let s = singular_series(a, 10_000_000)?;
    Ok(2.0 * s * x / (x.ln() * x.ln()))
}

/// Everything that goes into one evaluation of the sieve bound.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub params: SieveParams,
    pub cfg: ExponentConfig,
    /// `G_1 .. G_8`.
    pub g_values: [f64; 8],
    /// `I_9 .. I_21`.
    pub i_values: [f64; 13],
    pub h2wu: f64,
    pub g_mu: f64,
    /// The coefficient of the Hardy–Littlewood main term.
    pub ratio: f64,
}

impl BoundReport {
    /// Recompute the ratio from the stored parts.
    pub fn recompute_ratio(&self) -> f64 {
        let g_sum: f64 = self.g_values.iter().sum();
        let i_sum: f64 = self.i_values.iter().sum();
        (g_sum - self.h2wu + self.g_mu * i_sum) / (5.0 * exp_gamma())
    }
}

/// Evaluate every piece of the bound at the given parameters. The
/// independent integrals run in parallel; the assembly order is fixed.
pub fn assemble_bound(
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
) -> Result<BoundReport, BoundError> {
    assemble_with_tail(p, cfg, spec, None)
}

/// `frozen_tail = Some((i20, i21))` skips the two QMC integrals and
/// substitutes the given values (used inside the optimizer loop).
fn assemble_with_tail(
    p: &SieveParams,
    cfg: &ExponentConfig,
    spec: &QuadratureSpec,
    frozen_tail: Option<(f64, f64)>,
) -> Result<BoundReport, BoundError> {
    p.validate(cfg)?;
    spec.validate()?;
    // tasks: 0..=5 G(c)/G0/Gbar pieces, 6 = G(mu), 7..=10 G5..G8,
    // 11 = H2Wu, 12..=22 I9..I19, 23 = I20
    let tasks: Vec<usize> = (0..24).collect();
    let results = parallel::map_slice(&tasks, |&k| -> Result<f64, IntegralError> {
        match k {
            0 => g_of_c(p.rho_prime, p, cfg, spec),
            1 => g_of_c(p.tau1, p, cfg, spec),
            2 => g_zero(p, cfg, spec),
            3 => gbar_of_c(p.rho, p, cfg, spec),
            4 => gbar_of_c(p.tau2, p, cfg, spec),
            5 => gbar_of_c(p.tau3, p, cfg, spec),
            6 => g_of_c(p.mu, p, cfg, spec),
            7 => g_n(5, p, cfg, spec),
            8 => g_n(6, p, cfg, spec),
            9 => g_n(7, p, cfg, spec),
            10 => g_n(8, p, cfg, spec),
            11 => h2_wu(p, cfg, spec),
            12..=22 => integral_in(k - 3, p, spec),
            _ => match frozen_tail {
                Some((i20, _)) => Ok(i20),
                None => integral_in(20, p, spec),
            },
        }
    });
    let i21 = match frozen_tail {
        Some((_, v)) => v,
        None => integral_in(21, p, spec)?,
    };
    let mut vals = Vec::with_capacity(results.len());
    for r in results {
        vals.push(r?);
    }
    let g0 = vals[2];
    let g_values = [
        4.0 * vals[0] + vals[1],
        g0 + vals[3],
        g0 + vals[4],
        g0 + vals[5],
        vals[7],
        vals[8],
        vals[9],
        vals[10],
    ];
    let g_mu = vals[6];
    let h2wu = vals[11];
    let mut i_values = [0.0; 13];
    i_values[..11].copy_from_slice(&vals[12..23]);
    i_values[11] = vals[23];
    i_values[12] = i21;
    let mut report = BoundReport {
        params: *p,
        cfg: *cfg,
        g_values,
        i_values,
        h2wu,
        g_mu,
        ratio: 0.0,
    };
    report.ratio = report.recompute_ratio();
    Ok(report)
}

/// Outcome of a parameter search.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub report: BoundReport,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

/// Map an unconstrained point to parameters satisfying the ordering
/// chain, filling the gaps of the chain with sigmoid fractions.
fn decode(z: &[f64; 6], eps: f64, mu_cap: f64) -> Option<SieveParams> {
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let lo = 0.1;
    let hi = 0.3;
    let rho_prime = lo + sig(z[0]) * (hi - lo) * 0.5;
    let tau1 = rho_prime + sig(z[1]) * (hi - rho_prime) * 0.5;
    let mu_hi = mu_cap.min(hi);
    if tau1 >= mu_hi - 1e-9 {
        return None;
    }
    let mu = tau1 + sig(z[2]) * (mu_hi - tau1);
    let tau2 = mu + sig(z[3]) * (hi - mu) * 0.5;
    let tau3 = tau2 + sig(z[4]) * (hi - tau2) * 0.5;
    let rho = tau3 + sig(z[5]) * (hi - tau3);
    Some(SieveParams {
        rho,
        rho_prime,
        tau1,
        tau2,
        tau3,
        mu,
        eps,
    })
}

fn encode(p: &SieveParams, mu_cap: f64) -> [f64; 6] {
    let logit = |f: f64| {
        let f = f.clamp(1e-6, 1.0 - 1e-6);
        (f / (1.0 - f)).ln()
    };
    let lo = 0.1;
    let hi = 0.3;
    let mu_hi = mu_cap.min(hi);
    [
        logit((p.rho_prime - lo) / ((hi - lo) * 0.5)),
        logit((p.tau1 - p.rho_prime) / ((hi - p.rho_prime) * 0.5)),
        logit((p.mu - p.tau1) / (mu_hi - p.tau1)),
        logit((p.tau2 - p.mu) / ((hi - p.mu) * 0.5)),
        logit((p.tau3 - p.tau2) / ((hi - p.tau2) * 0.5)),
        logit((p.rho - p.tau3) / (hi - p.tau3)),
    ]
}

/// Local Nelder–Mead search over `(rho', tau1, mu, tau2, tau3, rho)` in
/// the reparameterized unconstrained space; `eps` stays fixed and the
/// 5/6-dimensional integrals are frozen at their initial values during
/// the search. Never returns a report worse than the initial one.
pub fn optimize_params(
    cfg: &ExponentConfig,
    initial: &SieveParams,
    budget: usize,
    spec: &QuadratureSpec,
) -> Result<OptimizeOutcome, BoundError> {
    let initial_report = assemble_bound(initial, cfg, spec)?;
    if budget == 0 {
        return Ok(OptimizeOutcome {
            report: initial_report,
            evaluations: 1,
            budget_exhausted: false,
        });
    }
    let tail = (initial_report.i_values[11], initial_report.i_values[12]);
    let search_spec = QuadratureSpec {
        rel_tol: (spec.rel_tol * 100.0).min(1e-6),
        abs_tol: (spec.abs_tol * 100.0).min(1e-8),
        max_subdivisions: spec.max_subdivisions,
        qmc_points: spec.qmc_points,
        seed: spec.seed,
    };
    let mu_cap = balance_point(cfg);
    let evals = std::sync::atomic::AtomicUsize::new(0);
    let objective = |z: &[f64; 6]| -> f64 {
        evals.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        match decode(z, initial.eps, mu_cap) {
            Some(p) => match assemble_with_tail(&p, cfg, &search_spec, Some(tail)) {
                Ok(r) => r.ratio,
                Err(_) => f64::INFINITY,
            },
            None => f64::INFINITY,
        }
    };

    // adaptive Nelder-Mead on the 6-dimensional unconstrained space
    let n = 6usize;
    let (alpha, beta, gamma, delta) = (1.0, 1.75, 0.675, 0.625);
    let z0 = encode(initial, mu_cap);
    let mut simplex: Vec<[f64; 6]> = vec![z0];
    for i in 0..n {
        let mut z = z0;
        z[i] += 0.25;
        simplex.push(z);
    }
    // candidate vectors evaluate in parallel; the later reduction is a
    // deterministic best-by-value scan
    let mut values: Vec<f64> = parallel::map_slice(&simplex, &objective);
    let mut best = (simplex[0], values[0]);
    let mut exhausted = false;
    loop {
        // sort simplex by value, ties by insertion order (stable)
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let sorted: Vec<[f64; 6]> = order.iter().map(|&i| simplex[i]).collect();
        let sorted_vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = sorted;
        values = sorted_vals;
        if values[0] < best.1 {
            best = (simplex[0], values[0]);
        }
        if evals.load(std::sync::atomic::Ordering::Relaxed) >= budget {
            exhausted = true;
            break;
        }
        if (values[n] - values[0]).abs() < 1e-7 {
            break;
        }
        let mut centroid = [0.0; 6];
        for z in simplex.iter().take(n) {
            for k in 0..n {
                centroid[k] += z[k] / n as f64;
            }
        }
        let at = |base: &[f64; 6], dir: f64| {
            let mut z = [0.0; 6];
            for k in 0..n {
                z[k] = centroid[k] + dir * (base[k] - centroid[k]);
            }
            z
        };
        let reflected = at(&simplex[n], -alpha);
        let f_r = objective(&reflected);
        if f_r < values[0] {
            let expanded = at(&simplex[n], -alpha * beta);
            let f_e = objective(&expanded);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            let contracted = if f_r < values[n] {
                at(&simplex[n], -gamma)
            } else {
                at(&simplex[n], gamma)
            };
            let f_c = objective(&contracted);
            if f_c < values[n].min(f_r) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                // shrink toward the best vertex
                for i in 1..=n {
                    for k in 0..n {
                        simplex[i][k] = simplex[0][k] + delta * (simplex[i][k] - simplex[0][k]);
                    }
                }
                let shrunk: Vec<f64> = parallel::map_slice(&simplex[1..], &objective);
                values[1..].copy_from_slice(&shrunk);
            }
        }
    }

    // re-evaluate the winner at full accuracy; keep the initial report
    // if the search did not genuinely improve on it
    let mut outcome = OptimizeOutcome {
        report: initial_report.clone(),
        evaluations: evals.load(std::sync::atomic::Ordering::Relaxed),
        budget_exhausted: exhausted,
    };
    if best.1 < initial_report.ratio {
        if let Some(p) = decode(&best.0, initial.eps, mu_cap) {
            if let Ok(full) = assemble_bound(&p, cfg, spec) {
                if full.ratio < initial_report.ratio {
                    outcome.report = full;
                }
            }
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWIN_CONSTANT: f64 = 0.6601618158468696;

    #[test]
    fn singular_series_twin_constant() {
        // oracle: the prime product to 1e8 plus the tail estimate
        let s = singular_series(2, 100_000_000).unwrap();
        assert!(
            (s - TWIN_CONSTANT).abs() < 1e-9,
            "S_2 = {s:.12}, expected {TWIN_CONSTANT}"
        );
    }

    #[test]
    fn singular_series_shift_relations() {
        let s2 = singular_series(2, 1_000_000).unwrap();
        let s4 = singular_series(4, 1_000_000).unwrap();
        let s6 = singular_series(6, 1_000_000).unwrap();
        // p = 3 contributes (3-1)/(3-2) = 2; a = 4 has the same odd part
        assert_eq!(s2, s4);
        assert!((s6 / s2 - 2.0).abs() < 1e-14);
        let s30 = singular_series(30, 1_000_000).unwrap();
        assert!((s30 / s2 - 2.0 * 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn singular_series_rejects_bad_input() {
        assert!(singular_series(3, 1_000_000).is_err());
        assert!(singular_series(0, 1_000_000).is_err());
        assert!(singular_series(2, 10).is_err());
    }

    #[test]
    fn hardy_littlewood_examples() {
        let x = std::f64::consts::E.powi(2);
        let s2 = singular_series(2, 10_000_000).unwrap();
        let hl = hardy_littlewood_main(2, x).unwrap();
        assert!((hl - s2 * x / 2.0).abs() < 1e-12 * hl);
        let hl6 = hardy_littlewood_main(6, x).unwrap();
        assert!((hl6 - 2.0 * hl).abs() < 1e-12 * hl6);
        // monotone for large x
        assert!(hardy_littlewood_main(2, 1e9).unwrap() > hardy_littlewood_main(2, 1e8).unwrap());
        assert!(hardy_littlewood_main(2, 0.5).is_err());
    }

    #[test]
    fn assemble_coarse_twin_plumbing() {
        let report = assemble_bound(
            &SieveParams::twin(),
            &ExponentConfig::default(),
            &QuadratureSpec::coarse(),
        )
        .unwrap();
        assert!(
            (report.ratio - 3.22899).abs() < 0.02,
            "ratio {}",
            report.ratio
        );
        assert!((report.ratio - report.recompute_ratio()).abs() < 1e-12);
    }

    #[test]
    fn ratio_monotone_in_parts() {
        let report = assemble_bound(
            &SieveParams::twin(),
            &ExponentConfig::default(),
            &QuadratureSpec::coarse(),
        )
        .unwrap();
        let mut bumped = report.clone();
        bumped.h2wu += 0.01;
        assert!(bumped.recompute_ratio() < report.recompute_ratio());
        for k in 0..13 {
            let mut b = report.clone();
            b.i_values[k] += 1e-3;
            assert!(b.recompute_ratio() > report.recompute_ratio(), "I index {k}");
        }
        let mut b = report.clone();
        b.g_mu += 0.01;
        assert!(b.recompute_ratio() > report.recompute_ratio());
    }

    #[test]
    fn optimizer_budget_zero_returns_initial() {
        let cfg = ExponentConfig::default();
        let spec = QuadratureSpec::coarse();
        let p = SieveParams::twin();
        let out = optimize_params(&cfg, &p, 0, &spec).unwrap();
        assert_eq!(out.evaluations, 1);
        assert!(!out.budget_exhausted);
        assert_eq!(out.report.params, p);
    }

    #[test]
    fn optimizer_never_regresses() {
        let cfg = ExponentConfig::default();
        let spec = QuadratureSpec::coarse();
        let p = SieveParams::twin();
        let initial = assemble_bound(&p, &cfg, &spec).unwrap();
        let out = optimize_params(&cfg, &p, 10, &spec).unwrap();
        assert!(out.report.ratio <= initial.ratio + 1e-12);
        out.report.params.validate(&cfg).unwrap();
    }

    #[test]
    fn encode_decode_roundtrip() {
        let cfg = ExponentConfig::default();
        let p = SieveParams::twin();
        let cap = balance_point(&cfg);
        let q = decode(&encode(&p, cap), p.eps, cap).unwrap();
        assert!((q.rho - p.rho).abs() < 1e-9);
        assert!((q.mu - p.mu).abs() < 1e-9);
        assert!((q.tau3 - p.tau3).abs() < 1e-9);
        q.validate(&cfg).unwrap();
    }
}
