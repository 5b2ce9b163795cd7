//! The Buchstab function and the linear sieve functions, tabulated once
//! as delay-differential solutions on a uniform grid.
//!
//! All three satisfy delay equations driven by their own past values:
//!
//! * `omega(u) = 1/u` on `[1,2]`, `(u omega(u))' = omega(u-1)` after,
//!   tending to `exp(-gamma)`;
//! * `F(s) = 2 e^gamma / s` on `[1,3]`, `f(s) = 2 e^gamma log(s-1)/s`
//!   on `[2,4]`, continued by the coupled system `(sF(s))' = f(s-1)`,
//!   `(sf(s))' = F(s-1)`; both tend to 1.
//!
//! Closed forms are used exactly on their initial ranges; beyond them the
//! scaled functions `u*omega(u)`, `s*F(s)`, `s*f(s)` are marched with a
//! classical RK4 step (the right-hand sides depend only on lagged,
//! already-tabulated values, read back through cubic interpolation).
//! Tables are built once on first use behind a `OnceLock`, so concurrent
//! first calls are safe and later reads are lock-free.

use std::sync::OnceLock;
use thiserror::Error;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// e^gamma, the normalization constant of the linear sieve functions.
pub fn exp_gamma() -> f64 {
    EULER_GAMMA.exp()
}

/// e^{-gamma}, the common limit of the Buchstab function.
pub fn exp_neg_gamma() -> f64 {
    (-EULER_GAMMA).exp()
}

const GRID_STEP: f64 = 1e-4;
const GRID_END: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayKind {
    Omega,
    BigF,
    SmallF,
}

/// A delay-differential solution tabulated on a uniform grid, with a
/// constant asymptote past the tabulated range.
#[derive(Debug, Clone)]
pub struct TabulatedDelayFunction {
    pub domain_start: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub asymptote: f64,
    pub name: DelayKind,
}

impl TabulatedDelayFunction {
    pub fn domain_end(&self) -> f64 {
        self.domain_start + self.step * (self.values.len() - 1) as f64
    }

    /// Cubic (4-point Lagrange) interpolation on the uniform grid; the
    /// stencil is clamped at the table edges.
    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.domain_end() {
            return self.asymptote;
        }
        interp_cubic(&self.values, self.domain_start, self.step, x)
    }
}

fn interp_cubic(values: &[f64], start: f64, step: f64, x: f64) -> f64 {
    let pos = (x - start) / step;
    let n = values.len();
    let i = (pos.floor() as isize).clamp(0, n as isize - 2) as usize;
    // The delay solutions have derivative jumps exactly at integer
    // abscissae, so the stencil is confined to the unit panel containing
    // x (panels hold 10^4 nodes, so four are always available).
    let panel = x.floor();
    let p_lo = (((panel - start) / step).round().max(0.0) as usize).min(n - 1);
    let p_hi = ((((panel + 1.0) - start) / step).round() as usize).min(n - 1);
    let lo_max = p_hi.saturating_sub(3).max(p_lo).min(n - 4);
    let lo = i.saturating_sub(1).clamp(p_lo.min(lo_max), lo_max);
    let t = pos - lo as f64;
    // Lagrange basis on nodes 0,1,2,3 relative to `lo`
    let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
    let c0 = -t1 * t2 * t3 / 6.0;
    let c1 = t0 * t2 * t3 / 2.0;
    let c2 = -t0 * t1 * t3 / 2.0;
    let c3 = t0 * t1 * t2 / 6.0;
    c0 * values[lo] + c1 * values[lo + 1] + c2 * values[lo + 2] + c3 * values[lo + 3]
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("buchstab omega is defined for u >= 1, got {0}")]
    OmegaDomain(f64),
}

fn build_omega() -> TabulatedDelayFunction {
    let start = 1.0;
    let h = GRID_STEP;
    let n = ((GRID_END - start) / h).round() as usize;
    let lag = (1.0 / h).round() as usize;
    // march w(u) = u * omega(u): w = 1 on [1,2], w = 1 + log(u-1) on [2,3],
    // then w'(u) = w(u-1)/(u-1).
    let mut w = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let u = start + h * i as f64;
        if u <= 2.0 {
            w.push(1.0);
        } else if u <= 3.0 {
            w.push(1.0 + (u - 1.0).ln());
        } else {
            break;
        }
    }
    while w.len() <= n {
        let i = w.len();
        let u1 = start + h * (i - 1) as f64;
        // lagged RHS: closed form on [1,3], table beyond
        let g = |x: f64, tbl: &[f64]| {
            let y = x - 1.0;
            if y <= 2.0 {
                1.0 / y
            } else if y <= 3.0 {
                (1.0 + (y - 1.0).ln()) / y
            } else {
                interp_cubic(tbl, start, h, y) / y
            }
        };
        // RK4 for w' = g(u) (g independent of w, lagged by one unit,
        // i.e. at least `lag` grid points behind the frontier)
        debug_assert!(i > lag + 2);
        let k1 = g(u1, &w);
        let k2 = g(u1 + 0.5 * h, &w);
        let k4 = g(u1 + h, &w);
        w.push(w[i - 1] + h / 6.0 * (k1 + 4.0 * k2 + k4));
    }
    let values = w
        .iter()
        .enumerate()
        .map(|(i, wi)| wi / (start + h * i as f64))
        .collect();
    TabulatedDelayFunction {
        domain_start: start,
        step: h,
        values,
        asymptote: exp_neg_gamma(),
        name: DelayKind::Omega,
    }
}

/// Builds s*F(s) and s*f(s) jointly (each drives the other with lag 1).
fn build_sieve_pair() -> (TabulatedDelayFunction, TabulatedDelayFunction) {
    let h = GRID_STEP;
    let two_eg = 2.0 * exp_gamma();
    let f_start = 0.0;
    let big_start = 1.0;
    let nf = ((GRID_END - f_start) / h).round() as usize;
    let nb = ((GRID_END - big_start) / h).round() as usize;
    let lag = (1.0 / h).round() as usize; // grid points per unit delay

    // q(s) = s f(s): 0 on [0,2], 2e^g log(s-1) on [2,4], then q' = P(s-1)/(s-1)
    let mut q = Vec::with_capacity(nf + 1);
    // p(s) = s F(s): 2e^g on [1,3], then p' = Q(s-1)/(s-1)
    let mut p = Vec::with_capacity(nb + 1);

    for i in 0..=nf {
        let s = f_start + h * i as f64;
        if s <= 2.0 {
            q.push(0.0);
        } else if s <= 4.0 {
            q.push(two_eg * (s - 1.0).ln());
        } else {
            break;
        }
    }
    for i in 0..=nb {
        let s = big_start + h * i as f64;
        if s <= 3.0 {
            p.push(two_eg);
        } else {
            break;
        }
    }

    // lagged right-hand sides: closed forms on the initial ranges,
    // panel-confined interpolation of the scaled tables beyond
    let f_lag = |q: &[f64], x: f64| {
        let y = x - 1.0;
        if y <= 2.0 {
            0.0
        } else if y <= 4.0 {
            two_eg * (y - 1.0).ln() / y
        } else {
            interp_cubic(q, f_start, h, y) / y
        }
    };
    let big_lag = |p: &[f64], x: f64| {
        let y = x - 1.0;
        if y <= 3.0 {
            two_eg / y
        } else {
            interp_cubic(p, big_start, h, y) / y
        }
    };

    // march both; p[i] at s=1+ih needs q near index i (same abscissa s-1),
    // so q is kept at least 3 entries ahead of the value p interpolates.
    while p.len() <= nb {
        while q.len() <= nf && q.len() < p.len() + lag.min(nf) + 4 {
            let j = q.len();
            let s1 = f_start + h * (j - 1) as f64;
            let k1 = big_lag(&p, s1);
            let k2 = big_lag(&p, s1 + 0.5 * h);
            let k4 = big_lag(&p, s1 + h);
            q.push(q[j - 1] + h / 6.0 * (k1 + 4.0 * k2 + k4));
        }
        let i = p.len();
        let s1 = big_start + h * (i - 1) as f64;
        let k1 = f_lag(&q, s1);
        let k2 = f_lag(&q, s1 + 0.5 * h);
        let k4 = f_lag(&q, s1 + h);
        p.push(p[i - 1] + h / 6.0 * (k1 + 4.0 * k2 + k4));
    }
    while q.len() <= nf {
        let j = q.len();
        let s1 = f_start + h * (j - 1) as f64;
        let k1 = big_lag(&p, s1);
        let k2 = big_lag(&p, s1 + 0.5 * h);
        let k4 = big_lag(&p, s1 + h);
        q.push(q[j - 1] + h / 6.0 * (k1 + 4.0 * k2 + k4));
    }

    let big = TabulatedDelayFunction {
        domain_start: big_start,
        step: h,
        values: p
            .iter()
            .enumerate()
            .map(|(i, v)| v / (big_start + h * i as f64))
            .collect(),
        asymptote: 1.0,
        name: DelayKind::BigF,
    };
    let small = TabulatedDelayFunction {
        domain_start: f_start,
        step: h,
        values: q
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let s = f_start + h * i as f64;
                if s <= 2.0 {
                    0.0
                } else {
                    v / s
                }
            })
            .collect(),
        asymptote: 1.0,
        name: DelayKind::SmallF,
    };
    (big, small)
}

static OMEGA: OnceLock<TabulatedDelayFunction> = OnceLock::new();
static SIEVE_PAIR: OnceLock<(TabulatedDelayFunction, TabulatedDelayFunction)> = OnceLock::new();

pub fn omega_table() -> &'static TabulatedDelayFunction {
    OMEGA.get_or_init(build_omega)
}

pub fn big_f_table() -> &'static TabulatedDelayFunction {
    &SIEVE_PAIR.get_or_init(build_sieve_pair).0
}

pub fn small_f_table() -> &'static TabulatedDelayFunction {
    &SIEVE_PAIR.get_or_init(build_sieve_pair).1
}

/// The Buchstab function.
pub fn buchstab_omega(u: f64) -> Result<f64, SpecialError> {
    if !(u >= 1.0) {
        return Err(SpecialError::OmegaDomain(u));
    }
    Ok(if u <= 2.0 {
        1.0 / u
    } else if u <= 3.0 {
        (1.0 + (u - 1.0).ln()) / u
    } else {
        omega_table().eval(u)
    })
}

/// The upper linear sieve function `F`; arguments below 1 clamp to `F(1)`.
pub fn linear_sieve_big_f(s: f64) -> f64 {
    if s <= 1.0 {
        2.0 * exp_gamma()
    } else if s <= 3.0 {
        2.0 * exp_gamma() / s
    } else {
        big_f_table().eval(s)
    }
}

/// The lower linear sieve function `f`; zero for `s <= 2`.
pub fn linear_sieve_small_f(s: f64) -> f64 {
    if s <= 2.0 {
        0.0
    } else if s <= 4.0 {
        2.0 * exp_gamma() * (s - 1.0).ln() / s
    } else {
        small_f_table().eval(s)
    }
}

/// Wu's piecewise-constant savings table at level 4/7; zero outside
/// `[2.0, 3.0]`.
pub fn wu_savings_h(t: f64) -> f64 {
    if !(2.0..=3.0).contains(&t) {
        return 0.0;
    }
    const ROWS: [(f64, f64); 10] = [
        (2.1, 0.0287118),
        (2.2, 0.0280509),
        (2.3, 0.0264697),
        (2.4, 0.0241936),
        (2.5, 0.0214619),
        (2.6, 0.0183875),
        (2.7, 0.0149960),
        (2.8, 0.0117724),
        (2.9, 0.0094724),
        (3.0, 0.0090024),
    ];
    for &(hi, val) in &ROWS {
        if t <= hi {
            return val;
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive, QuadTol};

    #[test]
    fn omega_closed_forms() {
        assert!((buchstab_omega(1.5).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let expect = (1.0 + 1.5_f64.ln()) / 2.5;
        assert!((buchstab_omega(2.5).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.562186).abs() < 1e-6);
    }

    #[test]
    fn omega_domain_error() {
        assert!(buchstab_omega(0.999).is_err());
        assert!(buchstab_omega(f64::NAN).is_err());
    }

    #[test]
    fn omega_reaches_asymptote() {
        // oracle: the high-order panel integration behind the table
        let w10 = buchstab_omega(10.0).unwrap();
        assert!(
            (w10 - exp_neg_gamma()).abs() < 1e-6,
            "omega(10) = {w10}, expected ~{}",
            exp_neg_gamma()
        );
        assert_eq!(buchstab_omega(30.0).unwrap(), exp_neg_gamma());
    }

    #[test]
    fn omega_stays_in_band() {
        // Near the asymptote omega stays within 10% of exp(-gamma) from
        // above and below; the dip to exactly 1/2 at u = 2 sits just
        // outside that band, so the window around 2 is excluded.
        let lo = 0.9 * exp_neg_gamma();
        let tbl = omega_table();
        for (i, &v) in tbl.values.iter().enumerate() {
            let u = tbl.domain_start + tbl.step * i as f64;
            if u >= 1.5 && !(1.9..=2.1).contains(&u) {
                assert!(v >= lo && v <= 1.0, "omega({u}) = {v} out of band");
            }
            if u >= 1.5 {
                assert!(v >= 0.4999 && v <= 1.0);
            }
        }
    }

    #[test]
    fn omega_grid_is_continuous() {
        let tbl = omega_table();
        let cap = 10.0 * tbl.step;
        for w in tbl.values.windows(2) {
            assert!((w[1] - w[0]).abs() < cap);
        }
    }

    #[test]
    fn sieve_function_anchors() {
        assert!((linear_sieve_big_f(2.0) - exp_gamma()).abs() < 1e-14);
        assert_eq!(linear_sieve_small_f(2.0), 0.0);
        let f3 = 2.0 * exp_gamma() * 2.0_f64.ln() / 3.0;
        assert!((linear_sieve_small_f(3.0) - f3).abs() < 1e-13);
    }

    #[test]
    fn big_f_one_step_continuation() {
        // oracle: F(4) = (2e^g + int_2^3 f(t) dt)/4 with f in closed form,
        // evaluated by adaptive quadrature independent of the table march
        let two_eg = 2.0 * exp_gamma();
        let integral = adaptive(
            &mut |t: f64| two_eg * (t - 1.0).ln() / t,
            2.0,
            3.0,
            &QuadTol::default(),
        );
        let expect = (two_eg + integral.value) / 4.0;
        assert!(
            (linear_sieve_big_f(4.0) - expect).abs() < 1e-9,
            "F(4) = {}, oracle {}",
            linear_sieve_big_f(4.0),
            expect
        );
    }

    #[test]
    fn sieve_pair_ordering_and_limit() {
        let mut s = 1.0;
        while s < 24.0 {
            let bf = linear_sieve_big_f(s);
            let sf = linear_sieve_small_f(s);
            // the true gaps decay below rounding level around s ~ 14, so
            // the band allows the measured ~1e-12 accumulation drift
            assert!(sf <= 1.0 + 1e-11 && bf >= 1.0 - 1e-11, "at s = {s}");
            assert!(bf * sf <= bf * bf + 1e-11);
            s += 0.037;
        }
        assert!((linear_sieve_big_f(20.0) + linear_sieve_small_f(20.0) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn big_f_monotone_small_f_monotone() {
        let mut prev_f = f64::INFINITY;
        let mut prev_sf = 0.0;
        let mut s = 1.0;
        while s < 20.0 {
            let bf = linear_sieve_big_f(s);
            assert!(bf <= prev_f + 1e-12);
            prev_f = bf;
            if s >= 2.0 {
                let sf = linear_sieve_small_f(s);
                assert!(sf >= prev_sf - 1e-12);
                prev_sf = sf;
            }
            s += 0.01;
        }
    }

    #[test]
    fn reconstruction_identity() {
        // sF(s) = 2e^g + int_2^{s-1} f(t) dt, checked against the delay
        // continuation on [3,5]
        let two_eg = 2.0 * exp_gamma();
        for &s in &[3.0, 3.5, 4.0, 4.4, 4.75, 5.0] {
            let integral = adaptive(
                &mut linear_sieve_small_f,
                2.0,
                s - 1.0,
                &QuadTol {
                    rel: 1e-12,
                    abs: 1e-14,
                    max_subdiv: 4000,
                },
            );
            let lhs = s * linear_sieve_big_f(s);
            assert!(
                (lhs - (two_eg + integral.value)).abs() < 1e-8,
                "reconstruction at s = {s}: {} vs {}",
                lhs,
                two_eg + integral.value
            );
        }
    }

    #[test]
    fn wu_table_rows() {
        assert_eq!(wu_savings_h(2.05), 0.0287118);
        assert_eq!(wu_savings_h(2.35), 0.0241936);
        assert_eq!(wu_savings_h(5.0), 0.0);
        assert_eq!(wu_savings_h(1.99), 0.0);
        assert_eq!(wu_savings_h(2.0), 0.0287118);
        assert_eq!(wu_savings_h(2.1), 0.0287118);
        assert_eq!(wu_savings_h(3.0), 0.0090024);
        assert_eq!(wu_savings_h(3.0001), 0.0);
    }

    #[test]
    fn concurrent_first_use_is_safe() {
        let handles: Vec<_> = (0..8)
            .map(|k| {
                std::thread::spawn(move || {
                    buchstab_omega(4.0 + k as f64 * 0.1).unwrap()
                        + linear_sieve_big_f(5.0)
                        + linear_sieve_small_f(5.0)
                })
            })
            .collect();
        for h in handles {
            assert!(h.join().unwrap().is_finite());
        }
    }
}
