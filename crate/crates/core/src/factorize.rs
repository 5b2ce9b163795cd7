//! Factorization of moduli in the well-factorable support, entirely in
//! exponent (`log_x`) space.
//!
//! An instance is a sorted list of prime exponents `t1 >= ... >= tr > 0`
//! together with a level exponent and a cut exponent. Every inequality
//! of the multiplicative constraint system becomes linear here, compared
//! with a `1e-12` slack. The module provides the support-set membership
//! tests, the triple-constraint checker, the criterion/greedy/case
//! algorithms, and an exhaustive oracle.

use crate::exponents::{
    balance_point, critical_interval_unchecked, level_theta_t123_unchecked, ExponentConfig, EPS,
};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("middle factor {b} outside critical interval [{v}, {u}]")]
    OutsideCriticalInterval { b: f64, v: f64, u: f64 },
    #[error("packing failed: {0}")]
    PackingFailed(String),
    #[error("no factorization case applies: {0}")]
    NoCaseApplies(String),
    #[error("instance too large for exhaustive search: {0} primes (max 20)")]
    TooManyPrimes(usize),
}

/// A modulus `d = p1...pr` below the level `D = x^(level - 2 delta)`,
/// in exponent space.
#[derive(Debug, Clone)]
pub struct FactorizationInstance {
    exponents: Vec<f64>,
    level: f64,
    cut: f64,
    cfg: ExponentConfig,
}

impl FactorizationInstance {
    pub fn new(
        exponents: Vec<f64>,
        level: f64,
        cut: f64,
        cfg: ExponentConfig,
    ) -> Result<Self, FactorError> {
        let mut sum = 0.0;
        for w in exponents.windows(2) {
            if w[1] > w[0] + EPS {
                return Err(FactorError::InvalidInstance(format!(
                    "exponents must be sorted descending, got {} before {}",
                    w[0], w[1]
                )));
            }
        }
        for &t in &exponents {
            if !(t > 0.0) {
                return Err(FactorError::InvalidInstance(format!(
                    "exponents must be strictly positive, got {t}"
                )));
            }
            sum += t;
        }
        if sum > 1.0 + EPS {
            return Err(FactorError::InvalidInstance(format!(
                "total exponent {sum} exceeds 1"
            )));
        }
        let d = cfg.delta;
        if !(cut >= d - EPS && cut <= 1.0 / 3.0 - d / 2.0 + EPS) {
            return Err(FactorError::InvalidInstance(format!(
                "cut exponent {cut} outside [delta, 1/3 - delta/2]"
            )));
        }
        Ok(FactorizationInstance {
            exponents,
            level,
            cut,
            cfg,
        })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }
    pub fn level(&self) -> f64 {
        self.level
    }
    pub fn cut(&self) -> f64 {
        self.cut
    }
    pub fn cfg(&self) -> &ExponentConfig {
        &self.cfg
    }
    pub fn len(&self) -> usize {
        self.exponents.len()
    }
    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Exponent of the level `D = x^(level - 2 delta)`.
    pub fn d_exp(&self) -> f64 {
        self.level - 2.0 * self.cfg.delta
    }

    fn critical(&self) -> (f64, f64) {
        critical_interval_unchecked(self.level, &self.cfg)
    }
}

/// Which bin each prime lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bin {
    A,
    B,
    C,
}

/// A three-way split of an instance, in exponent space.
#[derive(Debug, Clone)]
pub struct TripleFactorization {
    pub a_exp: f64,
    pub b_exp: f64,
    pub c_exp: f64,
    pub assignment: Vec<Bin>,
}

impl TripleFactorization {
    pub fn from_assignment(inst: &FactorizationInstance, assignment: Vec<Bin>) -> Self {
        assert_eq!(assignment.len(), inst.len());
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (&t, bin) in inst.exponents.iter().zip(&assignment) {
            match bin {
                Bin::A => a += t,
                Bin::B => b += t,
                Bin::C => c += t,
            }
        }
        TripleFactorization {
            a_exp: a,
            b_exp: b,
            c_exp: c,
            assignment,
        }
    }
}

/// Membership in the well-factorable support: every partial product
/// times the square of the next prime stays below the level.
pub fn is_well_support(inst: &FactorizationInstance) -> bool {
    let d = inst.d_exp();
    let mut prefix = 0.0;
    for &t in &inst.exponents {
        if prefix + 2.0 * t >= d - EPS {
            return false;
        }
        prefix += t;
    }
    true
}

/// Upper linear sieve support: cubes at odd positions.
pub fn is_dplus_support(inst: &FactorizationInstance) -> bool {
    let d = inst.d_exp();
    let mut prefix = 0.0;
    for (m, &t) in inst.exponents.iter().enumerate() {
        if m % 2 == 0 && prefix + 3.0 * t >= d - EPS {
            return false;
        }
        prefix += t;
    }
    true
}

/// Lower linear sieve support: cubes at even positions plus `p1^2 < D`.
pub fn is_dminus_support(inst: &FactorizationInstance) -> bool {
    let d = inst.d_exp();
    if let Some(&t1) = inst.exponents.first() {
        if 2.0 * t1 >= d - EPS {
            return false;
        }
    }
    let mut prefix = 0.0;
    for (m, &t) in inst.exponents.iter().enumerate() {
        if m % 2 == 1 && prefix + 3.0 * t >= d - EPS {
            return false;
        }
        prefix += t;
    }
    true
}

/// The three inequalities of the triple constraint system in exponent
/// space, as (lhs, rhs) pairs at the instance's cut and slack.
pub fn constraint_rows(f: &TripleFactorization, inst: &FactorizationInstance) -> [(f64, f64); 3] {
    let cut = inst.cut;
    let th = inst.cfg.theta;
    let al = inst.cfg.alpha;
    let dl = inst.cfg.delta;
    let (a, b, c) = (f.a_exp, f.b_exp, f.c_exp);
    [
        (2.0 * cut + b + 2.0 * c, 1.0 - 3.0 * dl),
        (
            al * th + cut + a + 5.0 * b + 2.0 * c,
            2.0 - 3.0 * dl,
        ),
        (
            2.0 * th * (cut + c - b) + cut + a + 5.0 * b + 2.0 * c,
            2.0 - 2.0 * dl,
        ),
    ]
}

/// Whether a factorization satisfies the triple constraint system.
pub fn check_triple_constraints(f: &TripleFactorization, inst: &FactorizationInstance) -> bool {
    constraint_rows(f, inst)
        .iter()
        .all(|&(lhs, rhs)| lhs <= rhs + EPS)
}

/// The three-inequality system that the outline factorization
/// `q = q1 q2 q3` must satisfy, in exponent space.
pub fn check_outline_system(q1: f64, q2: f64, q3: f64, cfg: &ExponentConfig) -> bool {
    let th = cfg.theta;
    let base = 2.0 * q1 + 5.0 * q2 + 2.0 * q3;
    2.0 * q1 + q2 + 2.0 * q3 <= 1.0 + EPS
        && base <= 2.0 + EPS
        && 2.0 * th * (q1 + q3 - q2) + base <= 2.0 + EPS
}

/// Greedy packing of the primes outside the `b` bin into the `a`/`c`
/// bins, descending, always preferring the roomier bin. Under the
/// square-divisor inequality this placement cannot get stuck.
fn pack_into_ac(
    inst: &FactorizationInstance,
    b_mask: &[bool],
    a_cap: f64,
    c_cap: f64,
) -> Option<Vec<Bin>> {
    let mut assignment = vec![Bin::B; inst.len()];
    let (mut a, mut c) = (0.0, 0.0);
    for (i, &t) in inst.exponents.iter().enumerate() {
        if b_mask[i] {
            continue;
        }
        let room_a = a_cap - a;
        let room_c = c_cap - c;
        let pick = if room_a >= room_c {
            if t <= room_a + EPS {
                Some(Bin::A)
            } else if t <= room_c + EPS {
                Some(Bin::C)
            } else {
                None
            }
        } else if t <= room_c + EPS {
            Some(Bin::C)
        } else if t <= room_a + EPS {
            Some(Bin::A)
        } else {
            None
        };
        match pick {
            Some(Bin::A) => {
                a += t;
                assignment[i] = Bin::A;
            }
            Some(Bin::C) => {
                c += t;
                assignment[i] = Bin::C;
            }
            _ => return None,
        }
    }
    Some(assignment)
}

/// Factor with a caller-chosen middle bin: the middle exponent must lie
/// in the critical interval, and the remaining primes must pack into the
/// `a` bin (up to the cut) and the `c` bin (up to `level - cut - b`).
pub fn factor_by_criterion(
    inst: &FactorizationInstance,
    b_indices: &[usize],
) -> Result<TripleFactorization, FactorError> {
    let mut b_mask = vec![false; inst.len()];
    let mut b_exp = 0.0;
    for &i in b_indices {
        if i >= inst.len() || b_mask[i] {
            return Err(FactorError::Precondition(format!(
                "bad middle-bin index {i}"
            )));
        }
        b_mask[i] = true;
        b_exp += inst.exponents[i];
    }
    let (v, u) = inst.critical();
    if !(b_exp >= v - EPS && b_exp <= u + EPS) {
        return Err(FactorError::OutsideCriticalInterval { b: b_exp, v, u });
    }
    let c_cap = inst.d_exp() - inst.cut - b_exp;
    let assignment = pack_into_ac(inst, &b_mask, inst.cut, c_cap).ok_or_else(|| {
        FactorError::PackingFailed(format!(
            "primes outside b (exp {b_exp:.6}) do not fit bins ({:.6}, {c_cap:.6})",
            inst.cut
        ))
    })?;
    let fac = TripleFactorization::from_assignment(inst, assignment);
    Ok(fac)
}

/// Greedy bin-filling factorization for instances whose three largest
/// primes are small in the required sense: bins of capacity
/// `(cut, 2 level - 1, 1 - level - cut)` are filled first-fit in bin
/// order, with the terminal-index fallback through the critical-interval
/// criterion.
pub fn greedy_factorize(
    inst: &FactorizationInstance,
) -> Result<TripleFactorization, FactorError> {
    let r = inst.len();
    if r < 3 {
        return Err(FactorError::Precondition(format!(
            "greedy factorization needs r >= 3, got {r}"
        )));
    }
    let cfg = &inst.cfg;
    let lvl = inst.level;
    if lvl >= (5.0 - cfg.alpha * cfg.theta) / 8.0 - EPS {
        return Err(FactorError::Precondition(format!(
            "greedy factorization needs level < (5 - alpha theta)/8, got {lvl}"
        )));
    }
    if !is_well_support(inst) {
        return Err(FactorError::Precondition(
            "instance is not in the well-factorable support".into(),
        ));
    }
    let (v, u) = inst.critical();
    let t = &inst.exponents;
    if !(t[2] < u - v + EPS) {
        return Err(FactorError::Precondition(format!(
            "third prime {} not below interval width {}",
            t[2],
            u - v
        )));
    }
    let alt_a = 2.0 * t[1] <= 1.0 - lvl + EPS && t[0] <= v + EPS;
    let alt_b = 2.0 * t[0] <= 1.0 - lvl + EPS && t[1] <= v + EPS;
    if !(alt_a || alt_b) {
        return Err(FactorError::Precondition(
            "neither smallness alternative for (p1, p2) holds".into(),
        ));
    }

    // seed with the two leading primes (the x^v-bounded one into the
    // middle bin, the other into an outer bin), then append from p3
    let mut attempts: Vec<(usize, usize)> = Vec::new();
    if alt_a {
        attempts.push((0, 1));
    }
    if alt_b {
        attempts.push((1, 0));
    }
    let mut last_err = None;
    for (mid, other) in attempts {
        match greedy_from_seed(inst, mid, other, v, u) {
            Ok(fac) => return Ok(fac),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

fn greedy_from_seed(
    inst: &FactorizationInstance,
    mid: usize,
    other: usize,
    v: f64,
    u: f64,
) -> Result<TripleFactorization, FactorError> {
    let r = inst.len();
    let t = &inst.exponents;
    let lvl = inst.level;
    let dl = inst.cfg.delta;
    let caps = [inst.cut, 2.0 * lvl - 4.0 * dl - 1.0, 1.0 - lvl - inst.cut];
    let bins = [Bin::A, Bin::B, Bin::C];
    let mut fill = [0.0f64; 3];
    let mut assignment = vec![Bin::A; r];
    if t[mid] > caps[1] + EPS {
        return Err(FactorError::PackingFailed(format!(
            "middle seed {} exceeds bin capacity {}",
            t[mid], caps[1]
        )));
    }
    fill[1] = t[mid];
    assignment[mid] = Bin::B;
    let outer = if t[other] <= caps[0] + EPS {
        0
    } else if t[other] <= caps[2] + EPS {
        2
    } else {
        return Err(FactorError::PackingFailed(format!(
            "outer seed {} fits neither outer bin",
            t[other]
        )));
    };
    fill[outer] = t[other];
    assignment[other] = bins[outer];

    for j in 2..r {
        let tj = t[j];
        if let Some(i) = (0..3).find(|&i| fill[i] + tj <= caps[i] + EPS) {
            fill[i] += tj;
            assignment[j] = bins[i];
            continue;
        }
        // terminal index: p_j fits nowhere, so the middle bin plus p_j
        // lands in the critical interval and the rest packs around it
        let b_exp = fill[1] + tj;
        if !(b_exp >= v - EPS && b_exp <= u + EPS) {
            return Err(FactorError::PackingFailed(format!(
                "terminal middle factor {b_exp} outside [{v}, {u}]"
            )));
        }
        let c_cap = lvl - 4.0 * dl - inst.cut - b_exp;
        // first try keeping the bins accumulated so far and appending the
        // tail, then a full repack of everything outside the middle bin
        assignment[j] = Bin::B;
        let (mut a, mut c) = (fill[0], fill[2]);
        let mut appended = assignment.clone();
        let mut ok = true;
        for l in j + 1..r {
            let tl = t[l];
            let (room_a, room_c) = (inst.cut - a, c_cap - c);
            if room_a >= room_c && tl <= room_a + EPS {
                a += tl;
                appended[l] = Bin::A;
            } else if tl <= room_c + EPS {
                c += tl;
                appended[l] = Bin::C;
            } else if tl <= room_a + EPS {
                a += tl;
                appended[l] = Bin::A;
            } else {
                ok = false;
                break;
            }
        }
        if ok {
            let fac = TripleFactorization::from_assignment(inst, appended);
            if check_triple_constraints(&fac, inst) {
                return Ok(fac);
            }
        }
        let mut b_mask = vec![false; r];
        for (i, bin) in assignment.iter().enumerate().take(j + 1) {
            if *bin == Bin::B {
                b_mask[i] = true;
            }
        }
        let repacked = pack_into_ac(inst, &b_mask, inst.cut, c_cap)
            .ok_or_else(|| FactorError::PackingFailed("terminal repack did not fit".into()))?;
        let fac = TripleFactorization::from_assignment(inst, repacked);
        return Ok(fac);
    }
    // all primes exhausted inside the bins; the capacities themselves
    // guarantee the constraint system
    Ok(TripleFactorization::from_assignment(inst, assignment))
}

/// Which case of the case analysis produced a factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellCase {
    /// Empty modulus (`d = 1`).
    Trivial,
    /// Middle bin from the printed candidate list: `p1`, `p2`, `p1 p2`
    /// or `p1 p2 p3`.
    CandidateB { primes: u8 },
    /// `b = p1 p3` with `p2^2 <= D/b`.
    SplitOuter,
    /// `b = p2 p3` with `p1^2 <= D/b`.
    SplitInner,
    /// Greedy bin filling.
    Greedy,
}

impl std::fmt::Display for WellCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WellCase::Trivial => write!(f, "trivial"),
            WellCase::CandidateB { primes } => write!(f, "candidate-b({:03b})", primes),
            WellCase::SplitOuter => write!(f, "split-p1p3"),
            WellCase::SplitInner => write!(f, "split-p2p3"),
            WellCase::Greedy => write!(f, "greedy"),
        }
    }
}

/// Case analysis for instances in the well-factorable support with
/// `t1 <= u`: tries the printed cases in order and reports which fired.
/// Failure is legal when the level exceeds the guaranteed threshold.
pub fn factorize_well(
    inst: &FactorizationInstance,
) -> Result<(TripleFactorization, WellCase), FactorError> {
    if !is_well_support(inst) {
        return Err(FactorError::Precondition(
            "instance is not in the well-factorable support".into(),
        ));
    }
    let r = inst.len();
    if r == 0 {
        return Ok((
            TripleFactorization::from_assignment(inst, vec![]),
            WellCase::Trivial,
        ));
    }
    let (v, u) = inst.critical();
    let t = &inst.exponents;
    if t[0] > u + EPS {
        return Err(FactorError::NoCaseApplies(format!(
            "largest exponent {} exceeds the interval top {u}",
            t[0]
        )));
    }

    // case (i): middle bin from the printed candidate list
    let mut candidates: Vec<(Vec<usize>, u8)> = vec![(vec![0], 0b001)];
    if r >= 2 {
        candidates.push((vec![1], 0b010));
        candidates.push((vec![0, 1], 0b011));
    }
    if r >= 3 {
        candidates.push((vec![0, 1, 2], 0b111));
    }
    for (idx, tag) in &candidates {
        if let Ok(fac) = factor_by_criterion(inst, idx) {
            if check_triple_constraints(&fac, inst) {
                return Ok((fac, WellCase::CandidateB { primes: *tag }));
            }
        }
    }

    let d = inst.d_exp();
    if r >= 3 {
        // case (ii): b = p1 p3, p2^2 <= D/b
        if 2.0 * t[1] <= d - t[0] - t[2] + EPS {
            if let Ok(fac) = factor_by_criterion(inst, &[0, 2]) {
                if check_triple_constraints(&fac, inst) {
                    return Ok((fac, WellCase::SplitOuter));
                }
            }
        }
        // case (iii): b = p2 p3, p1^2 <= D/b
        if 2.0 * t[0] <= d - t[1] - t[2] + EPS {
            if let Ok(fac) = factor_by_criterion(inst, &[1, 2]) {
                if check_triple_constraints(&fac, inst) {
                    return Ok((fac, WellCase::SplitInner));
                }
            }
        }
        // case (iv): all three leading primes small; greedy
        let third_small = t[2] <= u - v + EPS;
        let alt = (t[0] <= v + EPS && 2.0 * t[1] <= 1.0 - inst.level + EPS)
            || (t[1] <= v + EPS && 2.0 * t[0] <= 1.0 - inst.level + EPS);
        if third_small && alt {
            if let Ok(fac) = greedy_factorize(inst) {
                if check_triple_constraints(&fac, inst) {
                    return Ok((fac, WellCase::Greedy));
                }
            }
        }
    }
    Err(FactorError::NoCaseApplies(format!(
        "no case fired for level {} with interval [{v}, {u}]",
        inst.level
    )))
}

/// Exhaustive search over all bin assignments (with monotone pruning);
/// the oracle the other algorithms are tested against.
pub fn brute_force_factorize(
    inst: &FactorizationInstance,
) -> Result<TripleFactorization, FactorError> {
    let r = inst.len();
    if r > 20 {
        return Err(FactorError::TooManyPrimes(r));
    }
    let mut assignment = vec![Bin::A; r];
    fn search(
        inst: &FactorizationInstance,
        i: usize,
        a: f64,
        b: f64,
        c: f64,
        assignment: &mut Vec<Bin>,
    ) -> bool {
        // every constraint lhs is nondecreasing in (a, b, c), so a
        // partial violation can be pruned
        let cut = inst.cut;
        let cfg = inst.cfg();
        let dl = cfg.delta;
        if a > cut + EPS
            || 2.0 * cut + b + 2.0 * c > 1.0 - 3.0 * dl + EPS
            || cfg.alpha * cfg.theta + cut + a + 5.0 * b + 2.0 * c > 2.0 - 3.0 * dl + EPS
        {
            return false;
        }
        if i == inst.len() {
            let fac = TripleFactorization::from_assignment(inst, assignment.clone());
            return check_triple_constraints(&fac, inst) && a <= cut + EPS;
        }
        let t = inst.exponents()[i];
        for bin in [Bin::A, Bin::B, Bin::C] {
            assignment[i] = bin;
            let (na, nb, nc) = match bin {
                Bin::A => (a + t, b, c),
                Bin::B => (a, b + t, c),
                Bin::C => (a, b, c + t),
            };
            if search(inst, i + 1, na, nb, nc, assignment) {
                return true;
            }
        }
        false
    }
    if search(inst, 0, 0.0, 0.0, 0.0, &mut assignment) {
        Ok(TripleFactorization::from_assignment(inst, assignment))
    } else {
        Err(FactorError::NoCaseApplies(
            "exhaustive search found no admissible assignment".into(),
        ))
    }
}

/// Seeded random instances satisfying the guaranteed-factorization
/// hypotheses: well-factorable support, `r >= 3`, `t1` below the balance
/// point, and level just below the three-variable threshold.
pub fn sample_guaranteed<R: Rng>(
    rng: &mut R,
    cfg: &ExponentConfig,
    max_r: usize,
) -> FactorizationInstance {
    let mu = balance_point(cfg);
    loop {
        let t1 = rng.gen_range(0.03..mu - 1e-4);
        let mut exps = vec![t1];
        let target_r = rng.gen_range(3..=max_r.max(3));
        let mut sum = t1;
        while exps.len() < target_r {
            let prev = *exps.last().unwrap();
            let next = (prev * rng.gen_range(0.3..1.0)).max(1e-4);
            // keep the square-divisor margin under a conservative level
            if sum + 2.0 * next >= 0.575 {
                break;
            }
            sum += next;
            exps.push(next);
        }
        if exps.len() < 3 {
            continue;
        }
        let level = level_theta_t123_unchecked(exps[0], exps[1], exps[2], cfg) - 1e-6;
        if !(0.5 + 1e-9..0.625 - 1e-9).contains(&level) {
            continue;
        }
        let cut = rng.gen_range(0.01..1.0 / 3.0 - 0.001);
        let inst = match FactorizationInstance::new(exps, level, cut, *cfg) {
            Ok(i) => i,
            Err(_) => continue,
        };
        if !is_well_support(&inst) {
            continue;
        }
        let (_, u) = inst.critical();
        if inst.exponents[0] > u + EPS {
            continue;
        }
        return inst;
    }
}

/// Seeded random instances satisfying the greedy algorithm's
/// smallness hypotheses.
pub fn sample_greedy_hypotheses<R: Rng>(
    rng: &mut R,
    cfg: &ExponentConfig,
    max_r: usize,
) -> FactorizationInstance {
    loop {
        let level = rng.gen_range(0.55..(5.0 - cfg.alpha * cfg.theta) / 8.0 - 1e-4);
        let (v, u) = critical_interval_unchecked(level, cfg);
        if u - v < 5e-3 {
            continue;
        }
        let t1 = rng.gen_range(0.02..v.min((1.0 - level) / 2.0) - 1e-6);
        let t2 = rng.gen_range(0.01..t1).min(t1);
        let t3_cap = t2.min(u - v) - 1e-9;
        if t3_cap <= 5e-4 {
            continue;
        }
        let t3 = rng.gen_range(5e-4..t3_cap);
        let mut exps = vec![t1, t2, t3];
        let mut sum = t1 + t2 + t3;
        let target_r = rng.gen_range(3..=max_r.max(3));
        while exps.len() < target_r {
            let prev = *exps.last().unwrap();
            let next = (prev * rng.gen_range(0.3..1.0)).max(1e-4);
            if sum + 2.0 * next >= level - 1e-3 {
                break;
            }
            sum += next;
            exps.push(next);
        }
        let cut = rng.gen_range(0.01..1.0 / 3.0 - 0.001);
        let inst = match FactorizationInstance::new(exps, level, cut, *cfg) {
            Ok(i) => i,
            Err(_) => continue,
        };
        if !is_well_support(&inst) {
            continue;
        }
        return inst;
    }
}

/// Seeded random instances that are merely in the well-factorable
/// support with `t1 <= u`, with no success guarantee.
pub fn sample_well_support<R: Rng>(
    rng: &mut R,
    cfg: &ExponentConfig,
    max_r: usize,
) -> FactorizationInstance {
    loop {
        let level = rng.gen_range(0.52..0.62);
        let (_, u) = critical_interval_unchecked(level, cfg);
        if u <= 0.02 {
            continue;
        }
        let t1 = rng.gen_range(0.01..u.min(level / 2.0 - 1e-3));
        let mut exps = vec![t1];
        let mut sum = t1;
        let target_r = rng.gen_range(1..=max_r.max(1));
        while exps.len() < target_r {
            let prev = *exps.last().unwrap();
            let next = (prev * rng.gen_range(0.3..1.0)).max(1e-4);
            if sum + 2.0 * next >= level - 1e-3 {
                break;
            }
            sum += next;
            exps.push(next);
        }
        let cut = rng.gen_range(0.01..1.0 / 3.0 - 0.001);
        let inst = match FactorizationInstance::new(exps, level, cut, *cfg) {
            Ok(i) => i,
            Err(_) => continue,
        };
        if is_well_support(&inst) {
            return inst;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::rational::{self, rat};
    use num_traits::Zero;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg0() -> ExponentConfig {
        ExponentConfig::default()
    }

    fn inst(exps: &[f64], level: f64, cut: f64) -> FactorizationInstance {
        FactorizationInstance::new(exps.to_vec(), level, cut, cfg0()).unwrap()
    }

    #[test]
    fn well_support_examples() {
        assert!(is_well_support(&inst(&[0.25, 0.15], 0.6, 0.3)));
        assert!(!is_well_support(&inst(&[0.31], 0.6, 0.3)));
    }

    #[test]
    fn well_support_matches_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let i = sample_well_support(&mut rng, &cfg0(), 5);
            // independent re-check of the inequality chain
            let d = i.d_exp();
            let mut ok = true;
            for m in 0..i.len() {
                let prefix: f64 = i.exponents()[..m].iter().sum();
                if prefix + 2.0 * i.exponents()[m] >= d - EPS {
                    ok = false;
                }
            }
            assert_eq!(ok, is_well_support(&i));
        }
    }

    #[test]
    fn dplus_dminus_single_prime() {
        // m = 1 is odd: the cube condition governs D+
        assert!(is_dplus_support(&inst(&[0.19], 0.6, 0.3)));
        assert!(!is_dplus_support(&inst(&[0.21], 0.6, 0.3)));
        // D- for a single prime only needs p1^2 < D
        assert!(is_dminus_support(&inst(&[0.29], 0.6, 0.3)));
        assert!(!is_dminus_support(&inst(&[0.31], 0.6, 0.3)));
    }

    #[test]
    fn sieve_supports_inside_well_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = cfg0();
        let mut hits = 0;
        for _ in 0..10_000 {
            let level = rng.gen_range(0.52..0.62);
            let mut exps = vec![rng.gen_range(0.01..0.2)];
            let mut sum = exps[0];
            for _ in 0..rng.gen_range(0..5) {
                let next = exps.last().unwrap() * rng.gen_range(0.3..1.0);
                if next < 1e-4 || sum + next > 0.9 {
                    break;
                }
                sum += next;
                exps.push(next);
            }
            let i = match FactorizationInstance::new(exps, level, 0.2, cfg) {
                Ok(i) => i,
                Err(_) => continue,
            };
            if is_dplus_support(&i) || is_dminus_support(&i) {
                hits += 1;
                assert!(is_well_support(&i), "sieve support outside well support");
            }
        }
        assert!(hits > 100, "sampler never hit the sieve supports");
    }

    #[test]
    fn checker_examples() {
        let i = inst(&[0.22], 0.6, 0.3);
        let f = TripleFactorization::from_assignment(&i, vec![Bin::B]);
        assert!(check_triple_constraints(&f, &i));
        let rows = constraint_rows(&f, &i);
        assert!((rows[0].0 - 0.82).abs() < 1e-12);
        assert!((rows[2].0 - (7.0 / 16.0 * 0.08 + 1.4)).abs() < 1e-12);

        let empty = FactorizationInstance::new(vec![], 0.6, 0.3, cfg0()).unwrap();
        let f = TripleFactorization::from_assignment(&empty, vec![]);
        assert!(check_triple_constraints(&f, &empty));
    }

    #[test]
    fn alpha_one_tightens_second_constraint() {
        let cfg1 = ExponentConfig::uniform(7.0 / 32.0).unwrap();
        let i0 = inst(&[0.22], 0.6, 0.3);
        let i1 = FactorizationInstance::new(vec![0.22], 0.6, 0.3, cfg1).unwrap();
        let f = |i: &FactorizationInstance| TripleFactorization::from_assignment(i, vec![Bin::B]);
        let rows0 = constraint_rows(&f(&i0), &i0);
        let rows1 = constraint_rows(&f(&i1), &i1);
        assert!((rows1[1].0 - rows0[1].0 - cfg1.theta).abs() < 1e-12);
    }

    #[test]
    fn outline_system_at_headline_level() {
        // exact oracle: at the headline level the first and third
        // inequalities hold with equality
        let theta = rat(7, 32);
        let vt = rat(66, 107);
        let q1 = rat(1, 3);
        let q2 = rat(2, 1) * &vt - rat(1, 1);
        let q3 = rat(1, 1) - &vt - rat(1, 3);
        let one = rat(1, 1);
        let two = rat(2, 1);
        let lhs1 = rat(2, 1) * &q1 + &q2 + rat(2, 1) * &q3;
        assert!((lhs1 - &one).is_zero());
        let base = rat(2, 1) * &q1 + rat(5, 1) * &q2 + rat(2, 1) * &q3;
        let lhs3 = rat(2, 1) * &theta * (&q1 + &q3 - &q2) + &base;
        assert!((lhs3 - &two).is_zero());
        assert!(base < two);

        let cfg = cfg0();
        let (q1f, q2f, q3f) = (
            1.0 / 3.0,
            2.0 * 66.0 / 107.0 - 1.0,
            1.0 - 66.0 / 107.0 - 1.0 / 3.0,
        );
        assert!(check_outline_system(q1f, q2f, q3f, &cfg));
        assert!(check_outline_system(0.0, 0.0, 0.0, &cfg));
        let cfg_selberg = ExponentConfig::new(0.0, 0.0, 0.0).unwrap();
        assert!(!check_outline_system(0.0, 0.41, 0.0, &cfg_selberg));
    }

    #[test]
    fn criterion_single_prime() {
        let i = inst(&[0.22], 0.6, 0.3);
        let f = factor_by_criterion(&i, &[0]).unwrap();
        assert_eq!(f.b_exp, 0.22);
        assert!(check_triple_constraints(&f, &i));
    }

    #[test]
    fn criterion_rejects_empty_interval() {
        // at level 0.62 the interval is empty: v = 0.24 > u ~ 0.2301
        let i = inst(&[0.23], 0.62, 0.3);
        match factor_by_criterion(&i, &[0]) {
            Err(FactorError::OutsideCriticalInterval { v, u, .. }) => assert!(v > u),
            other => panic!("expected interval failure, got {other:?}"),
        }
    }

    #[test]
    fn greedy_example_succeeds() {
        let i = inst(&[0.19, 0.18, 0.02, 0.02], 0.61, 0.3);
        let f = greedy_factorize(&i).unwrap();
        assert!(check_triple_constraints(&f, &i));
        assert!((f.a_exp + f.b_exp + f.c_exp - 0.41).abs() < 1e-12);
    }

    #[test]
    fn greedy_needs_three_primes() {
        let i = inst(&[0.19, 0.18], 0.61, 0.3);
        assert!(matches!(
            greedy_factorize(&i),
            Err(FactorError::Precondition(_))
        ));
    }

    #[test]
    fn greedy_always_succeeds_under_hypotheses() {
        let cfg = cfg0();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 0..20_000 {
            let i = sample_greedy_hypotheses(&mut rng, &cfg, 12);
            match greedy_factorize(&i) {
                Ok(f) => assert!(check_triple_constraints(&f, &i), "unsound at {k}"),
                Err(e) => panic!("greedy failed under hypotheses at {k}: {e} ({i:?})"),
            }
        }
    }

    #[test]
    fn greedy_bin_invariant() {
        // once greedy succeeds with the full exhaustion path, each bin
        // stays below its capacity
        let i = inst(&[0.19, 0.18, 0.02, 0.02, 0.015], 0.61, 0.3);
        let f = greedy_factorize(&i).unwrap();
        assert!(f.a_exp <= 0.3 + EPS);
        assert!(f.b_exp <= 2.0 * 0.61 - 1.0 + EPS || f.b_exp <= 0.25);
        assert!(check_triple_constraints(&f, &i));
    }

    #[test]
    fn well_single_prime_candidate() {
        let i = inst(&[0.22], 0.6, 0.3);
        let (f, case) = factorize_well(&i).unwrap();
        assert_eq!(case, WellCase::CandidateB { primes: 0b001 });
        assert_eq!(f.b_exp, 0.22);
    }

    #[test]
    fn well_empty_instance() {
        let i = FactorizationInstance::new(vec![], 0.6, 0.3, cfg0()).unwrap();
        let (f, case) = factorize_well(&i).unwrap();
        assert_eq!(case, WellCase::Trivial);
        assert_eq!(f.a_exp + f.b_exp + f.c_exp, 0.0);
    }

    #[test]
    fn brute_force_empty_and_small() {
        let i = FactorizationInstance::new(vec![], 0.6, 0.3, cfg0()).unwrap();
        assert!(brute_force_factorize(&i).is_ok());
        let i = inst(&[0.22, 0.1], 0.6, 0.3);
        let f = brute_force_factorize(&i).unwrap();
        assert!(check_triple_constraints(&f, &i));
        let too_big = vec![0.01; 21];
        let i = FactorizationInstance::new(too_big, 0.6, 0.3, cfg0()).unwrap();
        assert!(matches!(
            brute_force_factorize(&i),
            Err(FactorError::TooManyPrimes(21))
        ));
    }

    #[test]
    fn well_soundness_bulk() {
        let cfg = cfg0();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20_000 {
            let i = sample_well_support(&mut rng, &cfg, 10);
            if let Ok((f, _)) = factorize_well(&i) {
                assert!(check_triple_constraints(&f, &i));
                // the oracle must also find a witness
                assert!(brute_force_factorize(&i).is_ok());
            }
        }
    }

    #[test]
    fn well_completeness_at_guaranteed_levels() {
        let cfg = cfg0();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for k in 0..20_000 {
            let i = sample_guaranteed(&mut rng, &cfg, 12);
            match factorize_well(&i) {
                Ok((f, _)) => assert!(check_triple_constraints(&f, &i)),
                Err(e) => panic!("guaranteed instance failed at {k}: {e} ({i:?})"),
            }
        }
    }

    #[test]
    fn instance_validation() {
        assert!(FactorizationInstance::new(vec![0.1, 0.2], 0.6, 0.3, cfg0()).is_err());
        assert!(FactorizationInstance::new(vec![0.0], 0.6, 0.3, cfg0()).is_err());
        assert!(FactorizationInstance::new(vec![0.6, 0.5], 0.6, 0.3, cfg0()).is_err());
        assert!(FactorizationInstance::new(vec![0.1], 0.6, 0.4, cfg0()).is_err());
    }

    #[test]
    fn rational_critical_interval_against_float() {
        let cfg = cfg0();
        let (v, u) = critical_interval_unchecked(0.6, &cfg);
        let (rv, ru) = rational::critical_interval(&rat(3, 5), &rat(7, 32), &rat(0, 1));
        assert!((v - rational::to_f64(&rv)).abs() < 1e-14);
        assert!((u - rational::to_f64(&ru)).abs() < 1e-14);
    }
}
