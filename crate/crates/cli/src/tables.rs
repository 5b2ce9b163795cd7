//! The reference tables and the printed-layout CSV emitter.

use crate::Mismatch;
use wellfactor::bound::BoundReport;

/// Reference values for one parameter set: eight G-values, the
/// three- and four-dimensional integrals as values, caps for the
/// five/six-dimensional ones, and the Wu savings.
pub struct PaperTargets {
    pub g: [f64; 8],
    pub i3: [f64; 7],
    pub i4: [f64; 4],
    pub i20_cap: f64,
    pub i21_cap: f64,
    pub h2: f64,
}

pub const TWIN_TARGETS: PaperTargets = PaperTargets {
    g: [
        38.9215, -5.80465, -4.10858, -5.17066, 1.87682, 0.636696, 0.428799, 0.928682,
    ],
    i3: [
        0.0330294, 0.0247846, 0.0084670, 0.0167535, 0.0566827, 0.0264459, 0.0136088,
    ],
    i4: [0.0000988, 0.000282, 0.000287, 0.000231],
    i20_cap: 3.80e-6,
    i21_cap: 1.02e-8,
    h2: 0.019309,
};

pub const GOLDBACH_TARGETS: PaperTargets = PaperTargets {
    g: [
        37.9006, -4.13212, -3.29997, -3.80586, 1.53741, 0.365983, 0.362074, 0.756609,
    ],
    i3: [
        0.0153459, 0.0130481, 0.0023251, 0.0095937, 0.0296655, 0.0093697, 0.0048386,
    ],
    i4: [1.19e-5, 4.63e-5, 6.53e-5, 0.000109],
    i20_cap: 9.20e-7,
    i21_cap: 2.62e-9,
    h2: 0.025787,
};

pub fn check_against_targets(
    label: &str,
    report: &BoundReport,
    t: &PaperTargets,
    mismatches: &mut Vec<Mismatch>,
) {
    for (k, &target) in t.g.iter().enumerate() {
        let got = report.g_values[k];
        if (got - target).abs() / target.abs() > 1e-3 {
            mismatches.push(Mismatch(format!(
                "{label}: G{} = {got} vs {target} (0.1% rel)",
                k + 1
            )));
        }
    }
    for (k, &target) in t.i3.iter().enumerate() {
        let got = report.i_values[k];
        if (got - target).abs() > 1e-4 {
            mismatches.push(Mismatch(format!(
                "{label}: I{} = {got} vs {target} (1e-4 abs)",
                k + 9
            )));
        }
    }
    for (k, &target) in t.i4.iter().enumerate() {
        let got = report.i_values[7 + k];
        if (got - target).abs() > 5e-5 {
            mismatches.push(Mismatch(format!(
                "{label}: I{} = {got} vs {target} (5e-5 abs)",
                k + 16
            )));
        }
    }
    if report.i_values[11] > t.i20_cap {
        mismatches.push(Mismatch(format!(
            "{label}: I20 = {} above cap {}",
            report.i_values[11], t.i20_cap
        )));
    }
    if report.i_values[12] > t.i21_cap {
        mismatches.push(Mismatch(format!(
            "{label}: I21 = {} above cap {}",
            report.i_values[12], t.i21_cap
        )));
    }
    if (report.h2wu - t.h2).abs() / t.h2 > 0.02 {
        mismatches.push(Mismatch(format!(
            "{label}: H2Wu = {} vs {} (2% rel)",
            report.h2wu, t.h2
        )));
    }
}

/// CSV with the same row/column arrangement as the printed tables:
/// `n, G_n` paired with two `n, I_n` column groups.
pub fn reference_table_csv(report: &BoundReport) -> String {
    let mut csv = String::from("n,G_n,n,I_n,n,I_n\n");
    for row in 0..8 {
        let g = report.g_values[row];
        let i_left = report.i_values[row];
        let left_n = row + 9;
        let right = if row < 5 {
            let n = row + 17;
            format!("{},{:.6e}", n, report.i_values[8 + row])
        } else {
            ",".to_string()
        };
        csv.push_str(&format!(
            "{},{:.6},{},{:.7},{}\n",
            row + 1,
            g,
            left_n,
            i_left,
            right
        ));
    }
    csv
}
