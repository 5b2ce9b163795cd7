//! Flat JSON parameter files with decimal-string numbers (plain JSON
//! numbers are also accepted), and "p/q" rational strings for exponents.

use serde_json::Value;
use wellfactor::SieveParams;

/// Parse "p/q", a decimal string, or a plain integer into f64.
pub fn parse_ratio(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        if q == 0.0 {
            return None;
        }
        Some(p / q)
    } else {
        s.parse().ok()
    }
}

fn field(v: &Value, name: &str) -> Result<f64, String> {
    let raw = v
        .get(name)
        .ok_or_else(|| format!("missing field `{name}`"))?;
    match raw {
        Value::String(s) => {
            parse_ratio(s).ok_or_else(|| format!("field `{name}` is not a number: {s}"))
        }
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| format!("field `{name}` is not representable")),
        _ => Err(format!("field `{name}` must be a string or number")),
    }
}

pub fn parse_params_json(text: &str) -> Result<SieveParams, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("bad JSON: {e}"))?;
    Ok(SieveParams {
        rho: field(&v, "rho")?,
        rho_prime: field(&v, "rho_prime")?,
        tau1: field(&v, "tau1")?,
        tau2: field(&v, "tau2")?,
        tau3: field(&v, "tau3")?,
        mu: field(&v, "mu")?,
        eps: field(&v, "eps")?,
    })
}
