//! The `--policy` and `--tail` mini-languages.
//!
//! Policies: `flat:0.2`, `<family>:k=v,...` (catalogue forms, with `B` for `B_inf`,
//! `D` and `wmin`), `piecewise:w=chi,w=chi,...`, `file:path.csv`.
//! Tails: `<family>[:k=v,...]` with families `exponential`, `pareto`, `lognormal`,
//! `inverse-gamma`, `gaussian`, `hog`, `powerlog` and the shorthand `loglog` for `f = ln w`.

use std::collections::BTreeMap;
use std::path::Path;

use awm_core::{CatalogueFamily, RedistributionPolicy, TailFamily, TailFunction};

use crate::Usage;

type Params = BTreeMap<String, f64>;

fn split(spec: &str) -> (&str, &str) {
    match spec.split_once(':') {
        Some((name, rest)) => (name.trim(), rest.trim()),
        None => (spec.trim(), ""),
    }
}

fn key_values(body: &str) -> Result<Params, Usage> {
    let mut out = Params::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| Usage(format!("expected key=value, got {item:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| Usage(format!("{k}: not a number: {v:?}")))?;
        if !v.is_finite() {
            return Err(Usage(format!("{k} must be finite")));
        }
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(Usage(format!("{k} given twice")));
        }
    }
    Ok(out)
}

/// Removes and returns `key`, or `default` when absent.
fn take(p: &mut Params, key: &str, default: f64) -> f64 {
    p.remove(key).unwrap_or(default)
}

fn finish(name: &str, p: Params) -> Result<(), Usage> {
    match p.keys().next() {
        Some(k) => Err(Usage(format!("{name}: unknown parameter {k:?}"))),
        None => Ok(()),
    }
}

fn normalize(name: &str) -> String {
    name.to_ascii_lowercase().replace('_', "-")
}

fn catalogue_family(name: &str, p: &mut Params) -> Option<CatalogueFamily> {
    Some(match normalize(name).as_str() {
        "exponential" => CatalogueFamily::Exponential,
        "lognormal" => CatalogueFamily::Lognormal { sigma: take(p, "sigma", 1.0) },
        "pareto" => CatalogueFamily::Pareto { alpha: take(p, "alpha", 1.0) },
        "inverse-gamma" | "inversegamma" => {
            CatalogueFamily::InverseGamma { alpha: take(p, "alpha", 1.0), beta: take(p, "beta", 1.0) }
        }
        "gaussian" => CatalogueFamily::Gaussian { sigma: take(p, "sigma", 1.0) },
        "hog" | "higher-order-gaussian" => {
            CatalogueFamily::HigherOrderGaussian { m: take(p, "m", 2.0), sigma: take(p, "sigma", 1.0) }
        }
        _ => return None,
    })
}

/// Parse a policy; catalogue forms take their constant part from `zeta`.
pub fn parse_policy(spec: &str, zeta: f64) -> anyhow::Result<RedistributionPolicy> {
    let (name, body) = split(spec);
    match normalize(name).as_str() {
        "flat" => {
            let chi: f64 = body.parse().map_err(|_| Usage(format!("flat: expected a rate, got {body:?}")))?;
            if !(chi >= 0.0 && chi.is_finite()) {
                return Err(Usage(format!("flat rate must be >= 0, got {chi}")).into());
            }
            Ok(RedistributionPolicy::flat(chi))
        }
        "piecewise" => {
            let knots = body
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|kv| {
                    let (w, c) = kv.split_once('=').ok_or_else(|| Usage(format!("expected w=chi, got {kv:?}")))?;
                    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Usage(format!("not a number: {s:?}")));
                    Ok((parse(w)?, parse(c)?))
                })
                .collect::<Result<Vec<_>, Usage>>()?;
            Ok(RedistributionPolicy::piecewise(knots).map_err(|e| Usage(e.to_string()))?)
        }
        "file" => {
            if body.is_empty() {
                return Err(Usage("file: missing path".into()).into());
            }
            // a missing or malformed file is a runtime failure, not a usage error
            RedistributionPolicy::read_sampled_csv(Path::new(body))
                .map_err(|e| anyhow::anyhow!("policy file {body}: {e}"))
        }
        other => {
            let mut p = key_values(body)?;
            let family = catalogue_family(other, &mut p).ok_or_else(|| Usage(format!("unknown policy {other:?}")))?;
            let b = take(&mut p, "B", 1.0);
            let d = take(&mut p, "D", 0.0);
            let w_min = take(&mut p, "wmin", 1.0);
            finish(other, p)?;
            if family == CatalogueFamily::Exponential {
                return Ok(RedistributionPolicy::flat(zeta));
            }
            let mut policy = RedistributionPolicy::catalogue(family, b, d, zeta).map_err(|e| Usage(e.to_string()))?;
            if let RedistributionPolicy::Catalogue { w_min: ref mut m, .. } = policy {
                if !(w_min > 0.0) {
                    return Err(Usage(format!("wmin must be > 0, got {w_min}")).into());
                }
                *m = w_min;
            }
            Ok(policy)
        }
    }
}

/// Parse a tail exponent family.
pub fn parse_tail(spec: &str) -> Result<TailFamily, Usage> {
    let (name, body) = split(spec);
    let mut p = key_values(body)?;
    let family = match normalize(name).as_str() {
        "exponential" => TailFamily::Exponential { rate: take(&mut p, "rate", 1.0) },
        "powerlog" => {
            TailFamily::PowerLog { coeff: take(&mut p, "c", 1.0), p: take(&mut p, "p", 1.0), q: take(&mut p, "q", 0.0) }
        }
        "loglog" => TailFamily::PowerLog { coeff: 1.0, p: 0.0, q: 1.0 },
        other => match catalogue_family(other, &mut p) {
            Some(c) => match c {
                CatalogueFamily::Lognormal { sigma } => TailFamily::Lognormal { sigma },
                CatalogueFamily::Pareto { alpha } => TailFamily::Pareto { alpha },
                CatalogueFamily::InverseGamma { alpha, beta } => TailFamily::InverseGamma { alpha, beta },
                CatalogueFamily::Gaussian { sigma } => TailFamily::Gaussian { sigma },
                CatalogueFamily::HigherOrderGaussian { m, sigma } => TailFamily::HigherOrderGaussian { m, sigma },
                CatalogueFamily::Exponential => unreachable!(),
            },
            None => return Err(Usage(format!("unknown tail family {other:?}"))),
        },
    };
    finish(name, p)?;
    family.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(family)
}

pub fn tail_function(family: TailFamily) -> Result<TailFunction, Usage> {
    TailFunction::family(family).map_err(|e| Usage(e.to_string()))
}

/// The catalogue row matching a tail family, if there is one.
pub fn catalogue_of(family: &TailFamily) -> Option<CatalogueFamily> {
    Some(match *family {
        TailFamily::Exponential { .. } => CatalogueFamily::Exponential,
        TailFamily::Lognormal { sigma } => CatalogueFamily::Lognormal { sigma },
        TailFamily::Pareto { alpha } => CatalogueFamily::Pareto { alpha },
        TailFamily::InverseGamma { alpha, beta } => CatalogueFamily::InverseGamma { alpha, beta },
        TailFamily::Gaussian { sigma } => CatalogueFamily::Gaussian { sigma },
        TailFamily::HigherOrderGaussian { m, sigma } => CatalogueFamily::HigherOrderGaussian { m, sigma },
        TailFamily::PowerLog { .. } => return None,
    })
}

/// Closed-form rate of a catalogue row as text, in terms of the moment constants.
pub fn closed_form(family: &CatalogueFamily) -> String {
    let c0 = "zeta (2 L_inf - 1)";
    match *family {
        CatalogueFamily::Exponential => format!("flat: chi = {c0}"),
        CatalogueFamily::Lognormal { sigma } => {
            format!("chi(w) = {c0} + D/w + 2 B_inf ln(w) / ({sigma}^2 w^2)")
        }
        CatalogueFamily::Pareto { alpha } => format!("chi(w) = {c0} + D/w + {} B_inf / w^2", alpha + 1.0),
        CatalogueFamily::InverseGamma { alpha, beta } => {
            format!("chi(w) = {c0} + D/w + {} B_inf / w^2 - {beta} B_inf / w^3", alpha + 1.0)
        }
        CatalogueFamily::Gaussian { sigma } => format!("chi(w) = {c0} + D/w + 2 B_inf / {sigma}^2"),
        CatalogueFamily::HigherOrderGaussian { m, sigma } => {
            format!("chi(w) = {} B_inf w^{} / {sigma}^{}", 2.0 * m, 2.0 * m - 2.0, 2.0 * m)
        }
    }
}
