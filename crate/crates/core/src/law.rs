//! Distributions of the initial rotor configuration.

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::generator::Generator;
use crate::spectral::Rational;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LawError {
    #[error("rotor law covers {law} types but the generator has {generator}")]
    TypeCount { law: usize, generator: usize },
    #[error("rotor law for type {}: {message}", ty + 1)]
    Invalid { ty: usize, message: String },
}

/// One probability as written in a file: exact (`1`, `"1/3"`) or floating.
#[derive(Debug, Clone, PartialEq)]
pub enum LawEntry {
    Exact(Rational),
    Float(f64),
}

impl LawEntry {
    pub(crate) fn from_toml(v: &toml::Value) -> Result<Self, String> {
        match v {
            toml::Value::Integer(n) => Ok(LawEntry::Exact(Rational::from_integer((*n).into()))),
            toml::Value::Float(x) => Ok(LawEntry::Float(*x)),
            toml::Value::String(s) => parse_fraction(s).map(LawEntry::Exact),
            other => Err(format!("expected a number or \"p/q\" string, got {other}")),
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            LawEntry::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            LawEntry::Float(x) => *x,
        }
    }
}

fn parse_fraction(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: num_bigint::BigInt = num.parse().map_err(|_| format!("bad fraction `{s}`"))?;
    let den: num_bigint::BigInt = den.parse().map_err(|_| format!("bad fraction `{s}`"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in `{s}`"));
    }
    Ok(Rational::new(num, den))
}

/// Per-type law `𝒟_i` over rotor states `0..=d_i`; state 0 points to the
/// parent and state `k >= 1` to the `k`-th child.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorLaw {
    probs: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<Rational>>>,
    cdf: Vec<Vec<f64>>,
}

impl RotorLaw {
    /// `𝒟_i(k) = 1/(d_i+1)` for every type.
    pub fn uniform(g: &Generator) -> Self {
        let entries = g.degrees().into_iter().map(Self::uniform_entries).collect();
        Self::from_entries(g, entries).expect("uniform law is valid")
    }

    pub(crate) fn uniform_entries(d: usize) -> Vec<LawEntry> {
        let p = Rational::new(1.into(), ((d + 1) as i64).into());
        vec![LawEntry::Exact(p); d + 1]
    }

    /// Point mass at `state(i)` for each type `i`.
    pub fn point_mass(g: &Generator, state: impl Fn(usize) -> usize) -> Result<Self, LawError> {
        let entries = (0..g.n_types())
            .map(|i| {
                let k = state(i);
                (0..=g.degree(i))
                    .map(|s| {
                        LawEntry::Exact(if s == k { Rational::one() } else { Rational::zero() })
                    })
                    .collect()
            })
            .collect();
        Self::from_entries(g, entries)
    }

    /// Every rotor starts fully turned (`𝒟_i(d_i) = 1`): no good children.
    pub fn fully_turned(g: &Generator) -> Self {
        Self::point_mass(g, |i| g.degree(i)).expect("valid point mass")
    }

    /// Floating-point law; rows must sum to 1 within 1e-12.
    pub fn from_probs(g: &Generator, probs: Vec<Vec<f64>>) -> Result<Self, LawError> {
        let entries = probs
            .into_iter()
            .map(|row| row.into_iter().map(LawEntry::Float).collect())
            .collect();
        Self::from_entries(g, entries)
    }

    /// Exact rational law.
    pub fn from_rationals(g: &Generator, probs: Vec<Vec<Rational>>) -> Result<Self, LawError> {
        let entries = probs
            .into_iter()
            .map(|row| row.into_iter().map(LawEntry::Exact).collect())
            .collect();
        Self::from_entries(g, entries)
    }

    pub fn from_entries(g: &Generator, entries: Vec<Vec<LawEntry>>) -> Result<Self, LawError> {
        if entries.len() != g.n_types() {
            return Err(LawError::TypeCount {
                law: entries.len(),
                generator: g.n_types(),
            });
        }
        let all_exact = entries
            .iter()
            .flatten()
            .all(|e| matches!(e, LawEntry::Exact(_)));
        let mut probs = Vec::with_capacity(entries.len());
        let mut exact = Vec::with_capacity(entries.len());
        for (ty, row) in entries.iter().enumerate() {
            let d = g.degree(ty);
            if row.len() != d + 1 {
                return Err(LawError::Invalid {
                    ty,
                    message: format!("expected {} probabilities, got {}", d + 1, row.len()),
                });
            }
            let floats: Vec<f64> = row.iter().map(LawEntry::to_f64).collect();
            if floats.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(LawError::Invalid {
                    ty,
                    message: "probabilities must be finite and nonnegative".into(),
                });
            }
            if all_exact {
                let qs: Vec<Rational> = row
                    .iter()
                    .map(|e| match e {
                        LawEntry::Exact(q) => q.clone(),
                        LawEntry::Float(_) => unreachable!(),
                    })
                    .collect();
                if qs.iter().any(|q| q.is_negative()) {
                    return Err(LawError::Invalid {
                        ty,
                        message: "probabilities must be nonnegative".into(),
                    });
                }
                let total: Rational = qs.iter().cloned().sum();
                if !total.is_one() {
                    return Err(LawError::Invalid {
                        ty,
                        message: format!("probabilities sum to {total}, not 1"),
                    });
                }
                exact.push(qs);
            } else {
                let total: f64 = floats.iter().sum();
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(LawError::Invalid {
                        ty,
                        message: format!("probabilities sum to {total}, not 1"),
                    });
                }
            }
            probs.push(floats);
        }
        let cdf = probs
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                let mut c: Vec<f64> = row
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                // Guard the last bucket against rounding.
                if let Some(last) = c.last_mut() {
                    *last = f64::INFINITY;
                }
                c
            })
            .collect();
        Ok(RotorLaw {
            probs,
            exact: all_exact.then_some(exact),
            cdf,
        })
    }

    pub fn n_types(&self) -> usize {
        self.probs.len()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn prob(&self, ty: usize, state: usize) -> f64 {
        self.probs[ty][state]
    }

    pub fn probs(&self, ty: usize) -> &[f64] {
        &self.probs[ty]
    }

    pub fn exact_prob(&self, ty: usize, state: usize) -> Option<&Rational> {
        self.exact.as_ref().map(|e| &e[ty][state])
    }

    /// `𝔼[𝒟_i] = Σ_k k 𝒟_i(k)`.
    pub fn mean_state(&self, ty: usize) -> f64 {
        self.probs[ty]
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn is_uniform(&self) -> bool {
        match &self.exact {
            Some(rows) => rows
                .iter()
                .all(|row| row.iter().all(|q| *q == Rational::new(1.into(), (row.len() as i64).into()))),
            None => false,
        }
    }

    /// Inverse-CDF sample of the rotor state for a uniform `u` in `[0, 1)`.
    pub fn sample(&self, ty: usize, u: f64) -> usize {
        let cdf = &self.cdf[ty];
        cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
    }

    pub(crate) fn check_matches(&self, g: &Generator) -> Result<(), LawError> {
        if self.n_types() != g.n_types() {
            return Err(LawError::TypeCount {
                law: self.n_types(),
                generator: g.n_types(),
            });
        }
        for ty in 0..g.n_types() {
            if self.probs[ty].len() != g.degree(ty) + 1 {
                return Err(LawError::Invalid {
                    ty,
                    message: format!(
                        "law has {} states but type has {} children",
                        self.probs[ty].len(),
                        g.degree(ty)
                    ),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt2() -> Generator {
        Generator::from_one_based(&[&[2, 2], &[1]]).unwrap()
    }

    #[test]
    fn uniform_law() {
        let law = RotorLaw::uniform(&sqrt2());
        assert!(law.is_exact());
        assert!(law.is_uniform());
        assert_eq!(law.probs(0), &[1.0 / 3.0; 3]);
        assert_eq!(law.probs(1), &[0.5, 0.5]);
        assert_eq!(law.mean_state(0), 1.0);
    }

    #[test]
    fn sampling_follows_cdf() {
        let g = sqrt2();
        let law = RotorLaw::from_probs(&g, vec![vec![0.2, 0.0, 0.8], vec![1.0, 0.0]]).unwrap();
        assert_eq!(law.sample(0, 0.0), 0);
        assert_eq!(law.sample(0, 0.1999), 0);
        assert_eq!(law.sample(0, 0.2), 2);
        assert_eq!(law.sample(0, 0.999_999), 2);
        assert_eq!(law.sample(1, 0.7), 0);
        let turned = RotorLaw::fully_turned(&g);
        assert_eq!(turned.sample(0, 0.0), 2);
        assert_eq!(turned.sample(1, 0.5), 1);
    }

    #[test]
    fn rejects_bad_rows() {
        let g = sqrt2();
        assert!(RotorLaw::from_probs(&g, vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_err());
        assert!(RotorLaw::from_probs(&g, vec![vec![0.5, 0.6, -0.1], vec![1.0, 0.0]]).is_err());
        assert!(RotorLaw::from_probs(&g, vec![vec![1.0, 0.0, 0.0]]).is_err());
        let third = Rational::new(1.into(), 3.into());
        assert!(RotorLaw::from_rationals(
            &g,
            vec![vec![third.clone(), third.clone(), third], vec![Rational::one(), Rational::one()]]
        )
        .is_err());
    }

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_fraction("3/6").unwrap(), Rational::new(1.into(), 2.into()));
        assert_eq!(parse_fraction(" 2 ").unwrap(), Rational::from_integer(2.into()));
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("x").is_err());
    }
}
