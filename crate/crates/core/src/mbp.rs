//! The good-children multitype branching process.
//!
//! A vertex of type `i` whose rotor starts in state `k` will visit the
//! children at positions `k+1..=d_i` before returning to its parent; those are
//! its good children. With i.i.d. rotors this subtree is a multitype
//! Galton-Watson tree whose offspring vector is a deterministic function of
//! the sampled rotor state. Everything the range asymptotics need is derived
//! from its moments.

use std::ops::{Index, IndexMut};

use serde::Serialize;
use thiserror::Error;

use crate::generator::Generator;
use crate::law::{LawError, RotorLaw};
use crate::spectral::{
    self, inverse, is_primitive, Matrix, Rational, RationalMatrix, SpectralError, POWER_TOL,
};

/// `|ρ(M) − 1|` below this is labeled null recurrent.
pub const CLASSIFICATION_TOL: f64 = 1e-9;
const GF_MAX_ITER: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MbpError {
    #[error("type {ty} out of range 1..={n_types}")]
    TypeOutOfRange { ty: usize, n_types: usize },
    #[error("rotor state {state} out of range 0..={degree} for type {ty}")]
    StateOutOfRange { ty: usize, state: usize, degree: usize },
    #[error(transparent)]
    Law(#[from] LawError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("argument {index} = {value} lies outside [0, 1]")]
    Domain { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("total progeny moments need rho(M) < 1, got rho(M) = {rho}")]
    NotSubcritical { rho: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {delta:e})")]
    NoConvergence { iterations: usize, delta: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Rotor-walk regime read off `ρ(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    PositiveRecurrent,
    NullRecurrent,
    Transient,
}

impl Classification {
    pub fn from_rho(rho: f64) -> Self {
        if (rho - 1.0).abs() < CLASSIFICATION_TOL {
            Classification::NullRecurrent
        } else if rho < 1.0 {
            Classification::PositiveRecurrent
        } else {
            Classification::Transient
        }
    }

    pub fn is_recurrent(self) -> bool {
        !matches!(self, Classification::Transient)
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::PositiveRecurrent => "positive_recurrent",
            Classification::NullRecurrent => "null_recurrent",
            Classification::Transient => "transient",
        }
    }
}

/// `n × n × n` tensor indexed as `[(i, j, k)]`, e.g. `σ^i_{jk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The matrix `(t[(i, j, k)])_{j,k}` for a fixed `i`.
    pub fn slice(&self, i: usize) -> Matrix {
        Matrix::from_fn(self.n, |j, k| self[(i, j, k)])
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

impl Serialize for Tensor3 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let nested: Vec<Vec<Vec<f64>>> = (0..self.n).map(|i| self.slice(i).rows()).collect();
        nested.serialize(s)
    }
}

/// `𝔠_i^j(k)`: good children of each type for a type-`ty` vertex whose rotor
/// starts at `state` (0-based types).
pub fn good_children_counts(g: &Generator, ty: usize, state: usize) -> Result<Vec<u32>, MbpError> {
    if ty >= g.n_types() {
        return Err(MbpError::TypeOutOfRange {
            ty: ty + 1,
            n_types: g.n_types(),
        });
    }
    let d = g.degree(ty);
    if state > d {
        return Err(MbpError::StateOutOfRange {
            ty: ty + 1,
            state,
            degree: d,
        });
    }
    let mut counts = vec![0u32; g.n_types()];
    for &child in &g.word(ty)[state..] {
        counts[child] += 1;
    }
    Ok(counts)
}

/// One atom of an offspring distribution. The rotor state that produced the
/// offspring vector is kept so that walk and branching process can be coupled.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub state: usize,
    pub counts: Vec<u32>,
    pub prob: f64,
    pub exact: Option<Rational>,
}

impl Offspring {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Offspring law `p^i` of the good-children process, per type.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    n_types: usize,
    entries: Vec<Vec<Offspring>>,
}

impl OffspringLaw {
    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn entries(&self, ty: usize) -> &[Offspring] {
        &self.entries[ty]
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.exact.is_some())
    }
}

/// Builds `p^i` from the generator and rotor law. Zero-probability rotor
/// states are dropped; equal offspring vectors are not merged.
pub fn offspring_law(g: &Generator, law: &RotorLaw) -> Result<OffspringLaw, MbpError> {
    law.check_matches(g)?;
    let mut entries = Vec::with_capacity(g.n_types());
    for ty in 0..g.n_types() {
        let mut row = Vec::new();
        for state in 0..=g.degree(ty) {
            let prob = law.prob(ty, state);
            if prob <= 0.0 {
                continue;
            }
            row.push(Offspring {
                state,
                counts: good_children_counts(g, ty, state)?,
                prob,
                exact: law.exact_prob(ty, state).cloned(),
            });
        }
        entries.push(row);
    }
    Ok(OffspringLaw {
        n_types: g.n_types(),
        entries,
    })
}

/// `m_ij = Σ_k 𝒟_i(k) 𝔠_i^j(k)`.
pub fn first_moment_matrix(ol: &OffspringLaw) -> Matrix {
    let n = ol.n_types;
    let mut m = Matrix::zeros(n);
    for (i, row) in ol.entries.iter().enumerate() {
        for e in row {
            for j in 0..n {
                m[(i, j)] += e.prob * f64::from(e.counts[j]);
            }
        }
    }
    m
}

/// Exact `M` when the law is rational.
pub fn first_moment_exact(ol: &OffspringLaw) -> Option<RationalMatrix> {
    if !ol.is_exact() {
        return None;
    }
    let n = ol.n_types;
    let mut m = RationalMatrix::zeros(n);
    for (i, row) in ol.entries.iter().enumerate() {
        for e in row {
            let p = e.exact.as_ref().expect("exact law");
            for j in 0..n {
                if e.counts[j] > 0 {
                    m[(i, j)] += p * Rational::from_integer(e.counts[j].into());
                }
            }
        }
    }
    Some(m)
}

/// Raw mixed second moments `σ^i_{jk} = 𝔼[Z_{1,j} Z_{1,k} | Z_0 = e_i]`.
///
/// The second derivative `∂²f^i/∂z_j∂z_k` at `1` is the factorial version
/// `σ^i_{jk} − δ_{jk} m_ij`; see [`factorial_second_moments`].
pub fn second_moments(ol: &OffspringLaw) -> Tensor3 {
    let n = ol.n_types;
    let mut s = Tensor3::zeros(n);
    for (i, row) in ol.entries.iter().enumerate() {
        for e in row {
            for j in 0..n {
                if e.counts[j] == 0 {
                    continue;
                }
                for k in 0..n {
                    s[(i, j, k)] += e.prob * f64::from(e.counts[j]) * f64::from(e.counts[k]);
                }
            }
        }
    }
    s
}

/// `σ^i_{jk} − δ_{jk} m_ij`, the Hessian of the offspring generating function
/// at `1`.
pub fn factorial_second_moments(m: &Matrix, sigma: &Tensor3) -> Tensor3 {
    let n = m.dim();
    let mut out = sigma.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j, j)] -= m[(i, j)];
        }
    }
    out
}

/// Mean matrix `V = (I − M)⁻¹` and raw mixed second moments
/// `ξ^i_{jk} = 𝔼[Y_j Y_k | Z_0 = e_i]` of the total progeny `Y`.
///
/// For each `k` the factorial moments solve `S_k = M S_k + Γ_k`, where
/// `Γ_k[i][j] = Σ_a m_ia(δ_ik v_aj + δ_ij v_ak) + Σ_ab σ̃^i_ab v_aj v_bk` and
/// `σ̃` is the factorial offspring moment. The raw moment adds back
/// `δ_jk v_ij`.
pub fn total_size_moments(m: &Matrix, sigma: &Tensor3) -> Result<(Matrix, Tensor3), MbpError> {
    let n = m.dim();
    if sigma.dim() != n {
        return Err(MbpError::Dimension {
            expected: n,
            got: sigma.dim(),
        });
    }
    let rho = spectral::spectral_radius(m, POWER_TOL)?;
    if Classification::from_rho(rho) != Classification::PositiveRecurrent {
        return Err(MbpError::NotSubcritical { rho });
    }
    let v = inverse(&Matrix::identity(n).sub(m))?;
    let fact = factorial_second_moments(m, sigma);

    let mut xi = Tensor3::zeros(n);
    for k in 0..n {
        let gamma_k = Matrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for a in 0..n {
                let mut inner = 0.0;
                if i == k {
                    inner += v[(a, j)];
                }
                if i == j {
                    inner += v[(a, k)];
                }
                acc += m[(i, a)] * inner;
                for b in 0..n {
                    acc += fact[(i, a, b)] * v[(a, j)] * v[(b, k)];
                }
            }
            acc
        });
        let s_k = v.mul(&gamma_k);
        for i in 0..n {
            for j in 0..n {
                xi[(i, j, k)] = s_k[(i, j)] + if j == k { v[(i, j)] } else { 0.0 };
            }
        }
    }
    Ok((v, xi))
}

/// Everything the analysis derives from a generator and a rotor law.
#[derive(Debug, Clone, Serialize)]
pub struct MomentData {
    pub n_types: usize,
    pub adjacency: Matrix,
    /// First-moment matrix `M`.
    pub m: Matrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_exact: Option<RationalMatrix>,
    /// Raw mixed second moments `σ`.
    pub sigma: Tensor3,
    pub rho_m: f64,
    pub classification: Classification,
    /// `(I − M)⁻¹`, present when positive recurrent.
    pub v: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_exact: Option<RationalMatrix>,
    /// Raw second moments `𝔼[Y_j Y_k]` of the total progeny.
    pub xi: Option<Tensor3>,
    /// `I + (D − I)(I − M)⁻¹`.
    pub gamma_matrix: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_matrix_exact: Option<RationalMatrix>,
    /// Mean offspring matrix of the leaf process: row `i` is
    /// `𝔼[L_1 | L_0 = e_i] = e_i + (V(D − I))_{i·}`.
    pub leaf_mean: Option<Matrix>,
    pub gamma: Option<f64>,
    pub predicted_limit: Option<f64>,
    pub warnings: Vec<String>,
}

impl MomentData {
    /// `Γ`, the transpose of [`MomentData::gamma_matrix`].
    pub fn gamma_transposed(&self) -> Option<Matrix> {
        self.gamma_matrix.as_ref().map(Matrix::transpose)
    }
}

/// `½(1 − 1/γ)`, refused for `γ < 1`. `γ = 1` gives 0.
pub fn range_limit(gamma: f64) -> Option<f64> {
    if gamma < 1.0 - CLASSIFICATION_TOL {
        None
    } else if gamma <= 1.0 + CLASSIFICATION_TOL {
        Some(0.0)
    } else {
        Some(0.5 * (1.0 - 1.0 / gamma))
    }
}

/// Full analysis of the good-children process and the range limit.
pub fn analyze(g: &Generator, law: &RotorLaw) -> Result<MomentData, MbpError> {
    let ol = offspring_law(g, law)?;
    let n = g.n_types();
    let d = g.adjacency();
    let m = first_moment_matrix(&ol);
    let m_exact = first_moment_exact(&ol);
    let sigma = second_moments(&ol);
    let rho_m = spectral::spectral_radius(&m, POWER_TOL)?;
    let classification = Classification::from_rho(rho_m);

    let mut warnings = Vec::new();
    if !is_primitive(&m) {
        warnings.push("first moment matrix M is not primitive (process not positive regular)".to_string());
    }
    let nonsingular = ol.entries.iter().flatten().any(|e| e.total() != 1);
    if !nonsingular {
        warnings.push("offspring law is singular: every particle has exactly one child".to_string());
    }

    let mut data = MomentData {
        n_types: n,
        adjacency: d.clone(),
        m,
        m_exact,
        sigma,
        rho_m,
        classification,
        v: None,
        v_exact: None,
        xi: None,
        gamma_matrix: None,
        gamma_matrix_exact: None,
        leaf_mean: None,
        gamma: None,
        predicted_limit: None,
        warnings,
    };
    if classification != Classification::PositiveRecurrent {
        return Ok(data);
    }

    let (v, xi) = total_size_moments(&data.m, &data.sigma)?;
    let id = Matrix::identity(n);
    let d_minus_i = d.sub(&id);
    let gamma_matrix = id.add(&d_minus_i.mul(&v));
    let leaf_mean = id.add(&v.mul(&d_minus_i));
    let gamma = spectral::spectral_radius(&gamma_matrix, POWER_TOL)?;

    if let Some(me) = &data.m_exact {
        let v_exact = RationalMatrix::identity(n).sub(me).inverse()?;
        let id_q = RationalMatrix::identity(n);
        data.gamma_matrix_exact = Some(id_q.add(&g.adjacency_exact().sub(&id_q).mul(&v_exact)));
        data.v_exact = Some(v_exact);
    }
    let predicted = range_limit(gamma);
    if predicted.is_none() {
        data.warnings.push(format!("gamma = {gamma} < 1: no range limit predicted"));
    } else if gamma <= 1.0 + CLASSIFICATION_TOL {
        data.warnings.push("gamma = 1: range grows sublinearly, limit 0".to_string());
    }
    data.v = Some(v);
    data.xi = Some(xi);
    data.gamma_matrix = Some(gamma_matrix);
    data.leaf_mean = Some(leaf_mean);
    data.gamma = Some(gamma);
    data.predicted_limit = predicted;
    Ok(data)
}

/// Offspring generating function `f(z)`, evaluated for `z ∈ [0,1]^n`.
pub fn mbp_generating_function(ol: &OffspringLaw, z: &[f64]) -> Result<Vec<f64>, MbpError> {
    check_unit_box(ol.n_types, z)?;
    Ok(eval_f(ol, z))
}

fn check_unit_box(n: usize, z: &[f64]) -> Result<(), MbpError> {
    if z.len() != n {
        return Err(MbpError::Dimension {
            expected: n,
            got: z.len(),
        });
    }
    for (index, &value) in z.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(MbpError::Domain { index, value });
        }
    }
    Ok(())
}

fn eval_f(ol: &OffspringLaw, z: &[f64]) -> Vec<f64> {
    ol.entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    e.prob
                        * e.counts
                            .iter()
                            .zip(z)
                            .map(|(&s, &x)| x.powi(s as i32))
                            .product::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Minimal solution of `F^i(z) = z_i f^i(F(z))`, the generating function of
/// the total progeny, by iteration from `F = 0`. Stops when successive
/// iterates differ by at most `tol` in every coordinate.
pub fn total_size_gf(ol: &OffspringLaw, z: &[f64], tol: f64) -> Result<Vec<f64>, MbpError> {
    check_unit_box(ol.n_types, z)?;
    let mut f = vec![0.0; ol.n_types];
    let mut delta = f64::INFINITY;
    for _ in 0..GF_MAX_ITER {
        let next: Vec<f64> = eval_f(ol, &f).iter().zip(z).map(|(fi, zi)| zi * fi).collect();
        delta = next.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = next;
        if delta <= tol {
            return Ok(f);
        }
    }
    Err(MbpError::NoConvergence {
        iterations: GF_MAX_ITER,
        delta,
    })
}

/// Checks `2M = D` exactly under the uniform law. Errors when the generator is
/// not palindromic.
pub fn palindromic_first_moment_identity(g: &Generator) -> Result<bool, MbpError> {
    if !g.is_palindromic() {
        return Err(MbpError::Precondition("generator is not palindromic".into()));
    }
    let ol = offspring_law(g, &RotorLaw::uniform(g))?;
    let m = first_moment_exact(&ol).expect("uniform law is rational");
    let two = Rational::from_integer(2.into());
    Ok(m.scale(&two) == g.adjacency_exact())
}

/// True iff `V` dominates the identity entrywise.
#[cfg(test)]
fn dominates_identity(v: &Matrix) -> bool {
    let n = v.dim();
    (0..n).all(|i| (0..n).all(|j| v[(i, j)] >= if i == j { 1.0 - 1e-12 } else { -1e-12 }))
}
