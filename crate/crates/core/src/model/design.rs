//! Synthetic designs with a prescribed Gram spectrum.
//!
//! `X` is never needed by the posterior computations: everything goes
//! through `X^T X = Q diag(e) Q^T`, with the eigenvalues `e_i = n d_i` chosen
//! so that the eigenvalues `1/d_i` of `n (X^T X)^{-1}` sit inside
//! `[lambda_min, lambda_max]`. A dense `X` is materialised only for the
//! full-data cross-check.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::sample_normal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    /// `X^T X = n I`.
    OrthogonalScaled,
    /// `X^T X = n Q diag(d) Q^T`. The spectrum is recycled when shorter
    /// than `p`; `Q = I` unless `rotated` is set, in which case `Q` is a
    /// random orthonormal basis.
    DiagonalSpectrum {
        spectrum: Vec<f64>,
        lambda_min: f64,
        lambda_max: f64,
        #[serde(default)]
        rotated: bool,
    },
}

impl DesignSpec {
    /// `(lambda_min, lambda_max)` bounds on the eigenvalues of `n (X^T X)^{-1}`.
    pub fn lambda_bounds(&self) -> (f64, f64) {
        match self {
            DesignSpec::OrthogonalScaled => (1.0, 1.0),
            DesignSpec::DiagonalSpectrum { lambda_min, lambda_max, .. } => (*lambda_min, *lambda_max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DesignSpec::DiagonalSpectrum { spectrum, lambda_min, lambda_max, .. } = self {
            if !(*lambda_min > 0.0 && lambda_max >= lambda_min && lambda_max.is_finite()) {
                return Err(Error::Invariant(format!(
                    "design needs 0 < lambda_min <= lambda_max < inf, got ({lambda_min}, {lambda_max})"
                )));
            }
            if spectrum.is_empty() {
                return Err(Error::Invariant("diagonal spectrum is empty".into()));
            }
            let (lo, hi) = (1.0 / lambda_max, 1.0 / lambda_min);
            for (i, &d) in spectrum.iter().enumerate() {
                // Tolerate round-off at the reciprocal bounds.
                if !(d >= lo * (1.0 - 1e-12) && d <= hi * (1.0 + 1e-12)) {
                    return Err(Error::Invariant(format!(
                        "spectrum entry d[{i}] = {d} outside [1/lambda_max, 1/lambda_min] = [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_axis_aligned(&self) -> bool {
        !matches!(self, DesignSpec::DiagonalSpectrum { rotated: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Identity,
    /// Column-major `p x p`; column `i` is the eigenvector for eigenvalue `i`.
    Dense(Vec<f64>),
}

/// Eigen-decomposition of `X^T X`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpectrum {
    eigenvalues: Vec<f64>,
    basis: Basis,
}

impl GramSpectrum {
    pub fn new(eigenvalues: Vec<f64>, basis: Basis) -> Result<Self> {
        if let Basis::Dense(q) = &basis {
            if q.len() != eigenvalues.len() * eigenvalues.len() {
                return Err(Error::Dimension("basis is not p x p".into()));
            }
        }
        if eigenvalues.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Invariant("Gram eigenvalues must be positive".into()));
        }
        Ok(Self { eigenvalues, basis })
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn is_axis_aligned(&self) -> bool {
        matches!(self.basis, Basis::Identity)
    }

    /// Coordinates of `v` in the eigenbasis, `Q^T v`.
    pub fn to_eigen(&self, v: &[f64]) -> Vec<f64> {
        match &self.basis {
            Basis::Identity => v.to_vec(),
            Basis::Dense(q) => {
                let p = self.p();
                (0..p).map(|i| q[i * p..(i + 1) * p].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
            }
        }
    }

    /// `Q c`.
    pub fn from_eigen(&self, c: &[f64]) -> Vec<f64> {
        match &self.basis {
            Basis::Identity => c.to_vec(),
            Basis::Dense(q) => {
                let p = self.p();
                let mut out = vec![0.0; p];
                for (i, &ci) in c.iter().enumerate() {
                    for (o, &qi) in out.iter_mut().zip(&q[i * p..(i + 1) * p]) {
                        *o += qi * ci;
                    }
                }
                out
            }
        }
    }

    /// `v^T X^T X v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.to_eigen(v).iter().zip(&self.eigenvalues).map(|(c, e)| e * c * c).sum()
    }

    /// `(X^T X)^{-1} v`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = self.to_eigen(v).iter().zip(&self.eigenvalues).map(|(c, e)| c / e).collect();
        self.from_eigen(&c)
    }
}

/// Modified Gram-Schmidt (applied twice) on the columns of a column-major
/// `rows x cols` matrix.
fn orthonormalize_columns(m: &mut [f64], rows: usize, cols: usize) {
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let (head, tail) = m.split_at_mut(j * rows);
                let qk = &head[k * rows..(k + 1) * rows];
                let col = &mut tail[..rows];
                let dot: f64 = qk.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (c, q) in col.iter_mut().zip(qk) {
                    *c -= dot * q;
                }
            }
        }
        let col = &mut m[j * rows..(j + 1) * rows];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
}

fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let mut m: Vec<f64> = (0..rows * cols).map(|_| sample_normal(rng)).collect();
    orthonormalize_columns(&mut m, rows, cols);
    m
}

/// Builds the Gram spectrum for `p` regressors at sample size `n`.
pub fn build_design<R: Rng + ?Sized>(spec: &DesignSpec, n: usize, p: usize, rng: &mut R) -> Result<GramSpectrum> {
    if p == 0 || p >= n {
        return Err(Error::Dimension(format!("need 1 <= p < n, got p = {p}, n = {n}")));
    }
    spec.validate()?;
    let nf = n as f64;
    match spec {
        DesignSpec::OrthogonalScaled => GramSpectrum::new(vec![nf; p], Basis::Identity),
        DesignSpec::DiagonalSpectrum { spectrum, rotated, .. } => {
            let eig = (0..p).map(|i| nf * spectrum[i % spectrum.len()]).collect();
            let basis = if *rotated { Basis::Dense(random_orthonormal(p, p, rng)) } else { Basis::Identity };
            GramSpectrum::new(eig, basis)
        }
    }
}

/// A dense `n x p` design `X = U diag(sqrt(e)) Q^T` with `U` having random
/// orthonormal columns, so that `X^T X` reproduces `gram` exactly.
#[derive(Debug, Clone)]
pub struct DenseDesign {
    n: usize,
    p: usize,
    /// Column-major `n x p`.
    x: Vec<f64>,
}

impl DenseDesign {
    pub fn materialize<R: Rng + ?Sized>(gram: &GramSpectrum, n: usize, rng: &mut R) -> Result<Self> {
        let p = gram.p();
        if p >= n {
            return Err(Error::Dimension(format!("need p < n, got p = {p}, n = {n}")));
        }
        let u = random_orthonormal(n, p, rng);
        let mut x = vec![0.0; n * p];
        // X[:, j] = sum_i U[:, i] sqrt(e_i) Q[j, i]
        for i in 0..p {
            let s = gram.eigenvalues[i].sqrt();
            let q_col = match &gram.basis {
                Basis::Identity => None,
                Basis::Dense(q) => Some(&q[i * p..(i + 1) * p]),
            };
            let u_col = &u[i * n..(i + 1) * n];
            for j in 0..p {
                let w = s * q_col.map_or(if i == j { 1.0 } else { 0.0 }, |c| c[j]);
                if w == 0.0 {
                    continue;
                }
                for (xr, ur) in x[j * n..(j + 1) * n].iter_mut().zip(u_col) {
                    *xr += w * ur;
                }
            }
        }
        Ok(Self { n, p, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    /// `X v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &vj) in v.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.column(j)) {
                *o += x * vj;
            }
        }
        out
    }

    /// `X^T y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.p).map(|j| self.column(j).iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }

    /// `X^T X` as a dense row-major matrix (tests only need small p).
    pub fn gram_matrix(&self) -> Vec<f64> {
        let p = self.p;
        let mut g = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                g[i * p + j] = self.column(i).iter().zip(self.column(j)).map(|(a, b)| a * b).sum();
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn orthogonal_design() {
        let mut rng = RngStream::from_seed(1);
        let g = build_design(&DesignSpec::OrthogonalScaled, 10, 3, &mut rng).unwrap();
        assert_eq!(g.eigenvalues(), &[10.0, 10.0, 10.0]);
        assert!(g.is_axis_aligned());
    }

    #[test]
    fn diagonal_spectrum_design() {
        let mut rng = RngStream::from_seed(1);
        let spec = DesignSpec::DiagonalSpectrum { spectrum: vec![0.5, 1.0], lambda_min: 1.0, lambda_max: 2.0, rotated: false };
        let g = build_design(&spec, 4, 2, &mut rng).unwrap();
        assert_eq!(g.eigenvalues(), &[2.0, 4.0]);
    }

    #[test]
    fn spectrum_out_of_bounds() {
        let mut rng = RngStream::from_seed(1);
        let spec = DesignSpec::DiagonalSpectrum { spectrum: vec![2.0], lambda_min: 1.0, lambda_max: 2.0, rotated: false };
        assert!(matches!(build_design(&spec, 4, 1, &mut rng), Err(Error::Invariant(_))));
    }

    #[test]
    fn dimension_error() {
        let mut rng = RngStream::from_seed(1);
        assert!(matches!(build_design(&DesignSpec::OrthogonalScaled, 5, 5, &mut rng), Err(Error::Dimension(_))));
        assert!(matches!(build_design(&DesignSpec::OrthogonalScaled, 5, 0, &mut rng), Err(Error::Dimension(_))));
    }

    #[test]
    fn rotated_basis_is_orthonormal_and_deterministic() {
        let spec = DesignSpec::DiagonalSpectrum {
            spectrum: vec![0.5, 0.8, 1.0],
            lambda_min: 1.0,
            lambda_max: 2.0,
            rotated: true,
        };
        let a = build_design(&spec, 40, 6, &mut RngStream::from_seed(5)).unwrap();
        let b = build_design(&spec, 40, 6, &mut RngStream::from_seed(5)).unwrap();
        assert_eq!(a, b);
        let Basis::Dense(q) = a.basis() else { panic!("expected dense basis") };
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = (0..6).map(|k| q[i * 6 + k] * q[j * 6 + k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
        // n (X^T X)^{-1} eigenvalues lie in the lambda bounds.
        for e in a.eigenvalues() {
            let lam = 40.0 / e;
            assert!((1.0..=2.0).contains(&lam));
        }
    }

    #[test]
    fn dense_design_reproduces_gram() {
        let mut rng = RngStream::from_seed(8);
        let spec = DesignSpec::DiagonalSpectrum {
            spectrum: vec![0.5, 0.75, 1.0],
            lambda_min: 1.0,
            lambda_max: 2.0,
            rotated: true,
        };
        let n = 30;
        let gram = build_design(&spec, n, 5, &mut rng).unwrap();
        let x = DenseDesign::materialize(&gram, n, &mut rng).unwrap();
        let g = x.gram_matrix();
        // Compare against Q diag(e) Q^T.
        for i in 0..5 {
            let mut unit = vec![0.0; 5];
            unit[i] = 1.0;
            let c: Vec<f64> = gram.to_eigen(&unit).iter().zip(gram.eigenvalues()).map(|(c, e)| c * e).collect();
            let col = gram.from_eigen(&c);
            for j in 0..5 {
                assert!((g[j * 5 + i] - col[j]).abs() < 1e-8 * n as f64);
            }
        }
        let xo = DenseDesign::materialize(
            &build_design(&DesignSpec::OrthogonalScaled, n, 4, &mut rng).unwrap(),
            n,
            &mut rng,
        )
        .unwrap();
        let go = xo.gram_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { n as f64 } else { 0.0 };
                assert!((go[i * 4 + j] - expect).abs() < 1e-8 * n as f64);
            }
        }
    }
}
