//! Dense complex linear algebra on `nalgebra::DMatrix<Complex64>`.
//!
//! Qubit 0 is the most significant bit of every basis index.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Bi-orthonormal eigen-decomposition, sorted by descending |λ|.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as columns.
    pub right_vectors: CMat,
    /// Left eigenvectors as columns, so that `left[:,i]^† · right[:,j] = δ_ij`.
    pub left_vectors: CMat,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn right(&self, i: usize) -> CVec {
        self.right_vectors.column(i).into_owned()
    }

    pub fn left(&self, i: usize) -> CVec {
        self.left_vectors.column(i).into_owned()
    }

    /// Σ λ_i r_i ℓ_i^†
    pub fn reconstruct(&self) -> CMat {
        let n = self.right_vectors.nrows();
        let mut m = CMat::zeros(n, n);
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let r = self.right_vectors.column(i);
            let l = self.left_vectors.column(i);
            m += (r * l.adjoint()) * lam;
        }
        m
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn pauli(label: char) -> CMat {
    match label {
        'I' => identity(2),
        'X' => CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'Y' => CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        'Z' => CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("unknown Pauli label {label}"),
    }
}

/// Tensor product of single-qubit Paulis, e.g. `"XZ"`.
pub fn pauli_string(labels: &str) -> CMat {
    labels.chars().fold(identity(1), |acc, c| kron(&acc, &pauli(c)))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMat]) -> CMat {
    ms.iter().fold(identity(1), |acc, m| kron(&acc, m))
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && frobenius(&(m - m.adjoint())) < tol
}

/// Pure state projector |ψ⟩⟨ψ|.
pub fn projector(psi: &[C64]) -> CMat {
    let v = CVec::from_column_slice(psi);
    &v * v.adjoint()
}

/// Trace out everything except `keep`. Kept subsystems stay in ascending order.
pub fn partial_trace(rho: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.nrows() != total {
        return Err(Error::Dimension(format!(
            "density matrix {}x{} does not match subsystem dims {:?}",
            rho.nrows(),
            rho.ncols(),
            dims
        )));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("keep index out of range: {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let dk: usize = keep_sorted.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();

    // strides of each subsystem in the full index (row-major, first subsystem most significant)
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |sub: &[usize], mut idx: usize| -> usize {
        let mut off = 0;
        for &k in sub.iter().rev() {
            off += (idx % dims[k]) * strides[k];
            idx /= dims[k];
        }
        off
    };
    let keep_off: Vec<usize> = (0..dk).map(|i| offsets(&keep_sorted, i)).collect();
    let tr_off: Vec<usize> = (0..dt).map(|i| offsets(&traced, i)).collect();

    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = ZERO;
            for &t in &tr_off {
                s += rho[(keep_off[i] + t, keep_off[j] + t)];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Reduced density matrix of `keep` qubits from a pure state, without forming |ψ⟩⟨ψ|.
pub fn reduced_from_pure(psi: &[C64], n_qubits: usize, keep: &[usize]) -> CMat {
    let k = keep.len();
    let dk = 1usize << k;
    let rest: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let dr = 1usize << rest.len();
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    let keep_idx: Vec<usize> =
        (0..dk).map(|i| (0..k).filter(|b| i >> (k - 1 - b) & 1 == 1).map(|b| bit(keep[b])).sum()).collect();
    let rest_idx: Vec<usize> = (0..dr)
        .map(|i| (0..rest.len()).filter(|b| i >> (rest.len() - 1 - b) & 1 == 1).map(|b| bit(rest[b])).sum())
        .collect();
    let mut out = CMat::zeros(dk, dk);
    for &r in &rest_idx {
        for i in 0..dk {
            let a = psi[keep_idx[i] | r];
            if a == ZERO {
                continue;
            }
            for j in 0..dk {
                out[(i, j)] += a * psi[keep_idx[j] | r].conj();
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitian_part(m);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

const CLUSTER_TOL: f64 = 1e-9;

/// Eigen-decomposition with bi-orthonormal left/right vectors.
pub fn eig(m: &CMat, hermitian: bool) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eig of non-square {}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    if hermitian {
        if !is_hermitian(m, 1e-10) {
            return Err(Error::InvalidInput("matrix flagged Hermitian is not".into()));
        }
        let (vals, vecs) = eigh(m);
        let eigenvalues: Vec<C64> = vals.iter().map(|&v| C64::new(v, 0.0)).collect();
        let order = sort_order(&eigenvalues);
        let mut r = CMat::zeros(n, n);
        for (c, &i) in order.iter().enumerate() {
            r.set_column(c, &vecs.column(i));
        }
        return Ok(SpectralDecomposition {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            left_vectors: r.clone(),
            right_vectors: r,
        });
    }

    let max_iter = 200 * n.max(10);
    // the QR sweep can stall at machine precision on clustered spectra
    let schur = [f64::EPSILON, 1e-14, 1e-12]
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(m.clone(), eps, max_iter))
        .ok_or(Error::NoConvergence { iterations: max_iter })?;
    let (q, t) = schur.unpack();
    let lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = frobenius(m).max(1.0);

    // back substitution on the upper triangular factor
    let mut x = CMat::zeros(n, n);
    for k in 0..n {
        let lam = lambdas[k];
        x[(k, k)] = ONE;
        for j in (0..k).rev() {
            let mut s = ZERO;
            for l in (j + 1)..=k {
                s += t[(j, l)] * x[(l, k)];
            }
            let d = t[(j, j)] - lam;
            if d.norm() < CLUSTER_TOL * scale {
                // degenerate pivot: free variable when consistent, otherwise regularize
                if s.norm() < 1e-9 * scale {
                    x[(j, k)] = ZERO;
                } else {
                    x[(j, k)] = -s / C64::new(CLUSTER_TOL * scale, 0.0);
                }
            } else {
                x[(j, k)] = -s / d;
            }
        }
    }
    let mut r = &q * x;
    for k in 0..n {
        let nrm = r.column(k).norm();
        r.column_mut(k).unscale_mut(nrm);
    }

    let order = sort_order(&lambdas);
    let eigenvalues: Vec<C64> = order.iter().map(|&i| lambdas[i]).collect();
    let mut rs = CMat::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        rs.set_column(c, &r.column(i));
    }
    orthonormalize_clusters(&mut rs, &eigenvalues);

    let inv = rs
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("matrix is defective; eigenvectors are not a basis".into()))?;
    let left = inv.adjoint();
    Ok(SpectralDecomposition { eigenvalues, right_vectors: rs, left_vectors: left })
}

/// Descending magnitude, ties by descending real part.
fn sort_order(vals: &[C64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (vals[a].norm(), vals[b].norm());
        if (ma - mb).abs() > CLUSTER_TOL {
            mb.total_cmp(&ma)
        } else {
            vals[b].re.total_cmp(&vals[a].re).then(a.cmp(&b))
        }
    });
    order
}

fn orthonormalize_clusters(r: &mut CMat, vals: &[C64]) {
    let n = vals.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[start]).norm() < CLUSTER_TOL {
            end += 1;
        }
        for k in start..end {
            let mut v = r.column(k).into_owned();
            for j in start..k {
                let u = r.column(j).into_owned();
                let c = u.dotc(&v);
                v -= u * c;
            }
            let nrm = v.norm();
            if nrm > 1e-12 {
                r.set_column(k, &(v / C64::new(nrm, 0.0)));
            }
        }
        start = end;
    }
}

/// Principal square root of a PSD matrix. Eigenvalues above -1e-6 are clamped at 0.
pub fn psd_sqrt(rho: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(rho);
    if let Some(&v) = vals.iter().find(|&&v| v < -1e-6) {
        return Err(Error::InvalidState(format!("negative eigenvalue {v:.3e}")));
    }
    let d =
        CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0))));
    Ok(hermitian_part(&(&vecs * d * vecs.adjoint())))
}

/// Nearest (Frobenius) density matrix by eigenvalue clipping and renormalization.
pub fn project_to_density(m: &CMat) -> CMat {
    let (vals, vecs) = eigh(m);
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    let d = CMat::from_diagonal(&CVec::from_iterator(clipped.len(), clipped.iter().map(|&v| C64::new(v / s, 0.0))));
    hermitian_part(&(&vecs * d * vecs.adjoint()))
}

/// Row-major vectorization: vec(ρ)[i·d + j] = ρ_ij.
pub fn vectorize(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])))
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[i * d + j])
}

/// Superoperator Σ K ⊗ K̄ acting on row-major vectorized operators.
pub fn kraus_to_superop(kraus: &[CMat]) -> CMat {
    let d_out = kraus[0].nrows();
    let d_in = kraus[0].ncols();
    let mut s = CMat::zeros(d_out * d_out, d_in * d_in);
    for k in kraus {
        s += kron(k, &k.map(|z| z.conj()));
    }
    s
}

/// Choi matrix Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) from a row-major superoperator.
pub fn choi_from_superop(s: &CMat, d_in: usize, d_out: usize) -> CMat {
    let mut choi = CMat::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            let col = i * d_in + j;
            for a in 0..d_out {
                for b in 0..d_out {
                    choi[(i * d_out + a, j * d_out + b)] = s[(a * d_out + b, col)];
                }
            }
        }
    }
    choi
}

pub fn apply_kraus(kraus: &[CMat], rho: &CMat) -> CMat {
    let mut out = CMat::zeros(kraus[0].nrows(), kraus[0].nrows());
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

pub fn real_mat(m: &[f64], n: usize) -> CMat {
    CMat::from_row_slice(n, n, &m.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
}

pub fn diag_real(v: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
}

/// Expectation Tr(ρ O), real part.
pub fn expect(rho: &CMat, op: &CMat) -> f64 {
    (rho * op).trace().re
}
