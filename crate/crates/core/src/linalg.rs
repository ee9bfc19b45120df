//! Small dense complex matrices.
//!
//! Everything in this crate lives in dimension at most 16 (two qubits plus a
//! reference system, or the 16x16 chi matrix of a two-qubit process), so a
//! plain row-major `Vec` and a cyclic Jacobi eigensolver are all we need.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for Hermiticity, unitarity and idempotence of internally built objects.
pub const TOL: f64 = 1e-10;
/// Tolerance for involution checks on measurement observables.
pub const INVOLUTION_TOL: f64 = 1e-8;
/// Largest dimension the eigensolver is expected to handle.
pub const MAX_DIM: usize = 16;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting ragged shapes and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix from {} entries",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(n, m, rows.concat())
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { C64::from(diag[r]) } else { ZERO })
    }

    /// `|v><w|`
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |r, c| v[r] * w[c].conj())
    }

    /// `|v><v|`
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_re(&self, k: f64) -> Self {
        self.scale(C64::from(k))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr(A^dagger B)` for equally shaped matrices.
    pub fn inner(&self, other: &CMat) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(r, k)] * other[(k, r)];
            }
        }
        acc
    }

    pub fn matmul(&self, other: &CMat) -> Result<CMat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} applied to length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `A X A^dagger`
    pub fn conjugate(&self, x: &CMat) -> Result<CMat> {
        self.matmul(x)?.matmul(&self.adjoint())
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `‖U^dagger U - I‖_F`
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = &self.adjoint() * self;
        (&g - &CMat::identity(self.rows)).frobenius_norm()
    }

    /// Hermitian part `(A + A^dagger)/2`.
    pub fn hermitian_part(&self) -> CMat {
        (self + &self.adjoint()).scale_re(0.5)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panics on shape mismatch; use [`CMat::matmul`] when shapes come from input.
impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    let (br, bc) = (b.rows, b.cols);
    CMat::from_fn(a.rows * br, a.cols * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Kronecker product of a list, left to right.
pub fn tensor_all<'a>(mats: impl IntoIterator<Item = &'a CMat>) -> CMat {
    mats.into_iter()
        .fold(CMat::identity(1), |acc, m| tensor(&acc, m))
}

pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `V f(Λ) V^dagger`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = self.vectors[(r, k)] * w;
                for c in 0..n {
                    out[(r, c)] += vr * self.vectors[(c, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMat {
        self.map_values(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(a: &CMat) -> Result<HermEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of {}x{}",
            a.rows, a.cols
        )));
    }
    let defect = a.hermitian_defect();
    if defect > TOL {
        return Err(Error::NotHermitian(defect));
    }
    Ok(jacobi(a.hermitian_part()))
}

fn jacobi(mut a: CMat) -> HermEig {
    let n = a.rows;
    let mut v = CMat::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= 1e-300 {
                    continue;
                }
                // Phase that makes the (p, q) entry real and positive.
                let e = (apq / b).conj();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G = diag(1, e) * [[c, s], [-s, c]]
                let g_pp = C64::from(cs);
                let g_pq = C64::from(sn);
                let g_qp = e * (-sn);
                let g_qq = e * cs;
                for r in 0..n {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = x * g_pp + y * g_qp;
                    a[(r, q)] = x * g_pq + y * g_qq;
                }
                for col in 0..n {
                    let (x, y) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = g_pp.conj() * x + g_qp.conj() * y;
                    a[(q, col)] = g_pq.conj() * x + g_qq.conj() * y;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for r in 0..n {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x * g_pp + y * g_qp;
                    v[(r, q)] = x * g_pq + y * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMat::from_fn(n, n, |r, col| v[(r, order[col])]);
    HermEig { values, vectors }
}

/// `(I + sign·obs)/2`, the projector onto the `sign` eigenspace of an involution.
pub fn projector_onto_sign(obs: &CMat, sign: i8) -> Result<CMat> {
    check_involution(obs)?;
    let id = CMat::identity(obs.rows);
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    Ok((&id + &obs.scale_re(s)).scale_re(0.5))
}

/// Checks that `obs` is Hermitian with `obs² = I`.
pub fn check_involution(obs: &CMat) -> Result<()> {
    if !obs.is_square() {
        return Err(Error::NotInvolution(f64::INFINITY));
    }
    let herm = obs.hermitian_defect();
    let sq = (&(obs * obs) - &CMat::identity(obs.rows)).frobenius_norm();
    let defect = herm.max(sq);
    if defect > INVOLUTION_TOL {
        return Err(Error::NotInvolution(defect));
    }
    Ok(())
}

/// Principal square root of a positive semidefinite matrix (negative eigenvalues clipped).
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    Ok(eig_hermitian(a)?.map_values(|x| x.max(0.0).sqrt()))
}

/// Closest unitary in Frobenius norm, `A (A^dagger A)^{-1/2}`.
pub fn nearest_unitary(a: &CMat) -> Result<CMat> {
    let gram = (&a.adjoint() * a).hermitian_part();
    let eig = eig_hermitian(&gram)?;
    if eig.values.last().copied().unwrap_or(0.0) <= 1e-12 {
        return Err(Error::NotUnitary(f64::INFINITY));
    }
    Ok(a * &eig.map_values(|x| 1.0 / x.sqrt()))
}

/// Single-qubit Pauli matrices and their tensor products.
pub mod pauli {
    use super::*;

    pub fn id() -> CMat {
        CMat::identity(2)
    }

    pub fn x() -> CMat {
        CMat::from_fn(2, 2, |r, c| if r != c { ONE } else { ZERO })
    }

    pub fn y() -> CMat {
        CMat::from_vec(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn z() -> CMat {
        CMat::from_real_diag(&[1.0, -1.0])
    }

    /// Pauli by index 0..4 in the order I, X, Y, Z.
    pub fn by_index(k: usize) -> CMat {
        match k {
            0 => id(),
            1 => x(),
            2 => y(),
            3 => z(),
            _ => panic!("pauli index {k} out of range"),
        }
    }

    pub fn label_char(k: usize) -> char {
        ['I', 'X', 'Y', 'Z'][k]
    }

    /// The `4^n` Pauli strings on `n` qubits in tensor-lexicographic order
    /// (qubit 1 most significant).
    pub fn basis(n_qubits: usize) -> Vec<CMat> {
        (0..4usize.pow(n_qubits as u32))
            .map(|idx| string(&digits(idx, n_qubits)))
            .collect()
    }

    pub fn basis_labels(n_qubits: usize) -> Vec<String> {
        (0..4usize.pow(n_qubits as u32))
            .map(|idx| digits(idx, n_qubits).into_iter().map(label_char).collect())
            .collect()
    }

    pub fn string(indices: &[usize]) -> CMat {
        let mats: Vec<CMat> = indices.iter().map(|&k| by_index(k)).collect();
        tensor_all(&mats)
    }

    /// Parses a Pauli string such as `"XZ"` or `"I"`.
    pub fn parse(label: &str) -> Option<CMat> {
        let idx: Option<Vec<usize>> = label
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Some(0),
                'X' => Some(1),
                'Y' => Some(2),
                'Z' => Some(3),
                _ => None,
            })
            .collect();
        idx.filter(|v| !v.is_empty()).map(|v| string(&v))
    }

    fn digits(mut idx: usize, n: usize) -> Vec<usize> {
        let mut d = vec![0; n];
        for slot in d.iter_mut().rev() {
            *slot = idx % 4;
            idx /= 4;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn basis_vec(dim: usize, k: usize) -> Vec<C64> {
        (0..dim).map(|i| if i == k { ONE } else { ZERO }).collect()
    }

    #[test]
    fn tensor_identity_and_signs() {
        assert_eq!(tensor(&pauli::id(), &pauli::id()), CMat::identity(4));
        let zz = tensor(&pauli::z(), &pauli::z());
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        let xx = tensor(&pauli::x(), &pauli::x());
        assert_eq!(xx.apply(&basis_vec(4, 0)).unwrap(), basis_vec(4, 3));
    }

    #[test]
    fn eig_of_paulis() {
        let ez = eig_hermitian(&pauli::z()).unwrap();
        assert_eq!(ez.values, vec![1.0, -1.0]);
        assert!((vdot(&ez.vector(0), &basis_vec(2, 0)).norm() - 1.0).abs() < 1e-12);

        let ex = eig_hermitian(&pauli::x()).unwrap();
        assert!((ex.values[0] - 1.0).abs() < 1e-12 && (ex.values[1] + 1.0).abs() < 1e-12);
        let plus = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)];
        assert!((vdot(&ex.vector(0), &plus).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMat::from_vec(2, 2, vec![ONE, ONE, ZERO, ONE]).unwrap();
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_diagonal_with_degeneracy() {
        let a = CMat::from_real_diag(&[0.25, 1.0, 0.0, 0.25]);
        let e = eig_hermitian(&a).unwrap();
        assert_eq!(e.values, vec![1.0, 0.25, 0.25, 0.0]);
        assert!(e.reconstruct().max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn projectors() {
        let p0 = projector_onto_sign(&pauli::z(), 1).unwrap();
        assert_eq!(p0, CMat::projector(&basis_vec(2, 0)));

        let xx = tensor(&pauli::x(), &pauli::x());
        let p = projector_onto_sign(&xx, 1).unwrap();
        let s = FRAC_1_SQRT_2;
        let phi_plus = [c(s, 0.0), ZERO, ZERO, c(s, 0.0)];
        let psi_plus = [ZERO, c(s, 0.0), c(s, 0.0), ZERO];
        let expected = &CMat::projector(&phi_plus) + &CMat::projector(&psi_plus);
        assert!(p.max_abs_diff(&expected) < 1e-14);
        assert!((p.trace().re - 2.0).abs() < 1e-14);

        let pm = projector_onto_sign(&pauli::y(), -1).unwrap();
        let minus_i = [c(s, 0.0), c(0.0, -s)];
        assert!(pm.max_abs_diff(&CMat::projector(&minus_i)) < 1e-14);
    }

    #[test]
    fn projector_rejects_non_involution() {
        let a = pauli::z().scale_re(2.0);
        assert!(matches!(projector_onto_sign(&a, 1), Err(Error::NotInvolution(_))));
    }

    #[test]
    fn nearest_unitary_fixes_rounding() {
        let u = CMat::from_vec(
            2,
            2,
            vec![c(-0.7071, 0.3536), c(0.0, 0.6124), c(0.0, 0.6124), c(-0.7071, -0.3536)],
        )
        .unwrap();
        assert!(u.unitarity_defect() > 1e-6);
        let v = nearest_unitary(&u).unwrap();
        assert!(v.unitarity_defect() < 1e-12);
        assert!(v.max_abs_diff(&u) < 1e-4);
    }

    #[test]
    fn pauli_labels() {
        assert_eq!(pauli::basis_labels(2)[6], "XY");
        assert_eq!(pauli::parse("XY").unwrap(), tensor(&pauli::x(), &pauli::y()));
        assert!(pauli::parse("Q").is_none());
    }
}
