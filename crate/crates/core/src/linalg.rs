//! Canonical subspaces, kernels, orthogonal projections and linear solvers.
//!
//! A [`VecSubspace`] is stored as the reduced row-echelon basis of its span
//! (pivot entries equal to one, zeros above and below every pivot), so two
//! values compare equal exactly when they are the same subspace.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::ExactField;

/// Incremental reduced row-echelon basis. Every insertion keeps the basis
/// canonical.
#[derive(Clone, Debug)]
pub struct SpanBuilder<F> {
    ambient: usize,
    rows: Vec<Vec<F>>,
    pivots: Vec<usize>,
}

impl<F: ExactField> SpanBuilder<F> {
    pub fn new(ambient: usize) -> Self {
        SpanBuilder { ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_subspace(s: &VecSubspace<F>) -> Self {
        SpanBuilder { ambient: s.ambient, rows: s.rows.clone(), pivots: s.pivots.clone() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ambient
    }

    /// Reduces `v` against the current basis in place.
    fn reduce(&self, v: &mut [F]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let c = v[p].clone();
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= c.mul_ref(r);
                }
            }
        }
    }

    pub fn contains(&self, v: &[F]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(Zero::is_zero)
    }

    /// Adds `v` to the span; returns whether the dimension grew.
    pub fn insert(&mut self, v: &[F]) -> bool {
        debug_assert_eq!(v.len(), self.ambient);
        let mut w = v.to_vec();
        self.reduce(&mut w);
        let Some(q) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[q].inv().expect("nonzero pivot");
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x = x.mul_ref(&inv);
            }
        }
        for row in self.rows.iter_mut() {
            if row[q].is_zero() {
                continue;
            }
            let c = row[q].clone();
            for (r, x) in row.iter_mut().zip(&w) {
                if !x.is_zero() {
                    *r -= c.mul_ref(x);
                }
            }
        }
        let at = self.pivots.partition_point(|&p| p < q);
        self.pivots.insert(at, q);
        self.rows.insert(at, w);
        true
    }

    pub fn finish(self) -> VecSubspace<F> {
        VecSubspace { ambient: self.ambient, rows: self.rows, pivots: self.pivots }
    }
}

/// A linear subspace of `F^n` in canonical reduced row-echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VecSubspace<F> {
    ambient: usize,
    rows: Vec<Vec<F>>,
    pivots: Vec<usize>,
}

impl<F: ExactField> VecSubspace<F> {
    pub fn zero(ambient: usize) -> Self {
        SpanBuilder::new(ambient).finish()
    }

    pub fn full(ambient: usize) -> Self {
        let mut b = SpanBuilder::new(ambient);
        for i in 0..ambient {
            let mut e = vec![F::zero(); ambient];
            e[i] = F::one();
            b.insert(&e);
        }
        b.finish()
    }

    /// Span of the columns of `m`.
    pub fn from_columns(m: &Matrix<F>) -> Self {
        column_space(m)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ambient
    }

    /// The canonical basis, pivot-ordered.
    pub fn basis(&self) -> &[Vec<F>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn contains(&self, v: &[F]) -> bool {
        v.len() == self.ambient && self.coordinates(v).is_some()
    }

    /// Coordinates of `v` in the canonical basis. For a reduced basis these
    /// are just the entries of `v` at the pivot columns.
    pub fn coordinates(&self, v: &[F]) -> Option<Vec<F>> {
        if v.len() != self.ambient {
            return None;
        }
        let coords: Vec<F> = self.pivots.iter().map(|&p| v[p].clone()).collect();
        let mut rebuilt = vec![F::zero(); self.ambient];
        for (c, row) in coords.iter().zip(&self.rows) {
            if c.is_zero() {
                continue;
            }
            for (x, r) in rebuilt.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x += c.mul_ref(r);
                }
            }
        }
        (rebuilt == v).then_some(coords)
    }

    pub fn is_subspace_of(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.rows.iter().all(|r| other.contains(r))
    }

    /// First basis vector of `self` outside `other`, if any.
    pub fn first_outside(&self, other: &Self) -> Option<&[F]> {
        self.rows.iter().find(|r| !other.contains(r)).map(Vec::as_slice)
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        check_ambient(self.ambient, other.ambient)?;
        let mut b = SpanBuilder::from_subspace(self);
        for r in &other.rows {
            if b.is_full() {
                break;
            }
            b.insert(r);
        }
        Ok(b.finish())
    }

    /// Vectors `w` with `Σ_i w_i v_i = 0` for all `v` in the subspace
    /// (bilinear, no conjugation).
    pub fn annihilator(&self) -> Self {
        kernel(&self.as_row_matrix())
    }

    /// Orthogonal complement with respect to `⟨v, w⟩ = Σ conj(v_i) w_i`.
    pub fn orthogonal_complement(&self) -> Self {
        kernel(&self.as_row_matrix().map(|x| x.conj()))
    }

    /// `a ∩ b` as the kernel of the stacked annihilators.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        check_ambient(self.ambient, other.ambient)?;
        if self.is_full() {
            return Ok(other.clone());
        }
        if other.is_full() {
            return Ok(self.clone());
        }
        let mut rows = self.annihilator().rows;
        rows.extend(other.annihilator().rows);
        let m = rows_to_matrix(self.ambient, rows);
        Ok(kernel(&m))
    }

    /// The basis vectors as the rows of a `dim × ambient` matrix.
    pub fn as_row_matrix(&self) -> Matrix<F> {
        rows_to_matrix(self.ambient, self.rows.clone())
    }

    /// The basis vectors as the columns of an `ambient × dim` matrix.
    pub fn as_column_matrix(&self) -> Matrix<F> {
        self.as_row_matrix().transpose()
    }
}

fn check_ambient(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("ambient dimensions {a} and {b}")));
    }
    Ok(())
}

fn rows_to_matrix<F: ExactField>(cols: usize, rows: Vec<Vec<F>>) -> Matrix<F> {
    let r = rows.len();
    Matrix::from_vec(r, cols, rows.into_iter().flatten().collect()).expect("uniform rows")
}

/// The canonical basis of the span of `vectors` inside `F^ambient`.
pub fn canonicalize<F: ExactField>(ambient: usize, vectors: &[Vec<F>]) -> Result<VecSubspace<F>> {
    if let Some(v) = vectors.iter().find(|v| v.len() != ambient) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} in ambient dimension {ambient}",
            v.len()
        )));
    }
    let mut b = SpanBuilder::new(ambient);
    for v in vectors {
        if b.is_full() {
            break;
        }
        b.insert(v);
    }
    Ok(b.finish())
}

/// Row space of `m`.
pub fn row_space<F: ExactField>(m: &Matrix<F>) -> VecSubspace<F> {
    let mut b = SpanBuilder::new(m.cols());
    for i in 0..m.rows() {
        if b.is_full() {
            break;
        }
        b.insert(m.row(i));
    }
    b.finish()
}

/// Range (column space) of `m`.
pub fn column_space<F: ExactField>(m: &Matrix<F>) -> VecSubspace<F> {
    row_space(&m.transpose())
}

pub fn rank<F: ExactField>(m: &Matrix<F>) -> usize {
    if m.rows() <= m.cols() {
        row_space(m).dim()
    } else {
        column_space(m).dim()
    }
}

/// `{x : m·x = 0}`.
pub fn kernel<F: ExactField>(m: &Matrix<F>) -> VecSubspace<F> {
    let n = m.cols();
    let rref = row_space(m);
    let mut is_pivot = vec![false; n];
    for &p in rref.pivots() {
        is_pivot[p] = true;
    }
    let mut out = SpanBuilder::new(n);
    for f in (0..n).filter(|&c| !is_pivot[c]) {
        let mut x = vec![F::zero(); n];
        x[f] = F::one();
        for (row, &p) in rref.basis().iter().zip(rref.pivots()) {
            if !row[f].is_zero() {
                x[p] = -row[f].clone();
            }
        }
        out.insert(&x);
    }
    out.finish()
}

/// The orthogonal projection onto `s`, computed exactly as
/// `B (B* B)⁻¹ B*` with `B` the basis as columns.
pub fn ortho_project<F: ExactField>(s: &VecSubspace<F>) -> Matrix<F> {
    let n = s.ambient();
    if s.is_zero() {
        return Matrix::zeros(n, n);
    }
    if s.is_full() {
        return Matrix::identity(n);
    }
    let b = s.as_column_matrix();
    let b_adj = b.adjoint();
    let gram = b_adj.mul(&b);
    let gram_inv = gram.inverse().expect("Gram matrix of independent vectors is invertible");
    b.mul(&gram_inv).mul(&b_adj)
}

/// Solution set of `a·x = b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinearSolution<F> {
    Inconsistent,
    /// `particular + homogeneous`.
    Affine { particular: Vec<F>, homogeneous: VecSubspace<F> },
}

impl<F: ExactField> LinearSolution<F> {
    pub fn is_unique(&self) -> bool {
        matches!(self, LinearSolution::Affine { homogeneous, .. } if homogeneous.is_zero())
    }

    pub fn particular(&self) -> Option<&[F]> {
        match self {
            LinearSolution::Affine { particular, .. } => Some(particular),
            LinearSolution::Inconsistent => None,
        }
    }
}

pub fn solve_linear<F: ExactField>(a: &Matrix<F>, b: &[F]) -> Result<LinearSolution<F>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side of length {} for {} equations",
            b.len(),
            a.rows()
        )));
    }
    let n = a.cols();
    let aug = Matrix::hstack(&[a.clone(), Matrix::column_vector(b)])?;
    let rref = row_space(&aug);
    if rref.pivots().last() == Some(&n) {
        return Ok(LinearSolution::Inconsistent);
    }
    let mut particular = vec![F::zero(); n];
    for (row, &p) in rref.basis().iter().zip(rref.pivots()) {
        particular[p] = row[n].clone();
    }
    Ok(LinearSolution::Affine { particular, homogeneous: kernel(a) })
}

/// Basis of `{T ∈ F^{cod×dom} : C_k(T) = 0 for every k}` for linear maps
/// `C_k`.
///
/// The solution space is narrowed one constraint at a time: each constraint
/// is only evaluated on the basis that survived the previous ones, which
/// keeps intertwiner and commutant computations cheap.
pub fn solve_operator_equations<F, I, C>(cod: usize, dom: usize, constraints: I) -> Vec<Matrix<F>>
where
    F: ExactField,
    I: IntoIterator<Item = C>,
    C: Fn(&Matrix<F>) -> Matrix<F>,
{
    let mut current: Vec<Matrix<F>> = (0..cod)
        .flat_map(|i| (0..dom).map(move |j| (i, j)))
        .map(|(i, j)| Matrix::unit(cod, dom, i, j))
        .collect();
    for constraint in constraints {
        if current.is_empty() {
            break;
        }
        let images: Vec<Matrix<F>> = current.iter().map(&constraint).collect();
        if images.iter().all(Matrix::is_zero) {
            continue;
        }
        let d = current.len();
        let out_len = images[0].as_slice().len();
        let mut rows = SpanBuilder::new(d);
        for r in 0..out_len {
            if rows.is_full() {
                break;
            }
            let row: Vec<F> = images.iter().map(|m| m.as_slice()[r].clone()).collect();
            if row.iter().any(|x| !x.is_zero()) {
                rows.insert(&row);
            }
        }
        let coeffs = kernel(&rows.finish().as_row_matrix());
        if coeffs.dim() == d {
            continue;
        }
        current = coeffs
            .basis()
            .iter()
            .map(|c| Matrix::linear_combination((cod, dom), c.iter().zip(&current)))
            .collect();
    }
    current
}

#[cfg(test)]
mod tests {
    use num_traits::One;

    use super::*;
    use crate::scalar::GaussianRational;

    type Q = GaussianRational;

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| Q::from_i64(x)).collect()
    }

    #[test]
    fn canonicalize_examples() {
        let s = canonicalize(2, &[v(&[1, 0]), v(&[2, 0])]).unwrap();
        assert_eq!(s.basis(), &[v(&[1, 0])]);
        let z = canonicalize::<Q>(3, &[]).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.ambient(), 3);
        // det [[1,1],[1,-1]] = -2
        let f = canonicalize(2, &[v(&[1, 1]), v(&[1, -1])]).unwrap();
        assert!(f.is_full());
        assert!(canonicalize(2, &[v(&[1, 0]), v(&[1, 0, 0])]).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel(&Matrix::<Q>::identity(3)).is_zero());
        assert!(kernel(&Matrix::<Q>::zeros(2, 3)).is_full());
        let k = kernel(&Matrix::<Q>::from_i64(&[&[1, 1], &[1, 1]]));
        assert_eq!(k, canonicalize(2, &[v(&[1, -1])]).unwrap());
    }

    #[test]
    fn intersect_examples() {
        let e = |i: usize| {
            let mut x = v(&[0, 0, 0]);
            x[i] = Q::one();
            x
        };
        let x = canonicalize(3, &[e(0), e(1)]).unwrap();
        assert_eq!(x.intersect(&x).unwrap(), x);
        let a = canonicalize(3, &[e(0)]).unwrap();
        let b = canonicalize(3, &[e(1)]).unwrap();
        assert!(a.intersect(&b).unwrap().is_zero());
        let c = canonicalize(3, &[e(1), e(2)]).unwrap();
        assert_eq!(x.intersect(&c).unwrap(), b);
        assert!(a.intersect(&VecSubspace::zero(2)).is_err());
    }

    #[test]
    fn ortho_project_examples() {
        assert!(ortho_project(&VecSubspace::<Q>::full(3)).is_identity());
        assert!(ortho_project(&VecSubspace::<Q>::zero(3)).is_zero());
        let p = ortho_project(&canonicalize(2, &[v(&[1, 1])]).unwrap());
        let half = Q::from_ratio(1, 2);
        assert_eq!(p, Matrix::from_rows(vec![vec![half.clone(), half.clone()], vec![half.clone(), half]]).unwrap());
    }

    #[test]
    fn solve_linear_examples() {
        let id = Matrix::<Q>::identity(2);
        let sol = solve_linear(&id, &v(&[3, -4])).unwrap();
        assert!(sol.is_unique());
        assert_eq!(sol.particular().unwrap(), v(&[3, -4]).as_slice());

        let zero = Matrix::<Q>::zeros(2, 2);
        match solve_linear(&zero, &v(&[0, 0])).unwrap() {
            LinearSolution::Affine { homogeneous, .. } => assert!(homogeneous.is_full()),
            LinearSolution::Inconsistent => panic!("consistent system"),
        }
        assert_eq!(solve_linear(&zero, &v(&[1, 0])).unwrap(), LinearSolution::Inconsistent);
    }

    #[test]
    fn intertwiner_equation_has_three_free_entries() {
        // T·diag(1,0) = diag(1,1,0)·T for T: C² → C³; by hand the free
        // entries are T11, T21 and T32.
        let x = Matrix::<Q>::diag_i64(&[1, 0]);
        let y = Matrix::<Q>::diag_i64(&[1, 1, 0]);
        let sol = solve_operator_equations(3, 2, [|t: &Matrix<Q>| t.mul(&x).sub(&y.mul(t))]);
        assert_eq!(sol.len(), 3);
        let span = canonicalize(6, &sol.iter().map(|m| m.as_slice().to_vec()).collect::<Vec<_>>()).unwrap();
        let expected = canonicalize(
            6,
            &[Matrix::unit(3, 2, 0, 0), Matrix::unit(3, 2, 1, 0), Matrix::unit(3, 2, 2, 1)]
                .iter()
                .map(|m: &Matrix<Q>| m.as_slice().to_vec())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(span, expected);
    }
}
