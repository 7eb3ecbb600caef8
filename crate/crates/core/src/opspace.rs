//! Spaces of operators `U ⊆ B(H1, H2)` and operator algebras, held in
//! canonical form so that value equality is subspace equality.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{solve_operator_equations, SpanBuilder, VecSubspace};
use crate::matrix::Matrix;
use crate::scalar::ExactField;

/// A linear subspace of `cod × dom` matrices, vectorized row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OperatorSpace<F> {
    dom: usize,
    cod: usize,
    span: VecSubspace<F>,
    basis: Vec<Matrix<F>>,
}

impl<F: ExactField> OperatorSpace<F> {
    fn from_subspace(dom: usize, cod: usize, span: VecSubspace<F>) -> Self {
        let basis = span
            .basis()
            .iter()
            .map(|v| Matrix::from_vec(cod, dom, v.clone()).expect("vectorized shape"))
            .collect();
        OperatorSpace { dom, cod, span, basis }
    }

    /// Span of `mats`, each of shape `cod × dom`.
    pub fn new(dom: usize, cod: usize, mats: &[Matrix<F>]) -> Result<Self> {
        let mut b = SpanBuilder::new(dom * cod);
        for m in mats {
            if m.shape() != (cod, dom) {
                return Err(Error::DimensionMismatch(format!(
                    "operator of shape {}x{} in a space of {cod}x{dom} operators",
                    m.rows(),
                    m.cols()
                )));
            }
            if !b.is_full() {
                b.insert(m.as_slice());
            }
        }
        Ok(Self::from_subspace(dom, cod, b.finish()))
    }

    /// Span of square `n × n` matrices.
    pub fn square(n: usize, mats: &[Matrix<F>]) -> Result<Self> {
        Self::new(n, n, mats)
    }

    pub fn zero(dom: usize, cod: usize) -> Self {
        Self::from_subspace(dom, cod, VecSubspace::zero(dom * cod))
    }

    /// All of `B(H1, H2)`.
    pub fn full(dom: usize, cod: usize) -> Self {
        Self::from_subspace(dom, cod, VecSubspace::full(dom * cod))
    }

    /// `C·I` on `C^n`.
    pub fn scalars(n: usize) -> Self {
        Self::new(n, n, &[Matrix::identity(n)]).expect("square identity")
    }

    /// `{T : C_k(T) = 0 ∀k}` for linear constraint maps `C_k`.
    pub fn solve<I, C>(dom: usize, cod: usize, constraints: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Fn(&Matrix<F>) -> Matrix<F>,
    {
        let sol = solve_operator_equations(cod, dom, constraints);
        Self::new(dom, cod, &sol).expect("solutions have the requested shape")
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.span.is_full()
    }

    pub fn is_square(&self) -> bool {
        self.dom == self.cod
    }

    pub fn basis(&self) -> &[Matrix<F>] {
        &self.basis
    }

    pub fn subspace(&self) -> &VecSubspace<F> {
        &self.span
    }

    pub fn contains(&self, m: &Matrix<F>) -> bool {
        m.shape() == (self.cod, self.dom) && self.span.contains(m.as_slice())
    }

    pub fn is_subspace_of(&self, other: &Self) -> bool {
        self.same_shape(other).is_ok() && self.span.is_subspace_of(&other.span)
    }

    /// First basis element of `self` not in `other`.
    pub fn first_outside(&self, other: &Self) -> Option<&Matrix<F>> {
        self.basis.iter().find(|m| !other.contains(m))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.dom, self.cod) != (other.dom, other.cod) {
            return Err(Error::DimensionMismatch(format!(
                "spaces of {}x{} and {}x{} operators",
                self.cod, self.dom, other.cod, other.dom
            )));
        }
        Ok(())
    }

    /// `self + other`.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_subspace(self.dom, self.cod, self.span.join(&other.span)?))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_subspace(self.dom, self.cod, self.span.intersect(&other.span)?))
    }

    /// `span{T* : T ∈ self}`.
    pub fn adjoint(&self) -> Self {
        let adj: Vec<_> = self.basis.iter().map(Matrix::adjoint).collect();
        Self::new(self.cod, self.dom, &adj).expect("adjoint shapes")
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.is_square() && self.basis.iter().all(|m| self.contains(&m.adjoint()))
    }

    /// `span{x·y : x ∈ self, y ∈ rhs}`.
    pub fn product(&self, rhs: &Self) -> Result<Self> {
        if self.dom != rhs.cod {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{} operator spaces",
                self.cod, self.dom, rhs.cod, rhs.dom
            )));
        }
        let mut b = SpanBuilder::new(self.cod * rhs.dom);
        'outer: for x in &self.basis {
            for y in &rhs.basis {
                if b.is_full() {
                    break 'outer;
                }
                b.insert(x.mul(y).as_slice());
            }
        }
        Ok(Self::from_subspace(rhs.dom, self.cod, b.finish()))
    }

    /// `span(x · self · y)` for fixed operators.
    pub fn sandwich(&self, left: &Matrix<F>, right: &Matrix<F>) -> Result<Self> {
        if left.cols() != self.cod || right.rows() != self.dom {
            return Err(Error::DimensionMismatch("sandwich factors".into()));
        }
        let imgs: Vec<_> = self.basis.iter().map(|t| left.mul(t).mul(right)).collect();
        Self::new(right.cols(), left.rows(), &imgs)
    }

    /// First pair of basis indices whose product leaves the span.
    pub fn product_escape(&self) -> Option<(usize, usize)> {
        if !self.is_square() {
            return Some((0, 0));
        }
        for (i, x) in self.basis.iter().enumerate() {
            for (j, y) in self.basis.iter().enumerate() {
                if !self.contains(&x.mul(y)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// The algebra generated by `self`, and by `I` when `unital`. Products
    /// are taken only against newly added elements until the span stops
    /// growing.
    pub fn generated_algebra(&self, unital: bool) -> Result<OpAlgebra<F>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("generated algebra needs a square space".into()));
        }
        let n = self.dom;
        let mut b = SpanBuilder::new(n * n);
        let mut frontier = Vec::new();
        let mut gens = self.basis.clone();
        if unital {
            gens.push(Matrix::identity(n));
        }
        for g in &gens {
            if b.insert(g.as_slice()) {
                frontier.push(g.clone());
            }
        }
        while !frontier.is_empty() && !b.is_full() {
            let mut next = Vec::new();
            for f in &frontier {
                for g in &self.basis {
                    let p = f.mul(g);
                    if b.insert(p.as_slice()) {
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        let space = Self::from_subspace(n, n, b.finish());
        Ok(OpAlgebra::from_closed(space))
    }

    /// `{T : TA = AT ∀ A ∈ self}`.
    pub fn commutant(&self) -> Result<OpAlgebra<F>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("commutant needs a square space".into()));
        }
        let n = self.dom;
        let space = Self::solve(n, n, self.basis.iter().map(|a| move |t: &Matrix<F>| t.commutator(a)));
        Ok(OpAlgebra::from_closed(space))
    }

    /// `(span(self ∪ self*))″`.
    pub fn bicommutant(&self) -> Result<OpAlgebra<F>> {
        let sym = self.join(&self.adjoint())?;
        sym.commutant()?.commutant()
    }

    /// Whether `left · self · right ⊆ self`.
    pub fn is_bimodule_over(&self, left: &Self, right: &Self) -> Result<bool> {
        if left.dom != self.cod || self.dom != right.cod {
            return Err(Error::DimensionMismatch("bimodule actions".into()));
        }
        for l in &left.basis {
            for t in &self.basis {
                let lt = l.mul(t);
                for r in &right.basis {
                    if !self.contains(&lt.mul(r)) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Two-sided ideal check `a·j ⊆ j` and `j·a ⊆ j`.
    pub fn is_ideal_in(&self, a: &OpAlgebra<F>) -> Result<bool> {
        if !self.is_subspace_of(a) {
            return Ok(false);
        }
        Ok(a.product(self)?.is_subspace_of(self) && self.product(a)?.is_subspace_of(self))
    }

    /// Block-diagonal direct sum `self ⊕ other` acting on `H1 ⊕ K1 → H2 ⊕ K2`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (dom, cod) = (self.dom + other.dom, self.cod + other.cod);
        let mut mats: Vec<_> = self.basis.iter().map(|m| m.embed(cod, dom, 0, 0)).collect();
        mats.extend(other.basis.iter().map(|m| m.embed(cod, dom, self.cod, self.dom)));
        Self::new(dom, cod, &mats).expect("direct sum shapes")
    }
}

impl<F: ExactField> std::fmt::Debug for OperatorSpace<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OperatorSpace({}x{}, ", self.cod, self.dom)?;
        f.debug_list().entries(&self.basis).finish()?;
        f.write_str(")")
    }
}

/// An operator space closed under products, with computed flags.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OpAlgebra<F> {
    space: OperatorSpace<F>,
    unital: bool,
    selfadjoint: bool,
}

impl<F: ExactField> OpAlgebra<F> {
    /// Checks closure under products.
    pub fn new(space: OperatorSpace<F>) -> Result<Self> {
        if !space.is_square() {
            return Err(Error::DimensionMismatch("an algebra acts on a single space".into()));
        }
        if let Some((i, j)) = space.product_escape() {
            return Err(Error::NotAnAlgebra(i, j));
        }
        Ok(Self::from_closed(space))
    }

    /// For spaces closed by construction.
    pub(crate) fn from_closed(space: OperatorSpace<F>) -> Self {
        debug_assert!(space.is_square());
        let unital = space.contains(&Matrix::identity(space.dom()));
        let selfadjoint = space.is_selfadjoint();
        OpAlgebra { space, unital, selfadjoint }
    }

    /// `B(C^n)`.
    pub fn full(n: usize) -> Self {
        Self::from_closed(OperatorSpace::full(n, n))
    }

    /// `C·I`.
    pub fn scalars(n: usize) -> Self {
        Self::from_closed(OperatorSpace::scalars(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_closed(OperatorSpace::zero(n, n))
    }

    /// The diagonal matrices on `C^n`.
    pub fn diagonal_masa(n: usize) -> Self {
        let units: Vec<_> = (0..n).map(|i| Matrix::unit(n, n, i, i)).collect();
        Self::from_closed(OperatorSpace::square(n, &units).expect("square units"))
    }

    /// Upper-triangular matrices on `C^n`.
    pub fn upper_triangular(n: usize) -> Self {
        let units: Vec<_> = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| Matrix::unit(n, n, i, j))
            .collect();
        Self::from_closed(OperatorSpace::square(n, &units).expect("square units"))
    }

    pub fn n(&self) -> usize {
        self.space.dom()
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    pub fn space(&self) -> &OperatorSpace<F> {
        &self.space
    }

    pub fn into_space(self) -> OperatorSpace<F> {
        self.space
    }

    /// `Δ(A) = A ∩ A*`.
    pub fn diagonal(&self) -> Self {
        let d = self.space.intersect(&self.space.adjoint()).expect("square algebra");
        Self::from_closed(d)
    }
}

impl<F: ExactField> std::fmt::Debug for OpAlgebra<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OpAlgebra(unital={}, selfadjoint={}, {:?})", self.unital, self.selfadjoint, self.space)
    }
}

impl<F> Deref for OpAlgebra<F> {
    type Target = OperatorSpace<F>;

    fn deref(&self) -> &OperatorSpace<F> {
        &self.space
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    type Space = OperatorSpace<Q>;

    fn e(n: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(n, n, i, j)
    }

    #[test]
    fn product_span_examples() {
        let full = Space::full(2, 2);
        assert!(full.product(&Space::zero(2, 2)).unwrap().is_zero());
        let x = Space::square(2, &[e(2, 0, 1), e(2, 1, 1)]).unwrap();
        assert_eq!(Space::scalars(2).product(&x).unwrap(), x);
        let p = Space::square(2, &[e(2, 1, 0)]).unwrap().product(&Space::square(2, &[e(2, 0, 1)]).unwrap());
        assert_eq!(p.unwrap(), Space::square(2, &[e(2, 1, 1)]).unwrap());
        assert!(Space::full(2, 3).product(&Space::full(2, 3)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let x = Space::square(2, &[e(2, 0, 1)]).unwrap();
        assert_eq!(x.adjoint(), Space::square(2, &[e(2, 1, 0)]).unwrap());
        let m = Matrix::from_rows(vec![vec![Q::from_i64(1), Q::i()], vec![Q::from_i64(0), Q::from_i64(0)]]).unwrap();
        let expected = Matrix::from_rows(vec![vec![Q::from_i64(1), Q::from_i64(0)], vec![-Q::i(), Q::from_i64(0)]]).unwrap();
        assert_eq!(Space::square(2, &[m]).unwrap().adjoint(), Space::square(2, &[expected]).unwrap());
        let d = OpAlgebra::<Q>::diagonal_masa(3);
        assert_eq!(d.adjoint(), *d.space());
    }

    #[test]
    fn generated_algebra_examples() {
        let x = Space::square(2, &[e(2, 0, 1)]).unwrap();
        assert_eq!(*x.generated_algebra(false).unwrap().space(), x);
        let one = Space::zero(2, 2).generated_algebra(true).unwrap();
        assert_eq!(*one.space(), Space::scalars(2));
        let y = Space::square(2, &[e(2, 0, 1), e(2, 1, 0)]).unwrap();
        assert!(y.generated_algebra(false).unwrap().is_full());
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(*Space::full(3, 3).commutant().unwrap().space(), Space::scalars(3));
        assert!(Space::scalars(3).commutant().unwrap().is_full());
        let d = OpAlgebra::<Q>::diagonal_masa(3);
        assert_eq!(d.commutant().unwrap(), d);
    }

    #[test]
    fn bicommutant_examples() {
        let d = OpAlgebra::<Q>::diagonal_masa(3);
        assert_eq!(d.bicommutant().unwrap(), d);
        let p = Space::square(2, &[e(2, 0, 0)]).unwrap();
        assert_eq!(p.bicommutant().unwrap(), OpAlgebra::diagonal_masa(2));
        let trivial = Space::square(2, &[Matrix::zeros(2, 2), Matrix::identity(2)]).unwrap();
        assert_eq!(*trivial.bicommutant().unwrap().space(), Space::scalars(2));
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(OpAlgebra::<Q>::upper_triangular(2).diagonal(), OpAlgebra::diagonal_masa(2));
        assert_eq!(OpAlgebra::<Q>::full(3).diagonal(), OpAlgebra::full(3));
        assert_eq!(OpAlgebra::<Q>::scalars(3).diagonal(), OpAlgebra::scalars(3));
    }

    #[test]
    fn ideal_and_bimodule_examples() {
        let t2 = OpAlgebra::<Q>::upper_triangular(2);
        let strict = Space::square(2, &[e(2, 0, 1)]).unwrap();
        assert!(strict.is_ideal_in(&t2).unwrap());
        let u = Space::new(2, 3, &[Matrix::unit(3, 2, 2, 1)]).unwrap();
        assert!(u.is_bimodule_over(&Space::scalars(3), &Space::scalars(2)).unwrap());
        let p = Space::square(2, &[e(2, 0, 0)]).unwrap();
        assert!(!p.is_ideal_in(&OpAlgebra::full(2)).unwrap());
    }

    #[test]
    fn algebra_constructor_rejects_non_closed_spaces() {
        let x = Space::square(2, &[e(2, 0, 1), e(2, 1, 0)]).unwrap();
        assert!(matches!(OpAlgebra::new(x), Err(Error::NotAnAlgebra(_, _))));
        let t = OpAlgebra::new(OpAlgebra::<Q>::upper_triangular(3).into_space()).unwrap();
        assert!(t.is_unital() && !t.is_selfadjoint());
    }
}
