//! Erdos maps, frame-restricted semilattices, essentiality and reflexive
//! hulls.

use std::collections::HashSet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{lat_of_algebra, validate_frame, Csl, Projection};
use crate::linalg::{kernel, ortho_project, SpanBuilder, VecSubspace};
use crate::matrix::Matrix;
use crate::opspace::{OpAlgebra, OperatorSpace};
use crate::poly::{bareiss_rank, Poly};
use crate::random;
use crate::scalar::ExactField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `φ = Map(U)`, projections of `H1` to projections of `H2`.
    Forward,
    /// `φ* = Map(U*)`, projections of `H2` to projections of `H1`.
    Adjoint,
}

/// `P ↦` projection onto `span{T P y : T ∈ U, y}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErdosMap<F: ExactField> {
    space: OperatorSpace<F>,
    direction: Direction,
}

impl<F: ExactField> ErdosMap<F> {
    pub fn new(space: OperatorSpace<F>) -> Self {
        ErdosMap { space, direction: Direction::Forward }
    }

    /// `Map(U*)`.
    pub fn adjoint_of(space: OperatorSpace<F>) -> Self {
        ErdosMap { space, direction: Direction::Adjoint }
    }

    pub fn space(&self) -> &OperatorSpace<F> {
        &self.space
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn flipped(&self) -> Self {
        let direction = match self.direction {
            Direction::Forward => Direction::Adjoint,
            Direction::Adjoint => Direction::Forward,
        };
        ErdosMap { space: self.space.clone(), direction }
    }

    /// Dimension of the space the argument projections act on.
    pub fn source_dim(&self) -> usize {
        match self.direction {
            Direction::Forward => self.space.dom(),
            Direction::Adjoint => self.space.cod(),
        }
    }

    pub fn target_dim(&self) -> usize {
        match self.direction {
            Direction::Forward => self.space.cod(),
            Direction::Adjoint => self.space.dom(),
        }
    }

    pub fn eval(&self, p: &Projection<F>) -> Result<Projection<F>> {
        if p.dim() != self.source_dim() {
            return Err(Error::DimensionMismatch(format!(
                "projection on C^{} for a map defined on C^{}",
                p.dim(),
                self.source_dim()
            )));
        }
        let mut b = SpanBuilder::new(self.target_dim());
        for t in self.space.basis() {
            let op = match self.direction {
                Direction::Forward => t.clone(),
                Direction::Adjoint => t.adjoint(),
            };
            let tp = op.mul(p.matrix());
            for j in 0..tp.cols() {
                if b.is_full() {
                    break;
                }
                b.insert(&tp.column(j));
            }
        }
        Ok(Projection::new_unchecked(ortho_project(&b.finish())))
    }
}

/// `S_{1,φ}` and `S_{2,φ}` with `P` ranging over the members of finite
/// frames on each side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemilatticePair<F: ExactField> {
    /// `{φ*(Q)^⊥ : Q ∈ codomain frame}`, contains `I`.
    pub s1: Vec<Projection<F>>,
    /// `{φ(P) : P ∈ domain frame}`, contains `0`.
    pub s2: Vec<Projection<F>>,
    /// Whether `φ` maps `s1` bijectively onto `s2`.
    pub bijective: bool,
}

fn sorted_unique<F: ExactField>(mut v: Vec<Projection<F>>) -> Vec<Projection<F>> {
    v.sort_by(|a, b| (a.rank(), a.matrix()).cmp(&(b.rank(), b.matrix())));
    v.dedup();
    v
}

/// Semilattices of `u` restricted to the members of `dom_frame` (on `H1`)
/// and `cod_frame` (on `H2`). The unrestricted families range over all
/// projections and are infinite in general.
pub fn semilattices_over<F: ExactField>(
    u: &OperatorSpace<F>,
    dom_frame: &Csl<F>,
    cod_frame: &Csl<F>,
) -> Result<SemilatticePair<F>> {
    if dom_frame.dim() != u.dom() || cod_frame.dim() != u.cod() {
        return Err(Error::DimensionMismatch("frames do not match the space".into()));
    }
    let phi = ErdosMap::new(u.clone());
    let phi_star = ErdosMap::adjoint_of(u.clone());
    let s2 = sorted_unique(dom_frame.members().iter().map(|p| phi.eval(p)).collect::<Result<_>>()?);
    let s1 = sorted_unique(
        cod_frame
            .members()
            .iter()
            .map(|q| phi_star.eval(q).map(|p| p.complement()))
            .collect::<Result<_>>()?,
    );
    let images: Vec<Projection<F>> = s1.iter().map(|p| phi.eval(p)).collect::<Result<_>>()?;
    let image_set: HashSet<&Projection<F>> = images.iter().collect();
    let bijective = image_set.len() == s1.len() && s1.len() == s2.len() && s2.iter().all(|p| image_set.contains(p));
    Ok(SemilatticePair { s1, s2, bijective })
}

/// The two characterizations of essentiality, evaluated independently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Essentiality {
    /// `Map(U)(I) = I` and `Map(U*)(I) = I`.
    pub by_map: bool,
    /// The algebras generated by `U*U` and `UU*` contain the identities.
    pub by_algebras: bool,
}

pub fn essentiality<F: ExactField>(u: &OperatorSpace<F>) -> Result<Essentiality> {
    let by_map = ErdosMap::new(u.clone()).eval(&Projection::identity(u.dom()))?.is_identity()
        && ErdosMap::adjoint_of(u.clone()).eval(&Projection::identity(u.cod()))?.is_identity();
    let adj = u.adjoint();
    let left = adj.product(u)?.generated_algebra(false)?;
    let right = u.product(&adj)?.generated_algebra(false)?;
    let by_algebras = left.is_unital() && right.is_unital();
    Ok(Essentiality { by_map, by_algebras })
}

/// Both characterizations must agree; disagreement is reported as an
/// internal error.
pub fn is_essential<F: ExactField>(u: &OperatorSpace<F>) -> Result<bool> {
    let e = essentiality(u)?;
    if e.by_map != e.by_algebras {
        return Err(Error::Internal(format!(
            "essentiality characterizations disagree (map: {}, algebras: {})",
            e.by_map, e.by_algebras
        )));
    }
    Ok(e.by_map)
}

/// Outcome of `T ∈ Ref(U)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefVerdict<F> {
    /// `Tx ∉ span(Ux)` for this `x`; exact.
    No { witness: Vec<F> },
    /// Holds generically (symbolic rank) and at every sampled point of the
    /// detected rank-drop loci.
    Yes { generic_rank: usize, loci: usize, points_checked: usize },
}

impl<F> RefVerdict<F> {
    pub fn is_yes(&self) -> bool {
        matches!(self, RefVerdict::Yes { .. })
    }
}

const MAX_LOCUS_DEPTH: usize = 3;

/// Membership problem restricted to a linear subspace `x = B y` of `H1`.
struct RefProblem<'a, F> {
    basis: Vec<Matrix<F>>,
    t: Matrix<F>,
    /// Columns span the subspace; maps local coordinates back to `H1`.
    embed: Matrix<F>,
    samples: usize,
    seen: &'a mut HashSet<VecSubspace<F>>,
    loci: usize,
    points: usize,
}

/// `Tx ∉ span(Ux)`.
fn fails_at<F: ExactField>(basis: &[Matrix<F>], t: &Matrix<F>, x: &[F]) -> bool {
    let mut b = SpanBuilder::new(t.rows());
    for u in basis {
        if b.is_full() {
            return false;
        }
        b.insert(&u.mul_vec(x));
    }
    !b.contains(&t.mul_vec(x))
}

impl<F: ExactField> RefProblem<'_, F> {
    fn vars(&self) -> usize {
        self.t.cols()
    }

    fn lift(&self, y: &[F]) -> Vec<F> {
        self.embed.mul_vec(y)
    }

    fn check(&mut self, y: &[F]) -> Option<Vec<F>> {
        self.points += 1;
        fails_at(&self.basis, &self.t, y).then(|| self.lift(y))
    }

    fn pencil(&self, with_t: bool) -> Vec<Vec<Poly<F>>> {
        let rows = self.t.rows();
        (0..rows)
            .map(|r| {
                let mut row: Vec<Poly<F>> = self.basis.iter().map(|u| Poly::linear(u.row(r))).collect();
                if with_t {
                    row.push(Poly::linear(self.t.row(r)));
                }
                row
            })
            .collect()
    }

    fn solve<R: Rng + ?Sized>(&mut self, rng: &mut R, depth: usize) -> Result<Option<Vec<F>>> {
        let m = self.vars();
        let plain = bareiss_rank(m, self.pencil(false));
        let augmented = bareiss_rank(m, self.pencil(true));
        if augmented.rank > plain.rank {
            // fails on a dense open set; random points find it
            for _ in 0..256 {
                let y = random::vector::<F, _>(rng, m);
                if let Some(x) = self.check(&y) {
                    return Ok(Some(x));
                }
            }
            return Err(Error::Internal("generic rank gap without a sampled witness".into()));
        }
        if plain.rank == 0 || plain.last_pivot.is_constant() || depth >= MAX_LOCUS_DEPTH {
            return Ok(None);
        }
        let d = plain.last_pivot;
        for y in self.locus_candidates(rng) {
            if y.iter().all(|c| c.is_zero()) || !d.eval(&y).is_zero() {
                continue;
            }
            if let Some(x) = self.check(&y) {
                return Ok(Some(x));
            }
            let g = d.gradient_at(&y);
            if g.iter().all(|c| c.is_zero()) {
                continue;
            }
            // a linear component through y has normal ∇d(y)
            let h = kernel(&Matrix::from_vec(1, m, g).expect("row vector"));
            let hb = h.as_column_matrix();
            if !d.substitute_linear(&hb).is_zero() {
                continue;
            }
            let global = VecSubspace::from_columns(&self.embed.mul(&hb));
            if !self.seen.insert(global) {
                continue;
            }
            self.loci += 1;
            for _ in 0..self.samples {
                let z = random::vector::<F, _>(rng, hb.cols());
                let y = hb.mul_vec(&z);
                if let Some(x) = self.check(&y) {
                    return Ok(Some(x));
                }
            }
            let mut sub = RefProblem {
                basis: self.basis.iter().map(|u| u.mul(&hb)).collect(),
                t: self.t.mul(&hb),
                embed: self.embed.mul(&hb),
                samples: self.samples,
                seen: &mut *self.seen,
                loci: 0,
                points: 0,
            };
            let found = sub.solve(rng, depth + 1)?;
            let (sub_loci, sub_points) = (sub.loci, sub.points);
            self.loci += sub_loci;
            self.points += sub_points;
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    /// Points likely to lie on rank-drop loci: coordinate vectors and their
    /// pairwise sums, and kernel vectors of the basis operators.
    fn locus_candidates<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<F>> {
        let m = self.vars();
        let mut out = unit_probes::<F>(m);
        for u in &self.basis {
            let k = kernel(u);
            out.extend(k.basis().iter().cloned());
            if k.dim() > 1 {
                let coeffs = random::vector::<F, _>(rng, k.dim());
                out.push(k.as_column_matrix().mul_vec(&coeffs));
            }
        }
        for w in self.basis.windows(2) {
            out.extend(kernel(&w[0].add(&w[1])).basis().iter().cloned());
        }
        out
    }
}

/// `e_i`, then `e_i + e_j` for `i < j`.
fn unit_probes<F: ExactField>(n: usize) -> Vec<Vec<F>> {
    let e = |idx: &[usize]| {
        let mut v = vec![F::zero(); n];
        for &i in idx {
            v[i] = F::one();
        }
        v
    };
    let mut out: Vec<Vec<F>> = (0..n).map(|i| e(&[i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            out.push(e(&[i, j]));
        }
    }
    out
}

/// Decides `t ∈ Ref(u)`, i.e. `tx ∈ span(ux)` for every `x`.
///
/// A `No` carries an exact witness. A `Yes` is exact on the generic stratum
/// (symbolic rank of `[u_1 x … u_k x | t x]` over the rational function
/// field) and sampled on the rank-drop loci that are found as linear
/// components of the last elimination pivot, up to depth 3.
pub fn ref_membership<F: ExactField, R: Rng + ?Sized>(
    u: &OperatorSpace<F>,
    t: &Matrix<F>,
    samples: usize,
    rng: &mut R,
) -> Result<RefVerdict<F>> {
    if t.shape() != (u.cod(), u.dom()) {
        return Err(Error::DimensionMismatch(format!(
            "operator of shape {}x{} against a space of {}x{} operators",
            t.rows(),
            t.cols(),
            u.cod(),
            u.dom()
        )));
    }
    for x in unit_probes::<F>(u.dom()) {
        if fails_at(u.basis(), t, &x) {
            return Ok(RefVerdict::No { witness: x });
        }
    }
    let mut seen = HashSet::new();
    let mut problem = RefProblem {
        basis: u.basis().to_vec(),
        t: t.clone(),
        embed: Matrix::identity(u.dom()),
        samples,
        seen: &mut seen,
        loci: 0,
        points: 0,
    };
    let found = problem.solve(rng, 0)?;
    let generic_rank = bareiss_rank(u.dom(), problem.pencil(false)).rank;
    Ok(match found {
        Some(witness) => RefVerdict::No { witness },
        None => RefVerdict::Yes { generic_rank, loci: problem.loci, points_checked: problem.points },
    })
}

/// Reflexive hull of a bimodule over the algebras spanned by two frames:
/// every nonzero block `E_i U F_j` becomes the full block. Proper nonzero
/// blocks are only possible between higher-rank atoms, which is rejected.
pub fn ref_hull_pattern<F: ExactField>(
    u: &OperatorSpace<F>,
    left: &[Projection<F>],
    right: &[Projection<F>],
) -> Result<OperatorSpace<F>> {
    validate_frame(u.cod(), left)?;
    validate_frame(u.dom(), right)?;
    let dl = OperatorSpace::square(u.cod(), &left.iter().map(|p| p.matrix().clone()).collect::<Vec<_>>())?;
    let dr = OperatorSpace::square(u.dom(), &right.iter().map(|p| p.matrix().clone()).collect::<Vec<_>>())?;
    if !u.is_bimodule_over(&dl, &dr)? {
        return Err(Error::Precondition("space is not a bimodule over the frame algebras".into()));
    }
    let mut blocks = Vec::new();
    for (i, e) in left.iter().enumerate() {
        for (j, f) in right.iter().enumerate() {
            let block = u.sandwich(e.matrix(), f.matrix())?;
            if block.is_zero() {
                continue;
            }
            let full = OperatorSpace::full(u.dom(), u.cod()).sandwich(e.matrix(), f.matrix())?;
            if block.dim() != full.dim() {
                return Err(Error::UnsupportedClass(format!(
                    "block ({i}, {j}) is a proper nonzero subspace between atoms of ranks {} and {}",
                    e.rank(),
                    f.rank()
                )));
            }
            blocks.extend(full.basis().iter().cloned());
        }
    }
    OperatorSpace::new(u.dom(), u.cod(), &blocks)
}

/// `A = Alg(Lat(A))` with `Lat` taken relative to `frame`.
pub fn is_reflexive_algebra<F: ExactField>(a: &OpAlgebra<F>, frame: &[Projection<F>]) -> Result<bool> {
    if !a.is_unital() {
        return Err(Error::Precondition("reflexivity test needs a unital algebra".into()));
    }
    let lat: Csl<F> = lat_of_algebra(a, frame)?;
    Ok(lat.alg() == *a)
}
