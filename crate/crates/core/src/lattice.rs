//! Commuting projection lattices (CSLs): closure, atoms, `Alg`/`Lat` and
//! lattice isomorphism search.
//!
//! A closed CSL is stored through its atom decomposition: every member is the
//! sum of the atoms it dominates, so a member is encoded as a `u64` mask over
//! atom indices and `∧`, `∨` become `&`, `|`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{column_space, ortho_project};
use crate::matrix::Matrix;
use crate::opspace::{OpAlgebra, OperatorSpace};
use crate::scalar::ExactField;

/// Maximum number of members a closure may produce.
pub const CLOSURE_CAP: usize = 4096;

/// A Hermitian idempotent matrix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Projection<F>(Matrix<F>);

impl<F: ExactField> Projection<F> {
    pub fn new(m: Matrix<F>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotAProjection(format!("{}x{} matrix", m.rows(), m.cols())));
        }
        if !m.is_hermitian() {
            return Err(Error::NotAProjection(format!("{m} is not Hermitian")));
        }
        if m.mul(&m) != m {
            return Err(Error::NotAProjection(format!("{m} is not idempotent")));
        }
        Ok(Projection(m))
    }

    /// For matrices that are projections by construction.
    pub(crate) fn new_unchecked(m: Matrix<F>) -> Self {
        debug_assert!(m.is_projection(), "not a projection: {m}");
        Projection(m)
    }

    pub fn zero(n: usize) -> Self {
        Projection(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Projection(Matrix::identity(n))
    }

    /// The orthogonal projection onto the range of `m`.
    pub fn onto_range(m: &Matrix<F>) -> Self {
        Projection(ortho_project(&column_space(m)))
    }

    /// Diagonal 0/1 projection.
    pub fn coordinate(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in indices {
            m[(i, i)] = F::one();
        }
        Projection(m)
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<F> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn rank(&self) -> usize {
        column_space(&self.0).dim()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// `I − P`.
    pub fn complement(&self) -> Self {
        Projection(Matrix::identity(self.dim()).sub(&self.0))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        self.0.commutes_with(&other.0)
    }

    /// `P ≤ Q`, i.e. `QP = P`.
    pub fn is_below(&self, other: &Self) -> bool {
        other.0.mul(&self.0) == self.0
    }

    pub fn is_orthogonal_to(&self, other: &Self) -> bool {
        self.0.mul(&other.0).is_zero()
    }

    /// Projection onto the intersection of the ranges.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let r = column_space(&self.0).intersect(&column_space(&other.0))?;
        Ok(Projection(ortho_project(&r)))
    }

    /// Projection onto the sum of the ranges.
    pub fn join(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        let r = column_space(&self.0).join(&column_space(&other.0))?;
        Ok(Projection(ortho_project(&r)))
    }

    /// `U P U*`.
    pub fn conjugate(&self, u: &Matrix<F>) -> Self {
        Projection::new_unchecked(u.mul(&self.0).mul(&u.adjoint()))
    }

    /// Canonical atom ordering: first coordinate in the range, then matrix
    /// order.
    fn order_key(&self) -> (usize, &Matrix<F>) {
        let first = (0..self.dim()).find(|&i| !self.0[(i, i)].is_zero()).unwrap_or(usize::MAX);
        (first, &self.0)
    }
}

impl<F: fmt::Display> fmt::Debug for Projection<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Projection{}", self.0)
    }
}

fn check_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("projections on C^{a} and C^{b}")));
    }
    Ok(())
}

fn mask_indices(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

/// Sort key for members: size first, then the ascending index list.
fn member_key(mask: u64) -> (u32, Vec<usize>) {
    (mask.count_ones(), mask_indices(mask).collect())
}

fn full_mask(k: usize) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// A finite commutative subspace lattice with its atom decomposition.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Csl<F> {
    dim: usize,
    atoms: Vec<Projection<F>>,
    members: Vec<Projection<F>>,
    member_sets: Vec<u64>,
}

impl<F: ExactField> Csl<F> {
    /// The smallest lattice containing `gens`, `0` and `I`.
    pub fn closure(dim: usize, gens: &[Projection<F>]) -> Result<Self> {
        for g in gens {
            check_dim(dim, g.dim())?;
        }
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes_with(&gens[j]) {
                    return Err(Error::NonCommuting(i, j));
                }
            }
        }
        // Refine {I} into the atoms of the Boolean algebra generated by gens.
        let mut cells = vec![Matrix::<F>::identity(dim)];
        if dim == 0 {
            cells.clear();
        }
        for g in gens {
            let gc = g.complement();
            let mut next = Vec::with_capacity(cells.len() * 2);
            for c in &cells {
                for part in [c.mul(g.matrix()), c.mul(gc.matrix())] {
                    if !part.is_zero() {
                        next.push(part);
                    }
                }
            }
            cells = next;
        }
        let cells: Vec<Projection<F>> = cells.into_iter().map(Projection::new_unchecked).collect();
        let gen_masks: Vec<u64> = gens
            .iter()
            .map(|g| {
                cells
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.is_below(g))
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Self::from_cells(dim, cells, &gen_masks)
    }

    /// Builds the lattice generated by unions of `cells` (pairwise
    /// orthogonal, summing to `I`) given by `gen_masks`.
    pub(crate) fn from_cells(dim: usize, cells: Vec<Projection<F>>, gen_masks: &[u64]) -> Result<Self> {
        if cells.len() > 64 {
            return Err(Error::UnsupportedClass(format!("{} cells exceed the 64-atom encoding", cells.len())));
        }
        let full = full_mask(cells.len());
        let family = close_masks(full, gen_masks)?;
        // L♭ is the union of the members strictly below L; L − L♭ is an atom
        // exactly when L is join-irreducible.
        let mut atom_masks = Vec::new();
        for &l in &family {
            let flat = family.iter().filter(|&&m| m & l == m && m != l).fold(0, |a, &m| a | m);
            let atom = l & !flat;
            if atom != 0 {
                atom_masks.push(atom);
            }
        }
        // Distinct join-irreducibles give disjoint atoms, so no duplicates
        // arise and they partition the cells.
        let covered = atom_masks.iter().fold(0u64, |acc, &a| {
            debug_assert_eq!(acc & a, 0);
            acc | a
        });
        if covered != full || atom_masks.iter().map(|a| a.count_ones()).sum::<u32>() != cells.len() as u32 {
            return Err(Error::Internal("atoms of a finite CSL do not partition the identity".into()));
        }
        let atoms: Vec<Projection<F>> = atom_masks
            .iter()
            .map(|&a| {
                let terms = mask_indices(a).map(|i| cells[i].matrix());
                Projection::new_unchecked(sum_matrices(dim, terms))
            })
            .collect();
        let members: Vec<u64> = family
            .iter()
            .map(|&l| {
                atom_masks
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a & l == a)
                    .fold(0u64, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Ok(Self::assemble(dim, atoms, members))
    }

    /// Canonicalizes atom order and member order.
    fn assemble(dim: usize, atoms: Vec<Projection<F>>, member_sets: Vec<u64>) -> Self {
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by(|&a, &b| atoms[a].order_key().cmp(&atoms[b].order_key()));
        let mut position = vec![0; atoms.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let atoms: Vec<Projection<F>> = order.iter().map(|&i| atoms[i].clone()).collect();
        let mut sets: Vec<u64> = member_sets
            .iter()
            .map(|&m| mask_indices(m).fold(0u64, |acc, i| acc | 1 << position[i]))
            .collect();
        sets.sort_by_key(|&m| member_key(m));
        sets.dedup();
        let members = sets
            .iter()
            .map(|&m| Projection::new_unchecked(sum_matrices(dim, mask_indices(m).map(|i| atoms[i].matrix()))))
            .collect();
        Csl { dim, atoms, members, member_sets: sets }
    }

    /// Block-diagonal lattice: atom `k` is the coordinate projection onto the
    /// `k`-th block of size `atom_ranks[k]`; members are generated by
    /// `member_sets`.
    pub fn from_blocks(atom_ranks: &[usize], member_sets: &[Vec<usize>]) -> Result<Self> {
        let k = atom_ranks.len();
        if k > 64 {
            return Err(Error::UnsupportedClass(format!("{k} atoms exceed the 64-atom encoding")));
        }
        if let Some(r) = atom_ranks.iter().position(|&r| r == 0) {
            return Err(Error::Precondition(format!("atom {r} has rank 0")));
        }
        let dim: usize = atom_ranks.iter().sum();
        let mut offset = 0;
        let cells: Vec<Projection<F>> = atom_ranks
            .iter()
            .map(|&r| {
                let p = Projection::coordinate(dim, offset..offset + r);
                offset += r;
                p
            })
            .collect();
        let mut masks = Vec::with_capacity(member_sets.len());
        for set in member_sets {
            let mut m = 0u64;
            for &i in set {
                if i >= k {
                    return Err(Error::Precondition(format!("atom index {i} out of range for {k} atoms")));
                }
                m |= 1 << i;
            }
            masks.push(m);
        }
        Self::from_cells(dim, cells, &masks)
    }

    /// `0 < P_1 < … < I` with the given atom ranks.
    pub fn chain(atom_ranks: &[usize]) -> Self {
        let sets: Vec<Vec<usize>> = (1..atom_ranks.len()).map(|k| (0..k).collect()).collect();
        Self::from_blocks(atom_ranks, &sets).expect("valid chain")
    }

    /// The full Boolean lattice on the given atoms.
    pub fn boolean(atom_ranks: &[usize]) -> Self {
        let sets: Vec<Vec<usize>> = (0..atom_ranks.len()).map(|k| vec![k]).collect();
        Self::from_blocks(atom_ranks, &sets).expect("valid Boolean lattice")
    }

    pub fn trivial(dim: usize) -> Self {
        Self::closure(dim, &[]).expect("empty generator set")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Projection<F>] {
        &self.atoms
    }

    pub fn members(&self) -> &[Projection<F>] {
        &self.members
    }

    pub fn member_sets(&self) -> &[u64] {
        &self.member_sets
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn atom_ranks(&self) -> Vec<usize> {
        self.atoms.iter().map(Projection::rank).collect()
    }

    /// Member sets as ascending index lists.
    pub fn member_index_sets(&self) -> Vec<Vec<usize>> {
        self.member_sets.iter().map(|&m| mask_indices(m).collect()).collect()
    }

    pub fn full_mask(&self) -> u64 {
        full_mask(self.atoms.len())
    }

    pub fn member_by_mask(&self, mask: u64) -> Option<usize> {
        self.member_sets.binary_search_by_key(&member_key(mask), |&m| member_key(m)).ok()
    }

    pub fn position(&self, p: &Projection<F>) -> Option<usize> {
        self.members.iter().position(|m| m == p)
    }

    /// Number of members containing each atom.
    pub fn atom_degrees(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .map(|a| self.member_sets.iter().filter(|&&m| m >> a & 1 == 1).count())
            .collect()
    }

    /// Whether the members form a chain.
    pub fn is_nest(&self) -> bool {
        self.member_sets.windows(2).all(|w| w[0] & w[1] == w[0])
    }

    /// `U S U*`.
    pub fn conjugate(&self, u: &Matrix<F>) -> Self {
        let atoms = self.atoms.iter().map(|a| a.conjugate(u)).collect();
        Self::assemble(self.dim, atoms, self.member_sets.clone())
    }

    /// `Alg S = {X : L^⊥ X L = 0 ∀ L ∈ S}`, solved as a linear system.
    pub fn alg(&self) -> OpAlgebra<F> {
        let n = self.dim;
        let constraints: Vec<(Matrix<F>, Matrix<F>)> = self
            .members
            .iter()
            .filter(|l| !l.is_zero() && !l.is_identity())
            .map(|l| (l.complement().into_matrix(), l.matrix().clone()))
            .collect();
        let space = OperatorSpace::solve(n, n, constraints.iter().map(|(perp, l)| move |x: &Matrix<F>| perp.mul(x).mul(l)));
        OpAlgebra::new(space).expect("Alg of a lattice is an algebra")
    }

    /// Checks the stored invariants from scratch.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let total = sum_matrices(n, self.atoms.iter().map(Projection::matrix));
        if !total.is_identity() {
            return Err(Error::Internal("atoms do not sum to I".into()));
        }
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                if !a.is_orthogonal_to(b) {
                    return Err(Error::Internal("atoms are not orthogonal".into()));
                }
            }
        }
        let set: HashSet<u64> = self.member_sets.iter().copied().collect();
        if !set.contains(&0) || !set.contains(&self.full_mask()) {
            return Err(Error::Internal("lattice lacks 0 or I".into()));
        }
        for &a in &self.member_sets {
            for &b in &self.member_sets {
                if !set.contains(&(a & b)) || !set.contains(&(a | b)) {
                    return Err(Error::Internal("lattice not closed under meet and join".into()));
                }
            }
        }
        Ok(())
    }
}

impl<F: ExactField> fmt::Debug for Csl<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Csl(dim={}, atomRanks={:?}, memberSets={:?})", self.dim, self.atom_ranks(), self.member_index_sets())
    }
}

pub(crate) fn sum_matrices<'a, F: ExactField + 'a>(n: usize, terms: impl Iterator<Item = &'a Matrix<F>>) -> Matrix<F> {
    let mut out = Matrix::zeros(n, n);
    for t in terms {
        out = out.add(t);
    }
    out
}

fn close_masks(full: u64, gens: &[u64]) -> Result<Vec<u64>> {
    let mut family: BTreeSet<u64> = BTreeSet::new();
    let mut queue: Vec<u64> = Vec::new();
    for m in [0, full].into_iter().chain(gens.iter().copied()) {
        if family.insert(m) {
            queue.push(m);
        }
    }
    while let Some(x) = queue.pop() {
        let current: Vec<u64> = family.iter().copied().collect();
        for y in current {
            for z in [x & y, x | y] {
                if family.insert(z) {
                    if family.len() > CLOSURE_CAP {
                        return Err(Error::ClosureCap(CLOSURE_CAP));
                    }
                    queue.push(z);
                }
            }
        }
    }
    Ok(family.into_iter().collect())
}

/// `Lat A` relative to a frame of pairwise-orthogonal projections summing to
/// `I` that lie in `a`, each compressing `a` to its full block.
///
/// Every invariant projection then commutes with the frame and is a sum of
/// frame projections; a sum is invariant exactly when its index set is
/// closed under the edges `j → i` with `E_i a E_j ≠ 0`.
pub fn lat_of_algebra<F: ExactField>(a: &OpAlgebra<F>, frame: &[Projection<F>]) -> Result<Csl<F>> {
    let n = a.n();
    validate_frame(n, frame)?;
    for (i, e) in frame.iter().enumerate() {
        if !a.contains(e.matrix()) {
            return Err(Error::Precondition(format!("frame projection {i} is not in the algebra")));
        }
        let r = e.rank();
        let block = a.sandwich(e.matrix(), e.matrix())?;
        if block.dim() != r * r {
            return Err(Error::Precondition(format!(
                "the algebra compresses to a {}-dimensional space on frame projection {i} of rank {r}; the frame is too coarse",
                block.dim()
            )));
        }
    }
    let k = frame.len();
    if k > 64 {
        return Err(Error::UnsupportedClass(format!("{k} frame projections exceed the 64-atom encoding")));
    }
    let mut reach = vec![0u64; k];
    for j in 0..k {
        reach[j] |= 1 << j;
        for i in 0..k {
            if i != j && a.basis().iter().any(|t| !frame[i].matrix().mul(t).mul(frame[j].matrix()).is_zero()) {
                reach[j] |= 1 << i;
            }
        }
    }
    // transitive closure
    loop {
        let mut changed = false;
        for j in 0..k {
            let r = mask_indices(reach[j]).fold(reach[j], |acc, i| acc | reach[i]);
            if r != reach[j] {
                reach[j] = r;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Csl::from_cells(n, frame.to_vec(), &reach)
}

pub fn validate_frame<F: ExactField>(n: usize, frame: &[Projection<F>]) -> Result<()> {
    if frame.is_empty() && n > 0 {
        return Err(Error::InvalidFrame("empty frame".into()));
    }
    for (i, e) in frame.iter().enumerate() {
        if e.dim() != n {
            return Err(Error::InvalidFrame(format!("projection {i} acts on C^{}, expected C^{n}", e.dim())));
        }
        if e.is_zero() {
            return Err(Error::InvalidFrame(format!("projection {i} is zero")));
        }
        for (j, f) in frame.iter().enumerate().skip(i + 1) {
            if !e.is_orthogonal_to(f) {
                return Err(Error::InvalidFrame(format!("projections {i} and {j} are not orthogonal")));
            }
        }
    }
    if !sum_matrices(n, frame.iter().map(Projection::matrix)).is_identity() {
        return Err(Error::InvalidFrame("projections do not sum to I".into()));
    }
    Ok(())
}

/// An isomorphism of CSLs given by a bijection of atoms.
#[derive(Clone, PartialEq, Eq)]
pub struct LatticeIso<F> {
    source: Csl<F>,
    target: Csl<F>,
    atom_map: Vec<usize>,
    member_map: Vec<usize>,
}

impl<F: ExactField> LatticeIso<F> {
    /// Validates that `atom_map` carries the member family of `source`
    /// exactly onto that of `target`.
    pub fn new(source: Csl<F>, target: Csl<F>, atom_map: Vec<usize>) -> Result<Self> {
        let k = source.atom_count();
        if atom_map.len() != k || target.atom_count() != k {
            return Err(Error::InvalidIso(format!(
                "atom map of length {} between lattices with {k} and {} atoms",
                atom_map.len(),
                target.atom_count()
            )));
        }
        let mut seen = 0u64;
        for &t in &atom_map {
            if t >= k || seen >> t & 1 == 1 {
                return Err(Error::InvalidIso("atom map is not a bijection".into()));
            }
            seen |= 1 << t;
        }
        let mut member_map = Vec::with_capacity(source.member_count());
        for &m in source.member_sets() {
            let image = map_mask(m, &atom_map);
            match target.member_by_mask(image) {
                Some(j) => member_map.push(j),
                None => {
                    return Err(Error::InvalidIso(format!(
                        "member {:?} maps outside the target lattice",
                        mask_indices(m).collect::<Vec<_>>()
                    )))
                }
            }
        }
        if source.member_count() != target.member_count() {
            return Err(Error::InvalidIso("member counts differ".into()));
        }
        Ok(LatticeIso { source, target, atom_map, member_map })
    }

    pub fn identity(s: &Csl<F>) -> Self {
        Self::new(s.clone(), s.clone(), (0..s.atom_count()).collect()).expect("identity map")
    }

    pub fn source(&self) -> &Csl<F> {
        &self.source
    }

    pub fn target(&self) -> &Csl<F> {
        &self.target
    }

    pub fn atom_map(&self) -> &[usize] {
        &self.atom_map
    }

    pub fn member_map(&self) -> &[usize] {
        &self.member_map
    }

    /// Whether each atom is sent to an atom of equal rank, which would make
    /// the lattices unitarily equivalent.
    pub fn ranks_match(&self) -> bool {
        let (r1, r2) = (self.source.atom_ranks(), self.target.atom_ranks());
        self.atom_map.iter().enumerate().all(|(i, &j)| r1[i] == r2[j])
    }

    /// `φ(L)` for the member at `index` of the source.
    pub fn apply_member(&self, index: usize) -> &Projection<F> {
        &self.target.members()[self.member_map[index]]
    }

    /// `φ(p)` when `p` is a member of the source.
    pub fn apply(&self, p: &Projection<F>) -> Option<&Projection<F>> {
        self.source.position(p).map(|i| self.apply_member(i))
    }

    /// Pairs `(L, φ(L))` over all source members.
    pub fn pairs(&self) -> impl Iterator<Item = (&Projection<F>, &Projection<F>)> {
        self.source.members().iter().enumerate().map(|(i, l)| (l, self.apply_member(i)))
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.atom_map.len()];
        for (i, &j) in self.atom_map.iter().enumerate() {
            inv[j] = i;
        }
        Self::new(self.target.clone(), self.source.clone(), inv).expect("inverse of a valid iso")
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Self) -> Result<Self> {
        if self.target != other.source {
            return Err(Error::InvalidIso("composition through different lattices".into()));
        }
        let map = self.atom_map.iter().map(|&j| other.atom_map[j]).collect();
        Self::new(self.source.clone(), other.target.clone(), map)
    }

    /// Image of the source atom at `atom` from lattice data alone: with
    /// `M = ∧{φ(L) : A ≤ L}` and `N = ∨{φ(L) : AL = 0}` this is
    /// `M − M ∧ N`, evaluated with general projection meets and joins.
    /// When `N ≤ M` (always in a nest) it is the plain difference `M − N`.
    pub fn atom_image_formula(&self, atom: usize) -> Result<Projection<F>> {
        let a = self.source.atoms().get(atom).ok_or_else(|| Error::Precondition(format!("no atom {atom}")))?;
        let n = self.target.dim();
        let mut upper = Projection::identity(n);
        let mut lower = Projection::zero(n);
        for (l, phi_l) in self.pairs() {
            if a.is_below(l) {
                upper = upper.meet(phi_l)?;
            } else if a.is_orthogonal_to(l) {
                lower = lower.join(phi_l)?;
            }
        }
        let below = upper.meet(&lower)?;
        Projection::new(upper.matrix().sub(below.matrix()))
            .map_err(|_| Error::Internal("atom formula produced a non-projection".into()))
    }
}

impl<F: ExactField> fmt::Debug for LatticeIso<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticeIso(atomMap={:?})", self.atom_map)
    }
}

fn map_mask(mask: u64, atom_map: &[usize]) -> u64 {
    mask_indices(mask).fold(0u64, |acc, i| acc | 1 << atom_map[i])
}

/// Certificate that no atom bijection preserves the member families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotIsomorphic {
    /// Invariants that already differ; empty when only exhaustive search
    /// ruled the lattices out.
    pub mismatches: Vec<String>,
    /// Search nodes visited.
    pub nodes_explored: u64,
}

/// Structural invariants compared before searching.
fn invariant_mismatches<F: ExactField>(s1: &Csl<F>, s2: &Csl<F>) -> Vec<String> {
    let mut out = Vec::new();
    if s1.atom_count() != s2.atom_count() {
        out.push(format!("atom count {} vs {}", s1.atom_count(), s2.atom_count()));
    }
    if s1.member_count() != s2.member_count() {
        out.push(format!("member count {} vs {}", s1.member_count(), s2.member_count()));
    }
    let sizes = |s: &Csl<F>| {
        let mut v: Vec<u32> = s.member_sets().iter().map(|m| m.count_ones()).collect();
        v.sort_unstable();
        v
    };
    if sizes(s1) != sizes(s2) {
        out.push(format!("member cardinalities {:?} vs {:?}", sizes(s1), sizes(s2)));
    }
    let degrees = |s: &Csl<F>| {
        let mut v = s.atom_degrees();
        v.sort_unstable();
        v
    };
    if degrees(s1) != degrees(s2) {
        out.push(format!("atom degrees {:?} vs {:?}", degrees(s1), degrees(s2)));
    }
    out
}

struct Search<'a> {
    k: usize,
    src_sets: &'a [u64],
    tgt_sets: HashSet<u64>,
    src_joint: Vec<Vec<usize>>,
    tgt_joint: Vec<Vec<usize>>,
}

fn joint_degrees(k: usize, sets: &[u64]) -> Vec<Vec<usize>> {
    (0..k)
        .map(|a| (0..k).map(|b| sets.iter().filter(|&&m| m >> a & 1 == 1 && m >> b & 1 == 1).count()).collect())
        .collect()
}

impl Search<'_> {
    fn compatible(&self, assign: &[usize], a: usize, t: usize) -> bool {
        if self.src_joint[a][a] != self.tgt_joint[t][t] {
            return false;
        }
        assign.iter().enumerate().all(|(b, &u)| self.src_joint[a][b] == self.tgt_joint[t][u])
    }

    fn complete(&self, assign: &[usize]) -> bool {
        self.src_sets.iter().all(|&m| self.tgt_sets.contains(&map_mask(m, assign)))
    }

    /// Depth-first search in ascending target order; the first hit is the
    /// lexicographically smallest admissible atom map.
    fn run(&self, assign: &mut Vec<usize>, used: u64, nodes: &mut u64) -> bool {
        *nodes += 1;
        let a = assign.len();
        if a == self.k {
            return self.complete(assign);
        }
        for t in 0..self.k {
            if used >> t & 1 == 1 || !self.compatible(assign, a, t) {
                continue;
            }
            assign.push(t);
            if self.run(assign, used | 1 << t, nodes) {
                return true;
            }
            assign.pop();
        }
        false
    }
}

/// Searches for an atom bijection carrying the member family of `s1` onto
/// that of `s2`. Atom ranks are ignored. With `parallel`, the branches for
/// the first atom are explored concurrently and the lexicographically first
/// success is kept, so the answer does not depend on scheduling.
pub fn find_lattice_iso<F: ExactField>(
    s1: &Csl<F>,
    s2: &Csl<F>,
    parallel: bool,
) -> std::result::Result<LatticeIso<F>, NotIsomorphic> {
    let mismatches = invariant_mismatches(s1, s2);
    if !mismatches.is_empty() {
        return Err(NotIsomorphic { mismatches, nodes_explored: 0 });
    }
    let k = s1.atom_count();
    let search = Search {
        k,
        src_sets: s1.member_sets(),
        tgt_sets: s2.member_sets().iter().copied().collect(),
        src_joint: joint_degrees(k, s1.member_sets()),
        tgt_joint: joint_degrees(k, s2.member_sets()),
    };
    let found = if parallel && k > 1 {
        let branches: Vec<(Option<Vec<usize>>, u64)> = (0..k)
            .into_par_iter()
            .map(|t| {
                let mut nodes = 0;
                if !search.compatible(&[], 0, t) {
                    return (None, 0);
                }
                let mut assign = vec![t];
                let hit = search.run(&mut assign, 1 << t, &mut nodes);
                (hit.then_some(assign), nodes)
            })
            .collect();
        let nodes: u64 = branches.iter().map(|b| b.1).sum::<u64>() + 1;
        (branches.into_iter().find_map(|b| b.0), nodes)
    } else {
        let mut nodes = 0;
        let mut assign = Vec::with_capacity(k);
        let hit = search.run(&mut assign, 0, &mut nodes);
        (hit.then_some(assign), nodes)
    };
    match found {
        (Some(map), _) => Ok(LatticeIso::new(s1.clone(), s2.clone(), map).expect("search result is admissible")),
        (None, nodes_explored) => Err(NotIsomorphic { mismatches: Vec::new(), nodes_explored }),
    }
}

/// Member masks keyed for lookup; used by callers that test many projections.
pub fn member_lookup<F: ExactField>(s: &Csl<F>) -> HashMap<&Projection<F>, usize> {
    s.members().iter().enumerate().map(|(i, m)| (m, i)).collect()
}

/// Reference search: tries every atom bijection in lexicographic order with
/// no pruning and returns the first that maps member sets onto member sets.
pub fn brute_force_atom_map<F: ExactField>(s1: &Csl<F>, s2: &Csl<F>) -> Option<Vec<usize>> {
    let k = s1.atom_count();
    if k != s2.atom_count() || s1.member_count() != s2.member_count() {
        return None;
    }
    let targets: HashSet<u64> = s2.member_sets().iter().copied().collect();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        if s1.member_sets().iter().all(|&m| targets.contains(&map_mask(m, &perm))) {
            return Some(perm);
        }
        // next permutation
        let Some(i) = (1..k).rev().find(|&i| perm[i - 1] < perm[i]) else { return None };
        let j = (i..k).rev().find(|&j| perm[j] > perm[i - 1]).expect("a larger suffix element exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    type P = Projection<Q>;
    type S = Csl<Q>;

    fn diag(xs: &[i64]) -> P {
        P::new(Matrix::diag_i64(xs)).unwrap()
    }

    fn line(v: &[i64]) -> P {
        P::onto_range(&Matrix::column_vector(&v.iter().map(|&x| Q::from_i64(x)).collect::<Vec<_>>()))
    }

    #[test]
    fn meet_and_join_examples() {
        let p = diag(&[1, 0]);
        assert_eq!(p.meet(&p).unwrap(), p);
        assert_eq!(p.join(&P::zero(2)).unwrap(), p);
        let q = diag(&[0, 1]);
        assert!(p.meet(&q).unwrap().is_zero());
        assert!(p.join(&q).unwrap().is_identity());
        assert!(line(&[1, 0]).meet(&line(&[1, 1])).unwrap().is_zero());
        assert!(line(&[1, 0]).join(&line(&[1, 1])).unwrap().is_identity());
    }

    #[test]
    fn rejects_non_projections() {
        assert!(P::new(Matrix::from_i64(&[&[1, 1], &[0, 0]])).is_err());
        assert!(P::new(Matrix::diag_i64(&[2, 0])).is_err());
    }

    #[test]
    fn closure_examples() {
        let t = S::closure(2, &[]).unwrap();
        assert_eq!(t.member_count(), 2);
        assert_eq!(t.atoms(), &[P::identity(2)]);

        let c = S::closure(3, &[diag(&[1, 0, 0]), diag(&[1, 1, 0])]).unwrap();
        assert_eq!(c.member_count(), 4);
        assert!(c.is_nest());
        assert_eq!(c.atoms(), &[diag(&[1, 0, 0]), diag(&[0, 1, 0]), diag(&[0, 0, 1])]);

        let b = S::closure(2, &[diag(&[1, 0]), diag(&[0, 1])]).unwrap();
        assert_eq!(b.member_count(), 4);
        assert!(!b.is_nest());
        assert_eq!(b.atom_count(), 2);
        c.validate().unwrap();
        b.validate().unwrap();
    }

    #[test]
    fn closure_rejects_non_commuting_generators() {
        let err = S::closure(2, &[diag(&[1, 0]), line(&[1, 1])]).unwrap_err();
        assert_eq!(err, Error::NonCommuting(0, 1));
    }

    #[test]
    fn alg_examples() {
        assert!(S::trivial(3).alg().is_full());
        assert_eq!(S::chain(&[1, 1]).alg(), OpAlgebra::upper_triangular(2));
        assert_eq!(S::boolean(&[1, 1, 1]).alg(), OpAlgebra::diagonal_masa(3));
    }

    #[test]
    fn lat_examples() {
        let frame2 = [diag(&[1, 0]), diag(&[0, 1])];
        let t2 = OpAlgebra::<Q>::upper_triangular(2);
        let lat = lat_of_algebra(&t2, &frame2).unwrap();
        assert_eq!(lat, S::chain(&[1, 1]));
        assert_eq!(lat.members(), &[P::zero(2), diag(&[1, 0]), P::identity(2)]);

        let full = OpAlgebra::<Q>::full(3);
        assert_eq!(lat_of_algebra(&full, &[P::identity(3)]).unwrap(), S::trivial(3));
        let frame3 = [diag(&[1, 0, 0]), diag(&[0, 1, 0]), diag(&[0, 0, 1])];
        assert_eq!(lat_of_algebra(&full, &frame3).unwrap(), S::trivial(3));

        let d3 = OpAlgebra::<Q>::diagonal_masa(3);
        let lat = lat_of_algebra(&d3, &frame3).unwrap();
        assert_eq!(lat.member_count(), 8);
        assert_eq!(lat, S::boolean(&[1, 1, 1]));
    }

    #[test]
    fn lat_rejects_bad_frames() {
        let scalars = OpAlgebra::<Q>::scalars(2);
        assert!(matches!(lat_of_algebra(&scalars, &[P::identity(2)]), Err(Error::Precondition(_))));
        let t2 = OpAlgebra::<Q>::upper_triangular(2);
        assert!(matches!(lat_of_algebra(&t2, &[diag(&[1, 0])]), Err(Error::InvalidFrame(_))));
        assert!(matches!(
            lat_of_algebra(&t2, &[diag(&[1, 0]), diag(&[1, 1])]),
            Err(Error::InvalidFrame(_))
        ));
    }

    #[test]
    fn iso_search_examples() {
        let c = S::chain(&[1, 1]);
        let iso = find_lattice_iso(&c, &c, false).unwrap();
        assert_eq!(iso.atom_map(), &[0, 1]);

        let inflated = S::chain(&[2, 1]);
        let iso = find_lattice_iso(&c, &inflated, false).unwrap();
        assert!(!iso.ranks_match());
        assert_eq!(iso.apply(&diag(&[1, 0])).unwrap(), &diag(&[1, 1, 0]));

        let chain4 = S::chain(&[1, 1, 1]);
        let bool4 = S::closure(3, &[diag(&[1, 0, 0]), diag(&[0, 1, 1])]).unwrap();
        assert_eq!(bool4.member_count(), 4);
        let no = find_lattice_iso(&chain4, &bool4, false).unwrap_err();
        assert!(!no.mismatches.is_empty());
    }

    #[test]
    fn atom_formula_examples() {
        let c = S::chain(&[1, 1]);
        let id = LatticeIso::identity(&c);
        for a in 0..c.atom_count() {
            assert_eq!(&id.atom_image_formula(a).unwrap(), &c.atoms()[a]);
        }
        let iso = find_lattice_iso(&c, &S::chain(&[2, 1]), false).unwrap();
        assert_eq!(iso.atom_image_formula(1).unwrap(), diag(&[0, 0, 1]));

        let b = S::boolean(&[1, 1]);
        let swap = LatticeIso::new(b.clone(), b.clone(), vec![1, 0]).unwrap();
        assert_eq!(swap.atom_image_formula(0).unwrap(), diag(&[0, 1]));
    }

    #[test]
    fn invalid_atom_maps_are_rejected() {
        let c = S::chain(&[1, 1]);
        assert!(LatticeIso::new(c.clone(), c.clone(), vec![1, 0]).is_err());
        assert!(LatticeIso::new(c.clone(), c.clone(), vec![0, 0]).is_err());
    }

    #[test]
    fn parallel_search_matches_sequential() {
        let b = S::boolean(&[1, 2, 1]);
        let p = find_lattice_iso(&b, &b, true).unwrap();
        let s = find_lattice_iso(&b, &b, false).unwrap();
        assert_eq!(p.atom_map(), s.atom_map());
    }
}
