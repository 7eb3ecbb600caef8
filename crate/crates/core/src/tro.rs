//! Ternary rings of operators, TRO equivalence witnesses and the
//! constructions around them: essentialization, composition, enlargement,
//! unitalization, bimodule transport, the *-isomorphism between commutants,
//! the CSL decider and spatial Morita contexts.
//!
//! Direction convention: in `A ~M B` the algebra `A` acts on `H1`, `B` on
//! `H2` and `M ⊆ B(H1, H2)`, so `A = span(M*BM)` and `B = span(MAM*)`.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::erdos::{is_essential, ErdosMap};
use crate::error::{Error, Result};
use crate::lattice::{find_lattice_iso, lat_of_algebra, Csl, LatticeIso, NotIsomorphic, Projection};
use crate::linalg::{kernel, ortho_project, solve_linear, LinearSolution, SpanBuilder};
use crate::matrix::Matrix;
use crate::opspace::{OpAlgebra, OperatorSpace};
use crate::random;
use crate::scalar::ExactField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Verified,
    Skipped,
}

/// One named identity and whether it was checked. Failed identities are
/// reported as errors, never recorded here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn pass(&mut self, name: &str) {
        self.0.push(Check { name: name.to_string(), status: CheckStatus::Verified });
    }

    fn skip(&mut self, name: &str) {
        self.0.push(Check { name: name.to_string(), status: CheckStatus::Skipped });
    }

    fn contained<F: ExactField>(&mut self, name: &str, x: &OperatorSpace<F>, y: &OperatorSpace<F>) -> Result<()> {
        require_contained(name, x, y)?;
        self.pass(name);
        Ok(())
    }

    fn equal<F: ExactField>(&mut self, name: &str, x: &OperatorSpace<F>, y: &OperatorSpace<F>) -> Result<()> {
        require_contained(name, x, y)?;
        require_contained(name, y, x)?;
        self.pass(name);
        Ok(())
    }
}

fn require_contained<F: ExactField>(name: &str, x: &OperatorSpace<F>, y: &OperatorSpace<F>) -> Result<()> {
    if (x.dom(), x.cod()) != (y.dom(), y.cod()) {
        return Err(Error::DimensionMismatch(format!("`{name}` compares spaces of different shapes")));
    }
    match x.first_outside(y) {
        Some(w) => Err(Error::identity(name, w)),
        None => Ok(()),
    }
}

/// `span(x · y · z)`.
fn triple<F: ExactField>(x: &OperatorSpace<F>, y: &OperatorSpace<F>, z: &OperatorSpace<F>) -> Result<OperatorSpace<F>> {
    x.product(y)?.product(z)
}

fn mats<F: ExactField>(ps: &[Projection<F>]) -> Vec<Matrix<F>> {
    ps.iter().map(|p| p.matrix().clone()).collect()
}

/// A space `M` with `MM*M ⊆ M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tro<F: ExactField> {
    space: OperatorSpace<F>,
    essential: bool,
}

impl<F: ExactField> Tro<F> {
    /// Checks the TRO axiom exactly and computes the essential flag. On
    /// failure reports the first basis triple `(i, j, k)` with
    /// `M_i M_j* M_k ∉ M`.
    pub fn verify(space: OperatorSpace<F>) -> Result<Self> {
        let adj = space.adjoint();
        if !triple(&space, &adj, &space)?.is_subspace_of(&space) {
            let b = space.basis();
            for (i, x) in b.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    let xy = x.mul(&y.adjoint());
                    for (k, z) in b.iter().enumerate() {
                        if !space.contains(&xy.mul(z)) {
                            return Err(Error::NotATro(i, j, k));
                        }
                    }
                }
            }
            return Err(Error::Internal("TRO axiom fails on the span but on no basis triple".into()));
        }
        let essential = is_essential(&space)?;
        Ok(Tro { space, essential })
    }

    pub fn space(&self) -> &OperatorSpace<F> {
        &self.space
    }

    pub fn into_space(self) -> OperatorSpace<F> {
        self.space
    }

    pub fn is_essential(&self) -> bool {
        self.essential
    }

    /// `M*`, again a TRO with the same essential flag.
    pub fn adjoint(&self) -> Self {
        Tro { space: self.space.adjoint(), essential: self.essential }
    }

    /// `span(M*M)`, an algebra on `H1`.
    pub fn left_algebra(&self) -> Result<OpAlgebra<F>> {
        Ok(OpAlgebra::from_closed(self.space.adjoint().product(&self.space)?))
    }

    /// `span(MM*)`, an algebra on `H2`.
    pub fn right_algebra(&self) -> Result<OpAlgebra<F>> {
        Ok(OpAlgebra::from_closed(self.space.product(&self.space.adjoint())?))
    }
}

impl<F: ExactField> std::ops::Deref for Tro<F> {
    type Target = OperatorSpace<F>;

    fn deref(&self) -> &OperatorSpace<F> {
        &self.space
    }
}

/// Projection onto `∩ ker X` over `mats`, all of shape `rows × cols`.
fn joint_kernel_projection<F: ExactField>(cols: usize, mats: &[Matrix<F>]) -> Result<Matrix<F>> {
    if mats.is_empty() {
        return Ok(Matrix::identity(cols));
    }
    Ok(ortho_project(&kernel(&Matrix::vstack(mats)?)))
}

/// `N + Q·B(H1, H2)·P` with `P`, `Q` the projections onto the joint kernels
/// of `N` and `N*`. The result is an essential TRO containing `N`.
pub fn essentialize<F: ExactField>(n: &Tro<F>) -> Result<Tro<F>> {
    let p = joint_kernel_projection(n.dom(), n.basis())?;
    let adj: Vec<Matrix<F>> = n.basis().iter().map(Matrix::adjoint).collect();
    let q = joint_kernel_projection(n.cod(), &adj)?;
    let filler = OperatorSpace::full(n.dom(), n.cod()).sandwich(&q, &p)?;
    let m = Tro::verify(n.space.join(&filler)?)?;
    if !m.essential {
        return Err(Error::Internal("essentialization produced a non-essential TRO".into()));
    }
    Ok(m)
}

/// A verified `A ~M B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TroWitness<F: ExactField> {
    a: OpAlgebra<F>,
    b: OpAlgebra<F>,
    m: Tro<F>,
    checks: Vec<Check>,
}

/// Frames for `H1` and `H2` relative to which `Lat A` and `Lat B` are
/// computed; see [`lat_of_algebra`].
pub struct Frames<'a, F> {
    pub a: &'a [Projection<F>],
    pub b: &'a [Projection<F>],
}

impl<F> Clone for Frames<'_, F> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<F> Copy for Frames<'_, F> {}

/// Checks `A ~M B`: the containments `M*BM ⊆ A`, `MAM* ⊆ B`, the span
/// equalities, the same relation between the diagonals, and with frames and
/// unital algebras that `Map(M)` carries `Lat A` onto `Lat B`.
pub fn verify_witness<F: ExactField>(
    a: &OpAlgebra<F>,
    b: &OpAlgebra<F>,
    m: &Tro<F>,
    frames: Option<Frames<'_, F>>,
) -> Result<TroWitness<F>> {
    if a.n() != m.dom() || b.n() != m.cod() {
        return Err(Error::DimensionMismatch(format!(
            "algebras on C^{} and C^{} with a TRO from C^{} to C^{}",
            a.n(),
            b.n(),
            m.dom(),
            m.cod()
        )));
    }
    let mut c = Checks::default();
    c.pass("M is a TRO");
    if !m.essential {
        return Err(Error::Precondition("the TRO is not essential".into()));
    }
    c.pass("M is essential");
    let ms = m.space.adjoint();
    let mbm = triple(&ms, b, &m.space)?;
    let mam = triple(&m.space, a, &ms)?;
    c.contained("M*BM ⊆ A", &mbm, a)?;
    c.contained("MAM* ⊆ B", &mam, b)?;
    c.equal("A = span(M*BM)", a, &mbm)?;
    c.equal("B = span(MAM*)", b, &mam)?;
    let (da, db) = (a.diagonal(), b.diagonal());
    c.equal("Δ(A) = span(M*Δ(B)M)", &da, &triple(&ms, &db, &m.space)?)?;
    c.equal("Δ(B) = span(MΔ(A)M*)", &db, &triple(&m.space, &da, &ms)?)?;
    const LAT: &str = "Map(M)(Lat A) = Lat B";
    match frames {
        Some(f) if a.is_unital() && b.is_unital() => {
            let lat_a = lat_of_algebra(a, f.a)?;
            let lat_b = lat_of_algebra(b, f.b)?;
            let chi = ErdosMap::new(m.space.clone());
            let mut images = HashSet::new();
            for l in lat_a.members() {
                let img = chi.eval(l)?;
                if lat_b.position(&img).is_none() {
                    return Err(Error::identity(LAT, img.matrix()));
                }
                images.insert(img);
            }
            if images.len() != lat_b.member_count() {
                let missing = lat_b.members().iter().find(|q| !images.contains(*q)).expect("a member is missed");
                return Err(Error::identity(LAT, missing.matrix()));
            }
            c.pass(LAT);
        }
        _ => c.skip(LAT),
    }
    Ok(TroWitness { a: a.clone(), b: b.clone(), m: m.clone(), checks: c.0 })
}

impl<F: ExactField> TroWitness<F> {
    pub fn a(&self) -> &OpAlgebra<F> {
        &self.a
    }

    pub fn b(&self) -> &OpAlgebra<F> {
        &self.b
    }

    pub fn m(&self) -> &Tro<F> {
        &self.m
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// `B ~M* A`, re-verified.
    pub fn reversed(&self) -> Result<Self> {
        verify_witness(&self.b, &self.a, &self.m.adjoint(), None)
    }

    fn push_checks(&mut self, more: Checks) {
        self.checks.extend(more.0);
    }
}

/// A *-isomorphism between finite-dimensional algebras, stored as the images
/// of the canonical basis of its source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarIso<F: ExactField> {
    source: OpAlgebra<F>,
    target: OpAlgebra<F>,
    images: Vec<Matrix<F>>,
}

impl<F: ExactField> StarIso<F> {
    /// The linear map sending each `pairs[k].0` to `pairs[k].1`. The first
    /// components must span `source`; the map is built on a maximal
    /// independent subset and then checked on every pair.
    pub fn from_generators(source: OpAlgebra<F>, target: OpAlgebra<F>, pairs: &[(Matrix<F>, Matrix<F>)]) -> Result<Self> {
        let n = source.n();
        let mut b = SpanBuilder::new(n * n);
        let mut chosen = Vec::new();
        for (k, (x, _)) in pairs.iter().enumerate() {
            if x.shape() != (n, n) {
                return Err(Error::DimensionMismatch("generator outside the source algebra".into()));
            }
            if b.insert(x.as_slice()) {
                chosen.push(k);
            }
        }
        if b.finish() != *source.subspace() {
            return Err(Error::Precondition("generators do not span the source algebra".into()));
        }
        let cols: Vec<Matrix<F>> = chosen.iter().map(|&k| Matrix::column_vector(pairs[k].0.as_slice())).collect();
        let g = if cols.is_empty() { Matrix::zeros(n * n, 0) } else { Matrix::hstack(&cols)? };
        let m = target.n();
        let mut images = Vec::with_capacity(source.dim());
        for x in source.basis() {
            let coeffs = match solve_linear(&g, x.as_slice())? {
                LinearSolution::Affine { particular, .. } => particular,
                LinearSolution::Inconsistent => return Err(Error::Internal("basis element outside the generator span".into())),
            };
            images.push(Matrix::linear_combination((m, m), coeffs.iter().zip(chosen.iter().map(|&k| &pairs[k].1))));
        }
        let iso = StarIso { source, target, images };
        for (x, y) in pairs {
            if iso.apply(x).as_ref() != Some(y) {
                return Err(Error::identity("the linear extension is well defined", x));
            }
        }
        Ok(iso)
    }

    pub fn source(&self) -> &OpAlgebra<F> {
        &self.source
    }

    pub fn target(&self) -> &OpAlgebra<F> {
        &self.target
    }

    /// Images of `source().basis()`, in order.
    pub fn images(&self) -> &[Matrix<F>] {
        &self.images
    }

    /// `ρ(x)` for `x` in the source.
    pub fn apply(&self, x: &Matrix<F>) -> Option<Matrix<F>> {
        if x.shape() != (self.source.n(), self.source.n()) {
            return None;
        }
        let coords = self.source.subspace().coordinates(x.as_slice())?;
        let m = self.target.n();
        Some(Matrix::linear_combination((m, m), coords.iter().zip(&self.images)))
    }

    /// Images lie in the target and span it bijectively; the map is
    /// multiplicative, preserves adjoints and sends `I` to `I`.
    pub fn verify(&self) -> Result<()> {
        for (x, y) in self.source.basis().iter().zip(&self.images) {
            if !self.target.contains(y) {
                return Err(Error::identity("ρ maps into the target", x));
            }
        }
        let span = OperatorSpace::new(self.target.n(), self.target.n(), &self.images)?;
        if span.dim() != self.source.dim() || span != *self.target.space() {
            return Err(Error::identity("ρ is a bijection onto the target", format!("image of dimension {}", span.dim())));
        }
        let basis = self.source.basis();
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let lhs = self.apply(&x.mul(y)).ok_or_else(|| Error::Precondition("source is not an algebra".into()))?;
                if lhs != self.images[i].mul(&self.images[j]) {
                    return Err(Error::identity("ρ(xy) = ρ(x)ρ(y)", x.mul(y)));
                }
            }
            if self.source.is_selfadjoint() {
                let adj = self.apply(&x.adjoint()).expect("selfadjoint source");
                if adj != self.images[i].adjoint() {
                    return Err(Error::identity("ρ(x*) = ρ(x)*", x));
                }
            }
        }
        if self.source.is_unital() && !self.apply(&Matrix::identity(self.source.n())).is_some_and(|y| y.is_identity()) {
            return Err(Error::identity("ρ(I) = I", Matrix::<F>::identity(self.source.n())));
        }
        Ok(())
    }

    /// `ρ(L) = χ(L)` for every supplied pair.
    pub fn check_on_projections<'a>(
        &self,
        name: &str,
        pairs: impl IntoIterator<Item = (&'a Projection<F>, &'a Projection<F>)>,
    ) -> Result<()>
    where
        F: 'a,
    {
        for (l, img) in pairs {
            if self.apply(l.matrix()).as_ref() != Some(img.matrix()) {
                return Err(Error::identity(name, l.matrix()));
            }
        }
        Ok(())
    }

    /// `ρ` restricted to a subalgebra of its source, with target the image.
    pub fn restrict(&self, sub: &OpAlgebra<F>) -> Result<Self> {
        if !sub.is_subspace_of(&self.source) {
            return Err(Error::Precondition("restriction to a space outside the source".into()));
        }
        let images: Vec<Matrix<F>> = sub.basis().iter().map(|x| self.apply(x).expect("inside the source")).collect();
        let target = OpAlgebra::from_closed(OperatorSpace::new(self.target.n(), self.target.n(), &images)?);
        Ok(StarIso { source: sub.clone(), target, images })
    }
}

/// The unique `S` on `H2` with `S·M_k = M_k·X` for every basis element of
/// `M`, when `X` commutes with `M*M`.
fn intertwined_image<F: ExactField>(coeff: &Matrix<F>, m: &OperatorSpace<F>, x: &Matrix<F>) -> Result<Matrix<F>> {
    let rhs: Vec<F> = m.basis().iter().flat_map(|mk| mk.mul(x).into_vec()).collect();
    match solve_linear(coeff, &rhs)? {
        LinearSolution::Affine { particular, homogeneous } if homogeneous.is_zero() => {
            Matrix::from_vec(m.cod(), m.cod(), particular)
        }
        LinearSolution::Affine { .. } => Err(Error::Internal("intertwined image is not unique; the TRO is not essential".into())),
        LinearSolution::Inconsistent => Err(Error::Internal("no intertwined image; the operator is not in (M*M)′".into())),
    }
}

/// Matrix of `S ↦ (S·M_k)_k` on row-major vectorized `S`.
fn right_action_matrix<F: ExactField>(m: &OperatorSpace<F>) -> Matrix<F> {
    let n2 = m.cod();
    let rows = m.dim() * n2 * m.dom();
    let mut out = Matrix::zeros(rows, n2 * n2);
    for p in 0..n2 {
        for q in 0..n2 {
            let e = Matrix::unit(n2, n2, p, q);
            let col: Vec<F> = m.basis().iter().flat_map(|mk| e.mul(mk).into_vec()).collect();
            for (r, v) in col.into_iter().enumerate() {
                if !v.is_zero() {
                    out[(r, p * n2 + q)] = v;
                }
            }
        }
    }
    out
}

/// The *-isomorphism `θ : (M*M)′ → (MM*)′` with `θ(T)·M = M·T` for all
/// `M`, for an essential TRO. Checks that `θ(L) = Map(M)(L)` for each
/// projection in `extends_on`.
pub fn theta_from_tro<F: ExactField>(m: &Tro<F>, extends_on: &[Projection<F>]) -> Result<StarIso<F>> {
    if !m.essential {
        return Err(Error::Precondition("the TRO is not essential".into()));
    }
    let a_prime = m.left_algebra()?.commutant()?;
    let b_prime = m.right_algebra()?.commutant()?;
    let coeff = right_action_matrix(&m.space);
    let images = a_prime.basis().iter().map(|t| intertwined_image(&coeff, &m.space, t)).collect::<Result<Vec<_>>>()?;
    let iso = StarIso { source: a_prime, target: b_prime, images };
    iso.verify()?;
    let chi = ErdosMap::new(m.space.clone());
    for l in extends_on {
        if !iso.source.contains(l.matrix()) {
            return Err(Error::Precondition("projection outside (M*M)′".into()));
        }
        let img = chi.eval(l)?;
        iso.check_on_projections("θ extends Map(M) on projections of (M*M)′", [(l, &img)])?;
    }
    Ok(iso)
}

/// `{T : T·X = θ(X)·T}` over the basis of `θ`'s source.
fn intertwiners<F: ExactField>(theta: &StarIso<F>) -> OperatorSpace<F> {
    let pairs: Vec<(&Matrix<F>, &Matrix<F>)> = theta.source.basis().iter().zip(&theta.images).collect();
    OperatorSpace::solve(
        theta.source.n(),
        theta.target.n(),
        pairs.into_iter().map(|(x, y)| move |t: &Matrix<F>| t.mul(x).sub(&y.mul(t))),
    )
}

/// The linking algebra `C = [A M*; M B]` of an essential TRO, with
/// `A = span(M*M)`, `B = span(MM*)`, and `D = {X ⊕ θ(X) : X ∈ A′}`.
#[derive(Clone, Debug)]
pub struct LinkingAlgebra<F: ExactField> {
    pub c: OpAlgebra<F>,
    pub d: OpAlgebra<F>,
    pub theta: StarIso<F>,
}

/// Builds the linking algebra and checks `C = D′` and `C′ = D`; each
/// projection `L` in `extends_on` is checked to give `L ⊕ Map(M)(L) ∈ D`.
pub fn linking_algebra<F: ExactField>(m: &Tro<F>, extends_on: &[Projection<F>]) -> Result<LinkingAlgebra<F>> {
    let theta = theta_from_tro(m, extends_on)?;
    let (n1, n2) = (m.dom(), m.cod());
    let n = n1 + n2;
    let a = m.left_algebra()?;
    let b = m.right_algebra()?;
    let mut blocks = Vec::new();
    blocks.extend(a.basis().iter().map(|x| x.embed(n, n, 0, 0)));
    blocks.extend(m.basis().iter().map(|x| x.adjoint().embed(n, n, 0, n1)));
    blocks.extend(m.basis().iter().map(|x| x.embed(n, n, n1, 0)));
    blocks.extend(b.basis().iter().map(|x| x.embed(n, n, n1, n1)));
    let c = OpAlgebra::new(OperatorSpace::square(n, &blocks)?)?;
    let sums: Vec<Matrix<F>> = theta.source.basis().iter().zip(&theta.images).map(|(x, y)| x.direct_sum(y)).collect();
    let d = OpAlgebra::new(OperatorSpace::square(n, &sums)?)?;
    require_contained("C = D′", &d.commutant()?.into_space(), &c)?;
    require_contained("C = D′", &c, &d.commutant()?.into_space())?;
    let cp = c.commutant()?;
    require_contained("C′ = D", &cp, &d)?;
    require_contained("C′ = D", &d, &cp)?;
    let chi = ErdosMap::new(m.space.clone());
    for l in extends_on {
        let s = l.matrix().direct_sum(chi.eval(l)?.matrix());
        if !d.contains(&s) {
            return Err(Error::identity("L ⊕ Map(M)(L) ∈ C′", s));
        }
    }
    Ok(LinkingAlgebra { c, d, theta })
}

/// For unital `A ~M B`: the TRO `N = {T : TX = θ(X)T, X ∈ Δ(A)′} ⊇ M` with
/// `Δ(A) = span(N*N)`, `Δ(B) = span(NN*)` and `A ~N B`.
pub fn enlarge_witness<F: ExactField>(w: &TroWitness<F>, frames: Option<Frames<'_, F>>) -> Result<TroWitness<F>> {
    if !w.a.is_unital() || !w.b.is_unital() {
        return Err(Error::Precondition("enlargement needs unital algebras".into()));
    }
    let mut c = Checks::default();
    let da = w.a.diagonal();
    let db = w.b.diagonal();
    let da_prime = da.commutant()?;
    let theta = theta_from_tro(&w.m, &[])?;
    c.contained("Δ(A)′ ⊆ (M*M)′", &da_prime, theta.source())?;
    let restricted = theta.restrict(&da_prime)?;
    let n = Tro::verify(intertwiners(&restricted))?;
    c.contained("M ⊆ N", &w.m.space, &n.space)?;
    c.equal("Δ(A) = span(N*N)", &da, &n.left_algebra()?.into_space())?;
    c.equal("Δ(B) = span(NN*)", &db, &n.right_algebra()?.into_space())?;
    let mut out = verify_witness(&w.a, &w.b, &n, frames)?;
    out.push_checks(c);
    Ok(out)
}

/// `θ(Lat A) = Lat B` as sets, for `θ` defined on a superset of `Lat A`.
pub fn check_theta_on_lattices<F: ExactField>(theta: &StarIso<F>, lat_a: &Csl<F>, lat_b: &Csl<F>) -> Result<()> {
    const NAME: &str = "θ(Lat A) = Lat B";
    let mut images = HashSet::new();
    for l in lat_a.members() {
        let img = theta.apply(l.matrix()).ok_or_else(|| Error::identity(NAME, l.matrix()))?;
        let p = Projection::new(img).map_err(|e| Error::identity(NAME, e))?;
        if lat_b.position(&p).is_none() {
            return Err(Error::identity(NAME, p.matrix()));
        }
        images.insert(p);
    }
    if images.len() != lat_b.member_count() {
        return Err(Error::identity(NAME, "image misses members of Lat B"));
    }
    Ok(())
}

/// Result of composing `B ~M A` with `B ~N C`.
#[derive(Clone, Debug)]
pub struct Composition<F: ExactField> {
    /// `A ~L C` with `L = span(YZ*)`.
    pub witness: TroWitness<F>,
    /// `Z = {T : H_B → H_A, TX = θ_M(X)T, X ∈ R}`.
    pub z: Tro<F>,
    /// `Y = {T : H_B → H_C, TX = θ_N(X)T, X ∈ R}`.
    pub y: Tro<F>,
}

/// Composes `w1 : B ~M A` and `w2 : B ~N C` (both with `B` first) into
/// `A ~L C`, through `R = (M*M)′ ∩ (N*N)′`.
pub fn compose_witnesses<F: ExactField>(w1: &TroWitness<F>, w2: &TroWitness<F>) -> Result<Composition<F>> {
    if w1.a != w2.a {
        return Err(Error::Precondition("the witnesses do not share their first algebra".into()));
    }
    let mut c = Checks::default();
    let theta_m = theta_from_tro(&w1.m, &[])?;
    let theta_n = theta_from_tro(&w2.m, &[])?;
    let r = OpAlgebra::from_closed(theta_m.source().intersect(theta_n.source())?);
    let z = Tro::verify(intertwiners(&theta_m.restrict(&r)?))?;
    let y = Tro::verify(intertwiners(&theta_n.restrict(&r)?))?;
    if !z.essential || !y.essential {
        return Err(Error::identity("Z and Y are essential", "a non-essential intertwiner space"));
    }
    c.pass("Z and Y are essential TROs");
    c.contained("M ⊆ Z", &w1.m.space, &z.space)?;
    c.contained("N ⊆ Y", &w2.m.space, &y.space)?;
    let r_prime = r.commutant()?;
    let zz = z.left_algebra()?;
    c.equal("span(Z*Z) = span(Y*Y)", &zz, &y.left_algebra()?.into_space())?;
    c.equal("span(Z*Z) = R′", &zz, &r_prime)?;
    verify_witness(&w1.a, &w1.b, &z, None)?;
    c.pass("B ~Z A");
    verify_witness(&w2.a, &w2.b, &y, None)?;
    c.pass("B ~Y C");
    let l = Tro::verify(y.space.product(&z.space.adjoint())?)?;
    let mut witness = verify_witness(&w1.b, &w2.b, &l, None)?;
    witness.push_checks(c);
    Ok(Composition { witness, z, y })
}

/// Objects of the unitalization of a (possibly non-unital) witness.
#[derive(Clone, Debug)]
pub struct UnitalContext<F: ExactField> {
    /// `A_M = span(A, M*M)`.
    pub a_m: OpAlgebra<F>,
    /// `B_M = span(B, MM*)`.
    pub b_m: OpAlgebra<F>,
    /// `A_M ~M B_M`.
    pub unital: TroWitness<F>,
    /// `A ~N B` for the enlarged `N ⊇ M` with `Δ(A_M) = span(N*N)`.
    pub enlarged: TroWitness<F>,
}

pub fn unitalize_context<F: ExactField>(w: &TroWitness<F>) -> Result<UnitalContext<F>> {
    let mut c = Checks::default();
    let a_m = OpAlgebra::new(w.a.join(&w.m.left_algebra()?.into_space())?)?;
    let b_m = OpAlgebra::new(w.b.join(&w.m.right_algebra()?.into_space())?)?;
    if !a_m.is_unital() || !b_m.is_unital() {
        return Err(Error::identity("A_M and B_M are unital algebras", "identity missing"));
    }
    c.pass("A_M and B_M are unital algebras");
    if !w.a.is_ideal_in(&a_m)? || !w.b.is_ideal_in(&b_m)? {
        return Err(Error::identity("A and B are ideals of A_M and B_M", "ideal property fails"));
    }
    c.pass("A and B are ideals of A_M and B_M");
    let unital = verify_witness(&a_m, &b_m, &w.m, None)?;
    c.pass("A_M ~M B_M");
    let big = enlarge_witness(&unital, None)?;
    let n = big.m.clone();
    let mut enlarged = verify_witness(&w.a, &w.b, &n, None)?;
    c.contained("M ⊆ N", &w.m.space, &n.space)?;
    c.equal("Δ(A_M) = span(N*N)", &a_m.diagonal(), &n.left_algebra()?.into_space())?;
    c.equal("Δ(B_M) = span(NN*)", &b_m.diagonal(), &n.right_algebra()?.into_space())?;
    c.pass("A ~N B");
    enlarged.push_checks(c);
    Ok(UnitalContext { a_m, b_m, unital, enlarged })
}

/// `F(J) = span(MJM*)` for an `A`-bimodule `J`; checks that it is a
/// `B`-bimodule, that `span(M*F(J)M) = J`, and that ideals go to ideals.
pub fn transport_bimodule<F: ExactField>(w: &TroWitness<F>, j: &OperatorSpace<F>) -> Result<OperatorSpace<F>> {
    if !j.is_square() || j.dom() != w.a.n() {
        return Err(Error::DimensionMismatch("bimodule and algebra act on different spaces".into()));
    }
    if !j.is_bimodule_over(&w.a, &w.a)? {
        return Err(Error::Precondition("the space is not an A-bimodule".into()));
    }
    let ms = w.m.space.adjoint();
    let fj = triple(&w.m.space, j, &ms)?;
    if !fj.is_bimodule_over(&w.b, &w.b)? {
        return Err(Error::identity("F(J) is a B-bimodule", "B·F(J)·B escapes"));
    }
    require_contained("span(M*F(J)M) = J", &triple(&ms, &fj, &w.m.space)?, j)?;
    require_contained("span(M*F(J)M) = J", j, &triple(&ms, &fj, &w.m.space)?)?;
    if j.is_ideal_in(&w.a)? && !fj.is_ideal_in(&w.b)? {
        return Err(Error::identity("F maps ideals to ideals", "F(J) is not an ideal of B"));
    }
    Ok(fj)
}

/// `Δ(φ) = {T : TL = φ(L)T ∀ L ∈ S1}`.
pub fn delta_of_iso<F: ExactField>(phi: &LatticeIso<F>) -> OperatorSpace<F> {
    let pairs: Vec<(&Projection<F>, &Projection<F>)> =
        phi.pairs().filter(|(l, _)| !l.is_zero() && !l.is_identity()).collect();
    OperatorSpace::solve(
        phi.source().dim(),
        phi.target().dim(),
        pairs.into_iter().map(|(l, pl)| move |t: &Matrix<F>| t.mul(l.matrix()).sub(&pl.matrix().mul(t))),
    )
}

#[derive(Clone, Debug)]
pub enum TroDecision<F: ExactField> {
    /// `Alg S1 ~Δ(φ) Alg S2` for the lattice isomorphism `φ`.
    Equivalent { iso: LatticeIso<F>, witness: TroWitness<F> },
    /// No lattice isomorphism exists. That this rules out every TRO witness
    /// is the content of the characterization theorem for CSL algebras; it
    /// is not recomputed here.
    NotEquivalent(NotIsomorphic),
}

impl<F: ExactField> TroDecision<F> {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, TroDecision::Equivalent { .. })
    }
}

/// Decides TRO equivalence of `Alg S1` and `Alg S2` by lattice isomorphism,
/// and on success verifies the witness `Δ(φ)` with the atoms as frames.
pub fn decide_tro_equivalence_csl<F: ExactField>(s1: &Csl<F>, s2: &Csl<F>, parallel: bool) -> Result<TroDecision<F>> {
    let iso = match find_lattice_iso(s1, s2, parallel) {
        Ok(iso) => iso,
        Err(cert) => return Ok(TroDecision::NotEquivalent(cert)),
    };
    let m = Tro::verify(delta_of_iso(&iso))?;
    let frames = Frames { a: s1.atoms(), b: s2.atoms() };
    let witness = verify_witness(&s1.alg(), &s2.alg(), &m, Some(frames))
        .map_err(|e| Error::Internal(format!("Δ(φ) fails to be a witness: {e}")))?;
    Ok(TroDecision::Equivalent { iso, witness })
}

/// Dimensions of `L″` and of its intersections with the two corners, for
/// `L = {L ⊕ φ(L)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerReport {
    pub bicommutant_dim: usize,
    pub left_corner: usize,
    pub right_corner: usize,
}

/// `L″ ∩ (S1″ ⊕ 0)` and `L″ ∩ (0 ⊕ S2″)`; both are zero for every lattice
/// isomorphism, and a nonzero intersection is an internal error.
pub fn check_corner_conditions<F: ExactField>(phi: &LatticeIso<F>) -> Result<CornerReport> {
    let (n1, n2) = (phi.source().dim(), phi.target().dim());
    let n = n1 + n2;
    let sums: Vec<Matrix<F>> = phi.pairs().map(|(l, pl)| l.matrix().direct_sum(pl.matrix())).collect();
    let lpp = OperatorSpace::square(n, &sums)?.bicommutant()?;
    let s1pp = OperatorSpace::square(n1, &mats(phi.source().members()))?.bicommutant()?;
    let s2pp = OperatorSpace::square(n2, &mats(phi.target().members()))?.bicommutant()?;
    let left = OperatorSpace::square(n, &s1pp.basis().iter().map(|x| x.embed(n, n, 0, 0)).collect::<Vec<_>>())?;
    let right = OperatorSpace::square(n, &s2pp.basis().iter().map(|x| x.embed(n, n, n1, n1)).collect::<Vec<_>>())?;
    let report = CornerReport {
        bicommutant_dim: lpp.dim(),
        left_corner: lpp.intersect(&left)?.dim(),
        right_corner: lpp.intersect(&right)?.dim(),
    };
    if report.left_corner != 0 || report.right_corner != 0 {
        return Err(Error::Internal(format!("corner intersections are nonzero: {report:?}")));
    }
    Ok(report)
}

/// `span(S)` as a unital commutative algebra.
fn lattice_span<F: ExactField>(s: &Csl<F>) -> Result<OpAlgebra<F>> {
    Ok(OpAlgebra::from_closed(OperatorSpace::square(s.dim(), &mats(s.members()))?))
}

/// Eigenvalues of `t ∈ span(S)` read off its atomic decomposition
/// `t = Σ t_i E_i`; `None` if `t` is not of that form.
pub fn spectrum_in_span<F: ExactField>(s: &Csl<F>, t: &Matrix<F>) -> Option<Vec<F>> {
    let mut values: Vec<F> = Vec::new();
    let mut rebuilt = Matrix::zeros(s.dim(), s.dim());
    for e in s.atoms() {
        let r = F::from_i64(e.rank() as i64).inv()?;
        let v = e.matrix().mul(t).trace().mul_ref(&r);
        rebuilt = rebuilt.add(&e.matrix().scale(&v));
        if !values.contains(&v) {
            values.push(v);
        }
    }
    (rebuilt == *t).then_some(values)
}

/// Extends `φ` linearly from the members of `S1` to `span(S1)` and checks
/// well-definedness on all members, multiplicativity on all member pairs,
/// adjoints, and `σ(ρ(T)) ⊆ σ(T)` on `samples` random elements.
pub fn extend_lattice_iso_cstar<F: ExactField, R: Rng + ?Sized>(
    phi: &LatticeIso<F>,
    rng: &mut R,
    samples: usize,
) -> Result<StarIso<F>> {
    let source = lattice_span(phi.source())?;
    let target = lattice_span(phi.target())?;
    let pairs: Vec<(Matrix<F>, Matrix<F>)> = phi.pairs().map(|(l, pl)| (l.matrix().clone(), pl.matrix().clone())).collect();
    let rho = StarIso::from_generators(source, target, &pairs).map_err(|e| match e {
        Error::IdentityFailed { .. } => Error::Internal(format!("lattice isomorphism does not extend linearly: {e}")),
        other => other,
    })?;
    rho.verify()?;
    let members = phi.source().members();
    for (i, l1) in members.iter().enumerate() {
        for (j, l2) in members.iter().enumerate().skip(i) {
            let lhs = rho.apply(&l1.matrix().mul(l2.matrix())).expect("products of members are members");
            if lhs != phi.apply_member(i).matrix().mul(phi.apply_member(j).matrix()) {
                return Err(Error::identity("ρ(L1 L2) = φ(L1) φ(L2)", l1.matrix()));
            }
        }
    }
    let n = phi.source().dim();
    for _ in 0..samples {
        let coeffs: Vec<F> = members.iter().map(|_| random::small_scalar(rng)).collect();
        let t = Matrix::linear_combination((n, n), coeffs.iter().zip(members.iter().map(Projection::matrix)));
        let ts = t.adjoint();
        let (rt, rts) = (rho.apply(&t).expect("in span"), rho.apply(&ts).expect("in span"));
        if rts != rt.adjoint() {
            return Err(Error::identity("ρ(T*) = ρ(T)*", &t));
        }
        let sigma = spectrum_in_span(phi.source(), &t).ok_or_else(|| Error::Internal("joint diagonalization failed".into()))?;
        let sigma_rho =
            spectrum_in_span(phi.target(), &rt).ok_or_else(|| Error::Internal("joint diagonalization failed".into()))?;
        if let Some(bad) = sigma_rho.iter().find(|v| !sigma.contains(v)) {
            return Err(Error::identity("σ(ρ(T)) ⊆ σ(T)", format!("eigenvalue {bad} of ρ({t})")));
        }
    }
    Ok(rho)
}

/// `ρ` defined atom by atom through the atom image formula and extended
/// linearly; checks `ρ(L) = φ(L)` for every member.
pub fn extend_atom_iso<F: ExactField>(phi: &LatticeIso<F>) -> Result<StarIso<F>> {
    let source = lattice_span(phi.source())?;
    let target = lattice_span(phi.target())?;
    let pairs: Vec<(Matrix<F>, Matrix<F>)> = (0..phi.source().atom_count())
        .map(|i| Ok((phi.source().atoms()[i].matrix().clone(), phi.atom_image_formula(i)?.into_matrix())))
        .collect::<Result<_>>()?;
    let rho = StarIso::from_generators(source, target, &pairs)?;
    rho.verify()?;
    rho.check_on_projections("ρ(L) = φ(L)", phi.pairs())?;
    Ok(rho)
}

/// A verified spatial Morita context `(A, B, U, V)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoritaContext<F: ExactField> {
    a: OpAlgebra<F>,
    b: OpAlgebra<F>,
    u: OperatorSpace<F>,
    v: OperatorSpace<F>,
    checks: Vec<Check>,
}

impl<F: ExactField> MoritaContext<F> {
    /// Checks `BUA ⊆ U`, `AVB ⊆ V`, `span(VU) = A` and `span(UV) = B`.
    pub fn verify(a: OpAlgebra<F>, b: OpAlgebra<F>, u: OperatorSpace<F>, v: OperatorSpace<F>) -> Result<Self> {
        if (u.dom(), u.cod()) != (a.n(), b.n()) || (v.dom(), v.cod()) != (b.n(), a.n()) {
            return Err(Error::DimensionMismatch("U must map H1 to H2 and V must map H2 to H1".into()));
        }
        let mut c = Checks::default();
        c.contained("BUA ⊆ U", &triple(&b, &u, &a)?, &u)?;
        c.contained("AVB ⊆ V", &triple(&a, &v, &b)?, &v)?;
        c.equal("A = span(VU)", &a, &v.product(&u)?)?;
        c.equal("B = span(UV)", &b, &u.product(&v)?)?;
        Ok(MoritaContext { a, b, u, v, checks: c.0 })
    }

    pub fn a(&self) -> &OpAlgebra<F> {
        &self.a
    }

    pub fn b(&self) -> &OpAlgebra<F> {
        &self.b
    }

    pub fn u(&self) -> &OperatorSpace<F> {
        &self.u
    }

    pub fn v(&self) -> &OperatorSpace<F> {
        &self.v
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }
}

/// `U = {T : φ(L)^⊥ T L = 0}`, `V = {S : L^⊥ S φ(L) = 0}` between
/// `Alg S1` and `Alg S2`.
pub fn morita_from_lattice_iso<F: ExactField>(phi: &LatticeIso<F>) -> Result<MoritaContext<F>> {
    let (n1, n2) = (phi.source().dim(), phi.target().dim());
    let pairs: Vec<(Matrix<F>, Matrix<F>, Matrix<F>, Matrix<F>)> = phi
        .pairs()
        .filter(|(l, _)| !l.is_zero() && !l.is_identity())
        .map(|(l, pl)| {
            (l.matrix().clone(), l.complement().into_matrix(), pl.matrix().clone(), pl.complement().into_matrix())
        })
        .collect();
    let u = OperatorSpace::solve(n1, n2, pairs.iter().map(|(l, _, _, plp)| move |t: &Matrix<F>| plp.mul(t).mul(l)));
    let v = OperatorSpace::solve(n2, n1, pairs.iter().map(|(_, lp, pl, _)| move |s: &Matrix<F>| lp.mul(s).mul(pl)));
    let a = phi.source().alg();
    let b = phi.target().alg();
    let vu = v.product(&u)?;
    let mut ctx = MoritaContext::verify(a, b, u, v)?;
    if !vu.is_ideal_in(&ctx.a)? {
        return Err(Error::identity("span(VU) is an ideal of A", "ideal property fails"));
    }
    ctx.checks.push(Check { name: "span(VU) is an ideal of A".into(), status: CheckStatus::Verified });
    Ok(ctx)
}

/// `U = span(BM)`, `V = span(M*B_M)` with `B_M = span(B, MM*)`.
pub fn morita_from_witness<F: ExactField>(w: &TroWitness<F>) -> Result<MoritaContext<F>> {
    let b_m = OpAlgebra::new(w.b.join(&w.m.right_algebra()?.into_space())?)?;
    let u = w.b.product(&w.m.space)?;
    let v = w.m.space.adjoint().product(&b_m)?;
    MoritaContext::verify(w.a.clone(), w.b.clone(), u, v)
}

/// Counts of what [`verify_morita_lattices`] checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoritaLatticeReport {
    pub lattice_members: usize,
    pub sampled_projections: usize,
}

/// For a context between unital algebras: with `φ = Map(U)`, `ψ = Map(V)`,
/// `φ` maps `Lat A` onto `Lat B`, `ψ` inverts it, `Q ↦ Map(U*)(Q)^⊥` maps
/// the complements of `Lat B` onto `Lat A`, and for `samples` random
/// projections `φ(P)` is `B`-invariant and `ψ(Q)` is `A`-invariant.
pub fn verify_morita_lattices<F: ExactField, R: Rng + ?Sized>(
    ctx: &MoritaContext<F>,
    frames: Frames<'_, F>,
    rng: &mut R,
    samples: usize,
) -> Result<MoritaLatticeReport> {
    if !ctx.a.is_unital() || !ctx.b.is_unital() {
        return Err(Error::Precondition("lattice identities need unital algebras".into()));
    }
    let lat_a = lat_of_algebra(&ctx.a, frames.a)?;
    let lat_b = lat_of_algebra(&ctx.b, frames.b)?;
    let phi = ErdosMap::new(ctx.u.clone());
    let psi = ErdosMap::new(ctx.v.clone());
    let mut hit = HashSet::new();
    for l in lat_a.members() {
        let pl = phi.eval(l)?;
        if lat_b.position(&pl).is_none() {
            return Err(Error::identity("Map(U)(Lat A) ⊆ Lat B", l.matrix()));
        }
        if psi.eval(&pl)? != *l {
            return Err(Error::identity("Map(V)∘Map(U) = id on Lat A", l.matrix()));
        }
        hit.insert(pl);
    }
    if hit.len() != lat_b.member_count() {
        return Err(Error::identity("Map(U) maps Lat A onto Lat B", "a member of Lat B is not reached"));
    }
    for q in lat_b.members() {
        if phi.eval(&psi.eval(q)?)? != *q {
            return Err(Error::identity("Map(U)∘Map(V) = id on Lat B", q.matrix()));
        }
    }
    // S_{1,φ} = {Map(U*)(Q)^⊥}; over Q = R^⊥ with R ∈ Lat B it must sweep out Lat A
    let phi_star = ErdosMap::adjoint_of(ctx.u.clone());
    let mut s1 = HashSet::new();
    for r in lat_b.members() {
        let l = phi_star.eval(&r.complement())?.complement();
        if lat_a.position(&l).is_none() {
            return Err(Error::identity("S1 of Map(U) = Lat A", r.matrix()));
        }
        s1.insert(l);
    }
    if s1.len() != lat_a.member_count() {
        return Err(Error::identity("S1 of Map(U) = Lat A", "a member of Lat A is not reached"));
    }
    for _ in 0..samples {
        let p = random::any_projection(rng, ctx.a.n());
        require_invariant("Map(U)(P) ∈ Lat B", &ctx.b, &phi.eval(&p)?)?;
        let q = random::any_projection(rng, ctx.b.n());
        require_invariant("Map(V)(Q) ∈ Lat A", &ctx.a, &psi.eval(&q)?)?;
        require_invariant("Map(U*)(Q)^⊥ ∈ Lat A", &ctx.a, &phi_star.eval(&q)?.complement())?;
    }
    Ok(MoritaLatticeReport { lattice_members: lat_a.member_count(), sampled_projections: 3 * samples })
}

fn require_invariant<F: ExactField>(name: &str, a: &OpAlgebra<F>, p: &Projection<F>) -> Result<()> {
    let perp = p.complement();
    for x in a.basis() {
        if !perp.matrix().mul(x).mul(p.matrix()).is_zero() {
            return Err(Error::identity(name, p.matrix()));
        }
    }
    Ok(())
}

/// `B = [[A, A], [A, A]]` on `H ⊕ H` and the column TRO
/// `M = {[X; Y] : X, Y ∈ Δ(A)}` from `H` to `H ⊕ H`.
pub fn amplification<F: ExactField>(a: &OpAlgebra<F>) -> Result<(OpAlgebra<F>, Tro<F>)> {
    let n = a.n();
    let mut bm = Vec::new();
    for x in a.basis() {
        for (r, c) in [(0, 0), (0, n), (n, 0), (n, n)] {
            bm.push(x.embed(2 * n, 2 * n, r, c));
        }
    }
    let b = OpAlgebra::new(OperatorSpace::square(2 * n, &bm)?)?;
    let mut mm = Vec::new();
    for x in a.diagonal().basis() {
        mm.push(x.embed(2 * n, n, 0, 0));
        mm.push(x.embed(2 * n, n, n, 0));
    }
    Ok((b, Tro::verify(OperatorSpace::new(n, 2 * n, &mm)?)?))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::scalar::GaussianRational as Q;

    type Space = OperatorSpace<Q>;
    type Alg = OpAlgebra<Q>;

    fn e(n: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(n, n, i, j)
    }

    fn rect(rows: usize, cols: usize, i: usize, j: usize) -> Matrix<Q> {
        Matrix::unit(rows, cols, i, j)
    }

    fn tro(n: usize, mats: &[Matrix<Q>]) -> Tro<Q> {
        Tro::verify(Space::square(n, mats).unwrap()).unwrap()
    }

    /// `B = [[A, A], [A, A]]`, `M = {[X; Y] : X, Y ∈ Δ(A)}`.
    fn amplification_pair(a: &Alg) -> (Alg, Tro<Q>) {
        amplification(a).unwrap()
    }

    #[test]
    fn tro_axiom_examples() {
        let t2 = Alg::upper_triangular(2);
        assert!(Tro::verify(t2.diagonal().into_space()).is_ok());
        let d = tro(2, &[e(2, 0, 0), e(2, 1, 1)]);
        assert!(d.is_essential());
        // rank-one spans are always TROs: (xy*)(yx*)(xy*) = |x|²|y|² xy*
        assert!(Tro::verify(Space::square(2, &[e(2, 0, 0).add(&e(2, 0, 1))]).unwrap()).is_ok());
        let bad = Matrix::identity(2).add(&e(2, 0, 1));
        assert_eq!(Tro::verify(Space::square(2, &[bad]).unwrap()), Err(Error::NotATro(0, 0, 0)));
    }

    #[test]
    fn essentialize_examples() {
        let d = tro(2, &[e(2, 0, 0), e(2, 1, 1)]);
        assert_eq!(essentialize(&d).unwrap(), d);
        let n = tro(2, &[e(2, 0, 0)]);
        assert_eq!(essentialize(&n).unwrap().space(), d.space());
        let z = Tro::verify(Space::zero(1, 1)).unwrap();
        assert!(!z.is_essential());
        assert!(essentialize(&z).unwrap().is_full());
    }

    #[test]
    fn identity_and_amplification_witnesses() {
        let t2 = Alg::upper_triangular(2);
        let ci = Tro::verify(Space::scalars(2)).unwrap();
        let w = verify_witness(&t2, &t2, &ci, None).unwrap();
        assert!(w.checks().iter().all(|c| c.name != "A = span(M*BM)" || c.status == CheckStatus::Verified));
        let (b, m) = amplification_pair(&t2);
        assert_eq!(m.dim(), 4);
        let w = verify_witness(&t2, &b, &m, None).unwrap();
        assert!(w.reversed().is_ok());
        // the same column with equal entries fails B = span(MAM*)
        let diag_col: Vec<Matrix<Q>> =
            t2.diagonal().basis().iter().map(|x| Matrix::vstack(&[x.clone(), x.clone()]).unwrap()).collect();
        let thin = Tro::verify(Space::new(2, 4, &diag_col).unwrap()).unwrap();
        assert!(!thin.is_essential());
        assert!(matches!(verify_witness(&t2, &b, &thin, None), Err(Error::Precondition(_))));
        let split = Alg::new(t2.direct_sum(&t2)).unwrap();
        assert!(matches!(verify_witness(&t2, &split, &m, None), Err(Error::IdentityFailed { .. })));
    }

    #[test]
    fn theta_examples() {
        let ci = Tro::verify(Space::scalars(3)).unwrap();
        let theta = theta_from_tro(&ci, &[]).unwrap();
        assert!(theta.source().is_full());
        assert!(theta.source().basis().iter().zip(theta.images()).all(|(x, y)| x == y));
        let d = tro(2, &[e(2, 0, 0), e(2, 1, 1)]);
        let p = Projection::new(Matrix::diag_i64(&[1, 0])).unwrap();
        let theta = theta_from_tro(&d, &[p.clone()]).unwrap();
        assert_eq!(theta.apply(p.matrix()).unwrap(), *p.matrix());
        // the single column [I; I] is a TRO but not essential: MM* ≠ I
        let col = Matrix::vstack(&[Matrix::identity(2), Matrix::identity(2)]).unwrap();
        let m = Tro::verify(Space::new(2, 4, &[col]).unwrap()).unwrap();
        assert!(!m.is_essential());
        assert!(matches!(theta_from_tro(&m, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn theta_for_a_doubled_identity() {
        // M = {[X; Y]} with X, Y scalar: M*M = C·I, MM* = M2 ⊗ I.
        let m = Tro::verify(Space::new(2, 4, &[rect(4, 2, 0, 0).add(&rect(4, 2, 1, 1)), rect(4, 2, 2, 0).add(&rect(4, 2, 3, 1))]).unwrap())
            .unwrap();
        assert!(m.is_essential());
        let theta = theta_from_tro(&m, &[]).unwrap();
        assert!(theta.source().is_full());
        let t = Matrix::from_i64(&[&[1, 2], &[3, 4]]);
        assert_eq!(theta.apply(&t).unwrap(), t.direct_sum(&t));
        let link = linking_algebra(&m, &[Projection::new(Matrix::diag_i64(&[1, 0])).unwrap()]).unwrap();
        assert_eq!(link.d.dim(), 4);
    }

    #[test]
    fn linking_algebra_of_scalars() {
        let ci = Tro::verify(Space::scalars(2)).unwrap();
        let link = linking_algebra(&ci, &[]).unwrap();
        assert_eq!(link.c.dim(), 4);
        assert_eq!(link.d.dim(), 4);
    }

    fn three_chain_pair() -> (Csl<Q>, Csl<Q>) {
        (Csl::chain(&[1, 1]), Csl::chain(&[2, 1]))
    }

    #[test]
    fn decider_on_chains() {
        let (s1, s2) = three_chain_pair();
        match decide_tro_equivalence_csl(&s1, &s2, false).unwrap() {
            TroDecision::Equivalent { witness, .. } => {
                assert_eq!(witness.m().dim(), 3);
                assert!(witness.checks().iter().all(|c| c.status == CheckStatus::Verified));
            }
            TroDecision::NotEquivalent(_) => panic!("isomorphic chains"),
        }
        let c4: Csl<Q> = Csl::chain(&[1, 1, 1]);
        let boolean = Csl::from_blocks(&[1, 1, 1], &[vec![], vec![0], vec![1, 2], vec![0, 1, 2]]).unwrap();
        assert!(!decide_tro_equivalence_csl(&c4, &boolean, true).unwrap().is_equivalent());
        assert!(decide_tro_equivalence_csl(&s1, &s1, true).unwrap().is_equivalent());
    }

    fn chain_witness() -> TroWitness<Q> {
        let (s1, s2) = three_chain_pair();
        match decide_tro_equivalence_csl(&s1, &s2, false).unwrap() {
            TroDecision::Equivalent { witness, .. } => witness,
            TroDecision::NotEquivalent(_) => unreachable!(),
        }
    }

    #[test]
    fn enlarge_and_theta_map_lattices() {
        let (s1, s2) = three_chain_pair();
        let w = chain_witness();
        let frames = Frames { a: s1.atoms(), b: s2.atoms() };
        let big = enlarge_witness(&w, Some(frames)).unwrap();
        let theta = theta_from_tro(big.m(), s1.members()).unwrap();
        assert_eq!(*theta.source(), big.a().diagonal().commutant().unwrap());
        check_theta_on_lattices(&theta, &s1, &s2).unwrap();
        let t2 = Alg::upper_triangular(2);
        let (b, m) = amplification_pair(&t2);
        let w = verify_witness(&t2, &b, &m, None).unwrap();
        let big = enlarge_witness(&w, None).unwrap();
        assert!(m.is_subspace_of(big.m()));
    }

    #[test]
    fn compose_examples() {
        let w = chain_witness();
        let back = w.reversed().unwrap();
        let comp = compose_witnesses(&w, &w).unwrap();
        assert_eq!(comp.witness.a(), w.b());
        let comp = compose_witnesses(&back, &back).unwrap();
        assert_eq!(comp.witness.a(), w.a());
        let id = verify_witness(w.a(), w.a(), &Tro::verify(Space::scalars(2)).unwrap(), None).unwrap();
        let comp = compose_witnesses(&id, &w).unwrap();
        assert_eq!(comp.witness.b(), w.b());
        assert!(w.m().is_subspace_of(comp.witness.m()));
    }

    #[test]
    fn unitalize_strictly_upper() {
        let a = Alg::new(Space::square(2, &[e(2, 0, 1)]).unwrap()).unwrap();
        let m = tro(2, &[e(2, 0, 0), e(2, 1, 1)]);
        let w = verify_witness(&a, &a, &m, None).unwrap();
        let ctx = unitalize_context(&w).unwrap();
        assert_eq!(ctx.a_m, Alg::upper_triangular(2));
        let zero = Alg::zero(2);
        let w = verify_witness(&zero, &zero, &m, None).unwrap();
        let ctx = unitalize_context(&w).unwrap();
        assert_eq!(ctx.a_m.space(), m.left_algebra().unwrap().space());
    }

    #[test]
    fn transport_examples() {
        let w = chain_witness();
        assert_eq!(transport_bimodule(&w, w.a()).unwrap(), *w.b().space());
        assert!(transport_bimodule(&w, &Space::zero(2, 2)).unwrap().is_zero());
        let strict = Space::square(2, &[e(2, 0, 1)]).unwrap();
        let f = transport_bimodule(&w, &strict).unwrap();
        assert_eq!(f.dim(), 2);
        assert!(f.is_ideal_in(w.b()).unwrap());
        let not_bimodule = Space::square(2, &[e(2, 1, 0)]).unwrap();
        assert!(matches!(transport_bimodule(&w, &not_bimodule), Err(Error::Precondition(_))));
    }

    #[test]
    fn lattice_extensions_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (s1, s2) = three_chain_pair();
        let phi = find_lattice_iso(&s1, &s2, false).unwrap();
        let rho = extend_lattice_iso_cstar(&phi, &mut rng, 5).unwrap();
        let p = Matrix::diag_i64(&[1, 0]);
        assert_eq!(rho.apply(&p).unwrap(), Matrix::diag_i64(&[1, 1, 0]));
        assert_eq!(extend_atom_iso(&phi).unwrap(), rho);
        let r = check_corner_conditions(&phi).unwrap();
        assert_eq!((r.left_corner, r.right_corner), (0, 0));
        let b: Csl<Q> = Csl::boolean(&[1, 1]);
        let swap = LatticeIso::new(b.clone(), b.clone(), vec![1, 0]).unwrap();
        let rho = extend_lattice_iso_cstar(&swap, &mut rng, 5).unwrap();
        assert_eq!(rho.apply(&Matrix::diag_i64(&[3, 5])).unwrap(), Matrix::diag_i64(&[5, 3]));
        assert_eq!(extend_atom_iso(&swap).unwrap(), rho);
    }

    #[test]
    fn morita_contexts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (s1, s2) = three_chain_pair();
        let phi = find_lattice_iso(&s1, &s2, false).unwrap();
        let ctx = morita_from_lattice_iso(&phi).unwrap();
        assert_eq!(ctx.u().dim(), 5);
        verify_morita_lattices(&ctx, Frames { a: s1.atoms(), b: s2.atoms() }, &mut rng, 10).unwrap();
        let id = morita_from_lattice_iso(&LatticeIso::identity(&s1)).unwrap();
        assert_eq!(id.u(), s1.alg().space());
        assert_eq!(id.v(), s1.alg().space());
        let w = chain_witness();
        morita_from_witness(&w).unwrap();
        let bad = MoritaContext::verify(s1.alg(), s2.alg(), Space::full(2, 3), Space::full(3, 2));
        assert!(matches!(bad, Err(Error::IdentityFailed { .. })));
    }
}
