//! Property tests over seeded random instances.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trolab::corpus::{isomorphic_partner, perturbed_negative, random_csl, CorpusConfig};
use trolab::erdos::{essentiality, ref_membership, semilattices_over, ErdosMap};
use trolab::lattice::{brute_force_atom_map, find_lattice_iso, lat_of_algebra, Csl, Projection};
use trolab::linalg::{canonicalize, column_space, kernel, ortho_project, rank, row_space};
use trolab::opspace::{OpAlgebra, OperatorSpace};
use trolab::poly::{bareiss_rank, Poly};
use trolab::random;
use trolab::tro::{
    check_corner_conditions, compose_witnesses, decide_tro_equivalence_csl, delta_of_iso, enlarge_witness,
    extend_atom_iso, extend_lattice_iso_cstar, morita_from_witness, theta_from_tro, transport_bimodule,
    verify_witness, Frames, MoritaContext, TroDecision, TroWitness,
};
use trolab::{ExactField, GaussianRational as Q, Matrix};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cfg() -> CorpusConfig {
    CorpusConfig::default()
}

fn witness(s: &Csl<Q>, t: &Csl<Q>) -> TroWitness<Q> {
    match decide_tro_equivalence_csl(s, t, false).unwrap() {
        TroDecision::Equivalent { witness, .. } => witness,
        TroDecision::NotEquivalent(c) => panic!("isomorphic partners judged inequivalent: {c:?}"),
    }
}

/// Matrix whose rows are `v_i` with a random mix of zero rows, for rank tests.
fn random_matrix(r: &mut ChaCha8Rng) -> Matrix<Q> {
    let rows = r.gen_range(1..5);
    let cols = r.gen_range(1..5);
    let k = r.gen_range(1..=rows.min(cols));
    random::matrix::<Q, _>(r, rows, k).mul(&random::matrix(r, k, cols))
}

/// Rank through fraction-free elimination of constant polynomials, a code
/// path independent of the row-echelon builder.
fn bareiss_oracle(m: &Matrix<Q>) -> usize {
    let rows = (0..m.rows()).map(|i| m.row(i).iter().map(|x| Poly::constant(0, x.clone())).collect()).collect();
    bareiss_rank(0, rows).rank
}

/// `dim Alg S` from the block pattern: block `(i, j)` is free exactly when
/// every member containing atom `j` also contains atom `i`.
fn alg_dim_oracle(s: &Csl<Q>) -> usize {
    let ranks = s.atom_ranks();
    let k = s.atom_count();
    let mut dim = 0;
    for i in 0..k {
        for j in 0..k {
            if s.member_sets().iter().all(|&m| m >> j & 1 == 0 || m >> i & 1 == 1) {
                dim += ranks[i] * ranks[j];
            }
        }
    }
    dim
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn canonical_spans_ignore_order_and_repeat(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..5);
        let mut vs: Vec<Vec<Q>> = (0..r.gen_range(0..5)).map(|_| random::vector(&mut r, n)).collect();
        let s = canonicalize(n, &vs).unwrap();
        vs.reverse();
        prop_assert_eq!(&canonicalize(n, &vs).unwrap(), &s);
        prop_assert_eq!(&canonicalize(n, s.basis()).unwrap(), &s);
    }

    #[test]
    fn rank_and_kernel_of_adjoint(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r);
        prop_assert_eq!(rank(&m), rank(&m.adjoint()));
        prop_assert_eq!(rank(&m), bareiss_oracle(&m));
        prop_assert_eq!(kernel(&m.adjoint()), column_space(&m).orthogonal_complement());
        prop_assert_eq!(row_space(&m).dim() + kernel(&m).dim(), m.cols());
    }

    #[test]
    fn orthogonal_projection_onto_a_span(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_matrix(&mut r);
        let s = column_space(&m);
        let p = ortho_project(&s);
        prop_assert!(p.is_hermitian());
        prop_assert_eq!(p.mul(&p), p.clone());
        prop_assert_eq!(column_space(&p), s.clone());
        for v in s.basis() {
            prop_assert_eq!(&p.mul_vec(v), v);
        }
    }

    #[test]
    fn commutant_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..4);
        let gens: Vec<Matrix<Q>> = (0..r.gen_range(1..3))
            .map(|_| {
                // sparse generators keep the generated algebras small
                let mut x = Matrix::zeros(n, n);
                for _ in 0..2 {
                    let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
                    x[(i, j)] = random::small_scalar(&mut r);
                }
                x
            })
            .collect();
        let x = OperatorSpace::square(n, &gens).unwrap();
        let c1 = x.commutant().unwrap();
        prop_assert_eq!(c1.commutant().unwrap().commutant().unwrap(), c1);
        let with_adj = x.join(&x.adjoint()).unwrap().join(&OperatorSpace::scalars(n)).unwrap();
        prop_assert_eq!(x.bicommutant().unwrap(), with_adj.generated_algebra(true).unwrap());
    }

    #[test]
    fn products_associate_and_diagonals_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..4);
        let sp = |r: &mut ChaCha8Rng| {
            let k = r.gen_range(1..3);
            OperatorSpace::square(n, &(0..k).map(|_| random::matrix(r, n, n)).collect::<Vec<Matrix<Q>>>()).unwrap()
        };
        let (x, y, z) = (sp(&mut r), sp(&mut r), sp(&mut r));
        prop_assert_eq!(x.product(&y).unwrap().product(&z).unwrap(), x.product(&y.product(&z).unwrap()).unwrap());
        let s = random_csl::<Q, _>(&mut r, &CorpusConfig { dims: 1..=4, ..cfg() });
        let a = s.alg();
        let a_star = OpAlgebra::new(a.adjoint()).unwrap();
        prop_assert_eq!(a.diagonal(), a_star.diagonal());
    }

    #[test]
    fn lattice_galois_connection(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        s.validate().unwrap();
        let a = s.alg();
        prop_assert_eq!(a.dim(), alg_dim_oracle(&s));
        for l in s.members() {
            let perp = l.complement();
            for x in a.basis() {
                prop_assert!(perp.matrix().mul(x).mul(l.matrix()).is_zero());
            }
        }
        let lat = lat_of_algebra(&a, s.atoms()).unwrap();
        prop_assert_eq!(&lat, &s);
        prop_assert_eq!(lat.alg(), a);
        let members = OperatorSpace::square(s.dim(), &s.members().iter().map(|p| p.matrix().clone()).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(members.bicommutant().unwrap().into_space(), members);
    }

    #[test]
    fn atoms_partition_and_members_are_sums(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        let n = s.dim();
        let total = s.atoms().iter().fold(Matrix::zeros(n, n), |acc, e| acc.add(e.matrix()));
        prop_assert!(total.is_identity());
        for (i, e) in s.atoms().iter().enumerate() {
            for f in &s.atoms()[i + 1..] {
                prop_assert!(e.is_orthogonal_to(f));
            }
        }
        for m in s.members() {
            let sum = s.atoms().iter().filter(|e| e.is_below(m)).fold(Matrix::zeros(n, n), |acc, e| acc.add(e.matrix()));
            prop_assert_eq!(&sum, m.matrix());
        }
        for p in s.members() {
            for q in s.members() {
                let pq = p.matrix().mul(q.matrix());
                prop_assert_eq!(p.meet(q).unwrap().into_matrix(), pq.clone());
                prop_assert_eq!(p.join(q).unwrap().into_matrix(), p.matrix().add(q.matrix()).sub(&pq));
            }
        }
    }

    #[test]
    fn iso_search_matches_brute_force(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        let t = if r.gen::<bool>() { isomorphic_partner(&mut r, &s, &cfg()) } else { perturbed_negative(&mut r, &s).1 };
        let oracle = brute_force_atom_map(&s, &t);
        let found = find_lattice_iso(&s, &t, false);
        prop_assert_eq!(found.as_ref().ok().map(|i| i.atom_map().to_vec()), oracle.clone());
        let par = find_lattice_iso(&s, &t, true);
        prop_assert_eq!(par.ok().map(|i| i.atom_map().to_vec()), oracle.clone());
        let decided = decide_tro_equivalence_csl(&s, &t, false).unwrap();
        prop_assert_eq!(decided.is_equivalent(), oracle.is_some());
    }

    #[test]
    fn essentiality_characterizations_agree(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (dom, cod) = (r.gen_range(1..4), r.gen_range(1..4));
        let k = r.gen_range(0..3);
        let mats: Vec<Matrix<Q>> = (0..k)
            .map(|_| {
                let rk = r.gen_range(1..=dom.min(cod));
                random::matrix::<Q, _>(&mut r, cod, rk).mul(&random::matrix(&mut r, rk, dom))
            })
            .collect();
        let u = OperatorSpace::new(dom, cod, &mats).unwrap();
        let e = essentiality(&u).unwrap();
        prop_assert_eq!(e.by_map, e.by_algebras);
    }

    #[test]
    fn constraint_spaces_are_reflexive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = CorpusConfig { dims: 2..=4, max_atoms: 4, ..cfg() };
        let s: Csl<Q> = random_csl(&mut r, &c);
        let t = isomorphic_partner(&mut r, &s, &c);
        let phi = find_lattice_iso(&s, &t, false).unwrap();
        let w = delta_of_iso(&phi);
        for _ in 0..2 {
            let coeffs: Vec<Q> = w.basis().iter().map(|_| random::small_scalar(&mut r)).collect();
            let x = Matrix::linear_combination((w.cod(), w.dom()), coeffs.iter().zip(w.basis()));
            prop_assert!(ref_membership(&w, &x, 2, &mut r).unwrap().is_yes());
        }
        // S1 of φ is the complement family of S2 of φ*
        let pair = semilattices_over(&w, &s, &t).unwrap();
        let adj = semilattices_over(&w.adjoint(), &t, &s).unwrap();
        let mut comp: Vec<Projection<Q>> = adj.s2.iter().map(Projection::complement).collect();
        comp.sort_by(|a, b| (a.rank(), a.matrix()).cmp(&(b.rank(), b.matrix())));
        prop_assert_eq!(pair.s1, comp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn equivalence_relation_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = CorpusConfig { dims: 2..=5, ..cfg() };
        let b = random_csl::<Q, _>(&mut r, &c);
        let a = isomorphic_partner(&mut r, &b, &c);
        let cc = isomorphic_partner(&mut r, &b, &c);
        let w1 = witness(&b, &a);
        let w2 = witness(&b, &cc);
        let back = w1.reversed().unwrap();
        prop_assert_eq!(back.a(), w1.b());
        prop_assert_eq!(back.m().space(), &w1.m().adjoint().into_space());
        let comp = compose_witnesses(&w1, &w2).unwrap();
        prop_assert_eq!(comp.witness.a(), &a.alg());
        prop_assert_eq!(comp.witness.b(), &cc.alg());
        let refl = compose_witnesses(&w1, &w1).unwrap();
        prop_assert_eq!(refl.witness.a(), refl.witness.b());
    }

    #[test]
    fn theta_of_enlarged_witness_maps_lattices(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        let t = isomorphic_partner(&mut r, &s, &cfg());
        let w = witness(&s, &t);
        let big = enlarge_witness(&w, Some(Frames { a: s.atoms(), b: t.atoms() })).unwrap();
        let theta = theta_from_tro(big.m(), s.members()).unwrap();
        theta.verify().unwrap();
        let chi = ErdosMap::new(big.m().space().clone());
        for l in s.members() {
            let img = theta.apply(l.matrix()).unwrap();
            prop_assert_eq!(&img, &chi.eval(l).unwrap().into_matrix());
            prop_assert!(t.position(&Projection::new(img).unwrap()).is_some());
        }
    }

    #[test]
    fn extensions_agree_and_corners_vanish(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        let t = isomorphic_partner(&mut r, &s, &cfg());
        let phi = find_lattice_iso(&s, &t, false).unwrap();
        let rho = extend_lattice_iso_cstar(&phi, &mut r, 3).unwrap();
        prop_assert_eq!(&rho, &extend_atom_iso(&phi).unwrap());
        let corners = check_corner_conditions(&phi).unwrap();
        prop_assert_eq!((corners.left_corner, corners.right_corner), (0, 0));
    }

    #[test]
    fn spectra_are_eigenvalues(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s: Csl<Q> = random_csl(&mut r, &cfg());
        let n = s.dim();
        let coeffs: Vec<Q> = s.members().iter().map(|_| random::small_scalar(&mut r)).collect();
        let x = Matrix::linear_combination((n, n), coeffs.iter().zip(s.members().iter().map(Projection::matrix)));
        let spec = trolab::tro::spectrum_in_span(&s, &x).unwrap();
        let mut multiplicity = 0;
        for v in &spec {
            let shifted = x.sub(&Matrix::identity(n).scale(v));
            let k = n - bareiss_oracle(&shifted);
            prop_assert!(k > 0, "{} is not an eigenvalue", v);
            multiplicity += k;
        }
        prop_assert_eq!(multiplicity, n);
    }

    #[test]
    fn morita_contexts_from_witnesses_verify(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = CorpusConfig { dims: 2..=5, ..cfg() };
        let s: Csl<Q> = random_csl(&mut r, &c);
        let t = isomorphic_partner(&mut r, &s, &c);
        let ctx = morita_from_witness(&witness(&s, &t)).unwrap();
        let again = MoritaContext::verify(ctx.a().clone(), ctx.b().clone(), ctx.u().clone(), ctx.v().clone());
        prop_assert!(again.is_ok());
        let (_, neg) = perturbed_negative(&mut r, &s);
        let full = OperatorSpace::<Q>::full(s.dim(), neg.dim());
        prop_assert!(MoritaContext::verify(s.alg(), neg.alg(), full.clone(), full.adjoint()).is_err());
    }

    #[test]
    fn transported_lattice_algebras_are_reflexive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let c = CorpusConfig { dims: 2..=5, ..cfg() };
        let s: Csl<Q> = random_csl(&mut r, &c);
        let t = isomorphic_partner(&mut r, &s, &c);
        let w = witness(&s, &t);
        let image = transport_bimodule(&w, w.a()).unwrap();
        prop_assert_eq!(&image, w.b().space());
        let b = OpAlgebra::new(image).unwrap();
        prop_assert_eq!(lat_of_algebra(&b, t.atoms()).unwrap().alg(), b);
    }
}

#[test]
fn witness_checks_reject_a_wrong_algebra() {
    let s: Csl<Q> = Csl::chain(&[1, 1]);
    let t: Csl<Q> = Csl::chain(&[2, 1]);
    let w = witness(&s, &t);
    let err = verify_witness(&OpAlgebra::full(2), &t.alg(), w.m(), None).unwrap_err();
    assert!(matches!(err, trolab::Error::IdentityFailed { .. }), "{err}");
    assert!(Q::IS_COMPLEX);
}
