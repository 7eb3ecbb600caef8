//! The acceptance suite. Every criterion draws its instances from its own
//! ChaCha stream of the master seed, so reports are byte-identical across
//! runs and independent of `parallel`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use trolab::corpus::{isomorphic_partner, perturbed_negative, random_csl, CorpusConfig};
use trolab::lattice::{brute_force_atom_map, find_lattice_iso, lat_of_algebra, Csl, LatticeIso, Projection};
use trolab::opspace::{OpAlgebra, OperatorSpace};
use trolab::tro::{
    amplification, check_corner_conditions, check_theta_on_lattices, compose_witnesses, decide_tro_equivalence_csl,
    enlarge_witness, extend_atom_iso, extend_lattice_iso_cstar, linking_algebra, morita_from_lattice_iso,
    morita_from_witness, theta_from_tro, verify_morita_lattices, verify_witness, CheckStatus, Frames, MoritaContext,
    Tro, TroDecision, TroWitness,
};
use trolab::{io, Error, Matrix, Scalar};

type Q = Scalar;

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random projections per instance for the Morita lattice checks.
    pub samples: usize,
    pub parallel: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 42, samples: 100, parallel: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub instances: usize,
    /// Named counters; never timings.
    pub counts: BTreeMap<String, u64>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub const CRITERIA: [(u32, &str); 9] = [
    (1, "Alg and Lat are mutually inverse on generated lattices"),
    (2, "amplification example is a witness"),
    (3, "composition of random witness chains"),
    (4, "commutant isomorphism and linking algebra of decider witnesses"),
    (5, "decider agrees with the brute-force atom-bijection oracle"),
    (6, "Morita contexts from isomorphisms and witnesses"),
    (7, "C*-extension and atom extension of lattice isomorphisms"),
    (8, "no floating point in the core sources"),
    (9, "determinism of outputs"),
];

pub fn run_all(cfg: &SuiteConfig) -> SuiteReport {
    run_selected(cfg, &[])
}

/// The criteria in `ids`, or all of them when `ids` is empty.
pub fn run_selected(cfg: &SuiteConfig, ids: &[u32]) -> SuiteReport {
    let criteria: Vec<CriterionReport> = CRITERIA
        .iter()
        .filter(|c| ids.is_empty() || ids.contains(&c.0))
        .map(|&(id, _)| run_criterion(id, cfg))
        .collect();
    SuiteReport { seed: cfg.seed, samples: cfg.samples, passed: criteria.iter().all(|c| c.passed), criteria }
}

pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> CriterionReport {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown criterion", |c| c.1).to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::from(id));
    let tally = match id {
        1 => galois(&mut rng, cfg),
        2 => amplification_example(),
        3 => composition_chains(&mut rng, cfg),
        4 => theta_and_linking(&mut rng, cfg),
        5 => decider_vs_oracle(&mut rng, cfg),
        6 => morita(&mut rng, cfg),
        7 => extensions(&mut rng, cfg),
        8 => float_audit(),
        9 => determinism(&mut rng),
        _ => Tally { failures: vec![format!("no criterion {id}")], ..Tally::default() },
    };
    CriterionReport {
        id,
        title,
        passed: tally.failures.is_empty() && tally.instances > 0,
        instances: tally.instances,
        counts: tally.counts,
        failures: tally.failures,
    }
}

#[derive(Default)]
struct Tally {
    instances: usize,
    counts: BTreeMap<String, u64>,
    failures: Vec<String>,
}

type Outcome = Result<Vec<&'static str>, String>;

/// Runs `f` on every instance, in parallel if asked, and merges the results
/// in instance order.
fn run_instances<T: Sync>(cfg: &SuiteConfig, items: &[(String, T)], f: impl Fn(&T) -> Outcome + Sync) -> Tally {
    let results: Vec<Outcome> = if cfg.parallel {
        items.par_iter().map(|(_, t)| f(t)).collect()
    } else {
        items.iter().map(|(_, t)| f(t)).collect()
    };
    let mut tally = Tally { instances: items.len(), ..Tally::default() };
    for ((name, _), r) in items.iter().zip(results) {
        match r {
            Ok(tags) => {
                for t in tags {
                    *tally.counts.entry(t.to_string()).or_default() += 1;
                }
            }
            Err(e) => tally.failures.push(format!("{name}: {e}")),
        }
    }
    tally.failures.sort();
    tally
}

fn err(e: Error) -> String {
    e.to_string()
}

fn ensure(cond: bool, what: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

/// Splits every atom into rank-one projections, a frame finer than the atoms.
pub fn rank_one_refinement(atoms: &[Projection<Q>]) -> Vec<Projection<Q>> {
    let mut out = Vec::new();
    for e in atoms {
        let mut rest = e.matrix().clone();
        for c in e.matrix().column_vectors() {
            let w = rest.mul(&Matrix::column_vector(&c));
            if w.is_zero() {
                continue;
            }
            let p = Projection::onto_range(&w);
            rest = rest.sub(p.matrix());
            out.push(p);
        }
    }
    out
}

fn corpus_cfg() -> CorpusConfig {
    CorpusConfig::default()
}

fn small_cfg() -> CorpusConfig {
    CorpusConfig { max_atoms: 5, ..CorpusConfig::default() }
}

fn galois(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let c = corpus_cfg();
    let items: Vec<(String, Csl<Q>)> = (0..200).map(|i| (format!("csl-{i:03}"), random_csl(rng, &c))).collect();
    run_instances(cfg, &items, |s| {
        let a = s.alg();
        let frame = rank_one_refinement(s.atoms());
        let lat = lat_of_algebra(&a, &frame).map_err(err)?;
        ensure(lat == *s, "Lat(Alg S) ≠ S")?;
        let lat2 = lat_of_algebra(&a, s.atoms()).map_err(err)?;
        ensure(lat2 == *s, "Lat(Alg S) over the atoms ≠ S")?;
        ensure(lat.alg() == a, "Alg(Lat(Alg S)) ≠ Alg S")?;
        Ok(vec![if s.is_nest() { "nests" } else { "non-nests" }])
    })
}

fn coordinate_frame(n: usize) -> Vec<Projection<Q>> {
    (0..n).map(|i| Projection::coordinate(n, [i])).collect()
}

fn amplification_example() -> Tally {
    let mut tally = Tally { instances: 1, ..Tally::default() };
    let run = || -> Result<TroWitness<Q>, Error> {
        let a = OpAlgebra::upper_triangular(2);
        let (b, m) = amplification(&a)?;
        let fa = coordinate_frame(2);
        let fb = coordinate_frame(4);
        verify_witness(&a, &b, &m, Some(Frames { a: &fa, b: &fb }))
    };
    match run() {
        Ok(w) => {
            for c in w.checks() {
                let key = match c.status {
                    CheckStatus::Verified => "verified identities",
                    CheckStatus::Skipped => "skipped identities",
                };
                *tally.counts.entry(key.into()).or_default() += 1;
            }
            if w.checks().iter().any(|c| c.status != CheckStatus::Verified) {
                tally.failures.push("an identity was skipped".into());
            }
            tally.counts.insert("witness dim".into(), w.m().dim() as u64);
        }
        Err(e) => tally.failures.push(e.to_string()),
    }
    tally
}

fn witness_of(s1: &Csl<Q>, s2: &Csl<Q>, parallel: bool) -> Result<TroWitness<Q>, String> {
    match decide_tro_equivalence_csl(s1, s2, parallel).map_err(err)? {
        TroDecision::Equivalent { witness, .. } => Ok(witness),
        TroDecision::NotEquivalent(c) => Err(format!("isomorphic partners judged inequivalent: {c:?}")),
    }
}

struct Chain {
    b: Csl<Q>,
    a: Csl<Q>,
    c: Csl<Q>,
}

fn composition_chains(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let cc = corpus_cfg();
    let items: Vec<(String, Chain)> = (0..50)
        .map(|i| {
            let b = random_csl(rng, &cc);
            let a = isomorphic_partner(rng, &b, &cc);
            let c = isomorphic_partner(rng, &b, &cc);
            (format!("chain-{i:03}"), Chain { b, a, c })
        })
        .collect();
    run_instances(cfg, &items, |ch| {
        let w1 = witness_of(&ch.b, &ch.a, false)?;
        let w2 = witness_of(&ch.b, &ch.c, false)?;
        let comp = compose_witnesses(&w1, &w2).map_err(err)?;
        ensure(comp.witness.a() == w1.b() && comp.witness.b() == w2.b(), "composite joins the wrong algebras")?;
        let recheck = verify_witness(&ch.a.alg(), &ch.c.alg(), comp.witness.m(), None).map_err(err)?;
        ensure(recheck.m() == comp.witness.m(), "re-verification changed the witness")?;
        let vz = comp.z.left_algebra().map_err(err)?.bicommutant().map_err(err)?;
        let vy = comp.y.left_algebra().map_err(err)?.bicommutant().map_err(err)?;
        ensure(vz == vy, "Z*Z and Y*Y generate different von Neumann algebras")?;
        let back = w1.reversed().map_err(err)?;
        ensure(back.a() == w1.b(), "reverse witness has the wrong source")?;
        Ok(vec!["composed"])
    })
}

/// `A ~M B` enlarged to `A ~N B`; then `θ : Δ(A)′ → Δ(B)′` from `N` must
/// carry `Lat A` onto `Lat B`, and the linking algebra must be a commutant.
fn theta_checks(w: &TroWitness<Q>, frames: Frames<'_, Q>) -> Outcome {
    let big = enlarge_witness(w, Some(frames)).map_err(err)?;
    let lat_a = lat_of_algebra(w.a(), frames.a).map_err(err)?;
    let lat_b = lat_of_algebra(w.b(), frames.b).map_err(err)?;
    let theta = theta_from_tro(big.m(), lat_a.members()).map_err(err)?;
    theta.verify().map_err(err)?;
    ensure(*theta.source() == w.a().diagonal().commutant().map_err(err)?, "θ is not defined on Δ(A)′")?;
    ensure(*theta.target() == w.b().diagonal().commutant().map_err(err)?, "θ does not land in Δ(B)′")?;
    check_theta_on_lattices(&theta, &lat_a, &lat_b).map_err(err)?;
    let link = linking_algebra(big.m(), lat_a.members()).map_err(err)?;
    ensure(link.c.commutant().map_err(err)?.into_space() == *link.d.space(), "C′ ≠ D")?;
    ensure(link.d.commutant().map_err(err)?.into_space() == *link.c.space(), "D′ ≠ C")?;
    Ok(vec![if big.m().dim() > w.m().dim() { "enlarged" } else { "already maximal" }])
}

enum ThetaCase {
    Decided(Csl<Q>, Csl<Q>),
    /// `Alg S` against its 2×2 amplification through the column TRO.
    Amplified(Csl<Q>),
    /// `Alg S ~ Alg S` through the scalars, which enlarge to `Δ(Alg S)`.
    Scalar(Csl<Q>),
}

fn theta_and_linking(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let c = corpus_cfg();
    let small = CorpusConfig { dims: 1..=3, ..corpus_cfg() };
    let mut items: Vec<(String, ThetaCase)> = (0..40)
        .map(|i| {
            let s = random_csl(rng, &c);
            let t = isomorphic_partner(rng, &s, &c);
            (format!("witness-{i:03}"), ThetaCase::Decided(s, t))
        })
        .collect();
    items.extend((0..10).map(|i| (format!("amplified-{i:03}"), ThetaCase::Amplified(random_csl(rng, &small)))));
    items.extend((0..10).map(|i| (format!("scalar-{i:03}"), ThetaCase::Scalar(random_csl(rng, &c)))));
    run_instances(cfg, &items, |case| match case {
        ThetaCase::Decided(s, t) => {
            let w = witness_of(s, t, false)?;
            theta_checks(&w, Frames { a: s.atoms(), b: t.atoms() })
        }
        ThetaCase::Amplified(s) => {
            let a = s.alg();
            let (b, m) = amplification(&a).map_err(err)?;
            let n = s.dim();
            let frame_b: Vec<Projection<Q>> = s
                .atoms()
                .iter()
                .flat_map(|e| {
                    let z = Matrix::zeros(n, n);
                    [e.matrix().direct_sum(&z), z.direct_sum(e.matrix())]
                })
                .map(|x| Projection::new(x).expect("block projection"))
                .collect();
            let w = verify_witness(&a, &b, &m, None).map_err(err)?;
            let mut tags = theta_checks(&w, Frames { a: s.atoms(), b: &frame_b })?;
            tags.push("amplified");
            Ok(tags)
        }
        ThetaCase::Scalar(s) => {
            let a = s.alg();
            let m = Tro::verify(OperatorSpace::scalars(s.dim())).map_err(err)?;
            let w = verify_witness(&a, &a, &m, None).map_err(err)?;
            let big = enlarge_witness(&w, None).map_err(err)?;
            ensure(*big.m().space() == a.diagonal().into_space(), "scalars do not enlarge to Δ(A)")?;
            theta_checks(&w, Frames { a: s.atoms(), b: s.atoms() })
        }
    })
}

fn decider_vs_oracle(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let c = small_cfg();
    let mut pool: Vec<Csl<Q>> = Vec::new();
    for _ in 0..10 {
        let s = random_csl(rng, &c);
        let t = isomorphic_partner(rng, &s, &c);
        let u = loop {
            let (_, u) = perturbed_negative(rng, &s);
            if u.atom_count() <= 5 {
                break u;
            }
        };
        pool.extend([s, t, u]);
    }
    let mut items = Vec::new();
    for i in 0..pool.len() {
        for j in i..pool.len() {
            items.push((format!("pair-{i:02}-{j:02}"), (pool[i].clone(), pool[j].clone())));
        }
    }
    let oversize = pool.iter().filter(|s| s.atom_count() > 5).count();
    let mut tally = run_instances(cfg, &items, |(s1, s2)| {
        let oracle = brute_force_atom_map(s1, s2);
        match decide_tro_equivalence_csl(s1, s2, false).map_err(err)? {
            TroDecision::Equivalent { iso, witness } => {
                ensure(oracle.is_some(), "decider found an isomorphism the oracle missed")?;
                ensure(oracle.as_deref() == Some(iso.atom_map()), "decider and oracle disagree on the first map")?;
                let again = verify_witness(&s1.alg(), &s2.alg(), witness.m(), None).map_err(err)?;
                ensure(again.m() == witness.m(), "witness does not re-verify")?;
                Ok(vec!["equivalent"])
            }
            TroDecision::NotEquivalent(_) => {
                ensure(oracle.is_none(), "oracle found an isomorphism the decider missed")?;
                Ok(vec!["not equivalent"])
            }
        }
    });
    if oversize > 0 {
        tally.failures.push(format!("{oversize} pool lattices exceed 5 atoms"));
    }
    tally
}

fn morita(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let c = corpus_cfg();
    let items: Vec<(String, (Csl<Q>, Csl<Q>, bool, u64))> = (0..40)
        .map(|i| {
            let s = random_csl(rng, &c);
            let (iso, t) = if i % 4 == 3 { (false, perturbed_negative(rng, &s).1) } else { (true, isomorphic_partner(rng, &s, &c)) };
            (format!("context-{i:03}"), (s, t, iso, rng.gen()))
        })
        .collect();
    let samples = cfg.samples;
    run_instances(cfg, &items, |(s, t, iso, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        let frames = Frames { a: s.atoms(), b: t.atoms() };
        if !iso {
            ensure(find_lattice_iso(s, t, false).is_err(), "negative pair is isomorphic")?;
            let full = OperatorSpace::<Q>::full(s.dim(), t.dim());
            let ctx = MoritaContext::verify(s.alg(), t.alg(), full.clone(), full.adjoint());
            ensure(ctx.is_err(), "a context between non-isomorphic lattices verified")?;
            return Ok(vec!["negatives rejected"]);
        }
        let phi: LatticeIso<Q> = find_lattice_iso(s, t, false).map_err(|c| format!("{c:?}"))?;
        let ctx = morita_from_lattice_iso(&phi).map_err(err)?;
        let r1 = verify_morita_lattices(&ctx, frames, &mut rng, samples).map_err(err)?;
        let w = witness_of(s, t, false)?;
        let ctx2 = morita_from_witness(&w).map_err(err)?;
        let r2 = verify_morita_lattices(&ctx2, frames, &mut rng, samples).map_err(err)?;
        ensure(r1.sampled_projections == 3 * samples && r2.sampled_projections == 3 * samples, "sample count")?;
        Ok(vec!["contexts from isomorphisms", "contexts from witnesses"])
    })
}

fn extensions(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Tally {
    let c = corpus_cfg();
    let items: Vec<(String, (Csl<Q>, Csl<Q>, u64))> = (0..1000)
        .map(|i| {
            let s = random_csl(rng, &c);
            let t = isomorphic_partner(rng, &s, &c);
            (format!("iso-{i:04}"), (s, t, rng.gen()))
        })
        .collect();
    run_instances(cfg, &items, |(s, t, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        let phi = find_lattice_iso(s, t, false).map_err(|c| format!("{c:?}"))?;
        let rho = extend_lattice_iso_cstar(&phi, &mut rng, 3).map_err(err)?;
        let atomic = extend_atom_iso(&phi).map_err(err)?;
        ensure(rho == atomic, "the two extensions differ")?;
        let corners = check_corner_conditions(&phi).map_err(err)?;
        ensure(corners.left_corner == 0 && corners.right_corner == 0, "nonzero corner")?;
        Ok(vec!["extended"])
    })
}

/// Core sources, embedded at build time so the audit needs no file access.
pub const CORE_SOURCES: &[(&str, &str)] = &[
    ("corpus.rs", include_str!("../../core/src/corpus.rs")),
    ("erdos.rs", include_str!("../../core/src/erdos.rs")),
    ("error.rs", include_str!("../../core/src/error.rs")),
    ("io.rs", include_str!("../../core/src/io.rs")),
    ("lattice.rs", include_str!("../../core/src/lattice.rs")),
    ("lib.rs", include_str!("../../core/src/lib.rs")),
    ("linalg.rs", include_str!("../../core/src/linalg.rs")),
    ("matrix.rs", include_str!("../../core/src/matrix.rs")),
    ("opspace.rs", include_str!("../../core/src/opspace.rs")),
    ("poly.rs", include_str!("../../core/src/poly.rs")),
    ("random.rs", include_str!("../../core/src/random.rs")),
    ("scalar.rs", include_str!("../../core/src/scalar.rs")),
    ("tro.rs", include_str!("../../core/src/tro.rs")),
];

/// Lines of code (comments stripped) that mention a float type, a float
/// literal, or a float-producing RNG call.
pub fn float_mentions(source: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let code = line.split("//").next().unwrap_or_default();
        let float_token = code
            .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.'))
            .flat_map(|t| std::iter::once(t).chain(t.split('.')))
            .any(|t| t.contains("f32") || t.contains("f64") || t == "gen_bool" || is_float_literal(t));
        if float_token {
            out.push((i + 1, line.trim().to_string()));
        }
    }
    out
}

fn is_float_literal(t: &str) -> bool {
    let mut parts = t.splitn(2, '.');
    let (a, b) = (parts.next().unwrap_or_default(), parts.next());
    match b {
        Some(b) => !a.is_empty() && a.chars().all(|c| c.is_ascii_digit()) && b.chars().next().is_some_and(|c| c.is_ascii_digit()),
        None => false,
    }
}

fn float_audit() -> Tally {
    let mut tally = Tally { instances: CORE_SOURCES.len(), ..Tally::default() };
    let mut lines = 0u64;
    for (name, src) in CORE_SOURCES {
        lines += src.lines().count() as u64;
        for (l, text) in float_mentions(src) {
            tally.failures.push(format!("{name}:{l}: {text}"));
        }
    }
    tally.counts.insert("lines audited".into(), lines);
    tally
}

/// Re-runs a sample of decider and corpus work sequentially and in parallel
/// and compares the serialized results byte for byte.
fn determinism(rng: &mut ChaCha8Rng) -> Tally {
    let seed: u64 = rng.gen();
    let render = |parallel: bool| -> String {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c = small_cfg();
        let mut out = String::new();
        for _ in 0..12 {
            let s: Csl<Q> = random_csl(&mut r, &c);
            let t = if r.gen::<bool>() { isomorphic_partner(&mut r, &s, &c) } else { perturbed_negative(&mut r, &s).1 };
            out += &io::write_instance("csl", io::Meta::default(), &io::csl_to_json(&t));
            match decide_tro_equivalence_csl(&s, &t, parallel) {
                Ok(TroDecision::Equivalent { witness, .. }) => {
                    out += &io::write_instance("witness", io::Meta::default(), &io::witness_to_json(&witness))
                }
                Ok(TroDecision::NotEquivalent(c)) => out += &format!("{:?}\n", c.mismatches),
                Err(e) => out += &format!("error {e}\n"),
            }
        }
        out
    };
    let mut tally = Tally { instances: 3, ..Tally::default() };
    let first = render(false);
    if render(false) != first {
        tally.failures.push("sequential reruns differ".into());
    }
    if render(true) != first {
        tally.failures.push("parallel run differs from sequential".into());
    }
    tally.counts.insert("bytes compared".into(), first.len() as u64);
    tally
}
