//! Command-line front end for `trolab`.
//!
//! Exit codes: 0 success or equivalent, 1 verified not equivalent (or a
//! claimed identity that does not hold), 2 malformed input, 3 internal
//! assertion.

pub mod suite;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use trolab::corpus::{generate_pairs, CorpusConfig};
use trolab::io::{self, Meta};
use trolab::lattice::{find_lattice_iso, lat_of_algebra, Csl, Projection};
use trolab::opspace::{OpAlgebra, OperatorSpace};
use trolab::tro::{
    check_corner_conditions, compose_witnesses, decide_tro_equivalence_csl, enlarge_witness, essentialize,
    extend_atom_iso, extend_lattice_iso_cstar, morita_from_lattice_iso, theta_from_tro, verify_witness, Tro,
    TroDecision,
};
use trolab::{Error, Scalar};

type Q = Scalar;

#[derive(Parser, Debug)]
#[command(name = "trolab", version, about = "Exact TRO and CSL algebra workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Random samples per instance where a check samples.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Explore independent work concurrently; results do not change.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Write output files into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Alg of a lattice.
    Alg {
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Lat of an algebra relative to a frame.
    Lat {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        frame: PathBuf,
    },
    /// Commutant of an algebra.
    Commutant {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Diagonal A ∩ A* of an algebra.
    Diagonal {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// Bicommutant of an algebra.
    Bicommutant {
        #[arg(long)]
        algebra: PathBuf,
    },
    /// TRO operations.
    #[command(subcommand)]
    Tro(TroCommand),
    /// Equivalence deciders for CSL algebras.
    #[command(subcommand)]
    Equiv(EquivCommand),
    /// Extend a lattice isomorphism to the spans, two ways.
    ExtendIso {
        #[arg(long)]
        phi: PathBuf,
    },
    /// Random lattice corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Run the acceptance suite and print its report.
    Selftest {
        /// Run only these criteria.
        #[arg(long)]
        criterion: Vec<u32>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TroCommand {
    /// Re-verify a witness bundle, or check the TRO axiom for a space.
    Check {
        #[arg(long, conflicts_with = "space", required_unless_present = "space")]
        witness: Option<PathBuf>,
        #[arg(long)]
        space: Option<PathBuf>,
    },
    /// Essential part of a TRO.
    Essentialize {
        #[arg(long)]
        space: PathBuf,
    },
    /// Compose witnesses for B ~ A and B ~ C into A ~ C.
    Compose {
        #[arg(long)]
        first: PathBuf,
        #[arg(long)]
        second: PathBuf,
    },
    /// The *-isomorphism (M*M)′ → (MM*)′ of an essential TRO.
    Theta {
        #[arg(long)]
        space: PathBuf,
    },
    /// Enlarge the TRO of a unital witness.
    Enlarge {
        #[arg(long)]
        witness: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum EquivCommand {
    /// TRO equivalence of Alg S1 and Alg S2.
    Tro {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Spatial Morita context between Alg S1 and Alg S2.
    Morita {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum CorpusCommand {
    /// Isomorphic and perturbed lattice pairs.
    Gen {
        /// Dimension range `lo..hi`, inclusive.
        #[arg(long, default_value = "2..6", value_parser = parse_range)]
        dims: (usize, usize),
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        max_atoms: usize,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected lo..hi")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || lo > hi {
        return Err("need 1 ≤ lo ≤ hi".into());
    }
    Ok((lo, hi))
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

/// Exit code for an error raised while checking user-supplied objects.
fn input_code(e: &Error) -> i32 {
    match e {
        Error::IdentityFailed { .. } => 1,
        Error::Internal(_) => 3,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: input_code(&e), message: e.to_string() }
    }
}

/// Errors from constructions that the theory guarantees; an identity
/// failure there is a bug.
fn constructive(e: Error) -> Failure {
    match e {
        Error::IdentityFailed { .. } | Error::Internal(_) => Failure { code: 3, message: e.to_string() },
        other => other.into(),
    }
}

type Outcome = Result<(i32, Vec<(String, String)>), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn load<T: serde::de::DeserializeOwned>(path: &Path, kind: &str) -> Result<(T, String), Failure> {
    io::read_payload(&read(path)?, kind).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn located(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let code = input_code(&e);
        Failure { code, message: format!("{}: {e}", path.display()) }
    }
}

fn load_csl(path: &Path) -> Result<Csl<Q>, Failure> {
    let (j, p) = load(path, "csl")?;
    io::csl_from_json(&j, &p).map_err(located(path))
}

fn load_algebra(path: &Path) -> Result<OpAlgebra<Q>, Failure> {
    let (j, p) = load(path, "algebra")?;
    io::algebra_from_json(&j, &p).map_err(located(path))
}

fn load_space(path: &Path) -> Result<OperatorSpace<Q>, Failure> {
    let (j, p) = load(path, "space")?;
    io::space_from_json(&j, &p).map_err(located(path))
}

fn load_frame(path: &Path) -> Result<Vec<Projection<Q>>, Failure> {
    let (j, p) = load(path, "frame")?;
    io::frame_from_json(&j, &p).map_err(located(path))
}

fn load_witness(path: &Path) -> Result<trolab::tro::TroWitness<Q>, Failure> {
    let (j, p): (io::WitnessJson, _) = load(path, "witness")?;
    let (a, b, m) = io::witness_parts_from_json(&j, &p).map_err(located(path))?;
    verify_witness(&a, &b, &m, None).map_err(located(path))
}

fn doc<T: Serialize>(file: &str, kind: &str, meta: Meta, payload: &T) -> (String, String) {
    (file.to_string(), io::write_instance(kind, meta, payload))
}

fn named(name: &str) -> Meta {
    Meta { name: Some(name.to_string()), ..Meta::default() }
}

pub fn run(cli: Cli) -> i32 {
    let g = cli.global.clone();
    match execute(&cli.command, &g) {
        Ok((code, docs)) => match emit(&g, &docs) {
            Ok(()) => code,
            Err(f) => {
                eprintln!("error: {}", f.message);
                f.code
            }
        },
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn emit(g: &Global, docs: &[(String, String)]) -> Result<(), Failure> {
    match &g.out {
        Some(dir) => {
            let io_err = |e: std::io::Error| Failure { code: 2, message: format!("{}: {e}", dir.display()) };
            fs::create_dir_all(dir).map_err(io_err)?;
            for (file, text) in docs {
                fs::write(dir.join(file), text).map_err(io_err)?;
                println!("{}", dir.join(file).display());
            }
        }
        None => {
            for (_, text) in docs {
                print!("{text}");
            }
        }
    }
    Ok(())
}

pub fn execute(cmd: &Command, g: &Global) -> Outcome {
    match cmd {
        Command::Alg { lattice } => {
            let s = load_csl(lattice)?;
            Ok((0, vec![doc("alg.json", "algebra", named("Alg"), &io::algebra_to_json(&s.alg()))]))
        }
        Command::Lat { algebra, frame } => {
            let a = load_algebra(algebra)?;
            let f = load_frame(frame)?;
            let s = lat_of_algebra(&a, &f)?;
            Ok((0, vec![doc("lat.json", "csl", named("Lat"), &io::csl_to_json(&s))]))
        }
        Command::Commutant { algebra } => {
            let a = load_algebra(algebra)?.commutant()?;
            Ok((0, vec![doc("commutant.json", "algebra", named("commutant"), &io::algebra_to_json(&a))]))
        }
        Command::Diagonal { algebra } => {
            let a = load_algebra(algebra)?.diagonal();
            Ok((0, vec![doc("diagonal.json", "algebra", named("diagonal"), &io::algebra_to_json(&a))]))
        }
        Command::Bicommutant { algebra } => {
            let a = load_algebra(algebra)?.bicommutant()?;
            Ok((0, vec![doc("bicommutant.json", "algebra", named("bicommutant"), &io::algebra_to_json(&a))]))
        }
        Command::Tro(t) => tro(t),
        Command::Equiv(e) => equiv(e, g),
        Command::ExtendIso { phi } => extend_iso(phi, g),
        Command::Corpus(CorpusCommand::Gen { dims, count, max_atoms }) => corpus(*dims, *count, *max_atoms, g),
        Command::Selftest { criterion } => {
            let cfg = suite::SuiteConfig { seed: g.seed, samples: g.samples, parallel: g.parallel };
            let report = suite::run_selected(&cfg, criterion);
            for c in &report.criteria {
                eprintln!("criterion {}: {} ({})", c.id, if c.passed { "PASS" } else { "FAIL" }, c.title);
            }
            let code = if report.passed { 0 } else { 3 };
            Ok((code, vec![("selftest.json".into(), report.to_json())]))
        }
    }
}

fn tro(cmd: &TroCommand) -> Outcome {
    match cmd {
        TroCommand::Check { witness: Some(w), .. } => {
            let w = load_witness(w)?;
            Ok((0, vec![doc("witness.json", "witness", named("re-verified witness"), &io::witness_to_json(&w))]))
        }
        TroCommand::Check { space: Some(s), .. } => {
            let space = load_space(s)?;
            let report = match Tro::verify(space) {
                Ok(m) => (0, json!({"tro": true, "essential": m.is_essential(), "dim": m.dim()})),
                Err(Error::NotATro(i, j, k)) => (1, json!({"tro": false, "failingTriple": [i, j, k]})),
                Err(e) => return Err(e.into()),
            };
            Ok((report.0, vec![doc("tro-check.json", "tro-check", Meta::default(), &report.1)]))
        }
        TroCommand::Check { .. } => Err(Failure { code: 2, message: "give --witness or --space".into() }),
        TroCommand::Essentialize { space } => {
            let m = Tro::verify(load_space(space)?)?;
            let e = essentialize(&m).map_err(constructive)?;
            Ok((0, vec![doc("essential.json", "space", named("essential TRO"), &io::space_to_json(e.space()))]))
        }
        TroCommand::Compose { first, second } => {
            let w1 = load_witness(first)?;
            let w2 = load_witness(second)?;
            if w1.a() != w2.a() {
                return Err(Failure { code: 2, message: "the witnesses do not share their first algebra".into() });
            }
            let c = compose_witnesses(&w1, &w2).map_err(constructive)?;
            Ok((0, vec![doc("composed.json", "witness", named("composed witness"), &io::witness_to_json(&c.witness))]))
        }
        TroCommand::Theta { space } => {
            let m = Tro::verify(load_space(space)?)?;
            if !m.is_essential() {
                return Err(Failure { code: 2, message: "the TRO is not essential".into() });
            }
            let theta = theta_from_tro(&m, &[]).map_err(constructive)?;
            theta.verify().map_err(constructive)?;
            Ok((0, vec![doc("theta.json", "star-iso", named("theta"), &io::star_iso_to_json(&theta))]))
        }
        TroCommand::Enlarge { witness } => {
            let w = load_witness(witness)?;
            if !w.a().is_unital() || !w.b().is_unital() {
                return Err(Failure { code: 2, message: "enlargement needs unital algebras".into() });
            }
            let big = enlarge_witness(&w, None).map_err(constructive)?;
            Ok((0, vec![doc("enlarged.json", "witness", named("enlarged witness"), &io::witness_to_json(&big))]))
        }
    }
}

fn equiv(cmd: &EquivCommand, g: &Global) -> Outcome {
    match cmd {
        EquivCommand::Tro { a, b } => {
            let (s1, s2) = (load_csl(a)?, load_csl(b)?);
            match decide_tro_equivalence_csl(&s1, &s2, g.parallel).map_err(constructive)? {
                TroDecision::Equivalent { iso, witness } => Ok((
                    0,
                    vec![
                        doc("witness.json", "witness", named("TRO witness"), &io::witness_to_json(&witness)),
                        doc("iso.json", "iso", named("lattice isomorphism"), &io::iso_to_json(&iso)),
                    ],
                )),
                TroDecision::NotEquivalent(cert) => Ok((1, vec![not_equivalent(&cert)])),
            }
        }
        EquivCommand::Morita { a, b } => {
            let (s1, s2) = (load_csl(a)?, load_csl(b)?);
            match find_lattice_iso(&s1, &s2, g.parallel) {
                Ok(phi) => {
                    let ctx = morita_from_lattice_iso(&phi).map_err(constructive)?;
                    Ok((0, vec![doc("context.json", "context", named("Morita context"), &io::context_to_json(&ctx))]))
                }
                Err(cert) => Ok((1, vec![not_equivalent(&cert)])),
            }
        }
    }
}

fn not_equivalent(cert: &trolab::lattice::NotIsomorphic) -> (String, String) {
    let payload = json!({
        "reason": "the lattices are not isomorphic",
        "mismatches": cert.mismatches,
        "nodesExplored": cert.nodes_explored,
    });
    doc("not-equivalent.json", "not-equivalent", Meta::default(), &payload)
}

fn extend_iso(path: &Path, g: &Global) -> Outcome {
    let (j, p) = load(path, "iso")?;
    let phi: trolab::LatticeIso = io::iso_from_json(&j, &p).map_err(located(path))?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let rho = extend_lattice_iso_cstar(&phi, &mut rng, g.samples).map_err(constructive)?;
    let atomic = extend_atom_iso(&phi).map_err(constructive)?;
    if rho != atomic {
        return Err(Failure { code: 3, message: "the C*-extension and the atom extension differ".into() });
    }
    let corners = check_corner_conditions(&phi).map_err(constructive)?;
    let report = json!({
        "extension": io::star_iso_to_json(&rho),
        "extensionsAgree": true,
        "spectrumSamples": g.samples,
        "corners": corners,
    });
    Ok((0, vec![doc("extension.json", "extension", named("lattice isomorphism extension"), &report)]))
}

fn corpus(dims: (usize, usize), count: usize, max_atoms: usize, g: &Global) -> Outcome {
    let cfg = CorpusConfig { dims: dims.0..=dims.1, max_atoms: max_atoms.max(1), ..CorpusConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let pairs = generate_pairs::<Q, _>(&mut rng, count, &cfg);
    let docs = if g.out.is_some() {
        pairs
            .iter()
            .flat_map(|p| {
                let meta = |side: &str| Meta {
                    name: Some(format!("{}-{side}", p.name)),
                    seed: Some(g.seed),
                    note: Some(serde_json::to_value(p.family).expect("family").as_str().unwrap_or_default().to_string()),
                };
                [
                    doc(&format!("{}-a.json", p.name), "csl", meta("a"), &io::csl_to_json(&p.a)),
                    doc(&format!("{}-b.json", p.name), "csl", meta("b"), &io::csl_to_json(&p.b)),
                ]
            })
            .collect()
    } else {
        let payload: Vec<_> = pairs
            .iter()
            .map(|p| json!({"name": p.name, "family": p.family, "a": io::csl_to_json(&p.a), "b": io::csl_to_json(&p.b)}))
            .collect();
        let meta = Meta { name: Some("corpus".into()), seed: Some(g.seed), note: None };
        vec![doc("corpus.json", "corpus", meta, &payload)]
    };
    Ok((0, docs))
}
