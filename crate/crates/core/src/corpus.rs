//! Seeded generators for commutative subspace lattices: random lattices,
//! isomorphic partners and near-miss negatives.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::Csl;
use crate::random::givens_unitary;
use crate::scalar::ExactField;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusConfig {
    pub dims: RangeInclusive<usize>,
    pub max_atoms: usize,
    /// Chance in percent of conjugating a generated lattice by a random unitary.
    pub conjugate_percent: u32,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { dims: 2..=6, max_atoms: 6, conjugate_percent: 30 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Isomorphic,
    AddMember,
    RemoveMember,
    SplitAtom,
}

impl Family {
    pub fn is_isomorphic(self) -> bool {
        self == Family::Isomorphic
    }
}

#[derive(Clone)]
pub struct CorpusPair<F> {
    pub name: String,
    pub family: Family,
    pub a: Csl<F>,
    pub b: Csl<F>,
}

/// Splits `total` into `parts` positive summands uniformly over compositions.
fn composition<R: Rng + ?Sized>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, total - 1, parts - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    cuts.into_iter()
        .map(|c| {
            let r = c - prev;
            prev = c;
            r
        })
        .collect()
}

fn random_subset<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<usize> {
    (0..k).filter(|_| rng.gen::<bool>()).collect()
}

fn maybe_conjugate<F: ExactField, R: Rng + ?Sized>(rng: &mut R, s: Csl<F>, percent: u32) -> Csl<F> {
    if s.dim() > 1 && rng.gen_ratio(percent.min(100), 100) {
        let u = givens_unitary(rng, s.dim(), 2);
        s.conjugate(&u)
    } else {
        s
    }
}

/// A random lattice: block atoms of random ranks, random generating member
/// sets, possibly rotated by a unitary.
pub fn random_csl<F: ExactField, R: Rng + ?Sized>(rng: &mut R, cfg: &CorpusConfig) -> Csl<F> {
    let dim = rng.gen_range(cfg.dims.clone());
    let k = rng.gen_range(1..=dim.min(cfg.max_atoms));
    let ranks = composition(rng, dim, k);
    let gens = rng.gen_range(0..=2 * k);
    let sets: Vec<Vec<usize>> = (0..gens).map(|_| random_subset(rng, k)).collect();
    let s = Csl::from_blocks(&ranks, &sets).expect("block data is valid");
    maybe_conjugate(rng, s, cfg.conjugate_percent)
}

/// A lattice isomorphic to `s`: atoms relabelled, ranks re-drawn within the
/// dimension bounds, possibly rotated.
pub fn isomorphic_partner<F: ExactField, R: Rng + ?Sized>(rng: &mut R, s: &Csl<F>, cfg: &CorpusConfig) -> Csl<F> {
    let k = s.atom_count();
    let lo = *cfg.dims.start();
    let hi = *cfg.dims.end();
    let mut ranks = vec![1; k];
    let target = rng.gen_range(lo.max(k)..=hi.max(k));
    for _ in k..target {
        let i = rng.gen_range(0..k);
        ranks[i] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    let sets: Vec<Vec<usize>> = s.member_index_sets().iter().map(|m| m.iter().map(|&i| perm[i]).collect()).collect();
    let t = Csl::from_blocks(&ranks, &sets).expect("relabelled block data is valid");
    maybe_conjugate(rng, t, cfg.conjugate_percent)
}

/// A lattice close to `s` but with a different member or atom count, so it
/// is never isomorphic to `s`. Returns the kind of perturbation applied.
pub fn perturbed_negative<F: ExactField, R: Rng + ?Sized>(rng: &mut R, s: &Csl<F>) -> (Family, Csl<F>) {
    let k = s.atom_count();
    let ranks = s.atom_ranks();
    let sets = s.member_index_sets();
    let masks = s.member_sets();
    let full = s.full_mask();
    let mut kinds = Vec::new();
    if masks.len() < 1 << k {
        kinds.push(Family::AddMember);
    }
    if masks.len() > 2 {
        kinds.push(Family::RemoveMember);
    }
    if ranks.iter().any(|&r| r > 1) {
        kinds.push(Family::SplitAtom);
    }
    if kinds.is_empty() {
        // one atom of rank one: only a larger space can differ
        let t = Csl::from_blocks(&[1, 1], &[vec![0]]).expect("valid");
        return (Family::SplitAtom, t);
    }
    let kind = *kinds.choose(rng).expect("nonempty");
    let t = match kind {
        Family::AddMember => {
            let absent: Vec<u64> = (0..=full).filter(|m| !masks.contains(m)).collect();
            let extra = *absent.choose(rng).expect("a missing subset exists");
            let mut gens = sets.clone();
            gens.push((0..k).filter(|i| extra >> i & 1 == 1).collect());
            Csl::from_blocks(&ranks, &gens).expect("valid")
        }
        Family::RemoveMember => {
            // drop a proper member whose removal leaves a closed family
            let mut order: Vec<usize> = (0..masks.len()).filter(|&i| masks[i] != 0 && masks[i] != full).collect();
            order.shuffle(rng);
            let mut found = None;
            for i in order {
                let rest: Vec<Vec<usize>> = sets.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, m)| m.clone()).collect();
                let t = Csl::from_blocks(&ranks, &rest).expect("valid");
                if t.member_count() < s.member_count() {
                    found = Some(t);
                    break;
                }
            }
            match found {
                Some(t) => t,
                None => return perturbed_split(rng, s),
            }
        }
        Family::SplitAtom => return perturbed_split(rng, s),
        Family::Isomorphic => unreachable!("not a perturbation"),
    };
    (kind, t)
}

/// Splits an atom of rank ≥ 2 in two and adds the member that separates the
/// halves. Falls back to adding a member when every atom has rank one.
fn perturbed_split<F: ExactField, R: Rng + ?Sized>(rng: &mut R, s: &Csl<F>) -> (Family, Csl<F>) {
    let k = s.atom_count();
    let ranks = s.atom_ranks();
    let splittable: Vec<usize> = (0..k).filter(|&i| ranks[i] > 1).collect();
    let Some(&a) = splittable.choose(rng) else {
        let mut gens = s.member_index_sets();
        gens.push(vec![0]);
        let t = Csl::from_blocks(&[ranks.clone(), vec![1]].concat(), &gens).expect("valid");
        return (Family::SplitAtom, t);
    };
    let cut = rng.gen_range(1..ranks[a]);
    // new atom k takes `ranks[a] - cut` dimensions of atom a
    let mut new_ranks = ranks.clone();
    new_ranks[a] = cut;
    new_ranks.push(ranks[a] - cut);
    let mut gens: Vec<Vec<usize>> = s
        .member_index_sets()
        .into_iter()
        .map(|mut m| {
            if m.contains(&a) {
                m.push(k);
            }
            m
        })
        .collect();
    // the smallest member containing a, minus the new half
    let smallest = s
        .member_sets()
        .iter()
        .filter(|&&m| m >> a & 1 == 1)
        .min_by_key(|m| m.count_ones())
        .copied()
        .expect("I contains every atom");
    gens.push((0..k).filter(|i| smallest >> i & 1 == 1).collect());
    let t = Csl::from_blocks(&new_ranks, &gens).expect("valid");
    (Family::SplitAtom, t)
}

/// `count` named pairs, alternating isomorphic and perturbed families.
pub fn generate_pairs<F: ExactField, R: Rng + ?Sized>(rng: &mut R, count: usize, cfg: &CorpusConfig) -> Vec<CorpusPair<F>> {
    (0..count)
        .map(|i| {
            let a = random_csl(rng, cfg);
            let (family, b) = if i % 2 == 0 {
                (Family::Isomorphic, isomorphic_partner(rng, &a, cfg))
            } else {
                perturbed_negative(rng, &a)
            };
            CorpusPair { name: format!("pair-{i:04}"), family, a, b }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::lattice::{brute_force_atom_map, find_lattice_iso};
    use crate::scalar::GaussianRational as Q;

    #[test]
    fn families_are_labelled_correctly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = CorpusConfig::default();
        let pairs: Vec<CorpusPair<Q>> = generate_pairs(&mut rng, 24, &cfg);
        for p in &pairs {
            assert!(cfg.dims.contains(&p.a.dim()), "{}", p.name);
            assert!(p.a.atom_count() <= cfg.max_atoms);
            p.a.validate().unwrap();
            p.b.validate().unwrap();
            let oracle = brute_force_atom_map(&p.a, &p.b).is_some();
            assert_eq!(oracle, p.family.is_isomorphic(), "{} {:?}", p.name, p.family);
            assert_eq!(find_lattice_iso(&p.a, &p.b, false).is_ok(), oracle);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = CorpusConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            generate_pairs::<Q, _>(&mut rng, 6, &cfg).into_iter().map(|p| (p.a, p.b)).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }
}
