//! JSON interchange. Scalars are always strings (`"a/b"` or `"a/b+c/di"`)
//! so no value ever passes through a float. Malformed input is reported
//! with the JSON path of the offending value.
//!
//! A file holds either a bare payload or an envelope
//! `{"kind": ..., "meta": {...}, "payload": ...}`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::{validate_frame, Csl, LatticeIso, Projection};
use crate::matrix::Matrix;
use crate::opspace::{OpAlgebra, OperatorSpace};
use crate::scalar::ExactField;
use crate::tro::{Check, MoritaContext, StarIso, Tro, TroWitness};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceJson {
    pub dom: usize,
    pub cod: usize,
    pub basis: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub n: usize,
    pub basis: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unital: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selfadjoint: Option<bool>,
}

/// A lattice, given on input by exactly one of: `generators`;
/// `atomRanks` with `memberSets`; `atoms` with `memberSets`. Output always
/// uses `atoms` with `memberSets`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CslJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member_sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_ranks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixJson>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct IsoJson {
    pub source: CslJson,
    pub target: CslJson,
    pub atom_map: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessJson {
    pub a: AlgebraJson,
    pub b: AlgebraJson,
    pub m: SpaceJson,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextJson {
    pub a: AlgebraJson,
    pub b: AlgebraJson,
    pub u: SpaceJson,
    pub v: SpaceJson,
    #[serde(default)]
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarIsoJson {
    pub source: AlgebraJson,
    pub target: AlgebraJson,
    pub images: Vec<MatrixJson>,
}

/// Pairwise-orthogonal projections summing to `I`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameJson {
    pub projections: Vec<MatrixJson>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance<T> {
    pub kind: String,
    #[serde(default)]
    pub meta: Meta,
    pub payload: T,
}

fn at(prefix: &str, rest: impl std::fmt::Display) -> String {
    let rest = rest.to_string();
    match (prefix.is_empty(), rest.is_empty() || rest == ".") {
        (true, true) => ".".to_string(),
        (true, false) => rest,
        (false, true) => prefix.to_string(),
        (false, false) if rest.starts_with('[') => format!("{prefix}{rest}"),
        (false, false) => format!("{prefix}.{rest}"),
    }
}

/// Parses a payload of the given kind from a bare payload or an envelope.
/// Returns the payload and the path prefix under which it sits.
pub fn read_payload<T: DeserializeOwned>(text: &str, kind: &str) -> Result<(T, String)> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::parse(".", e.to_string()))?;
    let (payload, prefix) = match value {
        Value::Object(mut obj) if obj.contains_key("kind") => {
            let found = obj.get("kind").and_then(Value::as_str).unwrap_or_default().to_string();
            if found != kind {
                return Err(Error::parse("kind", format!("expected `{kind}`, found `{found}`")));
            }
            for key in obj.keys() {
                if !matches!(key.as_str(), "kind" | "meta" | "payload") {
                    return Err(Error::parse(key.clone(), "unknown envelope field"));
                }
            }
            if let Some(meta) = obj.get("meta") {
                serde_path_to_error::deserialize::<_, Meta>(meta.clone())
                    .map_err(|e| Error::parse(at("meta", e.path()), e.inner().to_string()))?;
            }
            let payload = obj.remove("payload").ok_or_else(|| Error::parse("payload", "missing envelope payload"))?;
            (payload, "payload".to_string())
        }
        other => (other, String::new()),
    };
    let parsed = serde_path_to_error::deserialize(payload).map_err(|e| Error::parse(at(&prefix, e.path()), e.inner().to_string()))?;
    Ok((parsed, prefix))
}

/// Pretty JSON envelope with a trailing newline.
pub fn write_instance<T: Serialize>(kind: &str, meta: Meta, payload: &T) -> String {
    let inst = Instance { kind: kind.to_string(), meta, payload };
    let mut s = serde_json::to_string_pretty(&inst).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn matrix_to_json<F: ExactField>(m: &Matrix<F>) -> MatrixJson {
    MatrixJson {
        rows: m.rows(),
        cols: m.cols(),
        entries: (0..m.rows()).map(|i| m.row(i).iter().map(ToString::to_string).collect()).collect(),
    }
}

pub fn matrix_from_json<F: ExactField>(j: &MatrixJson, path: &str) -> Result<Matrix<F>> {
    if j.entries.len() != j.rows {
        return Err(Error::parse(at(path, "entries"), format!("{} rows given, `rows` says {}", j.entries.len(), j.rows)));
    }
    let mut data = Vec::with_capacity(j.rows * j.cols);
    for (i, row) in j.entries.iter().enumerate() {
        if row.len() != j.cols {
            return Err(Error::parse(
                at(path, format!("entries[{i}]")),
                format!("{} entries given, `cols` says {}", row.len(), j.cols),
            ));
        }
        for (k, s) in row.iter().enumerate() {
            let x = F::parse_scalar(s).map_err(|e| Error::parse(at(path, format!("entries[{i}][{k}]")), e.to_string()))?;
            data.push(x);
        }
    }
    Matrix::from_vec(j.rows, j.cols, data)
}

fn matrices_from_json<F: ExactField>(ms: &[MatrixJson], shape: (usize, usize), path: &str) -> Result<Vec<Matrix<F>>> {
    ms.iter()
        .enumerate()
        .map(|(i, m)| {
            let p = at(path, format!("[{i}]"));
            let x = matrix_from_json(m, &p)?;
            if x.shape() != shape {
                return Err(Error::parse(p, format!("shape {}x{}, expected {}x{}", x.rows(), x.cols(), shape.0, shape.1)));
            }
            Ok(x)
        })
        .collect()
}

pub fn space_to_json<F: ExactField>(s: &OperatorSpace<F>) -> SpaceJson {
    SpaceJson { dom: s.dom(), cod: s.cod(), basis: s.basis().iter().map(matrix_to_json).collect() }
}

pub fn space_from_json<F: ExactField>(j: &SpaceJson, path: &str) -> Result<OperatorSpace<F>> {
    let mats = matrices_from_json(&j.basis, (j.cod, j.dom), &at(path, "basis"))?;
    OperatorSpace::new(j.dom, j.cod, &mats)
}

pub fn algebra_to_json<F: ExactField>(a: &OpAlgebra<F>) -> AlgebraJson {
    AlgebraJson {
        n: a.n(),
        basis: a.basis().iter().map(matrix_to_json).collect(),
        unital: Some(a.is_unital()),
        selfadjoint: Some(a.is_selfadjoint()),
    }
}

pub fn algebra_from_json<F: ExactField>(j: &AlgebraJson, path: &str) -> Result<OpAlgebra<F>> {
    let mats = matrices_from_json(&j.basis, (j.n, j.n), &at(path, "basis"))?;
    let a = OpAlgebra::new(OperatorSpace::square(j.n, &mats)?).map_err(|e| Error::parse(at(path, "basis"), e.to_string()))?;
    if j.unital.is_some_and(|u| u != a.is_unital()) {
        return Err(Error::parse(at(path, "unital"), "flag disagrees with the basis"));
    }
    if j.selfadjoint.is_some_and(|s| s != a.is_selfadjoint()) {
        return Err(Error::parse(at(path, "selfadjoint"), "flag disagrees with the basis"));
    }
    Ok(a)
}

fn projections_from_json<F: ExactField>(ms: &[MatrixJson], n: usize, path: &str) -> Result<Vec<Projection<F>>> {
    matrices_from_json(ms, (n, n), path)?
        .into_iter()
        .enumerate()
        .map(|(i, m)| Projection::new(m).map_err(|e| Error::parse(at(path, format!("[{i}]")), e.to_string())))
        .collect()
}

pub fn csl_to_json<F: ExactField>(s: &Csl<F>) -> CslJson {
    CslJson {
        dim: s.dim(),
        atoms: Some(s.atoms().iter().map(|a| matrix_to_json(a.matrix())).collect()),
        member_sets: Some(s.member_index_sets()),
        ..CslJson::default()
    }
}

fn masks(sets: &[Vec<usize>], k: usize, path: &str) -> Result<Vec<u64>> {
    sets.iter()
        .enumerate()
        .map(|(i, set)| {
            set.iter().enumerate().try_fold(0u64, |m, (j, &a)| {
                if a >= k {
                    Err(Error::parse(at(path, format!("[{i}][{j}]")), format!("atom index {a} out of range for {k} atoms")))
                } else {
                    Ok(m | 1 << a)
                }
            })
        })
        .collect()
}

pub fn csl_from_json<F: ExactField>(j: &CslJson, path: &str) -> Result<Csl<F>> {
    let wrap = |e: Error| match e {
        Error::Parse { .. } => e,
        other => Error::parse(if path.is_empty() { "." } else { path }, other.to_string()),
    };
    match (&j.generators, &j.atom_ranks, &j.atoms, &j.member_sets) {
        (Some(g), None, None, None) => {
            let gens = projections_from_json(g, j.dim, &at(path, "generators"))?;
            Csl::closure(j.dim, &gens).map_err(wrap)
        }
        (None, Some(r), None, Some(m)) => {
            if r.iter().sum::<usize>() != j.dim {
                return Err(Error::parse(at(path, "atomRanks"), format!("ranks do not add up to dim {}", j.dim)));
            }
            masks(m, r.len(), &at(path, "memberSets"))?;
            Csl::from_blocks(r, m).map_err(wrap)
        }
        (None, None, Some(a), Some(m)) => {
            let atoms = projections_from_json(a, j.dim, &at(path, "atoms"))?;
            validate_frame(j.dim, &atoms).map_err(|e| Error::parse(at(path, "atoms"), e.to_string()))?;
            let ms = masks(m, atoms.len(), &at(path, "memberSets"))?;
            Csl::from_cells(j.dim, atoms, &ms).map_err(wrap)
        }
        _ => Err(Error::parse(
            if path.is_empty() { "." } else { path },
            "give exactly one of `generators`, `atomRanks` + `memberSets`, or `atoms` + `memberSets`",
        )),
    }
}

pub fn iso_to_json<F: ExactField>(phi: &LatticeIso<F>) -> IsoJson {
    IsoJson { source: csl_to_json(phi.source()), target: csl_to_json(phi.target()), atom_map: phi.atom_map().to_vec() }
}

pub fn iso_from_json<F: ExactField>(j: &IsoJson, path: &str) -> Result<LatticeIso<F>> {
    let s = csl_from_json(&j.source, &at(path, "source"))?;
    let t = csl_from_json(&j.target, &at(path, "target"))?;
    LatticeIso::new(s, t, j.atom_map.clone()).map_err(|e| Error::parse(at(path, "atomMap"), e.to_string()))
}

pub fn witness_to_json<F: ExactField>(w: &TroWitness<F>) -> WitnessJson {
    WitnessJson {
        a: algebra_to_json(w.a()),
        b: algebra_to_json(w.b()),
        m: space_to_json(w.m().space()),
        checks: w.checks().to_vec(),
    }
}

/// The three objects of a witness bundle, not yet verified.
pub fn witness_parts_from_json<F: ExactField>(j: &WitnessJson, path: &str) -> Result<(OpAlgebra<F>, OpAlgebra<F>, Tro<F>)> {
    let a = algebra_from_json(&j.a, &at(path, "a"))?;
    let b = algebra_from_json(&j.b, &at(path, "b"))?;
    let m = Tro::verify(space_from_json(&j.m, &at(path, "m"))?)?;
    Ok((a, b, m))
}

pub fn context_to_json<F: ExactField>(c: &MoritaContext<F>) -> ContextJson {
    ContextJson {
        a: algebra_to_json(c.a()),
        b: algebra_to_json(c.b()),
        u: space_to_json(c.u()),
        v: space_to_json(c.v()),
        checks: c.checks().to_vec(),
    }
}

pub fn context_from_json<F: ExactField>(j: &ContextJson, path: &str) -> Result<MoritaContext<F>> {
    let a = algebra_from_json(&j.a, &at(path, "a"))?;
    let b = algebra_from_json(&j.b, &at(path, "b"))?;
    let u = space_from_json(&j.u, &at(path, "u"))?;
    let v = space_from_json(&j.v, &at(path, "v"))?;
    MoritaContext::verify(a, b, u, v)
}

pub fn star_iso_to_json<F: ExactField>(r: &StarIso<F>) -> StarIsoJson {
    StarIsoJson {
        source: algebra_to_json(r.source()),
        target: algebra_to_json(r.target()),
        images: r.images().iter().map(matrix_to_json).collect(),
    }
}

pub fn frame_to_json<F: ExactField>(ps: &[Projection<F>]) -> FrameJson {
    FrameJson { projections: ps.iter().map(|p| matrix_to_json(p.matrix())).collect() }
}

pub fn frame_from_json<F: ExactField>(j: &FrameJson, path: &str) -> Result<Vec<Projection<F>>> {
    let n = j.projections.first().map_or(0, |m| m.rows);
    let ps = projections_from_json(&j.projections, n, &at(path, "projections"))?;
    validate_frame(n, &ps).map_err(|e| Error::parse(at(path, "projections"), e.to_string()))?;
    Ok(ps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    #[test]
    fn matrix_round_trip_is_exact() {
        let mut m: Matrix<Q> = Matrix::from_i64(&[&[1, -2], &[0, 3]]);
        m[(0, 1)] = Q::parse_scalar("-2/3+5/7i").unwrap();
        let j = matrix_to_json(&m);
        let text = serde_json::to_string(&j).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(matrix_from_json::<Q>(&back, "").unwrap(), m);
        assert_eq!(serde_json::to_string(&matrix_to_json(&matrix_from_json::<Q>(&back, "").unwrap())).unwrap(), text);
    }

    #[test]
    fn errors_carry_paths() {
        let text = r#"{"kind":"space","payload":{"dom":1,"cod":1,"basis":[{"rows":1,"cols":1,"entries":[["x"]]}]}}"#;
        let (j, prefix): (SpaceJson, String) = read_payload(text, "space").unwrap();
        match space_from_json::<Q>(&j, &prefix) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "payload.basis[0].entries[0][0]"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"dom":1,"cod":1,"basis":[{"rows":1,"cols":1,"entries":[[3]]}]}"#;
        match read_payload::<SpaceJson>(text, "space") {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "basis[0].entries[0][0]"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_payload::<SpaceJson>(r#"{"kind":"csl","payload":{}}"#, "space"), Err(Error::Parse { .. })));
    }

    #[test]
    fn csl_input_forms_agree() {
        let blocks = CslJson { dim: 3, atom_ranks: Some(vec![1, 2]), member_sets: Some(vec![vec![0]]), ..Default::default() };
        let s: Csl<Q> = csl_from_json(&blocks, "").unwrap();
        let canonical = csl_to_json(&s);
        assert_eq!(csl_from_json::<Q>(&canonical, "").unwrap(), s);
        let gens = CslJson {
            dim: 3,
            generators: Some(vec![matrix_to_json(&Matrix::<Q>::diag_i64(&[1, 0, 0]))]),
            ..Default::default()
        };
        assert_eq!(csl_from_json::<Q>(&gens, "").unwrap(), s);
        assert_eq!(csl_to_json(&csl_from_json::<Q>(&canonical, "").unwrap()), canonical);
    }
}
