//! JSON interchange formats.
//!
//! * eigenstructure: `{"finite": [{"re", "im", "degrees"}], "infinite": [..],
//!   "right": [..], "left": [..]}` with an optional `"skew": true`;
//! * skew canonical form: `{"H": [{"re", "im", "h"}], "K": [..], "M": [..]}`;
//! * Kronecker form: `{"E": [{"re", "im", "k"}], "Einf": [..], "L": [..], "LT": [..]}`;
//! * matrix polynomial: `{"m", "d", "coeffs": [A_0, .., A_d]}`, each matrix a
//!   list of rows of `[re, im]` pairs, with an optional `"n"` column count for
//!   rectangular inputs. A pencil `lambda A - B` is `coeffs = [-B, A]`.
//!
//! Wherever an eigenvalue appears, `{"label": k}` may replace `re`/`im` to
//! give the symbolic eigenvalue `mu_k`. Missing block lists are empty.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canon::{
    CMatrix, EigStruct, Eigenvalue, Kcf, KcfBlock, MatPoly, Point, SkewBlock, SkewKcf, C64,
};
use crate::closure::{CertificateStep, ClosureCertificate, SearchStats};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct PointJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<f64>,
}

impl PointJson {
    fn of(p: &Point) -> Self {
        match p {
            Point::Symbol(id) => PointJson { label: Some(*id), ..Default::default() },
            Point::Value(z) => PointJson { label: None, re: Some(z.re), im: Some(z.im) },
        }
    }

    fn point(&self) -> Result<Point, IoError> {
        match (self.label, self.re, self.im) {
            (Some(id), None, None) => Ok(Point::Symbol(id)),
            (None, Some(re), im) => Ok(Point::value(re, im.unwrap_or(0.0))),
            _ => Err(IoError::Invalid("an eigenvalue needs either \"label\" or \"re\"/\"im\"".into())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FiniteJson {
    #[serde(flatten)]
    point: PointJson,
    degrees: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EigStructJson {
    #[serde(default)]
    finite: Vec<FiniteJson>,
    #[serde(default)]
    infinite: Vec<usize>,
    #[serde(default)]
    right: Vec<usize>,
    #[serde(default)]
    left: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    skew: bool,
}

pub fn eigstruct_to_json(e: &EigStruct) -> Value {
    let mut finite: Vec<FiniteJson> = Vec::new();
    for (p, deg) in &e.finite {
        match finite.last_mut() {
            Some(f) if f.point.point().ok() == Some(*p) => f.degrees.push(*deg),
            _ => finite.push(FiniteJson { point: PointJson::of(p), degrees: vec![*deg] }),
        }
    }
    serde_json::to_value(EigStructJson {
        finite,
        infinite: e.infinite.clone(),
        right: e.right.clone(),
        left: e.left.clone(),
        skew: e.skew,
    })
    .expect("serializable")
}

pub fn eigstruct_from_json(s: &str) -> Result<EigStruct, IoError> {
    let j: EigStructJson = serde_json::from_str(s)?;
    let mut e = EigStruct {
        infinite: j.infinite,
        right: j.right,
        left: j.left,
        skew: j.skew,
        ..Default::default()
    };
    for f in &j.finite {
        let p = f.point.point()?;
        e.finite.extend(f.degrees.iter().map(|&d| (p, d)));
    }
    e.normalize();
    e.validate().map_err(|err| IoError::Invalid(err.to_string()))?;
    Ok(e)
}

#[derive(Serialize, Deserialize)]
struct HJson {
    #[serde(flatten)]
    point: PointJson,
    h: usize,
}

#[derive(Serialize, Deserialize)]
struct EJson {
    #[serde(flatten)]
    point: PointJson,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct SkewKcfJson {
    #[serde(rename = "H", default)]
    h: Vec<HJson>,
    #[serde(rename = "K", default)]
    k: Vec<usize>,
    #[serde(rename = "M", default)]
    m: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct KcfJson {
    #[serde(rename = "E", default)]
    e: Vec<EJson>,
    #[serde(rename = "Einf", default)]
    einf: Vec<usize>,
    #[serde(rename = "L", default)]
    l: Vec<usize>,
    #[serde(rename = "LT", default)]
    lt: Vec<usize>,
}

pub fn skew_kcf_to_json(s: &SkewKcf) -> Value {
    let mut j = SkewKcfJson { h: Vec::new(), k: Vec::new(), m: Vec::new() };
    for b in s.blocks() {
        match b {
            SkewBlock::H { eig, size } => j.h.push(HJson { point: PointJson::of(eig), h: *size }),
            SkewBlock::K(k) => j.k.push(*k),
            SkewBlock::M(m) => j.m.push(*m),
        }
    }
    serde_json::to_value(j).expect("serializable")
}

fn skew_kcf_from_value(v: Value) -> Result<SkewKcf, IoError> {
    let j: SkewKcfJson = serde_json::from_value(v)?;
    let mut blocks = Vec::new();
    for h in &j.h {
        blocks.push(SkewBlock::H { eig: h.point.point()?, size: h.h });
    }
    blocks.extend(j.k.iter().map(|&k| SkewBlock::K(k)));
    blocks.extend(j.m.iter().map(|&m| SkewBlock::M(m)));
    SkewKcf::new(blocks).map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn kcf_to_json(k: &Kcf) -> Value {
    let mut j = KcfJson { e: Vec::new(), einf: Vec::new(), l: Vec::new(), lt: Vec::new() };
    for b in k.blocks() {
        match b {
            KcfBlock::E { eig: Eigenvalue::Finite(p), size } => {
                j.e.push(EJson { point: PointJson::of(p), k: *size })
            }
            KcfBlock::E { eig: Eigenvalue::Infinite, size } => j.einf.push(*size),
            KcfBlock::L(k) => j.l.push(*k),
            KcfBlock::LT(k) => j.lt.push(*k),
        }
    }
    serde_json::to_value(j).expect("serializable")
}

fn kcf_from_value(v: Value) -> Result<Kcf, IoError> {
    let j: KcfJson = serde_json::from_value(v)?;
    let mut blocks = Vec::new();
    for e in &j.e {
        blocks.push(KcfBlock::E { eig: Eigenvalue::Finite(e.point.point()?), size: e.k });
    }
    blocks.extend(j.einf.iter().map(|&size| KcfBlock::E { eig: Eigenvalue::Infinite, size }));
    blocks.extend(j.l.iter().map(|&k| KcfBlock::L(k)));
    blocks.extend(j.lt.iter().map(|&k| KcfBlock::LT(k)));
    Kcf::new(blocks).map_err(|e| IoError::Invalid(e.to_string()))
}

/// A canonical form read from JSON; the kind is detected from the keys.
#[derive(Clone, Debug, PartialEq)]
pub enum CanonicalForm {
    Skew(SkewKcf),
    General(Kcf),
}

impl CanonicalForm {
    pub fn to_kcf(&self) -> Kcf {
        match self {
            CanonicalForm::Skew(s) => s.to_kcf(),
            CanonicalForm::General(k) => k.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CanonicalForm::Skew(s) => skew_kcf_to_json(s),
            CanonicalForm::General(k) => kcf_to_json(k),
        }
    }
}

pub fn canonical_form_from_json(s: &str) -> Result<CanonicalForm, IoError> {
    let v: Value = serde_json::from_str(s)?;
    let Value::Object(map) = &v else {
        return Err(IoError::Invalid("expected a JSON object".into()));
    };
    let skew = ["H", "K", "M"].iter().any(|k| map.contains_key(*k));
    let general = ["E", "Einf", "L", "LT"].iter().any(|k| map.contains_key(*k));
    match (skew, general) {
        (true, false) => Ok(CanonicalForm::Skew(skew_kcf_from_value(v)?)),
        (false, true) => Ok(CanonicalForm::General(kcf_from_value(v)?)),
        (true, true) => Err(IoError::Invalid("mixes skew (H/K/M) and general (E/Einf/L/LT) blocks".into())),
        (false, false) => Err(IoError::Invalid("no block lists found".into())),
    }
}

pub fn skew_kcf_from_json(s: &str) -> Result<SkewKcf, IoError> {
    match canonical_form_from_json(s)? {
        CanonicalForm::Skew(k) => Ok(k),
        CanonicalForm::General(_) => Err(IoError::Invalid("expected a skew canonical form".into())),
    }
}

#[derive(Serialize, Deserialize)]
struct MatPolyJson {
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    d: usize,
    coeffs: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn matpoly_to_json(p: &MatPoly) -> Value {
    let coeffs = p
        .coeffs()
        .iter()
        .map(|a| (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect())
        .collect();
    let n = (p.cols() != p.rows()).then_some(p.cols());
    serde_json::to_value(MatPolyJson { m: p.rows(), n, d: p.grade(), coeffs }).expect("serializable")
}

pub fn matpoly_from_json(s: &str) -> Result<MatPoly, IoError> {
    let j: MatPolyJson = serde_json::from_str(s)?;
    let cols = j.n.unwrap_or(j.m);
    if j.coeffs.len() != j.d + 1 {
        return Err(IoError::Invalid(format!("grade {} needs {} coefficients, got {}", j.d, j.d + 1, j.coeffs.len())));
    }
    let mut mats = Vec::with_capacity(j.coeffs.len());
    for (i, c) in j.coeffs.iter().enumerate() {
        if c.len() != j.m || c.iter().any(|row| row.len() != cols) {
            return Err(IoError::Invalid(format!("coefficient {i} is not {}x{cols}", j.m)));
        }
        mats.push(CMatrix::from_fn(j.m, cols, |r, s| C64::new(c[r][s][0], c[r][s][1])));
    }
    MatPoly::new(mats).map_err(|e| IoError::Invalid(e.to_string()))
}

#[derive(Serialize)]
pub struct CertificateJson {
    pub source: String,
    pub target: String,
    pub steps: Vec<StepJson>,
    pub stats: SearchStats,
}

#[derive(Serialize)]
pub struct StepJson {
    #[serde(flatten)]
    pub step: CertificateStep,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

pub fn certificate_to_json(c: &ClosureCertificate, stats: SearchStats) -> Value {
    use crate::closure::RuleApplication;
    let steps = c
        .serialized_steps()
        .into_iter()
        .zip(&c.steps)
        .map(|(step, app)| {
            let (partition, labels) = match app {
                RuleApplication::Regularize { parts, .. } => (
                    Some(parts.iter().map(|p| p.0).collect()),
                    Some(parts.iter().map(|p| p.1.to_string()).collect()),
                ),
                _ => (None, None),
            };
            StepJson { step, partition, labels }
        })
        .collect();
    serde_json::to_value(CertificateJson {
        source: c.source.to_string(),
        target: c.target.to_string(),
        steps,
        stats,
    })
    .expect("serializable")
}

/// A single block given by name, as printed by the `Display` impls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedBlock {
    General(KcfBlock),
    Skew(SkewBlock),
}

fn parse_complex(s: &str) -> Option<C64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| C64::new(re, 0.0));
    };
    // split before the last sign that is not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (body[..i].parse().ok()?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().ok()?,
    };
    Some(C64::new(re, im))
}

fn parse_point(s: &str) -> Option<Point> {
    if let Some(id) = s.strip_prefix("mu") {
        return id.parse().ok().map(Point::Symbol);
    }
    parse_complex(s).map(|z| Point::value(z.re, z.im))
}

/// Parses names such as `M_2`, `K_1`, `H_2(1.5-2i)`, `E_3(inf)`, `L_1`, `LT_0`.
pub fn parse_block(name: &str) -> Result<NamedBlock, IoError> {
    let bad = || IoError::Invalid(format!("cannot parse block name {name:?}"));
    let name = name.trim();
    let (kind, rest) = name.split_once('_').ok_or_else(bad)?;
    let (size, eig) = match rest.split_once('(') {
        Some((size, tail)) => (size, Some(tail.strip_suffix(')').ok_or_else(bad)?)),
        None => (rest, None),
    };
    let size: usize = size.parse().map_err(|_| bad())?;
    let block = match (kind, eig) {
        ("M", None) => NamedBlock::Skew(SkewBlock::M(size)),
        ("K", None) => NamedBlock::Skew(SkewBlock::K(size)),
        ("H", Some(e)) => NamedBlock::Skew(SkewBlock::H { eig: parse_point(e).ok_or_else(bad)?, size }),
        ("L", None) => NamedBlock::General(KcfBlock::L(size)),
        ("LT", None) => NamedBlock::General(KcfBlock::LT(size)),
        ("E", Some("inf")) => NamedBlock::General(KcfBlock::E { eig: Eigenvalue::Infinite, size }),
        ("E", Some(e)) => {
            NamedBlock::General(KcfBlock::E { eig: Eigenvalue::Finite(parse_point(e).ok_or_else(bad)?), size })
        }
        _ => return Err(bad()),
    };
    let empty = match block {
        NamedBlock::General(KcfBlock::E { size, .. }) => size == 0,
        NamedBlock::Skew(SkewBlock::H { size, .. } | SkewBlock::K(size)) => size == 0,
        _ => false,
    };
    if empty {
        return Err(IoError::Invalid(format!("{name}: size must be >= 1")));
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{eigstruct_of_skew_kcf, Pencil};

    #[test]
    fn skew_form_round_trip() {
        let s = SkewKcf::new([
            SkewBlock::M(1),
            SkewBlock::M(0),
            SkewBlock::K(2),
            SkewBlock::H { eig: Point::Symbol(3), size: 1 },
            SkewBlock::H { eig: Point::value(1.5, -2.0), size: 2 },
        ])
        .unwrap();
        let text = skew_kcf_to_json(&s).to_string();
        assert_eq!(skew_kcf_from_json(&text).unwrap(), s);
    }

    #[test]
    fn missing_keys_are_empty() {
        let s = skew_kcf_from_json(r#"{"M":[1,0]}"#).unwrap();
        assert_eq!(s.to_string(), "{M_1, M_0}");
        let v = skew_kcf_to_json(&s);
        assert_eq!(v, serde_json::json!({"H": [], "K": [], "M": [1, 0]}));
    }

    #[test]
    fn general_form_detection() {
        let f = canonical_form_from_json(r#"{"L":[1],"LT":[0],"E":[{"label":1,"k":2}]}"#).unwrap();
        let CanonicalForm::General(k) = &f else { panic!("expected general form") };
        assert_eq!(k.to_string(), "{E_2(mu1), L_1, LT_0}");
        assert_eq!(canonical_form_from_json(&f.to_json().to_string()).unwrap(), f);
        assert!(canonical_form_from_json(r#"{"M":[1],"L":[0]}"#).is_err());
        assert!(canonical_form_from_json(r#"{}"#).is_err());
    }

    #[test]
    fn eigstruct_round_trip() {
        let s = SkewKcf::new([
            SkewBlock::H { eig: Point::value(2.0, 0.0), size: 1 },
            SkewBlock::K(1),
            SkewBlock::M(1),
        ])
        .unwrap();
        let e = eigstruct_of_skew_kcf(&s);
        let v = eigstruct_to_json(&e);
        assert_eq!(v["finite"][0]["degrees"], serde_json::json!([1, 1]));
        assert_eq!(v["skew"], serde_json::json!(true));
        assert_eq!(eigstruct_from_json(&v.to_string()).unwrap(), e);
    }

    #[test]
    fn poly_round_trip_and_errors() {
        let p = Pencil::new(CMatrix::identity(2, 3), CMatrix::zeros(2, 3)).unwrap().to_poly();
        let text = matpoly_to_json(&p).to_string();
        assert_eq!(matpoly_from_json(&text).unwrap(), p);
        let err = matpoly_from_json("{\"m\": 2,\n \"d\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(matpoly_from_json(r#"{"m":1,"d":1,"coeffs":[[[[0,0]]]]}"#).is_err());
    }

    #[test]
    fn block_names() {
        assert_eq!(parse_block("M_2").unwrap(), NamedBlock::Skew(SkewBlock::M(2)));
        assert_eq!(parse_block("LT_0").unwrap(), NamedBlock::General(KcfBlock::LT(0)));
        assert_eq!(
            parse_block("H_2(1.5-2i)").unwrap(),
            NamedBlock::Skew(SkewBlock::H { eig: Point::value(1.5, -2.0), size: 2 })
        );
        assert_eq!(
            parse_block("E_1(inf)").unwrap(),
            NamedBlock::General(KcfBlock::E { eig: Eigenvalue::Infinite, size: 1 })
        );
        assert_eq!(
            parse_block("E_3(mu4)").unwrap(),
            NamedBlock::General(KcfBlock::E { eig: Eigenvalue::Finite(Point::Symbol(4)), size: 3 })
        );
        assert_eq!(parse_complex("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("1e-3+2i"), Some(C64::new(1e-3, 2.0)));
        for bad in ["M2", "H_1", "E_0(1)", "K_0", "X_1", "H_1(abc)"] {
            assert!(parse_block(bad).is_err(), "{bad}");
        }
        let h = SkewBlock::H { eig: Point::value(1.0, -0.5), size: 3 };
        assert_eq!(parse_block(&h.to_string()).unwrap(), NamedBlock::Skew(h));
    }
}
