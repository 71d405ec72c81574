//! Random bounded-rank skew pencils and polynomials, and Monte-Carlo checks of
//! their generic structure.
//!
//! A sample is `T^T [[0, R], [-R^T, 0]] T` with `R` a random `w x (n - w)`
//! pencil (or grade-`d` polynomial) and `T` a random invertible matrix, both
//! with iid standard complex Gaussian entries. Each trial draws from its own
//! ChaCha stream selected by the trial index, so results do not depend on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::canon::{wedge, C64, CMatrix, MatPoly, Pencil};
use crate::generic::{
    generic_skew_pencil, generic_skew_poly, GenericError, GenericPencilParams, GenericPolyParams,
};
use crate::linearize::{linearize, predicted_indices};
use crate::numeric::{recover, RecoveredStructure, ToleranceModel};

/// Condition threshold below which a congruence matrix is redrawn.
const MIN_CONDITION: f64 = 1e-8;

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

fn invertible_matrix<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let t = gaussian_matrix(rng, n, n);
        let s = t.clone().singular_values();
        if s.min() >= MIN_CONDITION * s.max() {
            return t;
        }
    }
}

/// `T^T X T` with the skew symmetry imposed exactly.
fn congruence(t: &CMatrix, x: &CMatrix) -> CMatrix {
    let full = t.transpose() * x * t;
    let n = full.nrows();
    CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => full[(i, j)],
        std::cmp::Ordering::Equal => C64::new(0.0, 0.0),
        std::cmp::Ordering::Greater => C64::new(0.0 - full[(j, i)].re, 0.0 - full[(j, i)].im),
    })
}

fn sample_wedge_poly<R: rand::Rng + ?Sized>(rng: &mut R, m: usize, r: usize, d: usize) -> MatPoly {
    let rs: Vec<CMatrix> = (0..=d).map(|_| gaussian_matrix(rng, r, m - r)).collect();
    let t = invertible_matrix(rng, m);
    MatPoly::new(rs.iter().map(|x| congruence(&t, &wedge(x))).collect())
        .expect("d + 1 >= 2 coefficients of equal shape")
}

/// Skew pencil of size `n` and rank at most `2w`.
pub fn sample_bounded_rank_skew_pencil<R: rand::Rng + ?Sized>(
    n: usize,
    w: usize,
    rng: &mut R,
) -> Result<Pencil, GenericError> {
    GenericPencilParams::new(n, w)?;
    Ok(sample_wedge_poly(rng, n, w, 1).as_pencil().expect("grade 1"))
}

/// Skew polynomial of size `m`, odd grade `d` and rank at most `2r`.
pub fn sample_bounded_rank_skew_poly<R: rand::Rng + ?Sized>(
    m: usize,
    r: usize,
    d: usize,
    rng: &mut R,
) -> Result<MatPoly, GenericError> {
    GenericPolyParams::new(m, r, d)?;
    Ok(sample_wedge_poly(rng, m, r, d))
}

/// RNG for one trial: the master seed selects the key, the trial the stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Experiment {
    Pencil { n: usize, w: usize },
    Poly { m: usize, r: usize, d: usize },
    Linearization { m: usize, r: usize, d: usize },
}

impl Experiment {
    pub fn label(&self) -> &'static str {
        match self {
            Experiment::Pencil { .. } => "genericity",
            Experiment::Poly { .. } => "consistency check",
            Experiment::Linearization { .. } => "index shift",
        }
    }
}

/// Structure a trial is compared on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub normal_rank: usize,
    pub right: Vec<usize>,
    pub left: Vec<usize>,
    pub divisor_degree_sum: usize,
}

impl From<&RecoveredStructure> for Signature {
    fn from(r: &RecoveredStructure) -> Self {
        Signature {
            normal_rank: r.normal_rank,
            right: r.right.clone(),
            left: r.left.clone(),
            divisor_degree_sum: r.divisor_degree_sum,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mismatch {
    pub trial: usize,
    pub seed: u64,
    pub expected: Signature,
    pub recovered: Option<Signature>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditSummary {
    pub low_confidence_decisions: usize,
    pub min_gap: Option<f64>,
    pub errors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub label: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub matches: usize,
    pub mismatches: Vec<Mismatch>,
    pub audit: AuditSummary,
}

impl ExperimentReport {
    pub fn passes(&self, min_matches: usize) -> bool {
        self.matches >= min_matches
    }
}

struct TrialOutcome {
    expected: Signature,
    recovered: Result<Signature, String>,
    low_confidence: usize,
    min_gap: Option<f64>,
}

fn audit_of(r: &RecoveredStructure) -> (usize, Option<f64>) {
    (r.low_confidence(), r.min_gap())
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn run_trial(exp: Experiment, tol: &ToleranceModel, seed: u64, trial: usize) -> Result<TrialOutcome, GenericError> {
    let mut rng = trial_rng(seed, trial);
    match exp {
        Experiment::Pencil { n, w } => {
            let g = generic_skew_pencil(GenericPencilParams::new(n, w)?);
            let m = g.m_indices();
            let expected = Signature { normal_rank: 2 * w, right: m.clone(), left: m, divisor_degree_sum: 0 };
            let p = sample_bounded_rank_skew_pencil(n, w, &mut rng)?;
            Ok(outcome(expected, recover(&p.to_poly(), tol)))
        }
        Experiment::Poly { m, r, d } => {
            let e = generic_skew_poly(GenericPolyParams::new(m, r, d)?);
            let expected =
                Signature { normal_rank: 2 * r, right: e.right, left: e.left, divisor_degree_sum: 0 };
            let p = sample_bounded_rank_skew_poly(m, r, d, &mut rng)?;
            Ok(outcome(expected, recover(&p, tol)))
        }
        Experiment::Linearization { m, r, d } => {
            let p = sample_bounded_rank_skew_poly(m, r, d, &mut rng)?;
            let base = match recover(&p, tol) {
                Ok(b) => b,
                Err(e) => {
                    // nothing to predict from; compare against the generic structure
                    let g = generic_skew_poly(GenericPolyParams::new(m, r, d)?);
                    let expected = Signature {
                        normal_rank: m * (d - 1) + 2 * r,
                        right: predicted_indices(&g.right, d).expect("odd d"),
                        left: predicted_indices(&g.left, d).expect("odd d"),
                        divisor_degree_sum: 0,
                    };
                    return Ok(TrialOutcome {
                        expected,
                        recovered: Err(format!("polynomial: {e}")),
                        low_confidence: 0,
                        min_gap: None,
                    });
                }
            };
            let expected = Signature {
                normal_rank: m * (d - 1) + base.normal_rank,
                right: predicted_indices(&base.right, d).expect("odd d"),
                left: predicted_indices(&base.left, d).expect("odd d"),
                divisor_degree_sum: base.divisor_degree_sum,
            };
            let lin = linearize(&p).expect("sampled polynomial is skew with odd grade");
            let mut out = outcome(expected, recover(&lin.pencil.to_poly(), tol));
            let (lc, gap) = audit_of(&base);
            out.low_confidence += lc;
            out.min_gap = min_opt(out.min_gap, gap);
            Ok(out)
        }
    }
}

fn outcome(
    expected: Signature,
    rec: Result<RecoveredStructure, crate::numeric::NumericError>,
) -> TrialOutcome {
    match rec {
        Ok(r) => {
            let (low_confidence, min_gap) = audit_of(&r);
            TrialOutcome { expected, recovered: Ok(Signature::from(&r)), low_confidence, min_gap }
        }
        Err(e) => TrialOutcome { expected, recovered: Err(e.to_string()), low_confidence: 0, min_gap: None },
    }
}

/// Samples `trials` instances, recovers their structure and compares it with
/// the predicted generic one.
pub fn run_experiment(
    exp: Experiment,
    trials: usize,
    tol: &ToleranceModel,
    seed: u64,
) -> Result<ExperimentReport, GenericError> {
    let outcomes: Vec<TrialOutcome> =
        (0..trials).into_par_iter().map(|t| run_trial(exp, tol, seed, t)).collect::<Result<_, _>>()?;
    let mut report = ExperimentReport {
        experiment: exp,
        label: exp.label(),
        seed,
        trials,
        matches: 0,
        mismatches: Vec::new(),
        audit: AuditSummary::default(),
    };
    for (trial, o) in outcomes.into_iter().enumerate() {
        report.audit.low_confidence_decisions += o.low_confidence;
        report.audit.min_gap = min_opt(report.audit.min_gap, o.min_gap);
        match o.recovered {
            Ok(sig) if sig == o.expected => report.matches += 1,
            Ok(sig) => report.mismatches.push(Mismatch {
                trial,
                seed,
                expected: o.expected,
                recovered: Some(sig),
                error: None,
            }),
            Err(e) => {
                report.audit.errors += 1;
                report.mismatches.push(Mismatch {
                    trial,
                    seed,
                    expected: o.expected,
                    recovered: None,
                    error: Some(e),
                });
            }
        }
    }
    Ok(report)
}
