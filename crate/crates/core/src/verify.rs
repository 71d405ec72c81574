//! The acceptance checks, runnable from tests and from the command line.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::canon::{
    build_block, build_skew_block, eigstruct_of_kcf, realize_skew_kcf, Eigenvalue, EigStruct,
    KcfBlock, MatPoly, Point, SkewBlock,
};
use crate::closure::{enumerate_skew_kcfs, skew_dominates, SearchOptions};
use crate::generic::{
    codim_closed_form, codim_poly, codim_sum_formula, generic_skew_pencil, pencil_params_of_poly,
    shifted_linearization_structure, generic_skew_poly, GenericPencilParams, GenericPolyParams,
};
use crate::linearize::{extract, linearize};
use crate::numeric::{recover, tangent_codim, ToleranceModel};
use crate::sampling::{run_experiment, sample_bounded_rank_skew_poly, trial_rng, Experiment};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub tol: ToleranceModel,
    pub seed: u64,
    pub search: SearchOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tol: ToleranceModel::default(), seed: 2024, search: SearchOptions::default() }
    }
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "generic pencil dominates every bounded-rank stratum (n <= 12)"),
    (2, "codimension sum formula equals closed form (n <= 60)"),
    (3, "polynomial and linearization parameters agree (m <= 20, d <= 9)"),
    (4, "numeric recovery reproduces symbolic structure"),
    (5, "tangent-space codimension equals closed form (n <= 10)"),
    (6, "Monte-Carlo genericity of bounded-rank skew pencils"),
    (7, "Monte-Carlo genericity of bounded-rank skew polynomials"),
    (8, "linearization shifts minimal indices; exact round trip"),
];

fn valid_w(n: usize) -> impl Iterator<Item = usize> {
    (1..).take_while(move |w| 2 * w < n)
}

pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionReport {
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => dominance_suite(opts, 12),
        2 => codim_identity(60),
        3 => poly_pencil_identities(20),
        4 => oracle_equivalence(opts),
        5 => tangent_suite(opts, 10),
        6 => monte_carlo(
            opts,
            &[(4, 1), (5, 2), (8, 2), (10, 3)].map(|(n, w)| Experiment::Pencil { n, w }),
            100,
            99,
        ),
        7 => monte_carlo(
            opts,
            &[(4, 1, 3), (3, 1, 3), (5, 1, 3), (5, 2, 3), (4, 1, 5)].map(|(m, r, d)| Experiment::Poly { m, r, d }),
            100,
            99,
        ),
        8 => linearization_suite(opts),
        _ => (false, format!("no criterion {id}")),
    };
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    CriterionReport { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, opts)).collect()
}

/// For every `(n, w)` with `n <= max_n`: the generic form certifies every
/// stratum of rank at most `2w`, and no other stratum dominates the generic one.
pub fn dominance_suite(opts: &VerifyOptions, max_n: usize) -> (bool, String) {
    let cases: Vec<(usize, usize)> = (2..=max_n).flat_map(|n| valid_w(n).map(move |w| (n, w))).collect();
    let results: Vec<Result<(usize, usize), String>> = cases
        .par_iter()
        .map(|&(n, w)| {
            let g = generic_skew_pencil(GenericPencilParams::new(n, w).expect("valid"));
            let strata = enumerate_skew_kcfs(n, 2 * w, 3);
            if !strata.contains(&g) {
                return Err(format!("(n={n}, w={w}): generic form not enumerated"));
            }
            let mut bound = 0;
            for x in &strata {
                let down = skew_dominates(&g, x, opts.search).map_err(|e| format!("(n={n}, w={w}) {x}: {e}"))?;
                if !down.is_certified() {
                    return Err(format!("(n={n}, w={w}): no certificate for {x}"));
                }
                if *x != g {
                    let up = skew_dominates(x, &g, opts.search).map_err(|e| format!("{x}: {e}"))?;
                    if up.is_certified() {
                        return Err(format!("(n={n}, w={w}): {x} also dominates the generic form"));
                    }
                    let s = up.stats();
                    bound += usize::from(s.budget_bound || s.depth_bound);
                }
            }
            Ok((strata.len(), bound))
        })
        .collect();
    let mut strata = 0;
    let mut bound = 0;
    for r in &results {
        match r {
            Ok((s, b)) => {
                strata += s;
                bound += b;
            }
            Err(e) => return (false, e.clone()),
        }
    }
    (
        true,
        format!(
            "{} (n, w) cases, {strata} strata certified, {bound} negative searches hit a search bound",
            cases.len()
        ),
    )
}

pub fn codim_identity(max_n: usize) -> (bool, String) {
    let mut checked = 0;
    for n in 2..=max_n {
        for w in valid_w(n) {
            let g = generic_skew_pencil(GenericPencilParams::new(n, w).expect("valid"));
            let sum = codim_sum_formula(&g).expect("M blocks only");
            let closed = codim_closed_form(n, w).expect("valid");
            if sum != closed {
                return (false, format!("(n={n}, w={w}): sum {sum} != closed form {closed}"));
            }
            checked += 1;
        }
    }
    (true, format!("{checked} (n, w) pairs agree"))
}

pub fn poly_pencil_identities(max_m: usize) -> (bool, String) {
    let mut checked = 0;
    for m in 2..=max_m {
        for r in valid_w(m) {
            for d in [1, 3, 5, 7, 9] {
                let p = GenericPolyParams::new(m, r, d).expect("valid");
                let q = pencil_params_of_poly(m, r, d).expect("valid");
                let fail = |what: &str| (false, format!("(m={m}, r={r}, d={d}): {what}"));
                if q.alpha != p.beta + (d - 1) / 2 {
                    return fail("alpha != beta + (d-1)/2");
                }
                if q.s != p.t {
                    return fail("s != t");
                }
                let shifted = shifted_linearization_structure(&generic_skew_poly(p), d).expect("odd d");
                if shifted != generic_skew_pencil(q).to_kcf() {
                    return fail("shifted polynomial structure differs from the generic pencil");
                }
                if codim_poly(m, r, d) != codim_closed_form(q.n, q.w) {
                    return fail("codimensions differ");
                }
                checked += 1;
            }
        }
    }
    (true, format!("{checked} (m, r, d) triples agree"))
}

fn check_recovery(p: &MatPoly, e: &EigStruct, rank: usize, tol: &ToleranceModel) -> Result<(), String> {
    let rec = recover(p, tol).map_err(|err| err.to_string())?;
    let expected = (rank, e.right.clone(), e.left.clone(), e.divisor_degree_sum());
    let got = (rec.normal_rank, rec.right, rec.left, rec.divisor_degree_sum);
    if got != expected {
        return Err(format!("expected {expected:?}, recovered {got:?}"));
    }
    Ok(())
}

pub fn oracle_equivalence(opts: &VerifyOptions) -> (bool, String) {
    let mu = Point::value(2.0, -1.0);
    let mut blocks = Vec::new();
    for k in 0..=6 {
        blocks.push(KcfBlock::L(k));
        blocks.push(KcfBlock::LT(k));
        if k > 0 {
            blocks.push(KcfBlock::E { eig: mu.into(), size: k });
            blocks.push(KcfBlock::E { eig: Eigenvalue::Infinite, size: k });
        }
    }
    let mut failures = Vec::new();
    let mut checked = 0;
    for b in &blocks {
        let kcf = crate::canon::Kcf::new([*b]).expect("valid");
        let p = build_block(b).expect("numeric").to_poly();
        if let Err(e) = check_recovery(&p, &eigstruct_of_kcf(&kcf), b.rank(), &opts.tol) {
            failures.push(format!("{b}: {e}"));
        }
        checked += 1;
    }
    let mut skew_blocks = Vec::new();
    for k in 0..=6 {
        skew_blocks.push(SkewBlock::M(k));
        if k > 0 {
            skew_blocks.push(SkewBlock::K(k));
            skew_blocks.push(SkewBlock::H { eig: mu, size: k });
        }
    }
    for b in &skew_blocks {
        let s = crate::canon::SkewKcf::new([*b]).expect("valid");
        let p = build_skew_block(b).expect("numeric").to_poly();
        if let Err(e) = check_recovery(&p, &eigstruct_of_kcf(&s.to_kcf()), b.rank(), &opts.tol) {
            failures.push(format!("{b}: {e}"));
        }
        checked += 1;
    }
    for n in 2..=10 {
        for w in valid_w(n) {
            let g = generic_skew_pencil(GenericPencilParams::new(n, w).expect("valid"));
            let p = realize_skew_kcf(&g).expect("numeric").to_poly();
            if let Err(e) = check_recovery(&p, &eigstruct_of_kcf(&g.to_kcf()), 2 * w, &opts.tol) {
                failures.push(format!("{g}: {e}"));
            }
            checked += 1;
        }
    }
    if failures.is_empty() {
        (true, format!("{checked} structures recovered exactly"))
    } else {
        (false, format!("{} of {checked} failed: {}", failures.len(), failures.join("; ")))
    }
}

pub fn tangent_suite(opts: &VerifyOptions, max_n: usize) -> (bool, String) {
    let mut checked = 0;
    for n in 2..=max_n {
        for w in valid_w(n) {
            let g = generic_skew_pencil(GenericPencilParams::new(n, w).expect("valid"));
            let p = realize_skew_kcf(&g).expect("numeric");
            let got = match tangent_codim(&p, &opts.tol) {
                Ok(c) => c,
                Err(e) => return (false, format!("(n={n}, w={w}): {e}")),
            };
            let want = codim_closed_form(n, w).expect("valid");
            if got != want {
                return (false, format!("(n={n}, w={w}): tangent codimension {got}, closed form {want}"));
            }
            checked += 1;
        }
    }
    (true, format!("{checked} (n, w) pairs agree"))
}

pub fn monte_carlo(opts: &VerifyOptions, exps: &[Experiment], trials: usize, needed: usize) -> (bool, String) {
    let mut passed = true;
    let mut parts = Vec::new();
    for exp in exps {
        match run_experiment(*exp, trials, &opts.tol, opts.seed) {
            Ok(r) => {
                passed &= r.passes(needed);
                parts.push(format!("{}: {}/{}", describe(exp), r.matches, r.trials));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("{}: {e}", describe(exp)));
            }
        }
    }
    (passed, parts.join(", "))
}

fn describe(e: &Experiment) -> String {
    match e {
        Experiment::Pencil { n, w } => format!("({n},{w})"),
        Experiment::Poly { m, r, d } | Experiment::Linearization { m, r, d } => format!("({m},{r},{d})"),
    }
}

pub fn linearization_suite(opts: &VerifyOptions) -> (bool, String) {
    let configs = [(4, 1, 3), (3, 1, 5)];
    let exps = configs.map(|(m, r, d)| Experiment::Linearization { m, r, d });
    let (mut passed, detail) = monte_carlo(opts, &exps, 50, 49);
    let mut round_trips = 0;
    let mut total = 0;
    for (m, r, d) in configs {
        for t in 0..50 {
            let p = sample_bounded_rank_skew_poly(m, r, d, &mut trial_rng(opts.seed, t)).expect("valid");
            total += 1;
            if linearize(&p).and_then(|g| extract(&g)).is_ok_and(|q| q == p) {
                round_trips += 1;
            }
        }
    }
    passed &= round_trips == total;
    (passed, format!("{detail}; round trip exact {round_trips}/{total}"))
}
