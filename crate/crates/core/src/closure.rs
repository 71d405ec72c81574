//! Orbit-closure dominance between canonical forms.
//!
//! One Kronecker form lies in the orbit closure of another exactly when it can
//! be rewritten into it by a finite sequence of six block degeneration rules
//! (written `X ~> Y`, the blocks `X` of the less generic form replaced by the
//! blocks `Y` of a more generic one):
//!
//! 1. `L_{j-1} + L_{k+1} ~> L_j + L_k`, `1 <= j <= k`
//! 2. the same for `L^T` blocks
//! 3. `L_j + E_{k+1}(mu) ~> L_{j+1} + E_k(mu)`
//! 4. the same for `L^T` blocks
//! 5. `E_j(mu) + E_k(mu) ~> E_{j-1}(mu) + E_{k+1}(mu)`, `1 <= j <= k`
//! 6. `L_p + L_q^T ~> E_{k_1}(mu_1) + ... + E_{k_t}(mu_t)` with
//!    `p + q + 1 = sum k_i` and pairwise distinct `mu_i`
//!
//! where `E_0` is the empty block. [`dominates`] runs a breadth-first search
//! over these rewrites and returns a replayable [`ClosureCertificate`].
//! For skew-symmetric forms, [`skew_dominates`] applies the rules in mirrored
//! pairs so every intermediate form stays the image of a skew canonical form.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::canon::{Eigenvalue, Kcf, KcfBlock, Point, SkewBlock, SkewKcf};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosureError {
    #[error("rule not applicable: {0}")]
    NotApplicable(String),
    #[error("dimension mismatch: target is {0}x{1}, source is {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("unpaired certificate")]
    UnpairedCertificate,
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
}

/// One application of a degeneration rule, with all of its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleApplication {
    /// Rule 1: `L_{j-1} + L_{k+1} ~> L_j + L_k`.
    BalanceRight { j: usize, k: usize },
    /// Rule 2: `L^T_{j-1} + L^T_{k+1} ~> L^T_j + L^T_k`.
    BalanceLeft { j: usize, k: usize },
    /// Rule 3: `L_j + E_{k+1}(mu) ~> L_{j+1} + E_k(mu)`.
    AbsorbRight { j: usize, k: usize, eig: Eigenvalue },
    /// Rule 4: `L^T_j + E_{k+1}(mu) ~> L^T_{j+1} + E_k(mu)`.
    AbsorbLeft { j: usize, k: usize, eig: Eigenvalue },
    /// Rule 5: `E_j(mu) + E_k(mu) ~> E_{j-1}(mu) + E_{k+1}(mu)`.
    Coalesce { j: usize, k: usize, eig: Eigenvalue },
    /// Rule 6: `L_p + L^T_q ~> sum E_{k_i}(mu_i)`. `parts` is kept sorted.
    Regularize { p: usize, q: usize, parts: Vec<(usize, Eigenvalue)> },
}

impl RuleApplication {
    pub fn regularize(p: usize, q: usize, mut parts: Vec<(usize, Eigenvalue)>) -> Self {
        parts.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        RuleApplication::Regularize { p, q, parts }
    }

    pub fn rule_id(&self) -> u8 {
        match self {
            RuleApplication::BalanceRight { .. } => 1,
            RuleApplication::BalanceLeft { .. } => 2,
            RuleApplication::AbsorbRight { .. } => 3,
            RuleApplication::AbsorbLeft { .. } => 4,
            RuleApplication::Coalesce { .. } => 5,
            RuleApplication::Regularize { .. } => 6,
        }
    }

    /// Checks the index relations the rule template requires.
    pub fn check(&self) -> Result<(), ClosureError> {
        match self {
            RuleApplication::BalanceRight { j, k } | RuleApplication::BalanceLeft { j, k } => {
                if *j < 1 || j > k {
                    return Err(ClosureError::NotApplicable(format!(
                        "rule {} needs 1 <= j <= k, got j={j}, k={k}",
                        self.rule_id()
                    )));
                }
            }
            RuleApplication::Coalesce { j, k, .. } => {
                if *j < 1 || j > k {
                    return Err(ClosureError::NotApplicable(format!(
                        "rule 5 needs 1 <= j <= k, got j={j}, k={k}"
                    )));
                }
            }
            RuleApplication::AbsorbRight { .. } | RuleApplication::AbsorbLeft { .. } => {}
            RuleApplication::Regularize { p, q, parts } => {
                let total: usize = parts.iter().map(|(k, _)| k).sum();
                if parts.iter().any(|(k, _)| *k == 0) {
                    return Err(ClosureError::NotApplicable("rule 6 parts must be >= 1".into()));
                }
                if total != p + q + 1 {
                    return Err(ClosureError::NotApplicable(format!(
                        "rule 6 needs p+q+1 = sum k_i, got {} != {total}",
                        p + q + 1
                    )));
                }
                let mut eigs: Vec<Eigenvalue> = parts.iter().map(|(_, e)| *e).collect();
                eigs.sort_unstable();
                if eigs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(ClosureError::NotApplicable(
                        "rule 6 needs pairwise distinct eigenvalues".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn consumed(&self) -> Vec<KcfBlock> {
        match *self {
            RuleApplication::BalanceRight { j, k } => vec![KcfBlock::L(j - 1), KcfBlock::L(k + 1)],
            RuleApplication::BalanceLeft { j, k } => vec![KcfBlock::LT(j - 1), KcfBlock::LT(k + 1)],
            RuleApplication::AbsorbRight { j, k, eig } => {
                vec![KcfBlock::L(j), KcfBlock::E { eig, size: k + 1 }]
            }
            RuleApplication::AbsorbLeft { j, k, eig } => {
                vec![KcfBlock::LT(j), KcfBlock::E { eig, size: k + 1 }]
            }
            RuleApplication::Coalesce { j, k, eig } => {
                vec![KcfBlock::E { eig, size: j }, KcfBlock::E { eig, size: k }]
            }
            RuleApplication::Regularize { p, q, .. } => vec![KcfBlock::L(p), KcfBlock::LT(q)],
        }
    }

    /// Produced blocks; `E_0` is dropped.
    pub fn produced(&self) -> Vec<KcfBlock> {
        let e = |eig, size| (size > 0).then_some(KcfBlock::E { eig, size });
        match self {
            RuleApplication::BalanceRight { j, k } => vec![KcfBlock::L(*j), KcfBlock::L(*k)],
            RuleApplication::BalanceLeft { j, k } => vec![KcfBlock::LT(*j), KcfBlock::LT(*k)],
            RuleApplication::AbsorbRight { j, k, eig } => {
                std::iter::once(KcfBlock::L(j + 1)).chain(e(*eig, *k)).collect()
            }
            RuleApplication::AbsorbLeft { j, k, eig } => {
                std::iter::once(KcfBlock::LT(j + 1)).chain(e(*eig, *k)).collect()
            }
            RuleApplication::Coalesce { j, k, eig } => {
                e(*eig, j - 1).into_iter().chain(e(*eig, k + 1)).collect()
            }
            RuleApplication::Regularize { parts, .. } => {
                parts.iter().map(|&(size, eig)| KcfBlock::E { eig, size }).collect()
            }
        }
    }

    /// The transposed counterpart of this application.
    pub fn mirror(&self) -> RuleApplication {
        match self {
            RuleApplication::BalanceRight { j, k } => RuleApplication::BalanceLeft { j: *j, k: *k },
            RuleApplication::BalanceLeft { j, k } => RuleApplication::BalanceRight { j: *j, k: *k },
            RuleApplication::AbsorbRight { j, k, eig } => {
                RuleApplication::AbsorbLeft { j: *j, k: *k, eig: *eig }
            }
            RuleApplication::AbsorbLeft { j, k, eig } => {
                RuleApplication::AbsorbRight { j: *j, k: *k, eig: *eig }
            }
            RuleApplication::Coalesce { .. } => self.clone(),
            RuleApplication::Regularize { p, q, parts } => {
                RuleApplication::Regularize { p: *q, q: *p, parts: parts.clone() }
            }
        }
    }
}

impl fmt::Display for RuleApplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<KcfBlock>| {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" + ")
        };
        write!(
            f,
            "rule {}: {} ~> {}",
            self.rule_id(),
            join(self.consumed()),
            if self.produced().is_empty() { "0".to_string() } else { join(self.produced()) }
        )
    }
}

/// Removes `consumed` and inserts `produced`, keeping the vector sorted.
fn rewrite(state: &[KcfBlock], app: &RuleApplication) -> Option<Vec<KcfBlock>> {
    let mut out = state.to_vec();
    for b in app.consumed() {
        let pos = out.iter().position(|x| *x == b)?;
        out.remove(pos);
    }
    for b in app.produced() {
        let pos = out.partition_point(|x| *x < b);
        out.insert(pos, b);
    }
    Some(out)
}

/// Applies one rule to a Kronecker form.
pub fn apply_rule(kcf: &Kcf, app: &RuleApplication) -> Result<Kcf, ClosureError> {
    app.check()?;
    let blocks = rewrite(kcf.blocks(), app).ok_or_else(|| {
        ClosureError::NotApplicable(format!(
            "{} needs blocks {:?} which are not all present in {kcf}",
            app,
            app.consumed().iter().map(ToString::to_string).collect::<Vec<_>>()
        ))
    })?;
    Ok(Kcf::from_blocks_unchecked(blocks))
}

/// Step `i` of a certificate, in the serialized form.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateStep {
    pub rule: u8,
    pub consumed: Vec<String>,
    pub produced: Vec<String>,
}

/// A replayable sequence of rule applications from `source` to `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureCertificate {
    pub source: Kcf,
    pub target: Kcf,
    pub steps: Vec<RuleApplication>,
}

impl ClosureCertificate {
    pub fn identity(kcf: &Kcf) -> Self {
        ClosureCertificate { source: kcf.clone(), target: kcf.clone(), steps: Vec::new() }
    }

    /// Replays the steps from the source and checks every step's invariants.
    pub fn replay(&self) -> Result<Kcf, ClosureError> {
        let mut cur = self.source.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let next = apply_rule(&cur, step)?;
            if (next.rows(), next.cols()) != (cur.rows(), cur.cols()) {
                return Err(ClosureError::InvalidCertificate(format!("step {i} changed the size")));
            }
            let expected_rank = cur.rank() + usize::from(step.rule_id() == 6);
            if next.rank() != expected_rank {
                return Err(ClosureError::InvalidCertificate(format!(
                    "step {i} changed the rank from {} to {}",
                    cur.rank(),
                    next.rank()
                )));
            }
            cur = next;
        }
        Ok(cur)
    }

    pub fn verify(&self) -> Result<(), ClosureError> {
        let end = self.replay()?;
        if end != self.target {
            return Err(ClosureError::InvalidCertificate(format!(
                "replay ends at {end}, expected {}",
                self.target
            )));
        }
        Ok(())
    }

    /// `self` certifies `b` from `a`, `next` certifies `c` from `b`; the
    /// concatenation certifies `c` from `a`.
    pub fn compose(&self, next: &ClosureCertificate) -> Result<ClosureCertificate, ClosureError> {
        if self.target != next.source {
            return Err(ClosureError::InvalidCertificate(
                "certificates do not chain".to_string(),
            ));
        }
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().cloned());
        Ok(ClosureCertificate { source: self.source.clone(), target: next.target.clone(), steps })
    }

    /// True if the steps can be grouped into mirrored pairs.
    pub fn is_paired(&self) -> bool {
        let mut counts: HashMap<&RuleApplication, usize> = HashMap::new();
        for s in &self.steps {
            *counts.entry(s).or_default() += 1;
        }
        counts.iter().all(|(app, &c)| {
            let m = app.mirror();
            if m == **app {
                c % 2 == 0
            } else {
                counts.get(&m).copied().unwrap_or(0) == c
            }
        })
    }

    pub fn serialized_steps(&self) -> Vec<CertificateStep> {
        self.steps
            .iter()
            .map(|s| CertificateStep {
                rule: s.rule_id(),
                consumed: s.consumed().iter().map(ToString::to_string).collect(),
                produced: s.produced().iter().map(ToString::to_string).collect(),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchOptions {
    /// Fresh eigenvalue labels rule 6 may have in play at once; default `n + 1`.
    pub eig_budget: Option<usize>,
    /// Maximum certificate length; default `4 n`.
    pub depth_cap: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub states: usize,
    /// Some rule-6 move was restricted by the fresh-label budget.
    pub budget_bound: bool,
    /// Some state was cut off by the depth cap.
    pub depth_bound: bool,
}

#[derive(Clone, Debug)]
pub enum Dominance {
    Certified { certificate: ClosureCertificate, stats: SearchStats },
    NotDominated(SearchStats),
}

impl Dominance {
    pub fn certificate(&self) -> Option<&ClosureCertificate> {
        match self {
            Dominance::Certified { certificate, .. } => Some(certificate),
            Dominance::NotDominated(_) => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        self.certificate().is_some()
    }

    pub fn stats(&self) -> SearchStats {
        match self {
            Dominance::Certified { stats, .. } | Dominance::NotDominated(stats) => *stats,
        }
    }
}

struct Node {
    state: Vec<KcfBlock>,
    parent: usize,
    via: Vec<RuleApplication>,
    depth: usize,
}

/// Breadth-first search over rule applications.
///
/// Labels produced by rule 6 that appear in neither endpoint are "fresh"; they
/// are interchangeable, so visited states are keyed up to a relabelling of
/// fresh labels. Concrete labels are kept on the path so that the certificate
/// replays exactly.
struct Search {
    target: Vec<KcfBlock>,
    target_rank: usize,
    fixed: Vec<Eigenvalue>,
    fresh_base: u32,
    budget: usize,
    depth_cap: usize,
    paired: bool,
    stats: SearchStats,
}

fn point_symbols(kcf: &Kcf) -> impl Iterator<Item = u32> + '_ {
    kcf.blocks().iter().filter_map(|b| match b {
        KcfBlock::E { eig: Eigenvalue::Finite(Point::Symbol(id)), .. } => Some(*id),
        _ => None,
    })
}

impl Search {
    fn new(target: &Kcf, source: &Kcf, opts: SearchOptions, paired: bool) -> Self {
        let n = target.rows().max(target.cols());
        let fresh_base = point_symbols(target)
            .chain(point_symbols(source))
            .max()
            .map_or(0, |m| m + 1)
            .max(1_000_000);
        let mut fixed: Vec<Eigenvalue> = target
            .eigenvalues()
            .into_iter()
            .chain(source.eigenvalues())
            .filter(|e| *e != Eigenvalue::Infinite)
            .collect();
        fixed.sort_unstable();
        fixed.dedup();
        fixed.insert(0, Eigenvalue::Infinite);
        Search {
            target: target.blocks().to_vec(),
            target_rank: target.rank(),
            fixed,
            fresh_base,
            budget: opts.eig_budget.unwrap_or(n + 1),
            depth_cap: opts.depth_cap.unwrap_or(4 * n),
            paired,
            stats: SearchStats::default(),
        }
    }

    fn is_fresh(&self, e: &Eigenvalue) -> bool {
        matches!(e, Eigenvalue::Finite(Point::Symbol(id)) if *id >= self.fresh_base)
    }

    fn fresh_present(&self, state: &[KcfBlock]) -> Vec<Eigenvalue> {
        let mut v: Vec<Eigenvalue> = state
            .iter()
            .filter_map(|b| match b {
                KcfBlock::E { eig, .. } if self.is_fresh(eig) => Some(*eig),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn key(&self, state: &[KcfBlock]) -> Vec<KcfBlock> {
        let fresh = self.fresh_present(state);
        if fresh.is_empty() {
            return state.to_vec();
        }
        let mut sigs: Vec<(Vec<usize>, Eigenvalue)> = fresh
            .iter()
            .map(|f| {
                let sizes = state
                    .iter()
                    .filter_map(|b| match b {
                        KcfBlock::E { eig, size } if eig == f => Some(*size),
                        _ => None,
                    })
                    .collect();
                (sizes, *f)
            })
            .collect();
        sigs.sort();
        let rename: HashMap<Eigenvalue, Eigenvalue> = sigs
            .iter()
            .enumerate()
            .map(|(i, (_, e))| {
                (*e, Eigenvalue::Finite(Point::Symbol(self.fresh_base + i as u32)))
            })
            .collect();
        let mut out: Vec<KcfBlock> = state
            .iter()
            .map(|b| match b {
                KcfBlock::E { eig, size } => {
                    KcfBlock::E { eig: *rename.get(eig).unwrap_or(eig), size: *size }
                }
                other => *other,
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// All single rule applications on `state`; `rank_room` bounds rule 6.
    fn moves(&mut self, state: &[KcfBlock], allow_rule6: bool) -> Vec<RuleApplication> {
        let mut distinct = state.to_vec();
        distinct.dedup();
        let ls: Vec<usize> = distinct
            .iter()
            .filter_map(|b| if let KcfBlock::L(k) = b { Some(*k) } else { None })
            .collect();
        let lts: Vec<usize> = distinct
            .iter()
            .filter_map(|b| if let KcfBlock::LT(k) = b { Some(*k) } else { None })
            .collect();
        let es: Vec<(Eigenvalue, usize)> = distinct
            .iter()
            .filter_map(|b| if let KcfBlock::E { eig, size } = b { Some((*eig, *size)) } else { None })
            .collect();
        let count = |b: &KcfBlock| state.iter().filter(|x| *x == b).count();

        let mut out = Vec::new();
        for (i, &a) in ls.iter().enumerate() {
            for &b in &ls[..i] {
                // ls is descending
                if b >= a + 2 {
                    out.push(RuleApplication::BalanceRight { j: a + 1, k: b - 1 });
                }
            }
        }
        if !self.paired {
            for (i, &a) in lts.iter().enumerate() {
                for &b in &lts[..i] {
                    if b >= a + 2 {
                        out.push(RuleApplication::BalanceLeft { j: a + 1, k: b - 1 });
                    }
                }
            }
        }
        for &(eig, size) in &es {
            for &j in &ls {
                out.push(RuleApplication::AbsorbRight { j, k: size - 1, eig });
            }
            if !self.paired {
                for &j in &lts {
                    out.push(RuleApplication::AbsorbLeft { j, k: size - 1, eig });
                }
            }
        }
        for (x, &(eig_a, a)) in es.iter().enumerate() {
            for &(eig_b, b) in &es[x..] {
                if eig_a != eig_b {
                    continue;
                }
                let (j, k) = if a <= b { (a, b) } else { (b, a) };
                if j == k && count(&KcfBlock::E { eig: eig_a, size: j }) < 2 {
                    continue;
                }
                out.push(RuleApplication::Coalesce { j, k, eig: eig_a });
            }
        }
        if allow_rule6 {
            let present = self.fresh_present(state);
            let room = self.budget.saturating_sub(present.len());
            let mut candidates = self.fixed.clone();
            candidates.extend(present.iter().copied());
            let n_old = candidates.len();
            let mut next_id = self.fresh_base;
            let mut added = 0;
            while added < room {
                let e = Eigenvalue::Finite(Point::Symbol(next_id));
                if !present.contains(&e) {
                    candidates.push(e);
                    added += 1;
                }
                next_id += 1;
            }
            for &p in &ls {
                for &q in &lts {
                    let total = p + q + 1;
                    if room < total {
                        self.stats.budget_bound = true;
                    }
                    for parts in partitions(total) {
                        assign_labels(&parts, &candidates, n_old, &mut |labelled| {
                            out.push(RuleApplication::regularize(p, q, labelled));
                        });
                    }
                }
            }
        }
        out
    }

    fn successors(&mut self, state: &[KcfBlock]) -> Vec<(Vec<RuleApplication>, Vec<KcfBlock>)> {
        let rank: usize = state.iter().map(KcfBlock::rank).sum();
        let step6 = if self.paired { 2 } else { 1 };
        let allow6 = rank + step6 <= self.target_rank;
        let moves = self.moves(state, allow6);
        let mut out = Vec::with_capacity(moves.len());
        for app in moves {
            let Some(s1) = rewrite(state, &app) else { continue };
            if self.paired {
                let m = app.mirror();
                if let Some(s2) = rewrite(&s1, &m) {
                    out.push((vec![app, m], s2));
                }
            } else {
                out.push((vec![app], s1));
            }
        }
        out
    }

    fn run(mut self, source: &Kcf, target: &Kcf) -> Dominance {
        let target_key = self.key(&self.target.clone());
        let mut nodes = vec![Node {
            state: source.blocks().to_vec(),
            parent: usize::MAX,
            via: Vec::new(),
            depth: 0,
        }];
        let mut seen: HashSet<Vec<KcfBlock>> = HashSet::new();
        seen.insert(self.key(source.blocks()));
        let mut head = 0;
        while head < nodes.len() {
            if self.key(&nodes[head].state) == target_key {
                self.stats.states = seen.len();
                let mut steps = Vec::new();
                let mut at = head;
                while at != 0 {
                    steps.splice(0..0, nodes[at].via.iter().cloned());
                    at = nodes[at].parent;
                }
                let certificate =
                    ClosureCertificate { source: source.clone(), target: target.clone(), steps };
                return Dominance::Certified { certificate, stats: self.stats };
            }
            let depth = nodes[head].depth;
            let state = nodes[head].state.clone();
            for (via, next) in self.successors(&state) {
                let d = depth + via.len();
                if d > self.depth_cap {
                    self.stats.depth_bound = true;
                    continue;
                }
                if seen.insert(self.key(&next)) {
                    nodes.push(Node { state: next, parent: head, via, depth: d });
                }
            }
            head += 1;
        }
        self.stats.states = seen.len();
        Dominance::NotDominated(self.stats)
    }
}

/// Partitions of `n` as non-increasing part lists.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            go(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Injective labellings of `parts` from `candidates`. Equal consecutive parts
/// take increasing candidate indices, and candidates at or beyond `n_old`
/// (unused fresh labels) are taken in order.
fn assign_labels(
    parts: &[usize],
    candidates: &[Eigenvalue],
    n_old: usize,
    emit: &mut dyn FnMut(Vec<(usize, Eigenvalue)>),
) {
    fn go(
        i: usize,
        parts: &[usize],
        candidates: &[Eigenvalue],
        n_old: usize,
        used: &mut Vec<usize>,
        emit: &mut dyn FnMut(Vec<(usize, Eigenvalue)>),
    ) {
        if i == parts.len() {
            emit(parts.iter().zip(used.iter()).map(|(&k, &c)| (k, candidates[c])).collect());
            return;
        }
        let lo = if i > 0 && parts[i] == parts[i - 1] { used[i - 1] + 1 } else { 0 };
        let next_new = n_old + used.iter().filter(|&&c| c >= n_old).count();
        for c in lo..candidates.len() {
            if used.contains(&c) || (c >= n_old && c != next_new) {
                continue;
            }
            used.push(c);
            go(i + 1, parts, candidates, n_old, used, emit);
            used.pop();
        }
    }
    go(0, parts, candidates, n_old, &mut Vec::new(), emit);
}

fn check_dims(target: &Kcf, source: &Kcf) -> Result<(), ClosureError> {
    if (target.rows(), target.cols()) != (source.rows(), source.cols()) {
        return Err(ClosureError::DimensionMismatch(
            target.rows(),
            target.cols(),
            source.rows(),
            source.cols(),
        ));
    }
    Ok(())
}

/// Is the orbit of `source` contained in the orbit closure of `target`?
pub fn dominates(target: &Kcf, source: &Kcf, opts: SearchOptions) -> Result<Dominance, ClosureError> {
    check_dims(target, source)?;
    let result = Search::new(target, source, opts, false).run(source, target);
    if let Some(cert) = result.certificate() {
        cert.verify()?;
    }
    Ok(result)
}

/// Skew-symmetric dominance: the search applies each rule together with its
/// mirror, and the certificate is checked to be pairable.
pub fn skew_dominates(
    target: &SkewKcf,
    source: &SkewKcf,
    opts: SearchOptions,
) -> Result<Dominance, ClosureError> {
    let (t, s) = (target.to_kcf(), source.to_kcf());
    check_dims(&t, &s)?;
    let result = Search::new(&t, &s, opts, true).run(&s, &t);
    if let Some(cert) = result.certificate() {
        cert.verify()?;
        if !cert.is_paired() {
            return Err(ClosureError::UnpairedCertificate);
        }
    }
    Ok(result)
}

/// All skew canonical forms of size `n` and rank at most `max_rank`, with `H`
/// eigenvalues drawn from the labels `mu1 .. mu{labels}`, up to relabelling.
pub fn enumerate_skew_kcfs(n: usize, max_rank: usize, labels: usize) -> Vec<SkewKcf> {
    let mut out = Vec::new();
    let mut half = 0;
    while 2 * half <= max_rank.min(n) {
        let singular = n - 2 * half;
        for m_total in 0..=half {
            if singular == 0 && m_total > 0 {
                continue;
            }
            let m_parts: Vec<Vec<usize>> = partitions(m_total)
                .into_iter()
                .filter(|p| p.len() <= singular)
                .collect();
            for k_total in 0..=(half - m_total) {
                let h_total = half - m_total - k_total;
                let k_parts = partitions(k_total);
                let h_classes = label_classes(h_total, labels);
                for mp in &m_parts {
                    for kp in &k_parts {
                        for hc in &h_classes {
                            let mut blocks: Vec<SkewBlock> =
                                mp.iter().map(|&m| SkewBlock::M(m)).collect();
                            blocks.extend(std::iter::repeat_n(SkewBlock::M(0), singular - mp.len()));
                            blocks.extend(kp.iter().map(|&k| SkewBlock::K(k)));
                            for (label, part) in hc.iter().enumerate() {
                                let eig = Point::Symbol(label as u32 + 1);
                                blocks.extend(part.iter().map(|&h| SkewBlock::H { eig, size: h }));
                            }
                            out.push(SkewKcf::new(blocks).expect("enumerated blocks are valid"));
                        }
                    }
                }
            }
        }
        half += 1;
    }
    out
}

/// Multisets of at most `labels` nonempty partitions with total `total`.
fn label_classes(total: usize, labels: usize) -> Vec<Vec<Vec<usize>>> {
    let items: Vec<Vec<usize>> = (1..=total).flat_map(partitions).collect();
    let mut out = Vec::new();
    fn go(
        items: &[Vec<usize>],
        start: usize,
        rem: usize,
        slots: usize,
        cur: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        if slots == 0 {
            return;
        }
        for i in start..items.len() {
            let s: usize = items[i].iter().sum();
            if s <= rem {
                cur.push(items[i].clone());
                go(items, i, rem - s, slots - 1, cur, out);
                cur.pop();
            }
        }
    }
    go(&items, 0, total, labels, &mut Vec::new(), &mut out);
    out
}

/// Covering relations of skew dominance among `strata`: `(i, j)` means
/// stratum `i` dominates `j` with nothing strictly between them.
pub fn strata_dag(strata: &[SkewKcf], opts: SearchOptions) -> Result<Vec<(usize, usize)>, ClosureError> {
    use rayon::prelude::*;
    let n = strata.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let rel: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| skew_dominates(&strata[i], &strata[j], opts).map(|d| d.is_certified()))
        .collect::<Result<_, _>>()?;
    let mut above = vec![vec![false; n]; n];
    for (&(i, j), &r) in pairs.iter().zip(&rel) {
        above[i][j] = r;
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if above[i][j] && !(0..n).any(|k| k != i && k != j && above[i][k] && above[k][j]) {
                edges.push((i, j));
            }
        }
    }
    Ok(edges)
}

/// Graphviz rendering of [`strata_dag`].
pub fn strata_dot(strata: &[SkewKcf], edges: &[(usize, usize)]) -> String {
    let mut s = String::from("digraph strata {\n  rankdir=TB;\n");
    for (i, x) in strata.iter().enumerate() {
        s.push_str(&format!("  s{i} [label=\"{x}\\nrank {}\"];\n", x.rank()));
    }
    for (i, j) in edges {
        s.push_str(&format!("  s{i} -> s{j};\n"));
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mu(id: u32) -> Eigenvalue {
        Eigenvalue::Finite(Point::Symbol(id))
    }

    fn e(eig: Eigenvalue, size: usize) -> KcfBlock {
        KcfBlock::E { eig, size }
    }

    fn kcf(blocks: &[KcfBlock]) -> Kcf {
        Kcf::new(blocks.iter().copied()).unwrap()
    }

    #[test]
    fn rule1_balances_indices() {
        let k = kcf(&[KcfBlock::L(0), KcfBlock::L(2)]);
        let out = apply_rule(&k, &RuleApplication::BalanceRight { j: 1, k: 1 }).unwrap();
        assert_eq!(out, kcf(&[KcfBlock::L(1), KcfBlock::L(1)]));
    }

    #[test]
    fn rule3_drops_empty_block() {
        let k = kcf(&[KcfBlock::L(0), e(mu(1), 1)]);
        let out = apply_rule(&k, &RuleApplication::AbsorbRight { j: 0, k: 0, eig: mu(1) }).unwrap();
        assert_eq!(out, kcf(&[KcfBlock::L(1)]));
    }

    #[test]
    fn rule6_regularizes() {
        let k = kcf(&[KcfBlock::L(1), KcfBlock::LT(0)]);
        let app = RuleApplication::regularize(1, 0, vec![(2, mu(7))]);
        assert_eq!(apply_rule(&k, &app).unwrap(), kcf(&[e(mu(7), 2)]));
    }

    #[test]
    fn rule_preconditions() {
        let k = kcf(&[KcfBlock::L(1), KcfBlock::L(1)]);
        let err = apply_rule(&k, &RuleApplication::BalanceRight { j: 2, k: 1 }).unwrap_err();
        assert!(matches!(err, ClosureError::NotApplicable(_)));
        let err = apply_rule(&k, &RuleApplication::BalanceRight { j: 1, k: 1 }).unwrap_err();
        assert!(err.to_string().contains("not all present"));
        let k = kcf(&[KcfBlock::L(1), KcfBlock::LT(0)]);
        let dup = RuleApplication::regularize(1, 0, vec![(1, mu(1)), (1, mu(1))]);
        assert!(apply_rule(&k, &dup).is_err());
        let short = RuleApplication::regularize(1, 0, vec![(1, mu(1))]);
        assert!(apply_rule(&k, &short).is_err());
    }

    #[test]
    fn four_step_certificate() {
        let target = kcf(&[KcfBlock::L(1), KcfBlock::L(1), KcfBlock::LT(1), KcfBlock::LT(1)]);
        let source = kcf(&[
            e(mu(1), 2),
            e(mu(1), 2),
            KcfBlock::L(0),
            KcfBlock::L(0),
            KcfBlock::LT(0),
            KcfBlock::LT(0),
        ]);
        let d = dominates(&target, &source, SearchOptions::default()).unwrap();
        let cert = d.certificate().expect("dominated");
        let mut ids: Vec<u8> = cert.steps.iter().map(RuleApplication::rule_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, [3, 3, 4, 4]);
    }

    #[test]
    fn reflexive_empty_certificate() {
        let x = kcf(&[KcfBlock::L(2), KcfBlock::LT(0), e(Eigenvalue::Infinite, 1)]);
        let d = dominates(&x, &x, SearchOptions::default()).unwrap();
        assert!(d.certificate().unwrap().steps.is_empty());
    }

    #[test]
    fn rule1_is_one_directional() {
        let a = kcf(&[KcfBlock::L(0), KcfBlock::L(2)]);
        let b = kcf(&[KcfBlock::L(1), KcfBlock::L(1)]);
        assert!(dominates(&b, &a, SearchOptions::default()).unwrap().is_certified());
        assert!(!dominates(&a, &b, SearchOptions::default()).unwrap().is_certified());
    }

    #[test]
    fn dimension_mismatch() {
        let a = kcf(&[KcfBlock::L(0)]);
        let b = kcf(&[KcfBlock::L(1)]);
        assert!(matches!(
            dominates(&a, &b, SearchOptions::default()),
            Err(ClosureError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn skew_dominance_examples() {
        let target = SkewKcf::new([SkewBlock::M(1), SkewBlock::M(0)]).unwrap();
        let h = SkewKcf::new([
            SkewBlock::H { eig: Point::Symbol(1), size: 1 },
            SkewBlock::M(0),
            SkewBlock::M(0),
        ])
        .unwrap();
        let cert = skew_dominates(&target, &h, SearchOptions::default()).unwrap();
        let cert = cert.certificate().unwrap();
        let mut ids: Vec<u8> = cert.steps.iter().map(RuleApplication::rule_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, [3, 4]);

        let k = SkewKcf::new([SkewBlock::K(1), SkewBlock::M(0), SkewBlock::M(0)]).unwrap();
        let cert = skew_dominates(&target, &k, SearchOptions::default()).unwrap();
        let cert = cert.certificate().unwrap();
        assert!(cert.steps.iter().all(|s| matches!(
            s,
            RuleApplication::AbsorbRight { eig: Eigenvalue::Infinite, .. }
                | RuleApplication::AbsorbLeft { eig: Eigenvalue::Infinite, .. }
        )));
        assert_eq!(cert.steps.len(), 2);

        let same = skew_dominates(&target, &target, SearchOptions::default()).unwrap();
        assert!(same.certificate().unwrap().steps.is_empty());
    }

    #[test]
    fn pairing_detection() {
        let src = kcf(&[KcfBlock::L(0), KcfBlock::L(2), KcfBlock::LT(0), KcfBlock::LT(2)]);
        let a = RuleApplication::BalanceRight { j: 1, k: 1 };
        let mid = apply_rule(&src, &a).unwrap();
        let end = apply_rule(&mid, &a.mirror()).unwrap();
        let paired = ClosureCertificate { source: src.clone(), target: end, steps: vec![a.clone(), a.mirror()] };
        assert!(paired.is_paired());
        let single = ClosureCertificate { source: src, target: mid, steps: vec![a] };
        assert!(!single.is_paired());
    }

    #[test]
    fn enumeration_counts() {
        let s = enumerate_skew_kcfs(4, 2, 1);
        let names: Vec<String> = s.iter().map(ToString::to_string).collect();
        assert_eq!(s.len(), 4, "{names:?}");
        assert!(names.contains(&"{M_0, M_0, M_0, M_0}".to_string()));
        assert!(names.contains(&"{M_1, M_0}".to_string()));
        assert!(names.contains(&"{H_1(mu1), M_0, M_0}".to_string()));
        assert!(names.contains(&"{K_1, M_0, M_0}".to_string()));

        assert_eq!(enumerate_skew_kcfs(2, 0, 3).len(), 1);
        let s = enumerate_skew_kcfs(3, 2, 0);
        let names: Vec<String> = s.iter().map(ToString::to_string).collect();
        assert_eq!(names.len(), 3, "{names:?}");
        assert!(names.contains(&"{K_1, M_0}".to_string()));
    }

    #[test]
    fn enumeration_of_regular_even_case() {
        // n = 4, rank 4, two labels: H1H1 same/different label, H2, H1+K1, K1K1, K2
        let full: Vec<SkewKcf> =
            enumerate_skew_kcfs(4, 4, 2).into_iter().filter(|s| s.rank() == 4).collect();
        assert_eq!(full.len(), 6);
    }

    #[test]
    fn partitions_of_five() {
        assert_eq!(partitions(5).len(), 7);
        assert_eq!(partitions(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn certificates_compose() {
        let x = kcf(&[KcfBlock::L(0), KcfBlock::L(4)]);
        let y = kcf(&[KcfBlock::L(1), KcfBlock::L(3)]);
        let z = kcf(&[KcfBlock::L(2), KcfBlock::L(2)]);
        let cxy = dominates(&y, &x, SearchOptions::default()).unwrap();
        let cyz = dominates(&z, &y, SearchOptions::default()).unwrap();
        let composed = cxy.certificate().unwrap().compose(cyz.certificate().unwrap()).unwrap();
        composed.verify().unwrap();
    }
}
