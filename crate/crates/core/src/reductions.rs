//! Formula translations: conditional truth, the preconical reduction, elimination of a
//! universal modality, relativization, and the QBF encoding with its quantifier tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{and, big_and, big_or, boxm, dia, imp, not, parse, subformula_chain, top, var, Formula};
use crate::oracles::SummandOracle;
use crate::semantics::{Condition, Frame, Model};
use crate::ties::{decode, decode_condition, encode_condition, encode_set, FormulaCtx, Tie, TieVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("QBF has no quantifiers")]
    EmptyPrefix,
    #[error("QBF parse error: {0}")]
    Parse(String),
    #[error("QBF with {0} quantifiers exceeds the evaluation guard of 20")]
    TooLarge(usize),
    #[error("formula needs {needed} modalities, oracle covers {available}")]
    Alphabet { needed: usize, available: usize },
}

/// Compile conditional truth under `gamma` into plain truth.
pub fn translate_cond(phi: &Formula, gamma: &Condition) -> Formula {
    match phi {
        Formula::Bot | Formula::Var(_) => phi.clone(),
        Formula::Imp(a, b) => imp(translate_cond(a, gamma), translate_cond(b, gamma)),
        Formula::Dia(a, g) => {
            if gamma.per_modality.get(*a as usize).is_some_and(|row| row.contains(&**g)) {
                top()
            } else {
                dia(*a, translate_cond(g, gamma))
            }
        }
    }
}

/// `psi | <>psi | ... | <>^m psi` with `<>` the disjunction of all modalities below `alphabet`.
pub fn dia_upto(m: usize, alphabet: usize, psi: &Formula) -> Formula {
    let mut layers = vec![psi.clone()];
    for _ in 0..m {
        let last = layers.last().unwrap();
        layers.push(big_or((0..alphabet as u32).map(|a| dia(a, last.clone()))));
    }
    big_or(layers)
}

/// `psi & []psi & ... & []^m psi` over all modalities below `alphabet`.
pub fn box_upto(m: usize, alphabet: usize, psi: &Formula) -> Formula {
    not(dia_upto(m, alphabet, &not(psi.clone())))
}

fn box_n(n: usize, psi: Formula) -> Formula {
    (0..n).fold(psi, |f, _| boxm(0, f))
}

/// Formula satisfiable in a preconical, m-transitive class iff the tie is realizable there.
pub fn delta_m(tie: &Tie, m: usize) -> Formula {
    let gamma = decode_condition(&tie.formula, &tie.u);
    let alphabet = tie.u.alphabet();
    let chain = subformula_chain(&tie.formula);
    big_and(chain.formulas().iter().enumerate().map(|(i, psi)| {
        let reach = dia_upto(m, alphabet, &translate_cond(psi, &gamma));
        if tie.v.get(i) {
            reach
        } else {
            not(reach)
        }
    }))
}

/// Flattened form of a formula whose modality 0 is universal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaanForm {
    pub xi: Formula,
    pub root: Formula,
    /// `(translated body, fresh variable)` for each distinct `<0>` body.
    pub fresh: Vec<(Formula, u32)>,
}

impl SpaanForm {
    /// Whether a set of subformulas of `xi` meets the coupling constraint.
    pub fn admits(&self, realized: &BTreeSet<Formula>) -> bool {
        realized.contains(&self.root)
            && self.fresh.iter().all(|(body, p)| {
                let a = realized.contains(body);
                let b = realized.contains(&var(*p));
                let c = !realized.contains(&not(var(*p)));
                a == b && b == c
            })
    }
}

fn next_var(phi: &Formula) -> u32 {
    phi.variables().into_iter().next_back().map_or(0, |v| v + 1)
}

/// Replace every `<0>psi` by a fresh variable standing for its constant truth value.
pub fn spaan_eliminate(phi: &Formula) -> SpaanForm {
    let chain = subformula_chain(phi);
    let mut fresh_of: BTreeMap<Formula, u32> = BTreeMap::new();
    let mut next = next_var(phi);
    let mut order: Vec<Formula> = Vec::new();
    for i in chain.bottom_up() {
        if let Formula::Dia(0, body) = chain.get(i) {
            if !fresh_of.contains_key(&**body) {
                fresh_of.insert((**body).clone(), next);
                order.push((**body).clone());
                next += 1;
            }
        }
    }
    fn tr(f: &Formula, fresh: &BTreeMap<Formula, u32>) -> Formula {
        match f {
            Formula::Bot | Formula::Var(_) => f.clone(),
            Formula::Imp(a, b) => imp(tr(a, fresh), tr(b, fresh)),
            Formula::Dia(0, g) => var(fresh[&**g]),
            Formula::Dia(a, g) => dia(*a, tr(g, fresh)),
        }
    }
    let root = tr(phi, &fresh_of);
    let fresh: Vec<(Formula, u32)> = order.iter().map(|b| (tr(b, &fresh_of), fresh_of[b])).collect();
    let xi = big_and(
        std::iter::once(root.clone()).chain(fresh.iter().map(|(b, p)| and(b.clone(), not(var(*p))))),
    );
    SpaanForm { xi, root, fresh }
}

/// Satisfiability of `phi` in the universal lift of the class decided by `base`.
pub fn sat_univ(phi: &Formula, base: &dyn SummandOracle) -> Result<bool, ReductionError> {
    let needed = phi.min_alphabet();
    if needed > base.alphabet() + 1 {
        return Err(ReductionError::Alphabet { needed, available: base.alphabet() + 1 });
    }
    let form = spaan_eliminate(phi);
    let lowered = form.xi.map_modalities(&|a| a - 1);
    let ctx = FormulaCtx::new(&lowered, base.alphabet());
    let lower = |f: &Formula| ctx.chain.position(&f.map_modalities(&|a| a - 1)).unwrap();
    let root = lower(&form.root);
    let k = form.fresh.len();
    // Each choice of which fresh variables hold fixes the constrained part of the set; the
    // oracle's range query covers every completion of the rest at once.
    for choice in 0u64..1 << k {
        let mut lo = ctx.zero().with(root);
        let mut hi = TieVec::ones(ctx.len());
        for (j, (body, p)) in form.fresh.iter().enumerate() {
            let (b, pv, np) = (lower(body), lower(&var(*p)), lower(&not(var(*p))));
            if choice >> j & 1 == 1 {
                lo = lo.with(b).with(pv);
                hi.set(np, false);
            } else {
                lo = lo.with(np);
                hi.set(b, false);
                hi.set(pv, false);
            }
        }
        if lo.is_subset(&hi) && base.query(&ctx, &lo, &hi, &ctx.zero_cond()) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn shift_up(f: &Formula) -> Formula {
    f.map_modalities(&|a| a + 1)
}

/// Formula satisfiable in the universal lift iff the tie is realizable in the base class.
pub fn csat_to_sat_univ(tie: &Tie) -> Formula {
    let phi = shift_up(&tie.formula);
    let realized: BTreeSet<Formula> = decode(&tie.formula, &tie.v).iter().map(shift_up).collect();
    let gamma = decode_condition(&tie.formula, &tie.u);
    let mut rows = vec![BTreeSet::new()];
    rows.extend(gamma.per_modality.iter().map(|row| row.iter().map(shift_up).collect::<BTreeSet<_>>()));
    let lifted_gamma = Condition { per_modality: rows };
    let lifted = Tie {
        formula: phi.clone(),
        v: encode_set(&phi, &realized),
        u: encode_condition(&phi, &lifted_gamma),
    };
    delta_m(&lifted, 1)
}

/// `q & tr(phi)` with `tr(<a>psi) = <a>(tr(psi) & q)` and `q` the first unused variable.
pub fn relativize(phi: &Formula) -> Formula {
    let q = var(next_var(phi));
    fn tr(f: &Formula, q: &Formula) -> Formula {
        match f {
            Formula::Bot | Formula::Var(_) => f.clone(),
            Formula::Imp(a, b) => imp(tr(a, q), tr(b, q)),
            Formula::Dia(a, g) => dia(*a, and(tr(g, q), q.clone())),
        }
    }
    and(q.clone(), tr(phi, &q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// `Q1 p1 ... Qm pm . matrix`, with `p_i` the formula variable `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub prefix: Vec<Quantifier>,
    pub matrix: Formula,
}

impl Qbf {
    pub fn new(prefix: Vec<Quantifier>, matrix: Formula) -> Result<Qbf, ReductionError> {
        if prefix.is_empty() {
            return Err(ReductionError::EmptyPrefix);
        }
        if !matrix.modalities().is_empty() {
            return Err(ReductionError::Parse("matrix must be propositional".into()));
        }
        if let Some(v) = matrix.variables().into_iter().find(|&v| v == 0 || v as usize > prefix.len()) {
            return Err(ReductionError::Parse(format!("p{v} is not quantified")));
        }
        Ok(Qbf { prefix, matrix })
    }

    /// Parses `"E1 A2 : matrix"`; quantified indices must be `1..m` in order.
    pub fn parse(text: &str) -> Result<Qbf, ReductionError> {
        let (head, body) = text.split_once(':').ok_or_else(|| ReductionError::Parse("missing ':'".into()))?;
        let mut prefix = Vec::new();
        for (i, tok) in head.split_whitespace().enumerate() {
            let (q, idx) = tok.split_at(1);
            let q = match q {
                "E" | "e" => Quantifier::Exists,
                "A" | "a" => Quantifier::Forall,
                _ => return Err(ReductionError::Parse(format!("bad quantifier {tok:?}"))),
            };
            if idx.parse::<usize>().ok() != Some(i + 1) {
                return Err(ReductionError::Parse(format!("expected variable {} in {tok:?}", i + 1)));
            }
            prefix.push(q);
        }
        let matrix = parse(body.trim(), 0).map_err(|e| ReductionError::Parse(e.to_string()))?;
        Qbf::new(prefix, matrix)
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }
}

impl fmt::Display for Qbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.prefix.iter().enumerate() {
            let c = if *q == Quantifier::Exists { 'E' } else { 'A' };
            write!(f, "{c}{} ", i + 1)?;
        }
        write!(f, ": {}", self.matrix.render())
    }
}

fn eval_prop(f: &Formula, assignment: &[bool]) -> bool {
    match f {
        Formula::Bot => false,
        Formula::Var(i) => assignment[*i as usize],
        Formula::Imp(a, b) => !eval_prop(a, assignment) || eval_prop(b, assignment),
        Formula::Dia(..) => unreachable!("matrix is propositional"),
    }
}

fn eval_from(eta: &Qbf, assignment: &mut Vec<bool>) -> bool {
    let i = assignment.len() - 1;
    if i == eta.len() {
        return eval_prop(&eta.matrix, assignment);
    }
    let branch = |b: bool, a: &mut Vec<bool>| {
        a.push(b);
        let r = eval_from(eta, a);
        a.pop();
        r
    };
    match eta.prefix[i] {
        Quantifier::Exists => branch(false, assignment) || branch(true, assignment),
        Quantifier::Forall => branch(false, assignment) && branch(true, assignment),
    }
}

pub fn qbf_eval(eta: &Qbf) -> Result<bool, ReductionError> {
    if eta.len() > 20 {
        return Err(ReductionError::TooLarge(eta.len()));
    }
    // Slot 0 is unused so that p_i sits at index i.
    Ok(eval_from(eta, &mut vec![false]))
}

/// Unimodal formula satisfiable (in S4 or GL frames) iff `eta` is true.
pub fn ladner_encode(eta: &Qbf) -> Result<Formula, ReductionError> {
    let m = eta.len();
    if m == 0 {
        return Err(ReductionError::EmptyPrefix);
    }
    let q = |i: usize| var((m + 1 + i) as u32);
    let p = |i: usize| var(i as u32);
    let bx = |f: Formula| box_upto(m, 1, &f);
    let mut parts = vec![q(0)];
    parts.extend((0..m).map(|i| bx(imp(q(i), dia(0, q(i + 1))))));
    for i in 0..=m {
        for j in i + 1..=m {
            parts.push(bx(imp(q(i), not(q(j)))));
        }
    }
    parts.push(box_n(m, imp(q(m), eta.matrix.clone())));
    for i in 0..m {
        if eta.prefix[i] == Quantifier::Forall {
            let branch = and(dia(0, and(q(i + 1), p(i + 1))), dia(0, and(q(i + 1), not(p(i + 1)))));
            parts.push(box_n(i, imp(q(i), branch)));
        }
    }
    for i in 1..=m {
        parts.push(box_n(i, imp(q(i), big_or([bx(p(i)), bx(not(p(i)))]))));
    }
    Ok(big_and(parts))
}

/// Admissible partial assignments of `eta` and their one-step extension order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierTree {
    pub nodes: Vec<Vec<bool>>,
    pub frame: Frame,
}

impl QuantifierTree {
    fn closure(&self, reflexive: bool) -> Frame {
        let mut rel = Vec::new();
        for (i, a) in self.nodes.iter().enumerate() {
            for (j, b) in self.nodes.iter().enumerate() {
                let below = a.len() < b.len() && b.starts_with(a);
                if below || (reflexive && i == j) {
                    rel.push((i, j));
                }
            }
        }
        Frame::from_pairs(self.nodes.len(), vec![rel]).expect("tree nodes are in range")
    }

    /// Reflexive-transitive closure of the tree order.
    pub fn preorder(&self) -> Frame {
        self.closure(true)
    }

    /// Transitive closure of the tree order.
    pub fn strict_order(&self) -> Frame {
        self.closure(false)
    }
}

pub fn quantifier_tree(eta: &Qbf) -> QuantifierTree {
    let mut nodes: Vec<Vec<bool>> = vec![Vec::new()];
    let mut level = vec![Vec::new()];
    for q in &eta.prefix {
        let mut next = Vec::new();
        for s in &level {
            let choices: &[bool] = if *q == Quantifier::Forall { &[false, true] } else { &[false] };
            for &c in choices {
                let mut t: Vec<bool> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        nodes.extend(next.iter().cloned());
        level = next;
    }
    let index: BTreeMap<&Vec<bool>, usize> = nodes.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let edges: Vec<(usize, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_empty())
        .map(|(i, s)| (index[&s[..s.len() - 1].to_vec()], i))
        .collect();
    let frame = Frame::from_pairs(nodes.len(), vec![edges]).expect("tree nodes are in range");
    QuantifierTree { nodes, frame }
}

/// The intended model of `ladner_encode(eta)` on `frame` (a closure of the quantifier tree),
/// with existential choices taken from a winning strategy; `None` when `eta` is false.
pub fn ladner_model(eta: &Qbf, frame: &Frame) -> Result<Option<Model>, ReductionError> {
    if !qbf_eval(eta)? {
        return Ok(None);
    }
    let m = eta.len();
    let tree = quantifier_tree(eta);
    let mut valuation: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for (w, sigma) in tree.nodes.iter().enumerate() {
        valuation.entry((m + 1 + sigma.len()) as u32).or_default().insert(w);
        // Replay the path, resolving existential positions by the strategy.
        let mut assignment = vec![false];
        for (i, &bit) in sigma.iter().enumerate() {
            let value = match eta.prefix[i] {
                Quantifier::Forall => bit,
                Quantifier::Exists => {
                    assignment.push(false);
                    let ok = eval_from(eta, &mut assignment);
                    assignment.pop();
                    !ok
                }
            };
            assignment.push(value);
            if value {
                valuation.entry((i + 1) as u32).or_default().insert(w);
            }
        }
    }
    Ok(Some(Model::new(frame.clone(), valuation).expect("valuation within the frame")))
}
