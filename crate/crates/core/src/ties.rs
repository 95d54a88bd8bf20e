//! Bit-vector ties: a formula, a designated set of its subformulas and a
//! condition, all indexed by positions in the subformula chain.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::formula::{parse, subformula_chain, Formula, Node, ParseError, SubformulaChain};
use crate::semantics::Condition;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TieVec {
    len: usize,
    words: SmallVec<[u64; 2]>,
}

impl TieVec {
    pub fn zeros(len: usize) -> Self {
        TieVec { len, words: SmallVec::from_elem(0, len.div_ceil(64)) }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in idx {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, b: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        if b {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn with(mut self, i: usize) -> Self {
        self.set(i, true);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union(&self, other: &TieVec) -> TieVec {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn union_with(&mut self, other: &TieVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersect(&self, other: &TieVec) -> TieVec {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
        out
    }

    pub fn minus(&self, other: &TieVec) -> TieVec {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
        out
    }

    pub fn is_subset(&self, other: &TieVec) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &TieVec) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |i| self.get(*i))
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<TieVec, TieError> {
        let mut v = TieVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => v.set(i, true),
                '0' => {}
                _ => return Err(TieError::BadBitstring(s.to_string())),
            }
        }
        Ok(v)
    }

    /// Every subset of `self`, smallest code first.
    pub fn subsets(&self) -> impl Iterator<Item = TieVec> + '_ {
        let idx: Vec<usize> = self.ones_iter().collect();
        let len = self.len;
        assert!(idx.len() < 40, "subset enumeration over {} bits", idx.len());
        (0u64..(1u64 << idx.len())).map(move |code| {
            TieVec::from_indices(len, idx.iter().enumerate().filter(|(j, _)| code >> j & 1 == 1).map(|(_, i)| *i))
        })
    }
}

impl fmt::Debug for TieVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TieCond {
    rows: Vec<TieVec>,
}

impl TieCond {
    pub fn zero(alphabet: usize, len: usize) -> Self {
        TieCond { rows: vec![TieVec::zeros(len); alphabet] }
    }

    pub fn from_rows(rows: Vec<TieVec>) -> Self {
        TieCond { rows }
    }

    pub fn alphabet(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, a: usize) -> &TieVec {
        &self.rows[a]
    }

    pub fn rows(&self) -> &[TieVec] {
        &self.rows
    }

    pub fn row_mut(&mut self, a: usize) -> &mut TieVec {
        &mut self.rows[a]
    }
}

impl fmt::Debug for TieCond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.rows).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TieError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("modality {0} outside alphabet {1}")]
    Modality(usize, usize),
    #[error("malformed bitstring {0:?}")]
    BadBitstring(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("json: {0}")]
    Json(String),
}

pub fn or_sum(v: &TieVec, u: &TieVec) -> Result<TieVec, TieError> {
    if v.len() != u.len() {
        return Err(TieError::Length(v.len(), u.len()));
    }
    Ok(v.union(u))
}

/// `U +^a v`: only row `a` grows.
pub fn cond_plus_a(u: &TieCond, a: usize, v: &TieVec) -> Result<TieCond, TieError> {
    if a >= u.alphabet() {
        return Err(TieError::Modality(a, u.alphabet()));
    }
    let row = or_sum(u.row(a), v)?;
    let mut out = u.clone();
    out.rows[a] = row;
    Ok(out)
}

/// Per-formula data shared by oracles and solvers.
#[derive(Debug, Clone)]
pub struct FormulaCtx {
    pub phi: Formula,
    pub chain: SubformulaChain,
    pub alphabet: usize,
    /// Distinct variables of the formula, ascending.
    pub vars: Vec<u32>,
    /// Row `a` marks the positions `i` such that `<a>psi_i` is a subformula.
    pub bodies: Vec<TieVec>,
    /// `var_slot[i]` is the index into `vars` when position `i` is a variable.
    pub var_slot: Vec<Option<usize>>,
}

impl FormulaCtx {
    pub fn new(phi: &Formula, alphabet: usize) -> Self {
        let alphabet = alphabet.max(phi.min_alphabet());
        let chain = subformula_chain(phi);
        let n = chain.len();
        let vars: Vec<u32> = phi.variables().into_iter().collect();
        let mut bodies = vec![TieVec::zeros(n); alphabet];
        let mut var_slot = vec![None; n];
        for i in 0..n {
            match chain.node(i) {
                Node::Dia(a, j) => bodies[a as usize].set(j, true),
                Node::Var(x) => var_slot[i] = Some(vars.binary_search(&x).unwrap()),
                _ => {}
            }
        }
        FormulaCtx { phi: phi.clone(), chain, alphabet, vars, bodies, var_slot }
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn zero(&self) -> TieVec {
        TieVec::zeros(self.len())
    }

    pub fn zero_cond(&self) -> TieCond {
        TieCond::zero(self.alphabet, self.len())
    }

    pub fn root_only(&self) -> TieVec {
        TieVec::zeros(self.len()).with(0)
    }

    pub fn all_bodies(&self) -> TieVec {
        let mut out = self.zero();
        for b in &self.bodies {
            out.union_with(b);
        }
        out
    }

    /// Drop condition bits that no diamond of the formula can consult.
    pub fn canonical_cond(&self, u: &TieCond) -> TieCond {
        TieCond { rows: u.rows.iter().zip(&self.bodies).map(|(r, b)| r.intersect(b)).collect() }
    }
}

pub fn encode_condition(phi: &Formula, gamma: &Condition) -> TieCond {
    let chain = subformula_chain(phi);
    let rows = gamma
        .per_modality
        .iter()
        .map(|set| TieVec::from_indices(chain.len(), set.iter().filter_map(|f| chain.position(f))))
        .collect();
    TieCond { rows }
}

pub fn decode(phi: &Formula, v: &TieVec) -> BTreeSet<Formula> {
    let chain = subformula_chain(phi);
    v.ones_iter().map(|i| chain.get(i).clone()).collect()
}

pub fn decode_condition(phi: &Formula, u: &TieCond) -> Condition {
    Condition { per_modality: u.rows.iter().map(|r| decode(phi, r)).collect() }
}

pub fn encode_set(phi: &Formula, set: &BTreeSet<Formula>) -> TieVec {
    let chain = subformula_chain(phi);
    TieVec::from_indices(chain.len(), set.iter().filter_map(|f| chain.position(f)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tie {
    pub formula: Formula,
    pub v: TieVec,
    pub u: TieCond,
}

impl Tie {
    pub fn new(formula: Formula, v: TieVec, u: TieCond) -> Result<Tie, TieError> {
        let n = subformula_chain(&formula).len();
        if v.len() != n {
            return Err(TieError::Length(v.len(), n));
        }
        if let Some(r) = u.rows.iter().find(|r| r.len() != n) {
            return Err(TieError::Length(r.len(), n));
        }
        if formula.min_alphabet() > u.alphabet() {
            return Err(TieError::Modality(formula.min_alphabet() - 1, u.alphabet()));
        }
        Ok(Tie { formula, v, u })
    }

    pub fn ctx(&self) -> FormulaCtx {
        FormulaCtx::new(&self.formula, self.u.alphabet())
    }

    pub fn to_json(&self) -> String {
        let j = TieJson {
            formula: self.formula.render(),
            v: self.v.to_bitstring(),
            u: self.u.rows.iter().map(TieVec::to_bitstring).collect(),
        };
        serde_json::to_string(&j).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Tie, TieError> {
        let j: TieJson = serde_json::from_str(text).map_err(|e| TieError::Json(e.to_string()))?;
        let formula = parse(&j.formula, j.u.len())?;
        let v = TieVec::from_bitstring(&j.v)?;
        let rows = j.u.iter().map(|s| TieVec::from_bitstring(s)).collect::<Result<Vec<_>, _>>()?;
        Tie::new(formula, v, TieCond { rows })
    }
}

#[derive(Serialize, Deserialize)]
struct TieJson {
    formula: String,
    v: String,
    #[serde(rename = "U")]
    u: Vec<String>,
}

/// Tuples `(u, v_0..v_{k-1})` with every part inside `v` and `u + sum v_i = v`.
///
/// Each set bit of `v` independently picks a nonempty subset of the `k + 1`
/// slots; the enumeration runs through these codes in mixed-radix order.
pub fn enumerate_covers(v: &TieVec, k: usize) -> Covers {
    assert!(k >= 1 && k < 63);
    let bits: Vec<usize> = v.ones_iter().collect();
    Covers { len: v.len(), k, digits: vec![1; bits.len()], bits, done: false }
}

pub struct Covers {
    len: usize,
    k: usize,
    bits: Vec<usize>,
    digits: Vec<u64>,
    done: bool,
}

impl Iterator for Covers {
    type Item = (TieVec, Vec<TieVec>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut u = TieVec::zeros(self.len);
        let mut parts = vec![TieVec::zeros(self.len); self.k];
        for (bit, d) in self.bits.iter().zip(&self.digits) {
            if d & 1 == 1 {
                u.set(*bit, true);
            }
            for (i, p) in parts.iter_mut().enumerate() {
                if d >> (i + 1) & 1 == 1 {
                    p.set(*bit, true);
                }
            }
        }
        let max = (1u64 << (self.k + 1)) - 1;
        let mut pos = 0;
        loop {
            if pos == self.digits.len() {
                self.done = true;
                break;
            }
            if self.digits[pos] < max {
                self.digits[pos] += 1;
                break;
            }
            self.digits[pos] = 1;
            pos += 1;
        }
        Some((u, parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{dia, var};
    use proptest::prelude::*;

    fn tv(s: &str) -> TieVec {
        TieVec::from_bitstring(s).unwrap()
    }

    #[test]
    fn or_sum_examples() {
        assert_eq!(or_sum(&tv("101"), &tv("011")).unwrap(), tv("111"));
        assert_eq!(or_sum(&tv("101"), &tv("000")).unwrap(), tv("101"));
        assert_eq!(or_sum(&tv("101"), &tv("101")).unwrap(), tv("101"));
        assert!(or_sum(&tv("1"), &tv("11")).is_err());
    }

    #[test]
    fn cond_plus_examples() {
        let zero = TieCond::zero(1, 2);
        assert_eq!(cond_plus_a(&zero, 0, &tv("00")).unwrap(), zero);
        let u = TieCond::from_rows(vec![tv("10"), tv("01")]);
        let got = cond_plus_a(&u, 1, &tv("10")).unwrap();
        assert_eq!(got.row(0), &tv("10"));
        let got = cond_plus_a(&u, 0, &tv("01")).unwrap();
        assert_eq!(got.rows(), &[tv("11"), tv("01")]);
        assert!(cond_plus_a(&u, 2, &tv("01")).is_err());
    }

    #[test]
    fn encode_decode_examples() {
        let phi = dia(0, var(0));
        let empty = Condition::empty(1);
        assert_eq!(encode_condition(&phi, &empty), TieCond::zero(1, 2));
        let mut g = Condition::empty(1);
        g.per_modality[0].insert(var(0));
        assert_eq!(encode_condition(&phi, &g).row(0), &tv("01"));
        g.per_modality[0].insert(var(7));
        assert_eq!(encode_condition(&phi, &g).row(0), &tv("01"));
        assert!(decode(&phi, &tv("00")).is_empty());
        assert_eq!(decode(&phi, &tv("11")).len(), 2);
    }

    #[test]
    fn covers_small_cases() {
        let c: Vec<_> = enumerate_covers(&tv("0"), 1).collect();
        assert_eq!(c, vec![(tv("0"), vec![tv("0")])]);
        let c: Vec<_> = enumerate_covers(&tv("1"), 1).collect();
        assert_eq!(c.len(), 3);
        assert!(c.contains(&(tv("1"), vec![tv("0")])));
        assert!(c.contains(&(tv("1"), vec![tv("1")])));
        assert!(c.contains(&(tv("0"), vec![tv("1")])));
    }

    #[test]
    fn covers_match_naive_filter() {
        for n in 1..=3usize {
            for code in 0..(1u32 << n) {
                let v = TieVec::from_indices(n, (0..n).filter(|i| code >> i & 1 == 1));
                for k in 1..=2usize {
                    let fast: BTreeSet<_> = enumerate_covers(&v, k).collect();
                    let all: Vec<TieVec> = TieVec::ones(n).subsets().collect();
                    let mut naive = BTreeSet::new();
                    let total = all.len().pow(k as u32 + 1);
                    for idx in 0..total {
                        let mut rest = idx;
                        let mut pick = Vec::new();
                        for _ in 0..=k {
                            pick.push(all[rest % all.len()].clone());
                            rest /= all.len();
                        }
                        let mut acc = TieVec::zeros(n);
                        for p in &pick {
                            acc.union_with(p);
                        }
                        if acc == v {
                            naive.insert((pick[0].clone(), pick[1..].to_vec()));
                        }
                    }
                    assert_eq!(fast, naive, "v={v:?} k={k}");
                    let m = v.count() as u32;
                    assert_eq!(fast.len(), ((1usize << (k + 1)) - 1).pow(m));
                }
            }
        }
    }

    #[test]
    fn tie_json_roundtrip() {
        let phi = dia(0, var(0));
        let tie = Tie::new(phi, tv("11"), TieCond::from_rows(vec![tv("01")])).unwrap();
        let text = tie.to_json();
        assert_eq!(text, r#"{"formula":"<0>p0","v":"11","U":["01"]}"#);
        assert_eq!(Tie::from_json(&text).unwrap(), tie);
    }

    proptest! {
        #[test]
        fn or_sum_monoid(a in 0u32..256, b in 0u32..256, c in 0u32..256) {
            let mk = |x: u32| TieVec::from_indices(8, (0..8).filter(|i| x >> i & 1 == 1));
            let (a, b, c) = (mk(a), mk(b), mk(c));
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.union(&a), a.clone());
            prop_assert_eq!(a.union(&TieVec::zeros(8)), a);
        }
    }
}
