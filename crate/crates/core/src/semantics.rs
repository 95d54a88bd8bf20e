//! Finite multi-relational Kripke frames and models, conditional truth and
//! the frame compositions built from index frames.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{subformula_chain, Formula, Node, SubformulaChain};
use crate::ties::{TieCond, TieVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("alphabet mismatch: expected {expected}, found {found}")]
    Alphabet { expected: usize, found: usize },
    #[error("modality {0} outside alphabet {1}")]
    Modality(usize, usize),
    #[error("family has {found} frames, index has {expected} worlds")]
    FamilySize { expected: usize, found: usize },
    #[error("empty family")]
    EmptyFamily,
    #[error("relation 0 is not a preorder")]
    NotPreorder,
    #[error("component {0} out of range")]
    Component(usize),
    #[error("world {0} out of range")]
    World(usize),
    #[error("frame must have at least one world")]
    NoWorlds,
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, SemanticsError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    worlds: usize,
    relations: Vec<BTreeSet<(usize, usize)>>,
}

impl Frame {
    pub fn new(worlds: usize, relations: Vec<BTreeSet<(usize, usize)>>) -> Result<Frame> {
        if worlds == 0 {
            return Err(SemanticsError::NoWorlds);
        }
        for r in &relations {
            if let Some(&(x, y)) = r.iter().find(|(x, y)| *x >= worlds || *y >= worlds) {
                return Err(SemanticsError::World(x.max(y)));
            }
        }
        Ok(Frame { worlds, relations })
    }

    pub fn from_pairs(worlds: usize, relations: Vec<Vec<(usize, usize)>>) -> Result<Frame> {
        Frame::new(worlds, relations.into_iter().map(|r| r.into_iter().collect()).collect())
    }

    pub fn empty(worlds: usize, alphabet: usize) -> Frame {
        Frame { worlds: worlds.max(1), relations: vec![BTreeSet::new(); alphabet] }
    }

    /// `(n, <)` as a one-relation frame.
    pub fn chain(n: usize) -> Frame {
        let rel = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Frame { worlds: n.max(1), relations: vec![rel] }
    }

    pub fn cluster(n: usize) -> Frame {
        let rel = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Frame { worlds: n.max(1), relations: vec![rel] }
    }

    pub fn worlds(&self) -> usize {
        self.worlds
    }

    pub fn alphabet(&self) -> usize {
        self.relations.len()
    }

    pub fn relation(&self, a: usize) -> &BTreeSet<(usize, usize)> {
        &self.relations[a]
    }

    pub fn relations(&self) -> &[BTreeSet<(usize, usize)>] {
        &self.relations
    }

    pub fn has_edge(&self, a: usize, x: usize, y: usize) -> bool {
        self.relations[a].contains(&(x, y))
    }

    pub fn successors(&self) -> Vec<Vec<Vec<usize>>> {
        let mut out = vec![vec![Vec::new(); self.worlds]; self.alphabet()];
        for (a, r) in self.relations.iter().enumerate() {
            for &(x, y) in r {
                out[a][x].push(y);
            }
        }
        out
    }

    pub fn is_preorder(&self, a: usize) -> bool {
        let r = &self.relations[a];
        (0..self.worlds).all(|x| r.contains(&(x, x)))
            && r.iter().all(|&(x, y)| r.iter().filter(|p| p.0 == y).all(|&(_, z)| r.contains(&(x, z))))
    }

    pub fn restrict(&self, keep: &[usize]) -> Frame {
        let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, w)| (*w, i)).collect();
        let relations = self
            .relations
            .iter()
            .map(|r| {
                r.iter()
                    .filter_map(|(x, y)| Some((*pos.get(x)?, *pos.get(y)?)))
                    .collect()
            })
            .collect();
        Frame { worlds: keep.len().max(1), relations }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FrameJson::from_frame(self, None)).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Frame> {
        let j: FrameJson = serde_json::from_str(text).map_err(|e| SemanticsError::Json(e.to_string()))?;
        j.into_frame()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub frame: Frame,
    pub valuation: BTreeMap<u32, BTreeSet<usize>>,
}

impl Model {
    pub fn new(frame: Frame, valuation: BTreeMap<u32, BTreeSet<usize>>) -> Result<Model> {
        for set in valuation.values() {
            if let Some(&w) = set.iter().find(|w| **w >= frame.worlds) {
                return Err(SemanticsError::World(w));
            }
        }
        Ok(Model { frame, valuation })
    }

    pub fn holds(&self, var: u32, w: usize) -> bool {
        self.valuation.get(&var).is_some_and(|s| s.contains(&w))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FrameJson::from_frame(&self.frame, Some(&self.valuation))).unwrap()
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let j: FrameJson = serde_json::from_str(text).map_err(|e| SemanticsError::Json(e.to_string()))?;
        let mut valuation = BTreeMap::new();
        for (name, worlds) in j.valuation.clone().unwrap_or_default() {
            let idx = name
                .strip_prefix('p')
                .and_then(|d| d.parse::<u32>().ok())
                .ok_or_else(|| SemanticsError::Json(format!("bad variable name {name:?}")))?;
            valuation.insert(idx, worlds.into_iter().collect());
        }
        Model::new(j.into_frame()?, valuation)
    }
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    alphabet: usize,
    worlds: usize,
    relations: Vec<Vec<[usize; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    valuation: Option<BTreeMap<String, Vec<usize>>>,
}

impl FrameJson {
    fn from_frame(f: &Frame, val: Option<&BTreeMap<u32, BTreeSet<usize>>>) -> FrameJson {
        FrameJson {
            alphabet: f.alphabet(),
            worlds: f.worlds,
            relations: f.relations.iter().map(|r| r.iter().map(|(x, y)| [*x, *y]).collect()).collect(),
            valuation: val.map(|v| v.iter().map(|(k, s)| (format!("p{k}"), s.iter().copied().collect())).collect()),
        }
    }

    fn into_frame(self) -> Result<Frame> {
        if self.relations.len() != self.alphabet {
            return Err(SemanticsError::Alphabet { expected: self.alphabet, found: self.relations.len() });
        }
        Frame::from_pairs(self.worlds, self.relations.into_iter().map(|r| r.into_iter().map(|[x, y]| (x, y)).collect()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Condition {
    pub per_modality: Vec<BTreeSet<Formula>>,
}

impl Condition {
    pub fn empty(alphabet: usize) -> Condition {
        Condition { per_modality: vec![BTreeSet::new(); alphabet] }
    }

    pub fn alphabet(&self) -> usize {
        self.per_modality.len()
    }

    pub fn is_subset(&self, other: &Condition) -> bool {
        self.per_modality.iter().zip(&other.per_modality).all(|(a, b)| a.is_subset(b))
    }

    /// `Gamma` with `set` added to row `a`.
    pub fn plus(&self, a: usize, set: &BTreeSet<Formula>) -> Condition {
        let mut out = self.clone();
        out.per_modality[a].extend(set.iter().cloned());
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<String>> = self.per_modality.iter().map(|r| r.iter().map(Formula::render).collect()).collect();
        serde_json::to_string(&rows).unwrap()
    }

    pub fn from_json(text: &str, alphabet: usize) -> std::result::Result<Condition, String> {
        let rows: Vec<Vec<String>> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if rows.len() != alphabet {
            return Err(format!("condition has {} rows, alphabet is {alphabet}", rows.len()));
        }
        let per_modality = rows
            .iter()
            .map(|r| r.iter().map(|t| crate::formula::parse(t, alphabet).map_err(|e| e.to_string())).collect())
            .collect::<std::result::Result<_, _>>()?;
        Ok(Condition { per_modality })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FrameClassTag {
    Clusters,
    DifferenceFrames,
    T0DifferenceFrames,
    /// Difference frames in which every two points, equal or not, share a successor.
    ConfluentDifferenceFrames,
    IrreflexiveSingleton { alphabet: usize },
    ReflexiveSingleton,
    Preorders,
    /// Reflexive partial orders.
    PartialOrders,
    StrictPartialOrders,
    /// Transitive antisymmetric frames with arbitrary reflexivity.
    AntisymmetricTransitive,
    Transitive,
    WeaklyTransitive,
    WeaklyTransitiveConfluent,
    FiniteTrees { h: usize, b: usize },
    UniversalLifted(Box<FrameClassTag>),
    /// Two-relation frames with relation 0 empty and relation 1 total.
    BimodalClusters,
}

/// Truth of every chain position at every world under `gamma`, indexed `[position][world]`.
///
/// `gamma[a][i]` states that position `i` belongs to the condition row `a`.
pub fn truth_table_rows(m: &Model, chain: &SubformulaChain, gamma: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = m.frame.worlds;
    let succ = m.frame.successors();
    let mut table: Vec<Vec<bool>> = vec![Vec::new(); chain.len()];
    for i in chain.bottom_up() {
        let row: Vec<bool> = match chain.node(i) {
            Node::Bot => vec![false; n],
            Node::Var(p) => (0..n).map(|w| m.holds(p, w)).collect(),
            Node::Imp(l, r) => (0..n).map(|w| !table[l][w] || table[r][w]).collect(),
            Node::Dia(a, j) => {
                let a = a as usize;
                let free = gamma.get(a).is_some_and(|g| g[j]);
                (0..n)
                    .map(|w| free || succ.get(a).is_some_and(|s| s[w].iter().any(|v| table[j][*v])))
                    .collect()
            }
        };
        table[i] = row;
    }
    table
}

fn condition_rows(chain: &SubformulaChain, gamma: &Condition) -> Vec<Vec<bool>> {
    gamma
        .per_modality
        .iter()
        .map(|set| {
            let mut row = vec![false; chain.len()];
            for f in set {
                if let Some(i) = chain.position(f) {
                    row[i] = true;
                }
            }
            row
        })
        .collect()
}

fn tiecond_rows(u: &TieCond) -> Vec<Vec<bool>> {
    u.rows().iter().map(|r| (0..r.len()).map(|i| r.get(i)).collect()).collect()
}

pub fn truth_table(m: &Model, chain: &SubformulaChain, gamma: &Condition) -> Vec<Vec<bool>> {
    truth_table_rows(m, chain, &condition_rows(chain, gamma))
}

pub fn eval(m: &Model, w: usize, phi: &Formula) -> bool {
    eval_cond(m, w, &Condition::empty(m.frame.alphabet()), phi)
}

pub fn eval_cond(m: &Model, w: usize, gamma: &Condition, phi: &Formula) -> bool {
    let chain = subformula_chain(phi);
    truth_table(m, &chain, gamma)[0][w]
}

/// Subformulas of `phi` true somewhere in `m` under `gamma`.
pub fn characterize(phi: &Formula, m: &Model, gamma: &Condition) -> BTreeSet<Formula> {
    let chain = subformula_chain(phi);
    let table = truth_table(m, &chain, gamma);
    (0..chain.len()).filter(|i| table[*i].iter().any(|b| *b)).map(|i| chain.get(i).clone()).collect()
}

/// Bit-vector form of [`characterize`] against a prebuilt chain.
pub fn characterize_bits(chain: &SubformulaChain, m: &Model, u: &TieCond) -> TieVec {
    let table = truth_table_rows(m, chain, &tiecond_rows(u));
    TieVec::from_indices(chain.len(), (0..chain.len()).filter(|i| table[*i].iter().any(|b| *b)))
}

fn check_alphabet(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(SemanticsError::Alphabet { expected, found });
    }
    Ok(())
}

fn offsets(family: &[Frame]) -> Vec<usize> {
    let mut off = vec![0];
    for f in family {
        off.push(off.last().unwrap() + f.worlds);
    }
    off
}

/// Sum of `family` over the index frame `index`.
pub fn sum(index: &Frame, family: &[Frame]) -> Result<Frame> {
    if family.len() != index.worlds {
        return Err(SemanticsError::FamilySize { expected: index.worlds, found: family.len() });
    }
    let alphabet = index.alphabet();
    for f in family {
        check_alphabet(alphabet, f.alphabet())?;
    }
    let off = offsets(family);
    let mut relations = vec![BTreeSet::new(); alphabet];
    for (a, rel) in relations.iter_mut().enumerate() {
        for (i, f) in family.iter().enumerate() {
            rel.extend(f.relations[a].iter().map(|(x, y)| (x + off[i], y + off[i])));
        }
        for &(i, j) in &index.relations[a] {
            if i == j {
                continue;
            }
            for x in off[i]..off[i + 1] {
                for y in off[j]..off[j + 1] {
                    rel.insert((x, y));
                }
            }
        }
    }
    Ok(Frame { worlds: off[family.len()], relations })
}

fn index_for(a: usize, index: &Frame, family: &[Frame]) -> Result<Frame> {
    check_alphabet(1, index.alphabet())?;
    let alphabet = family.first().ok_or(SemanticsError::EmptyFamily)?.alphabet();
    if a >= alphabet {
        return Err(SemanticsError::Modality(a, alphabet));
    }
    let mut relations = vec![BTreeSet::new(); alphabet];
    relations[a] = index.relations[0].clone();
    Ok(Frame { worlds: index.worlds, relations })
}

pub fn a_sum(a: usize, index: &Frame, family: &[Frame]) -> Result<Frame> {
    sum(&index_for(a, index, family)?, family)
}

pub fn plus_a(f0: &Frame, f1: &Frame, a: usize) -> Result<Frame> {
    a_sum(a, &Frame::chain(2), &[f0.clone(), f1.clone()])
}

pub fn disjoint_union(family: &[Frame]) -> Result<Frame> {
    let alphabet = family.first().ok_or(SemanticsError::EmptyFamily)?.alphabet();
    sum(&Frame::empty(family.len(), alphabet), family)
}

pub fn universal_lift(f: &Frame) -> Frame {
    let mut relations = vec![Frame::cluster(f.worlds).relations.remove(0)];
    relations.extend(f.relations.iter().cloned());
    Frame { worlds: f.worlds, relations }
}

pub fn empty_lift(f: &Frame, n: usize) -> Frame {
    let mut relations = vec![BTreeSet::new(); n];
    relations.extend(f.relations.iter().cloned());
    Frame { worlds: f.worlds, relations }
}

pub fn lex_sum(index: &Frame, family: &[Frame]) -> Result<Frame> {
    check_alphabet(1, index.alphabet())?;
    if family.len() != index.worlds {
        return Err(SemanticsError::FamilySize { expected: index.worlds, found: family.len() });
    }
    let alphabet = family[0].alphabet();
    for f in family {
        check_alphabet(alphabet, f.alphabet())?;
    }
    let off = offsets(family);
    let mut relations = vec![BTreeSet::new(); alphabet + 1];
    for &(i, j) in &index.relations[0] {
        for x in off[i]..off[i + 1] {
            for y in off[j]..off[j + 1] {
                relations[0].insert((x, y));
            }
        }
    }
    for (i, f) in family.iter().enumerate() {
        for (a, r) in f.relations.iter().enumerate() {
            relations[a + 1].extend(r.iter().map(|(x, y)| (x + off[i], y + off[i])));
        }
    }
    Ok(Frame { worlds: off[family.len()], relations })
}

pub fn lex_product(index: &Frame, f: &Frame) -> Result<Frame> {
    lex_sum(index, &vec![f.clone(); index.worlds])
}

/// Quotient of relation 0 by mutual reachability, with the clusters as restrictions.
pub fn skeleton_decompose(f: &Frame) -> Result<(Frame, Vec<Frame>)> {
    if f.alphabet() == 0 || !f.is_preorder(0) {
        return Err(SemanticsError::NotPreorder);
    }
    let r = &f.relations[0];
    let mut class_of = vec![usize::MAX; f.worlds];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for x in 0..f.worlds {
        if class_of[x] != usize::MAX {
            continue;
        }
        let id = members.len();
        let cls: Vec<usize> = (x..f.worlds).filter(|y| r.contains(&(x, *y)) && r.contains(&(*y, x))).collect();
        for y in &cls {
            class_of[*y] = id;
        }
        members.push(cls);
    }
    let k = members.len();
    let mut skel = vec![BTreeSet::new(); f.alphabet()];
    for i in 0..k {
        for j in 0..k {
            if i != j && r.contains(&(members[i][0], members[j][0])) {
                skel[0].insert((i, j));
            }
        }
    }
    let clusters = members.iter().map(|m| f.restrict(m)).collect();
    Ok((Frame { worlds: k, relations: skel }, clusters))
}

/// A model built as a sum, remembering where each component starts.
#[derive(Debug, Clone)]
pub struct SumModel {
    pub model: Model,
    pub offsets: Vec<usize>,
}

impl SumModel {
    pub fn component_worlds(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn components(&self) -> usize {
        self.offsets.len() - 1
    }
}

pub fn sum_models(index: &Frame, models: &[Model]) -> Result<SumModel> {
    let frames: Vec<Frame> = models.iter().map(|m| m.frame.clone()).collect();
    let frame = sum(index, &frames)?;
    let off = offsets(&frames);
    let mut valuation: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for (i, m) in models.iter().enumerate() {
        for (p, set) in &m.valuation {
            valuation.entry(*p).or_default().extend(set.iter().map(|w| w + off[i]));
        }
    }
    Ok(SumModel { model: Model { frame, valuation }, offsets: off })
}

pub fn component_model(sm: &SumModel, i: usize) -> Result<Model> {
    if i >= sm.components() {
        return Err(SemanticsError::Component(i));
    }
    let keep: Vec<usize> = sm.component_worlds(i).collect();
    Ok(restrict_model(&sm.model, &keep))
}

pub fn restrict_model(m: &Model, keep: &[usize]) -> Model {
    let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let valuation = m
        .valuation
        .iter()
        .map(|(p, s)| (*p, s.iter().filter_map(|w| pos.get(w).copied()).collect()))
        .collect();
    Model { frame: m.frame.restrict(keep), valuation }
}

/// Condition inherited by component `i` from what its cross edges can see.
pub fn external_condition(sm: &SumModel, i: usize, phi: &Formula, gamma: &Condition) -> Result<Condition> {
    if i >= sm.components() {
        return Err(SemanticsError::Component(i));
    }
    let chain = subformula_chain(phi);
    let table = truth_table(&sm.model, &chain, gamma);
    let inside = sm.component_worlds(i);
    let mut out = gamma.clone();
    for (a, rel) in sm.model.frame.relations.iter().enumerate() {
        let seen: BTreeSet<usize> =
            rel.iter().filter(|(x, y)| inside.contains(x) && !inside.contains(y)).map(|(_, y)| *y).collect();
        for (j, row) in table.iter().enumerate() {
            if seen.iter().any(|w| row[*w]) {
                out.per_modality[a].insert(chain.get(j).clone());
            }
        }
    }
    Ok(out)
}

/// Submodel generated by `seeds` under the union of all relations; returns the kept worlds in order.
pub fn generated_submodel(m: &Model, seeds: &[usize]) -> (Model, Vec<usize>) {
    let succ = m.frame.successors();
    let mut seen = vec![false; m.frame.worlds];
    let mut stack: Vec<usize> = seeds.to_vec();
    while let Some(w) = stack.pop() {
        if std::mem::replace(&mut seen[w], true) {
            continue;
        }
        for s in &succ {
            stack.extend(s[w].iter().copied().filter(|v| !seen[*v]));
        }
    }
    let keep: Vec<usize> = (0..m.frame.worlds).filter(|w| seen[*w]).collect();
    (restrict_model(m, &keep), keep)
}

/// Isomorphism of frames by backtracking with degree pruning.
pub fn isomorphic(f: &Frame, g: &Frame) -> bool {
    if f.worlds != g.worlds || f.alphabet() != g.alphabet() {
        return false;
    }
    if f.relations.iter().zip(&g.relations).any(|(r, s)| r.len() != s.len()) {
        return false;
    }
    let sig = |fr: &Frame, w: usize| -> Vec<(usize, usize, bool)> {
        fr.relations
            .iter()
            .map(|r| (r.iter().filter(|p| p.0 == w).count(), r.iter().filter(|p| p.1 == w).count(), r.contains(&(w, w))))
            .collect()
    };
    let fs: Vec<_> = (0..f.worlds).map(|w| sig(f, w)).collect();
    let gs: Vec<_> = (0..g.worlds).map(|w| sig(g, w)).collect();
    let mut a = fs.clone();
    let mut b = gs.clone();
    a.sort();
    b.sort();
    if a != b {
        return false;
    }
    let mut map = vec![usize::MAX; f.worlds];
    let mut used = vec![false; g.worlds];
    fn go(
        x: usize,
        f: &Frame,
        g: &Frame,
        fs: &[Vec<(usize, usize, bool)>],
        gs: &[Vec<(usize, usize, bool)>],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if x == f.worlds {
            return true;
        }
        for y in 0..g.worlds {
            if used[y] || fs[x] != gs[y] {
                continue;
            }
            let ok = (0..x).all(|z| {
                (0..f.alphabet()).all(|a| {
                    f.has_edge(a, x, z) == g.has_edge(a, y, map[z]) && f.has_edge(a, z, x) == g.has_edge(a, map[z], y)
                })
            });
            if !ok {
                continue;
            }
            map[x] = y;
            used[y] = true;
            if go(x + 1, f, g, fs, gs, map, used) {
                return true;
            }
            used[y] = false;
        }
        false
    }
    go(0, f, g, &fs, &gs, &mut map, &mut used)
}
