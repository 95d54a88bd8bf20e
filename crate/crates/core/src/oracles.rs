//! Conditional-satisfiability oracles for summand classes, and the brute-force
//! reference that enumerates small frames.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::formula::Node;
use crate::semantics::{Frame, FrameClassTag, Model};
use crate::ties::{cond_plus_a, FormulaCtx, Tie, TieCond, TieVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle {name} expects alphabet {expected}, tie has {found}")]
    Alphabet { name: String, expected: usize, found: usize },
    #[error("empty oracle list")]
    Empty,
    #[error("no frame generator for {0:?}")]
    UnknownClass(FrameClassTag),
}

/// Receives candidate summand configurations during a sum search.
///
/// A configuration `(ext, excl)` promises a summand model whose realized set
/// lies within the requested bounds whenever the summands above it realize
/// every body in `ext` and none in `excl`; other bodies do not matter.
pub trait ConfigSink {
    /// Early check that body `j` can still be realized above while `excl` stays unrealized.
    fn external_ok(&mut self, j: usize, excl: &TieVec) -> bool;
    /// Returns true to stop the enumeration.
    fn accept(&mut self, ext: &TieVec, excl: &TieVec) -> bool;
}

pub trait SummandOracle: Send + Sync {
    fn name(&self) -> String;
    fn alphabet(&self) -> usize;
    fn tag(&self) -> FrameClassTag;

    /// Some model of the class realizes a set between `lo` and `hi` under `u`.
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool;

    fn csat(&self, ctx: &FormulaCtx, v: &TieVec, u: &TieCond) -> bool {
        self.query(ctx, v, v, u)
    }

    /// Configurations for use as the bottom summand of an `ext`-sum.
    fn configs(
        &self,
        ctx: &FormulaCtx,
        lo: &TieVec,
        hi: &TieVec,
        u: &TieCond,
        ext: Option<usize>,
        sink: &mut dyn ConfigSink,
    ) -> bool {
        generic_configs(ctx, hi, u, ext, sink, &|cond| self.query(ctx, lo, hi, cond))
    }

    fn csat_tie(&self, tie: &Tie) -> Result<bool, OracleError> {
        if tie.u.alphabet() != self.alphabet() {
            return Err(OracleError::Alphabet { name: self.name(), expected: self.alphabet(), found: tie.u.alphabet() });
        }
        let ctx = tie.ctx();
        Ok(self.csat(&ctx, &tie.v, &ctx.canonical_cond(&tie.u)))
    }
}

/// Enumerate the exact set `W` of `a`-bodies realized above and ask `query` under `U +^a W`.
pub fn generic_configs(
    ctx: &FormulaCtx,
    hi: &TieVec,
    u: &TieCond,
    ext: Option<usize>,
    sink: &mut dyn ConfigSink,
    query: &dyn Fn(&TieCond) -> bool,
) -> bool {
    let zero = ctx.zero();
    let Some(a) = ext else {
        return query(u) && sink.accept(&zero, &zero);
    };
    let cand = ctx.bodies[a].minus(u.row(a));
    let open = cand.intersect(hi);
    for w in open.subsets() {
        let excl = cand.minus(&w);
        if w.ones_iter().all(|j| sink.external_ok(j, &excl))
            && query(&cond_plus_a(u, a, &w).unwrap())
            && sink.accept(&w, &excl)
        {
            return true;
        }
    }
    false
}

struct FirstConfig;

impl ConfigSink for FirstConfig {
    fn external_ok(&mut self, _: usize, _: &TieVec) -> bool {
        false
    }
    fn accept(&mut self, _: &TieVec, _: &TieVec) -> bool {
        true
    }
}

/// Classes where every diamond has one truth value across the summand: each
/// relation is either total or empty, on one point or on a cluster of points.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniformShape {
    pub multi: bool,
    pub total: Vec<bool>,
}

#[derive(Clone)]
struct Point {
    vals: Vec<Option<bool>>,
    obligations: Vec<usize>,
}

#[derive(Clone)]
struct State {
    d: Vec<Vec<Option<bool>>>,
    internal: Vec<Vec<bool>>,
    ext: TieVec,
    points: Vec<Point>,
}

#[derive(Clone, Copy)]
enum Atom {
    Var(usize, usize),
    Dia(usize, usize),
}

struct UniformSearch<'a> {
    shape: &'a UniformShape,
    ctx: &'a FormulaCtx,
    hi_out: Vec<usize>,
    u: &'a TieCond,
    ext: Option<usize>,
    sink: &'a mut dyn ConfigSink,
}

impl UniformSearch<'_> {
    fn eval(&self, p: &Point, d: &[Vec<Option<bool>>]) -> Vec<Option<bool>> {
        let chain = &self.ctx.chain;
        let mut t = vec![None; chain.len()];
        for i in chain.bottom_up() {
            t[i] = match chain.node(i) {
                Node::Bot => Some(false),
                Node::Var(_) => p.vals[self.ctx.var_slot[i].unwrap()],
                Node::Dia(c, j) => d[c as usize][j],
                Node::Imp(l, r) => match (t[l], t[r]) {
                    (Some(false), _) | (_, Some(true)) => Some(true),
                    (Some(true), Some(false)) => Some(false),
                    _ => None,
                },
            };
        }
        t
    }

    /// An unknown atom whose value helps make position `i` take value `want`.
    fn pick(&self, pi: usize, t: &[Option<bool>], i: usize, want: bool) -> (Atom, bool) {
        match self.ctx.chain.node(i) {
            Node::Var(_) => (Atom::Var(pi, self.ctx.var_slot[i].unwrap()), want),
            Node::Dia(c, j) => (Atom::Dia(c as usize, j), want),
            Node::Imp(l, r) => {
                if t[l].is_none() {
                    self.pick(pi, t, l, !want)
                } else {
                    self.pick(pi, t, r, want)
                }
            }
            Node::Bot => unreachable!("falsum is never unknown"),
        }
    }

    fn excl(&self, st: &State) -> TieVec {
        let mut out = self.ctx.zero();
        if let Some(a) = self.ext {
            for j in self.ctx.bodies[a].ones_iter() {
                if st.d[a][j] == Some(false) && !self.u.row(a).get(j) {
                    out.set(j, true);
                }
            }
        }
        out
    }

    fn branch(&mut self, st: &State, atom: Atom, first: bool) -> bool {
        for val in [first, !first] {
            let mut next = st.clone();
            match atom {
                Atom::Var(p, s) => next.points[p].vals[s] = Some(val),
                Atom::Dia(c, j) => next.d[c][j] = Some(val),
            }
            if self.run(next) {
                return true;
            }
        }
        false
    }

    fn run(&mut self, st: State) -> bool {
        let tables: Vec<Vec<Option<bool>>> = st.points.iter().map(|p| self.eval(p, &st.d)).collect();
        let alphabet = self.ctx.alphabet;
        for (p, t) in st.points.iter().zip(&tables) {
            if p.obligations.iter().any(|o| t[*o] == Some(false)) || self.hi_out.iter().any(|i| t[*i] == Some(true)) {
                return false;
            }
            for c in (0..alphabet).filter(|c| self.shape.total[*c]) {
                if self.ctx.bodies[c].ones_iter().any(|j| st.d[c][j] == Some(false) && t[j] == Some(true)) {
                    return false;
                }
            }
        }
        for (pi, (p, t)) in st.points.iter().zip(&tables).enumerate() {
            if let Some(&o) = p.obligations.iter().find(|o| t[**o].is_none()) {
                let (atom, val) = self.pick(pi, t, o, true);
                return self.branch(&st, atom, val);
            }
        }
        for (pi, t) in tables.iter().enumerate() {
            if let Some(&i) = self.hi_out.iter().find(|i| t[**i].is_none()) {
                let (atom, val) = self.pick(pi, t, i, false);
                return self.branch(&st, atom, val);
            }
        }
        for c in (0..alphabet).filter(|c| self.shape.total[*c]) {
            for j in self.ctx.bodies[c].ones_iter() {
                if st.d[c][j] != Some(false) {
                    continue;
                }
                if let Some(pi) = tables.iter().position(|t| t[j].is_none()) {
                    let (atom, val) = self.pick(pi, &tables[pi], j, false);
                    return self.branch(&st, atom, val);
                }
            }
        }
        for c in 0..alphabet {
            for j in self.ctx.bodies[c].ones_iter() {
                if st.d[c][j] != Some(true) || self.u.row(c).get(j) {
                    continue;
                }
                let can_ext = self.ext == Some(c);
                if can_ext && st.ext.get(j) {
                    continue;
                }
                if self.shape.total[c] {
                    if st.internal[c][j] || tables.iter().any(|t| t[j] == Some(true)) {
                        continue;
                    }
                    let mut inside = st.clone();
                    inside.internal[c][j] = true;
                    if self.shape.multi {
                        inside.points.push(Point { vals: vec![None; self.ctx.vars.len()], obligations: vec![j] });
                    } else {
                        inside.points[0].obligations.push(j);
                    }
                    if self.run(inside) {
                        return true;
                    }
                }
                if !can_ext || !self.sink.external_ok(j, &self.excl(&st)) {
                    return false;
                }
                let mut outside = st.clone();
                outside.ext.set(j, true);
                return self.run(outside);
            }
        }
        let excl = self.excl(&st);
        self.sink.accept(&st.ext, &excl)
    }
}

pub fn uniform_configs(
    shape: &UniformShape,
    ctx: &FormulaCtx,
    lo: &TieVec,
    hi: &TieVec,
    u: &TieCond,
    ext: Option<usize>,
    sink: &mut dyn ConfigSink,
) -> bool {
    assert_eq!(shape.total.len(), ctx.alphabet, "shape alphabet");
    if !lo.is_subset(hi) {
        return false;
    }
    let n = ctx.len();
    let mut d = vec![vec![None; n]; ctx.alphabet];
    for (c, row) in d.iter_mut().enumerate() {
        for j in ctx.bodies[c].ones_iter() {
            row[j] = if u.row(c).get(j) {
                Some(true)
            } else if shape.total[c] || ext == Some(c) {
                None
            } else {
                Some(false)
            };
        }
    }
    let blank = Point { vals: vec![None; ctx.vars.len()], obligations: Vec::new() };
    let points = if !shape.multi {
        vec![Point { obligations: lo.ones_iter().collect(), ..blank }]
    } else if lo.is_zero() {
        vec![blank]
    } else {
        lo.ones_iter().map(|i| Point { obligations: vec![i], ..blank.clone() }).collect()
    };
    let st = State { d, internal: vec![vec![false; n]; ctx.alphabet], ext: ctx.zero(), points };
    let hi_out = (0..n).filter(|i| !hi.get(*i)).collect();
    UniformSearch { shape, ctx, hi_out, u, ext, sink }.run(st)
}

pub struct UniformOracle {
    name: String,
    tag: FrameClassTag,
    shape: UniformShape,
}

impl UniformOracle {
    pub fn new(name: &str, tag: FrameClassTag, shape: UniformShape) -> Self {
        UniformOracle { name: name.to_string(), tag, shape }
    }

    pub fn shape(&self) -> &UniformShape {
        &self.shape
    }
}

impl SummandOracle for UniformOracle {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn alphabet(&self) -> usize {
        self.shape.total.len()
    }
    fn tag(&self) -> FrameClassTag {
        self.tag.clone()
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        uniform_configs(&self.shape, ctx, lo, hi, u, None, &mut FirstConfig)
    }
    fn configs(
        &self,
        ctx: &FormulaCtx,
        lo: &TieVec,
        hi: &TieVec,
        u: &TieCond,
        ext: Option<usize>,
        sink: &mut dyn ConfigSink,
    ) -> bool {
        uniform_configs(&self.shape, ctx, lo, hi, u, ext, sink)
    }
}

/// Unimodal clusters `(C, C x C)`.
pub fn cluster_oracle() -> UniformOracle {
    UniformOracle::new("cluster", FrameClassTag::Clusters, UniformShape { multi: true, total: vec![true] })
}

/// One point; with `reflexive` the single relation is the loop, otherwise all `alphabet` relations are empty.
pub fn singleton_oracle(reflexive: bool, alphabet: usize) -> UniformOracle {
    if reflexive {
        UniformOracle::new("S1", FrameClassTag::ReflexiveSingleton, UniformShape { multi: false, total: vec![true] })
    } else {
        UniformOracle::new(
            if alphabet == 1 { "S0" } else { "S_A" },
            FrameClassTag::IrreflexiveSingleton { alphabet },
            UniformShape { multi: false, total: vec![false; alphabet] },
        )
    }
}

/// Two-relation frames `(C, empty, C x C)`.
pub fn bimodal_cluster_oracle() -> UniformOracle {
    UniformOracle::new("C", FrameClassTag::BimodalClusters, UniformShape { multi: true, total: vec![false, true] })
}

/// Multi-point frames with every relation empty, i.e. finite disjoint unions of `S_A`.
pub fn discrete_oracle(alphabet: usize) -> UniformOracle {
    UniformOracle::new(
        "discrete",
        FrameClassTag::IrreflexiveSingleton { alphabet },
        UniformShape { multi: true, total: vec![false; alphabet] },
    )
}

pub fn singleton_csat(tie: &Tie, reflexive: bool, alphabet: usize) -> Result<bool, OracleError> {
    singleton_oracle(reflexive, alphabet).csat_tie(tie)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DifferenceVariant {
    /// Every difference frame.
    All,
    /// At most one irreflexive point.
    T0,
    /// No two points, equal or not, without a common successor.
    Confluent,
}

/// Unimodal frames where `xRy` for all `x != y`, with arbitrary reflexivity.
pub struct DifferenceOracle {
    variant: DifferenceVariant,
}

impl DifferenceOracle {
    pub fn new(variant: DifferenceVariant) -> Self {
        DifferenceOracle { variant }
    }
}

struct PointType {
    truth: TieVec,
    reflexive: bool,
}

impl DifferenceOracle {
    /// Fixed witness counts `w[j]` (0, 1 or at least 2) for every open body.
    fn with_counts(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond, w: &[u8]) -> bool {
        let n = ctx.len();
        let nv = ctx.vars.len();
        let mut once = ctx.zero();
        let mut never = ctx.zero();
        let mut many = ctx.zero();
        for j in ctx.bodies[0].ones_iter() {
            if u.row(0).get(j) {
                continue;
            }
            match w[j] {
                0 => never.set(j, true),
                1 => once.set(j, true),
                _ => many.set(j, true),
            }
        }
        let mut types = Vec::new();
        for code in 0u64..(1 << nv) {
            for reflexive in [true, false] {
                let mut t = vec![false; n];
                for i in ctx.chain.bottom_up() {
                    t[i] = match ctx.chain.node(i) {
                        Node::Bot => false,
                        Node::Var(_) => code >> ctx.var_slot[i].unwrap() & 1 == 1,
                        Node::Imp(l, r) => !t[l] || t[r],
                        Node::Dia(_, j) => {
                            u.row(0).get(j) || w[j] >= 2 || (w[j] == 1 && (!t[j] || reflexive))
                        }
                    };
                }
                let truth = TieVec::from_indices(n, (0..n).filter(|i| t[*i]));
                if truth.is_subset(hi) && !truth.intersects(&never) {
                    types.push(PointType { truth, reflexive });
                }
            }
        }
        let (free, single): (Vec<&PointType>, Vec<&PointType>) = types.iter().partition(|t| !t.truth.intersects(&once));
        match self.variant {
            DifferenceVariant::T0 => {
                let free_refl: Vec<&PointType> = free.iter().copied().filter(|t| t.reflexive).collect();
                let single_refl: Vec<&PointType> = single.iter().copied().filter(|t| t.reflexive).collect();
                let irr = types.iter().filter(|t| !t.reflexive).map(Some);
                std::iter::once(None).chain(irr).any(|extra| {
                    let fixed: Vec<&PointType> = extra.into_iter().collect();
                    cover_search(ctx, lo, &once, &many, &free_refl, &single_refl, &fixed, &mut |_| true)
                })
            }
            DifferenceVariant::All => cover_search(ctx, lo, &once, &many, &free, &single, &[], &mut |_| true),
            DifferenceVariant::Confluent => cover_search(ctx, lo, &once, &many, &free, &single, &[], &mut |chosen| {
                !free.is_empty() || chosen.len() > 2 || chosen.iter().any(|t| t.reflexive)
            }),
        }
    }
}

/// Every allowed free type is used at least twice; singular types must
/// contain each once-realized body exactly once overall.
#[allow(clippy::too_many_arguments)]
fn cover_search(
    ctx: &FormulaCtx,
    lo: &TieVec,
    once: &TieVec,
    many: &TieVec,
    free: &[&PointType],
    single: &[&PointType],
    fixed: &[&PointType],
    accept: &mut dyn FnMut(&[&PointType]) -> bool,
) -> bool {
    let mut covered = ctx.zero();
    for t in fixed {
        if t.truth.intersect(once).intersects(&covered) {
            return false;
        }
        covered.union_with(&t.truth.intersect(once));
    }
    let mut chosen: Vec<&PointType> = fixed.to_vec();
    fn go<'a>(
        ctx: &FormulaCtx,
        lo: &TieVec,
        once: &TieVec,
        many: &TieVec,
        free: &[&PointType],
        single: &[&'a PointType],
        covered: &mut TieVec,
        chosen: &mut Vec<&'a PointType>,
        accept: &mut dyn FnMut(&[&PointType]) -> bool,
    ) -> bool {
        let Some(next) = once.minus(covered).ones_iter().next() else {
            if free.is_empty() && chosen.is_empty() {
                return false;
            }
            let mut union = ctx.zero();
            let mut twice = ctx.zero();
            for t in free {
                union.union_with(&t.truth);
                twice.union_with(&t.truth);
            }
            for t in chosen.iter() {
                twice.union_with(&union.intersect(&t.truth));
                union.union_with(&t.truth);
            }
            return lo.is_subset(&union) && many.is_subset(&twice) && accept(chosen);
        };
        for t in single {
            let mine = t.truth.intersect(once);
            if !mine.get(next) || mine.intersects(covered) {
                continue;
            }
            covered.union_with(&mine);
            chosen.push(t);
            if go(ctx, lo, once, many, free, single, covered, chosen, accept) {
                return true;
            }
            chosen.pop();
            *covered = covered.minus(&mine);
        }
        false
    }
    go(ctx, lo, once, many, free, single, &mut covered, &mut chosen, accept)
}

impl SummandOracle for DifferenceOracle {
    fn name(&self) -> String {
        match self.variant {
            DifferenceVariant::All => "difference",
            DifferenceVariant::T0 => "t0_difference",
            DifferenceVariant::Confluent => "confluent_difference",
        }
        .to_string()
    }
    fn alphabet(&self) -> usize {
        1
    }
    fn tag(&self) -> FrameClassTag {
        match self.variant {
            DifferenceVariant::All => FrameClassTag::DifferenceFrames,
            DifferenceVariant::T0 => FrameClassTag::T0DifferenceFrames,
            DifferenceVariant::Confluent => FrameClassTag::ConfluentDifferenceFrames,
        }
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        if !lo.is_subset(hi) {
            return false;
        }
        let open: Vec<usize> = ctx.bodies[0].minus(u.row(0)).ones_iter().collect();
        let mut w = vec![0u8; ctx.len()];
        fn go(o: &DifferenceOracle, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond, open: &[usize], k: usize, w: &mut Vec<u8>) -> bool {
            if k == open.len() {
                return o.with_counts(ctx, lo, hi, u, w);
            }
            let j = open[k];
            let top = if hi.get(j) { 2 } else { 0 };
            for c in 0..=top {
                w[j] = c;
                if go(o, ctx, lo, hi, u, open, k + 1, w) {
                    return true;
                }
            }
            w[j] = 0;
            false
        }
        go(self, ctx, lo, hi, u, &open, 0, &mut w)
    }
}

pub struct UnionOracle {
    members: Vec<Arc<dyn SummandOracle>>,
}

impl UnionOracle {
    pub fn new(members: Vec<Arc<dyn SummandOracle>>) -> Result<Self, OracleError> {
        let first = members.first().ok_or(OracleError::Empty)?;
        if let Some(m) = members.iter().find(|m| m.alphabet() != first.alphabet()) {
            return Err(OracleError::Alphabet { name: m.name(), expected: first.alphabet(), found: m.alphabet() });
        }
        Ok(UnionOracle { members })
    }
}

impl SummandOracle for UnionOracle {
    fn name(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.name()).collect();
        format!("union({})", names.join(","))
    }
    fn alphabet(&self) -> usize {
        self.members[0].alphabet()
    }
    fn tag(&self) -> FrameClassTag {
        self.members[0].tag()
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        self.members.iter().any(|m| m.query(ctx, lo, hi, u))
    }
    fn csat(&self, ctx: &FormulaCtx, v: &TieVec, u: &TieCond) -> bool {
        self.members.iter().any(|m| m.csat(ctx, v, u))
    }
    fn configs(
        &self,
        ctx: &FormulaCtx,
        lo: &TieVec,
        hi: &TieVec,
        u: &TieCond,
        ext: Option<usize>,
        sink: &mut dyn ConfigSink,
    ) -> bool {
        self.members.iter().any(|m| m.configs(ctx, lo, hi, u, ext, sink))
    }
}

pub fn union_oracle(members: Vec<Arc<dyn SummandOracle>>) -> Result<UnionOracle, OracleError> {
    UnionOracle::new(members)
}

// ---------------------------------------------------------------------------
// Brute force

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelBudget {
    pub max_worlds: usize,
}

impl ModelBudget {
    pub fn new(max_worlds: usize) -> Self {
        ModelBudget { max_worlds: max_worlds.max(1) }
    }
}

/// Frame over at most 64 worlds as successor bitmasks, `succ[a][w]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitFrame {
    pub n: usize,
    pub succ: Vec<Vec<u64>>,
}

impl BitFrame {
    pub fn to_frame(&self) -> Frame {
        let relations = self
            .succ
            .iter()
            .map(|r| (0..self.n).flat_map(|x| (0..self.n).filter(move |y| r[x] >> y & 1 == 1).map(move |y| (x, y))).collect())
            .collect();
        Frame::new(self.n, relations).unwrap()
    }

    pub fn from_frame(f: &Frame) -> BitFrame {
        let mut succ = vec![vec![0u64; f.worlds()]; f.alphabet()];
        for (a, r) in f.relations().iter().enumerate() {
            for &(x, y) in r {
                succ[a][x] |= 1 << y;
            }
        }
        BitFrame { n: f.worlds(), succ }
    }

    /// Groups of pairwise interchangeable worlds.
    fn twin_groups(&self) -> Vec<Vec<usize>> {
        let twins = |x: usize, y: usize| {
            let others = !((1u64 << x) | (1u64 << y));
            self.succ.iter().all(|r| {
                let loop_x = r[x] >> x & 1;
                let loop_y = r[y] >> y & 1;
                let xy = r[x] >> y & 1;
                let yx = r[y] >> x & 1;
                loop_x == loop_y
                    && xy == yx
                    && r[x] & others == r[y] & others
                    && (0..self.n).filter(|z| *z != x && *z != y).all(|z| (r[z] >> x & 1) == (r[z] >> y & 1))
            })
        };
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for x in 0..self.n {
            match groups.iter_mut().find(|g| g.iter().all(|y| twins(x, *y))) {
                Some(g) => g.push(x),
                None => groups.push(vec![x]),
            }
        }
        groups
    }
}

fn is_transitive(r: &[u64]) -> bool {
    (0..r.len()).all(|x| (0..r.len()).filter(|y| r[x] >> y & 1 == 1).all(|y| r[y] & !r[x] == 0))
}

fn is_weakly_transitive(r: &[u64]) -> bool {
    (0..r.len()).all(|x| (0..r.len()).filter(|y| r[x] >> y & 1 == 1).all(|y| r[y] & !r[x] & !(1u64 << x) == 0))
}

fn is_reflexive(r: &[u64]) -> bool {
    (0..r.len()).all(|x| r[x] >> x & 1 == 1)
}

fn is_irreflexive(r: &[u64]) -> bool {
    (0..r.len()).all(|x| r[x] >> x & 1 == 0)
}

fn is_antisymmetric(r: &[u64]) -> bool {
    (0..r.len()).all(|x| (0..r.len()).filter(|y| *y != x && r[x] >> y & 1 == 1).all(|y| r[y] >> x & 1 == 0))
}

fn is_confluent(r: &[u64]) -> bool {
    let n = r.len();
    (0..n).all(|x| {
        let s: Vec<usize> = (0..n).filter(|y| r[x] >> y & 1 == 1).collect();
        s.iter().all(|&a| s.iter().all(|&b| r[a] & r[b] != 0))
    })
}

fn is_tree(r: &[u64], h: usize, b: usize) -> bool {
    let n = r.len();
    if !is_irreflexive(r) || !is_transitive(r) {
        return false;
    }
    let preds = |y: usize| (0..n).filter(move |x| r[*x] >> y & 1 == 1);
    let roots = (0..n).filter(|y| preds(*y).next().is_none()).count();
    if roots != 1 {
        return false;
    }
    let chain_preds = (0..n).all(|y| {
        let p: Vec<usize> = preds(y).collect();
        p.iter().all(|&a| p.iter().all(|&c| a == c || r[a] >> c & 1 == 1 || r[c] >> a & 1 == 1))
    });
    let height = (0..n).map(|y| preds(y).count() + 1).max().unwrap_or(0);
    let branching = (0..n)
        .map(|x| (0..n).filter(|y| r[x] >> y & 1 == 1 && preds(*y).count() == preds(x).count() + 1).count())
        .max()
        .unwrap_or(0);
    chain_preds && height <= h && branching <= b
}

fn canonical(f: &BitFrame) -> BitFrame {
    let n = f.n;
    let sig: Vec<Vec<(u32, u32, u64)>> = (0..n)
        .map(|x| {
            f.succ
                .iter()
                .map(|r| (r[x].count_ones(), (0..n).filter(|z| r[*z] >> x & 1 == 1).count() as u32, r[x] >> x & 1))
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| sig[*a].cmp(&sig[*b]));
    let mut best: Option<Vec<Vec<u64>>> = None;
    let mut perm = order.clone();
    fn encode(f: &BitFrame, perm: &[usize]) -> Vec<Vec<u64>> {
        f.succ
            .iter()
            .map(|r| {
                perm.iter()
                    .map(|&x| perm.iter().enumerate().fold(0u64, |acc, (i, &y)| acc | ((r[x] >> y & 1) << i)))
                    .collect()
            })
            .collect()
    }
    fn rec(
        f: &BitFrame,
        sig: &[Vec<(u32, u32, u64)>],
        perm: &mut Vec<usize>,
        k: usize,
        best: &mut Option<Vec<Vec<u64>>>,
    ) {
        if k == perm.len() {
            let e = encode(f, perm);
            if best.as_ref().is_none_or(|b| e < *b) {
                *best = Some(e);
            }
            return;
        }
        for i in k..perm.len() {
            if sig[perm[i]] != sig[perm[k]] {
                continue;
            }
            perm.swap(k, i);
            rec(f, sig, perm, k + 1, best);
            perm.swap(k, i);
        }
    }
    rec(f, &sig, &mut perm, 0, &mut best);
    BitFrame { n, succ: best.unwrap() }
}

type FrameCache = Mutex<HashMap<(FrameClassTag, usize), Arc<Vec<BitFrame>>>>;

fn cache() -> &'static FrameCache {
    static CACHE: OnceLock<FrameCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Unimodal classes closed under induced subframes, grown one point at a time.
fn hereditary(pred: fn(&[u64]) -> bool, n: usize, key: FrameClassTag) -> Result<Arc<Vec<BitFrame>>, OracleError> {
    if let Some(hit) = cache().lock().unwrap().get(&(key.clone(), n)) {
        return Ok(hit.clone());
    }
    let out: Vec<BitFrame> = if n == 1 {
        [0u64, 1].iter().map(|&r| BitFrame { n: 1, succ: vec![vec![r]] }).filter(|f| pred(&f.succ[0])).collect()
    } else {
        let prev = hereditary(pred, n - 1, key.clone())?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let m = n - 1;
        for f in prev.iter() {
            for out_mask in 0u64..(1 << n) {
                for in_mask in 0u64..(1 << m) {
                    let mut r = f.succ[0].clone();
                    for (x, row) in r.iter_mut().enumerate() {
                        if in_mask >> x & 1 == 1 {
                            *row |= 1 << m;
                        }
                    }
                    r.push(out_mask);
                    if pred(&r) {
                        let c = canonical(&BitFrame { n, succ: vec![r] });
                        if seen.insert(c.succ.clone()) {
                            out.push(c);
                        }
                    }
                }
            }
        }
        out
    };
    let out = Arc::new(out);
    cache().lock().unwrap().insert((key, n), out.clone());
    Ok(out)
}

/// All frames of `tag` with exactly `n` worlds, up to isomorphism where cheap.
pub fn class_frames(tag: &FrameClassTag, n: usize) -> Result<Arc<Vec<BitFrame>>, OracleError> {
    assert!((1..=8).contains(&n), "frame size {n} outside the supported range");
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let single = |succ: Vec<Vec<u64>>| Ok(Arc::new(vec![BitFrame { n, succ }]));
    match tag {
        FrameClassTag::Clusters => single(vec![vec![full; n]]),
        FrameClassTag::BimodalClusters => single(vec![vec![0; n], vec![full; n]]),
        FrameClassTag::IrreflexiveSingleton { alphabet } => {
            if n == 1 {
                single(vec![vec![0]; *alphabet])
            } else {
                Ok(Arc::new(Vec::new()))
            }
        }
        FrameClassTag::ReflexiveSingleton => {
            if n == 1 {
                single(vec![vec![1]])
            } else {
                Ok(Arc::new(Vec::new()))
            }
        }
        FrameClassTag::DifferenceFrames | FrameClassTag::T0DifferenceFrames | FrameClassTag::ConfluentDifferenceFrames => {
            let frames = (0..=n)
                .filter(|refl| match tag {
                    FrameClassTag::T0DifferenceFrames => n - refl <= 1,
                    FrameClassTag::ConfluentDifferenceFrames => n >= 3 || *refl > 0,
                    _ => true,
                })
                .map(|refl| BitFrame { n, succ: vec![(0..n).map(|x| (full & !(1 << x)) | if x < refl { 1 << x } else { 0 }).collect()] })
                .collect();
            Ok(Arc::new(frames))
        }
        FrameClassTag::Preorders => hereditary(|r| is_reflexive(r) && is_transitive(r), n, tag.clone()),
        FrameClassTag::PartialOrders => {
            hereditary(|r| is_reflexive(r) && is_transitive(r) && is_antisymmetric(r), n, tag.clone())
        }
        FrameClassTag::StrictPartialOrders => hereditary(|r| is_irreflexive(r) && is_transitive(r), n, tag.clone()),
        FrameClassTag::AntisymmetricTransitive => hereditary(|r| is_transitive(r) && is_antisymmetric(r), n, tag.clone()),
        FrameClassTag::Transitive => hereditary(is_transitive, n, tag.clone()),
        FrameClassTag::WeaklyTransitive => hereditary(is_weakly_transitive, n, tag.clone()),
        FrameClassTag::WeaklyTransitiveConfluent => {
            let all = class_frames(&FrameClassTag::WeaklyTransitive, n)?;
            Ok(Arc::new(all.iter().filter(|f| is_confluent(&f.succ[0])).cloned().collect()))
        }
        FrameClassTag::FiniteTrees { h, b } => {
            let all = class_frames(&FrameClassTag::StrictPartialOrders, n)?;
            Ok(Arc::new(all.iter().filter(|f| is_tree(&f.succ[0], *h, *b)).cloned().collect()))
        }
        FrameClassTag::UniversalLifted(inner) => {
            let inner = class_frames(inner, n)?;
            Ok(Arc::new(
                inner
                    .iter()
                    .map(|f| {
                        let mut succ = vec![vec![full; n]];
                        succ.extend(f.succ.iter().cloned());
                        BitFrame { n, succ }
                    })
                    .collect(),
            ))
        }
    }
}

pub fn tag_alphabet(tag: &FrameClassTag) -> usize {
    match tag {
        FrameClassTag::IrreflexiveSingleton { alphabet } => *alphabet,
        FrameClassTag::BimodalClusters => 2,
        FrameClassTag::UniversalLifted(inner) => 1 + tag_alphabet(inner),
        _ => 1,
    }
}

/// Truth masks of every chain position under `u` for valuation `val` (one mask per variable slot).
pub fn bit_table(ctx: &FormulaCtx, f: &BitFrame, val: &[u64], u: &TieCond) -> Vec<u64> {
    let full = if f.n == 64 { u64::MAX } else { (1u64 << f.n) - 1 };
    let mut t = vec![0u64; ctx.len()];
    for i in ctx.chain.bottom_up() {
        t[i] = match ctx.chain.node(i) {
            Node::Bot => 0,
            Node::Var(_) => val[ctx.var_slot[i].unwrap()],
            Node::Imp(l, r) => (!t[l] | t[r]) & full,
            Node::Dia(a, j) => {
                let a = a as usize;
                if u.row(a).get(j) {
                    full
                } else {
                    let target = t[j];
                    (0..f.n).filter(|w| f.succ[a][*w] & target != 0).fold(0, |acc, w| acc | 1 << w)
                }
            }
        };
    }
    t
}

pub fn bit_characterize(ctx: &FormulaCtx, f: &BitFrame, val: &[u64], u: &TieCond) -> TieVec {
    let t = bit_table(ctx, f, val, u);
    TieVec::from_indices(ctx.len(), (0..ctx.len()).filter(|i| t[*i] != 0))
}

/// Calls `visit` on every valuation of `f` over the formula's variables, one
/// representative per permutation of interchangeable worlds; stops when it returns true.
pub fn for_each_valuation(f: &BitFrame, nvars: usize, visit: &mut dyn FnMut(&[u64]) -> bool) -> bool {
    let groups = f.twin_groups();
    let types = 1usize << nvars;
    let mut assign = vec![0usize; f.n];
    fn go(
        groups: &[Vec<usize>],
        gi: usize,
        k: usize,
        min: usize,
        types: usize,
        nvars: usize,
        assign: &mut [usize],
        visit: &mut dyn FnMut(&[u64]) -> bool,
    ) -> bool {
        if gi == groups.len() {
            let val: Vec<u64> = (0..nvars)
                .map(|s| assign.iter().enumerate().fold(0u64, |acc, (w, t)| acc | (((*t >> s) & 1) as u64) << w))
                .collect();
            return visit(&val);
        }
        if k == groups[gi].len() {
            return go(groups, gi + 1, 0, 0, types, nvars, assign, visit);
        }
        for t in min..types {
            assign[groups[gi][k]] = t;
            if go(groups, gi, k + 1, t, types, nvars, assign, visit) {
                return true;
            }
        }
        false
    }
    go(&groups, 0, 0, 0, types, nvars, &mut assign, visit)
}

/// A model of the class within budget whose realized set lies between `lo` and `hi`.
pub fn brute_find(
    tag: &FrameClassTag,
    budget: ModelBudget,
    ctx: &FormulaCtx,
    lo: &TieVec,
    hi: &TieVec,
    u: &TieCond,
) -> Result<Option<(BitFrame, Vec<u64>)>, OracleError> {
    if tag_alphabet(tag) != ctx.alphabet {
        return Err(OracleError::Alphabet { name: format!("{tag:?}"), expected: tag_alphabet(tag), found: ctx.alphabet });
    }
    for n in 1..=budget.max_worlds {
        for f in class_frames(tag, n)?.iter() {
            let mut found = None;
            for_each_valuation(f, ctx.vars.len(), &mut |val| {
                let c = bit_characterize(ctx, f, val, u);
                if lo.is_subset(&c) && c.is_subset(hi) {
                    found = Some(val.to_vec());
                    true
                } else {
                    false
                }
            });
            if let Some(val) = found {
                return Ok(Some((f.clone(), val)));
            }
        }
    }
    Ok(None)
}

pub fn brute_csat(tag: &FrameClassTag, budget: ModelBudget, tie: &Tie) -> Result<bool, OracleError> {
    let ctx = tie.ctx();
    Ok(brute_find(tag, budget, &ctx, &tie.v, &tie.v, &tie.u)?.is_some())
}

/// Some model of the class within budget makes `phi` true somewhere; the witness is returned.
pub fn brute_sat(tag: &FrameClassTag, budget: ModelBudget, ctx: &FormulaCtx) -> Result<Option<Model>, OracleError> {
    let all = TieVec::ones(ctx.len());
    Ok(brute_find(tag, budget, ctx, &ctx.root_only(), &all, &ctx.zero_cond())?.map(|(f, val)| to_model(ctx, &f, &val)))
}

pub fn to_model(ctx: &FormulaCtx, f: &BitFrame, val: &[u64]) -> Model {
    let valuation: BTreeMap<u32, BTreeSet<usize>> = ctx
        .vars
        .iter()
        .enumerate()
        .map(|(s, p)| (*p, (0..f.n).filter(|w| val[s] >> w & 1 == 1).collect()))
        .collect();
    Model::new(f.to_frame(), valuation).unwrap()
}

pub struct BruteOracle {
    tag: FrameClassTag,
    budget: ModelBudget,
}

impl BruteOracle {
    pub fn new(tag: FrameClassTag, budget: ModelBudget) -> Self {
        BruteOracle { tag, budget }
    }
}

impl SummandOracle for BruteOracle {
    fn name(&self) -> String {
        format!("brute({:?},{})", self.tag, self.budget.max_worlds)
    }
    fn alphabet(&self) -> usize {
        tag_alphabet(&self.tag)
    }
    fn tag(&self) -> FrameClassTag {
        self.tag.clone()
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        brute_find(&self.tag, self.budget, ctx, lo, hi, u).expect("brute oracle class").is_some()
    }
}
