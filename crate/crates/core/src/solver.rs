//! Sum decision procedures over tree-indexed sums, the nested procedure for
//! J, and the named logic presets.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::formula::{hat_normalize, Formula};
use crate::oracles::{
    bimodal_cluster_oracle, cluster_oracle, singleton_oracle, BruteOracle, ConfigSink, DifferenceOracle,
    DifferenceVariant, ModelBudget, OracleError, SummandOracle, UnionOracle,
};
use crate::semantics::FrameClassTag;
use crate::ties::{cond_plus_a, enumerate_covers, FormulaCtx, Tie, TieCond, TieVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("formula needs {needed} modalities, {logic} has {alphabet}")]
    Alphabet { logic: String, needed: usize, alphabet: usize },
    #[error("unknown logic {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub h: usize,
    pub b: usize,
}

impl TreeParams {
    pub fn new(h: usize, b: usize) -> Result<Self, SolverError> {
        if h == 0 || b == 0 {
            return Err(SolverError::Params(format!("h={h}, b={b}; both must be positive")));
        }
        Ok(TreeParams { h, b })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub oracle_calls: u64,
    pub max_recursion_depth: usize,
    pub memo_hits: u64,
}

impl std::fmt::Display for SearchStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "oracle_calls={} max_depth={} memo_hits={}", self.oracle_calls, self.max_recursion_depth, self.memo_hits)
    }
}

fn check_tie(tie: &Tie, a: usize) -> Result<FormulaCtx, SolverError> {
    if a >= tie.u.alphabet() {
        return Err(SolverError::Params(format!("modality {a} outside alphabet {}", tie.u.alphabet())));
    }
    Ok(tie.ctx())
}

/// Whether `w` is the union of at most `bound` members of `parts` (members may repeat).
fn is_union_of(parts: &[TieVec], w: &TieVec, bound: usize) -> bool {
    let inside: Vec<&TieVec> = parts.iter().filter(|p| p.is_subset(w)).collect();
    if inside.is_empty() || bound == 0 {
        return false;
    }
    let cover = inside.iter().fold(w.minus(w), |acc, p| acc.union(p));
    if cover != *w {
        return false;
    }
    if w.count() <= bound {
        return true;
    }
    fn search(inside: &[&TieVec], left: &TieVec, bound: usize) -> bool {
        let Some(bit) = left.ones_iter().next() else { return true };
        bound > 0 && inside.iter().any(|p| p.get(bit) && search(inside, &left.minus(p), bound - 1))
    }
    search(&inside, w, bound)
}

type SumKey = (TieVec, TieCond, usize, usize, usize);

/// Exact recursion over ties for sums indexed by `Tr(h, b)`, with optional nesting.
struct TieSearch<'a> {
    ctx: &'a FormulaCtx,
    memo: Option<HashMap<SumKey, bool>>,
    stats: SearchStats,
    literal: bool,
    base: &'a dyn Fn(&FormulaCtx, &TieVec, &TieCond, usize) -> Option<bool>,
    levels: usize,
}

impl TieSearch<'_> {
    /// Summand test at level `lvl`: the base oracle, or a sum at `lvl + 1` with parameters `(levels, levels)`.
    fn summand(&mut self, v: &TieVec, u: &TieCond, lvl: usize, depth: usize) -> bool {
        if let Some(ans) = (self.base)(self.ctx, v, u, lvl) {
            self.stats.oracle_calls += 1;
            return ans;
        }
        self.sum(v, u, self.levels, self.levels, lvl + 1, depth + 1)
    }

    fn sum(&mut self, v: &TieVec, u: &TieCond, h: usize, b: usize, lvl: usize, depth: usize) -> bool {
        self.stats.max_recursion_depth = self.stats.max_recursion_depth.max(depth);
        let u = self.ctx.canonical_cond(u);
        let key = (v.clone(), u.clone(), h, b, lvl);
        if let Some(memo) = &self.memo {
            if let Some(&hit) = memo.get(&key) {
                self.stats.memo_hits += 1;
                return hit;
            }
        }
        let ans = self.sum_uncached(v, &u, h, b, lvl, depth);
        if let Some(memo) = &mut self.memo {
            memo.insert(key, ans);
        }
        ans
    }

    fn sum_uncached(&mut self, v: &TieVec, u: &TieCond, h: usize, b: usize, lvl: usize, depth: usize) -> bool {
        if self.summand(v, u, lvl, depth) {
            return true;
        }
        if h <= 1 {
            return false;
        }
        let a = lvl;
        if self.literal {
            for k in 1..=b {
                for (top, parts) in enumerate_covers(v, k) {
                    let w = parts.iter().fold(self.ctx.zero(), |acc, p| acc.union(p));
                    if self.summand(&top, &cond_plus_a(u, a, &w).unwrap(), lvl, depth)
                        && parts.iter().all(|p| self.sum(p, u, h - 1, b, lvl, depth + 1))
                    {
                        return true;
                    }
                }
            }
            return false;
        }
        let bits: Vec<usize> = v.ones_iter().collect();
        let k = bits.len();
        let n = v.len();
        let sub = |mask: usize| TieVec::from_indices(n, (0..k).filter(|i| mask >> i & 1 == 1).map(|i| bits[i]));
        let feasible: Vec<bool> = (0..1usize << k).map(|m| self.sum(&sub(m), u, h - 1, b, lvl, depth + 1)).collect();
        let unions: Vec<usize> = if b >= k {
            // Every union of feasible parts inside v uses at most |v| of them.
            let mut cover: Vec<usize> = (0..1usize << k).map(|m| if feasible[m] { m } else { 0 }).collect();
            for i in 0..k {
                for m in 0..1usize << k {
                    if m >> i & 1 == 1 {
                        cover[m] |= cover[m ^ (1 << i)];
                    }
                }
            }
            (0..1usize << k).filter(|&m| cover[m] == m && (m != 0 || feasible[0])).collect()
        } else {
            let parts: Vec<TieVec> = (0..1usize << k).filter(|&m| feasible[m]).map(sub).collect();
            (0..1usize << k).filter(|&m| is_union_of(&parts, &sub(m), b)).collect()
        };
        for w in unions.into_iter().map(sub) {
            let must = v.minus(&w);
            let cond = cond_plus_a(u, a, &w).unwrap();
            for extra in v.intersect(&w).subsets() {
                if self.summand(&must.union(&extra), &cond, lvl, depth) {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub memo: bool,
    /// Walk every cover tuple instead of grouping by feasible parts.
    pub literal_covers: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { memo: true, literal_covers: false }
    }
}

/// Satisfiability of `tie` in sums over `Tr(h, b)` along modality `a`, with search statistics.
pub fn csat_sum_with(
    tie: &Tie,
    params: TreeParams,
    a: usize,
    oracle: &dyn SummandOracle,
    opts: SearchOptions,
) -> Result<(bool, SearchStats), SolverError> {
    let ctx = check_tie(tie, a)?;
    let base = |c: &FormulaCtx, v: &TieVec, u: &TieCond, _: usize| Some(oracle.csat(c, v, u));
    let mut s = TieSearch {
        ctx: &ctx,
        memo: opts.memo.then(HashMap::new),
        stats: SearchStats::default(),
        literal: opts.literal_covers,
        base: &base,
        levels: 0,
    };
    let ans = s.sum_at(&tie.v, &ctx.canonical_cond(&tie.u), params.h, params.b, a);
    Ok((ans, s.stats))
}

impl TieSearch<'_> {
    /// Entry for a single-level sum along modality `a`.
    fn sum_at(&mut self, v: &TieVec, u: &TieCond, h: usize, b: usize, a: usize) -> bool {
        self.sum(v, u, h, b, a, 1)
    }
}

pub fn csat_sum(tie: &Tie, h: usize, b: usize, a: usize, oracle: &dyn SummandOracle) -> Result<bool, SolverError> {
    Ok(csat_sum_with(tie, TreeParams::new(h, b)?, a, oracle, SearchOptions::default())?.0)
}

/// Satisfiability of `phi` over sums indexed by Noetherian orders, via `Tr(#phi, #phi)`.
pub fn sat_over_sums(phi: &Formula, a: usize, oracle: &dyn SummandOracle) -> Result<bool, SolverError> {
    Ok(sat_over_sums_with(phi, a, oracle, SearchOptions::default())?.0)
}

pub fn sat_over_sums_with(
    phi: &Formula,
    a: usize,
    oracle: &dyn SummandOracle,
    opts: SearchOptions,
) -> Result<(bool, SearchStats), SolverError> {
    let ctx = FormulaCtx::new(phi, oracle.alphabet());
    if a >= ctx.alphabet || ctx.alphabet != oracle.alphabet() {
        return Err(SolverError::Params(format!("modality {a} or alphabet mismatch for {}", oracle.name())));
    }
    let base = |c: &FormulaCtx, v: &TieVec, u: &TieCond, _: usize| Some(oracle.csat(c, v, u));
    let mut s = TieSearch {
        ctx: &ctx,
        memo: opts.memo.then(HashMap::new),
        stats: SearchStats::default(),
        literal: opts.literal_covers,
        base: &base,
        levels: 0,
    };
    let n = ctx.len();
    let u = ctx.zero_cond();
    let ans = TieVec::ones(n).minus(&ctx.root_only()).subsets().any(|rest| s.sum_at(&rest.with(0), &u, n, n, a));
    Ok((ans, s.stats))
}

/// Satisfiability of `tie` in finite disjoint unions of tree sums.
pub fn csat_over_sums(tie: &Tie, a: usize, oracle: &dyn SummandOracle) -> Result<bool, SolverError> {
    let ctx = check_tie(tie, a)?;
    let n = ctx.len();
    let base = |c: &FormulaCtx, v: &TieVec, u: &TieCond, _: usize| Some(oracle.csat(c, v, u));
    let mut s = TieSearch { ctx: &ctx, memo: Some(HashMap::new()), stats: SearchStats::default(), literal: false, base: &base, levels: 0 };
    let u = ctx.canonical_cond(&tie.u);
    let parts: Vec<TieVec> = tie.v.subsets().filter(|p| s.sum_at(p, &u, n, n, a)).collect();
    Ok(is_union_of(&parts, &tie.v, n))
}

/// Some `k <= bound` oracle-satisfiable parts cover `v` exactly.
pub fn csat_disjoint(tie: &Tie, bound: usize, oracle: &dyn SummandOracle) -> Result<bool, SolverError> {
    if bound == 0 {
        return Err(SolverError::Params("bound must be positive".into()));
    }
    let ctx = tie.ctx();
    let u = ctx.canonical_cond(&tie.u);
    let parts: Vec<TieVec> = tie.v.subsets().filter(|p| oracle.csat(&ctx, p, &u)).collect();
    Ok(is_union_of(&parts, &tie.v, bound))
}

/// Satisfiability in `F +^a G` from oracles for `F` (below) and `G` (above).
pub fn csat_plus(tie: &Tie, a: usize, left: &dyn SummandOracle, right: &dyn SummandOracle) -> Result<bool, SolverError> {
    let ctx = check_tie(tie, a)?;
    let u = ctx.canonical_cond(&tie.u);
    for top in tie.v.subsets() {
        if !right.csat(&ctx, &top, &u) {
            continue;
        }
        let cond = cond_plus_a(&u, a, &top).unwrap();
        if tie.v.intersect(&top).subsets().any(|extra| left.csat(&ctx, &tie.v.minus(&top).union(&extra), &cond)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Satisfiability of `(phi, v, U)` in `S(h, b, a, A)`; the formula must use modalities below `A`.
pub fn csat_j_with(
    phi: &Formula,
    v: &TieVec,
    u: &TieCond,
    params: TreeParams,
    a: usize,
    alphabet: usize,
    opts: SearchOptions,
) -> Result<(bool, SearchStats), SolverError> {
    if a > alphabet {
        return Err(SolverError::Params(format!("level {a} above alphabet {alphabet}")));
    }
    let ctx = FormulaCtx::new(phi, alphabet);
    if ctx.alphabet != alphabet || u.alphabet() != alphabet {
        return Err(SolverError::Params("condition or formula outside the alphabet".into()));
    }
    let point = singleton_oracle(false, alphabet);
    let base = move |c: &FormulaCtx, v: &TieVec, u: &TieCond, lvl: usize| (lvl + 1 >= alphabet).then(|| point.csat(c, v, u));
    let mut s = TieSearch {
        ctx: &ctx,
        memo: opts.memo.then(HashMap::new),
        stats: SearchStats::default(),
        literal: opts.literal_covers,
        base: &base,
        levels: alphabet,
    };
    let u = ctx.canonical_cond(u);
    let ans = if a == alphabet {
        s.stats.oracle_calls += 1;
        s.stats.max_recursion_depth = 1;
        (s.base)(&ctx, v, &u, a).unwrap()
    } else {
        s.sum(v, &u, params.h, params.b, a, 1)
    };
    Ok((ans, s.stats))
}

pub fn csat_j(phi: &Formula, v: &TieVec, u: &TieCond, h: usize, b: usize, a: usize, alphabet: usize) -> Result<bool, SolverError> {
    Ok(csat_j_with(phi, v, u, TreeParams::new(h, b)?, a, alphabet, SearchOptions::default())?.0)
}

/// Satisfiability in J through the hat-normal form and `S(#phi, #phi, 0, #phi)`.
pub fn sat_j_with(phi: &Formula, opts: SearchOptions) -> Result<(bool, SearchStats), SolverError> {
    let (hat, _) = hat_normalize(phi);
    let ctx = FormulaCtx::new(&hat, 1);
    let n = ctx.len();
    let alphabet = n;
    let u = TieCond::zero(alphabet, n);
    let mut total = SearchStats::default();
    for rest in TieVec::ones(n).minus(&ctx.root_only()).subsets() {
        let (ans, st) = csat_j_with(&hat, &rest.with(0), &u, TreeParams { h: n, b: n }, 0, alphabet, opts)?;
        total.oracle_calls += st.oracle_calls;
        total.memo_hits += st.memo_hits;
        total.max_recursion_depth = total.max_recursion_depth.max(st.max_recursion_depth);
        if ans {
            return Ok((true, total));
        }
    }
    Ok((false, total))
}

pub fn sat_j(phi: &Formula) -> Result<bool, SolverError> {
    Ok(sat_j_with(phi, SearchOptions::default())?.0)
}

// ---------------------------------------------------------------------------
// Goal-directed engine

#[derive(Default)]
struct SharedStats {
    oracle_calls: AtomicU64,
    memo_hits: AtomicU64,
    max_depth: AtomicUsize,
}

impl SharedStats {
    fn snapshot(&self) -> SearchStats {
        SearchStats {
            oracle_calls: self.oracle_calls.load(Ordering::Relaxed),
            max_recursion_depth: self.max_depth.load(Ordering::Relaxed),
            memo_hits: self.memo_hits.load(Ordering::Relaxed),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct HeightBounds {
    true_from: Option<usize>,
    false_upto: Option<usize>,
}

type TreeKey = (Option<usize>, TieVec, TieCond);

/// Finite disjoint unions of sums along `a` over finite trees, with summands from `summand`.
pub struct ForestOracle {
    a: usize,
    summand: Arc<dyn SummandOracle>,
    memo: Option<Mutex<(Option<Formula>, HashMap<TreeKey, HeightBounds>)>>,
    stats: Arc<SharedStats>,
}

struct TreeSink<'a> {
    forest: &'a ForestOracle,
    ctx: &'a FormulaCtx,
    hi: &'a TieVec,
    u: &'a TieCond,
    h: usize,
    depth: usize,
}

impl ConfigSink for TreeSink<'_> {
    fn external_ok(&mut self, j: usize, excl: &TieVec) -> bool {
        self.forest.tree(self.ctx, Some(j), &self.hi.minus(excl), self.u, self.h - 1, self.depth + 1)
    }

    fn accept(&mut self, ext: &TieVec, excl: &TieVec) -> bool {
        let hi = self.hi.minus(excl);
        ext.ones_iter().all(|j| self.forest.tree(self.ctx, Some(j), &hi, self.u, self.h - 1, self.depth + 1))
    }
}

impl ForestOracle {
    fn new(a: usize, summand: Arc<dyn SummandOracle>, memo: bool, stats: Arc<SharedStats>) -> Self {
        ForestOracle { a, summand, memo: memo.then(|| Mutex::new((None, HashMap::new()))), stats }
    }

    fn lookup(&self, phi: &Formula, key: &TreeKey, h: usize) -> Option<bool> {
        let memo = self.memo.as_ref()?;
        let mut guard = memo.lock().unwrap();
        if guard.0.as_ref() != Some(phi) {
            guard.0 = Some(phi.clone());
            guard.1.clear();
        }
        let b = guard.1.get(key).copied().unwrap_or_default();
        if b.true_from.is_some_and(|t| t <= h) {
            return Some(true);
        }
        if b.false_upto.is_some_and(|f| f >= h) {
            return Some(false);
        }
        None
    }

    fn store(&self, key: TreeKey, h: usize, ans: bool) {
        if let Some(memo) = &self.memo {
            let mut guard = memo.lock().unwrap();
            let e = guard.1.entry(key).or_default();
            if ans {
                e.true_from = Some(e.true_from.map_or(h, |t| t.min(h)));
            } else {
                e.false_upto = Some(e.false_upto.map_or(h, |f| f.max(h)));
            }
        }
    }

    /// A tree sum of height at most `h` realizing `lo` at its bottom summand, within `hi`.
    fn tree(&self, ctx: &FormulaCtx, lo: Option<usize>, hi: &TieVec, u: &TieCond, h: usize, depth: usize) -> bool {
        if lo.is_some_and(|j| !hi.get(j)) || h == 0 {
            return false;
        }
        self.stats.max_depth.fetch_max(depth, Ordering::Relaxed);
        let key = (lo, hi.clone(), u.clone());
        if let Some(ans) = self.lookup(&ctx.phi, &key, h) {
            self.stats.memo_hits.fetch_add(1, Ordering::Relaxed);
            return ans;
        }
        let lo_vec = lo.map_or_else(|| ctx.zero(), |j| ctx.zero().with(j));
        let ans = if lo.is_none() {
            self.summand.query(ctx, &lo_vec, hi, u)
        } else {
            let mut sink = TreeSink { forest: self, ctx, hi, u, h, depth };
            let ext = (h > 1).then_some(self.a);
            self.summand.configs(ctx, &lo_vec, hi, u, ext, &mut sink)
        };
        self.store(key, h, ans);
        ans
    }
}

impl SummandOracle for ForestOracle {
    fn name(&self) -> String {
        format!("forest({},{})", self.a, self.summand.name())
    }
    fn alphabet(&self) -> usize {
        self.summand.alphabet()
    }
    fn tag(&self) -> FrameClassTag {
        FrameClassTag::FiniteTrees { h: usize::MAX, b: usize::MAX }
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        let h = ctx.len();
        let u = ctx.canonical_cond(u);
        if lo.is_zero() {
            return self.tree(ctx, None, hi, &u, h, 1);
        }
        lo.ones_iter().all(|j| self.tree(ctx, Some(j), hi, &u, h, 1))
    }
}

/// Counts calls into a base oracle.
struct Counted {
    inner: Arc<dyn SummandOracle>,
    stats: Arc<SharedStats>,
}

impl SummandOracle for Counted {
    fn name(&self) -> String {
        self.inner.name()
    }
    fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }
    fn tag(&self) -> FrameClassTag {
        self.inner.tag()
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        self.stats.oracle_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.query(ctx, lo, hi, u)
    }
    fn csat(&self, ctx: &FormulaCtx, v: &TieVec, u: &TieCond) -> bool {
        self.stats.oracle_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.csat(ctx, v, u)
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
        self.stats.oracle_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.configs(ctx, lo, hi, u, ext, sink)
    }
}

/// `F +^a G` with `F` below and `G` above.
pub struct PlusOracle {
    a: usize,
    left: Arc<dyn SummandOracle>,
    right: Arc<dyn SummandOracle>,
}

impl SummandOracle for PlusOracle {
    fn name(&self) -> String {
        format!("plus({},{},{})", self.a, self.left.name(), self.right.name())
    }
    fn alphabet(&self) -> usize {
        self.left.alphabet()
    }
    fn tag(&self) -> FrameClassTag {
        self.left.tag()
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        hi.subsets().any(|top| {
            self.right.csat(ctx, &top, u)
                && self.left.query(ctx, &lo.minus(&top), hi, &ctx.canonical_cond(&cond_plus_a(u, self.a, &top).unwrap()))
        })
    }
}

/// Universal lift of an inner class whose relation 0 is empty.
pub struct UnivLiftOracle {
    inner: Arc<dyn SummandOracle>,
}

impl SummandOracle for UnivLiftOracle {
    fn name(&self) -> String {
        format!("lift({})", self.inner.name())
    }
    fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }
    fn tag(&self) -> FrameClassTag {
        FrameClassTag::UniversalLifted(Box::new(self.inner.tag()))
    }
    fn query(&self, ctx: &FormulaCtx, lo: &TieVec, hi: &TieVec, u: &TieCond) -> bool {
        let open = ctx.bodies[0].minus(u.row(0));
        open.intersect(hi).subsets().any(|seen| {
            let cond = cond_plus_a(u, 0, &seen).unwrap();
            self.inner.query(ctx, &lo.union(&seen), &hi.minus(&open.minus(&seen)), &cond)
        })
    }
}

// ---------------------------------------------------------------------------
// Presets

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Cluster,
    Difference,
    T0Difference,
    ConfluentDifference,
    IrreflexiveSingleton(usize),
    ReflexiveSingleton,
    BimodalCluster,
    Brute(FrameClassTag, usize),
}

impl OracleSpec {
    pub fn build(&self) -> Arc<dyn SummandOracle> {
        match self {
            OracleSpec::Cluster => Arc::new(cluster_oracle()),
            OracleSpec::Difference => Arc::new(DifferenceOracle::new(DifferenceVariant::All)),
            OracleSpec::T0Difference => Arc::new(DifferenceOracle::new(DifferenceVariant::T0)),
            OracleSpec::ConfluentDifference => Arc::new(DifferenceOracle::new(DifferenceVariant::Confluent)),
            OracleSpec::IrreflexiveSingleton(a) => Arc::new(singleton_oracle(false, *a)),
            OracleSpec::ReflexiveSingleton => Arc::new(singleton_oracle(true, 1)),
            OracleSpec::BimodalCluster => Arc::new(bimodal_cluster_oracle()),
            OracleSpec::Brute(tag, budget) => Arc::new(BruteOracle::new(tag.clone(), ModelBudget::new(*budget))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recipe {
    Direct(OracleSpec),
    SumOverTrees(usize, Box<Recipe>),
    Plus(usize, Box<Recipe>, Box<Recipe>),
    Union(Vec<Recipe>),
    UnivLift(Box<Recipe>),
    Japaridze,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub memo: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { memo: true }
    }
}

struct Builder {
    memo: bool,
    stats: Arc<SharedStats>,
}

impl Builder {
    fn counted(&self, inner: Arc<dyn SummandOracle>) -> Arc<dyn SummandOracle> {
        Arc::new(Counted { inner, stats: self.stats.clone() })
    }

    fn build(&self, r: &Recipe, alphabet: usize) -> Result<Arc<dyn SummandOracle>, SolverError> {
        Ok(match r {
            Recipe::Direct(spec) => self.counted(spec.build()),
            Recipe::SumOverTrees(a, inner) => {
                Arc::new(ForestOracle::new(*a, self.build(inner, alphabet)?, self.memo, self.stats.clone()))
            }
            Recipe::Plus(a, l, r) => {
                Arc::new(PlusOracle { a: *a, left: self.build(l, alphabet)?, right: self.build(r, alphabet)? })
            }
            Recipe::Union(rs) => {
                Arc::new(UnionOracle::new(rs.iter().map(|r| self.build(r, alphabet)).collect::<Result<_, _>>()?)?)
            }
            Recipe::UnivLift(inner) => Arc::new(UnivLiftOracle { inner: self.build(inner, alphabet)? }),
            Recipe::Japaridze => {
                let mut node = self.counted(Arc::new(singleton_oracle(false, alphabet)));
                for a in (0..alphabet).rev() {
                    node = Arc::new(ForestOracle::new(a, node, self.memo, self.stats.clone()));
                }
                node
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicPreset {
    pub name: String,
    /// `None` for logics over any finite alphabet.
    pub alphabet: Option<usize>,
    pub recipe: Recipe,
    /// Frame class used by brute-force cross-checks.
    pub brute: Option<BruteCheck>,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    Fixed(usize),
    /// `#phi + k` worlds.
    AboveLength(usize),
}

impl BudgetRule {
    pub fn worlds(&self, len: usize) -> usize {
        match *self {
            BudgetRule::Fixed(n) => n,
            BudgetRule::AboveLength(k) => len + k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteCheck {
    pub tag: FrameClassTag,
    pub budget: BudgetRule,
    /// The budget is a small-model bound for the class, so disagreements in either direction are errors.
    pub complete: bool,
}

fn brute(tag: FrameClassTag, budget: BudgetRule, complete: bool) -> Option<BruteCheck> {
    Some(BruteCheck { tag, budget, complete })
}

pub const PRESET_NAMES: [&str; 13] =
    ["S4", "S5", "K4", "GL", "Grz", "Grz.weak", "wK4", "DL", "wK4T0", "wK4.2", "J", "GLxS4", "S4refS4"];

fn trees(a: usize, r: Recipe) -> Recipe {
    Recipe::SumOverTrees(a, Box::new(r))
}

fn direct(s: OracleSpec) -> Recipe {
    Recipe::Direct(s)
}

pub fn preset(name: &str) -> Result<LogicPreset, SolverError> {
    use OracleSpec::*;
    let (alphabet, recipe, check, description) = match name {
        "S4" => (Some(1), trees(0, direct(Cluster)), brute(FrameClassTag::Preorders, BudgetRule::Fixed(4), false), "finite preorders"),
        "S5" => (Some(1), direct(Cluster), brute(FrameClassTag::Clusters, BudgetRule::AboveLength(0), true), "clusters"),
        "K4" => (
            Some(1),
            trees(0, Recipe::Union(vec![direct(Cluster), direct(IrreflexiveSingleton(1))])),
            brute(FrameClassTag::Transitive, BudgetRule::Fixed(4), false),
            "finite transitive frames",
        ),
        "GL" => (Some(1), trees(0, direct(IrreflexiveSingleton(1))), brute(FrameClassTag::StrictPartialOrders, BudgetRule::Fixed(4), false), "finite strict partial orders"),
        "Grz" => (Some(1), trees(0, direct(ReflexiveSingleton)), brute(FrameClassTag::PartialOrders, BudgetRule::Fixed(4), false), "finite partial orders"),
        "Grz.weak" => (
            Some(1),
            trees(0, Recipe::Union(vec![direct(IrreflexiveSingleton(1)), direct(ReflexiveSingleton)])),
            brute(FrameClassTag::AntisymmetricTransitive, BudgetRule::Fixed(4), false),
            "finite antisymmetric transitive frames",
        ),
        "wK4" => (Some(1), trees(0, direct(Difference)), brute(FrameClassTag::WeaklyTransitive, BudgetRule::Fixed(4), false), "finite weakly transitive frames"),
        "DL" => (Some(1), direct(Difference), brute(FrameClassTag::DifferenceFrames, BudgetRule::AboveLength(1), true), "difference frames"),
        "wK4T0" => (Some(1), trees(0, direct(T0Difference)), None, "weakly transitive frames whose clusters have at most one irreflexive point"),
        "wK4.2" => (
            Some(1),
            Recipe::Union(vec![
                direct(Difference),
                Recipe::Plus(0, Box::new(trees(0, direct(Difference))), Box::new(direct(ConfluentDifference))),
            ]),
            brute(FrameClassTag::WeaklyTransitiveConfluent, BudgetRule::Fixed(4), false),
            "finite weakly transitive confluent frames",
        ),
        "J" => (None, Recipe::Japaridze, None, "iterated lexicographic sums of singletons"),
        "GLxS4" => (Some(2), trees(0, trees(1, direct(BimodalCluster))), None, "lexicographic product of GL and S4 frames"),
        "S4refS4" => (
            Some(2),
            trees(0, Recipe::UnivLift(Box::new(trees(1, direct(BimodalCluster))))),
            None,
            "finite preorders refined by preorders inside clusters",
        ),
        _ => return Err(SolverError::UnknownPreset(name.to_string())),
    };
    Ok(LogicPreset { name: name.to_string(), alphabet, recipe, brute: check, description: description.to_string() })
}

/// Refinement logic with a brute-force summand over lifted preorders up to `budget` worlds.
pub fn s4refs4_brute(budget: usize) -> LogicPreset {
    let tag = FrameClassTag::UniversalLifted(Box::new(FrameClassTag::Preorders));
    LogicPreset {
        name: "S4refS4".into(),
        alphabet: Some(2),
        recipe: trees(0, direct(OracleSpec::Brute(tag, budget))),
        brute: None,
        description: format!("refinements with summands searched up to {budget} worlds"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub sat: bool,
    pub stats: SearchStats,
}

pub fn solve_with(preset: &LogicPreset, phi: &Formula, opts: EngineOptions) -> Result<SolveOutcome, SolverError> {
    let needed = phi.min_alphabet();
    let (phi, alphabet) = match preset.alphabet {
        Some(a) if needed > a => {
            return Err(SolverError::Alphabet { logic: preset.name.clone(), needed, alphabet: a });
        }
        Some(a) => (phi.clone(), a),
        None => {
            let (hat, n) = hat_normalize(phi);
            (hat, n.max(1))
        }
    };
    let builder = Builder { memo: opts.memo, stats: Arc::new(SharedStats::default()) };
    let node = builder.build(&preset.recipe, alphabet)?;
    let ctx = FormulaCtx::new(&phi, alphabet);
    let sat = node.query(&ctx, &ctx.root_only(), &TieVec::ones(ctx.len()), &ctx.zero_cond());
    Ok(SolveOutcome { sat, stats: builder.stats.snapshot() })
}

pub fn solve(preset: &LogicPreset, phi: &Formula) -> Result<bool, SolverError> {
    Ok(solve_with(preset, phi, EngineOptions::default())?.sat)
}

/// Tie satisfiability in the class of `preset` through the engine.
pub fn csat_preset(preset: &LogicPreset, tie: &Tie) -> Result<bool, SolverError> {
    let alphabet = tie.u.alphabet();
    if preset.alphabet.is_some_and(|a| a != alphabet) {
        return Err(SolverError::Alphabet { logic: preset.name.clone(), needed: alphabet, alphabet: preset.alphabet.unwrap() });
    }
    let builder = Builder { memo: true, stats: Arc::new(SharedStats::default()) };
    let node = builder.build(&preset.recipe, alphabet)?;
    let ctx = tie.ctx();
    Ok(node.csat(&ctx, &tie.v, &ctx.canonical_cond(&tie.u)))
}
