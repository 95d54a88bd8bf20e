//! Modal formulas over a finite alphabet of diamonds.
//!
//! Only four constructors are primitive: falsum, variables, implication and
//! `<a>`. Everything else is sugar that the parser and the builder functions
//! expand on the spot.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Bot,
    Var(u32),
    Imp(Arc<Formula>, Arc<Formula>),
    Dia(u32, Arc<Formula>),
}

pub fn bot() -> Formula {
    Formula::Bot
}

pub fn var(i: u32) -> Formula {
    Formula::Var(i)
}

pub fn imp(a: Formula, b: Formula) -> Formula {
    Formula::Imp(Arc::new(a), Arc::new(b))
}

pub fn dia(a: u32, f: Formula) -> Formula {
    Formula::Dia(a, Arc::new(f))
}

pub fn not(f: Formula) -> Formula {
    imp(f, bot())
}

pub fn top() -> Formula {
    imp(bot(), bot())
}

pub fn and(a: Formula, b: Formula) -> Formula {
    not(imp(a, not(b)))
}

pub fn or(a: Formula, b: Formula) -> Formula {
    imp(not(a), b)
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    and(imp(a.clone(), b.clone()), imp(b, a))
}

pub fn boxm(a: u32, f: Formula) -> Formula {
    not(dia(a, not(f)))
}

/// Left-nested conjunction; the empty conjunction is `T`.
pub fn big_and<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
    let mut it = items.into_iter();
    match it.next() {
        None => top(),
        Some(first) => it.fold(first, and),
    }
}

/// Left-nested disjunction; the empty disjunction is `F`.
pub fn big_or<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
    let mut it = items.into_iter();
    match it.next() {
        None => bot(),
        Some(first) => it.fold(first, or),
    }
}

impl Formula {
    /// Node count of the primitive tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Bot | Formula::Var(_) => 1,
            Formula::Imp(a, b) => 1 + a.size() + b.size(),
            Formula::Dia(_, f) => 1 + f.size(),
        }
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Bot | Formula::Var(_) => 0,
            Formula::Imp(a, b) => a.modal_depth().max(b.modal_depth()),
            Formula::Dia(_, f) => 1 + f.modal_depth(),
        }
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Bot => {}
            Formula::Var(i) => {
                out.insert(*i);
            }
            Formula::Imp(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Dia(_, f) => f.collect_vars(out),
        }
    }

    pub fn modalities(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_mods(&mut out);
        out
    }

    fn collect_mods(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Bot | Formula::Var(_) => {}
            Formula::Imp(a, b) => {
                a.collect_mods(out);
                b.collect_mods(out);
            }
            Formula::Dia(m, f) => {
                out.insert(*m);
                f.collect_mods(out);
            }
        }
    }

    /// Smallest alphabet size that accommodates every modality index.
    pub fn min_alphabet(&self) -> usize {
        self.modalities().iter().next_back().map_or(0, |m| *m as usize + 1)
    }

    /// Rename every modality index through `f`.
    pub fn map_modalities(&self, f: &dyn Fn(u32) -> u32) -> Formula {
        match self {
            Formula::Bot | Formula::Var(_) => self.clone(),
            Formula::Imp(a, b) => imp(a.map_modalities(f), b.map_modalities(f)),
            Formula::Dia(m, g) => dia(f(*m), g.map_modalities(f)),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_into(self, 1, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// Sugar patterns recognised by the printer, in priority order.
enum Shape<'a> {
    Bot,
    Top,
    Var(u32),
    Box(u32, &'a Formula),
    And(&'a Formula, &'a Formula),
    Not(&'a Formula),
    Or(&'a Formula, &'a Formula),
    Imp(&'a Formula, &'a Formula),
    Dia(u32, &'a Formula),
}

fn as_not(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Imp(a, b) if **b == Formula::Bot => Some(a),
        _ => None,
    }
}

fn shape(f: &Formula) -> Shape<'_> {
    match f {
        Formula::Bot => Shape::Bot,
        Formula::Var(i) => Shape::Var(*i),
        Formula::Dia(a, g) => Shape::Dia(*a, g),
        Formula::Imp(a, b) => {
            if **a == Formula::Bot && **b == Formula::Bot {
                return Shape::Top;
            }
            if let Some(inner) = as_not(f) {
                if let Formula::Dia(m, g) = inner {
                    if let Some(h) = as_not(g) {
                        return Shape::Box(*m, h);
                    }
                }
                if let Formula::Imp(x, y) = inner {
                    if let Some(yy) = as_not(y) {
                        return Shape::And(x, yy);
                    }
                }
                return Shape::Not(inner);
            }
            if let Some(x) = as_not(a) {
                return Shape::Or(x, b);
            }
            Shape::Imp(a, b)
        }
    }
}

fn render_into(f: &Formula, min_level: u8, out: &mut String) {
    let sh = shape(f);
    let level = match sh {
        Shape::Imp(..) => 1,
        Shape::Or(..) => 2,
        Shape::And(..) => 3,
        _ => 4,
    };
    let wrap = level < min_level;
    if wrap {
        out.push('(');
    }
    match sh {
        Shape::Bot => out.push('F'),
        Shape::Top => out.push('T'),
        Shape::Var(i) => {
            out.push('p');
            out.push_str(&i.to_string());
        }
        Shape::Box(a, g) => {
            out.push_str(&format!("[{a}]"));
            render_into(g, 4, out);
        }
        Shape::Dia(a, g) => {
            out.push_str(&format!("<{a}>"));
            render_into(g, 4, out);
        }
        Shape::Not(g) => {
            out.push('~');
            render_into(g, 4, out);
        }
        Shape::And(x, y) => {
            render_into(x, 3, out);
            out.push_str(" & ");
            render_into(y, 4, out);
        }
        Shape::Or(x, y) => {
            render_into(x, 2, out);
            out.push_str(" | ");
            render_into(y, 3, out);
        }
        Shape::Imp(x, y) => {
            render_into(x, 2, out);
            out.push_str(" -> ");
            render_into(y, 1, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("modality {index} at {pos} is outside the alphabet of size {alphabet}")]
    ModalityRange { pos: usize, index: u32, alphabet: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::ModalityRange { pos, .. } => *pos,
        }
    }
}

/// Parse `text`, checking every modality index against `alphabet_size`.
pub fn parse(text: &str, alphabet_size: usize) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, alphabet: alphabet_size };
    let f = p.implication()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let left = self.disjunction()?;
        if self.eat("->") {
            let right = self.implication()?;
            Ok(imp(left, right))
        } else {
            Ok(left)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while self.eat("|") {
            acc = or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.eat("&") {
            acc = and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError::Syntax { pos: start, msg: "number too large".into() })
    }

    fn modality(&mut self, close: &str) -> Result<u32, ParseError> {
        self.skip_ws();
        let at = self.pos;
        let m = self.number()?;
        if !self.eat(close) {
            return Err(self.err(&format!("expected '{close}'")));
        }
        if m as usize >= self.alphabet {
            return Err(ParseError::ModalityRange { pos: at, index: m, alphabet: self.alphabet });
        }
        Ok(m)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        if self.eat("~") {
            return Ok(not(self.unary()?));
        }
        if self.eat("<") {
            let m = self.modality(">")?;
            return Ok(dia(m, self.unary()?));
        }
        if self.eat("[") {
            let m = self.modality("]")?;
            return Ok(boxm(m, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        if self.eat("(") {
            let f = self.implication()?;
            if !self.eat(")") {
                return Err(self.err("expected ')'"));
            }
            return Ok(f);
        }
        if self.eat("T") {
            return Ok(top());
        }
        if self.eat("F") {
            return Ok(bot());
        }
        if self.eat("p") {
            return Ok(var(self.number()?));
        }
        if self.pos >= self.src.len() {
            Err(self.err("unexpected end of input"))
        } else {
            Err(self.err("unexpected character"))
        }
    }
}

/// Primitive shape of a chain element, with children given as chain positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Bot,
    Var(u32),
    Imp(usize, usize),
    Dia(u32, usize),
}

/// All distinct subformulas, longest first, ties broken by rendering.
#[derive(Debug, Clone)]
pub struct SubformulaChain {
    formulas: Vec<Formula>,
    nodes: Vec<Node>,
    index: HashMap<Formula, usize>,
}

pub fn subformula_chain(phi: &Formula) -> SubformulaChain {
    let mut seen: HashMap<Formula, ()> = HashMap::new();
    let mut stack = vec![phi.clone()];
    while let Some(f) = stack.pop() {
        if seen.contains_key(&f) {
            continue;
        }
        match &f {
            Formula::Imp(a, b) => {
                stack.push((**a).clone());
                stack.push((**b).clone());
            }
            Formula::Dia(_, g) => stack.push((**g).clone()),
            _ => {}
        }
        seen.insert(f, ());
    }
    let mut keyed: Vec<(usize, String, Formula)> =
        seen.into_keys().map(|f| (f.size(), f.render(), f)).collect();
    keyed.sort_by(|x, y| y.0.cmp(&x.0).then_with(|| x.1.cmp(&y.1)));
    let formulas: Vec<Formula> = keyed.into_iter().map(|(_, _, f)| f).collect();
    let index: HashMap<Formula, usize> =
        formulas.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
    let nodes = formulas
        .iter()
        .map(|f| match f {
            Formula::Bot => Node::Bot,
            Formula::Var(i) => Node::Var(*i),
            Formula::Imp(a, b) => Node::Imp(index[&**a], index[&**b]),
            Formula::Dia(m, g) => Node::Dia(*m, index[&**g]),
        })
        .collect();
    SubformulaChain { formulas, nodes, index }
}

impl SubformulaChain {
    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn root(&self) -> &Formula {
        &self.formulas[0]
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn get(&self, i: usize) -> &Formula {
        &self.formulas[i]
    }

    pub fn node(&self, i: usize) -> Node {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn position(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Positions in evaluation order: every child before its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> {
        (0..self.len()).rev()
    }
}

/// Rename the occurring modalities `a_0 < ... < a_{N-1}` to `0 .. N-1`.
pub fn hat_normalize(phi: &Formula) -> (Formula, usize) {
    let mods: Vec<u32> = phi.modalities().into_iter().collect();
    let n = mods.len();
    let renamed = phi.map_modalities(&|m| mods.binary_search(&m).unwrap() as u32);
    (renamed, n)
}

/// Random formula with exactly `nodes` constructor nodes.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, nodes: usize, vars: u32, alphabet: u32) -> Formula {
    if nodes <= 1 {
        let k = rng.gen_range(0..=vars);
        return if k == vars { bot() } else { var(k) };
    }
    if nodes == 2 || (alphabet > 0 && rng.gen_bool(0.35)) {
        if alphabet == 0 {
            return random_formula(rng, 1, vars, alphabet);
        }
        return dia(rng.gen_range(0..alphabet), random_formula(rng, nodes - 1, vars, alphabet));
    }
    let left = rng.gen_range(1..nodes - 1);
    imp(random_formula(rng, left, vars, alphabet), random_formula(rng, nodes - 1 - left, vars, alphabet))
}

/// Random formula with at most `max_len` distinct subformulas.
pub fn random_formula_upto<R: Rng + ?Sized>(rng: &mut R, max_len: usize, vars: u32, alphabet: u32) -> Formula {
    loop {
        let nodes = rng.gen_range(1..=2 * max_len.max(1));
        let f = random_formula(rng, nodes, vars, alphabet);
        if subformula_chain(&f).len() <= max_len {
            return f;
        }
    }
}

/// Every formula with at most `max_len` distinct subformulas over `p0..p{vars-1}` and
/// modalities below `alphabet`, shortest chains first, each chain length in sorted order.
pub fn formulas_up_to(max_len: usize, vars: u32, alphabet: u32) -> Vec<Formula> {
    let mut by_len: Vec<Vec<(Formula, BTreeSet<Formula>)>> = vec![Vec::new(); max_len + 1];
    if max_len == 0 {
        return Vec::new();
    }
    let leaves = std::iter::once(bot()).chain((0..vars).map(var));
    let mut seen: BTreeSet<Formula> = BTreeSet::new();
    for leaf in leaves {
        seen.insert(leaf.clone());
        by_len[1].push((leaf.clone(), BTreeSet::from([leaf])));
    }
    // A formula's subformula set is the union of its children's sets plus itself, so
    // candidates at each length come from strictly shorter ones.
    for len in 2..=max_len {
        let mut found: Vec<(Formula, BTreeSet<Formula>)> = Vec::new();
        let shorter: Vec<&(Formula, BTreeSet<Formula>)> = by_len[1..len].iter().flatten().collect();
        let mut push = |f: Formula, sf: BTreeSet<Formula>| {
            if sf.len() + 1 == len && !sf.contains(&f) {
                let mut sf = sf;
                sf.insert(f.clone());
                found.push((f, sf));
            }
        };
        for (f, sf) in &shorter {
            for a in 0..alphabet {
                push(dia(a, f.clone()), sf.clone());
            }
        }
        for (f, sf) in &shorter {
            for (g, sg) in &shorter {
                if sf.len() + sg.len() + 1 < len {
                    continue;
                }
                let union: BTreeSet<Formula> = sf.union(sg).cloned().collect();
                push(imp(f.clone(), g.clone()), union);
            }
        }
        found.sort_by(|a, b| a.0.cmp(&b.0));
        found.dedup_by(|a, b| a.0 == b.0);
        found.retain(|(f, _)| seen.insert(f.clone()));
        by_len[len] = found;
    }
    by_len.into_iter().flatten().map(|(f, _)| f).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    pub(crate) fn arb_formula(vars: u32, mods: u32) -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![Just(bot()), (0..vars).prop_map(var)];
        leaf.prop_recursive(5, 40, 2, move |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| imp(a, b)),
                (0..mods, inner).prop_map(|(m, f)| dia(m, f)),
            ]
        })
    }

    fn naive_subformulas(f: &Formula, out: &mut HashSet<Formula>) {
        out.insert(f.clone());
        match f {
            Formula::Imp(a, b) => {
                naive_subformulas(a, out);
                naive_subformulas(b, out);
            }
            Formula::Dia(_, g) => naive_subformulas(g, out),
            _ => {}
        }
    }

    #[test]
    fn parse_literals_and_sugar() {
        assert_eq!(parse("F", 1).unwrap(), bot());
        let expect = dia(0, or(var(0), not(var(0))));
        assert_eq!(parse("<0>(p0 | ~p0)", 1).unwrap(), expect);
        let boxed = parse("[1]<0>p2", 2).unwrap();
        assert_eq!(boxed, not(dia(1, not(dia(0, var(2))))));
    }

    #[test]
    fn parse_precedence() {
        let f = parse("p0 & p1 | p2 -> p3 -> p4", 1).unwrap();
        let g = imp(or(and(var(0), var(1)), var(2)), imp(var(3), var(4)));
        assert_eq!(f, g);
        assert_eq!(parse("~<0>p0 & [0]F", 1).unwrap(), and(not(dia(0, var(0))), boxm(0, bot())));
        assert_eq!(parse("T", 0).unwrap(), top());
    }

    #[test]
    fn parse_errors_report_position() {
        match parse("p0 & ", 1) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match parse("<3>p0", 2) {
            Err(ParseError::ModalityRange { index: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse("(p0", 1).is_err());
        assert!(parse("p0 p1", 1).is_err());
        assert!(parse("q", 1).is_err());
    }

    #[test]
    fn render_canonical_forms() {
        assert_eq!(bot().render(), "F");
        assert_eq!(dia(0, var(0)).render(), "<0>p0");
        assert_eq!(top().render(), "T");
        assert_eq!(boxm(1, var(2)).render(), "[1]p2");
        assert_eq!(imp(imp(var(0), var(1)), var(2)).render(), "(p0 -> p1) -> p2");
        assert_eq!(and(var(0), and(var(1), var(2))).render(), "p0 & (p1 & p2)");
    }

    #[test]
    fn chain_examples() {
        let c = subformula_chain(&var(0));
        assert_eq!(c.formulas(), &[var(0)]);
        let c = subformula_chain(&dia(0, var(0)));
        assert_eq!(c.formulas(), &[dia(0, var(0)), var(0)]);
        let c = subformula_chain(&imp(var(0), var(1)));
        assert_eq!(c.formulas(), &[imp(var(0), var(1)), var(0), var(1)]);
        assert_eq!(c.node(0), Node::Imp(1, 2));
    }

    #[test]
    fn hat_examples() {
        let (f, n) = hat_normalize(&dia(5, dia(2, var(0))));
        assert_eq!((f, n), (dia(1, dia(0, var(0))), 2));
        let (f, n) = hat_normalize(&imp(var(0), var(1)));
        assert_eq!((f, n), (imp(var(0), var(1)), 0));
        let (f, n) = hat_normalize(&and(dia(3, var(0)), dia(3, var(1))));
        assert_eq!((f, n), (and(dia(0, var(0)), dia(0, var(1))), 1));
    }

    #[test]
    fn corpus_small_counts() {
        let two = formulas_up_to(2, 2, 1);
        assert_eq!(two.len(), 9);
        let set: HashSet<Formula> = two.iter().cloned().collect();
        assert_eq!(set.len(), 9);
        assert!(set.contains(&dia(0, var(1))) && set.contains(&imp(bot(), bot())));
        let five = formulas_up_to(5, 2, 1);
        let set: HashSet<&Formula> = five.iter().collect();
        assert_eq!(set.len(), five.len());
        assert!(five.iter().all(|f| subformula_chain(f).len() <= 5));
        assert!(five.windows(2).all(|w| subformula_chain(&w[0]).len() <= subformula_chain(&w[1]).len()));
    }

    #[test]
    fn random_formulas_respect_bounds() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let f = random_formula_upto(&mut rng, 7, 2, 2);
            assert!(subformula_chain(&f).len() <= 7);
            assert!(f.variables().iter().all(|&v| v < 2) && f.min_alphabet() <= 2);
        }
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_formula(&mut a, 9, 2, 1), random_formula(&mut b, 9, 2, 1));
        assert_eq!(random_formula(&mut a, 6, 1, 1).size(), 6);
    }

    proptest! {
        #[test]
        fn corpus_is_complete(f in arb_formula(2, 1)) {
            prop_assume!(subformula_chain(&f).len() <= 4);
            let corpus = formulas_up_to(4, 2, 1);
            prop_assert!(corpus.contains(&f));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn parse_render_roundtrip(f in arb_formula(3, 3)) {
            prop_assert_eq!(parse(&f.render(), 3).unwrap(), f);
        }

        #[test]
        fn chain_is_ordered_and_complete(f in arb_formula(3, 2)) {
            let c = subformula_chain(&f);
            prop_assert_eq!(c.get(0), &f);
            let mut naive = HashSet::new();
            naive_subformulas(&f, &mut naive);
            prop_assert_eq!(c.len(), naive.len());
            for i in 0..c.len() {
                match c.node(i) {
                    Node::Imp(a, b) => prop_assert!(a > i && b > i),
                    Node::Dia(_, g) => prop_assert!(g > i),
                    _ => {}
                }
                if i + 1 < c.len() {
                    let (x, y) = (c.get(i), c.get(i + 1));
                    prop_assert!(x.size() > y.size() || (x.size() == y.size() && x.render() < y.render()));
                }
            }
        }

        #[test]
        fn hat_is_idempotent(f in arb_formula(2, 6)) {
            let (g, n) = hat_normalize(&f);
            let (h, m) = hat_normalize(&g);
            prop_assert_eq!(&h, &g);
            prop_assert_eq!(n, m);
            if n > 0 {
                prop_assert!(n < subformula_chain(&f).len());
            }
        }
    }
}
