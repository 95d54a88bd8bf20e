//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances are pinned below.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumsat::cli::cross_check;
use sumsat::formula::{
    and, formulas_up_to, imp, not, or, parse, random_formula_upto, subformula_chain, var, Formula,
};
use sumsat::oracles::{
    brute_csat, brute_sat, cluster_oracle, singleton_oracle, DifferenceOracle, DifferenceVariant, ModelBudget,
    SummandOracle,
};
use sumsat::reductions::{
    delta_m, ladner_encode, ladner_model, qbf_eval, quantifier_tree, relativize, sat_univ, translate_cond, Qbf,
    Quantifier,
};
use sumsat::semantics::{
    a_sum, characterize, disjoint_union, eval, eval_cond, external_condition, generated_submodel, isomorphic, sum,
    sum_models, truth_table, Condition, Frame, FrameClassTag, Model,
};
use sumsat::solver::{preset, sat_j_with, sat_over_sums_with, solve, solve_with, EngineOptions, SearchOptions};
use sumsat::ties::{FormulaCtx, Tie, TieCond, TieVec};

const CORPUS_LEN: usize = 5;
const CORPUS_VARS: u32 = 2;
const EXHAUSTIVE_LIMIT: Duration = Duration::from_secs(300);
const SAMPLED_FORMULAS: usize = 2000;
const SAMPLED_LEN: usize = 7;
const SAMPLED_BUDGET: usize = 4;
const PROPERTY_INSTANCES: usize = 1000;
const LADNER_LIMIT: Duration = Duration::from_secs(600);
const LADNER_SAMPLES: usize = 1500;
const LADNER_CONNECTIVES: usize = 6;
const J_PLAIN_LEN: usize = 4;
const SEED: u64 = 20_240_917;

type Check = Result<String, String>;

fn corpus() -> Vec<Formula> {
    formulas_up_to(CORPUS_LEN, CORPUS_VARS, 1)
}

fn p(text: &str, alphabet: usize) -> Formula {
    parse(text, alphabet).expect("fixture parses")
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let corpus = corpus();
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for name in ["S5", "DL"] {
        let report = cross_check(&preset(name).unwrap(), &corpus, None)?;
        notes.push(format!("{name} {} sat/{}", report.sat, report.checked));
        bad.extend(report.disagreements.iter().map(|(f, s, b)| format!("{name} {} solver={s} brute={b}", f.render())));
    }
    let elapsed = start.elapsed();
    if !bad.is_empty() {
        return Err(format!("{} disagreements, first: {}", bad.len(), bad[0]));
    }
    if elapsed > EXHAUSTIVE_LIMIT {
        return Err(format!("took {elapsed:.1?}, limit {EXHAUSTIVE_LIMIT:?}"));
    }
    Ok(format!("{} formulas, {}, 0 disagreements", corpus.len(), notes.join(", ")))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sample: Vec<Formula> =
        (0..SAMPLED_FORMULAS).map(|_| random_formula_upto(&mut rng, SAMPLED_LEN, CORPUS_VARS, 1)).collect();
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for name in ["S4", "GL", "Grz", "wK4", "wK4.2"] {
        let report = cross_check(&preset(name).unwrap(), &sample, Some(SAMPLED_BUDGET))?;
        notes.push(format!("{name} {} sat ({} needed >{SAMPLED_BUDGET} worlds)", report.sat, report.rechecked));
        if let Some((f, s, b)) = report.disagreements.first() {
            // Diagnostic only: whether a model exists once the budget reaches the formula's length.
            let check = preset(name).unwrap().brute.unwrap();
            let ctx = FormulaCtx::new(f, 1);
            let wider = brute_sat(&check.tag, ModelBudget::new(ctx.len()), &ctx).map_err(|e| e.to_string())?.is_some();
            failures.push(format!(
                "{name}: {} disagreements beyond the recheck budget, first {} solver={s} brute={b} (model within {} worlds: {wider})",
                report.disagreements.len(),
                f.render(),
                ctx.len()
            ));
        }
    }
    if failures.is_empty() {
        Ok(format!("{SAMPLED_FORMULAS} formulas: {}", notes.join(", ")))
    } else {
        Err(format!("{}; {}", failures.join("; "), notes.join(", ")))
    }
}

fn criterion_3() -> Check {
    let valid: &[(&str, &str)] = &[
        ("S4", "[0]p0 -> p0"),
        ("S4", "[0]p0 -> [0][0]p0"),
        ("S5", "<0>p0 -> [0]<0>p0"),
        ("K4", "[0]p0 -> [0][0]p0"),
        ("GL", "[0]([0]p0 -> p0) -> [0]p0"),
        ("GL", "[0]p0 -> [0][0]p0"),
        ("Grz", "[0]([0](p0 -> [0]p0) -> p0) -> p0"),
        ("Grz", "[0]p0 -> p0"),
        ("Grz.weak", "[0]p0 -> [0][0]p0"),
        ("wK4", "<0><0>p0 -> <0>p0 | p0"),
        ("DL", "<0><0>p0 -> <0>p0 | p0"),
        ("wK4T0", "<0><0>p0 -> <0>p0 | p0"),
        ("wK4.2", "<0><0>p0 -> <0>p0 | p0"),
        ("wK4.2", "<0>[0]p0 -> [0]<0>p0"),
        ("J", "<1><0>p0 -> <0>p0"),
        ("J", "<0><1>p0 -> <0>p0"),
        ("J", "<0>p0 -> [1]<0>p0"),
        ("J", "[1]([1]p0 -> p0) -> [1]p0"),
        ("GLxS4", "<1><0>p0 -> <0>p0"),
        ("GLxS4", "<0><1>p0 -> <0>p0"),
        ("GLxS4", "<0>p0 -> [1]<0>p0"),
        ("GLxS4", "[1]p0 -> p0"),
        ("S4refS4", "[0]p0 -> [1]p0"),
        ("S4refS4", "[1]p0 -> [1][1]p0"),
    ];
    let satisfiable: &[(&str, &str)] = &[
        ("S4", "<0>T"),
        ("S4", "<0>p0 & <0>~p0 & ~p0"),
        ("S5", "<0>p0 & <0>~p0"),
        ("K4", "[0]F"),
        ("GL", "[0]F"),
        ("GL", "<0>T & <0>[0]F"),
        ("Grz", "<0>p0 & ~p0"),
        ("Grz.weak", "[0]F"),
        ("wK4", "~([0]p0 -> [0][0]p0)"),
        ("DL", "p0 & [0]~p0 & <0>T"),
        ("wK4T0", "<0>T & ~([0]p0 -> p0)"),
        ("wK4.2", "<0>p0 & <0>~p0"),
        ("J", "<1>T & [0]F"),
        ("GLxS4", "<1>T & <0>T"),
        ("S4refS4", "<0>p0 & [1]~p0"),
    ];
    let unsat_extra: &[(&str, &str)] = &[("S4", "[0]F"), ("GL", "<0>T & [0][0]F & <0><0>T"), ("Grz", "[0]F")];
    let mut failures = Vec::new();
    let mut run = |logic: &str, phi: Formula, want: bool| {
        let pr = preset(logic).unwrap();
        match solve(&pr, &phi) {
            Ok(got) if got == want => {}
            Ok(got) => failures.push(format!("{logic} {} gave {got}", phi.render())),
            Err(e) => failures.push(format!("{logic} {}: {e}", phi.render())),
        }
    };
    for (logic, text) in valid {
        let a = preset(logic).unwrap().alphabet.unwrap_or(2);
        run(logic, not(p(text, a)), false);
    }
    for (logic, text) in satisfiable {
        let a = preset(logic).unwrap().alphabet.unwrap_or(2);
        run(logic, p(text, a), true);
    }
    for (logic, text) in unsat_extra {
        run(logic, p(text, 1), false);
    }
    // Non-theorems that separate the logics.
    for (logic, text) in [("GL", "[0]p0 -> p0"), ("K4", "[0]p0 -> p0"), ("wK4", "[0]p0 -> [0][0]p0"), ("S4", "[0]([0](p0 -> [0]p0) -> p0) -> p0")] {
        run(logic, not(p(text, 1)), true);
    }
    let total = valid.len() + satisfiable.len() + unsat_extra.len() + 4;
    if failures.is_empty() {
        Ok(format!("{total}/{total} decided as expected"))
    } else {
        Err(format!("{} of {total} wrong: {}", failures.len(), failures.join("; ")))
    }
}

fn random_frame(rng: &mut ChaCha8Rng, worlds: usize, alphabet: usize, density: f64) -> Frame {
    let relations = (0..alphabet)
        .map(|_| {
            let mut pairs = Vec::new();
            for x in 0..worlds {
                for y in 0..worlds {
                    if rng.gen_bool(density) {
                        pairs.push((x, y));
                    }
                }
            }
            pairs
        })
        .collect();
    Frame::from_pairs(worlds, relations).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, worlds: usize, alphabet: usize, vars: u32) -> Model {
    let frame = random_frame(rng, worlds, alphabet, 0.4);
    let valuation: BTreeMap<u32, BTreeSet<usize>> =
        (0..vars).map(|p| (p, (0..worlds).filter(|_| rng.gen_bool(0.5)).collect())).collect();
    Model::new(frame, valuation).unwrap()
}

fn random_condition(rng: &mut ChaCha8Rng, phi: &Formula, alphabet: usize) -> Condition {
    let chain = subformula_chain(phi);
    Condition {
        per_modality: (0..alphabet)
            .map(|_| chain.formulas().iter().filter(|_| rng.gen_bool(0.3)).cloned().collect())
            .collect(),
    }
}

struct PropertyTally {
    lines: Vec<String>,
    failures: Vec<String>,
}

impl PropertyTally {
    fn record(&mut self, name: &str, instances: usize, failed: Vec<String>) {
        self.lines.push(format!("{name} {instances}"));
        if instances < PROPERTY_INSTANCES {
            self.failures.push(format!("{name}: only {instances} instances"));
        }
        if let Some(first) = failed.first() {
            self.failures.push(format!("{name}: {} failures, first {first}", failed.len()));
        }
    }
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut tally = PropertyTally { lines: Vec::new(), failures: Vec::new() };

    // External condition of a component.
    let mut failed = Vec::new();
    for _ in 0..PROPERTY_INSTANCES {
        let k = rng.gen_range(1..=3);
        let models: Vec<Model> = (0..k).map(|_| { let n = rng.gen_range(1..=3); random_model(&mut rng, n, 2, 2) }).collect();
        let index = random_frame(&mut rng, k, 2, 0.5);
        let phi = random_formula_upto(&mut rng, 6, 2, 2);
        let g = random_condition(&mut rng, &phi, 2);
        let sm = sum_models(&index, &models).unwrap();
        let chain = subformula_chain(&phi);
        let whole = truth_table(&sm.model, &chain, &g);
        for i in 0..k {
            let delta = external_condition(&sm, i, &phi, &g).unwrap();
            let part = truth_table(&models[i], &chain, &delta);
            for (j, w) in sm.component_worlds(i).enumerate() {
                if (0..chain.len()).any(|c| whole[c][w] != part[c][j]) {
                    failed.push(phi.render());
                }
            }
        }
    }
    tally.record("external-condition", PROPERTY_INSTANCES, failed);

    // Characterization of a sum from its components under their external conditions.
    let mut failed = Vec::new();
    for _ in 0..PROPERTY_INSTANCES {
        let k = rng.gen_range(1..=3);
        let models: Vec<Model> = (0..k).map(|_| { let n = rng.gen_range(1..=3); random_model(&mut rng, n, 1, 2) }).collect();
        let index = random_frame(&mut rng, k, 1, 0.5);
        let phi = random_formula_upto(&mut rng, 6, 2, 1);
        let g = random_condition(&mut rng, &phi, 1);
        let sm = sum_models(&index, &models).unwrap();
        let lhs = characterize(&phi, &sm.model, &g);
        let rhs: BTreeSet<Formula> = (0..k)
            .flat_map(|i| characterize(&phi, &models[i], &external_condition(&sm, i, &phi, &g).unwrap()))
            .collect();
        // The two-summand case through the condition `U +^0 char(top)`.
        let top = characterize(&phi, &models[k - 1], &g);
        let plus = sum_models(&Frame::chain(2), &[models[0].clone(), models[k - 1].clone()]).unwrap();
        let mut split = characterize(&phi, &models[0], &g.plus(0, &top));
        split.extend(top);
        if lhs != rhs || characterize(&phi, &plus.model, &g) != split {
            failed.push(phi.render());
        }
    }
    tally.record("sum-decomposition", PROPERTY_INSTANCES, failed);

    // Only the subformulas in a condition matter.
    let mut failed = Vec::new();
    for _ in 0..PROPERTY_INSTANCES {
        let n = rng.gen_range(1..=4);
        let m = random_model(&mut rng, n, 2, 2);
        let phi = random_formula_upto(&mut rng, 6, 2, 2);
        let g = random_condition(&mut rng, &phi, 2);
        let mut wider = g.clone();
        let extra = random_formula_upto(&mut rng, 4, 3, 2);
        if subformula_chain(&phi).position(&extra).is_none() {
            wider.per_modality[0].insert(extra);
        }
        wider.per_modality[1].insert(and(var(7), var(8)));
        if (0..n).any(|w| eval_cond(&m, w, &g, &phi) != eval_cond(&m, w, &wider, &phi)) {
            failed.push(phi.render());
        }
    }
    tally.record("condition-restriction", PROPERTY_INSTANCES, failed);

    // Disjoint unions and generated submodels preserve truth.
    let mut failed = Vec::new();
    for _ in 0..PROPERTY_INSTANCES {
        let phi = random_formula_upto(&mut rng, 6, 2, 2);
        let g = random_condition(&mut rng, &phi, 2);
        let k = rng.gen_range(1..=3);
        let models: Vec<Model> = (0..k).map(|_| { let n = rng.gen_range(1..=3); random_model(&mut rng, n, 2, 2) }).collect();
        let frames: Vec<Frame> = models.iter().map(|m| m.frame.clone()).collect();
        let sm = sum_models(&Frame::empty(k, 2), &models).unwrap();
        let same_frame = sm.model.frame == disjoint_union(&frames).unwrap();
        let chars: BTreeSet<Formula> = models.iter().flat_map(|m| characterize(&phi, m, &g)).collect();
        let big = &models[0];
        let seed = rng.gen_range(0..big.frame.worlds());
        let (sub, keep) = generated_submodel(big, &[seed]);
        let chain = subformula_chain(&phi);
        let t_big = truth_table(big, &chain, &g);
        let t_sub = truth_table(&sub, &chain, &g);
        let preserved = keep.iter().enumerate().all(|(j, &w)| (0..chain.len()).all(|c| t_big[c][w] == t_sub[c][j]));
        if !same_frame || characterize(&phi, &sm.model, &g) != chars || !preserved {
            failed.push(phi.render());
        }
    }
    tally.record("union-and-submodel", PROPERTY_INSTANCES, failed);

    // Conditional truth compiles into plain truth.
    let mut failed = Vec::new();
    for _ in 0..PROPERTY_INSTANCES {
        let n = rng.gen_range(1..=4);
        let m = random_model(&mut rng, n, 2, 2);
        let phi = random_formula_upto(&mut rng, 7, 2, 2);
        let g = random_condition(&mut rng, &phi, 2);
        let t = translate_cond(&phi, &g);
        if (0..n).any(|w| eval_cond(&m, w, &g, &phi) != eval(&m, w, &t)) {
            failed.push(phi.render());
        }
    }
    tally.record("translate-cond", PROPERTY_INSTANCES, failed);

    // Preconical reduction on clusters, every tie of every formula with at most 4 subformulas.
    let mut failed = Vec::new();
    let mut count = 0;
    for phi in formulas_up_to(4, 1, 1) {
        let ctx = FormulaCtx::new(&phi, 1);
        for v in TieVec::ones(ctx.len()).subsets() {
            for u in ctx.bodies[0].subsets() {
                let tie = Tie::new(phi.clone(), v.clone(), TieCond::from_rows(vec![u])).unwrap();
                let lhs = brute_csat(&FrameClassTag::Clusters, ModelBudget::new(ctx.len()), &tie).unwrap();
                let d = delta_m(&tie, 1);
                let rhs = solve(&preset("S5").unwrap(), &d).unwrap();
                count += 1;
                if lhs != rhs {
                    failed.push(format!("{} {:?}", phi.render(), tie.v));
                }
            }
        }
    }
    tally.record("preconical-delta", count, failed);

    // Universal modality elimination on lifted clusters up to 3 worlds.
    let lifted = FrameClassTag::UniversalLifted(Box::new(FrameClassTag::Clusters));
    let cl = cluster_oracle();
    let mut failed = Vec::new();
    let mut count = 0;
    for phi in formulas_up_to(5, 1, 2) {
        let ctx = FormulaCtx::new(&phi, 2);
        let brute = brute_sat(&lifted, ModelBudget::new(3), &ctx).unwrap().is_some();
        count += 1;
        if sat_univ(&phi, &cl).unwrap() != brute {
            failed.push(phi.render());
        }
    }
    tally.record("universal-elimination", count, failed);

    // Relativization: clusters are closed under subframes.
    let s5 = preset("S5").unwrap();
    let mut failed = Vec::new();
    let mut count = 0;
    for phi in formulas_up_to(5, 1, 1) {
        let ctx = FormulaCtx::new(&phi, 1);
        let lhs = brute_sat(&FrameClassTag::Clusters, ModelBudget::new(ctx.len()), &ctx).unwrap().is_some();
        count += 1;
        if lhs != solve(&s5, &relativize(&phi)).unwrap() {
            failed.push(phi.render());
        }
    }
    tally.record("relativization", count, failed);

    // Associativity of sums, at most 8 worlds.
    let mut failed = Vec::new();
    let mut count = 0;
    while count < PROPERTY_INSTANCES {
        let outer = rng.gen_range(1..=2);
        let index = random_frame(&mut rng, outer, 2, 0.5);
        let inner: Vec<Frame> = (0..outer).map(|_| { let n = rng.gen_range(1..=2); random_frame(&mut rng, n, 2, 0.5) }).collect();
        let leaves: Vec<Vec<Frame>> = inner
            .iter()
            .map(|j| (0..j.worlds()).map(|_| { let n = rng.gen_range(1..=2); random_frame(&mut rng, n, 2, 0.5) }).collect())
            .collect();
        let total: usize = leaves.iter().flatten().map(|f| f.worlds()).sum();
        if total > 8 {
            continue;
        }
        count += 1;
        let nested: Vec<Frame> = inner.iter().zip(&leaves).map(|(j, fs)| sum(j, fs).unwrap()).collect();
        let lhs = sum(&index, &nested).unwrap();
        let flat_index = sum(&index, &inner).unwrap();
        let flat: Vec<Frame> = leaves.iter().flatten().cloned().collect();
        let rhs = sum(&flat_index, &flat).unwrap();
        let a = rng.gen_range(0..2);
        let single = a_sum(a, &Frame::chain(2), &[lhs.clone(), rhs.clone()]).unwrap();
        if !isomorphic(&lhs, &rhs) || single.worlds() != 2 * lhs.worlds() {
            failed.push(format!("{} worlds", lhs.worlds()));
        }
    }
    tally.record("associativity", count, failed);

    if tally.failures.is_empty() {
        Ok(tally.lines.join(", "))
    } else {
        Err(tally.failures.join("; "))
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, connectives: usize, m: usize) -> Formula {
    if connectives == 0 {
        return var(rng.gen_range(1..=m as u32));
    }
    if rng.gen_bool(0.25) {
        return not(random_matrix(rng, connectives - 1, m));
    }
    let left = rng.gen_range(0..connectives);
    let (a, b) = (random_matrix(rng, left, m), random_matrix(rng, connectives - 1 - left, m));
    match rng.gen_range(0..3) {
        0 => and(a, b),
        1 => or(a, b),
        _ => imp(a, b),
    }
}

fn prefixes(m: usize) -> Vec<Vec<Quantifier>> {
    (0..1u32 << m)
        .map(|bits| (0..m).map(|i| if bits >> i & 1 == 1 { Quantifier::Forall } else { Quantifier::Exists }).collect())
        .collect()
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut instances: Vec<Qbf> = Vec::new();
    // Every prefix with every matrix of at most one connective.
    for m in 1..=3 {
        let leaves: Vec<Formula> = (1..=m as u32).map(var).collect();
        let mut matrices = leaves.clone();
        matrices.extend(leaves.iter().map(|l| not(l.clone())));
        for a in &leaves {
            for b in &leaves {
                matrices.extend([and(a.clone(), b.clone()), or(a.clone(), b.clone()), imp(a.clone(), b.clone())]);
            }
        }
        for prefix in prefixes(m) {
            for mat in &matrices {
                instances.push(Qbf::new(prefix.clone(), mat.clone()).unwrap());
            }
        }
    }
    let exhaustive = instances.len();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    for _ in 0..LADNER_SAMPLES {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(2..=LADNER_CONNECTIVES);
        let prefix = prefixes(m)[rng.gen_range(0..1usize << m)].clone();
        instances.push(Qbf::new(prefix, random_matrix(&mut rng, k, m)).unwrap());
    }
    let (s4, gl) = (preset("S4").unwrap(), preset("GL").unwrap());
    let mut valid = 0;
    for eta in &instances {
        let truth = qbf_eval(eta).map_err(|e| e.to_string())?;
        let enc = ladner_encode(eta).map_err(|e| e.to_string())?;
        let a = solve(&s4, &enc).map_err(|e| e.to_string())?;
        let b = solve(&gl, &enc).map_err(|e| e.to_string())?;
        if a != truth || b != truth {
            return Err(format!("{eta}: qbf={truth} S4={a} GL={b}"));
        }
        if truth {
            valid += 1;
            let tree = quantifier_tree(eta);
            for frame in [tree.preorder(), tree.strict_order()] {
                let model = ladner_model(eta, &frame).map_err(|e| e.to_string())?.ok_or("no intended model")?;
                if !eval(&model, 0, &enc) {
                    return Err(format!("{eta}: intended model fails the encoding"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > LADNER_LIMIT {
        return Err(format!("took {elapsed:.1?}, limit {LADNER_LIMIT:?}"));
    }
    Ok(format!("{} QBFs ({exhaustive} exhaustive, {LADNER_SAMPLES} sampled), {valid} true, {elapsed:.1?}", instances.len()))
}

fn criterion_6() -> Check {
    let oracles: Vec<(&str, Box<dyn SummandOracle>)> = vec![
        ("cluster", Box::new(cluster_oracle())),
        ("point", Box::new(singleton_oracle(false, 1))),
        ("reflexive point", Box::new(singleton_oracle(true, 1))),
        ("difference", Box::new(DifferenceOracle::new(DifferenceVariant::All))),
    ];
    let memo = SearchOptions { memo: true, literal_covers: false };
    let plain = SearchOptions { memo: false, literal_covers: false };
    let mut deepest_sum = 0;
    let mut deepest_j = 0;
    let corpus = corpus();
    for phi in &corpus {
        let n = subformula_chain(phi).len();
        for (name, o) in &oracles {
            let (a, sa) = sat_over_sums_with(phi, 0, o.as_ref(), memo).map_err(|e| e.to_string())?;
            let (b, sb) = sat_over_sums_with(phi, 0, o.as_ref(), plain).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{name} {}: memo {a}, plain {b}", phi.render()));
            }
            let depth = sa.max_recursion_depth.max(sb.max_recursion_depth);
            if depth > n {
                return Err(format!("{name} {}: depth {depth} > h = {n}", phi.render()));
            }
            deepest_sum = deepest_sum.max(depth);
        }
        let (a, sa) = sat_j_with(phi, memo).map_err(|e| e.to_string())?;
        // Without the memo the nested search is exponential, so the comparison stops at a smaller length.
        let (b, sb) = if n <= J_PLAIN_LEN { sat_j_with(phi, plain).map_err(|e| e.to_string())? } else { (a, sa.clone()) };
        let depth = sa.max_recursion_depth.max(sb.max_recursion_depth);
        if a != b || depth > n * (n + 1) {
            return Err(format!("J {}: memo {a}, plain {b}, depth {depth}", phi.render()));
        }
        deepest_j = deepest_j.max(depth);
        for name in ["S4", "GL", "wK4"] {
            let pr = preset(name).unwrap();
            let x = solve_with(&pr, phi, EngineOptions { memo: true }).map_err(|e| e.to_string())?.sat;
            let y = solve_with(&pr, phi, EngineOptions { memo: false }).map_err(|e| e.to_string())?.sat;
            if x != y {
                return Err(format!("engine {name} {}: memo {x}, plain {y}", phi.render()));
            }
        }
    }
    Ok(format!("{} formulas (J without memo up to length {J_PLAIN_LEN}), deepest tree recursion {deepest_sum}, deepest nested recursion {deepest_j}", corpus.len()))
}

fn criterion_7() -> Check {
    let gl = preset("GL").unwrap();
    let corpus = corpus();
    let mut sat = 0;
    for phi in &corpus {
        let j = sat_j_with(phi, SearchOptions::default()).map_err(|e| e.to_string())?.0;
        let g = solve(&gl, phi).map_err(|e| e.to_string())?;
        if j != g {
            return Err(format!("{}: sat_j {j}, GL {g}", phi.render()));
        }
        sat += j as usize;
    }
    Ok(format!("{} formulas agree, {sat} satisfiable", corpus.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("exhaustive oracle equivalence (S5, DL)", criterion_1),
        ("sampled oracle equivalence (S4, GL, Grz, wK4, wK4.2)", criterion_2),
        ("axiom suite", criterion_3),
        ("structural properties", criterion_4),
        ("QBF encoding round trip", criterion_5),
        ("recursion depth and memo transparency", criterion_6),
        ("J agrees with GL on one modality", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
