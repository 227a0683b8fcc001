//! Genetic programming over term-weighting expressions.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{BinaryOp, TwsExpr, UnaryOp};
use crate::rng::stream_rng;
use crate::termstats::Terminal;

pub const RUN_LOG_HEADER: &str = "generation,best_fitness,mean_fitness,best_size,best_expr";

/// Probability that a crossover point is an internal node, when one exists.
pub const INTERNAL_NODE_BIAS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    /// Inclusive range of initial tree depths.
    pub init_depth_min: usize,
    pub init_depth_max: usize,
    pub max_depth: usize,
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 50,
            generations: 50,
            tournament_size: 3,
            p_crossover: 0.85,
            p_mutation: 0.15,
            init_depth_min: 2,
            init_depth_max: 6,
            max_depth: 8,
            elitism_count: 1,
            seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.population_size == 0 {
            return bad("population size must be positive".into());
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad(format!(
                "tournament size {} must be in 1..={}",
                self.tournament_size, self.population_size
            ));
        }
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !p_ok(self.p_crossover)
            || !p_ok(self.p_mutation)
            || self.p_crossover + self.p_mutation > 1.0 + 1e-12
        {
            return bad(format!(
                "crossover {} and mutation {} must be probabilities summing to at most 1",
                self.p_crossover, self.p_mutation
            ));
        }
        if self.init_depth_min == 0 || self.init_depth_min > self.init_depth_max {
            return bad(format!(
                "initial depth range {}..={} is empty",
                self.init_depth_min, self.init_depth_max
            ));
        }
        if self.max_depth < self.init_depth_max {
            return bad(format!(
                "max depth {} is below the initial depth {}",
                self.max_depth, self.init_depth_max
            ));
        }
        if self.elitism_count > self.population_size {
            return bad("elitism count exceeds population size".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub expr: TwsExpr,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(expr: TwsExpr) -> Self {
        Individual {
            expr,
            fitness: None,
        }
    }

    pub fn evaluated(expr: TwsExpr, fitness: f64) -> Self {
        Individual {
            expr,
            fitness: Some(fitness),
        }
    }

    pub fn size(&self) -> usize {
        self.expr.size()
    }
}

/// Higher fitness wins, then the smaller tree.
fn better(a: &Individual, b: &Individual) -> bool {
    match (a.fitness, b.fitness) {
        (Some(fa), Some(fb)) => fa > fb || (fa == fb && a.size() < b.size()),
        (Some(_), None) => true,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    /// Best fitness found so far.
    pub best_fitness: f64,
    /// Mean fitness of this generation's population.
    pub mean_fitness: f64,
    pub best_size: usize,
    pub best_expr: String,
}

#[derive(Debug, Clone)]
pub struct GpRun {
    pub config: GpConfig,
    pub log: Vec<GenerationLog>,
    pub best: Individual,
    /// Distinct expressions sent to the fitness function.
    pub evaluations: usize,
}

impl GpRun {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{RUN_LOG_HEADER}")?;
        for g in &self.log {
            writeln!(
                w,
                "{},{},{},{},\"{}\"",
                g.generation,
                g.best_fitness,
                g.mean_fitness,
                g.best_size,
                g.best_expr.replace('"', "\"\"")
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

fn random_terminal<R: Rng + ?Sized>(rng: &mut R) -> Terminal {
    Terminal::ALL[rng.random_range(0..Terminal::ALL.len())]
}

const N_OPERATORS: usize = UnaryOp::ALL.len() + BinaryOp::ALL.len();

fn random_operator_node<R: Rng + ?Sized>(
    rng: &mut R,
    mut child: impl FnMut(&mut R) -> TwsExpr,
) -> TwsExpr {
    let k = rng.random_range(0..N_OPERATORS);
    if k < UnaryOp::ALL.len() {
        TwsExpr::unary(UnaryOp::ALL[k], child(rng))
    } else {
        let op = BinaryOp::ALL[k - UnaryOp::ALL.len()];
        let l = child(rng);
        let r = child(rng);
        TwsExpr::binary(op, l, r)
    }
}

/// Every branch reaches exactly `depth`.
pub fn full_tree<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> TwsExpr {
    if depth <= 1 {
        TwsExpr::leaf(random_terminal(rng))
    } else {
        random_operator_node(rng, |r| full_tree(r, depth - 1))
    }
}

/// Depth at most `max_depth`. The root is an operator when depth allows;
/// below it each node is an operator or a terminal with equal chance.
pub fn grow_tree<R: Rng + ?Sized>(rng: &mut R, max_depth: usize) -> TwsExpr {
    fn below<R: Rng + ?Sized>(rng: &mut R, remaining: usize) -> TwsExpr {
        if remaining <= 1 || rng.random_bool(0.5) {
            TwsExpr::leaf(random_terminal(rng))
        } else {
            random_operator_node(rng, |r| below(r, remaining - 1))
        }
    }
    if max_depth <= 1 {
        TwsExpr::leaf(random_terminal(rng))
    } else {
        random_operator_node(rng, |r| below(r, max_depth - 1))
    }
}

/// Ramped half-and-half: individual `i` uses depth
/// `min + (i / 2) % n_depths`, built by "full" for even `i` and "grow" for odd.
pub fn init_population<R: Rng + ?Sized>(cfg: &GpConfig, rng: &mut R) -> Vec<Individual> {
    let n_depths = cfg.init_depth_max - cfg.init_depth_min + 1;
    (0..cfg.population_size)
        .map(|i| {
            let depth = cfg.init_depth_min + (i / 2) % n_depths;
            let expr = if i % 2 == 0 {
                full_tree(rng, depth)
            } else {
                grow_tree(rng, depth)
            };
            Individual::new(expr)
        })
        .collect()
}

/// Best of `k` individuals sampled with replacement.
pub fn tournament_select<'a, R: Rng + ?Sized>(
    pop: &'a [Individual],
    k: usize,
    rng: &mut R,
) -> Result<&'a Individual> {
    if pop.is_empty() || k == 0 {
        return Err(Error::InvalidParameter(
            "tournament needs a non-empty pool and k >= 1".into(),
        ));
    }
    let mut best: Option<&Individual> = None;
    for _ in 0..k {
        let cand = &pop[rng.random_range(0..pop.len())];
        if cand.fitness.is_none() {
            return Err(Error::Unevaluated);
        }
        if best.is_none_or(|b| better(cand, b)) {
            best = Some(cand);
        }
    }
    Ok(best.expect("k >= 1"))
}

fn pick_crossover_point<R: Rng + ?Sized>(expr: &TwsExpr, rng: &mut R) -> (usize, usize) {
    let nodes = expr.nodes();
    let (internal, leaves): (Vec<usize>, Vec<usize>) =
        (0..nodes.len()).partition(|&i| !nodes[i].0.is_leaf());
    let pool = if !internal.is_empty() && rng.random_bool(INTERNAL_NODE_BIAS) {
        &internal
    } else {
        &leaves
    };
    let i = pool[rng.random_range(0..pool.len())];
    (i, nodes[i].1)
}

/// Swaps one random subtree of `a` with one of `b`. An offspring deeper than
/// `max_depth` is replaced by a copy of its own parent.
pub fn crossover<R: Rng + ?Sized>(
    a: &TwsExpr,
    b: &TwsExpr,
    rng: &mut R,
    max_depth: usize,
) -> (TwsExpr, TwsExpr) {
    let (ia, _) = pick_crossover_point(a, rng);
    let (ib, _) = pick_crossover_point(b, rng);
    let sub_a = a.subtree(ia).expect("valid index").clone();
    let sub_b = b.subtree(ib).expect("valid index").clone();

    let mut child_a = a.clone();
    child_a.replace_subtree(ia, sub_b);
    let mut child_b = b.clone();
    child_b.replace_subtree(ib, sub_a);

    let guard = |child: TwsExpr, parent: &TwsExpr| {
        if child.depth() > max_depth {
            parent.clone()
        } else {
            child
        }
    };
    (guard(child_a, a), guard(child_b, b))
}

/// Point mutation: one uniformly chosen node changes to a different
/// operator of the same arity, or a different terminal. Shape is kept.
pub fn mutate<R: Rng + ?Sized>(a: &TwsExpr, rng: &mut R) -> TwsExpr {
    fn other<T: Copy + PartialEq, R: Rng + ?Sized>(all: &[T], current: T, rng: &mut R) -> T {
        let choices: Vec<T> = all.iter().copied().filter(|&x| x != current).collect();
        choices[rng.random_range(0..choices.len())]
    }
    let mut out = a.clone();
    let idx = rng.random_range(0..a.size());
    let node = out.subtree_mut(idx).expect("valid index");
    match node {
        TwsExpr::Leaf(t) => *t = other(&Terminal::ALL, *t, rng),
        TwsExpr::Unary(op, _) => *op = other(&UnaryOp::ALL, *op, rng),
        TwsExpr::Binary(op, _, _) => *op = other(&BinaryOp::ALL, *op, rng),
    }
    out
}

/// Fitness memo keyed by canonical printed form.
struct FitnessCache<'f, F> {
    fitness: &'f F,
    memo: HashMap<String, f64>,
}

impl<F: Fn(&TwsExpr) -> f64 + Sync> FitnessCache<'_, F> {
    fn evaluate(&mut self, pop: &mut [Individual]) {
        let keys: Vec<String> = pop.iter().map(|ind| ind.expr.to_string()).collect();
        let mut pending: Vec<(String, &TwsExpr)> = Vec::new();
        for (key, ind) in keys.iter().zip(pop.iter()) {
            if ind.fitness.is_none()
                && !self.memo.contains_key(key)
                && !pending.iter().any(|(k, _)| k == key)
            {
                pending.push((key.clone(), &ind.expr));
            }
        }
        let f = self.fitness;
        let scores: Vec<f64> = pending.par_iter().map(|(_, e)| f(e)).collect();
        for ((key, _), score) in pending.into_iter().zip(scores) {
            let score = if score.is_nan() {
                log::warn!("fitness of {key} is NaN; using 0");
                0.0
            } else {
                score
            };
            self.memo.insert(key, score);
        }
        for (key, ind) in keys.iter().zip(pop.iter_mut()) {
            if ind.fitness.is_none() {
                ind.fitness = Some(self.memo[key]);
            }
        }
    }
}

fn ranked(pop: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pop.len()).collect();
    idx.sort_by(|&i, &j| {
        if better(&pop[i], &pop[j]) {
            Ordering::Less
        } else if better(&pop[j], &pop[i]) {
            Ordering::Greater
        } else {
            i.cmp(&j)
        }
    });
    idx
}

/// Generational GP with elitism. Fitness evaluations within a generation may
/// run in parallel; every random choice happens on the calling thread, so a
/// run depends only on `cfg` and `fitness`.
pub fn evolve<F>(cfg: &GpConfig, fitness: F) -> Result<GpRun>
where
    F: Fn(&TwsExpr) -> f64 + Sync,
{
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, "gp");
    let mut cache = FitnessCache {
        fitness: &fitness,
        memo: HashMap::new(),
    };

    let mut pop = init_population(cfg, &mut rng);
    cache.evaluate(&mut pop);

    let mut best = pop[ranked(&pop)[0]].clone();
    let mut log = vec![log_entry(0, &best, &pop)];

    for generation in 1..=cfg.generations {
        let order = ranked(&pop);
        let mut next: Vec<Individual> = order[..cfg.elitism_count]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let r: f64 = rng.random();
            if r < cfg.p_crossover {
                let a = tournament_select(&pop, cfg.tournament_size, &mut rng)?;
                let b = tournament_select(&pop, cfg.tournament_size, &mut rng)?;
                let (c1, c2) = crossover(&a.expr, &b.expr, &mut rng, cfg.max_depth);
                next.push(Individual::new(c1));
                if next.len() < cfg.population_size {
                    next.push(Individual::new(c2));
                }
            } else if r < cfg.p_crossover + cfg.p_mutation {
                let a = tournament_select(&pop, cfg.tournament_size, &mut rng)?;
                next.push(Individual::new(mutate(&a.expr, &mut rng)));
            } else {
                let a = tournament_select(&pop, cfg.tournament_size, &mut rng)?;
                next.push(a.clone());
            }
        }
        pop = next;
        cache.evaluate(&mut pop);

        let gen_best = &pop[ranked(&pop)[0]];
        if better(gen_best, &best) {
            best = gen_best.clone();
        }
        log.push(log_entry(generation, &best, &pop));
        log::debug!(
            "generation {generation}: best {:.4} {}",
            best.fitness.unwrap_or(0.0),
            best.expr
        );
    }

    Ok(GpRun {
        config: cfg.clone(),
        log,
        best,
        evaluations: cache.memo.len(),
    })
}

fn log_entry(generation: usize, best: &Individual, pop: &[Individual]) -> GenerationLog {
    let mean = pop.iter().map(|i| i.fitness.unwrap_or(0.0)).sum::<f64>() / pop.len() as f64;
    GenerationLog {
        generation,
        best_fitness: best.fitness.unwrap_or(0.0),
        mean_fitness: mean,
        best_size: best.size(),
        best_expr: best.expr.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_prefix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn e(s: &str) -> TwsExpr {
        parse_prefix(s).unwrap()
    }

    #[test]
    fn ramped_half_and_half_layout() {
        let cfg = GpConfig {
            population_size: 4,
            tournament_size: 2,
            init_depth_min: 2,
            init_depth_max: 3,
            ..Default::default()
        };
        let pop = init_population(&cfg, &mut rng(1));
        assert_eq!(pop[0].expr.depth(), 2);
        assert_eq!(pop[2].expr.depth(), 3);
        assert!(pop[1].expr.depth() <= 2 && pop[3].expr.depth() <= 3);
        // Full trees have all leaves at the bottom level.
        for full in [&pop[0].expr, &pop[2].expr] {
            let d = full.depth();
            assert!(full.nodes().iter().all(|(n, nd)| n.is_leaf() == (*nd == d)));
        }
        assert_eq!(pop, init_population(&cfg, &mut rng(1)));
    }

    #[test]
    fn default_population_split() {
        let cfg = GpConfig::default();
        let pop = init_population(&cfg, &mut rng(3));
        assert_eq!(pop.len(), 50);
        assert!(pop.iter().all(|i| (2..=6).contains(&i.expr.depth())));
    }

    #[test]
    fn tournament_rules() {
        let pool = vec![
            Individual::evaluated(e("TF"), 0.2),
            Individual::evaluated(e("+(TF,IG)"), 0.9),
        ];
        // Enough draws to see both with overwhelming probability.
        let won = tournament_select(&pool, 20, &mut rng(0)).unwrap();
        assert_eq!(won.fitness, Some(0.9));

        let tied = vec![
            Individual::evaluated(e("+(TF,*(IG,RF))"), 0.5),
            Individual::evaluated(e("+(TF,IG)"), 0.5),
        ];
        assert_eq!(tournament_select(&tied, 30, &mut rng(0)).unwrap().size(), 3);

        let unevaluated = vec![Individual::new(e("TF"))];
        assert!(matches!(
            tournament_select(&unevaluated, 1, &mut rng(0)),
            Err(Error::Unevaluated)
        ));
    }

    #[test]
    fn crossover_of_leaves_swaps() {
        let (a, b) = crossover(&e("TF"), &e("TFIDF"), &mut rng(0), 8);
        assert_eq!((a, b), (e("TFIDF"), e("TF")));
    }

    #[test]
    fn crossover_depth_guard() {
        // Any swap that moves the deep subtree under the deep leaf exceeds 3.
        let deep = e("sqrt(sqrt(TF))");
        let mut r = rng(5);
        for _ in 0..50 {
            let (a, b) = crossover(&deep, &deep, &mut r, 3);
            assert!(a.depth() <= 3 && b.depth() <= 3);
        }
    }

    #[test]
    fn crossover_preserves_total_size_without_guard() {
        let a = e("+(sqrt(TF),*(IG,RF))");
        let b = e("div(log2(N),-(V,pow2(CHI)))");
        let mut r = rng(11);
        for _ in 0..100 {
            let (c, d) = crossover(&a, &b, &mut r, 100);
            assert_eq!(c.size() + d.size(), a.size() + b.size());
        }
    }

    #[test]
    fn mutation_keeps_shape() {
        let mut r = rng(2);
        for _ in 0..50 {
            let m = mutate(&e("sqrt(TF)"), &mut r);
            assert_eq!(m.size(), 2);
            assert_ne!(m, e("sqrt(TF)"));
        }
        for _ in 0..50 {
            match mutate(&e("TF"), &mut r) {
                TwsExpr::Leaf(t) => assert_ne!(t, Terminal::W6),
                other => panic!("shape changed: {other}"),
            }
        }
        for _ in 0..50 {
            let m = mutate(&e("+(TF,IG)"), &mut r);
            match &m {
                TwsExpr::Binary(op, l, r) if **l == e("TF") && **r == e("IG") => {
                    assert_ne!(*op, BinaryOp::Add)
                }
                TwsExpr::Binary(op, _, _) => assert_eq!(*op, BinaryOp::Add),
                other => panic!("shape changed: {other}"),
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(GpConfig::default().validate().is_ok());
        let bad = [
            GpConfig {
                p_crossover: 0.9,
                p_mutation: 0.2,
                ..Default::default()
            },
            GpConfig {
                max_depth: 4,
                ..Default::default()
            },
            GpConfig {
                population_size: 2,
                ..Default::default()
            },
            GpConfig {
                init_depth_min: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn evolve_small_trees_and_log() {
        let cfg = GpConfig {
            population_size: 20,
            generations: 15,
            seed: 4,
            ..Default::default()
        };
        let run = evolve(&cfg, |e| 1.0 / e.size() as f64).unwrap();
        assert_eq!(run.log.len(), 16);
        assert!(run
            .log
            .windows(2)
            .all(|w| w[1].best_fitness >= w[0].best_fitness));
        let again = evolve(&cfg, |e| 1.0 / e.size() as f64).unwrap();
        assert_eq!(run.to_csv(), again.to_csv());
        assert!(run.to_csv().starts_with(RUN_LOG_HEADER));
    }

    #[test]
    fn zero_generations_and_nan_fitness() {
        let cfg = GpConfig {
            generations: 0,
            ..Default::default()
        };
        let run = evolve(&cfg, |_| f64::NAN).unwrap();
        assert_eq!(run.log.len(), 1);
        assert_eq!(run.best.fitness, Some(0.0));
    }
}
