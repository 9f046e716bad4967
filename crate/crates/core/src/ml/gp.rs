//! Tree-based genetic programming over the feature terminals.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Head;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Add,
    Sub,
    Mul,
    /// Protected division: 1 when the divisor is (nearly) zero.
    Div,
    /// Feature index, 0-based.
    Var(usize),
    Const(f64),
}

impl Node {
    fn arity(self) -> usize {
        match self {
            Node::Add | Node::Sub | Node::Mul | Node::Div => 2,
            Node::Var(_) | Node::Const(_) => 0,
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            Node::Add => a + b,
            Node::Sub => a - b,
            Node::Mul => a * b,
            Node::Div => {
                if b.abs() < 1e-9 {
                    1.0
                } else {
                    a / b
                }
            }
            Node::Var(_) | Node::Const(_) => unreachable!("terminal has no arguments"),
        };
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

/// An expression in prefix order.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub nodes: Vec<Node>,
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for &n in self.nodes.iter().rev() {
            match n {
                Node::Var(k) => stack.push(x[k]),
                Node::Const(c) => stack.push(c),
                op => {
                    let a = stack.pop().expect("well-formed expression");
                    let b = stack.pop().expect("well-formed expression");
                    stack.push(op.apply(a, b));
                }
            }
        }
        stack.pop().unwrap_or(0.0)
    }

    /// Evaluates on every row of a column-major table.
    fn eval_columns(
        &self,
        columns: &[Vec<f64>],
        rows: usize,
        pool: &mut Vec<Vec<f64>>,
    ) -> Vec<f64> {
        let mut stack: Vec<Vec<f64>> = Vec::with_capacity(16);
        let take = |pool: &mut Vec<Vec<f64>>| pool.pop().unwrap_or_else(|| vec![0.0; rows]);
        for &n in self.nodes.iter().rev() {
            match n {
                Node::Var(k) => {
                    let mut v = take(pool);
                    v.copy_from_slice(&columns[k]);
                    stack.push(v);
                }
                Node::Const(c) => {
                    let mut v = take(pool);
                    v.fill(c);
                    stack.push(v);
                }
                op => {
                    let mut a = stack.pop().expect("well-formed expression");
                    let b = stack.pop().expect("well-formed expression");
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x = op.apply(*x, *y);
                    }
                    pool.push(b);
                    stack.push(a);
                }
            }
        }
        stack.pop().unwrap_or_else(|| vec![0.0; rows])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index one past the subtree rooted at `start`.
    fn subtree_end(&self, start: usize) -> usize {
        let mut need = 1;
        let mut i = start;
        while need > 0 {
            need += self.nodes[i].arity();
            need -= 1;
            i += 1;
        }
        i
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: &mut usize) -> usize {
            let n = nodes[*i];
            *i += 1;
            (0..n.arity())
                .map(|_| go(nodes, i))
                .max()
                .map_or(1, |d| d + 1)
        }
        if self.nodes.is_empty() {
            return 0;
        }
        go(&self.nodes, &mut 0)
    }

    fn splice(&self, start: usize, end: usize, insert: &[Node]) -> Expr {
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - start) + insert.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(insert);
        nodes.extend_from_slice(&self.nodes[end..]);
        Expr { nodes }
    }

    /// Prefix tokens: `add sub mul div`, `f1`..`f10`, numbers.
    pub fn to_prefix(&self) -> String {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Add => "add".to_string(),
                Node::Sub => "sub".to_string(),
                Node::Mul => "mul".to_string(),
                Node::Div => "div".to_string(),
                Node::Var(k) => format!("f{}", k + 1),
                Node::Const(c) => format!("{c:?}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_prefix(text: &str, features: usize) -> Result<Expr> {
        let mut nodes = Vec::new();
        for tok in text.split_whitespace() {
            let node = match tok {
                "add" => Node::Add,
                "sub" => Node::Sub,
                "mul" => Node::Mul,
                "div" => Node::Div,
                _ if tok.starts_with('f') && tok.len() > 1 => {
                    let k: usize = tok[1..]
                        .parse()
                        .map_err(|_| Error::Format(format!("bad token `{tok}`")))?;
                    if k == 0 || k > features {
                        return Err(Error::Format(format!("feature `{tok}` out of range")));
                    }
                    Node::Var(k - 1)
                }
                _ => Node::Const(
                    tok.parse()
                        .map_err(|_| Error::Format(format!("bad token `{tok}`")))?,
                ),
            };
            nodes.push(node);
        }
        let mut need: isize = 1;
        for (i, n) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(Error::Format(format!("trailing tokens after position {i}")));
            }
            need += n.arity() as isize - 1;
        }
        if need != 0 {
            return Err(Error::Format("incomplete expression".into()));
        }
        Ok(Expr { nodes })
    }
}

impl fmt::Display for Expr {
    /// Infix form, fully parenthesized.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(nodes: &[Node], i: &mut usize) -> String {
            let n = nodes[*i];
            *i += 1;
            match n {
                Node::Var(k) => format!("f{}", k + 1),
                Node::Const(c) => format!("{c:.3}"),
                op => {
                    let a = go(nodes, i);
                    let b = go(nodes, i);
                    let sym = match op {
                        Node::Add => "+",
                        Node::Sub => "-",
                        Node::Mul => "*",
                        _ => "/",
                    };
                    format!("({a} {sym} {b})")
                }
            }
        }
        if self.nodes.is_empty() {
            return f.write_str("0");
        }
        f.write_str(&go(&self.nodes, &mut 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub max_depth: usize,
    /// Fitness uses at most this many rows, drawn once per run.
    pub fitness_rows: usize,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            population: 500,
            generations: 50,
            tournament: 7,
            crossover: 0.9,
            mutation: 0.05,
            max_depth: 17,
            fitness_rows: 1000,
            seed: 0,
        }
    }
}

struct Evolution<'a> {
    features: usize,
    head: Head,
    columns: Vec<Vec<f64>>,
    labels: Vec<f64>,
    config: &'a GpConfig,
    rng: ChaCha8Rng,
    pool: Vec<Vec<f64>>,
}

impl Evolution<'_> {
    fn terminal(&mut self) -> Node {
        if self.rng.gen_range(0..=self.features) == self.features {
            Node::Const(self.rng.gen_range(-1.0..=1.0))
        } else {
            Node::Var(self.rng.gen_range(0..self.features))
        }
    }

    fn function(&mut self) -> Node {
        [Node::Add, Node::Sub, Node::Mul, Node::Div][self.rng.gen_range(0..4)]
    }

    /// Full trees when `full`, otherwise grown trees, of at most `depth`.
    fn random_tree(&mut self, depth: usize, full: bool, out: &mut Vec<Node>) {
        let leaf = depth <= 1
            || (!full
                && self
                    .rng
                    .gen_bool(self.features as f64 / (self.features + 4) as f64));
        if leaf {
            let t = self.terminal();
            out.push(t);
        } else {
            let f = self.function();
            out.push(f);
            self.random_tree(depth - 1, full, out);
            self.random_tree(depth - 1, full, out);
        }
    }

    fn fitness(&mut self, e: &Expr) -> f64 {
        self.scaled_fitness(e).0
    }

    /// Fitness after the best affine rescaling of the expression output, and
    /// that rescaling `(offset, factor)`. Regression uses least squares;
    /// classification only a positive factor, so signs are unchanged.
    fn scaled_fitness(&mut self, e: &Expr) -> (f64, (f64, f64)) {
        let out = e.eval_columns(&self.columns, self.labels.len(), &mut self.pool);
        let (f, scale) = match self.head {
            Head::Regression => least_squares_fit(&out, &self.labels),
            Head::Classification => hinge_fit(&out, &self.labels),
        };
        self.pool.push(out);
        if f.is_finite() {
            (f, scale)
        } else {
            (f64::INFINITY, (0.0, 1.0))
        }
    }

    /// Random node, favouring function nodes nine times in ten.
    fn pick_node(&mut self, e: &Expr) -> usize {
        let internal: Vec<usize> = (0..e.len()).filter(|&i| e.nodes[i].arity() > 0).collect();
        if !internal.is_empty() && self.rng.gen_bool(0.9) {
            internal[self.rng.gen_range(0..internal.len())]
        } else {
            self.rng.gen_range(0..e.len())
        }
    }

    fn tournament(&mut self, scored: &[(f64, Expr)]) -> usize {
        let mut best = self.rng.gen_range(0..scored.len());
        for _ in 1..self.config.tournament {
            let c = self.rng.gen_range(0..scored.len());
            let (fc, fb) = (scored[c].0, scored[best].0);
            if fc < fb || (fc == fb && scored[c].1.len() < scored[best].1.len()) {
                best = c;
            }
        }
        best
    }

    fn run(&mut self) -> Expr {
        let cfg = *self.config;
        let mut scored: Vec<(f64, Expr)> = Vec::with_capacity(cfg.population);
        for i in 0..cfg.population {
            // ramped half-and-half over depths 2..=6
            let depth = 2 + i % 5;
            let mut nodes = Vec::new();
            self.random_tree(depth, i % 2 == 0, &mut nodes);
            let e = Expr { nodes };
            let f = self.fitness(&e);
            scored.push((f, e));
        }
        let better =
            |a: &(f64, Expr), b: &(f64, Expr)| a.0 < b.0 || (a.0 == b.0 && a.1.len() < b.1.len());
        let mut best = scored[0].clone();
        for s in &scored {
            if better(s, &best) {
                best = s.clone();
            }
        }
        for _ in 0..cfg.generations {
            let mut next: Vec<(f64, Expr)> = Vec::with_capacity(cfg.population);
            next.push(best.clone());
            while next.len() < cfg.population {
                let r: f64 = self.rng.gen();
                let p = self.tournament(&scored);
                let child = if r < cfg.crossover {
                    let q = self.tournament(&scored);
                    let (a, b) = (&scored[p].1, &scored[q].1);
                    let (a, b) = (a.clone(), b.clone());
                    let i = self.pick_node(&a);
                    let j = self.pick_node(&b);
                    let c = a.splice(i, a.subtree_end(i), &b.nodes[j..b.subtree_end(j)]);
                    if c.depth() <= cfg.max_depth {
                        c
                    } else {
                        a
                    }
                } else if r < cfg.crossover + cfg.mutation {
                    let a = scored[p].1.clone();
                    let i = self.rng.gen_range(0..a.len());
                    let mut sub = Vec::new();
                    self.random_tree(4, false, &mut sub);
                    let c = a.splice(i, a.subtree_end(i), &sub);
                    if c.depth() <= cfg.max_depth {
                        c
                    } else {
                        a
                    }
                } else {
                    scored[p].1.clone()
                };
                let f = self.fitness(&child);
                next.push((f, child));
            }
            scored = next;
            for s in &scored {
                if better(s, &best) {
                    best = s.clone();
                }
            }
        }
        let (_, (offset, factor)) = self.scaled_fitness(&best.1);
        let mut nodes = Vec::with_capacity(best.1.len() + 4);
        if offset != 0.0 {
            nodes.extend([Node::Add, Node::Const(offset)]);
        }
        if factor != 1.0 {
            nodes.extend([Node::Mul, Node::Const(factor)]);
        }
        nodes.extend_from_slice(&best.1.nodes);
        Expr { nodes }
    }
}

const MAX_FACTOR: f64 = 1e6;

/// Mean squared error of `a + b g` against `y` at the least-squares `a, b`.
fn least_squares_fit(g: &[f64], y: &[f64]) -> (f64, (f64, f64)) {
    let n = y.len() as f64;
    let mg = g.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sgy, mut sgg) = (0.0, 0.0);
    for (a, b) in g.iter().zip(y) {
        sgy += (a - mg) * (b - my);
        sgg += (a - mg) * (a - mg);
    }
    let factor = if sgg > 1e-12 {
        (sgy / sgg).clamp(-MAX_FACTOR, MAX_FACTOR)
    } else {
        0.0
    };
    let offset = my - factor * mg;
    let mse = g
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = offset + factor * a - b;
            r * r
        })
        .sum::<f64>()
        / n;
    (mse, (offset, factor))
}

/// Mean hinge loss of `b g` against ±1 labels at the best `b >= 0`.
fn hinge_fit(g: &[f64], y: &[f64]) -> (f64, (f64, f64)) {
    let n = y.len() as f64;
    let margins: Vec<f64> = g.iter().zip(y).map(|(a, b)| a * b).collect();
    // the loss is convex in b with slope -sum of margins still below 1
    let mut slope: f64 = -margins.iter().sum::<f64>();
    let mut factor = 0.0;
    if slope < 0.0 {
        let mut breaks: Vec<f64> = margins
            .iter()
            .filter(|&&m| m > 0.0)
            .map(|m| 1.0 / m)
            .collect();
        breaks.sort_by(f64::total_cmp);
        let mut sorted_margins = breaks.iter().map(|b| 1.0 / b);
        for &b in &breaks {
            factor = b;
            slope += sorted_margins.next().unwrap_or(0.0);
            if slope >= 0.0 {
                break;
            }
        }
        factor = factor.min(MAX_FACTOR);
    }
    let loss = margins
        .iter()
        .map(|m| (1.0 - factor * m).max(0.0))
        .sum::<f64>()
        / n;
    (loss, (0.0, if factor > 0.0 { factor } else { 1.0 }))
}

/// Evolves an expression on row-major `xs` (`dim` columns). Minimizes mean
/// squared error for regression and mean hinge loss of the expression value
/// for classification.
pub(crate) fn evolve(head: Head, xs: &[f64], ys: &[f64], dim: usize, config: &GpConfig) -> Expr {
    let n = ys.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows: Vec<usize> = (0..n).collect();
    if n > config.fitness_rows {
        let (picked, _) = rows.partial_shuffle(&mut rng, config.fitness_rows);
        rows = picked.to_vec();
    }
    let columns: Vec<Vec<f64>> = (0..dim)
        .map(|k| rows.iter().map(|&i| xs[i * dim + k]).collect())
        .collect();
    let labels = rows.iter().map(|&i| ys[i]).collect();
    Evolution {
        features: dim,
        head,
        columns,
        labels,
        config,
        rng,
        pool: Vec::new(),
    }
    .run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_oneof, proptest, Just, Strategy};

    #[test]
    fn prefix_round_trip_and_eval() {
        let e = Expr::parse_prefix("add mul 0.572 f2 f9", 10).unwrap();
        let mut x = [0.0; 10];
        x[1] = 1.0;
        x[8] = 0.5;
        assert!((e.eval(&x) - 1.072).abs() < 1e-12);
        assert_eq!(Expr::parse_prefix(&e.to_prefix(), 10).unwrap(), e);
        assert_eq!(e.depth(), 3);
        assert_eq!(e.to_string(), "((0.572 * f2) + f9)");
    }

    #[test]
    fn malformed_prefix_is_rejected() {
        for bad in ["add f1", "f1 f2", "mul f11 f1", "foo", ""] {
            assert!(Expr::parse_prefix(bad, 10).is_err(), "{bad}");
        }
    }

    #[test]
    fn protected_division() {
        let e = Expr::parse_prefix("div f1 sub f2 f2", 10).unwrap();
        assert_eq!(e.eval(&[3.0; 10]), 1.0);
    }

    #[test]
    fn recovers_scaled_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..600 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
            ys.push(1.271 * x[8]);
            xs.extend(x);
        }
        let (train_x, test_x) = xs.split_at(400 * 10);
        let (train_y, test_y) = ys.split_at(400);
        let e = evolve(Head::Regression, train_x, train_y, 10, &GpConfig::default());
        let pred: Vec<f64> = test_x.chunks(10).map(|x| e.eval(x)).collect();
        let r2 = crate::ml::r_squared(test_y, &pred);
        assert!(r2 >= 0.99, "r2 {r2} for {e}");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0usize..3).prop_map(|k| vec![Node::Var(k)]),
            prop_oneof![Just(0.0), Just(1e-12), -1.0f64..1.0].prop_map(|c| vec![Node::Const(c)]),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            (0usize..4, inner.clone(), inner).prop_map(|(op, a, b)| {
                let mut v = vec![[Node::Add, Node::Sub, Node::Mul, Node::Div][op]];
                v.extend(a);
                v.extend(b);
                v
            })
        })
        .prop_map(|nodes| Expr { nodes })
    }

    proptest! {
        #[test]
        fn evaluation_is_always_finite(e in arb_expr(), x in proptest::collection::vec(-1e6f64..1e6, 3)) {
            prop_assert!(e.eval(&x).is_finite());
            let cols: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
            let batch = e.eval_columns(&cols, 1, &mut Vec::new());
            prop_assert_eq!(batch[0], e.eval(&x));
        }
    }
}
