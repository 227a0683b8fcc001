//! Term-weighting expression trees.
//!
//! A [`TwsExpr`] combines terminals with `+ - * div log2 sqrt pow2`. All
//! operators act element-wise on `N x |V|` matrices and are protected so
//! that every tree evaluates to a finite matrix:
//!
//! * `div(a, b)` is `a / b` when `|b| > 1e-12`, else 0
//! * `log2(x)` is `log2(|x|)` when `|x| > 1e-12`, else 0
//! * `sqrt(x)` is `sqrt(|x|)`
//! * any result that overflows to a non-finite value becomes 0
//!
//! Trees print and parse in prefix notation, e.g.
//! `-(sqrt(TFIDF),div(log2(sqrt(ProbR)),RF))`.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Zip};
use thiserror::Error;

use crate::corpus::DocumentSet;
use crate::error::Result;
use crate::termstats::{TermStats, Terminal, TerminalBank, TerminalSource, WeightMatrix};

pub const PROTECTION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Log2,
    Sqrt,
    Pow2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[inline]
fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 3] = [UnaryOp::Log2, UnaryOp::Sqrt, UnaryOp::Pow2];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        let y = match self {
            UnaryOp::Log2 => {
                if x.abs() > PROTECTION_EPS {
                    x.abs().log2()
                } else {
                    0.0
                }
            }
            UnaryOp::Sqrt => x.abs().sqrt(),
            UnaryOp::Pow2 => x * x,
        };
        finite_or_zero(y)
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Log2 => "log2",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Pow2 => "pow2",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let y = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b.abs() > PROTECTION_EPS {
                    a / b
                } else {
                    0.0
                }
            }
        };
        finite_or_zero(y)
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "div",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Operator {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

fn operator_from_name(name: &str) -> Option<Operator> {
    use Operator::*;
    let op = match name.to_lowercase().as_str() {
        "+" | "plus" | "add" => Binary(BinaryOp::Add),
        "-" | "minus" | "sub" => Binary(BinaryOp::Sub),
        "*" | "×" | "times" | "mul" => Binary(BinaryOp::Mul),
        "div" | "/" => Binary(BinaryOp::Div),
        "log2" | "log" => Unary(UnaryOp::Log2),
        "sqrt" => Unary(UnaryOp::Sqrt),
        "pow2" => Unary(UnaryOp::Pow2),
        _ => return None,
    };
    Some(op)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TwsExpr {
    Leaf(Terminal),
    Unary(UnaryOp, Box<TwsExpr>),
    Binary(BinaryOp, Box<TwsExpr>, Box<TwsExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprMetrics {
    pub depth: usize,
    pub size: usize,
    pub terminals: BTreeMap<Terminal, usize>,
}

impl TwsExpr {
    pub fn leaf(t: Terminal) -> Self {
        TwsExpr::Leaf(t)
    }

    pub fn unary(op: UnaryOp, child: TwsExpr) -> Self {
        TwsExpr::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: TwsExpr, right: TwsExpr) -> Self {
        TwsExpr::Binary(op, Box::new(left), Box::new(right))
    }

    /// Levels in the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            TwsExpr::Leaf(_) => 1,
            TwsExpr::Unary(_, c) => 1 + c.depth(),
            TwsExpr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            TwsExpr::Leaf(_) => 1,
            TwsExpr::Unary(_, c) => 1 + c.size(),
            TwsExpr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TwsExpr::Leaf(_))
    }

    pub fn metrics(&self) -> ExprMetrics {
        let mut terminals = BTreeMap::new();
        self.visit_leaves(&mut |t| *terminals.entry(t).or_insert(0) += 1);
        ExprMetrics {
            depth: self.depth(),
            size: self.size(),
            terminals,
        }
    }

    fn visit_leaves(&self, f: &mut impl FnMut(Terminal)) {
        match self {
            TwsExpr::Leaf(t) => f(*t),
            TwsExpr::Unary(_, c) => c.visit_leaves(f),
            TwsExpr::Binary(_, l, r) => {
                l.visit_leaves(f);
                r.visit_leaves(f);
            }
        }
    }

    fn children(&self) -> impl Iterator<Item = &TwsExpr> {
        let (a, b) = match self {
            TwsExpr::Leaf(_) => (None, None),
            TwsExpr::Unary(_, c) => (Some(&**c), None),
            TwsExpr::Binary(_, l, r) => (Some(&**l), Some(&**r)),
        };
        a.into_iter().chain(b)
    }

    /// Nodes in preorder, paired with their depth (root = 1).
    pub fn nodes(&self) -> Vec<(&TwsExpr, usize)> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![(self, 1)];
        while let Some((node, d)) = stack.pop() {
            out.push((node, d));
            let kids: Vec<_> = node.children().collect();
            for k in kids.into_iter().rev() {
                stack.push((k, d + 1));
            }
        }
        out
    }

    /// The subtree rooted at preorder position `index`.
    pub fn subtree(&self, index: usize) -> Option<&TwsExpr> {
        self.nodes().get(index).map(|(n, _)| *n)
    }

    pub fn subtree_mut(&mut self, index: usize) -> Option<&mut TwsExpr> {
        fn walk<'a>(node: &'a mut TwsExpr, index: &mut usize) -> Option<&'a mut TwsExpr> {
            if *index == 0 {
                return Some(node);
            }
            *index -= 1;
            match node {
                TwsExpr::Leaf(_) => None,
                TwsExpr::Unary(_, c) => walk(c, index),
                TwsExpr::Binary(_, l, r) => {
                    let left_size = l.size();
                    if *index < left_size {
                        walk(l, index)
                    } else {
                        *index -= left_size;
                        walk(r, index)
                    }
                }
            }
        }
        let mut i = index;
        walk(self, &mut i)
    }

    /// Replaces the subtree at preorder `index`, returning the old one.
    pub fn replace_subtree(&mut self, index: usize, new: TwsExpr) -> Option<TwsExpr> {
        self.subtree_mut(index)
            .map(|slot| std::mem::replace(slot, new))
    }

    pub fn to_prefix(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TwsExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwsExpr::Leaf(t) => f.write_str(t.alias()),
            TwsExpr::Unary(op, c) => write!(f, "{}({})", op.name(), c),
            TwsExpr::Binary(op, l, r) => write!(f, "{}({},{})", op.name(), l, r),
        }
    }
}

pub fn print_prefix(expr: &TwsExpr) -> String {
    expr.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("`{op}` takes {expected} argument(s), got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("terminal `{0}` cannot take arguments")]
    TerminalWithArguments(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("empty expression")]
    Empty,
}

/// Parse failure at character offset `position`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at position {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Comma,
    Word(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Open => f.write_str("`(`"),
            Token::Close => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Word(w) => write!(f, "`{w}`"),
        }
    }
}

fn lex(s: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let mut depth: i64 = 0;
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' | ')' | ',' => {
                let tok = match c {
                    '(' => {
                        depth += 1;
                        Token::Open
                    }
                    ')' => {
                        depth -= 1;
                        if depth < 0 {
                            return Err(ParseError {
                                position: i,
                                kind: ParseErrorKind::Unbalanced,
                            });
                        }
                        Token::Close
                    }
                    _ => Token::Comma,
                };
                tokens.push((tok, i));
                i += 1;
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !matches!(chars[i], '(' | ')' | ',')
                    && !chars[i].is_whitespace()
                {
                    i += 1;
                }
                tokens.push((Token::Word(chars[start..i].iter().collect()), start));
            }
        }
    }
    if depth != 0 {
        return Err(ParseError {
            position: chars.len(),
            kind: ParseErrorKind::Unbalanced,
        });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |(_, p)| *p)
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some((t, _)) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some((t, p)) => Err(ParseError {
                position: *p,
                kind: ParseErrorKind::Unexpected {
                    expected: what.into(),
                    found: t.to_string(),
                },
            }),
            None => Err(ParseError {
                position: self.end,
                kind: ParseErrorKind::Unexpected {
                    expected: what.into(),
                    found: "end of input".into(),
                },
            }),
        }
    }

    fn expr(&mut self) -> Result<TwsExpr, ParseError> {
        let (word, at) = match self.tokens.get(self.pos).cloned() {
            Some((Token::Word(w), p)) => (w, p),
            Some((t, p)) => {
                return Err(ParseError {
                    position: p,
                    kind: ParseErrorKind::Unexpected {
                        expected: "operator or terminal".into(),
                        found: t.to_string(),
                    },
                })
            }
            None => {
                return Err(ParseError {
                    position: self.end,
                    kind: ParseErrorKind::Unexpected {
                        expected: "operator or terminal".into(),
                        found: "end of input".into(),
                    },
                })
            }
        };
        self.pos += 1;

        if let Some(t) = Terminal::from_name(&word) {
            if matches!(self.peek(), Some((Token::Open, _))) {
                return Err(ParseError {
                    position: at,
                    kind: ParseErrorKind::TerminalWithArguments(word),
                });
            }
            return Ok(TwsExpr::Leaf(t));
        }
        let op = operator_from_name(&word).ok_or_else(|| ParseError {
            position: at,
            kind: ParseErrorKind::UnknownToken(word.clone()),
        })?;

        self.expect(Token::Open, "`(`")?;
        let mut args = vec![self.expr()?];
        while matches!(self.peek(), Some((Token::Comma, _))) {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(Token::Close, "`,` or `)`")?;

        let expected = match op {
            Operator::Unary(_) => 1,
            Operator::Binary(_) => 2,
        };
        if args.len() != expected {
            return Err(ParseError {
                position: at,
                kind: ParseErrorKind::Arity {
                    op: word,
                    expected,
                    found: args.len(),
                },
            });
        }
        let mut args = args.into_iter();
        Ok(match op {
            Operator::Unary(u) => TwsExpr::unary(u, args.next().unwrap()),
            Operator::Binary(b) => {
                let l = args.next().unwrap();
                TwsExpr::binary(b, l, args.next().unwrap())
            }
        })
    }
}

pub fn parse_prefix(s: &str) -> Result<TwsExpr, ParseError> {
    let tokens = lex(s)?;
    let end = s.chars().count();
    if tokens.is_empty() {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::Empty,
        });
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end,
    };
    let e = p.expr()?;
    if let Some((t, pos)) = p.peek() {
        return Err(ParseError {
            position: *pos,
            kind: ParseErrorKind::Unexpected {
                expected: "end of input".into(),
                found: t.to_string(),
            },
        });
    }
    debug_assert_eq!(p.here(), end);
    Ok(e)
}

impl FromStr for TwsExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_prefix(s)
    }
}

/// Intermediate value; rows and scalars stay un-broadcast until combined
/// with a full matrix. Element values are identical to evaluating on fully
/// broadcast matrices.
enum Value<'a> {
    Scalar(f64),
    Row(Cow<'a, [f64]>),
    Matrix(Cow<'a, WeightMatrix>),
}

/// Evaluates expressions against one document set. Terminal matrices are
/// built once and shared across evaluations; safe to use from many threads.
pub struct Evaluator<'a> {
    bank: TerminalBank<'a>,
}

impl<'a> Evaluator<'a> {
    pub fn new(stats: &'a TermStats, data: &'a DocumentSet) -> Result<Self> {
        Ok(Evaluator {
            bank: TerminalBank::new(stats, data)?,
        })
    }

    pub fn bank(&self) -> &TerminalBank<'a> {
        &self.bank
    }

    pub fn eval(&self, expr: &TwsExpr) -> WeightMatrix {
        let shape = (self.bank.n_docs(), self.bank.n_terms());
        match self.value(expr) {
            Value::Scalar(s) => Array2::from_elem(shape, s),
            Value::Row(r) => ArrayView1::from(&r[..])
                .broadcast(shape)
                .unwrap()
                .to_owned(),
            Value::Matrix(m) => m.into_owned(),
        }
    }

    fn value(&self, expr: &TwsExpr) -> Value<'_> {
        match expr {
            TwsExpr::Leaf(t) => match self.bank.source(*t) {
                TerminalSource::Scalar(s) => Value::Scalar(s),
                TerminalSource::Row(r) => Value::Row(Cow::Borrowed(r)),
                TerminalSource::Matrix(m) => Value::Matrix(Cow::Borrowed(m)),
            },
            TwsExpr::Unary(op, c) => {
                let op = *op;
                match self.value(c) {
                    Value::Scalar(s) => Value::Scalar(op.apply(s)),
                    Value::Row(r) => {
                        Value::Row(Cow::Owned(r.iter().map(|&x| op.apply(x)).collect()))
                    }
                    Value::Matrix(Cow::Owned(mut m)) => {
                        m.mapv_inplace(|x| op.apply(x));
                        Value::Matrix(Cow::Owned(m))
                    }
                    Value::Matrix(Cow::Borrowed(m)) => {
                        Value::Matrix(Cow::Owned(m.mapv(|x| op.apply(x))))
                    }
                }
            }
            TwsExpr::Binary(op, l, r) => combine(*op, self.value(l), self.value(r)),
        }
    }
}

fn combine<'a>(op: BinaryOp, left: Value<'a>, right: Value<'a>) -> Value<'a> {
    use Value::*;
    match (left, right) {
        (Scalar(a), Scalar(b)) => Scalar(op.apply(a, b)),
        (Scalar(a), Row(b)) => Row(Cow::Owned(b.iter().map(|&y| op.apply(a, y)).collect())),
        (Row(a), Scalar(b)) => Row(Cow::Owned(a.iter().map(|&x| op.apply(x, b)).collect())),
        (Row(a), Row(b)) => Row(Cow::Owned(
            a.iter()
                .zip(b.iter())
                .map(|(&x, &y)| op.apply(x, y))
                .collect(),
        )),
        (Matrix(a), Scalar(b)) => {
            let mut m = a.into_owned();
            m.mapv_inplace(|x| op.apply(x, b));
            Matrix(Cow::Owned(m))
        }
        (Scalar(a), Matrix(b)) => {
            let mut m = b.into_owned();
            m.mapv_inplace(|y| op.apply(a, y));
            Matrix(Cow::Owned(m))
        }
        (Matrix(a), Row(b)) => {
            let mut m = a.into_owned();
            let row = ArrayView1::from(&b[..]);
            Zip::from(&mut m)
                .and_broadcast(&row)
                .for_each(|x, &y| *x = op.apply(*x, y));
            Matrix(Cow::Owned(m))
        }
        (Row(a), Matrix(b)) => {
            let mut m = b.into_owned();
            let row = ArrayView1::from(&a[..]);
            Zip::from(&mut m)
                .and_broadcast(&row)
                .for_each(|y, &x| *y = op.apply(x, *y));
            Matrix(Cow::Owned(m))
        }
        (Matrix(a), Matrix(b)) => match (a, b) {
            (Cow::Owned(mut a), b) => {
                Zip::from(&mut a)
                    .and(&*b)
                    .for_each(|x, &y| *x = op.apply(*x, y));
                Matrix(Cow::Owned(a))
            }
            (a, Cow::Owned(mut b)) => {
                Zip::from(&mut b)
                    .and(&*a)
                    .for_each(|y, &x| *y = op.apply(x, *y));
                Matrix(Cow::Owned(b))
            }
            (a, b) => {
                let mut out = a.into_owned();
                Zip::from(&mut out)
                    .and(&*b)
                    .for_each(|x, &y| *x = op.apply(*x, y));
                Matrix(Cow::Owned(out))
            }
        },
    }
}

/// Evaluates `expr` over `data` using statistics fitted on the training set.
pub fn eval(expr: &TwsExpr, stats: &TermStats, data: &DocumentSet) -> Result<WeightMatrix> {
    Ok(Evaluator::new(stats, data)?.eval(expr))
}
