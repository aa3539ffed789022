//! Scalar expressions with reverse-mode gradients.
//!
//! Grammar (loosest to tightest binding):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' int)?          int := ['-'] digits, optionally in parens
//! primary := number | var | func '(' expr ')' | '(' expr ')'
//! var     := 'x' digits                  (x1, x2, …)
//! func    := exp | log | sin | cos | sqrt
//! ```
//!
//! So `-x1^2` is `-(x1^2)`. Identical subexpressions are stored once.
//!
//! Operation counts: every executed unary/binary/power node is one operation in
//! the forward sweep. The reverse sweep counts each arithmetic operation it
//! performs; nothing is spent on subgraphs that do not depend on a variable,
//! and the first contribution to an adjoint is a store, not an addition.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based variable index (`x1` is 0).
    Var(usize),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
    Powi(NodeId, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(usize),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
    Powi(NodeId, i32),
}

impl From<Node> for Key {
    fn from(n: Node) -> Key {
        match n {
            Node::Const(v) => Key::Const(v.to_bits()),
            Node::Var(i) => Key::Var(i),
            Node::Unary(op, a) => Key::Unary(op, a),
            Node::Binary(op, a, b) => Key::Binary(op, a, b),
            Node::Powi(a, k) => Key::Powi(a, k),
        }
    }
}

/// Hash-consing graph builder.
#[derive(Debug, Default)]
pub struct ExprBuilder {
    nodes: Vec<Node>,
    index: HashMap<Key, NodeId>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, node: Node) -> NodeId {
        let key = Key::from(node);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.index.insert(key, id);
        id
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Node::Const(v))
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        self.push(Node::Var(i))
    }

    pub fn unary(&mut self, op: UnaryOp, a: NodeId) -> NodeId {
        assert!(a < self.nodes.len(), "operand must already exist");
        if let (UnaryOp::Neg, Node::Const(v)) = (op, self.nodes[a]) {
            return self.constant(-v);
        }
        self.push(Node::Unary(op, a))
    }

    pub fn binary(&mut self, op: BinaryOp, a: NodeId, b: NodeId) -> NodeId {
        assert!(a < self.nodes.len() && b < self.nodes.len(), "operands must already exist");
        self.push(Node::Binary(op, a, b))
    }

    pub fn powi(&mut self, a: NodeId, k: i32) -> NodeId {
        assert!(a < self.nodes.len(), "operand must already exist");
        self.push(Node::Powi(a, k))
    }

    /// Keeps the nodes reachable from `output`, renumbered in topological
    /// order. `arity` must cover every variable used.
    pub fn finish(self, output: NodeId, arity: usize) -> Result<ExprGraph> {
        if output >= self.nodes.len() {
            return Err(Error::param("output node does not exist"));
        }
        let mut live = vec![false; self.nodes.len()];
        live[output] = true;
        for i in (0..=output).rev() {
            if !live[i] {
                continue;
            }
            match self.nodes[i] {
                Node::Unary(_, a) | Node::Powi(a, _) => live[a] = true,
                Node::Binary(_, a, b) => {
                    live[a] = true;
                    live[b] = true;
                }
                Node::Var(v) if v >= arity => {
                    return Err(Error::param(format!("variable x{} exceeds arity {arity}", v + 1)));
                }
                _ => {}
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, node) in self.nodes.iter().enumerate().take(output + 1) {
            if !live[i] {
                continue;
            }
            remap[i] = nodes.len();
            nodes.push(match *node {
                Node::Unary(op, a) => Node::Unary(op, remap[a]),
                Node::Binary(op, a, b) => Node::Binary(op, remap[a], remap[b]),
                Node::Powi(a, k) => Node::Powi(remap[a], k),
                leaf => leaf,
            });
        }
        let active = activity(&nodes);
        Ok(ExprGraph {
            output: nodes.len() - 1,
            nodes,
            active,
            arity,
        })
    }
}

fn activity(nodes: &[Node]) -> Vec<bool> {
    let mut active = vec![false; nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        active[i] = match *n {
            Node::Const(_) => false,
            Node::Var(_) => true,
            Node::Unary(_, a) | Node::Powi(a, _) => active[a],
            Node::Binary(_, a, b) => active[a] || active[b],
        };
    }
    active
}

/// Immutable DAG; nodes are in topological order and the output is last.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprGraph {
    nodes: Vec<Node>,
    /// Node depends on at least one variable.
    active: Vec<bool>,
    output: NodeId,
    arity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub value: f64,
    pub op_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Forward plus reverse sweep.
    pub op_count: usize,
}

impl ExprGraph {
    /// Parses with arity equal to the highest variable index used.
    pub fn parse(text: &str) -> Result<ExprGraph> {
        let (builder, out, max_var) = Parser::new(text)?.run()?;
        builder.finish(out, max_var)
    }

    /// Parses with an explicit number of variables.
    pub fn parse_with_arity(text: &str, arity: usize) -> Result<ExprGraph> {
        let (builder, out, max_var) = Parser::new(text)?.run()?;
        if max_var > arity {
            return Err(Error::param(format!(
                "expression uses x{max_var} but arity is {arity}"
            )));
        }
        builder.finish(out, arity)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arity {
            return Err(Error::param(format!(
                "expression takes {} variables, got {}",
                self.arity,
                x.len()
            )));
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, usize)> {
        self.check_input(x)?;
        let mut vals: Vec<f64> = Vec::with_capacity(self.nodes.len());
        let mut ops = 0;
        for (id, node) in self.nodes.iter().enumerate() {
            let fail = |message: &str| Error::Evaluation {
                node: id,
                message: message.to_owned(),
            };
            let v = match *node {
                Node::Const(c) => c,
                Node::Var(i) => x[i],
                Node::Unary(op, a) => {
                    ops += 1;
                    let a = vals[a];
                    match op {
                        UnaryOp::Neg => -a,
                        UnaryOp::Exp => a.exp(),
                        UnaryOp::Log if a <= 0.0 => return Err(fail("log of non-positive value")),
                        UnaryOp::Log => a.ln(),
                        UnaryOp::Sin => a.sin(),
                        UnaryOp::Cos => a.cos(),
                        UnaryOp::Sqrt if a < 0.0 => return Err(fail("sqrt of negative value")),
                        UnaryOp::Sqrt => a.sqrt(),
                    }
                }
                Node::Binary(op, a, b) => {
                    ops += 1;
                    let (a, b) = (vals[a], vals[b]);
                    match op {
                        BinaryOp::Add => a + b,
                        BinaryOp::Sub => a - b,
                        BinaryOp::Mul => a * b,
                        BinaryOp::Div if b == 0.0 => return Err(fail("division by zero")),
                        BinaryOp::Div => a / b,
                    }
                }
                Node::Powi(a, k) => {
                    ops += 1;
                    if k < 0 && vals[a] == 0.0 {
                        return Err(fail("division by zero in negative power"));
                    }
                    vals[a].powi(k)
                }
            };
            if !v.is_finite() {
                return Err(fail("non-finite result"));
            }
            vals.push(v);
        }
        Ok((vals, ops))
    }

    pub fn eval(&self, x: &[f64]) -> Result<EvalReport> {
        let (vals, op_count) = self.forward(x)?;
        Ok(EvalReport {
            value: vals[self.output],
            op_count,
        })
    }

    /// One forward sweep, then adjoints in reverse topological order.
    pub fn grad_reverse(&self, x: &[f64]) -> Result<GradReport> {
        let (vals, mut ops) = self.forward(x)?;
        let mut adj: Vec<Option<f64>> = vec![None; self.nodes.len()];
        let mut gradient = vec![0.0; self.arity];
        if self.active[self.output] {
            adj[self.output] = Some(1.0);
        }

        for id in (0..self.nodes.len()).rev() {
            let Some(bar) = adj[id] else { continue };
            match self.nodes[id] {
                Node::Const(_) => {}
                Node::Var(i) => gradient[i] = bar,
                Node::Unary(op, a) => {
                    let va = vals[a];
                    let (contrib, cost, negate) = match op {
                        UnaryOp::Neg => (bar, 0, true),
                        UnaryOp::Exp => (bar * vals[id], 1, false),
                        UnaryOp::Log => (bar / va, 1, false),
                        UnaryOp::Sin => (bar * va.cos(), 2, false),
                        UnaryOp::Cos => (bar * va.sin(), 2, true),
                        UnaryOp::Sqrt => (0.5 * bar / vals[id], 2, false),
                    };
                    ops += cost + self.accumulate(&mut adj, a, contrib, negate);
                }
                Node::Powi(a, k) => {
                    if k != 0 && self.active[a] {
                        let contrib = bar * k as f64 * vals[a].powi(k - 1);
                        ops += 3 + self.accumulate(&mut adj, a, contrib, false);
                    }
                }
                Node::Binary(op, a, b) => {
                    let (va, vb) = (vals[a], vals[b]);
                    match op {
                        BinaryOp::Add => {
                            ops += self.accumulate(&mut adj, a, bar, false);
                            ops += self.accumulate(&mut adj, b, bar, false);
                        }
                        BinaryOp::Sub => {
                            ops += self.accumulate(&mut adj, a, bar, false);
                            ops += self.accumulate(&mut adj, b, bar, true);
                        }
                        BinaryOp::Mul => {
                            if self.active[a] {
                                ops += 1 + self.accumulate(&mut adj, a, bar * vb, false);
                            }
                            if self.active[b] {
                                ops += 1 + self.accumulate(&mut adj, b, bar * va, false);
                            }
                        }
                        BinaryOp::Div => {
                            // t = bar / b; d/da = t, d/db = -t * (a / b)
                            let t = bar / vb;
                            ops += 1;
                            ops += self.accumulate(&mut adj, a, t, false);
                            if self.active[b] {
                                ops += 1 + self.accumulate(&mut adj, b, t * vals[id], true);
                            }
                        }
                    }
                }
            }
        }
        Ok(GradReport {
            value: vals[self.output],
            gradient,
            op_count: ops,
        })
    }

    /// Adds (or subtracts, with `negate`) `v` into the adjoint of `target`;
    /// returns the operations spent.
    fn accumulate(&self, adj: &mut [Option<f64>], target: NodeId, v: f64, negate: bool) -> usize {
        if !self.active[target] {
            return 0;
        }
        match adj[target] {
            None => {
                adj[target] = Some(if negate { -v } else { v });
                usize::from(negate)
            }
            Some(cur) => {
                adj[target] = Some(if negate { cur - v } else { cur + v });
                1
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.value)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.grad_reverse(x)?.gradient)
    }
}

impl fmt::Display for ExprGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn show(g: &ExprGraph, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match g.nodes[id] {
                Node::Const(c) => write!(f, "({c:?})"),
                Node::Var(i) => write!(f, "x{}", i + 1),
                Node::Unary(UnaryOp::Neg, a) => {
                    f.write_str("(-")?;
                    show(g, a, f)?;
                    f.write_str(")")
                }
                Node::Unary(op, a) => {
                    write!(f, "{}(", format!("{op:?}").to_lowercase())?;
                    show(g, a, f)?;
                    f.write_str(")")
                }
                Node::Binary(op, a, b) => {
                    let sym = match op {
                        BinaryOp::Add => '+',
                        BinaryOp::Sub => '-',
                        BinaryOp::Mul => '*',
                        BinaryOp::Div => '/',
                    };
                    f.write_str("(")?;
                    show(g, a, f)?;
                    write!(f, "{sym}")?;
                    show(g, b, f)?;
                    f.write_str(")")
                }
                Node::Powi(a, k) => {
                    f.write_str("(")?;
                    show(g, a, f)?;
                    write!(f, "^({k}))")
                }
            }
        }
        show(self, self.output, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    builder: ExprBuilder,
    max_var: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
            toks.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(text[start..i].to_owned()), start));
        } else if "+-*/^()".contains(c) {
            toks.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(syntax(i, format!("unexpected character `{c}`")));
        }
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            builder: ExprBuilder::new(),
            max_var: 0,
        })
    }

    fn run(mut self) -> Result<(ExprBuilder, NodeId, usize)> {
        let out = self.expr()?;
        let (tok, off) = self.peek();
        if *tok != Tok::End {
            return Err(syntax(off, "unexpected trailing input"));
        }
        Ok((self.builder, out, self.max_var))
    }

    fn peek(&self) -> (&Tok, usize) {
        let (t, o) = &self.toks[self.pos];
        (t, *o)
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek().0 == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let (tok, off) = self.peek();
        if *tok == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(syntax(off, format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<NodeId> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinaryOp::Add
            } else if self.eat('-') {
                BinaryOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = self.builder.binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<NodeId> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinaryOp::Mul
            } else if self.eat('/') {
                BinaryOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = self.builder.binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<NodeId> {
        if self.eat('-') {
            let a = self.unary()?;
            return Ok(self.builder.unary(UnaryOp::Neg, a));
        }
        self.power()
    }

    fn power(&mut self) -> Result<NodeId> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let k = self.int_exponent()?;
        let (tok, off) = self.peek();
        if *tok == Tok::Sym('^') {
            return Err(syntax(off, "chained `^`; use parentheses"));
        }
        Ok(self.builder.powi(base, k))
    }

    fn int_exponent(&mut self) -> Result<i32> {
        let paren = self.eat('(');
        let neg = self.eat('-');
        let (tok, off) = self.bump();
        let Tok::Num(v) = tok else {
            return Err(syntax(off, "exponent must be an integer constant"));
        };
        if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
            return Err(syntax(off, "exponent must be an integer constant"));
        }
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -(v as i32) } else { v as i32 })
    }

    fn primary(&mut self) -> Result<NodeId> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(self.builder.constant(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek().0 == Tok::Sym('(') {
                    let op = UnaryOp::from_name(&name)
                        .ok_or_else(|| syntax(off, format!("unknown function `{name}`")))?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(self.builder.unary(op, arg));
                }
                let index = name
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i >= 1 && !name[1..].starts_with('0'))
                    .ok_or_else(|| syntax(off, format!("unknown identifier `{name}`")))?;
                self.max_var = self.max_var.max(index);
                Ok(self.builder.var(index - 1))
            }
            Tok::End => Err(syntax(off, "unexpected end of input")),
            Tok::Sym(c) => Err(syntax(off, format!("unexpected `{c}`"))),
        }
    }
}
