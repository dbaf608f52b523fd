//! A small complex-valued expression language over `k_1..k_n`, `x_1..x_n`.
//!
//! Grammar (usual precedence, `^` right-associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('+' | '-') unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names: `i`, `pi`, `e`, `abs_k` (Euclidean `|k|`), `k_j`, `x_j`.
//! Functions: `sin cos tan exp log sqrt abs conj re im`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::error::{PdzError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Conj,
    Re,
    Im,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "conj" => Func::Conj,
            "re" => Func::Re,
            "im" => Func::Im,
            _ => return None,
        })
    }

    fn eval(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Exp => z.exp(),
            Func::Log => z.ln(),
            Func::Sqrt => z.sqrt(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
            Func::Conj => z.conj(),
            Func::Re => Complex64::new(z.re, 0.0),
            Func::Im => Complex64::new(z.im, 0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(Complex64),
    K(usize),
    X(usize),
    AbsK,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

fn pow(b: Complex64, e: Complex64) -> Complex64 {
    if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() < 1e9 {
        return b.powi(e.re as i32);
    }
    if e.im == 0.0 && b.im == 0.0 && b.re >= 0.0 {
        return Complex64::new(b.re.powf(e.re), 0.0);
    }
    b.powc(e)
}

impl Node {
    fn eval(&self, k: &[i64], x: &[f64]) -> Complex64 {
        match self {
            Node::Const(c) => *c,
            Node::K(j) => Complex64::new(k[*j] as f64, 0.0),
            Node::X(j) => Complex64::new(x[*j], 0.0),
            Node::AbsK => {
                let s: i64 = k.iter().map(|c| c * c).sum();
                Complex64::new((s as f64).sqrt(), 0.0)
            }
            Node::Neg(a) => -a.eval(k, x),
            Node::Add(a, b) => a.eval(k, x) + b.eval(k, x),
            Node::Sub(a, b) => a.eval(k, x) - b.eval(k, x),
            Node::Mul(a, b) => a.eval(k, x) * b.eval(k, x),
            Node::Div(a, b) => a.eval(k, x) / b.eval(k, x),
            Node::Pow(a, b) => pow(a.eval(k, x), b.eval(k, x)),
            Node::Call(f, a) => f.eval(a.eval(k, x)),
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        match self {
            Node::Neg(a) | Node::Call(_, a) => a.visit(f),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse()
                .map_err(|_| PdzError::Parse(format!("bad number '{text}' at {start}")))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Name(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(PdzError::Parse(format!("unexpected character '{c}' at {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(usize::MAX, |t| t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(PdzError::Parse(format!("expected '{c}' at {}", self.at())))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.at();
        match self.toks.get(self.pos).map(|t| t.1.clone()) {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Const(Complex64::new(v, 0.0)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if let Some(f) = Func::lookup(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                name_node(&name).ok_or_else(|| PdzError::Parse(format!("unknown name '{name}' at {at}")))
            }
            Some(t) => Err(PdzError::Parse(format!("unexpected token {t:?} at {at}"))),
            None => Err(PdzError::Parse("unexpected end of expression".into())),
        }
    }
}

fn name_node(name: &str) -> Option<Node> {
    match name {
        "i" => return Some(Node::Const(Complex64::new(0.0, 1.0))),
        "pi" => return Some(Node::Const(Complex64::new(PI, 0.0))),
        "e" => return Some(Node::Const(Complex64::new(E, 0.0))),
        "abs_k" => return Some(Node::AbsK),
        _ => {}
    }
    let (var, idx) = name.split_once('_')?;
    let j: usize = idx.parse().ok()?;
    if j == 0 {
        return None;
    }
    match var {
        "k" => Some(Node::K(j - 1)),
        "x" => Some(Node::X(j - 1)),
        _ => None,
    }
}

/// A parsed expression, evaluable at `(k, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
    dim: usize,
    uses_k: bool,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = lex(src)?;
        if toks.is_empty() {
            return Err(PdzError::Parse("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(PdzError::Parse(format!("trailing input at {}", p.at())));
        }
        let mut dim = 0;
        let mut uses_k = false;
        root.visit(&mut |n| match n {
            Node::K(j) => {
                dim = dim.max(j + 1);
                uses_k = true;
            }
            Node::X(j) => dim = dim.max(j + 1),
            Node::AbsK => uses_k = true,
            _ => {}
        });
        Ok(Expr {
            root,
            source: src.to_string(),
            dim,
            uses_k,
        })
    }

    /// Parses an expression without variables and evaluates it.
    pub fn constant(src: &str) -> Result<Complex64> {
        let e = Expr::parse(src)?;
        if e.dim > 0 || e.uses_k {
            return Err(PdzError::Parse(format!("'{src}' must be a constant")));
        }
        Ok(e.eval(&[], &[]))
    }

    pub fn eval(&self, k: &[i64], x: &[f64]) -> Complex64 {
        self.root.eval(k, x)
    }

    /// Smallest dimension covering every `k_j` / `x_j` referenced.
    pub fn min_dim(&self) -> usize {
        self.dim
    }

    pub fn depends_on_k(&self) -> bool {
        self.uses_k
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}
