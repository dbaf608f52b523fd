use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::expr::Expr;
use crate::error::{PdzError, Result};

/// Order `mu` and type `(rho, delta)` of a symbol class `S^mu_{rho,delta}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolClassParams {
    pub mu: f64,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClassParams {
    pub fn new(mu: f64, rho: f64, delta: f64) -> Self {
        SymbolClassParams { mu, rho, delta }
    }

    /// `S^mu_{1,0}`.
    pub fn classical(mu: f64) -> Self {
        Self::new(mu, 1.0, 0.0)
    }

    /// Checks `0 <= delta < rho <= 1`.
    pub fn require_calculus_range(&self) -> Result<()> {
        if 0.0 <= self.delta && self.delta < self.rho && self.rho <= 1.0 {
            Ok(())
        } else {
            Err(PdzError::domain(format!(
                "need 0 <= delta < rho <= 1, got rho={}, delta={}",
                self.rho, self.delta
            )))
        }
    }
}

impl Default for SymbolClassParams {
    fn default() -> Self {
        Self::classical(0.0)
    }
}

pub type SymbolFn = dyn Fn(&[i64], &[f64]) -> Complex64 + Send + Sync;
pub type AmplitudeFn = dyn Fn(&[i64], &[i64], &[f64]) -> Complex64 + Send + Sync;

/// A closed-form symbol `sigma(k, x)` with declared class parameters.
#[derive(Clone)]
pub struct SymbolDefinition {
    name: String,
    eval: Arc<SymbolFn>,
    params: SymbolClassParams,
    min_dim: usize,
}

impl fmt::Debug for SymbolDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolDefinition")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

fn check_axis(j: usize) -> Result<usize> {
    if j == 0 {
        Err(PdzError::domain("axis indices start at 1"))
    } else {
        Ok(j)
    }
}

fn character(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

impl SymbolDefinition {
    pub fn new(
        name: impl Into<String>,
        params: SymbolClassParams,
        eval: impl Fn(&[i64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        SymbolDefinition {
            name: name.into(),
            eval: Arc::new(eval),
            params,
            min_dim: 0,
        }
    }

    /// Requires boxes of dimension at least `d` when sampling.
    pub fn with_min_dim(mut self, d: usize) -> Self {
        self.min_dim = d;
        self
    }

    pub fn with_params(mut self, params: SymbolClassParams) -> Self {
        self.params = params;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> SymbolClassParams {
        self.params
    }

    pub fn min_dim(&self) -> usize {
        self.min_dim
    }

    pub fn eval(&self, k: &[i64], x: &[f64]) -> Complex64 {
        (self.eval)(k, x)
    }

    /// `e^{2 pi i x_j}`: the shift `f(k) -> f(k + v_j)`.
    pub fn shift(j: usize) -> Result<Self> {
        let a = check_axis(j)? - 1;
        Ok(Self::new(format!("shift({j})"), SymbolClassParams::classical(0.0), move |_, x| {
            character(x[a])
        })
        .with_min_dim(j))
    }

    /// `e^{2 pi i x_j} - 1`: the forward difference `f(k + v_j) - f(k)`.
    pub fn forward_diff(j: usize) -> Result<Self> {
        let a = check_axis(j)? - 1;
        Ok(Self::new(format!("forward_diff({j})"), SymbolClassParams::classical(0.0), move |_, x| {
            character(x[a]) - 1.0
        })
        .with_min_dim(j))
    }

    /// A Fourier multiplier given by an expression in `x` only.
    pub fn multiplier(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        if e.depends_on_k() {
            return Err(PdzError::Parse(format!("multiplier '{src}' must not depend on k")));
        }
        let d = e.min_dim();
        Ok(Self::new(format!("multiplier({src})"), SymbolClassParams::classical(0.0), move |k, x| {
            e.eval(k, x)
        })
        .with_min_dim(d))
    }

    /// `(1 + |k|)^s`.
    pub fn weight(s: f64) -> Self {
        Self::new(format!("weight({s})"), SymbolClassParams::classical(s), move |k, _| {
            let r = k.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            Complex64::new((1.0 + r).powf(s), 0.0)
        })
    }

    /// `2i sum_j sin(2 pi x_j) + a`.
    pub fn example3(a: Complex64) -> Self {
        Self::new(format!("example3({a})"), SymbolClassParams::classical(0.0), move |_, x| {
            let s: f64 = x.iter().map(|&t| (2.0 * PI * t).sin()).sum();
            Complex64::new(0.0, 2.0 * s) + a
        })
    }

    /// An arbitrary expression in `k_j`, `x_j`, `abs_k`.
    pub fn expression(src: &str, params: SymbolClassParams) -> Result<Self> {
        let e = Expr::parse(src)?;
        let d = e.min_dim();
        Ok(Self::new(src.to_string(), params, move |k, x| e.eval(k, x)).with_min_dim(d))
    }

    /// Parses a builtin call such as `forward_diff(1)` or `example3(1 + 0.5*i)`.
    pub fn builtin(call: &str) -> Result<Self> {
        let call = call.trim();
        let (name, rest) = call
            .split_once('(')
            .ok_or_else(|| PdzError::Parse(format!("builtin '{call}' must have the form name(args)")))?;
        let arg = rest
            .strip_suffix(')')
            .ok_or_else(|| PdzError::Parse(format!("builtin '{call}' is missing ')'")))?
            .trim();
        let int_arg = |s: &str| -> Result<usize> {
            let v = Expr::constant(s)?;
            if v.im != 0.0 || v.re.fract() != 0.0 || v.re < 1.0 {
                return Err(PdzError::Parse(format!("'{s}' is not a positive axis index")));
            }
            Ok(v.re as usize)
        };
        match name.trim() {
            "shift" => Self::shift(int_arg(arg)?),
            "forward_diff" => Self::forward_diff(int_arg(arg)?),
            "multiplier" => Self::multiplier(arg),
            "weight" => {
                let s = Expr::constant(arg)?;
                if s.im != 0.0 {
                    return Err(PdzError::Parse("weight exponent must be real".into()));
                }
                Ok(Self::weight(s.re))
            }
            "example3" => Ok(Self::example3(Expr::constant(arg)?)),
            other => Err(PdzError::Parse(format!("unknown builtin '{other}'"))),
        }
    }
}

/// A closed-form amplitude `a(k, l, x)` of class `A^{mu1,mu2}_{rho,delta}`.
#[derive(Clone)]
pub struct AmplitudeDefinition {
    name: String,
    eval: Arc<AmplitudeFn>,
    pub mu1: f64,
    pub mu2: f64,
    pub rho: f64,
    pub delta: f64,
}

impl fmt::Debug for AmplitudeDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AmplitudeDefinition")
            .field("name", &self.name)
            .field("mu1", &self.mu1)
            .field("mu2", &self.mu2)
            .finish()
    }
}

impl AmplitudeDefinition {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(&[i64], &[i64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        AmplitudeDefinition {
            name: name.into(),
            eval: Arc::new(eval),
            mu1: 0.0,
            mu2: 0.0,
            rho: 1.0,
            delta: 0.0,
        }
    }

    pub fn with_orders(mut self, mu1: f64, mu2: f64, rho: f64, delta: f64) -> Self {
        self.mu1 = mu1;
        self.mu2 = mu2;
        self.rho = rho;
        self.delta = delta;
        self
    }

    /// The amplitude `a(k, l, x) = sigma(k, x)`.
    pub fn from_symbol(def: &SymbolDefinition) -> Self {
        let d = def.clone();
        let p = def.params();
        Self::new(format!("left({})", def.name()), move |k, _, x| d.eval(k, x))
            .with_orders(p.mu, 0.0, p.rho, p.delta)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: &[i64], l: &[i64], x: &[f64]) -> Complex64 {
        (self.eval)(k, l, x)
    }
}
