use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{PdzError, Result};
use crate::lattice_fourier::io::read_sequence;
use crate::lattice_fourier::{LatticeBox, LatticeSequence};
use crate::symbol::io::read_symbol;
use crate::symbol::{sample, SampledSymbol, SymbolClassParams, SymbolDefinition};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(rename = "box")]
    pub lattice: Option<BoxSpec>,
    #[serde(default)]
    pub symbol: Vec<SymbolSpec>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub apply: Option<ApplySection>,
    pub kernel: Option<KernelSection>,
    pub compose: Option<ComposeSection>,
    pub adjoint: Option<UnarySection>,
    pub transpose: Option<UnarySection>,
    pub parametrix: Option<ParametrixSection>,
    pub solve: Option<SolveSection>,
    pub diagnose: Option<DiagnoseSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    #[serde(default = "one")]
    pub dim: usize,
    pub half_width: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Builtin,
    Expression,
    Csv,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub name: String,
    pub kind: SymbolKind,
    /// Builtin call or expression source.
    pub value: Option<String>,
    /// Sample file for `kind = "csv"`.
    pub path: Option<String>,
    #[serde(default)]
    pub params: ClassSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplySection {
    pub symbol: Option<String>,
    pub input: Option<String>,
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub symbol: Option<String>,
    pub format: Option<String>,
    pub drop_below: Option<f64>,
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSection {
    pub left: Option<String>,
    pub right: Option<String>,
    pub order: Option<usize>,
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnarySection {
    pub symbol: Option<String>,
    pub order: Option<usize>,
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrixSection {
    pub symbol: Option<String>,
    pub mu: Option<f64>,
    pub order: Option<usize>,
    pub m_cut: Option<f64>,
    pub order_step: Option<f64>,
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub symbol: Option<String>,
    pub input: Option<String>,
    pub method: Option<String>,
    pub mu: Option<f64>,
    pub order: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub m_cut: Option<f64>,
    pub output: Option<String>,
    pub report: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    pub symbol: Option<String>,
    pub hs: Option<bool>,
    pub trace: Option<bool>,
    pub schatten: Option<Vec<f64>>,
    pub decay: Option<Vec<usize>>,
    pub decay_mu: Option<f64>,
    pub lp: Option<Vec<f64>>,
    pub tail: Option<Vec<usize>>,
    pub tail_p: Option<f64>,
    pub mikhlin: Option<Vec<usize>>,
    pub fso_phase: Option<String>,
    pub output: Option<String>,
}

enum Source {
    Definition(SymbolDefinition),
    Samples(PathBuf),
}

/// A parsed job: the box, resolved symbol sources and the config directory.
pub struct Job {
    pub config: JobConfig,
    pub bx: LatticeBox,
    base: PathBuf,
    symbols: BTreeMap<String, Source>,
}

fn config_err(msg: impl Into<String>) -> PdzError {
    PdzError::Config(msg.into())
}

impl Job {
    pub fn load(path: &Path, dim: Option<usize>, half_width: Option<usize>) -> Result<Job> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Job::from_str(&text, base, dim, half_width)
    }

    pub fn from_str(text: &str, base: PathBuf, dim: Option<usize>, half_width: Option<usize>) -> Result<Job> {
        let config: JobConfig = toml::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        let dim = dim.or(config.lattice.as_ref().map(|b| b.dim)).unwrap_or(1);
        let half = half_width
            .or(config.lattice.as_ref().map(|b| b.half_width))
            .ok_or_else(|| config_err("box half-width missing: set [box] half_width or --box"))?;
        let bx = LatticeBox::new(dim, half)?;
        let mut symbols = BTreeMap::new();
        for spec in &config.symbol {
            let src = match spec.kind {
                SymbolKind::Csv => {
                    let p = spec
                        .path
                        .as_ref()
                        .ok_or_else(|| config_err(format!("symbol '{}' of kind csv needs a path", spec.name)))?;
                    Source::Samples(base.join(p))
                }
                kind => {
                    let value = spec
                        .value
                        .as_ref()
                        .ok_or_else(|| config_err(format!("symbol '{}' needs a value", spec.name)))?;
                    let def = if kind == SymbolKind::Builtin {
                        SymbolDefinition::builtin(value)?
                    } else {
                        SymbolDefinition::expression(value, SymbolClassParams::classical(0.0))?
                    };
                    let d = def.params();
                    let c = spec.params;
                    let params = SymbolClassParams::new(
                        c.mu.unwrap_or(d.mu),
                        c.rho.unwrap_or(d.rho),
                        c.delta.unwrap_or(d.delta),
                    );
                    Source::Definition(def.with_params(params))
                }
            };
            if symbols.insert(spec.name.clone(), src).is_some() {
                return Err(config_err(format!("symbol '{}' defined twice", spec.name)));
            }
        }
        Ok(Job {
            config,
            bx,
            base,
            symbols,
        })
    }

    /// `explicit`, else the only defined symbol.
    pub fn symbol_name(&self, explicit: Option<String>, what: &str) -> Result<String> {
        match explicit {
            Some(n) => Ok(n),
            None if self.symbols.len() == 1 => Ok(self.symbols.keys().next().expect("one symbol").clone()),
            None => Err(config_err(format!("missing {what} symbol"))),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }

    fn source(&self, name: &str) -> Result<&Source> {
        self.symbols
            .get(name)
            .ok_or_else(|| config_err(format!("unknown symbol '{name}'")))
    }

    pub fn definition(&self, name: &str) -> Result<&SymbolDefinition> {
        match self.source(name)? {
            Source::Definition(d) => Ok(d),
            Source::Samples(_) => Err(config_err(format!("symbol '{name}' is sampled from a file, not a definition"))),
        }
    }

    /// Declared order `mu` of a symbol (0 for sampled symbols).
    pub fn declared_mu(&self, name: &str) -> Result<f64> {
        Ok(match self.source(name)? {
            Source::Definition(d) => d.params().mu,
            Source::Samples(_) => 0.0,
        })
    }

    pub fn sampled(&self, name: &str) -> Result<SampledSymbol> {
        match self.source(name)? {
            Source::Definition(d) => {
                if d.min_dim() > self.bx.dim() {
                    return Err(config_err(format!(
                        "symbol '{name}' needs dimension >= {}, box has {}",
                        d.min_dim(),
                        self.bx.dim()
                    )));
                }
                sample(d, &self.bx, &self.bx.torus())
            }
            Source::Samples(p) => {
                let f = File::open(p).map_err(|e| config_err(format!("cannot open {}: {e}", p.display())))?;
                read_symbol(self.bx, BufReader::new(f))
            }
        }
    }

    pub fn sequence(&self, rel: &str) -> Result<LatticeSequence> {
        let p = self.path(rel);
        let f = File::open(&p).map_err(|e| config_err(format!("cannot open {}: {e}", p.display())))?;
        read_sequence(self.bx, BufReader::new(f))
    }
}
