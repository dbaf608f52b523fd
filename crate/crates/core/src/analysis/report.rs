use std::fmt;

use num_complex::Complex64;

use crate::lattice_fourier::io::fmt_g17;

#[derive(Clone, Debug, PartialEq)]
pub enum ReportValue {
    Real(f64),
    Complex(Complex64),
    Count(usize),
    Text(String),
    List(Vec<f64>),
    /// A pass/fail flag together with the datum that decided it.
    Flag { ok: bool, witness: String },
}

impl fmt::Display for ReportValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportValue::Real(v) => f.write_str(&fmt_g17(*v)),
            ReportValue::Complex(c) => write!(f, "{} {}", fmt_g17(c.re), fmt_g17(c.im)),
            ReportValue::Count(n) => write!(f, "{n}"),
            ReportValue::Text(s) => write!(f, "{s:?}"),
            ReportValue::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| fmt_g17(*x)).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            ReportValue::Flag { ok, .. } => write!(f, "{}", if *ok { "pass" } else { "fail" }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportSection {
    name: String,
    entries: Vec<(String, ReportValue)>,
}

impl ReportSection {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[(String, ReportValue)] {
        &self.entries
    }

    /// Inserts or replaces `key`, keeping first-insertion order.
    pub fn put(&mut self, key: impl Into<String>, value: ReportValue) -> &mut Self {
        let key = key.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn real(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.put(key, ReportValue::Real(v))
    }

    pub fn complex(&mut self, key: impl Into<String>, v: Complex64) -> &mut Self {
        self.put(key, ReportValue::Complex(v))
    }

    pub fn count(&mut self, key: impl Into<String>, v: usize) -> &mut Self {
        self.put(key, ReportValue::Count(v))
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.put(key, ReportValue::Text(v.into()))
    }

    pub fn list(&mut self, key: impl Into<String>, v: Vec<f64>) -> &mut Self {
        self.put(key, ReportValue::List(v))
    }

    pub fn flag(&mut self, key: impl Into<String>, ok: bool, witness: impl Into<String>) -> &mut Self {
        self.put(
            key,
            ReportValue::Flag {
                ok,
                witness: witness.into(),
            },
        )
    }

    pub fn get(&self, key: &str) -> Option<&ReportValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

/// Ordered sections of named diagnostic values.
///
/// Renders as `[section]` headers followed by `key = value` lines; flags add a
/// `key.witness` line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsReport {
    sections: Vec<ReportSection>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sections(&self) -> &[ReportSection] {
        &self.sections
    }

    /// The section called `name`, created at the end if absent.
    pub fn section(&mut self, name: &str) -> &mut ReportSection {
        let pos = match self.sections.iter().position(|s| s.name == name) {
            Some(p) => p,
            None => {
                self.sections.push(ReportSection {
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                self.sections.len() - 1
            }
        };
        &mut self.sections[pos]
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&ReportValue> {
        self.sections.iter().find(|s| s.name == section)?.get(key)
    }

    pub fn real(&self, section: &str, key: &str) -> Option<f64> {
        match self.get(section, key)? {
            ReportValue::Real(v) => Some(*v),
            ReportValue::Count(n) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn list(&self, section: &str, key: &str) -> Option<&[f64]> {
        match self.get(section, key)? {
            ReportValue::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn flag(&self, section: &str, key: &str) -> Option<bool> {
        match self.get(section, key)? {
            ReportValue::Flag { ok, .. } => Some(*ok),
            _ => None,
        }
    }

    /// All failed flags as `(section, key, witness)`.
    pub fn failures(&self) -> Vec<(&str, &str, &str)> {
        self.sections
            .iter()
            .flat_map(|s| {
                s.entries.iter().filter_map(move |(k, v)| match v {
                    ReportValue::Flag { ok: false, witness } => Some((s.name.as_str(), k.as_str(), witness.as_str())),
                    _ => None,
                })
            })
            .collect()
    }

    /// Appends the sections of `other`, merging entries of equally named sections.
    pub fn merge(&mut self, other: DiagnosticsReport) {
        for s in other.sections {
            let dst = self.section(&s.name);
            for (k, v) in s.entries {
                dst.put(k, v);
            }
        }
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.name)?;
            for (k, v) in &s.entries {
                writeln!(f, "{k} = {v}")?;
                if let ReportValue::Flag { witness, .. } = v {
                    writeln!(f, "{k}.witness = {witness:?}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_sections_in_order() {
        let mut r = DiagnosticsReport::new();
        r.section("hs").real("norm", 1.0).flag("equal", true, "diff=0");
        r.section("trace").complex("value", Complex64::new(2.5, -1.0)).count("size", 9);
        r.section("hs").real("norm", 2.0);
        let text = r.to_string();
        assert_eq!(
            text,
            "[hs]\nnorm = 2\nequal = pass\nequal.witness = \"diff=0\"\n\n[trace]\nvalue = 2.5 -1\nsize = 9\n"
        );
        assert_eq!(r.real("trace", "size"), Some(9.0));
        assert!(r.failures().is_empty());
        r.section("x").flag("bad", false, "k=[3]");
        assert_eq!(r.failures(), vec![("x", "bad", "k=[3]")]);
    }
}
