//! Records produced by checks, shared by the verification suite and the CLI.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub module: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

impl CheckRecord {
    /// Passes when `|lhs - rhs| <= tol`.
    pub fn compare(module: &str, name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        Self {
            module: module.into(),
            name: name.into(),
            lhs,
            rhs,
            abs_err,
            tol,
            pass: abs_err <= tol,
            notes: String::new(),
        }
    }

    /// A residual that should vanish: `lhs = residual`, `rhs = 0`.
    pub fn residual(module: &str, name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self::compare(module, name, residual, 0.0, tol)
    }

    /// A boolean outcome; `lhs` and `rhs` are 1 or 0.
    pub fn flag(module: &str, name: impl Into<String>, got: bool, want: bool) -> Self {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        Self::compare(module, name, b(got), b(want), 0.0)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes = note.into();
        self
    }

    /// A check that could not be evaluated.
    pub fn error(module: &str, name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            module: module.into(),
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_err: f64::NAN,
            tol: 0.0,
            pass: false,
            notes: format!("error: {err}"),
        }
    }
}

/// Fixed-width table, one row per record.
pub fn summary_table(records: &[CheckRecord]) -> String {
    let mut out = format!("{:<9} {:<52} {:>12} {:>9}  {}\n", "module", "check", "abs_err", "tol", "result");
    for r in records {
        let name = if r.name.chars().count() > 52 { format!("{}...", r.name.chars().take(49).collect::<String>()) } else { r.name.clone() };
        out.push_str(&format!(
            "{:<9} {:<52} {:>12.3e} {:>9.1e}  {}\n",
            r.module,
            name,
            r.abs_err,
            r.tol,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {} failed\n", records.len(), failed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_and_flags() {
        assert!(CheckRecord::compare("m", "a", 1.0, 1.0 + 1e-12, 1e-10).pass);
        assert!(!CheckRecord::residual("m", "b", 1e-3, 1e-6).pass);
        assert!(CheckRecord::flag("m", "c", true, true).pass);
        assert!(!CheckRecord::flag("m", "d", false, true).pass);
        let t = summary_table(&[CheckRecord::residual("m", "x", 0.0, 1.0)]);
        assert!(t.contains("1 checks, 0 failed"));
    }
}
