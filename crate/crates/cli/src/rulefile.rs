//! JSON rule files: `{"name": str, "rules": [[[x, y], ...], ...]}` with optional
//! expected classification for regression runs.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ubp::family::{corpus, Classification, FamilyError, UpdateFamily};
use ubp::geometry::Site;

#[derive(Debug, thiserror::Error)]
pub enum RuleFileError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Syntax { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: {err}")]
    Invalid { path: String, err: FamilyError },
    #[error("{path}: {err}")]
    Io { path: String, err: std::io::Error },
}

/// Expected classification; absent fields are not checked.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<bool>,
}

impl Expected {
    pub fn of(c: &Classification) -> Expected {
        Expected { kind: Some(c.kind.to_string()), alpha: c.alpha, balanced: c.balanced, drift: c.drift }
    }

    /// Descriptions of every field that disagrees with `c`.
    pub fn mismatches(&self, c: &Classification) -> Vec<String> {
        let mut out = vec![];
        if let Some(k) = &self.kind {
            if *k != c.kind.to_string() {
                out.push(format!("kind: expected {k}, got {}", c.kind));
            }
        }
        if self.alpha.is_some() && self.alpha != c.alpha {
            out.push(format!("alpha: expected {:?}, got {:?}", self.alpha, c.alpha));
        }
        if self.balanced.is_some() && self.balanced != c.balanced {
            out.push(format!("balanced: expected {:?}, got {:?}", self.balanced, c.balanced));
        }
        if self.drift.is_some() && self.drift != c.drift {
            out.push(format!("drift: expected {:?}, got {:?}", self.drift, c.drift));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub name: String,
    pub rules: Vec<Vec<[i64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

impl RuleFile {
    pub fn parse(text: &str, path: &str) -> Result<RuleFile, RuleFileError> {
        serde_json::from_str(text).map_err(|e| RuleFileError::Syntax {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string().split(" at line").next().unwrap_or_default().to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<RuleFile, RuleFileError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|err| RuleFileError::Io { path: p.clone(), err })?;
        RuleFile::parse(&text, &p)
    }

    pub fn from_family(f: &UpdateFamily) -> RuleFile {
        RuleFile {
            name: f.name().to_string(),
            rules: f.rules().iter().map(|r| r.iter().map(|s| [s.x, s.y]).collect()).collect(),
            expected: None,
        }
    }

    pub fn family(&self) -> Result<UpdateFamily, FamilyError> {
        let rules = self.rules.iter().map(|r| r.iter().map(|&[x, y]| Site::new(x, y)).collect()).collect();
        UpdateFamily::new(self.name.clone(), rules)
    }

    /// The canonical text: one rule per line, fields in a fixed order, trailing newline.
    pub fn write(&self) -> String {
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"name\": {},", serde_json::to_string(&self.name).expect("strings serialise"));
        s.push_str("  \"rules\": [");
        for (i, r) in self.rules.iter().enumerate() {
            s.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
            let sites: Vec<String> = r.iter().map(|[x, y]| format!("[{x}, {y}]")).collect();
            s.push_str(&sites.join(", "));
            s.push(']');
        }
        s.push_str(if self.rules.is_empty() { "]" } else { "\n  ]" });
        if let Some(e) = &self.expected {
            let _ = write!(s, ",\n  \"expected\": {}", serde_json::to_string(e).expect("plain struct"));
        }
        s.push_str("\n}\n");
        s
    }
}

/// Reads a family from a rule file, or from the bundled corpus when `spec` is not a
/// file but names a bundled family.
pub fn load(spec: &str) -> Result<(UpdateFamily, Option<Expected>), RuleFileError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(f) = corpus::by_name(spec) {
            return Ok((f, None));
        }
    }
    let rf = RuleFile::read(path)?;
    let f = rf.family().map_err(|err| RuleFileError::Invalid { path: spec.to_string(), err })?;
    Ok((f, rf.expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_carry_positions() {
        let e = RuleFile::parse("{\n  \"name\": \"x\",\n  \"rules\": [[[1, 0]], [[0, 1.5]]]\n}", "t.json").unwrap_err();
        match e {
            RuleFileError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 30)),
            other => panic!("{other}"),
        }
        assert!(RuleFile::parse("{\"name\": \"x\"}", "t.json").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        for f in corpus::all() {
            let rf = RuleFile::from_family(&f);
            let text = rf.write();
            let back = RuleFile::parse(&text, "t").unwrap();
            assert_eq!(back, rf);
            assert_eq!(back.write(), text);
            assert_eq!(back.family().unwrap(), f);
        }
    }
}
