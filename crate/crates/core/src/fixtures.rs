//! Versioned fixture files of coherent-pair parameter points, one per line:
//!
//! ```text
//! # version 1
//! case=IIa z=1/2 omega=3/2 nmax=12 mode=exact
//! case=I b=1/2 z=3/4 nmax=12 mode=approx precision=128
//! ```

use std::path::Path;

use crate::coherence::CaseTag;
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Mode, DEFAULT_PRECISION};
use crate::weights::Params;

pub const FIXTURE_VERSION: u32 = 1;

/// The fixture set shipped with the crate.
pub const DEFAULT_FIXTURES: &str = include_str!("../fixtures/cases.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub line: usize,
    pub case: CaseTag,
    pub params: Params,
    pub nmax: usize,
    pub mode: Mode,
}

pub fn parse_fixtures(text: &str) -> Result<Vec<Fixture>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if let Some(c) = t.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("version") {
                let v: u32 = v.trim().parse().map_err(|_| Error::Fixture { line, msg: format!("bad version `{}`", v.trim()) })?;
                if v != FIXTURE_VERSION {
                    return Err(Error::Fixture { line, msg: format!("unsupported version {v}") });
                }
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        out.push(parse_line(t, line)?);
    }
    Ok(out)
}

fn parse_line(t: &str, line: usize) -> Result<Fixture> {
    let bad = |msg: String| Error::Fixture { line, msg };
    let mut case = None;
    let mut nmax = 12usize;
    let mut mode_name = "exact".to_string();
    let mut precision = None;
    let mut params = Params::new();
    for tok in t.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{tok}`")))?;
        match k {
            "case" => case = Some(v.parse::<CaseTag>().map_err(|e| bad(e.to_string()))?),
            "nmax" => nmax = v.parse().map_err(|_| bad(format!("bad nmax `{v}`")))?,
            "mode" => mode_name = v.to_string(),
            "precision" => precision = Some(v.parse::<u32>().map_err(|_| bad(format!("bad precision `{v}`")))?),
            _ => {
                let q = parse_rational(v).map_err(|e| bad(format!("{k}: {e}")))?;
                if params.insert(k.to_string(), q).is_some() {
                    return Err(bad(format!("parameter `{k}` given twice")));
                }
            }
        }
    }
    let case = case.ok_or_else(|| bad("missing case=".into()))?;
    let mode = match mode_name.as_str() {
        "exact" => Mode::Exact,
        "approx" => Mode::approx(precision.unwrap_or(DEFAULT_PRECISION)).map_err(|e| bad(e.to_string()))?,
        other => return Err(bad(format!("unknown mode `{other}`"))),
    };
    Ok(Fixture { line, case, params, nmax, mode })
}

pub fn load_fixtures(path: &Path) -> Result<Vec<Fixture>> {
    parse_fixtures(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn shipped_fixtures_cover_every_case_twice() {
        let f = parse_fixtures(DEFAULT_FIXTURES).unwrap();
        assert_eq!(f.len(), 10);
        for c in CaseTag::ALL {
            assert_eq!(f.iter().filter(|x| x.case == c).count(), 2, "{c}");
        }
    }

    #[test]
    fn parses_a_line() {
        let f = parse_fixtures("# version 1\ncase=IIa z=1/2 omega=3/2 nmax=12 mode=exact\n").unwrap();
        assert_eq!(f[0].case, CaseTag::IIa);
        assert_eq!(f[0].params["omega"], rat(3, 2));
        assert_eq!(f[0].mode, Mode::Exact);
        assert_eq!(f[0].line, 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_fixtures("# version 2\n"), Err(Error::Fixture { line: 1, .. })));
        assert!(matches!(parse_fixtures("case=V z=1"), Err(Error::Fixture { .. })));
        assert!(matches!(parse_fixtures("case=I b=1/2 z=3/4 mode=approx precision=32"), Err(Error::Fixture { .. })));
        assert!(matches!(parse_fixtures("case=I z=x"), Err(Error::Fixture { .. })));
    }
}
