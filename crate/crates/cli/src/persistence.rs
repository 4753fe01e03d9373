//! Plain-text solution files.
//!
//! ```text
//! spectral-ball-solution 1
//! name paper-planar-cos
//! map quadratic 9.5e-1
//! basis bubble 2 20
//! offset field <expression>
//! offset spectral plain 2 18 190
//! <190 coefficients>
//! coefficients 231
//! <231 coefficients>
//! end
//! ```
//!
//! Numbers are written in shortest round-trip form, so reading a file back
//! reproduces every coefficient bit for bit.

use std::fmt::Write as _;
use std::sync::Arc;

use spectral_ball::solver::{solution_from_coefficients, SpectralSolution};
use spectral_ball::{BasisKind, BasisSet, Expansion, Site, SolutionOffset};
use thiserror::Error;

use crate::config::MapConfig;
use crate::expr::parse_expression;
use crate::problem::{domain_map, env_of};

const MAGIC: &str = "spectral-ball-solution";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("offset `{0}` cannot be stored")]
    Unstorable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn map_line(map: &MapConfig) -> String {
    match map {
        MapConfig::Identity => "identity".into(),
        MapConfig::Quadratic { a } => format!("quadratic {a:e}"),
        MapConfig::Quadratic3d { a, b } => format!("quadratic3d {a:e} {b:e}"),
        MapConfig::Ellipse { a, b } => format!("ellipse {a:e} {b:e}"),
        MapConfig::Expression { components } => format!("expression {}", components.join(" ; ")),
    }
}

fn kind_name(kind: BasisKind) -> &'static str {
    match kind {
        BasisKind::Plain => "plain",
        BasisKind::Bubble => "bubble",
    }
}

fn push_coefficients(out: &mut String, c: &[f64]) {
    for v in c {
        let _ = writeln!(out, "{v:e}");
    }
}

/// Serializes `solution`; `map` must describe `solution.map`.
pub fn write_solution(
    solution: &SpectralSolution,
    map: &MapConfig,
) -> Result<String, PersistError> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "name {}", solution.problem_descriptor);
    let _ = writeln!(out, "map {}", map_line(map));
    let _ = writeln!(
        out,
        "basis {} {} {}",
        kind_name(solution.kind()),
        solution.dim(),
        solution.degree()
    );
    for offset in &solution.offsets {
        match offset {
            SolutionOffset::Field { descriptor, .. } => {
                parse_expression(descriptor)
                    .map_err(|_| PersistError::Unstorable(descriptor.clone()))?;
                let _ = writeln!(out, "offset field {descriptor}");
            }
            SolutionOffset::Spectral(e) => {
                let _ = writeln!(
                    out,
                    "offset spectral {} {} {} {}",
                    kind_name(e.basis.kind()),
                    e.basis.dim(),
                    e.basis.degree(),
                    e.coefficients.len()
                );
                push_coefficients(&mut out, &e.coefficients);
            }
        }
    }
    let _ = writeln!(out, "coefficients {}", solution.coefficients().len());
    push_coefficients(&mut out, solution.coefficients());
    out.push_str("end\n");
    Ok(out)
}

/// A solution read back from a file.
#[derive(Clone, Debug)]
pub struct StoredSolution {
    pub map: MapConfig,
    pub solution: SpectralSolution,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, PersistError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim_end())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> PersistError {
        PersistError::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn keyword(&mut self, key: &str) -> Result<&'a str, PersistError> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|r| {
                r.strip_prefix(' ')
                    .or(if r.is_empty() { Some("") } else { None })
            })
            .ok_or_else(|| self.err(format!("expected `{key}`")))
    }

    fn numbers<T: std::str::FromStr>(
        &self,
        text: &str,
        count: usize,
    ) -> Result<Vec<T>, PersistError> {
        let v: Vec<T> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| self.err(format!("bad number `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        if v.len() != count {
            return Err(self.err(format!("expected {count} values")));
        }
        Ok(v)
    }

    fn coefficients(&mut self, count: usize) -> Result<Vec<f64>, PersistError> {
        (0..count)
            .map(|_| {
                let l = self.next()?;
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| self.err(format!("bad coefficient `{l}`")))
            })
            .collect()
    }
}

fn parse_kind(s: &str) -> Option<BasisKind> {
    match s {
        "plain" => Some(BasisKind::Plain),
        "bubble" => Some(BasisKind::Bubble),
        _ => None,
    }
}

fn parse_map(lines: &Lines, text: &str) -> Result<MapConfig, PersistError> {
    let (kind, rest) = text.split_once(' ').unwrap_or((text, ""));
    Ok(match kind {
        "identity" => MapConfig::Identity,
        "quadratic" => MapConfig::Quadratic {
            a: lines.numbers(rest, 1)?[0],
        },
        "quadratic3d" => {
            let v = lines.numbers(rest, 2)?;
            MapConfig::Quadratic3d { a: v[0], b: v[1] }
        }
        "ellipse" => {
            let v = lines.numbers(rest, 2)?;
            MapConfig::Ellipse { a: v[0], b: v[1] }
        }
        "expression" => MapConfig::Expression {
            components: rest.split(" ; ").map(|s| s.to_string()).collect(),
        },
        other => return Err(lines.err(format!("unknown map `{other}`"))),
    })
}

pub fn read_solution(text: &str) -> Result<StoredSolution, PersistError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let version = lines.keyword(MAGIC)?;
    if version.trim() != VERSION.to_string() {
        return Err(lines.err(format!("unsupported version `{version}`")));
    }
    let name = lines.keyword("name")?.to_string();
    let map_text = lines.keyword("map")?;
    let map = parse_map(&lines, map_text)?;
    let basis = lines.keyword("basis")?;
    let parts: Vec<&str> = basis.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(lines.err("expected `basis <kind> <dim> <degree>`"));
    }
    let kind = parse_kind(parts[0]).ok_or_else(|| lines.err("unknown basis kind"))?;
    let nums: Vec<usize> = lines.numbers(&parts[1..].join(" "), 2)?;
    let (dim, degree) = (nums[0], nums[1]);
    let domain = domain_map(&map, dim).map_err(|e| lines.err(e.to_string()))?;

    let mut offsets = Vec::new();
    let count = loop {
        let l = lines.next()?;
        if let Some(rest) = l.strip_prefix("offset field ") {
            let e = parse_expression(rest).map_err(|e| lines.err(e.to_string()))?;
            let field: Arc<dyn Fn(&Site) -> f64 + Send + Sync> =
                Arc::new(move |s: &Site| e.eval(&env_of(s, 0.0)));
            offsets.push(SolutionOffset::Field {
                descriptor: rest.to_string(),
                field,
            });
        } else if let Some(rest) = l.strip_prefix("offset spectral ") {
            let p: Vec<&str> = rest.split_whitespace().collect();
            if p.len() != 4 {
                return Err(lines.err("expected `offset spectral <kind> <dim> <degree> <count>`"));
            }
            let k = parse_kind(p[0]).ok_or_else(|| lines.err("unknown basis kind"))?;
            let n: Vec<usize> = lines.numbers(&p[1..].join(" "), 3)?;
            let coef = lines.coefficients(n[2])?;
            let basis = BasisSet::with_kind(n[0], n[1], k).map_err(|e| lines.err(e.to_string()))?;
            let e = Expansion::new(Arc::new(basis), coef).map_err(|e| lines.err(e.to_string()))?;
            offsets.push(SolutionOffset::Spectral(e));
        } else if let Some(rest) = l.strip_prefix("coefficients ") {
            break lines.numbers::<usize>(rest, 1)?[0];
        } else {
            return Err(lines.err(format!("unexpected line `{l}`")));
        }
    };
    let coefficients = lines.coefficients(count)?;
    if lines.next()? != "end" {
        return Err(lines.err("expected `end`"));
    }
    let solution = solution_from_coefficients(domain, kind, degree, coefficients, offsets, name)
        .map_err(|e| lines.err(e.to_string()))?;
    Ok(StoredSolution { map, solution })
}

/// Reads whitespace-separated points, one per line; `#` starts a comment.
pub fn read_points(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, PersistError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let v: Result<Vec<f64>, _> = l
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect();
        match v {
            Ok(v) if v.len() == dim => out.push(v),
            _ => {
                return Err(PersistError::Format {
                    line: i + 1,
                    message: format!("expected {dim} numbers"),
                })
            }
        }
    }
    Ok(out)
}
