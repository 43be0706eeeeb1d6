//! Text format for instances.
//!
//! A UTF-8 document of whitespace-separated tokens, one record per line.
//! Blank lines and `#` comments are ignored.
//!
//! ```text
//! csp <num_variables>
//! dom <var> <label> <label> ...
//! con <i> <j> allow|forbid <count> <a1> <b1> <a2> <b2> ...
//! ```
//!
//! Every variable gets exactly one `dom` line; its labels are integers,
//! distinct within the line, and value indices are assigned by position.
//! `con` pairs reference labels; `forbid` lists the nogood pairs (all
//! others allowed), `allow` lists the supports. Serialization emits labels
//! equal to the dense indices and picks whichever pair list is shorter, so
//! `parse(serialize(x)) == x` structurally.

use crate::csp::{BinaryConstraint, Instance};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_token<T: std::str::FromStr>(line: usize, pos: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what} (token {pos})")))?;
    tok.parse::<T>()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}` (token {pos})")))
}

/// Parses an instance document. Grammar violations yield
/// [`Error::Parse`] with the offending line; semantically inconsistent
/// documents (unknown labels, out-of-range variables, duplicate pairs)
/// yield [`Error::InvalidInstance`] naming the offender.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut num_variables: Option<usize> = None;
    // per variable: labels in order, and label -> index
    let mut labels: Vec<Option<Vec<i64>>> = Vec::new();
    let mut label_index: Vec<HashMap<i64, usize>> = Vec::new();
    struct RawCon {
        line: usize,
        i: usize,
        j: usize,
        allow: bool,
        pairs: Vec<(i64, i64)>,
    }
    let mut raw_cons: Vec<RawCon> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(head) = toks.next() else { continue };
        match head {
            "csp" => {
                if num_variables.is_some() {
                    return Err(parse_err(line, "duplicate `csp` header"));
                }
                let n: usize = parse_token(line, 1, toks.next(), "variable count")?;
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing tokens after `csp` header"));
                }
                num_variables = Some(n);
                labels = vec![None; n];
                label_index = vec![HashMap::new(); n];
            }
            "dom" => {
                let n = num_variables.ok_or_else(|| parse_err(line, "`dom` before `csp` header"))?;
                let var: usize = parse_token(line, 1, toks.next(), "variable id")?;
                if var >= n {
                    return Err(Error::InvalidInstance(format!(
                        "line {line}: variable {var} out of range (instance has {n})"
                    )));
                }
                if labels[var].is_some() {
                    return Err(parse_err(line, format!("duplicate `dom` line for variable {var}")));
                }
                let mut vals = Vec::new();
                for (pos, tok) in toks.enumerate() {
                    let v: i64 = parse_token(line, pos + 2, Some(tok), "value label")?;
                    if label_index[var].insert(v, vals.len()).is_some() {
                        return Err(parse_err(line, format!("duplicate label {v} for variable {var}")));
                    }
                    vals.push(v);
                }
                if vals.is_empty() {
                    return Err(parse_err(line, format!("variable {var} declared with an empty domain")));
                }
                labels[var] = Some(vals);
            }
            "con" => {
                let n = num_variables.ok_or_else(|| parse_err(line, "`con` before `csp` header"))?;
                let i: usize = parse_token(line, 1, toks.next(), "first variable id")?;
                let j: usize = parse_token(line, 2, toks.next(), "second variable id")?;
                if i >= n || j >= n {
                    return Err(Error::InvalidInstance(format!(
                        "line {line}: constraint ({i}, {j}) references a variable out of range (instance has {n})"
                    )));
                }
                let semantics = toks
                    .next()
                    .ok_or_else(|| parse_err(line, "missing constraint semantics (token 3)"))?;
                let allow = match semantics {
                    "allow" => true,
                    "forbid" => false,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("constraint semantics must be `allow` or `forbid`, got `{other}` (token 3)"),
                        ))
                    }
                };
                let count: usize = parse_token(line, 4, toks.next(), "pair count")?;
                let rest: Vec<&str> = toks.collect();
                if rest.len() != 2 * count {
                    return Err(parse_err(
                        line,
                        format!("expected {} pair tokens, found {}", 2 * count, rest.len()),
                    ));
                }
                let mut pairs = Vec::with_capacity(count);
                for k in 0..count {
                    let a: i64 = parse_token(line, 5 + 2 * k, Some(rest[2 * k]), "pair value")?;
                    let b: i64 = parse_token(line, 6 + 2 * k, Some(rest[2 * k + 1]), "pair value")?;
                    pairs.push((a, b));
                }
                raw_cons.push(RawCon { line, i, j, allow, pairs });
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }

    let n = num_variables.ok_or_else(|| parse_err(1, "missing `csp` header"))?;
    for v in 0..n {
        if labels[v].is_none() {
            return Err(Error::InvalidInstance(format!("variable {v} has no `dom` line")));
        }
    }
    let domain_sizes: Vec<usize> = labels.iter().map(|l| l.as_ref().unwrap().len()).collect();

    let mut constraints = Vec::with_capacity(raw_cons.len());
    for rc in raw_cons {
        let resolve = |var: usize, label: i64| -> Result<usize> {
            label_index[var].get(&label).copied().ok_or_else(|| {
                Error::InvalidInstance(format!(
                    "line {}: value {label} is not in the domain of variable {var}",
                    rc.line
                ))
            })
        };
        let mut pairs = Vec::with_capacity(rc.pairs.len());
        for &(a, b) in &rc.pairs {
            pairs.push((resolve(rc.i, a)?, resolve(rc.j, b)?));
        }
        let (di, dj) = (domain_sizes[rc.i], domain_sizes[rc.j]);
        let c = if rc.allow {
            BinaryConstraint::from_allowed_pairs(rc.i, rc.j, di, dj, &pairs)
        } else {
            BinaryConstraint::from_forbidden_pairs(rc.i, rc.j, di, dj, &pairs)
        };
        constraints.push(c);
    }
    Instance::new(domain_sizes, constraints)
}

/// Serializes an instance. Labels are the dense indices; each constraint is
/// written with whichever of its allow/forbid pair lists is shorter (ties
/// to `forbid`), pairs in row-major order.
pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let n = instance.num_variables();
    writeln!(out, "csp {n}").unwrap();
    for v in 0..n {
        write!(out, "dom {v}").unwrap();
        for val in 0..instance.domain_size(v) {
            write!(out, " {val}").unwrap();
        }
        out.push('\n');
    }
    for c in instance.constraints() {
        let (i, j) = c.scope();
        let (di, dj) = c.dims();
        let mut allowed = Vec::new();
        let mut forbidden = Vec::new();
        for a in 0..di {
            for b in 0..dj {
                if c.allows(a, b) {
                    allowed.push((a, b));
                } else {
                    forbidden.push((a, b));
                }
            }
        }
        let (kind, pairs) = if forbidden.len() <= allowed.len() {
            ("forbid", &forbidden)
        } else {
            ("allow", &allowed)
        };
        write!(out, "con {i} {j} {kind} {}", pairs.len()).unwrap();
        for &(a, b) in pairs {
            write!(out, " {a} {b}").unwrap();
        }
        out.push('\n');
    }
    out
}
