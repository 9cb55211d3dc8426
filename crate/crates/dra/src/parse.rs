use std::collections::BTreeSet;

use thiserror::Error;

use crate::{Dra, RabinPair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `DRA v2 explicit` header")]
    MissingHeader,
    #[error("missing header field `{0}`")]
    MissingField(&'static str),
    #[error("duplicate header field `{0}`")]
    DuplicateField(String),
    #[error("unexpected line {0:?}")]
    Unexpected(String),
    #[error("expected a number, found {0:?}")]
    BadNumber(String),
    #[error("AP line declares {declared} propositions but lists {listed}")]
    ApCount { declared: usize, listed: usize },
    #[error("too many propositions ({0}); at most 16 are supported")]
    TooManyAps(usize),
    #[error("expected `State: {expected}`, found {found:?}")]
    StateOrder { expected: usize, found: String },
    #[error("state count mismatch: header says {declared}, found {found}")]
    StateCount { declared: usize, found: usize },
    #[error("state {state}: transition table truncated after {got} of {expected} lines")]
    Truncated {
        state: usize,
        got: usize,
        expected: usize,
    },
    #[error("acceptance index {index} out of range (pairs: {pairs})")]
    AccIndex { index: usize, pairs: usize },
    #[error("malformed acceptance signature entry {0:?}")]
    AccSig(String),
    #[error("successor {succ} out of range (states: {states})")]
    Successor { succ: usize, states: usize },
    #[error("start state {start} out of range (states: {states})")]
    Start { start: usize, states: usize },
    #[error("at least one acceptance pair is required")]
    NoPairs,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn number(line: usize, s: &str) -> Result<usize, ParseError> {
    s.trim()
        .parse()
        .map_err(|_| err(line, ParseErrorKind::BadNumber(s.trim().to_string())))
}

/// Splits `"a" "b c"` into its quoted items.
fn quoted(line: usize, s: &str) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('"')
            .ok_or_else(|| err(line, ParseErrorKind::Unexpected(rest.to_string())))?;
        let end = body
            .find('"')
            .ok_or_else(|| err(line, ParseErrorKind::Unexpected(rest.to_string())))?;
        out.push(body[..end].to_string());
        rest = body[end + 1..].trim_start();
    }
    Ok(out)
}

/// Parses an automaton in the ltl2dstar v2 explicit format.
///
/// `+i` in an `Acc-Sig` line puts the state in `I_i`, `-i` in `H_i`. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_dra(text: &str) -> Result<Dra, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    match lines.next() {
        Some((_, "DRA v2 explicit")) => {}
        Some((n, _)) => return Err(err(n, ParseErrorKind::MissingHeader)),
        None => return Err(err(1, ParseErrorKind::MissingHeader)),
    }

    let mut states = None;
    let mut npairs = None;
    let mut start = None;
    let mut ap: Option<Vec<String>> = None;
    let mut comment = None;
    let mut last_line = 1;
    let mut header_end = None;
    for (n, l) in lines.by_ref() {
        last_line = n;
        if l == "---" {
            header_end = Some(n);
            break;
        }
        let (key, value) = l
            .split_once(':')
            .ok_or_else(|| err(n, ParseErrorKind::Unexpected(l.to_string())))?;
        let dup = || err(n, ParseErrorKind::DuplicateField(key.to_string()));
        match key {
            "Comment" => comment = Some(quoted(n, value)?.join(" ")),
            "States" => {
                if states.replace(number(n, value)?).is_some() {
                    return Err(dup());
                }
            }
            "Acceptance-Pairs" => {
                if npairs.replace(number(n, value)?).is_some() {
                    return Err(dup());
                }
            }
            "Start" => {
                if start.replace(number(n, value)?).is_some() {
                    return Err(dup());
                }
            }
            "AP" => {
                let value = value.trim();
                let (count, names) = value.split_once(' ').unwrap_or((value, ""));
                let declared = number(n, count)?;
                let names = quoted(n, names)?;
                if names.len() != declared {
                    return Err(err(
                        n,
                        ParseErrorKind::ApCount {
                            declared,
                            listed: names.len(),
                        },
                    ));
                }
                if declared > 16 {
                    return Err(err(n, ParseErrorKind::TooManyAps(declared)));
                }
                if ap.replace(names).is_some() {
                    return Err(dup());
                }
            }
            _ => return Err(err(n, ParseErrorKind::Unexpected(l.to_string()))),
        }
    }
    let header_end =
        header_end.ok_or_else(|| err(last_line, ParseErrorKind::MissingField("---")))?;
    let states = states.ok_or_else(|| err(header_end, ParseErrorKind::MissingField("States")))?;
    let npairs =
        npairs.ok_or_else(|| err(header_end, ParseErrorKind::MissingField("Acceptance-Pairs")))?;
    let start = start.ok_or_else(|| err(header_end, ParseErrorKind::MissingField("Start")))?;
    let ap = ap.ok_or_else(|| err(header_end, ParseErrorKind::MissingField("AP")))?;
    if npairs == 0 {
        return Err(err(header_end, ParseErrorKind::NoPairs));
    }
    if start >= states {
        return Err(err(header_end, ParseErrorKind::Start { start, states }));
    }

    let letters = 1usize << ap.len();
    let mut pairs = vec![RabinPair::default(); npairs];
    let mut delta: Vec<Vec<usize>> = Vec::with_capacity(states);
    let mut last_line = header_end;
    while let Some((n, l)) = lines.next() {
        let q = delta.len();
        let rest = l.strip_prefix("State:").ok_or_else(|| {
            err(
                n,
                ParseErrorKind::StateOrder {
                    expected: q,
                    found: l.to_string(),
                },
            )
        })?;
        let id_tok = rest.split_whitespace().next().unwrap_or("");
        if id_tok.parse::<usize>().ok() != Some(q) {
            return Err(err(
                n,
                ParseErrorKind::StateOrder {
                    expected: q,
                    found: l.to_string(),
                },
            ));
        }
        if q >= states {
            return Err(err(
                n,
                ParseErrorKind::StateCount {
                    declared: states,
                    found: q + 1,
                },
            ));
        }
        last_line = n;
        if let Some(&(m, sig)) = lines.peek() {
            if let Some(entries) = sig.strip_prefix("Acc-Sig:") {
                lines.next();
                last_line = m;
                for tok in entries.split_whitespace() {
                    let (is_i, idx) = match tok.split_at(1) {
                        ("+", idx) => (true, idx),
                        ("-", idx) => (false, idx),
                        _ => return Err(err(m, ParseErrorKind::AccSig(tok.to_string()))),
                    };
                    let index: usize = idx
                        .parse()
                        .map_err(|_| err(m, ParseErrorKind::AccSig(tok.to_string())))?;
                    if index >= npairs {
                        return Err(err(
                            m,
                            ParseErrorKind::AccIndex {
                                index,
                                pairs: npairs,
                            },
                        ));
                    }
                    let set: &mut BTreeSet<usize> = if is_i {
                        &mut pairs[index].i
                    } else {
                        &mut pairs[index].h
                    };
                    set.insert(q);
                }
            }
        }
        let mut row = Vec::with_capacity(letters);
        while row.len() < letters {
            match lines.peek() {
                Some(&(m, t)) if !t.starts_with("State:") => {
                    lines.next();
                    last_line = m;
                    let succ = number(m, t)?;
                    if succ >= states {
                        return Err(err(m, ParseErrorKind::Successor { succ, states }));
                    }
                    row.push(succ);
                }
                _ => {
                    return Err(err(
                        last_line,
                        ParseErrorKind::Truncated {
                            state: q,
                            got: row.len(),
                            expected: letters,
                        },
                    ))
                }
            }
        }
        delta.push(row);
    }
    if delta.len() != states {
        return Err(err(
            last_line,
            ParseErrorKind::StateCount {
                declared: states,
                found: delta.len(),
            },
        ));
    }
    Ok(Dra {
        ap,
        start,
        delta,
        pairs,
        comment,
    })
}
