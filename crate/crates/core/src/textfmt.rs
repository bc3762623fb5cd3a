//! Line-oriented text format for models and tests (`.nplts` files).
//!
//! ```text
//! nplts fig1a                      # or: test T
//! alphabet a b1 b2
//! # success w                      (tests only, before transitions)
//! trans s1 a { t1:1/2 t2:0.5 }
//! state lonely
//! ```
//!
//! States may be declared implicitly by first use; `state` lines declare
//! isolated states. Probabilities are rationals or finite decimals, stored
//! exactly. Parsing runs full model validation afterwards.

use thiserror::Error;

use crate::model::{Distribution, ModelError, Nplts, StateId};
use crate::rational::{format_rat, parse_rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentKind {
    Model,
    Test,
}

/// A parsed and validated document: the model plus the test success state,
/// if the header declared one.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub kind: DocumentKind,
    pub model: Nplts,
    pub success: Option<StateId>,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected {expected}, found `{found}`")]
    Syntax {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("success state `{0}` has outgoing transitions")]
    SuccessNotTerminal(String),
    #[error("document of kind `test` must declare a success state")]
    MissingSuccess,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-empty, non-comment line with its 1-based number.
    fn next_meaningful(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before,
                None => raw,
            }
            .trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }
}

pub fn parse(text: &str) -> Result<ModelDocument, ParseError> {
    let mut lines = Lines::new(text);

    let (lineno, header) = lines.next_meaningful().ok_or(ParseError::Syntax {
        line: 1,
        expected: "`nplts NAME` or `test NAME` header",
        found: "end of input".to_string(),
    })?;
    let mut parts = header.split_whitespace();
    let kind = match parts.next() {
        Some("nplts") => DocumentKind::Model,
        Some("test") => DocumentKind::Test,
        other => {
            return Err(ParseError::Syntax {
                line: lineno,
                expected: "`nplts` or `test`",
                found: other.unwrap_or("end of line").to_string(),
            })
        }
    };
    let name = parts.next().ok_or(ParseError::Syntax {
        line: lineno,
        expected: "model name",
        found: "end of line".to_string(),
    })?;
    if !is_ident(name) || parts.next().is_some() {
        return Err(ParseError::Malformed {
            line: lineno,
            message: format!("bad header `{header}`"),
        });
    }

    let mut model = Nplts::new(name);

    let (lineno, alpha_line) = lines.next_meaningful().ok_or(ParseError::Syntax {
        line: lineno + 1,
        expected: "`alphabet` line",
        found: "end of input".to_string(),
    })?;
    let mut parts = alpha_line.split_whitespace();
    if parts.next() != Some("alphabet") {
        return Err(ParseError::Syntax {
            line: lineno,
            expected: "`alphabet`",
            found: alpha_line.to_string(),
        });
    }
    let mut count = 0;
    for sym in parts {
        if !is_ident(sym) {
            return Err(ParseError::Malformed {
                line: lineno,
                message: format!("bad action name `{sym}`"),
            });
        }
        model.intern_action(sym);
        count += 1;
    }
    if count == 0 {
        return Err(ParseError::Syntax {
            line: lineno,
            expected: "at least one action",
            found: "end of line".to_string(),
        });
    }

    let mut success_name: Option<String> = None;
    let mut pending: Vec<(usize, String, String, Vec<(String, Rat)>)> = Vec::new();
    let mut declared: Vec<String> = Vec::new();

    while let Some((lineno, line)) = lines.next_meaningful() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("success") => {
                let s = parts.next().ok_or(ParseError::Syntax {
                    line: lineno,
                    expected: "success state name",
                    found: "end of line".to_string(),
                })?;
                if kind != DocumentKind::Test || success_name.is_some() || parts.next().is_some() {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        message: "unexpected `success` line".to_string(),
                    });
                }
                success_name = Some(s.to_string());
            }
            Some("state") => {
                let s = parts.next().ok_or(ParseError::Syntax {
                    line: lineno,
                    expected: "state name",
                    found: "end of line".to_string(),
                })?;
                if !is_ident(s) || parts.next().is_some() {
                    return Err(ParseError::Malformed {
                        line: lineno,
                        message: format!("bad state declaration `{line}`"),
                    });
                }
                declared.push(s.to_string());
            }
            Some("trans") => {
                pending.push(parse_trans(lineno, line)?);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    expected: "`trans`, `state`, or `success`",
                    found: other.unwrap_or("end of line").to_string(),
                });
            }
        }
    }

    // Declaration order: success state first (tests), then explicit `state`
    // lines and transition lines in file order.
    if let Some(ref w) = success_name {
        model.intern_state(w);
    }
    for s in &declared {
        model.intern_state(s);
    }
    for (lineno, source, label, entries) in pending {
        let source = model.intern_state(&source);
        let label = model
            .action_id(&label)
            .ok_or_else(|| ParseError::Model(ModelError::UnknownAction(label.clone())))
            .map_err(|e| match e {
                ParseError::Model(ModelError::UnknownAction(a)) => ParseError::Malformed {
                    line: lineno,
                    message: format!("action `{a}` is not in the alphabet"),
                },
                e => e,
            })?;
        let entries: Vec<(StateId, Rat)> = entries
            .into_iter()
            .map(|(name, p)| (model.intern_state(&name), p))
            .collect();
        model.add_transition(source, label, Distribution::from_entries(entries));
    }

    model.validate()?;

    let success = match (kind, success_name) {
        (DocumentKind::Test, Some(w)) => {
            let id = model.state_id(&w).expect("success state interned");
            if !model.is_terminal(id) {
                return Err(ParseError::SuccessNotTerminal(w));
            }
            Some(id)
        }
        (DocumentKind::Test, None) => return Err(ParseError::MissingSuccess),
        (DocumentKind::Model, _) => None,
    };

    Ok(ModelDocument {
        kind,
        model,
        success,
    })
}

fn parse_trans(
    lineno: usize,
    line: &str,
) -> Result<(usize, String, String, Vec<(String, Rat)>), ParseError> {
    let rest = line.strip_prefix("trans").unwrap().trim();
    let (head, body) = rest.split_once('{').ok_or(ParseError::Syntax {
        line: lineno,
        expected: "`{` opening the distribution",
        found: rest.to_string(),
    })?;
    let body = body.trim_end();
    let body = body.strip_suffix('}').ok_or(ParseError::Syntax {
        line: lineno,
        expected: "`}` closing the distribution",
        found: body.to_string(),
    })?;
    let mut head_parts = head.split_whitespace();
    let source = head_parts.next().ok_or(ParseError::Syntax {
        line: lineno,
        expected: "source state",
        found: "`{`".to_string(),
    })?;
    let label = head_parts.next().ok_or(ParseError::Syntax {
        line: lineno,
        expected: "action label",
        found: "`{`".to_string(),
    })?;
    if !is_ident(source) || !is_ident(label) || head_parts.next().is_some() {
        return Err(ParseError::Malformed {
            line: lineno,
            message: format!("bad transition head `{head}`"),
        });
    }
    let mut entries = Vec::new();
    for item in body.split_whitespace() {
        let (state, prob) = item.split_once(':').ok_or(ParseError::Syntax {
            line: lineno,
            expected: "`state:probability` entry",
            found: item.to_string(),
        })?;
        if !is_ident(state) {
            return Err(ParseError::Malformed {
                line: lineno,
                message: format!("bad state name `{state}`"),
            });
        }
        let p = parse_rat(prob).map_err(|message| ParseError::Malformed {
            line: lineno,
            message,
        })?;
        entries.push((state.to_string(), p));
    }
    if entries.is_empty() {
        return Err(ParseError::Syntax {
            line: lineno,
            expected: "at least one distribution entry",
            found: "`}`".to_string(),
        });
    }
    Ok((lineno, source.to_string(), label.to_string(), entries))
}

/// Canonical form: header, alphabet, success line (tests), then one
/// transition per line in declaration order with lowest-terms rationals.
/// `parse(serialize(d))` is structurally equal to `d`.
pub fn serialize(doc: &ModelDocument) -> String {
    let m = &doc.model;
    let mut out = String::new();
    let kind = match doc.kind {
        DocumentKind::Model => "nplts",
        DocumentKind::Test => "test",
    };
    out.push_str(&format!("{kind} {}\n", m.name));
    let alphabet: Vec<&str> = m.alphabet().map(|a| m.action_name(a)).collect();
    out.push_str(&format!("alphabet {}\n", alphabet.join(" ")));
    if let Some(w) = doc.success {
        out.push_str(&format!("success {}\n", m.state_name(w)));
    }
    let mentioned: std::collections::BTreeSet<StateId> = m
        .transitions()
        .iter()
        .flat_map(|t| std::iter::once(t.source).chain(t.target.support()))
        .chain(doc.success)
        .collect();
    for s in m.states() {
        if !mentioned.contains(&s) {
            out.push_str(&format!("state {}\n", m.state_name(s)));
        }
    }
    for t in m.transitions() {
        let entries: Vec<String> = t
            .target
            .iter()
            .map(|(s, p)| format!("{}:{}", m.state_name(s), format_rat(p)))
            .collect();
        out.push_str(&format!(
            "trans {} {} {{ {} }}\n",
            m.state_name(t.source),
            m.action_name(t.label),
            entries.join(" ")
        ));
    }
    out
}

/// Structural equality used by the round-trip property: same kind, names,
/// declaration orders, transitions, and success marker.
pub fn documents_equal(a: &ModelDocument, b: &ModelDocument) -> bool {
    if a.kind != b.kind || a.model.name != b.model.name {
        return false;
    }
    let (ma, mb) = (&a.model, &b.model);
    if ma.state_count() != mb.state_count() || ma.alphabet_len() != mb.alphabet_len() {
        return false;
    }
    if ma.states().any(|s| ma.state_name(s) != mb.state_name(s)) {
        return false;
    }
    if ma.alphabet().any(|x| ma.action_name(x) != mb.action_name(x)) {
        return false;
    }
    if ma.transitions().len() != mb.transitions().len() {
        return false;
    }
    for (ta, tb) in ma.transitions().iter().zip(mb.transitions()) {
        if ta != tb {
            return false;
        }
    }
    a.success == b.success
}
