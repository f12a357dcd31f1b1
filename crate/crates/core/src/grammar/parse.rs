use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{GrammarSpec, Production, SemExpr, SemTerm, Symbol, SymbolicClass};
use crate::gdd::ReductionStrategy;
use crate::semantics::DomainCatalog;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown operation `{0}`")]
    UnknownOperation(String),
    #[error("term names `{0}`, which is not on the rule's right-hand side")]
    UnboundSymbol(String),
    #[error("unknown semantic domain `{0}`")]
    UnknownDomain(String),
}

fn syntax(line: usize, reason: impl Into<String>) -> SpecError {
    SpecError::Syntax {
        line,
        reason: reason.into(),
    }
}

/// Parse a specification against the built-in domains.
pub fn parse_spec(source: &str) -> Result<GrammarSpec, SpecError> {
    parse_spec_with(source, &DomainCatalog::builtin())
}

/// Parse a specification, resolving its operations in `catalog`.
pub fn parse_spec_with(source: &str, catalog: &DomainCatalog) -> Result<GrammarSpec, SpecError> {
    let lines = logical_lines(source)?;

    let mut domain_name = String::from("arith");
    let mut directives = Vec::new();
    let mut rules = Vec::new();
    let mut classes = Vec::new();

    for (line_no, text) in lines {
        let text = text.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(rest) = text.strip_prefix("TAO-reduction:") {
            directives =
                ReductionStrategy::parse_list(rest).map_err(|reason| syntax(line_no, reason))?;
            continue;
        }
        if let Some(rest) = text.strip_prefix("TAO-domain:") {
            domain_name = rest.trim().to_string();
            continue;
        }
        let tokens = tokenize(text, line_no)?;
        let rule = split_rule(&tokens, line_no)?;
        match &rule.lhs {
            Lhs::Class(name) => classes.push(parse_class(name.clone(), &rule.body, line_no)?),
            Lhs::Var(..) => rules.push(rule),
        }
    }

    let domain = catalog
        .get(&domain_name)
        .ok_or_else(|| SpecError::UnknownDomain(domain_name.clone()))?;

    let variables: BTreeSet<String> = rules
        .iter()
        .filter_map(|r| match &r.lhs {
            Lhs::Var(name, _) => Some(name.clone()),
            Lhs::Class(_) => None,
        })
        .collect();
    let class_map: BTreeMap<&str, &SymbolicClass> =
        classes.iter().map(|c| (c.name.as_str(), c)).collect();

    let mut productions = Vec::new();
    for rule in &rules {
        let Lhs::Var(lhs, star) = &rule.lhs else {
            unreachable!()
        };
        // a star on the head marks the first alternative only
        for (k, alt) in split_alternatives(&rule.body).into_iter().enumerate() {
            let at = alt.iter().position(|t| *t == Tok::At);
            let (rhs_toks, sem_toks) = match at {
                Some(i) => (&alt[..i], Some(&alt[i + 1..])),
                None => (alt, None),
            };
            if rhs_toks.is_empty() {
                return Err(syntax(
                    rule.line,
                    format!("empty right-hand side for {lhs}"),
                ));
            }
            let rhs = rhs_toks
                .iter()
                .map(|t| rhs_symbol(t, &variables, &class_map, rule.line))
                .collect::<Result<Vec<_>, _>>()?;
            let sem = match sem_toks {
                None => None,
                Some([]) => return Err(syntax(rule.line, "missing term after `@@`")),
                Some(toks) => {
                    let mut parser = TermParser {
                        toks,
                        pos: 0,
                        line: rule.line,
                        rhs: &rhs,
                        variables: &variables,
                        mentions: BTreeMap::new(),
                    };
                    let term = parser.term()?;
                    if parser.pos != toks.len() {
                        return Err(syntax(rule.line, "trailing tokens after term"));
                    }
                    check_ops(&term, domain)?;
                    Some(term)
                }
            };
            productions.push(Production {
                lhs: lhs.clone(),
                rhs,
                sem,
                is_default: *star && k == 0,
                ordinal: 0,
            });
        }
    }

    for strategy in &directives {
        if let ReductionStrategy::IndirectRec(vars) = strategy {
            if let Some(bad) = vars.iter().find(|v| !variables.contains(*v)) {
                return Err(SpecError::UnboundSymbol(bad.clone()));
            }
        }
    }

    Ok(GrammarSpec::new(
        productions,
        classes,
        directives,
        domain_name,
    ))
}

fn check_ops(term: &SemTerm, domain: &crate::semantics::Domain) -> Result<(), SpecError> {
    let mut result = Ok(());
    term.walk(&mut |t| {
        if let SemExpr::Apply { op, args } = &t.expr {
            match domain.operation(op) {
                Some(o) if o.arity() == args.len() => {}
                _ if result.is_err() => {}
                _ => result = Err(SpecError::UnknownOperation(op.clone())),
            }
        }
    });
    result
}

/// Join physical lines into logical ones. A line continues while a quote is
/// open or, after `@@`, while a parenthesis is open.
fn logical_lines(source: &str) -> Result<Vec<(usize, String)>, SpecError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start_line = 1;
    let mut line = 1;
    let mut in_quote = false;
    let mut escaped = false;
    let mut after_at = false;
    let mut depth: i32 = 0;
    let mut prev = '\0';

    for c in source.chars() {
        if c == '\n' && !in_quote && depth <= 0 {
            out.push((start_line, std::mem::take(&mut current)));
            line += 1;
            start_line = line;
            after_at = false;
            depth = 0;
            prev = '\0';
            continue;
        }
        if c == '\n' {
            line += 1;
        }
        if in_quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '\'' {
                in_quote = false;
            }
        } else if c == '\'' {
            in_quote = true;
        } else if c == '@' && prev == '@' {
            after_at = true;
        } else if after_at && c == '(' {
            depth += 1;
        } else if after_at && c == ')' {
            depth -= 1;
        }
        prev = c;
        current.push(c);
    }
    if in_quote {
        return Err(syntax(start_line, "unterminated quoted literal"));
    }
    if depth > 0 {
        return Err(syntax(start_line, "unbalanced parenthesis in term"));
    }
    out.push((start_line, current));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Quoted(String),
    Class(String),
    Tag(u32),
    Punct(char),
    Define,
    At,
    Bar,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(line, "unterminated quoted literal")),
                    Some('\'') => break,
                    Some('\\') => {
                        let e = chars
                            .get(i + 1)
                            .ok_or_else(|| syntax(line, "dangling escape"))?;
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => *other,
                        });
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            toks.push(Tok::Quoted(s));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let st = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push(Tok::Ident(chars[st..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let st = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            toks.push(Tok::Number(chars[st..i].iter().collect()));
        } else if c == '$' && chars.get(i + 1) == Some(&'[') {
            let st = i + 2;
            let end = (st..chars.len())
                .find(|&j| chars[j] == ']')
                .ok_or_else(|| syntax(line, "unterminated tag"))?;
            let digits: String = chars[st..end].iter().collect();
            let n = digits
                .parse()
                .map_err(|_| syntax(line, format!("bad tag index `{digits}`")))?;
            toks.push(Tok::Tag(n));
            i = end + 1;
        } else if c == '[' {
            let st = i + 1;
            let end = (st..chars.len()).find(|&j| chars[j] == ']');
            let name: Option<String> = end.map(|e| chars[st..e].iter().collect());
            match (end, name) {
                (Some(e), Some(name)) if is_ident(&name) => {
                    toks.push(Tok::Class(name));
                    i = e + 1;
                }
                _ => {
                    toks.push(Tok::Punct('['));
                    i += 1;
                }
            }
        } else if c == ':' && chars.get(i + 1) == Some(&':') && chars.get(i + 2) == Some(&'=') {
            toks.push(Tok::Define);
            i += 3;
        } else if c == '@' && chars.get(i + 1) == Some(&'@') {
            toks.push(Tok::At);
            i += 2;
        } else if c == '|' {
            toks.push(Tok::Bar);
            i += 1;
        } else {
            toks.push(Tok::Punct(c));
            i += 1;
        }
    }
    Ok(toks)
}

fn is_ident(s: &str) -> bool {
    let mut it = s.chars();
    matches!(it.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && it.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

enum Lhs {
    Var(String, bool),
    Class(String),
}

struct Rule {
    line: usize,
    lhs: Lhs,
    body: Vec<Tok>,
}

fn split_rule(tokens: &[Tok], line: usize) -> Result<Rule, SpecError> {
    let mut toks = tokens;
    // Optional `(n)` rule number.
    if let [Tok::Punct('('), Tok::Number(_), Tok::Punct(')'), rest @ ..] = toks {
        toks = rest;
    }
    let def = toks
        .iter()
        .position(|t| *t == Tok::Define)
        .ok_or_else(|| syntax(line, "expected `::=`"))?;
    let lhs = match &toks[..def] {
        [Tok::Ident(name)] => Lhs::Var(name.clone(), false),
        [Tok::Ident(name), Tok::Punct('*')] => Lhs::Var(name.clone(), true),
        [Tok::Class(name)] => Lhs::Class(name.clone()),
        _ => return Err(syntax(line, "malformed left-hand side")),
    };
    Ok(Rule {
        line,
        lhs,
        body: toks[def + 1..].to_vec(),
    })
}

fn parse_class(name: String, body: &[Tok], line: usize) -> Result<SymbolicClass, SpecError> {
    let text: String = body
        .iter()
        .map(|t| match t {
            Tok::Number(n) => n.clone(),
            Tok::Punct(c) => c.to_string(),
            _ => "?".to_string(),
        })
        .collect();
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| syntax(line, format!("expected `lo .. hi` for [{name}]")))?;
    let parse = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| syntax(line, format!("bad bound `{s}` for [{name}]")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(syntax(line, format!("empty range for [{name}]")));
    }
    Ok(SymbolicClass { name, lo, hi })
}

/// Split a rule body on top-level `|`. A `|` inside a term's parentheses
/// does not split.
fn split_alternatives(body: &[Tok]) -> Vec<&[Tok]> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_sem = false;
    let mut depth = 0;
    for (i, t) in body.iter().enumerate() {
        match t {
            Tok::At => in_sem = true,
            Tok::Punct('(') if in_sem => depth += 1,
            Tok::Punct(')') if in_sem => depth -= 1,
            Tok::Bar if depth == 0 => {
                out.push(&body[start..i]);
                start = i + 1;
                in_sem = false;
            }
            _ => {}
        }
    }
    out.push(&body[start..]);
    out
}

fn rhs_symbol(
    tok: &Tok,
    variables: &BTreeSet<String>,
    classes: &BTreeMap<&str, &SymbolicClass>,
    line: usize,
) -> Result<Symbol, SpecError> {
    Ok(match tok {
        Tok::Ident(name) if variables.contains(name) => Symbol::Variable(name.clone()),
        Tok::Ident(text) | Tok::Number(text) => Symbol::Literal(text.clone()),
        Tok::Quoted(text) if text.is_empty() => {
            return Err(syntax(line, "empty quoted literal"));
        }
        Tok::Quoted(text) => Symbol::Literal(text.clone()),
        Tok::Punct(c) => Symbol::Literal(c.to_string()),
        Tok::Tag(n) => Symbol::TagRef(*n),
        Tok::Class(name) => {
            let class = classes
                .get(name.as_str())
                .ok_or_else(|| SpecError::UnboundSymbol(format!("[{name}]")))?;
            Symbol::Symbolic {
                name: name.clone(),
                lo: class.lo,
                hi: class.hi,
            }
        }
        Tok::Define | Tok::At | Tok::Bar => {
            return Err(syntax(line, "unexpected delimiter on right-hand side"));
        }
    })
}

struct TermParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
    rhs: &'a [Symbol],
    variables: &'a BTreeSet<String>,
    mentions: BTreeMap<String, usize>,
}

impl TermParser<'_> {
    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn term(&mut self) -> Result<SemTerm, SpecError> {
        let mut tag = None;
        if let (Some(Tok::Tag(n)), Some(Tok::Punct(':'))) =
            (self.toks.get(self.pos), self.toks.get(self.pos + 1))
        {
            tag = Some(*n);
            self.pos += 2;
        }
        let line = self.line;
        let expr = match self.next().cloned() {
            Some(Tok::Punct('(')) => {
                let op = match self.next() {
                    Some(Tok::Ident(op)) => op.clone(),
                    _ => return Err(syntax(line, "expected operation name after `(`")),
                };
                let mut args = Vec::new();
                loop {
                    match self.toks.get(self.pos) {
                        Some(Tok::Punct(')')) => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(syntax(line, "unclosed `(` in term")),
                        _ => args.push(self.term()?),
                    }
                }
                SemExpr::Apply { op, args }
            }
            Some(Tok::Ident(name)) if self.variables.contains(&name) => self
                .child(name.clone(), |s| {
                    s.variable().is_some_and(|v| v == name.as_str())
                })?,
            Some(Tok::Class(name)) => {
                let written = format!("[{name}]");
                self.child(
                    written,
                    |s| matches!(s, Symbol::Symbolic { name: n, .. } if *n == name),
                )?
            }
            Some(Tok::Ident(text)) | Some(Tok::Number(text)) => SemExpr::Const {
                text,
                quoted: false,
            },
            Some(Tok::Punct('-')) => match self.next() {
                Some(Tok::Number(n)) => SemExpr::Const {
                    text: format!("-{n}"),
                    quoted: false,
                },
                _ => return Err(syntax(line, "expected number after `-`")),
            },
            Some(Tok::Quoted(text)) => SemExpr::Const { text, quoted: true },
            Some(Tok::Tag(n)) => return Err(SpecError::UnknownOperation(format!("$[{n}]"))),
            Some(other) => return Err(syntax(line, format!("unexpected {other:?} in term"))),
            None => return Err(syntax(line, "incomplete term")),
        };
        Ok(SemTerm { tag, expr })
    }

    /// Resolve the k-th mention of `name` to its k-th rhs occurrence,
    /// clamping to the last occurrence.
    fn child(
        &mut self,
        name: String,
        matches: impl Fn(&Symbol) -> bool,
    ) -> Result<SemExpr, SpecError> {
        let positions: Vec<usize> = self
            .rhs
            .iter()
            .enumerate()
            .filter(|(_, s)| matches(s))
            .map(|(i, _)| i)
            .collect();
        if positions.is_empty() {
            return Err(SpecError::UnboundSymbol(name));
        }
        let k = self.mentions.entry(name.clone()).or_insert(0);
        let index = positions[(*k).min(positions.len() - 1)];
        *k += 1;
        Ok(SemExpr::Child { name, index })
    }
}
