use std::fmt::{self, Write};

use super::{GrammarSpec, SemExpr, SemTerm, Symbol};

pub(super) fn write_spec(spec: &GrammarSpec, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    writeln!(f, "TAO-domain: {}", spec.domain_name())?;
    if !spec.reduction_directives().is_empty() {
        let items: Vec<String> = spec
            .reduction_directives()
            .iter()
            .map(|s| format!("\"{s}\""))
            .collect();
        writeln!(f, "TAO-reduction: {{{}}}", items.join(", "))?;
    }
    for p in spec.productions() {
        write!(f, "{}{} ::=", p.lhs, if p.is_default { "*" } else { "" })?;
        for sym in &p.rhs {
            f.write_char(' ')?;
            write_symbol(sym, f)?;
        }
        if let Some(sem) = &p.sem {
            f.write_str(" @@ ")?;
            write_term(sem, f)?;
        }
        f.write_char('\n')?;
    }
    for c in spec.symbolic_classes() {
        writeln!(f, "[{}] ::= {} .. {}", c.name, c.lo, c.hi)?;
    }
    Ok(())
}

fn write_quoted(text: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_char('\'')?;
    for c in text.chars() {
        match c {
            '\'' => f.write_str("\\'")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

fn write_symbol(sym: &Symbol, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match sym {
        Symbol::Variable(v) => f.write_str(v),
        Symbol::Literal(text) => write_quoted(text, f),
        Symbol::Symbolic { name, .. } => write!(f, "[{name}]"),
        Symbol::TagRef(n) => write!(f, "$[{n}]"),
    }
}

fn write_term(term: &SemTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if let Some(tag) = term.tag {
        write!(f, "$[{tag}] : ")?;
    }
    match &term.expr {
        SemExpr::Child { name, .. } => f.write_str(name),
        SemExpr::Const { text, quoted: true } => write_quoted(text, f),
        SemExpr::Const {
            text,
            quoted: false,
        } => f.write_str(text),
        SemExpr::Apply { op, args } => {
            write!(f, "({op}")?;
            for arg in args {
                f.write_char(' ')?;
                write_term(arg, f)?;
            }
            f.write_char(')')
        }
    }
}
