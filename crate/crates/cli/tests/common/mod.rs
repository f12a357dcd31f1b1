//! Reference evaluators used as oracles by the integration tests.

#![allow(dead_code)]

/// Value of an integer expression over `+ - * /` and parentheses with the
/// usual precedence, left associativity and truncating division. `None`
/// on syntax errors, division by zero or overflow.
pub fn eval(src: &str) -> Option<i64> {
    let toks: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = Rd {
        toks: &toks,
        pos: 0,
    };
    let v = p.expr()?;
    (p.pos == toks.len()).then_some(v)
}

struct Rd<'a> {
    toks: &'a [char],
    pos: usize,
}

impl Rd<'_> {
    fn peek(&self) -> Option<char> {
        self.toks.get(self.pos).copied()
    }

    fn expr(&mut self) -> Option<i64> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' {
                acc.checked_add(rhs)?
            } else {
                acc.checked_sub(rhs)?
            };
        }
        Some(acc)
    }

    fn term(&mut self) -> Option<i64> {
        let mut acc = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if op == '*' {
                acc.checked_mul(rhs)?
            } else {
                acc.checked_div(rhs)?
            };
        }
        Some(acc)
    }

    fn factor(&mut self) -> Option<i64> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let v = self.expr()?;
            if self.peek() != Some(')') {
                return None;
            }
            self.pos += 1;
            return Some(v);
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        self.toks[start..self.pos]
            .iter()
            .collect::<String>()
            .parse()
            .ok()
    }
}

/// Operators of an expression in order, parentheses ignored.
pub fn operators(src: &str) -> String {
    src.chars().filter(|c| "+-*/".contains(*c)).collect()
}

/// Splits `<expr>=<int>` and checks the shape of both sides.
pub fn split_assertion(text: &str) -> Option<(&str, i64)> {
    let (lhs, rhs) = text.rsplit_once('=')?;
    if lhs.is_empty()
        || !lhs
            .chars()
            .all(|c| c.is_ascii_digit() || "+-*/()".contains(c))
    {
        return None;
    }
    Some((lhs, rhs.parse().ok()?))
}

/// Every `a o1 b o2 c` over operands 1..=9 in all three bracketings.
pub fn two_operator_expressions() -> Vec<(String, String)> {
    let ops = ['+', '-', '*', '/'];
    let mut out = Vec::new();
    for o1 in ops {
        for o2 in ops {
            let pattern = format!("{o1}{o2}");
            for a in 1..=9 {
                for b in 1..=9 {
                    for c in 1..=9 {
                        for text in [
                            format!("{a}{o1}{b}{o2}{c}"),
                            format!("({a}{o1}{b}){o2}{c}"),
                            format!("{a}{o1}({b}{o2}{c})"),
                        ] {
                            out.push((pattern.clone(), text));
                        }
                    }
                }
            }
        }
    }
    out
}

/// One parking round read back from a script.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub lot: String,
    /// Minutes from entry to exit; negative when exit comes first.
    pub minutes: i64,
}

/// Rounds of a parking script: `lot`, `entry` and `exit` lines in any
/// order, each group closed by `calc`.
pub fn rounds(script: &str) -> Option<Vec<Round>> {
    let (mut lot, mut entry, mut exit) = (None, None, None);
    let mut out = Vec::new();
    for line in script
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let mut words = line.split_whitespace();
        match words.next()? {
            "lot" => lot = Some(words.next()?.to_string()),
            "entry" => entry = Some(minute_of(words.next()?, &words.collect::<String>())?),
            "exit" => exit = Some(minute_of(words.next()?, &words.collect::<String>())?),
            "calc" => out.push(Round {
                lot: lot.clone()?,
                minutes: exit? - entry?,
            }),
            _ => return None,
        }
    }
    Some(out)
}

/// Minutes since the start of 2014 for `M/D/2014` and `H:MMam`.
fn minute_of(date: &str, time: &str) -> Option<i64> {
    const BEFORE: [i64; 12] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334];
    let mut d = date.split('/');
    let month: usize = d.next()?.parse().ok()?;
    let day: i64 = d.next()?.parse().ok()?;
    if d.next()? != "2014" || !(1..=12).contains(&month) {
        return None;
    }
    let (clock, pm) = match time.strip_suffix("pm") {
        Some(c) => (c, true),
        None => (time.strip_suffix("am")?, false),
    };
    let (h, m) = clock.split_once(':')?;
    let (h, m): (i64, i64) = (h.parse().ok()?, m.parse().ok()?);
    let h24 = h % 12 + if pm { 12 } else { 0 };
    Some(((BEFORE[month - 1] + day - 1) * 24 + h24) * 60 + m)
}
