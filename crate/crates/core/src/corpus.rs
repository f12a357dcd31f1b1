//! Shipped grammars and reference systems under test.
//!
//! The arithmetic SUTs are small calculators, one correct (`M0`) and five
//! with a characteristic evaluation bug. The parking SUT computes fees with
//! its own tick-by-tick loop and can be told to misbehave in six specific
//! ways. Both are plain functions here so tests can run them in-process;
//! the `gramtao-calc` and `gramtao-park` binaries wrap them for the
//! process protocol.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::harness::{CompareMode, SutSpec};
use crate::semantics::{format_cents, LotType, RateTable, HALF_HOUR_MS};

pub const ARITH_SPEC: &str = include_str!("../grammars/arith.tao");
pub const ARITH_ASSERT_SPEC: &str = include_str!("../grammars/arith_assert.tao");
pub const PARKING_SPEC: &str = include_str!("../grammars/parking.tao");

/// Exit status for unreadable input.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for an arithmetic fault (division by zero, overflow).
pub const EXIT_ARITH: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mutant {
    /// Correct: standard precedence, left associative, truncating division.
    M0,
    /// Right associative within each precedence level.
    M1,
    /// Parentheses discarded.
    M2,
    /// No precedence; operators apply right to left.
    M3,
    /// After `-` with a multiplicative right operand, the rest of the
    /// additive chain is folded into that operand.
    M4,
    /// Operator-stack bug: an incoming `+`/`-` does not pop a pending `*`/`/`.
    M5,
}

impl Mutant {
    pub const ALL: [Mutant; 6] = [
        Mutant::M0,
        Mutant::M1,
        Mutant::M2,
        Mutant::M3,
        Mutant::M4,
        Mutant::M5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutant::M0 => "m0",
            Mutant::M1 => "m1",
            Mutant::M2 => "m2",
            Mutant::M3 => "m3",
            Mutant::M4 => "m4",
            Mutant::M5 => "m5",
        }
    }
}

impl fmt::Display for Mutant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mutant::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mutant `{s}` (expected m0..m5)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok {
    Num(i64),
    Op(char),
    Open,
    Close,
}

fn lex(src: &str) -> Option<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '0'..='9' => {
                let mut n: i64 = 0;
                while let Some(d) = chars.peek().and_then(|c| c.to_digit(10)) {
                    n = n.checked_mul(10)?.checked_add(i64::from(d))?;
                    chars.next();
                }
                out.push(Tok::Num(n));
            }
            '+' | '-' | '*' | '/' => {
                out.push(Tok::Op(c));
                chars.next();
            }
            '(' => {
                out.push(Tok::Open);
                chars.next();
            }
            ')' => {
                out.push(Tok::Close);
                chars.next();
            }
            _ => return None,
        }
    }
    Some(out)
}

#[derive(Debug)]
enum Fault {
    Syntax,
    Arith,
}

fn binop(op: char, a: i64, b: i64) -> Result<i64, Fault> {
    match op {
        '+' => a.checked_add(b),
        '-' => a.checked_sub(b),
        '*' => a.checked_mul(b),
        '/' => a.checked_div(b),
        _ => None,
    }
    .ok_or(Fault::Arith)
}

fn is_mul(op: char) -> bool {
    op == '*' || op == '/'
}

struct Calc {
    toks: Vec<Tok>,
    pos: usize,
    mutant: Mutant,
}

impl Calc {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn peek_op(&self, mul: bool) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if is_mul(c) == mul => Some(c),
            _ => None,
        }
    }

    fn primary(&mut self) -> Result<i64, Fault> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(Tok::Close) {
                    return Err(Fault::Syntax);
                }
                self.pos += 1;
                Ok(v)
            }
            _ => Err(Fault::Syntax),
        }
    }

    fn expr(&mut self) -> Result<i64, Fault> {
        match self.mutant {
            Mutant::M0 | Mutant::M2 => self.additive_left(),
            Mutant::M1 => self.additive_right(),
            Mutant::M3 => self.flat_right(),
            Mutant::M4 => self.additive_absorbing(),
            Mutant::M5 => Err(Fault::Syntax),
        }
    }

    /// Track whether the last term contained a multiplicative operator.
    fn term_left(&mut self) -> Result<(i64, bool), Fault> {
        let mut acc = self.primary()?;
        let mut mul = false;
        while let Some(op) = self.peek_op(true) {
            self.pos += 1;
            acc = binop(op, acc, self.primary()?)?;
            mul = true;
        }
        Ok((acc, mul))
    }

    fn additive_left(&mut self) -> Result<i64, Fault> {
        let mut acc = self.term_left()?.0;
        while let Some(op) = self.peek_op(false) {
            self.pos += 1;
            acc = binop(op, acc, self.term_left()?.0)?;
        }
        Ok(acc)
    }

    fn term_right(&mut self) -> Result<i64, Fault> {
        let lhs = self.primary()?;
        match self.peek_op(true) {
            Some(op) => {
                self.pos += 1;
                binop(op, lhs, self.term_right()?)
            }
            None => Ok(lhs),
        }
    }

    fn additive_right(&mut self) -> Result<i64, Fault> {
        let lhs = self.term_right()?;
        match self.peek_op(false) {
            Some(op) => {
                self.pos += 1;
                binop(op, lhs, self.additive_right()?)
            }
            None => Ok(lhs),
        }
    }

    fn flat_right(&mut self) -> Result<i64, Fault> {
        let lhs = self.primary()?;
        match self.peek() {
            Some(Tok::Op(op)) => {
                self.pos += 1;
                binop(op, lhs, self.flat_right()?)
            }
            _ => Ok(lhs),
        }
    }

    fn additive_absorbing(&mut self) -> Result<i64, Fault> {
        let mut acc = self.term_left()?.0;
        while let Some(op) = self.peek_op(false) {
            self.pos += 1;
            let (mut rhs, mul) = self.term_left()?;
            if op == '-' && mul {
                while let Some(next) = self.peek_op(false) {
                    self.pos += 1;
                    rhs = binop(next, rhs, self.term_left()?.0)?;
                }
            }
            acc = binop(op, acc, rhs)?;
        }
        Ok(acc)
    }

    /// Shunting-yard evaluation with the stack-popping bug.
    fn shunting(&mut self) -> Result<i64, Fault> {
        enum Item {
            Op(char),
            Open,
        }
        fn reduce(vals: &mut Vec<i64>, op: char) -> Result<(), Fault> {
            let b = vals.pop().ok_or(Fault::Syntax)?;
            let a = vals.pop().ok_or(Fault::Syntax)?;
            vals.push(binop(op, a, b)?);
            Ok(())
        }
        let mut vals: Vec<i64> = Vec::new();
        let mut ops: Vec<Item> = Vec::new();
        let mut expect_operand = true;
        for tok in self.toks.clone() {
            match (tok, expect_operand) {
                (Tok::Num(n), true) => {
                    vals.push(n);
                    expect_operand = false;
                }
                (Tok::Open, true) => ops.push(Item::Open),
                (Tok::Close, false) => loop {
                    match ops.pop() {
                        Some(Item::Op(op)) => reduce(&mut vals, op)?,
                        Some(Item::Open) => break,
                        None => return Err(Fault::Syntax),
                    }
                },
                (Tok::Op(incoming), false) => {
                    while let Some(Item::Op(top)) = ops.last() {
                        let top = *top;
                        let pops = if is_mul(incoming) {
                            is_mul(top)
                        } else {
                            !is_mul(top)
                        };
                        if !pops {
                            break;
                        }
                        ops.pop();
                        reduce(&mut vals, top)?;
                    }
                    ops.push(Item::Op(incoming));
                    expect_operand = true;
                }
                _ => return Err(Fault::Syntax),
            }
        }
        if expect_operand {
            return Err(Fault::Syntax);
        }
        while let Some(item) = ops.pop() {
            match item {
                Item::Op(op) => reduce(&mut vals, op)?,
                Item::Open => return Err(Fault::Syntax),
            }
        }
        match vals.as_slice() {
            [v] => Ok(*v),
            _ => Err(Fault::Syntax),
        }
    }
}

/// Evaluate one expression as `mutant` would. `Err` carries the exit status.
pub fn run_calc(mutant: Mutant, input: &str) -> Result<String, i32> {
    let mut toks = lex(input).ok_or(EXIT_INPUT)?;
    if mutant == Mutant::M2 {
        toks.retain(|t| !matches!(t, Tok::Open | Tok::Close));
    }
    let mut calc = Calc {
        toks,
        pos: 0,
        mutant,
    };
    let result = if mutant == Mutant::M5 {
        calc.shunting()
    } else {
        calc.expr().and_then(|v| {
            if calc.pos == calc.toks.len() {
                Ok(v)
            } else {
                Err(Fault::Syntax)
            }
        })
    };
    match result {
        Ok(v) => Ok(v.to_string()),
        Err(Fault::Syntax) => Err(EXIT_INPUT),
        Err(Fault::Arith) => Err(EXIT_ARITH),
    }
}

/// Parking faults that can be switched on independently.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaultSet {
    /// Garage, surface and economy lots skip the weekly maximum.
    pub weekly: bool,
    /// Garage, surface and economy lots skip the daily maximum on the last,
    /// partial day of a stay longer than a day.
    pub daily: bool,
    /// Garage, surface and economy lots charge for the absolute duration
    /// when exit precedes entry.
    pub negative: bool,
    /// The short-term lot has no daily maximum.
    pub short_daily: bool,
    /// The short-term lot bills an odd number of half hours as one more.
    pub short_halfhour: bool,
    /// Valet charges for the absolute duration when exit precedes entry.
    pub valet_negative: bool,
}

impl FaultSet {
    pub const NAMES: [&'static str; 6] = [
        "weekly",
        "daily",
        "negative",
        "short-daily",
        "short-halfhour",
        "valet-negative",
    ];

    pub fn all() -> Self {
        FaultSet {
            weekly: true,
            daily: true,
            negative: true,
            short_daily: true,
            short_halfhour: true,
            valet_negative: true,
        }
    }

    pub fn single(name: &str) -> Result<Self, String> {
        let mut f = FaultSet::default();
        f.enable(name)?;
        Ok(f)
    }

    pub fn enable(&mut self, name: &str) -> Result<(), String> {
        let flag = match name {
            "weekly" => &mut self.weekly,
            "daily" => &mut self.daily,
            "negative" => &mut self.negative,
            "short-daily" => &mut self.short_daily,
            "short-halfhour" => &mut self.short_halfhour,
            "valet-negative" => &mut self.valet_negative,
            "all" => {
                *self = FaultSet::all();
                return Ok(());
            }
            _ => return Err(format!("unknown fault `{name}`")),
        };
        *flag = true;
        Ok(())
    }

    /// Parse a comma-separated list; empty means no faults.
    pub fn parse_list(list: &str) -> Result<Self, String> {
        let mut f = FaultSet::default();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            f.enable(name)?;
        }
        Ok(f)
    }
}

fn self_park(lot: LotType) -> bool {
    matches!(lot, LotType::Garage | LotType::Surface | LotType::Economy)
}

/// Fee in cents, accumulated day by day and week by week.
pub fn park_fee(rates: &RateTable, faults: FaultSet, lot: LotType, duration_ms: i64) -> i64 {
    let mut ms = duration_ms;
    if ms <= 0 {
        let abs =
            (faults.negative && self_park(lot)) || (faults.valet_negative && lot == LotType::Valet);
        if !abs {
            return 0;
        }
        ms = ms.saturating_neg();
    }
    let r = rates.rates(lot);
    let mut units = ms / HALF_HOUR_MS + i64::from(ms % HALF_HOUR_MS != 0);
    if faults.short_halfhour && lot == LotType::Short && units % 2 == 1 {
        units += 1;
    }
    let mut total = 0;
    let mut full_days = 0;
    while units > 0 {
        let mut week = 0;
        for _ in 0..7 {
            if units == 0 {
                break;
            }
            let u = units.min(48);
            units -= u;
            let mut day = (u / 2) * r.hour + (u % 2) * r.halfhour;
            let skip_day = (faults.short_daily && lot == LotType::Short)
                || (faults.daily && self_park(lot) && u < 48 && full_days > 0);
            if !skip_day {
                day = day.min(r.daymax);
            }
            if u == 48 {
                full_days += 1;
            }
            week += day;
        }
        if !(faults.weekly && self_park(lot)) {
            week = week.min(r.weekmax);
        }
        total += week;
    }
    total
}

fn parse_instant(date: &str, time: &str) -> Option<NaiveDateTime> {
    let mut d = date.split('/').map(|p| p.parse::<u32>().ok());
    let (mo, day, y) = (d.next()??, d.next()??, d.next()??);
    if d.next().is_some() {
        return None;
    }
    let time = time.to_ascii_lowercase();
    let (clock, pm) = if let Some(c) = time.strip_suffix("pm") {
        (c.trim(), true)
    } else {
        (time.strip_suffix("am")?.trim(), false)
    };
    let (h, m) = clock.split_once(':')?;
    let (h, m) = (h.parse::<u32>().ok()?, m.parse::<u32>().ok()?);
    if !(1..=12).contains(&h) {
        return None;
    }
    let h24 = h % 12 + if pm { 12 } else { 0 };
    NaiveDate::from_ymd_opt(i32::try_from(y).ok()?, mo, day)?.and_hms_opt(h24, m, 0)
}

/// Run a parking script. Prints one fee per `calc`, then all fees on one
/// line when there was more than one.
pub fn run_park(rates: &RateTable, faults: FaultSet, input: &str) -> Result<String, i32> {
    let mut lot = None;
    let mut entry = None;
    let mut exit = None;
    let mut fees = Vec::new();
    let mut out = String::new();
    for line in input.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match cmd {
            "lot" => lot = Some(rest.parse::<LotType>().map_err(|_| EXIT_INPUT)?),
            "entry" | "exit" => {
                let (date, time) = rest.split_once(char::is_whitespace).ok_or(EXIT_INPUT)?;
                let at = parse_instant(date, time.trim()).ok_or(EXIT_INPUT)?;
                if cmd == "entry" {
                    entry = Some(at);
                } else {
                    exit = Some(at);
                }
            }
            "calc" => {
                let (Some(l), Some(a), Some(b)) = (lot, entry, exit) else {
                    return Err(EXIT_INPUT);
                };
                let fee = format_cents(park_fee(rates, faults, l, (b - a).num_milliseconds()));
                out.push_str(&fee);
                out.push('\n');
                fees.push(fee);
            }
            _ => return Err(EXIT_INPUT),
        }
    }
    if fees.len() > 1 {
        out.push_str(&fees.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// A corpus SUT bound to its executable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusSut {
    pub name: String,
    pub sut: SutSpec,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus executable `{0}` not found; build the workspace or set GRAMTAO_CORPUS_DIR")]
    NotFound(String),
}

fn exe_name(stem: &str) -> String {
    format!("{stem}{}", std::env::consts::EXE_SUFFIX)
}

/// Directory holding `gramtao-calc` and `gramtao-park`: `GRAMTAO_CORPUS_DIR`
/// if set, else next to the running executable or one level up (which is
/// where test binaries in `deps/` find them).
pub fn corpus_dir() -> Result<PathBuf, CorpusError> {
    let calc = exe_name("gramtao-calc");
    let mut dirs = Vec::new();
    if let Some(dir) = std::env::var_os("GRAMTAO_CORPUS_DIR") {
        dirs.push(PathBuf::from(dir));
    }
    if let Ok(exe) = std::env::current_exe() {
        if let Some(dir) = exe.parent() {
            dirs.push(dir.to_path_buf());
            if let Some(up) = dir.parent() {
                dirs.push(up.to_path_buf());
            }
        }
    }
    dirs.into_iter()
        .find(|d| d.join(&calc).is_file())
        .ok_or(CorpusError::NotFound(calc))
}

/// The six calculators followed by the correct and all-faults parking SUTs.
pub fn corpus_mutants() -> Result<Vec<CorpusSut>, CorpusError> {
    corpus_in(&corpus_dir()?)
}

pub fn corpus_in(dir: &Path) -> Result<Vec<CorpusSut>, CorpusError> {
    let calc = dir.join(exe_name("gramtao-calc"));
    let park = dir.join(exe_name("gramtao-park"));
    for exe in [&calc, &park] {
        if !exe.is_file() {
            return Err(CorpusError::NotFound(exe.display().to_string()));
        }
    }
    let mut out: Vec<CorpusSut> = Mutant::ALL
        .iter()
        .map(|m| CorpusSut {
            name: m.name().to_string(),
            sut: SutSpec::new(vec![
                calc.display().to_string(),
                "--mutant".into(),
                m.name().into(),
            ]),
        })
        .collect();
    for (name, faults) in [("p0", ""), ("p1", "all")] {
        let mut command = vec![park.display().to_string()];
        if !faults.is_empty() {
            command.extend(["--faults".to_string(), faults.to_string()]);
        }
        out.push(CorpusSut {
            name: name.into(),
            sut: SutSpec {
                compare: CompareMode::Currency,
                ..SutSpec::new(command)
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn calc(m: Mutant, s: &str) -> Result<String, i32> {
        run_calc(m, s)
    }

    #[test]
    fn hand_evaluated_cases() {
        assert_eq!(calc(Mutant::M0, "2*(5-3+4)"), Ok("12".into()));
        assert_eq!(calc(Mutant::M1, "2*(5-3+4)"), Ok("-4".into()));
        assert_eq!(calc(Mutant::M1, "2-3+4"), Ok("-5".into()));
        assert_eq!(calc(Mutant::M1, "2+3*4"), Ok("14".into()));
        assert_eq!(calc(Mutant::M5, "8/4-2"), Ok("4".into()));
        assert_eq!(calc(Mutant::M2, "2*(3+4)"), Ok("10".into()));
        assert_eq!(calc(Mutant::M3, "2*3+4"), Ok("14".into()));
        assert_eq!(calc(Mutant::M4, "9-2*3-1"), Ok("4".into()));
        assert_eq!(calc(Mutant::M0, "7/2"), Ok("3".into()));
        assert_eq!(calc(Mutant::M0, "1/(2-2)"), Err(EXIT_ARITH));
        assert_eq!(calc(Mutant::M0, "1+"), Err(EXIT_INPUT));
        assert_eq!(calc(Mutant::M5, "(1+2"), Err(EXIT_INPUT));
        assert_eq!(calc(Mutant::M0, "x"), Err(EXIT_INPUT));
    }

    /// Independent correct evaluator: fully parenthesize by hand-coded
    /// precedence climbing over a token list, then fold.
    fn reference(a: i64, op1: char, b: i64, op2: char, c: i64, shape: u8) -> Option<i64> {
        let f = |op: char, x: i64, y: i64| match op {
            '+' => Some(x + y),
            '-' => Some(x - y),
            '*' => Some(x * y),
            _ => (y != 0).then(|| x / y),
        };
        let left_first = match shape {
            1 => true,
            2 => false,
            _ => is_mul(op1) || !is_mul(op2),
        };
        if left_first {
            f(op2, f(op1, a, b)?, c)
        } else {
            f(op1, a, f(op2, b, c)?)
        }
    }

    fn render(a: i64, op1: char, b: i64, op2: char, c: i64, shape: u8) -> String {
        match shape {
            1 => format!("({a}{op1}{b}){op2}{c}"),
            2 => format!("{a}{op1}({b}{op2}{c})"),
            _ => format!("{a}{op1}{b}{op2}{c}"),
        }
    }

    /// Two-operator patterns on which `m` disagrees with the reference, over
    /// every operand triple in 1..9 and every parenthesization.
    fn sweep(m: Mutant, shapes: &[u8]) -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        for op1 in ['+', '-', '*', '/'] {
            for op2 in ['+', '-', '*', '/'] {
                for &shape in shapes {
                    for a in 1..=9 {
                        for b in 1..=9 {
                            for c in 1..=9 {
                                let Some(expected) = reference(a, op1, b, op2, c, shape) else {
                                    continue;
                                };
                                let text = render(a, op1, b, op2, c, shape);
                                if calc(m, &text) != Ok(expected.to_string()) {
                                    found.insert(format!("{op1}{op2}"));
                                }
                            }
                        }
                    }
                }
            }
        }
        found
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_operator_sweeps() {
        let all = [0, 1, 2];
        assert!(sweep(Mutant::M0, &all).is_empty());
        assert_eq!(
            sweep(Mutant::M1, &all),
            set(&["-+", "/*", "*/", "//", "--"])
        );
        assert_eq!(
            sweep(Mutant::M3, &all),
            set(&["-+", "--", "*+", "*-", "*/", "/+", "/-", "/*", "//"])
        );
        assert!(sweep(Mutant::M4, &all).is_empty());
        assert_eq!(sweep(Mutant::M5, &all), set(&["/-", "*-", "*+", "/+"]));
    }

    #[test]
    fn parenthesis_mutant_fails_only_where_grouping_matters() {
        assert!(sweep(Mutant::M2, &[0]).is_empty());
        for op1 in ['+', '-', '*', '/'] {
            for op2 in ['+', '-', '*', '/'] {
                for shape in [1, 2] {
                    for (a, b, c) in [(7, 3, 2), (9, 4, 5), (8, 6, 3)] {
                        let Some(expected) = reference(a, op1, b, op2, c, shape) else {
                            continue;
                        };
                        let flat = reference(a, op1, b, op2, c, 0);
                        let text = render(a, op1, b, op2, c, shape);
                        let fails = calc(Mutant::M2, &text) != Ok(expected.to_string());
                        assert_eq!(fails, flat != Some(expected), "{text}");
                    }
                }
            }
        }
    }

    #[test]
    fn absorbing_mutant_three_operator_patterns() {
        let ops = ['+', '-', '*', '/'];
        let mut found = BTreeSet::new();
        for o1 in ops {
            for o2 in ops {
                for o3 in ops {
                    for (a, b, c, d) in [(9, 2, 3, 1), (8, 4, 2, 3), (7, 3, 1, 2), (9, 9, 3, 2)] {
                        let text = format!("{a}{o1}{b}{o2}{c}{o3}{d}");
                        let expected = calc(Mutant::M0, &text);
                        if expected.is_ok() && calc(Mutant::M4, &text) != expected {
                            found.insert(format!("{o1}{o2}{o3}"));
                        }
                    }
                }
            }
        }
        assert_eq!(found, set(&["-*-", "-/-", "-*+", "-/+"]));
    }

    #[test]
    fn parking_fees() {
        let rates = RateTable::default();
        let none = FaultSet::default();
        let h = 2 * HALF_HOUR_MS;
        assert_eq!(
            park_fee(&rates, none, LotType::Short, 25 * HALF_HOUR_MS),
            2400
        );
        assert_eq!(
            park_fee(
                &rates,
                FaultSet::single("short-daily").unwrap(),
                LotType::Short,
                25 * HALF_HOUR_MS
            ),
            2500
        );
        assert_eq!(park_fee(&rates, none, LotType::Short, 24 * h), 2400);
        assert_eq!(park_fee(&rates, none, LotType::Short, 0), 0);
        assert_eq!(park_fee(&rates, none, LotType::Garage, -h), 0);
        assert_eq!(
            park_fee(
                &rates,
                FaultSet::single("negative").unwrap(),
                LotType::Garage,
                -h
            ),
            200
        );
        assert_eq!(
            park_fee(
                &rates,
                FaultSet::single("short-halfhour").unwrap(),
                LotType::Short,
                HALF_HOUR_MS
            ),
            200
        );
        assert_eq!(park_fee(&rates, none, LotType::Garage, 25 * h), 1400);
        // second day of 13h: clamped to 12.00, or billed at 26.00
        assert_eq!(
            park_fee(
                &rates,
                FaultSet::single("daily").unwrap(),
                LotType::Garage,
                37 * h
            ),
            3800
        );
        assert_eq!(park_fee(&rates, none, LotType::Garage, 37 * h), 2400);
        assert_eq!(
            park_fee(&rates, none, LotType::Economy, 10 * 24 * h),
            5400 + 3 * 900
        );
        assert_eq!(
            park_fee(
                &rates,
                FaultSet::single("weekly").unwrap(),
                LotType::Economy,
                7 * 24 * h
            ),
            7 * 900
        );
    }

    #[test]
    fn loop_fee_agrees_with_closed_form() {
        let rates = RateTable::default();
        for lot in LotType::ALL {
            for units in -10..(16 * 48) {
                let ms = units * HALF_HOUR_MS - 7;
                assert_eq!(
                    park_fee(&rates, FaultSet::default(), lot, ms),
                    rates.fee_cents(lot, ms),
                    "{lot} {units}"
                );
            }
        }
    }

    #[test]
    fn parking_script() {
        let rates = RateTable::default();
        let script =
            "lot short\nentry 1/2/2014 8:00 am\nexit 1/2/2014 8:30pm\ncalc\n# expect $24.00\n\
                      lot valet\nexit 1/3/2014 9:00am\nentry 1/3/2014 9:00am\ncalc\n";
        assert_eq!(
            run_park(&rates, FaultSet::default(), script),
            Ok("$24.00\n$0.00\n$24.00 $0.00\n".into())
        );
        assert_eq!(
            run_park(&rates, FaultSet::default(), "calc\n"),
            Err(EXIT_INPUT)
        );
        assert_eq!(
            run_park(&rates, FaultSet::default(), "lot moon\n"),
            Err(EXIT_INPUT)
        );
        assert_eq!(
            run_park(
                &rates,
                FaultSet::default(),
                "lot short\nentry 1/1/2014 12:00am\nexit 1/1/2014 12:00pm\ncalc"
            ),
            Ok("$24.00\n".into())
        );
    }

    #[test]
    fn fault_names() {
        for name in FaultSet::NAMES {
            assert_ne!(FaultSet::single(name).unwrap(), FaultSet::default());
        }
        assert_eq!(FaultSet::parse_list("all").unwrap(), FaultSet::all());
        assert!(FaultSet::parse_list("weekly,nope").is_err());
        assert_eq!(FaultSet::parse_list("").unwrap(), FaultSet::default());
    }
}
