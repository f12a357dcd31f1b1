//! Airport parking-fee domain.
//!
//! Times and dates travel as text (`h/m/00`, `mo/d/y`), instants and
//! durations as milliseconds from [`EPOCH`] on a fixed proleptic Gregorian
//! calendar without time zones. Fees are computed in whole cents.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use thiserror::Error;

use super::{Domain, EvalError, SemValue};

/// Midnight, 1 January 2014.
pub const EPOCH: NaiveDateTime = match NaiveDate::from_ymd_opt(2014, 1, 1) {
    Some(d) => d.and_time(NaiveTime::MIN),
    None => panic!("epoch"),
};

pub const HALF_HOUR_MS: i64 = 30 * 60 * 1000;
const UNITS_PER_DAY: i64 = 48;
const UNITS_PER_WEEK: i64 = 7 * UNITS_PER_DAY;

const DEFAULT_RATES: &str = include_str!("../../grammars/rates.conf");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LotType {
    Short,
    Economy,
    Surface,
    Valet,
    Garage,
}

impl LotType {
    pub const ALL: [LotType; 5] = [
        LotType::Short,
        LotType::Economy,
        LotType::Surface,
        LotType::Valet,
        LotType::Garage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LotType::Short => "short",
            LotType::Economy => "economy",
            LotType::Surface => "surface",
            LotType::Valet => "valet",
            LotType::Garage => "garage",
        }
    }
}

impl fmt::Display for LotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LotType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        LotType::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown lot type `{s}`"))
    }
}

/// Prices for one lot, in cents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rates {
    pub halfhour: i64,
    pub hour: i64,
    pub daymax: i64,
    pub weekmax: i64,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("line {0}: expected `<lot>.<field> = <dollars>`")]
    Malformed(usize),
    #[error("line {line}: {reason}")]
    Bad { line: usize, reason: String },
    #[error("missing rate `{0}`")]
    Missing(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateTable {
    lots: BTreeMap<LotType, Rates>,
}

impl Default for RateTable {
    fn default() -> Self {
        RateTable::parse(DEFAULT_RATES).expect("shipped rate table parses")
    }
}

impl RateTable {
    /// Parse `key = value` lines with keys `<lot>.halfhour`, `<lot>.hour`,
    /// `<lot>.daymax`, `<lot>.weekmax` and decimal dollar values.
    pub fn parse(text: &str) -> Result<Self, RateError> {
        let mut raw: BTreeMap<(LotType, String), i64> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or(RateError::Malformed(line_no))?;
            let (lot, field) = key
                .trim()
                .split_once('.')
                .ok_or(RateError::Malformed(line_no))?;
            let lot: LotType = lot.parse().map_err(|reason| RateError::Bad {
                line: line_no,
                reason,
            })?;
            let field = field.trim();
            if !["halfhour", "hour", "daymax", "weekmax"].contains(&field) {
                return Err(RateError::Bad {
                    line: line_no,
                    reason: format!("unknown field `{field}`"),
                });
            }
            let cents = parse_cents(value.trim()).ok_or_else(|| RateError::Bad {
                line: line_no,
                reason: format!("bad amount `{}`", value.trim()),
            })?;
            raw.insert((lot, field.to_string()), cents);
        }
        let mut lots = BTreeMap::new();
        for lot in LotType::ALL {
            let get = |f: &str| {
                raw.get(&(lot, f.to_string()))
                    .copied()
                    .ok_or_else(|| RateError::Missing(format!("{lot}.{f}")))
            };
            lots.insert(
                lot,
                Rates {
                    halfhour: get("halfhour")?,
                    hour: get("hour")?,
                    daymax: get("daymax")?,
                    weekmax: get("weekmax")?,
                },
            );
        }
        Ok(RateTable { lots })
    }

    pub fn rates(&self, lot: LotType) -> Rates {
        self.lots[&lot]
    }

    /// Total fee in cents for a stay of `duration_ms`. Non-positive stays
    /// are free; otherwise the stay is rounded up to half hours, whole hours
    /// charge the hourly rate and a leftover half hour the half-hour rate,
    /// each 24-hour block is capped at the daily maximum and each 7-day
    /// block at the weekly maximum.
    pub fn fee_cents(&self, lot: LotType, duration_ms: i64) -> i64 {
        if duration_ms <= 0 {
            return 0;
        }
        let r = self.rates(lot);
        let units = (duration_ms + HALF_HOUR_MS - 1) / HALF_HOUR_MS;
        let day = |u: i64| ((u / 2) * r.hour + (u % 2) * r.halfhour).min(r.daymax);
        let week = |u: i64| {
            ((u / UNITS_PER_DAY) * day(UNITS_PER_DAY) + day(u % UNITS_PER_DAY)).min(r.weekmax)
        };
        (units / UNITS_PER_WEEK) * week(UNITS_PER_WEEK) + week(units % UNITS_PER_WEEK)
    }
}

fn parse_cents(s: &str) -> Option<i64> {
    let s = s.strip_prefix('$').unwrap_or(s);
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 2 || whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let frac = format!("{frac:0<2}");
    Some(whole.parse::<i64>().ok()? * 100 + frac.parse::<i64>().ok()?)
}

/// `$D.DD` for an amount in cents.
pub fn format_cents(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    format!("{sign}${}.{:02}", cents.abs() / 100, cents.abs() % 100)
}

fn int_arg(op: &str, v: &SemValue) -> Result<i64, EvalError> {
    match v {
        SemValue::Int(i) => Ok(*i),
        other => Err(EvalError::op(
            op,
            format!("expected int, got {}", other.kind()),
        )),
    }
}

fn text_arg<'a>(op: &str, v: &'a SemValue) -> Result<&'a str, EvalError> {
    match v {
        SemValue::Text(s) => Ok(s),
        other => Err(EvalError::op(
            op,
            format!("expected text, got {}", other.kind()),
        )),
    }
}

fn wide_arg(op: &str, v: &SemValue) -> Result<i64, EvalError> {
    match v {
        SemValue::Wide(i) | SemValue::Int(i) => Ok(*i),
        other => Err(EvalError::op(
            op,
            format!("expected duration, got {}", other.kind()),
        )),
    }
}

/// Split `a/b/c` into three integers.
fn triple(op: &str, s: &str) -> Result<(i64, i64, i64), EvalError> {
    let parts: Vec<&str> = s.split('/').collect();
    let parse = |p: &str| {
        p.parse::<i64>()
            .map_err(|_| EvalError::op(op, format!("malformed `{s}`")))
    };
    match parts.as_slice() {
        [a, b, c] => Ok((parse(a)?, parse(b)?, parse(c)?)),
        _ => Err(EvalError::op(op, format!("malformed `{s}`"))),
    }
}

fn time(args: &[SemValue]) -> Result<SemValue, EvalError> {
    let h = int_arg("time", &args[0])?;
    let m = int_arg("time", &args[1])?;
    if !(1..=12).contains(&h) {
        return Err(EvalError::op("time", format!("hour {h} outside 1..12")));
    }
    if !(0..=59).contains(&m) {
        return Err(EvalError::op("time", format!("minute {m} outside 0..59")));
    }
    Ok(SemValue::Text(format!("{h}/{m}/00")))
}

fn time24(args: &[SemValue]) -> Result<SemValue, EvalError> {
    let pm = match &args[0] {
        SemValue::Bool(b) => *b,
        other => {
            return Err(EvalError::op(
                "time24Fmt",
                format!("expected bool, got {}", other.kind()),
            ))
        }
    };
    let (h, m, _) = triple("time24Fmt", text_arg("time24Fmt", &args[1])?)?;
    if !(1..=12).contains(&h) {
        return Err(EvalError::op(
            "time24Fmt",
            format!("hour {h} outside 1..12"),
        ));
    }
    let h24 = h % 12 + if pm { 12 } else { 0 };
    Ok(SemValue::Text(format!("{h24}/{m}/00")))
}

fn date(args: &[SemValue]) -> Result<SemValue, EvalError> {
    let mo = int_arg("date", &args[0])?;
    let d = int_arg("date", &args[1])?;
    let y = int_arg("date", &args[2])?;
    if !(1..=12).contains(&mo) {
        return Err(EvalError::op("date", format!("month {mo} outside 1..12")));
    }
    let valid = i32::try_from(y)
        .ok()
        .and_then(|y| NaiveDate::from_ymd_opt(y, mo as u32, u32::try_from(d).ok()?));
    if valid.is_none() {
        return Err(EvalError::op("date", format!("no day {d} in {mo}/{y}")));
    }
    Ok(SemValue::Text(format!("{mo}/{d}/{y}")))
}

fn simple_fmt(args: &[SemValue]) -> Result<SemValue, EvalError> {
    let (h, mi, s) = triple("simpleFmt", text_arg("simpleFmt", &args[0])?)?;
    let (mo, d, y) = triple("simpleFmt", text_arg("simpleFmt", &args[1])?)?;
    let at = i32::try_from(y)
        .ok()
        .and_then(|y| NaiveDate::from_ymd_opt(y, u32::try_from(mo).ok()?, u32::try_from(d).ok()?))
        .and_then(|date| {
            date.and_hms_opt(
                u32::try_from(h).ok()?,
                u32::try_from(mi).ok()?,
                u32::try_from(s).ok()?,
            )
        })
        .ok_or_else(|| EvalError::op("simpleFmt", "invalid date or time"))?;
    Ok(SemValue::Wide((at - EPOCH).num_milliseconds()))
}

/// Parking operations: `time`, `time24Fmt`, `date`, `simpleFmt`, `sfSub`,
/// `price`, plus `money` (price as `$D.DD` text) and `cat` (space-joined
/// text) for assembling multi-round expectations.
pub fn builtin_domain_parking(rates: RateTable) -> Domain {
    let mut d = Domain::new("parking");
    d.register("time", 2, time);
    d.register("time24Fmt", 2, time24);
    d.register("date", 3, date);
    d.register("simpleFmt", 2, simple_fmt);
    d.register("sfSub", 2, |args| {
        let exit = wide_arg("sfSub", &args[0])?;
        let entry = wide_arg("sfSub", &args[1])?;
        exit.checked_sub(entry)
            .map(SemValue::Wide)
            .ok_or_else(|| EvalError::op("sfSub", "overflow"))
    });
    d.register("price", 2, move |args| {
        let lot: LotType = text_arg("price", &args[0])?
            .parse()
            .map_err(|e| EvalError::op("price", e))?;
        let duration = wide_arg("price", &args[1])?;
        Ok(SemValue::Real(
            rates.fee_cents(lot, duration) as f64 / 100.0,
        ))
    });
    d.register("money", 1, |args| match &args[0] {
        SemValue::Real(r) => Ok(SemValue::Text(format_cents((r * 100.0).round() as i64))),
        other => Err(EvalError::op(
            "money",
            format!("expected real, got {}", other.kind()),
        )),
    });
    d.register("cat", 2, |args| {
        Ok(SemValue::Text(format!("{} {}", args[0], args[1])))
    });
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOUR: i64 = 2 * HALF_HOUR_MS;
    const DAY: i64 = 24 * HOUR;

    /// Independent fee model: walk the stay one half-hour tick at a time,
    /// accumulating per-day and per-week subtotals with their caps.
    fn tick_fee(r: Rates, duration_ms: i64) -> i64 {
        if duration_ms <= 0 {
            return 0;
        }
        let ticks = (duration_ms + HALF_HOUR_MS - 1) / HALF_HOUR_MS;
        let (mut total, mut week, mut day) = (0, 0, 0);
        for t in 0..ticks {
            let in_day = t % 48;
            // first half of an hour costs the half-hour rate, completing it
            // raises the charge to the hourly rate
            day += if in_day % 2 == 0 {
                r.halfhour
            } else {
                r.hour - r.halfhour
            };
            let day_done = in_day == 47 || t == ticks - 1;
            if day_done {
                week += day.min(r.daymax);
                day = 0;
                let week_done = t % 336 == 335 || t == ticks - 1;
                if week_done {
                    total += week.min(r.weekmax);
                    week = 0;
                }
            }
        }
        total
    }

    #[test]
    fn short_term_daily_maximum() {
        let rates = RateTable::default();
        assert_eq!(rates.rates(LotType::Short).daymax, 2400);
        assert_eq!(rates.fee_cents(LotType::Short, DAY), 2400);
    }

    #[test]
    fn empty_or_negative_stay_is_free() {
        let rates = RateTable::default();
        for lot in LotType::ALL {
            assert_eq!(rates.fee_cents(lot, 0), 0);
            assert_eq!(rates.fee_cents(lot, -HOUR), 0);
        }
    }

    #[test]
    fn twelve_and_a_half_hours_short_term() {
        let rates = RateTable::default();
        let d = 12 * HOUR + HALF_HOUR_MS;
        let expected = tick_fee(rates.rates(LotType::Short), d);
        assert_eq!(expected, 2400);
        assert_eq!(rates.fee_cents(LotType::Short, d), expected);
    }

    #[test]
    fn closed_form_matches_tick_accumulator() {
        let rates = RateTable::default();
        for lot in LotType::ALL {
            for d in (0..(16 * DAY)).step_by((HALF_HOUR_MS / 3) as usize) {
                assert_eq!(
                    rates.fee_cents(lot, d),
                    tick_fee(rates.rates(lot), d),
                    "{lot} {d}"
                );
            }
        }
    }

    #[test]
    fn fee_is_monotone_and_weekly_bounded() {
        let rates = RateTable::default();
        for lot in LotType::ALL {
            let week = rates.rates(lot).weekmax;
            let mut prev = 0;
            for u in 0..(3 * 336) {
                let d = u * HALF_HOUR_MS;
                let f = rates.fee_cents(lot, d);
                assert!(f >= prev, "{lot} at {u} half hours");
                let weeks = (d + 7 * DAY - 1) / (7 * DAY);
                assert!(f <= week * weeks);
                prev = f;
            }
        }
    }

    #[test]
    fn rate_table_parsing() {
        assert_eq!(parse_cents("24.00"), Some(2400));
        assert_eq!(parse_cents("$1.5"), Some(150));
        assert_eq!(parse_cents("7"), Some(700));
        assert_eq!(parse_cents("1.234"), None);
        assert!(matches!(
            RateTable::parse("short.hour = 2.00"),
            Err(RateError::Missing(_))
        ));
        assert!(matches!(
            RateTable::parse("bus.hour = 2.00"),
            Err(RateError::Bad { line: 1, .. })
        ));
    }

    #[test]
    fn date_and_time_operations() {
        let d = builtin_domain_parking(RateTable::default());
        let t = d
            .apply("time", &[SemValue::Int(8), SemValue::Int(5)])
            .unwrap();
        assert_eq!(t, SemValue::Text("8/5/00".into()));
        let pm = d
            .apply("time24Fmt", &[SemValue::Bool(true), t.clone()])
            .unwrap();
        assert_eq!(pm, SemValue::Text("20/5/00".into()));
        let midnight = d
            .apply(
                "time24Fmt",
                &[SemValue::Bool(false), SemValue::Text("12/0/00".into())],
            )
            .unwrap();
        assert_eq!(midnight, SemValue::Text("0/0/00".into()));
        let date = d
            .apply(
                "date",
                &[SemValue::Int(1), SemValue::Int(2), SemValue::Int(2014)],
            )
            .unwrap();
        let at = d.apply("simpleFmt", &[pm, date]).unwrap();
        assert_eq!(at, SemValue::Wide(DAY + 20 * HOUR + 5 * 60_000));
        assert!(d
            .apply("time", &[SemValue::Int(13), SemValue::Int(0)])
            .is_err());
        assert!(d
            .apply("time", &[SemValue::Int(0), SemValue::Int(0)])
            .is_err());
        assert!(d
            .apply("time", &[SemValue::Int(1), SemValue::Int(60)])
            .is_err());
        assert!(d
            .apply(
                "date",
                &[SemValue::Int(2), SemValue::Int(30), SemValue::Int(2014)]
            )
            .is_err());
        assert!(d
            .apply(
                "date",
                &[SemValue::Int(13), SemValue::Int(1), SemValue::Int(2014)]
            )
            .is_err());
    }

    #[test]
    fn sf_sub_may_be_negative() {
        let d = builtin_domain_parking(RateTable::default());
        let r = d
            .apply("sfSub", &[SemValue::Wide(10), SemValue::Wide(25)])
            .unwrap();
        assert_eq!(r, SemValue::Wide(-15));
    }

    #[test]
    fn price_and_money() {
        let d = builtin_domain_parking(RateTable::default());
        let p = d
            .apply(
                "price",
                &[SemValue::Text("short".into()), SemValue::Wide(DAY)],
            )
            .unwrap();
        assert_eq!(p, SemValue::Real(24.0));
        assert_eq!(
            d.apply("money", &[p]).unwrap(),
            SemValue::Text("$24.00".into())
        );
        assert_eq!(format_cents(5), "$0.05");
    }
}
