use super::{Domain, EvalError, SemValue};

#[derive(Clone, Copy)]
enum Arith {
    Add,
    Sub,
    Mul,
    Div,
}

fn apply(name: &str, which: Arith, args: &[SemValue]) -> Result<SemValue, EvalError> {
    match (&args[0], &args[1]) {
        (SemValue::Int(a), SemValue::Int(b)) => {
            let (a, b) = (*a, *b);
            let r = match which {
                Arith::Add => a.checked_add(b),
                Arith::Sub => a.checked_sub(b),
                Arith::Mul => a.checked_mul(b),
                Arith::Div if b == 0 => return Err(EvalError::op(name, "division by zero")),
                // checked_div truncates toward zero
                Arith::Div => a.checked_div(b),
            };
            r.map(SemValue::Int)
                .ok_or_else(|| EvalError::op(name, "integer overflow"))
        }
        (a, b) => {
            let (a, b) = match (real(a), real(b)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(EvalError::op(
                        name,
                        format!("expected numbers, got {} and {}", a.kind(), b.kind()),
                    ))
                }
            };
            let r = match which {
                Arith::Add => a + b,
                Arith::Sub => a - b,
                Arith::Mul => a * b,
                Arith::Div if b == 0.0 => return Err(EvalError::op(name, "division by zero")),
                Arith::Div => a / b,
            };
            Ok(SemValue::Real(r))
        }
    }
}

fn real(v: &SemValue) -> Option<f64> {
    match v {
        SemValue::Int(i) => Some(*i as f64),
        SemValue::Real(r) => Some(*r),
        _ => None,
    }
}

/// `intAdd`, `intSub`, `intMul`, `intDiv` over 64-bit integers. Overflow
/// and division by zero are evaluation errors; division truncates toward
/// zero.
pub fn builtin_domain_arith() -> Domain {
    let mut d = Domain::new("arith");
    for (name, which) in [
        ("intAdd", Arith::Add),
        ("intSub", Arith::Sub),
        ("intMul", Arith::Mul),
        ("intDiv", Arith::Div),
    ] {
        d.register(name, 2, move |args| apply(name, which, args));
    }
    d
}
