use std::collections::HashSet;
use std::fmt::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{MilpError, MilpModel, MilpSolution, Sense, SolveStats, SolveStatus, VarKind};

const BINARY_TOL: f64 = 1e-6;

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || "_.#+-".contains(c))
}

/// Decimal rendering: exact when the denominator has only factors 2 and 5,
/// otherwise rounded to 20 fractional digits.
pub fn format_big(v: &BigRational) -> String {
    if v.is_integer() {
        return v.numer().to_string();
    }
    let neg = v.is_negative();
    let a = v.abs();
    let mut den = a.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut digits = 0usize;
    let mut twos = 0usize;
    let mut fives = 0usize;
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    let exact = den.is_one();
    digits += if exact { twos.max(fives) } else { 20 };
    let scale = BigInt::from(10).pow(digits as u32);
    let scaled = a * BigRational::from_integer(scale.clone());
    let n = if exact { scaled.to_integer() } else { scaled.round().to_integer() };
    let (ip, fp) = n.div_rem(&scale);
    let mut frac = format!("{:0>width$}", fp.to_string(), width = digits);
    while frac.ends_with('0') {
        frac.pop();
    }
    let sign = if neg { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{frac}")
    }
}

/// Parses integers, decimals, scientific notation and `p/q` fractions exactly.
pub fn parse_big(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{ip}{fp}").parse().ok()?;
    let shift = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut v = BigRational::from_integer(digits);
    if shift >= 0 {
        v *= BigRational::from_integer(ten.pow(shift as u32));
    } else {
        v /= BigRational::from_integer(ten.pow((-shift) as u32));
    }
    Some(if neg { -v } else { v })
}

fn write_terms(out: &mut String, terms: &[(BigRational, usize)], model: &MilpModel) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, (c, v)) in terms.iter().enumerate() {
        let name = &model.variables[*v].name;
        let mag = format_big(&c.abs());
        let sign = if c.is_negative() { "-" } else { "+" };
        if k == 0 {
            if c.is_negative() {
                out.push_str(" -");
            }
        } else {
            let _ = write!(out, " {sign}");
        }
        if mag == "1" {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {mag} {name}");
        }
    }
}

/// Writes the model in LP format.  Output is a pure function of the model.
pub fn export_lp(model: &MilpModel) -> Result<String, MilpError> {
    let mut seen = HashSet::new();
    for name in model.variables.iter().map(|v| &v.name).chain(model.constraints.iter().map(|c| &c.name)) {
        if !valid_name(name) {
            return Err(MilpError::InvalidName(name.clone()));
        }
        if !seen.insert(name.as_str()) || name == "obj" {
            return Err(MilpError::NameCollision(name.clone()));
        }
    }
    let mut out = String::from("Maximize\n obj:");
    let mut obj = model.objective.clone();
    obj.sort_by_key(|(_, v)| *v);
    write_terms(&mut out, &obj, model);
    out.push_str("\nSubject To\n");
    for c in model.constraints.iter().filter(|c| !c.terms.is_empty()) {
        let _ = write!(out, " {}:", c.name);
        let mut terms = c.terms.clone();
        terms.sort_by_key(|(_, v)| *v);
        write_terms(&mut out, &terms, model);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", format_big(&c.rhs));
    }
    let continuous: Vec<_> = model.variables.iter().filter(|v| v.kind == VarKind::Continuous).collect();
    if !continuous.is_empty() {
        out.push_str("Bounds\n");
        for v in continuous {
            let _ = match (&v.lower, &v.upper) {
                (None, None) => writeln!(out, " {} free", v.name),
                (Some(l), None) => writeln!(out, " {} >= {}", v.name, format_big(l)),
                (None, Some(u)) => writeln!(out, " -inf <= {} <= {}", v.name, format_big(u)),
                (Some(l), Some(u)) => writeln!(out, " {} <= {} <= {}", format_big(l), v.name, format_big(u)),
            };
        }
    }
    let binaries: Vec<_> = model.variables.iter().filter(|v| v.kind == VarKind::Binary).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for v in binaries {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    Ok(out)
}

/// Renders a solution as `<name> <value>` lines, one per variable.
pub fn format_solution(model: &MilpModel, values: &[BigRational]) -> String {
    let mut out = String::new();
    for v in &model.variables {
        let x = &values[v.id];
        let text = if (x * BigRational::from_integer(BigInt::from(10).pow(20))).is_integer() {
            format_big(x)
        } else {
            x.to_string()
        };
        let _ = writeln!(out, "{} {}", v.name, text);
    }
    out
}

/// Reads an external `<name> <value>` dump.  Lines starting with `#` are
/// comments.  The objective is always recomputed from the model.
pub fn import_solution(text: &str, model: &MilpModel) -> Result<MilpSolution, MilpError> {
    let mut values = vec![BigRational::zero(); model.variables.len()];
    let mut warnings = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(MilpError::ParseError { line: k + 1, msg: format!("expected `<name> <value>`, got `{line}`") });
        };
        let Some(x) = parse_big(val) else {
            return Err(MilpError::ParseError { line: k + 1, msg: format!("bad number `{val}`") });
        };
        let Some(id) = model.var(name) else {
            log::warn!("unknown variable `{name}` ignored");
            warnings.push(format!("unknown variable `{name}` ignored"));
            continue;
        };
        let var = &model.variables[id];
        values[id] = if var.kind == VarKind::Binary {
            let f = super::f64_of(&x);
            if f.abs() <= BINARY_TOL {
                BigRational::zero()
            } else if (f - 1.0).abs() <= BINARY_TOL {
                BigRational::one()
            } else {
                return Err(MilpError::ValueOutOfBounds { name: name.to_string(), value: val.to_string() });
            }
        } else {
            x
        };
    }
    let violated = model.violations(&values, &BigRational::new(1.into(), 1_000_000.into()));
    if !violated.is_empty() {
        warnings.push(format!("solution violates {} constraint(s), first `{}`", violated.len(), violated[0]));
    }
    let objective = model.objective_value(&values);
    Ok(MilpSolution {
        status: SolveStatus::Feasible { gap: None },
        values,
        objective: Some(objective),
        bound: None,
        stats: SolveStats::default(),
        warnings,
        log: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::int;

    #[test]
    fn empty_model_exports_minimal_text() {
        assert_eq!(export_lp(&MilpModel::new()).unwrap(), "Maximize\n obj: 0\nSubject To\nEnd\n");
    }

    #[test]
    fn binary_section_lists_binaries() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        m.set_objective(vec![(int(1), x)]);
        let text = export_lp(&m).unwrap();
        assert!(text.contains("Binaries\n x\n"));
        assert_eq!(text, export_lp(&m).unwrap());
    }

    #[test]
    fn names_are_checked() {
        let mut m = MilpModel::new();
        m.add_binary("x");
        m.add_binary("x");
        assert_eq!(export_lp(&m), Err(MilpError::NameCollision("x".into())));
        let mut m = MilpModel::new();
        m.add_binary("1x");
        assert_eq!(export_lp(&m), Err(MilpError::InvalidName("1x".into())));
    }

    #[test]
    fn decimals_round_trip() {
        for s in ["0.125", "-2.5", "17", "1e-3", "3/7", "-0.0000001"] {
            let v = parse_big(s).unwrap();
            if !s.contains('/') {
                assert_eq!(parse_big(&format_big(&v)).unwrap(), v, "{s}");
            }
        }
        assert_eq!(parse_big("1e-3").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert_eq!(format_big(&BigRational::new((-1).into(), 8.into())), "-0.125");
        assert!(parse_big("abc").is_none());
    }

    #[test]
    fn import_rounds_and_warns() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x");
        m.add_constraint("c", vec![(int(1), x)], Sense::Le, int(1));
        m.set_objective(vec![(int(1), x)]);
        let s = import_solution("x 0.9999999\nslack9 4\n", &m).unwrap();
        assert_eq!(s.objective, Some(int(1)));
        assert_eq!(s.warnings.len(), 1);
        assert!(matches!(import_solution("x 0.3", &m), Err(MilpError::ValueOutOfBounds { .. })));
        assert!(matches!(import_solution("x", &m), Err(MilpError::ParseError { line: 1, .. })));
    }
}
