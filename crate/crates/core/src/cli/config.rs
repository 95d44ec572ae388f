use std::ffi::OsString;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::SUBCOMMANDS;
use crate::error::{Error, Result};

/// Parses `p/q`, integers and decimals such as `0.01` or `1e-20` exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::invalid(format!("'{s}' is not a rational number"));
    if s.contains('/') {
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::invalid(format!("zero denominator in '{s}'")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = BigInt::from_str(&format!("0{int}{frac}")).map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut v = BigRational::from_integer(digits);
    let p = BigRational::from_integer(num_traits::pow(ten, shift.unsigned_abs() as usize));
    v = if shift >= 0 { v * p } else { v / p };
    Ok(if neg { -v } else { v })
}

/// Parses a positive rational.
pub(crate) fn parse_positive(s: &str) -> Result<BigRational> {
    let v = parse_rational(s)?;
    if !v.is_positive() {
        return Err(Error::invalid(format!("'{s}' must be positive")));
    }
    Ok(v)
}

const GLOBAL_KEYS: [&str; 5] = ["alpha", "out-dir", "precision-cap", "threads", "log-level"];

/// Reads `--config FILE` from `args` and splices its `key=value` lines in as
/// `--key value` ahead of the user's own flags, which therefore win: global
/// keys go right after the program name, the rest right after the
/// subcommand name. `key=true` becomes a bare `--key` and
/// `key=false` is dropped.
pub fn inject_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<Option<&str>> = args.iter().map(|a| a.to_str()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        match a {
            Some("--config") => {
                path = strs.get(i + 1).copied().flatten().map(str::to_string);
                if path.is_none() {
                    return Err(Error::invalid("--config needs a file"));
                }
            }
            Some(s) if s.starts_with("--config=") => path = Some(s["--config=".len()..].to_string()),
            _ => {}
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::invalid(format!("cannot read config {path}: {e}")))?;
    let (mut global, mut extra) = (Vec::new(), Vec::new());
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("{path}:{}: expected key=value", no + 1)))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if k == "config" {
            return Err(Error::invalid(format!("{path}:{}: nested config files are not supported", no + 1)));
        }
        let dest = if GLOBAL_KEYS.contains(&k.as_str()) { &mut global } else { &mut extra };
        match v {
            "true" => dest.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                dest.push(OsString::from(format!("--{k}")));
                dest.push(OsString::from(v));
            }
        }
    }
    let at = strs
        .iter()
        .position(|a| a.is_some_and(|s| SUBCOMMANDS.contains(&s)))
        .map_or(args.len(), |i| i + 1);
    let mut out = args[..1.min(at)].to_vec();
    out.extend(global);
    out.extend_from_slice(&args[1.min(at)..at]);
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
