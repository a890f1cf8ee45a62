//! Parsing of command-line values and `--from-json` documents.
//!
//! Every failure names the offending field so the caller can exit with status 2.

use mjf_core::cyclotomic::complex_from_json;
use mjf_core::lattice::{parse_vector, Frame, Lattice, Mode};
use mjf_core::rational::{parse_rat, RVec, Rat};
use mjf_core::{Error, Result, C64};
use serde_json::Value;

/// Parses "re,im", "a+bi", "bi" or a plain real.
pub fn complex(field: &str, s: &str) -> Result<C64> {
    let bad = || Error::Parse(format!("{field}: cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some((a, b)) = t.split_once(',') {
        return Ok(C64::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
    }
    if let Some(body) = t.strip_suffix('i') {
        // split at the last sign that is not an exponent sign or the leading sign
        let bytes = body.as_bytes();
        let cut = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match cut {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        return Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?));
    }
    Ok(C64::new(t.parse().map_err(|_| bad())?, 0.0))
}

/// Semicolon-separated list of complex numbers.
pub fn complex_list(field: &str, s: &str) -> Result<Vec<C64>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(';').map(|x| complex(field, x)).collect()
}

pub fn tau(s: &str) -> Result<C64> {
    let t = complex("tau", s)?;
    if !(t.im > 0.0) {
        return Err(Error::Domain(format!("tau: imaginary part must be positive, got {}", t.im)));
    }
    Ok(t)
}

/// A JSON value or a JSON string literal holding one, as produced by shell arguments.
pub fn json_arg(field: &str, s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::Parse(format!("{field}: invalid JSON: {e}")))
}

pub fn rat_vector(field: &str, s: &str) -> Result<RVec> {
    let v = json_arg(field, s)?;
    parse_vector(&v, field)
}

pub fn rat_scalar(field: &str, s: &str) -> Result<Rat> {
    parse_rat(s.trim()).map_err(|_| Error::Parse(format!("{field}: bad rational {s:?}")))
}

pub fn lattice(inline: &str, mode: &str) -> Result<Lattice> {
    let mode = Mode::parse(mode).map_err(|e| Error::Parse(format!("mode: {e}")))?;
    Lattice::parse_inline(inline, mode).map_err(|e| match e {
        Error::Parse(m) | Error::Invalid(m) => Error::Parse(format!("lattice: {m}")),
        e => e,
    })
}

pub fn frame(field: &str, s: &str) -> Result<Frame> {
    Frame::from_json(&json_arg(field, s)?, field)
}

pub fn read_json_file(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("from-json: {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("from-json: {}: {e}", path.display())))
}

/// The "input" block of an emitted document, or the document itself.
pub fn input_block(v: &Value) -> &Value {
    v.get("input").unwrap_or(v)
}

pub fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Parse(format!("{name}: missing field")))
}

pub fn complex_field(v: &Value, name: &str) -> Result<C64> {
    complex_from_json(field(v, name)?).map_err(|e| Error::Parse(format!("{name}: {e}")))
}

pub fn complex_vec_field(v: &Value, name: &str) -> Result<Vec<C64>> {
    match v.get(name) {
        None => Ok(vec![]),
        Some(Value::Array(xs)) => {
            xs.iter().map(|x| complex_from_json(x).map_err(|e| Error::Parse(format!("{name}: {e}")))).collect()
        }
        Some(_) => Err(Error::Parse(format!("{name}: expected array of complex numbers"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("x", "0.1,1.1").unwrap(), C64::new(0.1, 1.1));
        assert_eq!(complex("x", "0.1+1.1i").unwrap(), C64::new(0.1, 1.1));
        assert_eq!(complex("x", "-0.2-3i").unwrap(), C64::new(-0.2, -3.0));
        assert_eq!(complex("x", "2i").unwrap(), C64::new(0.0, 2.0));
        assert_eq!(complex("x", "i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(complex("x", "1e-3+2e-1i").unwrap(), C64::new(1e-3, 0.2));
        assert_eq!(complex("x", "0.5").unwrap(), C64::new(0.5, 0.0));
        assert!(complex("x", "abc").unwrap_err().to_string().contains("x:"));
    }

    #[test]
    fn tau_must_be_in_upper_half_plane() {
        assert!(tau("0.1-1i").unwrap_err().to_string().contains("tau"));
    }

    #[test]
    fn lists() {
        assert_eq!(complex_list("z", "0.1+0.2i; 0.3").unwrap().len(), 2);
        assert!(complex_list("z", "").unwrap().is_empty());
    }
}
