//! Test-function descriptors: `name(key=value;...)` with decimal numbers and
//! bracketed lists, e.g. `poly_gauss(gamma=[0,0,2];a=1)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use subfrac::TestFunction;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("at byte {offset}: {message}")]
pub struct DslError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FnDescriptor {
    Gaussian { a: f64 },
    PolyGauss { gamma: Vec<u32>, a: f64 },
    KoranyiGauss,
}

const NAMES: &[&str] = &["gaussian", "poly_gauss", "koranyi_gauss"];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Num(f64),
    List(Vec<(usize, f64)>),
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), DslError> {
        self.ws();
        match self.peek() {
            Some(b) if b == c => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => err(self.pos, format!("expected '{}', found '{}'", c as char, b as char)),
            None => err(self.pos, format!("expected '{}', found end of input", c as char)),
        }
    }

    fn ident(&mut self) -> Result<(usize, String), DslError> {
        self.ws();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos || self.s[start].is_ascii_digit() {
            return err(start, "expected a name");
        }
        Ok((start, String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()))
    }

    fn number(&mut self) -> Result<(usize, f64), DslError> {
        self.ws();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() || matches!(b, b'+' | b'-' | b'.' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && !text.is_empty() => Ok((start, v)),
            _ => err(start, format!("expected a decimal number, found {:?}", text)),
        }
    }

    fn value(&mut self) -> Result<(usize, Value), DslError> {
        self.ws();
        let start = self.pos;
        if self.peek() != Some(b'[') {
            let (_, v) = self.number()?;
            return Ok((start, Value::Num(v)));
        }
        self.pos += 1;
        let mut items = Vec::new();
        self.ws();
        if self.peek() == Some(b']') {
            self.pos += 1;
            return Ok((start, Value::List(items)));
        }
        loop {
            items.push(self.number()?);
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    return Ok((start, Value::List(items)));
                }
                _ => return err(self.pos, "expected ',' or ']' in list"),
            }
        }
    }
}

struct Args {
    close: usize,
    items: Vec<(usize, String, usize, Value)>,
}

impl Args {
    fn take(&mut self, key: &str) -> Option<(usize, Value)> {
        let k = self.items.iter().position(|(_, name, _, _)| name == key)?;
        let (_, _, off, v) = self.items.remove(k);
        Some((off, v))
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Result<f64, DslError> {
        match self.take(key) {
            Some((_, Value::Num(v))) => Ok(v),
            Some((off, Value::List(_))) => err(off, format!("{key} must be a number")),
            None => default.map_or_else(|| err(self.close, format!("missing argument {key}")), Ok),
        }
    }

    fn finish(self) -> Result<(), DslError> {
        match self.items.first() {
            Some((off, name, _, _)) => err(*off, format!("unexpected argument {name}")),
            None => Ok(()),
        }
    }
}

pub fn parse_fn(text: &str) -> Result<FnDescriptor, DslError> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let (name_off, name) = p.ident()?;
    if !NAMES.contains(&name.as_str()) {
        return err(name_off, format!("unknown function {name:?}; expected one of {}", NAMES.join(", ")));
    }
    p.expect(b'(')?;
    let mut items: Vec<(usize, String, usize, Value)> = Vec::new();
    p.ws();
    if p.peek() != Some(b')') {
        loop {
            let (off, key) = p.ident()?;
            if items.iter().any(|(_, k, _, _)| *k == key) {
                return err(off, format!("duplicate argument {key}"));
            }
            p.expect(b'=')?;
            let (voff, v) = p.value()?;
            items.push((off, key, voff, v));
            p.ws();
            if p.peek() == Some(b';') {
                p.pos += 1;
            } else {
                break;
            }
        }
    }
    p.expect(b')')?;
    let close = p.pos - 1;
    p.ws();
    if p.pos < text.len() {
        return err(p.pos, "trailing input");
    }
    let mut args = Args { close, items };
    let desc = match name.as_str() {
        "gaussian" => FnDescriptor::Gaussian {
            a: positive(&mut args, "a")?,
        },
        "poly_gauss" => {
            let gamma = match args.take("gamma") {
                Some((_, Value::List(items))) => items
                    .into_iter()
                    .map(|(off, v)| {
                        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                            Ok(v as u32)
                        } else {
                            err(off, "gamma entries must be nonnegative integers")
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                Some((off, Value::Num(_))) => return err(off, "gamma must be a list"),
                None => return err(close, "missing argument gamma"),
            };
            FnDescriptor::PolyGauss {
                gamma,
                a: positive(&mut args, "a")?,
            }
        }
        _ => FnDescriptor::KoranyiGauss,
    };
    args.finish()?;
    Ok(desc)
}

fn positive(args: &mut Args, key: &str) -> Result<f64, DslError> {
    let off = args
        .items
        .iter()
        .find(|(_, k, _, _)| k == key)
        .map_or(args.close, |it| it.2);
    let v = args.num(key, Some(1.0))?;
    if v > 0.0 {
        Ok(v)
    } else {
        err(off, format!("{key} must be positive"))
    }
}

impl fmt::Display for FnDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { a } => write!(f, "gaussian(a={a})"),
            Self::PolyGauss { gamma, a } => {
                let g: Vec<String> = gamma.iter().map(|v| v.to_string()).collect();
                write!(f, "poly_gauss(gamma=[{}];a={a})", g.join(","))
            }
            Self::KoranyiGauss => write!(f, "koranyi_gauss()"),
        }
    }
}

impl FnDescriptor {
    /// The library test function on `H^n`.
    pub fn build(&self, n: usize) -> subfrac::Result<TestFunction> {
        let f = match self {
            Self::Gaussian { a } => TestFunction::gaussian(*a)?,
            Self::PolyGauss { gamma, a } => TestFunction::poly_gauss(gamma.clone(), *a)?,
            Self::KoranyiGauss => TestFunction::KoranyiGauss,
        };
        f.check_dim(2 * n + 1)?;
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_fn("gaussian(a=1.0)").unwrap(), FnDescriptor::Gaussian { a: 1.0 });
        assert_eq!(
            parse_fn("poly_gauss(gamma=[0,0,2];a=1)").unwrap(),
            FnDescriptor::PolyGauss { gamma: vec![0, 0, 2], a: 1.0 }
        );
        assert_eq!(parse_fn(" koranyi_gauss( ) ").unwrap(), FnDescriptor::KoranyiGauss);
        assert_eq!(parse_fn("gaussian()").unwrap(), FnDescriptor::Gaussian { a: 1.0 });
    }

    #[test]
    fn offsets() {
        let e = parse_fn("gausian(a=1)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("unknown function"));
        assert_eq!(parse_fn("gaussian(a=x)").unwrap_err().offset, 11);
        assert_eq!(parse_fn("gaussian(b=1)").unwrap_err().offset, 9);
        assert_eq!(parse_fn("gaussian(a=1;a=2)").unwrap_err().offset, 13);
        assert_eq!(parse_fn("gaussian(a=-1)").unwrap_err().offset, 11);
        assert_eq!(parse_fn("poly_gauss(a=1)").unwrap_err().offset, 14);
        assert_eq!(parse_fn("poly_gauss(gamma=[1,0.5,0])").unwrap_err().offset, 20);
        assert_eq!(parse_fn("gaussian(a=1) x").unwrap_err().offset, 14);
        assert_eq!(parse_fn("gaussian(a=1").unwrap_err().offset, 12);
    }

    #[test]
    fn builds_with_dimension_check() {
        let d = parse_fn("poly_gauss(gamma=[0,0,2];a=1)").unwrap();
        assert!(d.build(1).is_ok());
        assert!(d.build(2).is_err());
    }
}
