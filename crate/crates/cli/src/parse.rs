//! Parameter grammars: `"1,1;2,1"` for multi-compositions, `"1,0"` for
//! framings, `"2,3"` for plain lists.

use std::fmt;

use fjq_core::{FramingComposition, MultiComposition};
use num_bigint::BigInt;
use num_rational::BigRational;

/// A malformed parameter, with the 0-based character column of the fault.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

fn err(message: impl Into<String>, position: usize) -> ParseError {
    ParseError {
        message: message.into(),
        position,
    }
}

/// Splits on `sep`, yielding each piece with its starting column.
fn pieces(s: &str, start: usize, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = start;
    for piece in s.split(sep) {
        out.push((offset, piece));
        offset += piece.chars().count() + 1;
    }
    out
}

fn parse_uint(token: &str, column: usize) -> Result<usize, ParseError> {
    let lead = token.chars().take_while(|c| c.is_whitespace()).count();
    let trimmed = token.trim();
    if trimmed.is_empty() {
        return Err(err("empty entry", column));
    }
    if let Some(bad) = trimmed.chars().position(|c| !c.is_ascii_digit()) {
        let what = if trimmed.starts_with('-') {
            "negative entry".to_string()
        } else {
            format!("unexpected character '{}'", trimmed.chars().nth(bad).unwrap_or(' '))
        };
        return Err(err(what, column + lead + bad));
    }
    trimmed
        .parse()
        .map_err(|_| err(format!("entry '{trimmed}' is too large"), column + lead))
}

/// Comma-separated nonnegative integers.
pub fn parse_list(s: &str) -> Result<Vec<usize>, ParseError> {
    pieces(s, 0, ',')
        .into_iter()
        .map(|(col, tok)| parse_uint(tok, col))
        .collect()
}

/// `;`-separated blocks of `,`-separated positive parts.
pub fn parse_multicomposition(s: &str) -> Result<MultiComposition, ParseError> {
    let mut blocks = Vec::new();
    for (col, block) in pieces(s, 0, ';') {
        if block.trim().is_empty() {
            return Err(err("empty block", col));
        }
        let mut parts = Vec::new();
        for (pcol, tok) in pieces(block, col, ',') {
            let v = parse_uint(tok, pcol)?;
            if v == 0 {
                let lead = tok.chars().take_while(|c| c.is_whitespace()).count();
                return Err(err("zero part", pcol + lead));
            }
            parts.push(v);
        }
        blocks.push(parts);
    }
    MultiComposition::new(blocks).map_err(|e| err(e.to_string(), 0))
}

pub fn parse_framing(s: &str) -> Result<FramingComposition, ParseError> {
    FramingComposition::new(parse_list(s)?).map_err(|e| err(e.to_string(), 0))
}

/// Comma-separated rationals `n` or `n/d`.
pub fn parse_rationals(s: &str) -> Result<Vec<BigRational>, ParseError> {
    pieces(s, 0, ',')
        .into_iter()
        .map(|(col, tok)| {
            let t = tok.trim();
            let (num, den) = match t.split_once('/') {
                Some((n, d)) => (n, d),
                None => (t, "1"),
            };
            let num: BigInt = num.trim().parse().map_err(|_| err(format!("bad rational '{t}'"), col))?;
            let den: BigInt = den.trim().parse().map_err(|_| err(format!("bad rational '{t}'"), col))?;
            if den == BigInt::from(0) {
                return Err(err("zero denominator", col));
            }
            Ok(BigRational::new(num, den))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multicomposition_examples() {
        assert_eq!(parse_multicomposition("2").unwrap().to_string(), "2");
        let mc = parse_multicomposition("1,1;1").unwrap();
        assert_eq!(mc.m(), 2);
        assert_eq!(mc.refined(), &[1, 1, 1]);
        assert_eq!(mc.to_string(), "1,1;1");
        assert_eq!(parse_multicomposition(" 1 , 2 ;3").unwrap().to_string(), "1,2;3");
    }

    #[test]
    fn multicomposition_errors_carry_positions() {
        assert_eq!(parse_multicomposition("1,0;2").unwrap_err(), err("zero part", 2));
        assert_eq!(parse_multicomposition("1;;2").unwrap_err(), err("empty block", 2));
        assert_eq!(parse_multicomposition("").unwrap_err().message, "empty block");
        assert_eq!(parse_multicomposition("1,x").unwrap_err().position, 2);
        assert_eq!(parse_multicomposition("1,-1").unwrap_err(), err("negative entry", 2));
        assert_eq!(parse_multicomposition("1,,2").unwrap_err(), err("empty entry", 2));
    }

    #[test]
    fn round_trip() {
        for s in ["1", "3,1;2", "1;1;1", "2,2,1;4"] {
            let parsed = parse_multicomposition(s).unwrap();
            assert_eq!(parse_multicomposition(&parsed.to_string()).unwrap(), parsed);
            assert_eq!(parsed.to_string(), s);
        }
    }

    #[test]
    fn framing_and_rationals() {
        assert_eq!(parse_framing("1,0").unwrap().parts(), &[1, 0]);
        assert!(parse_framing("0,1").is_err());
        let r = parse_rationals("1, 5/3").unwrap();
        assert_eq!(r[1], BigRational::new(5.into(), 3.into()));
        assert!(parse_rationals("1/0").is_err());
    }
}
