//! Shared scanner for the sequence and index-set expression grammars.

use crate::error::{Error, Result};

pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    pub fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    pub fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    /// Lowercase identifier made of letters, digits, `_` and `-`.
    pub fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_alphabetic() || c == '_' || (i > 0 && (c.is_ascii_digit() || c == '-')))
            })
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number_token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut len = 0;
        while len < bytes.len() {
            let c = bytes[len] as char;
            let sign_ok = (c == '-' || c == '+')
                && (len == 0 || matches!(bytes[len - 1], b'e' | b'E'));
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || sign_ok {
                len += 1;
            } else {
                break;
            }
        }
        // `4..8`: stop before a range operator
        if let Some(dots) = rest[..len].find("..") {
            len = dots;
        }
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    pub fn real(&mut self) -> Result<f64> {
        let start = self.pos;
        let tok = self.number_token()?;
        tok.parse::<f64>()
            .map_err(|_| Error::parse(start, format!("invalid number `{tok}`")))
    }

    pub fn integer(&mut self) -> Result<i64> {
        let start = self.pos;
        let tok = self.number_token()?;
        tok.parse::<i64>()
            .map_err(|_| Error::parse(start, format!("invalid integer `{tok}`")))
    }

    pub fn count(&mut self) -> Result<u64> {
        let start = self.pos;
        let tok = self.number_token()?;
        parse_count(tok).map_err(|_| Error::parse(start, format!("invalid count `{tok}`")))
    }

    pub fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.error("trailing input"))
        }
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.pos, message)
    }
}

/// Parse a non-negative integer written plainly (`10000`) or in exponent
/// form (`1e4`, `2.5e6`); the exponent form must denote an integer exactly.
pub fn parse_count(text: &str) -> Result<u64> {
    let text = text.trim().replace('_', "");
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let bad = || Error::parse(0, format!("`{text}` is not a non-negative integer"));
    let (mantissa, exponent) = text
        .split_once(['e', 'E'])
        .ok_or_else(bad)?;
    let exponent: u32 = exponent.trim_start_matches('+').parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if frac_part.len() as u32 > exponent || int_part.starts_with('-') {
        return Err(bad());
    }
    let digits: u64 = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    10u64
        .checked_pow(exponent - frac_part.len() as u32)
        .and_then(|scale| digits.checked_mul(scale))
        .ok_or_else(bad)
}
