//! Parser for the `+`-composition grammar.
//!
//! ```text
//! spec  := term ('+' term)*
//! term  := [INT '*'] NAME '(' [arg (',' arg)*] ')'
//! arg   := [IDENT '='] value
//! value := NUMBER | 'c' '(' [NUMBER (',' NUMBER)*] ')'
//! ```

use super::registry::{registry, Arg, ArgValue};
use super::{validate_model, ModelSpec, ModelTerm};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.err(format!("expected `{c}`, found `{found}`")),
                None => self.err(format!("expected `{c}`, found end of input")),
            }
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .take_while(|(i, c)| c.is_ascii_alphabetic() || c == &'_' || (*i > 0 && c.is_ascii_digit()))
            .map(|(i, c)| i + c.len_utf8())
            .last()?;
        self.pos += len;
        Some(&rest[..len])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = start;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let digits_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i == digits_start {
            return self.err("expected a number");
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut k = i + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                i = k;
            }
        }
        let text = &self.src[start..i];
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(v)
            }
            Err(_) => self.err(format!("malformed number `{text}`")),
        }
    }

    fn value(&mut self) -> Result<ArgValue> {
        self.skip_ws();
        let save = self.pos;
        if self.ident() == Some("c") && self.eat('(') {
            let mut v = Vec::new();
            if !self.eat(')') {
                loop {
                    v.push(self.number()?);
                    if self.eat(')') {
                        break;
                    }
                    self.expect(',')?;
                }
            }
            return Ok(ArgValue::Vector(v));
        }
        self.pos = save;
        Ok(ArgValue::Scalar(self.number()?))
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let position = self.pos;
        let save = self.pos;
        if let Some(name) = self.ident() {
            if name != "c" || !matches!(self.peek_after_ws(), Some('(')) {
                if self.eat('=') {
                    let value = self.value()?;
                    return Ok(Arg {
                        name: Some(name.to_string()),
                        value,
                        position,
                    });
                }
                self.pos = save;
                return self.err(format!("expected `=` after `{name}`"));
            }
        }
        self.pos = save;
        Ok(Arg {
            name: None,
            value: self.value()?,
            position,
        })
    }

    fn peek_after_ws(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek()
    }

    fn term(&mut self) -> Result<Vec<ModelTerm>> {
        self.skip_ws();
        let mut copies = 1usize;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            copies = self.src[start..self.pos].parse().map_err(|_| Error::Syntax {
                position: start,
                message: "bad multiplier".into(),
            })?;
            if copies == 0 {
                self.pos = start;
                return self.err("multiplier must be at least 1");
            }
            self.expect('*')?;
        }
        self.skip_ws();
        let name_pos = self.pos;
        let Some(name) = self.ident() else {
            return self.err("expected a model name");
        };
        let model = registry()
            .get(name)
            .ok_or_else(|| Error::UnknownModel(name.to_string()))?;
        self.expect('(')?;
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        let term = model.from_args(&args).map_err(|e| match e {
            Error::Dimension { .. } => Error::Syntax {
                position: name_pos,
                message: e.to_string(),
            },
            other => other,
        })?;
        Ok(vec![term; copies])
    }
}

/// Parses and validates a model string such as `3*AR1()+RW()+WN()`.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let mut p = Parser { src: text, pos: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return p.err("empty model");
    }
    let mut terms = p.term()?;
    while p.eat('+') {
        terms.extend(p.term()?);
    }
    p.skip_ws();
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    let n: usize = terms.iter().map(ModelTerm::n_slots).sum();
    validate_model(ModelSpec {
        terms,
        free: vec![true; n],
    })
}
