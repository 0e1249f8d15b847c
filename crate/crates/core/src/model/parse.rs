use super::{LatentModel, ProcessBlock, ProcessKind};
use crate::{Error, Result};

/// Parses `k*PROC(args)+PROC(...)+...`. Whitespace is ignored everywhere.
pub fn parse_model(text: &str, freq: f64) -> Result<LatentModel> {
    let mut p = Parser::new(text);
    p.skip_ws();
    if p.at_end() {
        return Err(Error::Syntax {
            pos: 0,
            msg: "empty model".into(),
        });
    }
    let mut blocks = Vec::new();
    loop {
        p.term(&mut blocks)?;
        p.skip_ws();
        if p.at_end() {
            break;
        }
        p.expect(b'+')?;
    }
    LatentModel::new(blocks, freq)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            match self.peek() {
                Some(got) => self.err(format!("expected `{}`, found `{}`", c as char, got as char)),
                None => self.err(format!("expected `{}`, found end of input", c as char)),
            }
        }
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected an integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("integer `{s}` out of range"),
        })
    }

    fn ident(&mut self) -> Result<(usize, String)> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a name");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok((start, s.to_string()))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let mut digits = 0;
        while let Some(c) = self.peek() {
            let exp_sign = (c == b'+' || c == b'-')
                && matches!(self.src.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                digits += c.is_ascii_digit() as usize;
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match s.parse::<f64>() {
            Ok(v) if digits > 0 && v.is_finite() => Ok(v),
            _ => Err(Error::Syntax {
                pos: start,
                msg: format!("invalid number `{s}`"),
            }),
        }
    }

    fn term(&mut self, blocks: &mut Vec<ProcessBlock>) -> Result<()> {
        self.skip_ws();
        let mut mult = 1usize;
        let mut mult_given = false;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            let at = self.pos;
            mult = self.integer()?;
            if mult == 0 {
                return Err(Error::Syntax {
                    pos: at,
                    msg: "multiplier must be at least 1".into(),
                });
            }
            mult_given = true;
            self.expect(b'*')?;
        }
        let (name_pos, name) = self.ident()?;
        self.expect(b'(')?;
        let kind = match name.as_str() {
            "GM" => ProcessKind::Gm,
            "AR1" => ProcessKind::Ar1,
            "WN" => ProcessKind::Wn,
            "QN" => ProcessKind::Qn,
            "RW" => ProcessKind::Rw,
            "DR" => ProcessKind::Dr,
            "AR" => ProcessKind::Ar(self.integer()?),
            "MA" => ProcessKind::Ma(self.integer()?),
            "ARMA" => {
                let p = self.integer()?;
                self.expect(b',')?;
                ProcessKind::Arma(p, self.integer()?)
            }
            _ => {
                return Err(Error::UnknownProcess {
                    name,
                    pos: name_pos,
                })
            }
        };
        if mult_given && !kind.repeatable() {
            return Err(Error::InvalidMultiplier(kind.label()));
        }
        let mut block = ProcessBlock::new(kind);
        let ordered = matches!(kind, ProcessKind::Ar(_) | ProcessKind::Ma(_) | ProcessKind::Arma(..));
        self.skip_ws();
        let mut first = !ordered;
        while self.peek() != Some(b')') {
            if !first {
                self.expect(b',')?;
            }
            first = false;
            self.named_arg(&mut block)?;
            self.skip_ws();
        }
        self.expect(b')')?;
        for _ in 0..mult {
            blocks.push(block.clone());
        }
        Ok(())
    }

    fn named_arg(&mut self, block: &mut ProcessBlock) -> Result<()> {
        let (at, raw) = self.ident()?;
        let name = canonical_name(block.kind, &raw);
        self.skip_ws();
        let fixed = if self.peek() == Some(b':') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.expect(b'=')?;
        let value = self.number()?;
        let ordered = matches!(block.kind, ProcessKind::Ar(_) | ProcessKind::Ma(_) | ProcessKind::Arma(..));
        if ordered && name != "sigma2" {
            return Err(Error::Syntax {
                pos: at,
                msg: format!("only sigma2 can be given for {}; coefficients are searched", block.kind.label()),
            });
        }
        let Some(spec) = block.params.iter_mut().find(|p| p.name == name) else {
            return Err(Error::Syntax {
                pos: at,
                msg: format!("{} has no parameter `{raw}`", block.kind.label()),
            });
        };
        if spec.start.is_some() {
            return Err(Error::Syntax {
                pos: at,
                msg: format!("parameter `{raw}` given twice"),
            });
        }
        if !spec.bounds.contains(value) {
            return Err(Error::OutOfBounds {
                name,
                value,
                bounds: spec.bounds.to_string(),
            });
        }
        spec.start = Some(value);
        spec.fixed = fixed;
        Ok(())
    }
}

fn canonical_name(kind: ProcessKind, raw: &str) -> String {
    match (kind, raw) {
        (ProcessKind::Wn, "nu2") => "sigma2".into(),
        (ProcessKind::Gm, "sigma2") => "sigma2_gm".into(),
        (ProcessKind::Qn, "Q2") => "q2".into(),
        _ => raw.to_string(),
    }
}
