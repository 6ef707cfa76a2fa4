use super::{AtomicPredicate, Formula, Interval, LogicError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bang,
    Amp,
    Pipe,
    Gt,
    Lt,
    Plus,
    Minus,
    Star,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("number {v}"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, LogicError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'{' => Some(Tok::LBrace),
            b'}' => Some(Tok::RBrace),
            b',' => Some(Tok::Comma),
            b'!' => Some(Tok::Bang),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            b'>' => Some(Tok::Gt),
            b'<' => Some(Tok::Lt),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| LogicError::Syntax {
                pos: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(LogicError::Syntax {
                pos: start,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

/// Affine expression in at most one signal: `coef·signal + constant`.
#[derive(Debug, Clone)]
struct Linear {
    signal: Option<(String, f64)>,
    coef: f64,
    constant: f64,
}

impl Linear {
    fn constant(c: f64) -> Self {
        Self {
            signal: None,
            coef: 0.0,
            constant: c,
        }
    }

    fn scale(mut self, k: f64) -> Self {
        self.coef *= k;
        self.constant *= k;
        self
    }

    fn combine(self, rhs: Linear, sign: f64, pos: usize) -> Result<Linear, LogicError> {
        let signal = merge_signal(self.signal, rhs.signal, pos)?;
        Ok(Linear {
            signal,
            coef: if sign > 0.0 {
                self.coef + rhs.coef
            } else {
                self.coef - rhs.coef
            },
            constant: if sign > 0.0 {
                self.constant + rhs.constant
            } else {
                self.constant - rhs.constant
            },
        })
    }
}

fn merge_signal(
    a: Option<(String, f64)>,
    b: Option<(String, f64)>,
    pos: usize,
) -> Result<Option<(String, f64)>, LogicError> {
    match (a, b) {
        (Some(x), Some(y)) => {
            if x.0 != y.0 || x.1.to_bits() != y.1.to_bits() {
                Err(LogicError::MixedSignals {
                    pos,
                    first: format!("{}{{{}}}", x.0, x.1),
                    second: format!("{}{{{}}}", y.0, y.1),
                })
            } else {
                Ok(Some(x))
            }
        }
        (x, None) => Ok(x),
        (None, y) => Ok(y),
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, LogicError> {
        Err(LogicError::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LogicError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected {}, found {}",
                describe(&tok),
                describe(self.peek())
            ))
        }
    }

    fn is_temporal(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name) && *self.peek2() == Tok::LBracket
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula, LogicError> {
        let mut lhs = self.until_expr()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.until_expr()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn until_expr(&mut self) -> Result<Formula, LogicError> {
        let lhs = self.unary()?;
        if self.is_temporal("U") {
            self.bump();
            let interval = self.interval()?;
            let rhs = self.until_expr()?;
            return Ok(Formula::until(interval, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, LogicError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(self.unary()?.not());
        }
        if self.is_temporal("G") {
            self.bump();
            let i = self.interval()?;
            return Ok(Formula::always(i, self.unary()?));
        }
        if self.is_temporal("F") {
            self.bump();
            let i = self.interval()?;
            return Ok(Formula::eventually(i, self.unary()?));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let inner = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(inner);
        }
        self.comparison()
    }

    fn interval(&mut self) -> Result<Interval, LogicError> {
        let pos = self.pos();
        self.expect(Tok::LBracket)?;
        let lo = self.step_count()?;
        self.expect(Tok::Comma)?;
        let hi = match self.peek() {
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                None
            }
            _ => Some(self.step_count()?),
        };
        self.expect(Tok::RBracket)?;
        if let Some(hi) = hi {
            if lo > hi {
                return Err(LogicError::Interval { pos, lo, hi });
            }
        }
        Ok(Interval { lo, hi })
    }

    fn step_count(&mut self) -> Result<usize, LogicError> {
        match self.peek().clone() {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 => {
                self.bump();
                Ok(v as usize)
            }
            other => self.err(format!(
                "expected a non-negative whole number of steps, found {}",
                describe(&other)
            )),
        }
    }

    fn comparison(&mut self) -> Result<Formula, LogicError> {
        let start = self.pos();
        let first = self.linear()?;
        let op1 = self.comparator()?;
        let second = self.linear()?;
        let atom1 = make_atom(first, op1, second.clone(), start)?;
        if matches!(self.peek(), Tok::Gt | Tok::Lt) {
            let op2 = self.comparator()?;
            let third = self.linear()?;
            let atom2 = make_atom(second, op2, third, start)?;
            return Ok(atom1.and(atom2));
        }
        Ok(atom1)
    }

    fn comparator(&mut self) -> Result<Tok, LogicError> {
        match self.peek() {
            Tok::Gt | Tok::Lt => Ok(self.bump()),
            other => self.err(format!("expected `>` or `<`, found {}", describe(other))),
        }
    }

    fn linear(&mut self) -> Result<Linear, LogicError> {
        let mut acc = self.term()?;
        loop {
            let sign = match self.peek() {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => return Ok(acc),
            };
            let pos = self.pos();
            self.bump();
            let rhs = self.term()?;
            acc = acc.combine(rhs, sign, pos)?;
        }
    }

    fn term(&mut self) -> Result<Linear, LogicError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                Ok(self.term()?.scale(-1.0))
            }
            Tok::Num(v) => {
                self.bump();
                if *self.peek() == Tok::Star {
                    self.bump();
                    Ok(self.signal()?.scale(v))
                } else {
                    Ok(Linear::constant(v))
                }
            }
            Tok::Ident(_) => {
                let s = self.signal()?;
                if *self.peek() == Tok::Star {
                    self.bump();
                    match self.bump() {
                        Tok::Num(v) => Ok(s.scale(v)),
                        other => self.err(format!("expected a number, found {}", describe(&other))),
                    }
                } else {
                    Ok(s)
                }
            }
            other => self.err(format!(
                "expected a signal or number, found {}",
                describe(&other)
            )),
        }
    }

    fn signal(&mut self) -> Result<Linear, LogicError> {
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => return self.err(format!("expected a signal name, found {}", describe(&other))),
        };
        self.bump();
        if *self.peek() != Tok::LBrace {
            return self.err(format!("signal `{name}` needs a confidence level, e.g. `{name}{{0.95}}`"));
        }
        self.bump();
        let pos = self.pos();
        let eps = match self.bump() {
            Tok::Num(v) => v,
            other => {
                return Err(LogicError::Syntax {
                    pos,
                    message: format!("expected a confidence level, found {}", describe(&other)),
                })
            }
        };
        if !(eps > 0.0 && eps < 1.0) {
            return Err(LogicError::Confidence { pos, value: eps });
        }
        self.expect(Tok::RBrace)?;
        Ok(Linear {
            signal: Some((name, eps)),
            coef: 1.0,
            constant: 0.0,
        })
    }
}

fn make_atom(lhs: Linear, op: Tok, rhs: Linear, pos: usize) -> Result<Formula, LogicError> {
    // lhs > rhs  <=>  lhs - rhs > 0;  lhs < rhs  <=>  rhs - lhs > 0
    let (pos_side, neg_side) = if op == Tok::Gt { (lhs, rhs) } else { (rhs, lhs) };
    let f = pos_side.combine(neg_side, -1.0, pos)?;
    match f.signal {
        Some((channel, epsilon)) if f.coef != 0.0 && f.coef.is_finite() && f.constant.is_finite() => {
            Ok(Formula::Atom(AtomicPredicate {
                channel,
                slope: f.coef,
                offset: f.constant,
                epsilon,
            }))
        }
        _ => Err(LogicError::ConstantPredicate { pos }),
    }
}

/// Parse formula text into its syntax tree.
pub fn parse(text: &str) -> Result<Formula, LogicError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}
