//! Text syntax for formulas.
//!
//! ```text
//! formula   := or_expr
//! or_expr   := and_expr ( "|" and_expr )*
//! and_expr  := unary ( "&" unary )*
//! unary     := "!" unary | "G" bound unary | "F" bound unary | atom ( "U" bound unary )?
//! bound     := "[" INT "," ( INT | "inf" ) ")"
//! atom      := "(" formula ")" | predicate
//! predicate := linexp ( "<" | ">" ) NUMBER
//! linexp    := term ( ("+"|"-") term )* ; term := [NUMBER "*"] IDENT
//! ```
//!
//! `G`, `F` and `U` are operators only when followed by `[`; otherwise they
//! lex as identifiers. Numbers may be integers, decimals (`2.5`) or ratios
//! (`1/3`), optionally signed. Chains of `&` and `|` fold to the right.

use std::collections::BTreeMap;

use num_rational::Rational64;

use super::ast::{Comparator, Formula, Interval, Predicate, Term};
use super::StlError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Number(Rational64),
    Ident(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> StlError {
    StlError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, StlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '!' => Some(Tok::Bang),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Pipe),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: start_line, column: start_col });
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                i += 1;
            }
            let lexeme: String = chars[begin..i].iter().collect();
            column += i - begin;
            let value = parse_number(&lexeme)
                .ok_or_else(|| syntax(start_line, start_col, format!("invalid number `{lexeme}`")))?;
            out.push(Spanned { tok: Tok::Number(value), line: start_line, column: start_col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            column += i - begin;
            out.push(Spanned {
                tok: Tok::Ident(chars[begin..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        return Err(syntax(start_line, start_col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

/// `12`, `2.5` or `1/3`, unsigned.
fn parse_number(lexeme: &str) -> Option<Rational64> {
    if let Some((n, d)) = lexeme.split_once('/') {
        let n: i64 = n.parse().ok()?;
        let d: i64 = d.parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    if let Some((int, frac)) = lexeme.split_once('.') {
        if int.is_empty() || frac.is_empty() || frac.contains('.') {
            return None;
        }
        let scale = 10i64.checked_pow(frac.len() as u32)?;
        let whole: i64 = int.parse().ok()?;
        let part: i64 = frac.parse().ok()?;
        return Some(Rational64::new(whole.checked_mul(scale)?.checked_add(part)?, scale));
    }
    lexeme.parse::<i64>().ok().map(Rational64::from_integer)
}

struct Parser<'v> {
    toks: Vec<Spanned>,
    pos: usize,
    variables: &'v [String],
    end_line: usize,
    end_column: usize,
}

impl<'v> Parser<'v> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or((self.end_line, self.end_column))
    }

    fn error(&self, message: impl Into<String>) -> StlError {
        let (line, column) = self.here();
        syntax(line, column, message)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|s| s.tok.clone());
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), StlError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    /// `G`, `F` or `U` immediately followed by `[`.
    fn at_operator(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
            && self.peek_at(1) == Some(&Tok::LBracket)
    }

    fn formula(&mut self) -> Result<Formula, StlError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            parts.push(self.and_expr()?);
        }
        Ok(Formula::or_all(parts))
    }

    fn and_expr(&mut self) -> Result<Formula, StlError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Formula::and_all(parts))
    }

    fn unary(&mut self) -> Result<Formula, StlError> {
        if self.peek() == Some(&Tok::Bang) {
            self.pos += 1;
            return Ok(Formula::not(self.unary()?));
        }
        if self.at_operator("G") {
            self.pos += 1;
            let window = self.bound()?;
            return Ok(Formula::always(window, self.unary()?));
        }
        if self.at_operator("F") {
            self.pos += 1;
            let window = self.bound()?;
            return Ok(Formula::eventually(window, self.unary()?));
        }
        let left = self.atom()?;
        if self.at_operator("U") {
            self.pos += 1;
            let window = self.bound()?;
            let right = self.unary()?;
            return Ok(Formula::until(window, left, right));
        }
        Ok(left)
    }

    fn bound(&mut self) -> Result<Interval, StlError> {
        let (line, column) = self.here();
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.bound_int()?;
        self.expect(Tok::Comma, "`,` in bound")?;
        let hi = match self.peek() {
            Some(Tok::Ident(s)) if s == "inf" => {
                self.pos += 1;
                None
            }
            _ => Some(self.bound_int()?),
        };
        self.expect(Tok::RParen, "`)` closing the half-open bound")?;
        match hi {
            None => Ok(Interval::unbounded(lo)),
            Some(hi) if lo < hi => Ok(Interval::new(lo, hi).expect("checked lo < hi")),
            Some(hi) => Err(StlError::MalformedBound {
                line,
                column,
                message: format!("lower bound {lo} must be below upper bound {hi}"),
            }),
        }
    }

    fn bound_int(&mut self) -> Result<usize, StlError> {
        let (line, column) = self.here();
        match self.bump() {
            Some(Tok::Number(n)) if n.is_integer() && *n.numer() >= 0 => Ok(n.to_integer() as usize),
            Some(Tok::Minus) => Err(StlError::MalformedBound {
                line,
                column,
                message: "time bounds must be non-negative".into(),
            }),
            Some(Tok::Number(_)) => Err(StlError::MalformedBound {
                line,
                column,
                message: "time bounds must be integers".into(),
            }),
            _ => Err(syntax(line, column, "expected an integer time bound")),
        }
    }

    fn atom(&mut self) -> Result<Formula, StlError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let inner = self.formula()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(inner);
        }
        self.predicate()
    }

    fn predicate(&mut self) -> Result<Formula, StlError> {
        let mut terms = Vec::new();
        let mut sign = Rational64::from_integer(1);
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            sign = -sign;
        }
        loop {
            terms.push(self.term(sign)?);
            match self.peek() {
                Some(Tok::Plus) => sign = Rational64::from_integer(1),
                Some(Tok::Minus) => sign = Rational64::from_integer(-1),
                _ => break,
            }
            self.pos += 1;
        }
        let comparator = match self.peek() {
            Some(Tok::Lt) => Comparator::Lt,
            Some(Tok::Gt) => Comparator::Gt,
            _ => return Err(self.error("expected `<` or `>`")),
        };
        self.pos += 1;
        let constant = self.signed_number()?;
        Predicate::new(terms, comparator, constant).map(Formula::Predicate)
    }

    fn term(&mut self, sign: Rational64) -> Result<Term, StlError> {
        let mut coeff = sign;
        if let Some(Tok::Number(n)) = self.peek() {
            coeff *= *n;
            self.pos += 1;
            self.expect(Tok::Star, "`*` between coefficient and variable")?;
        }
        let (line, column) = self.here();
        match self.bump() {
            Some(Tok::Ident(name)) => {
                let var = self
                    .variables
                    .iter()
                    .position(|v| *v == name)
                    .ok_or(StlError::UnknownVariable { name: name.clone(), line, column })?;
                Ok(Term { var, name, coeff })
            }
            _ => Err(syntax(line, column, "expected a state variable")),
        }
    }

    fn signed_number(&mut self) -> Result<Rational64, StlError> {
        let negative = self.peek() == Some(&Tok::Minus);
        if negative {
            self.pos += 1;
        }
        match self.bump() {
            Some(Tok::Number(n)) => Ok(if negative { -n } else { n }),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error("expected a number"))
            }
        }
    }
}

/// Parses formula text against the declared state variables.
pub fn parse_stl(text: &str, variables: &[String]) -> Result<Formula, StlError> {
    let toks = lex(text)?;
    let (end_line, end_column) = text.lines().enumerate().last().map_or((1, 1), |(i, l)| {
        (i + 1, l.chars().count() + 1)
    });
    let mut parser = Parser { toks, pos: 0, variables, end_line, end_column };
    if parser.peek().is_none() {
        return Err(parser.error("empty formula"));
    }
    let formula = parser.formula()?;
    if parser.peek().is_some() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

/// Replaces alias identifiers with their parenthesized definitions, repeatedly,
/// so aliases may refer to other aliases. Only whole identifiers match.
pub fn expand_aliases(text: &str, aliases: &BTreeMap<String, String>) -> Result<String, StlError> {
    const MAX_ROUNDS: usize = 32;
    let mut current = text.to_string();
    for _ in 0..MAX_ROUNDS {
        let (next, replaced) = substitute_once(&current, aliases);
        if !replaced {
            return Ok(next);
        }
        current = next;
    }
    Err(StlError::AliasCycle)
}

fn substitute_once(text: &str, aliases: &BTreeMap<String, String>) -> (String, bool) {
    let mut out = String::with_capacity(text.len());
    let mut replaced = false;
    let mut ident = String::new();
    let flush = |ident: &mut String, out: &mut String, replaced: &mut bool| {
        if ident.is_empty() {
            return;
        }
        match aliases.get(ident.as_str()) {
            Some(def) => {
                out.push('(');
                out.push_str(def);
                out.push(')');
                *replaced = true;
            }
            None => out.push_str(ident),
        }
        ident.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            // identifiers never start with a digit; numbers pass through untouched
            if ident.is_empty() && c.is_ascii_digit() {
                out.push(c);
            } else if !ident.is_empty() || !out.ends_with(|p: char| p.is_ascii_digit() || p == '.') {
                ident.push(c);
            } else {
                out.push(c);
            }
        } else {
            flush(&mut ident, &mut out, &mut replaced);
            out.push(c);
        }
    }
    flush(&mut ident, &mut out, &mut replaced);
    (out, replaced)
}
