//! Recursive-descent parser for the ASCII formula grammar:
//!
//! ```text
//! formula := quant* expr
//! quant   := ("forall" | "exists") var ("," var)* ":"
//! expr    := disj ("->" disj)?
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "~" unary | "(" formula ")" | atom
//! atom    := pred "(" term ("," term)* ")" | term "=" term | term "!=" term
//! ```

use super::{Formula, Term};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Upper(String),
    Lower(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    Eq,
    Neq,
    Dot,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Upper(s) | Tok::Lower(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`!=`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let (mut line, mut line_start) = (1usize, 0usize);
    while let Some(&(i, c)) = chars.peek() {
        let column = text[line_start..i].chars().count() + 1;
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, column });
        match c {
            '\n' => {
                chars.next();
                line += 1;
                line_start = i + 1;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            c if c.is_ascii_alphabetic() => {
                let mut ident = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        ident.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let tok = if c.is_ascii_uppercase() {
                    Tok::Upper(ident)
                } else {
                    Tok::Lower(ident)
                };
                push(&mut out, tok);
            }
            _ => {
                chars.next();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '~' => Tok::Tilde,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '=' => Tok::Eq,
                    '.' => Tok::Dot,
                    '-' if matches!(chars.peek(), Some(&(_, '>'))) => {
                        chars.next();
                        Tok::Arrow
                    }
                    '!' if matches!(chars.peek(), Some(&(_, '='))) => {
                        chars.next();
                        Tok::Neq
                    }
                    other => return Err(Error::syntax(line, column, format!("unexpected character `{other}`"))),
                };
                push(&mut out, tok);
            }
        }
    }
    let column = text[line_start..].chars().count() + 1;
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Spanned>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error_here(&self, message: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::syntax(t.line, t.column, message)
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {}, found {}", tok.describe(), self.peek().describe())))
        }
    }

    fn is_quantifier(&self) -> bool {
        matches!(self.peek(), Tok::Lower(s) if s == "forall" || s == "exists")
    }

    pub(crate) fn formula(&mut self) -> Result<Formula> {
        if self.is_quantifier() {
            let universal = matches!(self.next().tok, Tok::Lower(ref s) if s == "forall");
            let mut vars = vec![self.variable()?];
            while *self.peek() == Tok::Comma {
                self.next();
                vars.push(self.variable()?);
            }
            self.expect(Tok::Colon)?;
            let body = Box::new(self.formula()?);
            return Ok(if universal {
                Formula::Forall(vars, body)
            } else {
                Formula::Exists(vars, body)
            });
        }
        self.expr()
    }

    fn variable(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Upper(v) => {
                self.next();
                Ok(v)
            }
            other => Err(self.error_here(format!("expected a variable, found {}", other.describe()))),
        }
    }

    fn expr(&mut self) -> Result<Formula> {
        let lhs = self.disj()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.disj()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Pipe {
            self.next();
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Amp {
            self.next();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Tilde => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.is_quantifier() {
            return Err(self.error_here("a quantified formula must be parenthesized here"));
        }
        if let (Tok::Lower(name), Tok::LParen) = (self.peek().clone(), self.peek2()) {
            self.next();
            self.next();
            let args = self.term_list()?;
            self.expect(Tok::RParen)?;
            return Ok(Formula::Atom { pred: name, args });
        }
        let lhs = self.term()?;
        match self.peek() {
            Tok::Eq => {
                self.next();
                Ok(Formula::Eq(lhs, self.term()?))
            }
            Tok::Neq => {
                self.next();
                Ok(Formula::neq(lhs, self.term()?))
            }
            other => Err(self.error_here(format!("expected `=` or `!=` after a term, found {}", other.describe()))),
        }
    }

    pub(crate) fn term_list(&mut self) -> Result<Vec<Term>> {
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.next();
            args.push(self.term()?);
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Upper(v) => {
                self.next();
                Ok(Term::Var(v))
            }
            Tok::Lower(c) if c != "forall" && c != "exists" => {
                self.next();
                Ok(Term::Const(c))
            }
            other => Err(self.error_here(format!("expected a term, found {}", other.describe()))),
        }
    }
}

/// Parses a single formula. Trailing input is an error.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser::new(lex(text)?);
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek().describe())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_formulas() {
        let alpha = parse_formula("forall X, Y: ~fr(X,Y) | sm(Y)").unwrap();
        assert_eq!(
            alpha,
            Formula::forall(
                ["X", "Y"],
                Formula::Or(vec![
                    Formula::not(Formula::atom("fr", vec![Term::var("X"), Term::var("Y")])),
                    Formula::atom("sm", vec![Term::var("Y")]),
                ])
            )
        );
        let proper = parse_formula("forall X, Y: fr(X,Y) | X = Y").unwrap();
        assert_eq!(
            proper,
            Formula::forall(
                ["X", "Y"],
                Formula::Or(vec![
                    Formula::atom("fr", vec![Term::var("X"), Term::var("Y")]),
                    Formula::Eq(Term::var("X"), Term::var("Y")),
                ])
            )
        );
    }

    #[test]
    fn desugaring() {
        let f = parse_formula("r(X) -> g(X)").unwrap();
        assert_eq!(f, parse_formula("~r(X) | g(X)").unwrap());
        let f = parse_formula("X != Y").unwrap();
        assert_eq!(f, Formula::neq(Term::var("X"), Term::var("Y")));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("sm(alice") {
            Err(Error::Syntax { line: 1, column: 9, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_formula("forall X:\n  r(X) &") {
            Err(Error::Syntax { line: 2, column: 9, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("r(X) & forall Y: g(Y)").is_err());
        assert!(parse_formula("forall x: r(x)").is_err());
        assert!(parse_formula("r()").is_err());
        assert!(parse_formula("r(X) $ g(X)").is_err());
        assert!(parse_formula("a -> b -> c").is_err());
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn precedence() {
        let f = parse_formula("a(X) | b(X) & c(X)").unwrap();
        match f {
            Formula::Or(parts) => assert!(matches!(parts[1], Formula::And(_))),
            other => panic!("{other:?}"),
        }
        let f = parse_formula("~a(X) & b(X)").unwrap();
        assert!(matches!(f, Formula::And(_)));
    }
}
