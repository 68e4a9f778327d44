//! Formula grammar, loosest first:
//!
//! ```text
//! formula := ("forall" | "exists") ident ("," ident)* "." formula
//!          | disj ("->" formula)?
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "~" unary | quantified formula | "(" formula ")"
//!          | "true" | "false" | ident ("(" ident ("," ident)* ")")?
//! ```

use thiserror::Error;

use super::Formula;
use crate::syntax::{Atom, Signature, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("column {col}: {msg}")]
    Syntax { col: usize, msg: String },
    #[error("column {col}: unknown predicate `{name}`")]
    UnknownPredicate { col: usize, name: String },
    #[error("column {col}: `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        col: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Arrow,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let col = pos + 1;
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '~' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1).map(|p| p.1) == Some('>') {
            out.push((Tok::Arrow, col));
            i += 2;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_' || chars[i].1 == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().map(|p| p.1).collect();
            out.push((Tok::Ident(word), col));
        } else {
            return Err(FormulaError::Syntax {
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, text.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    /// Predicates declared by first use, when inferring.
    learned: Option<Signature>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            col: self.col(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FormulaError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_keyword(&w) => {
                self.bump();
                Ok(w)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        if let Some(q) = self.quantifier() {
            return q;
        }
        let lhs = self.disj()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn quantifier(&mut self) -> Option<Result<Formula, FormulaError>> {
        let universal = match self.peek() {
            Tok::Ident(w) if w == "forall" => true,
            Tok::Ident(w) if w == "exists" => false,
            _ => return None,
        };
        self.bump();
        Some((|| {
            let mut vars = vec![self.ident()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                vars.push(self.ident()?);
            }
            self.expect(Tok::Dot, "`.` after the quantified variables")?;
            let body = self.formula()?;
            Ok(vars.into_iter().rev().fold(body, |acc, x| {
                if universal {
                    Formula::Forall(Var::new(x), Box::new(acc))
                } else {
                    Formula::Exists(Var::new(x), Box::new(acc))
                }
            }))
        })())
    }

    fn disj(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.conj()?;
        while *self.peek() == Tok::Or {
            self.bump();
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        if let Some(q) = self.quantifier() {
            return q;
        }
        let col = self.col();
        match self.bump() {
            Tok::Not => Ok(Formula::not(self.unary()?)),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(w) if w == "true" => Ok(Formula::Top),
            Tok::Ident(w) if w == "false" => Ok(Formula::Bottom),
            Tok::Ident(name) if !is_keyword(&name) => {
                let mut args = Vec::new();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    args.push(Var::new(self.ident()?));
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(Var::new(self.ident()?));
                    }
                    self.expect(Tok::RParen, "`)` after the arguments")?;
                }
                let known = self
                    .sig
                    .arity(&name)
                    .or_else(|| self.learned.as_ref().and_then(|l| l.arity(&name)));
                if let (None, Some(l)) = (known, self.learned.as_mut()) {
                    l.insert(&name, args.len());
                    return Ok(Formula::Atom(Atom::new(&name, args)));
                }
                match known {
                    None => Err(FormulaError::UnknownPredicate { col, name }),
                    Some(n) if n != args.len() => Err(FormulaError::Arity {
                        col,
                        name,
                        expected: n,
                        found: args.len(),
                    }),
                    Some(_) => Ok(Formula::Atom(Atom::new(&name, args))),
                }
            }
            _ => Err(FormulaError::Syntax {
                col,
                msg: "expected a formula".into(),
            }),
        }
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(w, "forall" | "exists" | "true" | "false")
}

/// Parses a formula; every predicate must be declared in `sig` with the
/// arity used.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig,
        learned: None,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected input after the formula");
    }
    Ok(f)
}

/// Parses a formula, declaring each predicate missing from `base` with the
/// arity of its first occurrence. Returns `base` extended by them.
pub fn parse_formula_inferring(text: &str, base: &Signature) -> Result<(Formula, Signature), FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        sig: base,
        learned: Some(Signature::new()),
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return p.err("unexpected input after the formula");
    }
    let mut sig = base.clone();
    for (name, arity) in p.learned.take().unwrap_or_default().iter() {
        sig.insert(name, arity);
    }
    Ok((f, sig))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::from_pairs([("a", 0), ("b", 0), ("c", 0), ("p", 1), ("r", 2)])
    }

    fn f(t: &str) -> Formula {
        parse_formula(t, &sig()).unwrap()
    }

    #[test]
    fn precedence() {
        let (a, b, c) = (Formula::atom("a", &[]), Formula::atom("b", &[]), Formula::atom("c", &[]));
        assert_eq!(f("a -> b -> c"), Formula::implies(a.clone(), Formula::implies(b.clone(), c.clone())));
        assert_eq!(f("a | b & c"), Formula::or(a.clone(), Formula::and(b.clone(), c.clone())));
        assert_eq!(f("~a & b"), Formula::and(Formula::not(a.clone()), b.clone()));
        assert_eq!(f("a | b -> c"), Formula::implies(Formula::or(a.clone(), b.clone()), c.clone()));
    }

    #[test]
    fn quantifiers_extend_right() {
        assert_eq!(
            f("forall x, y. r(x, y) -> a"),
            Formula::forall(
                "x",
                Formula::forall("y", Formula::implies(Formula::atom("r", &["x", "y"]), Formula::atom("a", &[])))
            )
        );
        assert_eq!(
            f("a & exists x. p(x)"),
            Formula::and(Formula::atom("a", &[]), Formula::exists("x", Formula::atom("p", &["x"])))
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_formula("q", &sig()), Err(FormulaError::UnknownPredicate { col: 1, .. })));
        assert!(matches!(parse_formula("a & p", &sig()), Err(FormulaError::Arity { col: 5, .. })));
        assert!(matches!(parse_formula("a &", &sig()), Err(FormulaError::Syntax { .. })));
        assert!(matches!(parse_formula("(a", &sig()), Err(FormulaError::Syntax { .. })));
        assert!(matches!(parse_formula("a $ b", &sig()), Err(FormulaError::Syntax { col: 3, .. })));
        assert!(matches!(parse_formula("", &sig()), Err(FormulaError::Syntax { .. })));
    }

    #[test]
    fn inferring() {
        let (phi, s) = parse_formula_inferring("forall x. r(x, y) -> c", &Signature::new()).unwrap();
        assert_eq!(s.arity("r"), Some(2));
        assert_eq!(s.arity("c"), Some(0));
        assert_eq!(phi.to_string(), "forall x. r(x, y) -> c");
        assert!(matches!(
            parse_formula_inferring("c & c(x)", &Signature::new()),
            Err(FormulaError::Arity { .. })
        ));
    }
}
