//! Concrete syntax for bouquets.
//!
//! ```text
//! bouquet := flower ("," flower)* | ε
//! flower  := atom | "[" garden "|>" petals "]"
//! petals  := garden (";" garden)* | ε
//! garden  := (varlist ".")? bouquet | "."
//! varlist := ident ("," ident)*
//! atom    := ident ("(" varlist ")")?
//! ```
//!
//! `[a |>]` has no petals; a single empty petal is written `[a |> .]`. The
//! printer writes every empty petal as `.` so output is never ambiguous.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{canonicalize, Atom, Bloom, Bouquet, Flower, Garden, Var};

/// Predicate symbols and their arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    arities: BTreeMap<Arc<str>, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("line {line}: expected `name arity`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: `{name}` declared twice with different arities")]
    Conflict { line: usize, name: String },
}

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        let mut s = Signature::new();
        for (name, arity) in pairs {
            s.insert(name, arity);
        }
        s
    }

    pub fn insert(&mut self, name: &str, arity: usize) {
        self.arities.insert(Arc::from(name), arity);
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.arities.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.arities.iter().map(|(k, v)| (&**k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.arities.is_empty()
    }

    /// Adds every symbol of `other`; fails if an arity disagrees.
    pub fn merge(&mut self, other: &Signature) -> Result<(), SignatureError> {
        for (name, arity) in other.iter() {
            match self.arity(name) {
                Some(a) if a != arity => {
                    return Err(SignatureError::Conflict {
                        line: 0,
                        name: name.to_string(),
                    })
                }
                _ => self.insert(name, arity),
            }
        }
        Ok(())
    }

    /// Parses a signature file: one `name arity` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self, SignatureError> {
        let mut s = Signature::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let (name, arity) = match parts.as_slice() {
                [name, arity] if is_ident(name) => match arity.parse::<usize>() {
                    Ok(a) => (*name, a),
                    Err(_) => return Err(malformed(i, raw)),
                },
                _ => return Err(malformed(i, raw)),
            };
            s.add_checked(name, arity, i + 1)?;
        }
        Ok(s)
    }

    /// Parses the compact form `p/1 q/2`.
    pub fn parse_compact(text: &str) -> Result<Self, SignatureError> {
        let mut s = Signature::new();
        for item in text.split_whitespace() {
            let Some((name, arity)) = item.split_once('/') else {
                return Err(malformed(0, item));
            };
            let arity = arity.parse::<usize>().map_err(|_| malformed(0, item))?;
            if !is_ident(name) {
                return Err(malformed(0, item));
            }
            s.add_checked(name, arity, 1)?;
        }
        Ok(s)
    }

    fn add_checked(&mut self, name: &str, arity: usize, line: usize) -> Result<(), SignatureError> {
        if let Some(a) = self.arity(name) {
            if a != arity {
                return Err(SignatureError::Conflict {
                    line,
                    name: name.to_string(),
                });
            }
        }
        self.insert(name, arity);
        Ok(())
    }

    /// The compact form accepted by [`Signature::parse_compact`].
    pub fn to_compact(&self) -> String {
        self.iter()
            .map(|(n, a)| format!("{n}/{a}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The symbols occurring in `flowers`, with the arity of their first
    /// occurrence.
    pub fn of_flowers(flowers: &[Flower]) -> Self {
        fn go(fs: &[Flower], sig: &mut Signature) {
            for f in fs {
                match f {
                    Flower::Atom(a) => {
                        if sig.arity(&a.pred).is_none() {
                            sig.insert(&a.pred, a.args.len());
                        }
                    }
                    Flower::Bloom(b) => {
                        go(&b.pistil.flowers, sig);
                        for p in &b.petals {
                            go(&p.flowers, sig);
                        }
                    }
                }
            }
        }
        let mut sig = Signature::new();
        go(flowers, &mut sig);
        sig
    }

    /// The file form accepted by [`Signature::parse`].
    pub fn to_file(&self) -> String {
        self.iter().map(|(n, a)| format!("{n} {a}\n")).collect()
    }
}

fn malformed(i: usize, raw: &str) -> SignatureError {
    SignatureError::Malformed {
        line: i + 1,
        text: raw.trim().to_string(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown predicate `{name}`")]
    UnknownPredicate { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownPredicate { line, col, .. }
            | ParseError::Arity { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrack,
    RBrack,
    Turn,
    Comma,
    Semi,
    Dot,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Turn => f.write_str("`|>`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |tok: Tok, out: &mut Vec<Lexed>| out.push(Lexed { tok, line: l0, col: c0 });
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '[' => push(Tok::LBrack, &mut out),
            ']' => push(Tok::RBrack, &mut out),
            ',' => push(Tok::Comma, &mut out),
            ';' => push(Tok::Semi, &mut out),
            '.' => push(Tok::Dot, &mut out),
            '(' => push(Tok::LParen, &mut out),
            ')' => push(Tok::RParen, &mut out),
            '|' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Turn, &mut out);
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Ident(word), &mut out);
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<Lexed>,
    pos: usize,
    sig: &'s Signature,
    /// Predicates declared by first use, when inferring.
    learned: Option<Signature>,
}

impl<'s> Parser<'s> {
    fn new(text: &str, sig: &'s Signature) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            sig,
            learned: None,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn error(&self, msg: String) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax { line, col, msg }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}, found {}", self.peek())))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.peek())))
        }
    }

    fn starts_flower(&self) -> bool {
        matches!(self.peek(), Tok::LBrack | Tok::Ident(_))
    }

    fn bouquet(&mut self) -> Result<Vec<Flower>, ParseError> {
        let mut out = Vec::new();
        if !self.starts_flower() {
            return Ok(out);
        }
        out.push(self.flower()?);
        while *self.peek() == Tok::Comma {
            self.pos += 1;
            out.push(self.flower()?);
        }
        Ok(out)
    }

    fn flower(&mut self) -> Result<Flower, ParseError> {
        match self.peek().clone() {
            Tok::LBrack => {
                self.pos += 1;
                let pistil = self.garden()?;
                self.expect(Tok::Turn)?;
                let petals = self.petals()?;
                self.expect(Tok::RBrack)?;
                Ok(Flower::Bloom(Bloom { pistil, petals }))
            }
            Tok::Ident(name) => {
                let (line, col) = self.here();
                self.pos += 1;
                let args = if *self.peek() == Tok::LParen {
                    self.pos += 1;
                    let vs = self.varlist()?;
                    self.expect(Tok::RParen)?;
                    vs
                } else {
                    Vec::new()
                };
                let known = self
                    .sig
                    .arity(&name)
                    .or_else(|| self.learned.as_ref().and_then(|l| l.arity(&name)));
                if let (None, Some(l)) = (known, self.learned.as_mut()) {
                    l.insert(&name, args.len());
                    return Ok(Flower::Atom(Atom::new(name, args)));
                }
                match known {
                    None => Err(ParseError::UnknownPredicate { line, col, name }),
                    Some(expected) if expected != args.len() => Err(ParseError::Arity {
                        line,
                        col,
                        name,
                        expected,
                        found: args.len(),
                    }),
                    Some(_) => Ok(Flower::Atom(Atom::new(name, args))),
                }
            }
            other => Err(self.error(format!("expected a flower, found {other}"))),
        }
    }

    fn varlist(&mut self) -> Result<Vec<Var>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    self.pos += 1;
                    out.push(Var::new(name));
                }
                other => return Err(self.error(format!("expected a variable, found {other}"))),
            }
            if *self.peek() != Tok::Comma {
                return Ok(out);
            }
            self.pos += 1;
        }
    }

    /// True if the tokens ahead read `ident ("," ident)* "."`.
    fn at_varlist(&self) -> bool {
        let mut k = 0;
        loop {
            if !matches!(self.peek_at(k), Tok::Ident(_)) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Dot => return true,
                Tok::Comma => k += 2,
                _ => return false,
            }
        }
    }

    fn garden(&mut self) -> Result<Garden, ParseError> {
        if *self.peek() == Tok::Dot {
            self.pos += 1;
            return Ok(Garden::default());
        }
        let binders = if self.at_varlist() {
            let vs = self.varlist()?;
            self.expect(Tok::Dot)?;
            vs
        } else {
            Vec::new()
        };
        let flowers = self.bouquet()?;
        Ok(Garden { binders, flowers })
    }

    fn petals(&mut self) -> Result<Vec<Garden>, ParseError> {
        if *self.peek() == Tok::RBrack {
            return Ok(Vec::new());
        }
        let mut out = vec![self.garden()?];
        while *self.peek() == Tok::Semi {
            self.pos += 1;
            out.push(self.garden()?);
        }
        Ok(out)
    }
}

/// Parses and canonicalizes a bouquet.
pub fn parse_bouquet(text: &str, sig: &Signature) -> Result<Bouquet, ParseError> {
    Ok(canonicalize(&parse_bouquet_raw(text, sig)?))
}

/// Parses a bouquet keeping the written order and binder names.
pub fn parse_bouquet_raw(text: &str, sig: &Signature) -> Result<Bouquet, ParseError> {
    let mut p = Parser::new(text, sig)?;
    let flowers = p.bouquet()?;
    p.finish()?;
    Ok(Bouquet::new(flowers))
}

/// Parses and canonicalizes a bouquet, declaring each predicate missing
/// from `base` with the arity of its first occurrence. Returns `base`
/// extended by the predicates used.
pub fn parse_bouquet_inferring(text: &str, base: &Signature) -> Result<(Bouquet, Signature), ParseError> {
    let mut p = Parser::new(text, base)?;
    p.learned = Some(Signature::new());
    let flowers = p.bouquet()?;
    p.finish()?;
    let mut sig = base.clone();
    for (name, arity) in p.learned.take().unwrap_or_default().iter() {
        sig.insert(name, arity);
    }
    Ok((canonicalize(&Bouquet::new(flowers)), sig))
}

pub fn parse_flower(text: &str, sig: &Signature) -> Result<Flower, ParseError> {
    let mut p = Parser::new(text, sig)?;
    let f = p.flower()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_garden(text: &str, sig: &Signature) -> Result<Garden, ParseError> {
    let mut p = Parser::new(text, sig)?;
    let g = p.garden()?;
    p.finish()?;
    Ok(g)
}

/// Parses `garden (";" garden)*`; blank text is no petals.
pub fn parse_petals(text: &str, sig: &Signature) -> Result<Vec<Garden>, ParseError> {
    let mut p = Parser::new(text, sig)?;
    if *p.peek() == Tok::Eof {
        return Ok(Vec::new());
    }
    let mut out = vec![p.garden()?];
    while *p.peek() == Tok::Semi {
        p.pos += 1;
        out.push(p.garden()?);
    }
    p.finish()?;
    Ok(out)
}

pub fn print_bouquet(b: &Bouquet) -> String {
    let mut out = String::new();
    write_flowers(&b.flowers, &mut out);
    out
}

pub fn print_flower(f: &Flower) -> String {
    let mut out = String::new();
    write_flower(f, &mut out);
    out
}

/// Prints a garden; an empty garden prints as `.`.
pub fn print_garden(g: &Garden) -> String {
    if g.is_empty() {
        return ".".to_string();
    }
    let mut out = String::new();
    write_garden(g, &mut out);
    out
}

pub fn print_petals(petals: &[Garden]) -> String {
    petals.iter().map(print_garden).collect::<Vec<_>>().join(" ; ")
}

fn write_flowers(fs: &[Flower], out: &mut String) {
    for (i, f) in fs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_flower(f, out);
    }
}

fn write_flower(f: &Flower, out: &mut String) {
    match f {
        Flower::Atom(a) => {
            out.push_str(&a.pred);
            if !a.args.is_empty() {
                out.push('(');
                write_vars(&a.args, out);
                out.push(')');
            }
        }
        Flower::Bloom(b) => {
            out.push('[');
            write_garden(&b.pistil, out);
            out.push_str(if b.pistil.is_empty() { "|>" } else { " |>" });
            for (i, p) in b.petals.iter().enumerate() {
                out.push_str(if i == 0 { " " } else { " ; " });
                if p.is_empty() {
                    out.push('.');
                } else {
                    write_garden(p, out);
                }
            }
            out.push(']');
        }
    }
}

fn write_vars(vs: &[Var], out: &mut String) {
    for (i, v) in vs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(v.name());
    }
}

fn write_garden(g: &Garden, out: &mut String) {
    if !g.binders.is_empty() {
        write_vars(&g.binders, out);
        out.push('.');
        if !g.flowers.is_empty() {
            out.push(' ');
        }
    }
    write_flowers(&g.flowers, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::from_pairs([("p", 1), ("q", 1), ("a", 0), ("s", 2)])
    }

    #[test]
    fn grammar_walk_of_nested_flower() {
        let f = parse_flower("[x. |> [p(x) |>] ; q(x)]", &sig()).unwrap();
        let x = Var::new("x");
        let expected = Flower::bloom(
            Garden::new(vec![x.clone()], vec![]),
            vec![
                Garden::of(vec![Flower::bloom(
                    Garden::of(vec![Flower::atom("p", &["x"])]),
                    vec![],
                )]),
                Garden::of(vec![Flower::atom("q", &["x"])]),
            ],
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn empty_text_is_empty_bouquet() {
        assert_eq!(parse_bouquet("", &sig()).unwrap(), Bouquet::empty());
        assert_eq!(parse_bouquet("  \n ", &sig()).unwrap(), Bouquet::empty());
    }

    #[test]
    fn empty_petal_versus_no_petals() {
        let none = parse_flower("[a |>]", &sig()).unwrap();
        let one = parse_flower("[a |> .]", &sig()).unwrap();
        assert_eq!(none.as_bloom().unwrap().petals.len(), 0);
        assert_eq!(one.as_bloom().unwrap().petals, vec![Garden::default()]);
        assert_eq!(print_flower(&one), "[a |> .]");
        let two = parse_flower("[a |> ; ]", &sig()).unwrap();
        assert_eq!(two.as_bloom().unwrap().petals.len(), 2);
        assert_eq!(print_flower(&two), "[a |> . ; .]");
    }

    #[test]
    fn empty_pistil_prints_blank() {
        let f = parse_flower("[|> a]", &sig()).unwrap();
        assert_eq!(print_flower(&f), "[|> a]");
        assert_eq!(print_flower(&parse_flower("[|>]", &sig()).unwrap()), "[|>]");
    }

    #[test]
    fn binders_without_flowers() {
        let f = parse_flower("[x, y. |> z.]", &sig()).unwrap();
        assert_eq!(print_flower(&f), "[x, y. |> z.]");
    }

    #[test]
    fn unknown_predicate_and_arity_are_errors() {
        assert!(matches!(
            parse_bouquet("r(x)", &sig()),
            Err(ParseError::UnknownPredicate { line: 1, col: 1, .. })
        ));
        assert!(matches!(
            parse_bouquet("a, p(x, y)", &sig()),
            Err(ParseError::Arity { expected: 1, found: 2, col: 4, .. })
        ));
    }

    #[test]
    fn syntax_error_reports_line_and_column() {
        let err = parse_bouquet("[a |>\n  p(x]", &sig()).unwrap_err();
        assert_eq!(err.position(), (2, 6));
        assert!(parse_bouquet("a a", &sig()).is_err());
        assert!(parse_bouquet("$", &sig()).is_err());
    }

    #[test]
    fn nullary_atom_followed_by_dot_is_a_binder() {
        let f = parse_flower("[a. s(a, a) |>]", &sig()).unwrap();
        assert_eq!(f.as_bloom().unwrap().pistil.binders, vec![Var::new("a")]);
    }

    #[test]
    fn primes_are_identifier_characters() {
        let b = parse_bouquet("p(x'), [x''. q(x'') |>]", &sig()).unwrap();
        assert_eq!(print_bouquet(&b), "p(x'), [x''. q(x'') |>]");
    }

    #[test]
    fn signature_file_and_compact_forms() {
        let s = Signature::parse("# preds\np 1\n\nq 2 # binary\n").unwrap();
        assert_eq!(s.arity("q"), Some(2));
        assert_eq!(Signature::parse_compact(&s.to_compact()).unwrap(), s);
        assert_eq!(Signature::parse(&s.to_file()).unwrap(), s);
        assert!(matches!(
            Signature::parse("p 1\np 2"),
            Err(SignatureError::Conflict { line: 2, .. })
        ));
        assert!(Signature::parse("p one").is_err());
        assert!(Signature::parse_compact("p-1").is_err());
    }

    #[test]
    fn parse_petals_splits_on_semicolons() {
        let ps = parse_petals("x. p(x) ; . ; a", &sig()).unwrap();
        assert_eq!(ps.len(), 3);
        assert!(ps[1].is_empty());
        assert_eq!(print_petals(&ps), "x. p(x) ; . ; a");
        assert!(parse_petals("", &sig()).unwrap().is_empty());
    }

    #[test]
    fn inferring_declares_first_use() {
        let (b, s) = parse_bouquet_inferring("[x. r(x, x) |> c]", &Signature::new()).unwrap();
        assert_eq!(s.arity("r"), Some(2));
        assert_eq!(s.arity("c"), Some(0));
        assert_eq!(b.to_string(), "[x. r(x, x) |> c]");
        assert!(matches!(
            parse_bouquet_inferring("r(x), r", &Signature::new()),
            Err(ParseError::Arity { expected: 1, found: 0, .. })
        ));
        let base = Signature::from_pairs([("r", 2)]);
        assert!(parse_bouquet_inferring("r(x)", &base).is_err());
    }
}
