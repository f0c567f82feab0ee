//! The session language: declarations, expressions, and canonical printing.
//!
//! A session is a `;`-terminated statement list with `#` line comments:
//!
//! ```text
//! indep x y;
//! function h1(x, u[x]);
//! constant a;
//! equation u[x,y] = 0 solve u[x,y];
//! bivector B1 = D[x](h1)/2 * p[x] + h1*p[x,x];
//! let s = u[x] + a*u[y];
//! instantiate h1 = u[x];
//! ```
//!
//! Expressions combine integers, rationals, jets `u[...]`/`p[...]`, symbol
//! derivatives `pd(f,k,...)` (1-based argument positions, one entry per
//! derivative), eagerly elaborated total derivatives `D[vars](expr)`, and
//! `+ − * / ^` with division restricted to nonzero rational constants and
//! exponents to nonnegative integer literals. Printing is canonical:
//! `parse(print(e))` returns `e` for every expression.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::atom::{Atom, FunSym};
use crate::multiindex::MultiIndex;
use crate::poly::{Bindings, DiffPoly};

/// A parse- or resolution-time diagnostic with its source position.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LangError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl fmt::Display for LangError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for LangError {}

fn err<T>(line: u32, col: u32, msg: impl Into<String>) -> Result<T, LangError> {
    Err(LangError {
        line,
        col,
        msg: msg.into(),
    })
}

const KEYWORDS: &[&str] = &[
    "indep",
    "function",
    "constant",
    "equation",
    "solve",
    "bivector",
    "let",
    "instantiate",
    "u",
    "p",
    "pd",
    "D",
];

// ---------------------------------------------------------------------------
// Lexing

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Int(String),
    Semi,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Equals,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::Equals => write!(f, "`=`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Lexed {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Lexed>, LangError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                bump(&mut chars);
                if c == '\n' {
                    break;
                }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Lexed {
                tok: Tok::Ident(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Lexed {
                tok: Tok::Int(s),
                line: tl,
                col: tc,
            });
            continue;
        }
        let tok = match c {
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '=' => Tok::Equals,
            other => return err(tl, tc, format!("unexpected character `{other}`")),
        };
        bump(&mut chars);
        out.push(Lexed { tok, line: tl, col: tc });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Session state

/// Everything a session file declares.
#[derive(Clone, Default, Debug)]
pub struct Session {
    pub var_names: Vec<String>,
    pub functions: BTreeMap<String, Arc<FunSym>>,
    pub constants: Vec<String>,
    pub lets: BTreeMap<String, DiffPoly>,
    pub bivectors: Vec<(String, DiffPoly)>,
    /// The single equation: left-minus-right expression and the optional
    /// derivative to solve for.
    pub equation: Option<(DiffPoly, Option<MultiIndex>)>,
    pub instantiations: Vec<(String, DiffPoly)>,
}

impl Session {
    pub fn parse(src: &str) -> Result<Session, LangError> {
        let mut s = Session::default();
        s.extend(src)?;
        Ok(s)
    }

    /// Parses further statements into an existing session (catalog files
    /// are fragments extending a base session this way).
    pub fn extend(&mut self, src: &str) -> Result<(), LangError> {
        let toks = lex(src)?;
        let mut p = Parser {
            toks,
            pos: 0,
            session: self,
        };
        while !p.at_end() {
            p.statement()?;
        }
        Ok(())
    }

    /// Parses a single expression against the session's declarations.
    pub fn parse_expression(&self, src: &str) -> Result<DiffPoly, LangError> {
        let toks = lex(src)?;
        // The parser only mutates the session in `statement`.
        let mut me = self.clone();
        let mut p = Parser {
            toks,
            pos: 0,
            session: &mut me,
        };
        let e = p.expr()?;
        if !p.at_end() {
            let t = p.toks[p.pos].clone();
            return err(t.line, t.col, format!("unexpected {} after expression", t.tok));
        }
        Ok(e)
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn bivector(&self, name: &str) -> Option<&DiffPoly> {
        self.bivectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
    }

    fn is_declared(&self, name: &str) -> bool {
        self.var_id(name).is_some()
            || self.functions.contains_key(name)
            || self.constants.iter().any(|c| c == name)
            || self.lets.contains_key(name)
            || self.bivectors.iter().any(|(n, _)| n == name)
    }

    /// Records `name := e`, to be applied by [`Session::bindings`]. The name
    /// must be a declared function symbol or constant.
    pub fn add_instantiation(&mut self, name: &str, e: DiffPoly) -> Result<(), String> {
        if self.functions.contains_key(name) || self.constants.iter().any(|c| c == name) {
            self.instantiations.push((name.to_string(), e));
            Ok(())
        } else {
            Err(format!("`{name}` is not a function symbol or constant"))
        }
    }

    /// The substitution induced by all recorded instantiations.
    pub fn bindings(&self) -> Result<Bindings, String> {
        let mut b = Bindings::new();
        for (name, e) in &self.instantiations {
            if let Some(sym) = self.functions.get(name) {
                b.bind_function(sym, e.clone()).map_err(|e| e.to_string())?;
            } else {
                b.bind_atom(Atom::Const(name.as_str().into()), e.clone())
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(b)
    }

    /// A named expression with every instantiation applied.
    pub fn resolved(&self, e: &DiffPoly) -> Result<DiffPoly, String> {
        if self.instantiations.is_empty() {
            return Ok(e.clone());
        }
        Ok(e.substitute(&self.bindings()?))
    }
}

// ---------------------------------------------------------------------------
// Parsing

struct Parser<'s> {
    toks: Vec<Lexed>,
    pos: usize,
    session: &'s mut Session,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn here(&self) -> (u32, u32) {
        if let Some(t) = self.toks.get(self.pos) {
            (t.line, t.col)
        } else if let Some(t) = self.toks.last() {
            (t.line, t.col + 1)
        } else {
            (1, 1)
        }
    }

    fn next(&mut self) -> Result<Lexed, LangError> {
        let (l, c) = self.here();
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or(LangError {
                line: l,
                col: c,
                msg: "unexpected end of input".into(),
            })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), LangError> {
        let t = self.next()?;
        if t.tok == tok {
            Ok(())
        } else {
            err(t.line, t.col, format!("expected {tok}, found {}", t.tok))
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), LangError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            other => err(t.line, t.col, format!("expected an identifier, found {other}")),
        }
    }

    fn declare(&mut self, name: &str, line: u32, col: u32) -> Result<(), LangError> {
        if KEYWORDS.contains(&name) {
            return err(line, col, format!("`{name}` is reserved"));
        }
        if self.session.is_declared(name) {
            return err(line, col, format!("`{name}` is already declared"));
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), LangError> {
        let (kw, line, col) = self.ident()?;
        match kw.as_str() {
            "indep" => {
                while !self.eat(Tok::Semi) {
                    let (name, l, c) = self.ident()?;
                    self.declare(&name, l, c)?;
                    self.session.var_names.push(name);
                }
                Ok(())
            }
            "function" => {
                let (name, l, c) = self.ident()?;
                self.declare(&name, l, c)?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                loop {
                    let t = self.next()?;
                    match t.tok {
                        Tok::Ident(a) if a == "u" => {
                            args.push(Atom::JetU(self.jet_index()?));
                        }
                        Tok::Ident(a) => match self.session.var_id(&a) {
                            Some(v) => args.push(Atom::Indep(v)),
                            None => {
                                return err(
                                    t.line,
                                    t.col,
                                    format!("`{a}` is not an independent variable"),
                                )
                            }
                        },
                        other => {
                            return err(
                                t.line,
                                t.col,
                                format!("expected a symbol argument, found {other}"),
                            )
                        }
                    }
                    if !self.eat(Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                self.session
                    .functions
                    .insert(name.clone(), FunSym::new(&name, args));
                Ok(())
            }
            "constant" => {
                let (name, l, c) = self.ident()?;
                self.declare(&name, l, c)?;
                self.expect(Tok::Semi)?;
                self.session.constants.push(name);
                Ok(())
            }
            "equation" => {
                if self.session.equation.is_some() {
                    return err(line, col, "a session holds a single equation");
                }
                let lhs = self.expr()?;
                self.expect(Tok::Equals)?;
                let rhs = self.expr()?;
                let lead = if matches!(self.peek(), Some(Tok::Ident(s)) if s == "solve") {
                    self.pos += 1;
                    let (u, l, c) = self.ident()?;
                    if u != "u" {
                        return err(l, c, "solve expects a derivative of the form u[...]");
                    }
                    Some(self.jet_index()?)
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                self.session.equation = Some((lhs.sub(&rhs), lead));
                Ok(())
            }
            "bivector" => {
                let (name, l, c) = self.ident()?;
                self.declare(&name, l, c)?;
                self.expect(Tok::Equals)?;
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                self.session.bivectors.push((name, e));
                Ok(())
            }
            "let" => {
                let (name, l, c) = self.ident()?;
                self.declare(&name, l, c)?;
                self.expect(Tok::Equals)?;
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                self.session.lets.insert(name, e);
                Ok(())
            }
            "instantiate" => {
                let (name, l, c) = self.ident()?;
                self.expect(Tok::Equals)?;
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                self.session
                    .add_instantiation(&name, e)
                    .map_err(|msg| LangError { line: l, col: c, msg })?;
                Ok(())
            }
            other => err(line, col, format!("unknown statement `{other}`")),
        }
    }

    /// `[` var (`,` var)* `]` or `[]`, as a derivative multi-index.
    fn jet_index(&mut self) -> Result<MultiIndex, LangError> {
        self.expect(Tok::LBracket)?;
        let mut idx = MultiIndex::zero();
        if self.eat(Tok::RBracket) {
            return Ok(idx);
        }
        loop {
            let (name, l, c) = self.ident()?;
            match self.session.var_id(&name) {
                Some(v) => idx = idx.bump(v),
                None => return err(l, c, format!("`{name}` is not an independent variable")),
            }
            if self.eat(Tok::RBracket) {
                return Ok(idx);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn expr(&mut self) -> Result<DiffPoly, LangError> {
        let mut e = self.term()?;
        loop {
            if self.eat(Tok::Plus) {
                e = e.add(&self.term()?);
            } else if self.eat(Tok::Minus) {
                e = e.sub(&self.term()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<DiffPoly, LangError> {
        let mut e = self.unary()?;
        loop {
            if self.eat(Tok::Star) {
                e = e.mul(&self.unary()?);
            } else if self.eat(Tok::Slash) {
                let (l, c) = self.here();
                let d = self.unary()?;
                match d.rational_value() {
                    Some(v) if !v.is_zero() => {
                        e = e.scale(&(BigRational::one() / v));
                    }
                    _ => {
                        return err(l, c, "division is only by nonzero rational constants")
                    }
                }
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<DiffPoly, LangError> {
        if self.eat(Tok::Minus) {
            Ok(self.unary()?.neg())
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<DiffPoly, LangError> {
        let base = self.primary()?;
        if !self.eat(Tok::Caret) {
            return Ok(base);
        }
        let t = self.next()?;
        match t.tok {
            Tok::Int(digits) => {
                let k: u32 = digits.parse().map_err(|_| LangError {
                    line: t.line,
                    col: t.col,
                    msg: "exponent out of range".into(),
                })?;
                Ok(base.pow(k))
            }
            other => err(
                t.line,
                t.col,
                format!("exponent must be a nonnegative integer literal, found {other}"),
            ),
        }
    }

    fn primary(&mut self) -> Result<DiffPoly, LangError> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(digits) => {
                let n: num_bigint::BigInt = digits.parse().expect("lexer emits digits");
                Ok(DiffPoly::constant(BigRational::from_integer(n)))
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "u" => Ok(DiffPoly::jet_u(self.jet_index()?)),
                "p" => Ok(DiffPoly::jet_p(self.jet_index()?)),
                "pd" => self.symbol_derivative(t.line, t.col),
                "D" => {
                    let idx = self.jet_index()?;
                    self.expect(Tok::LParen)?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(e.total_derivative_multi(&idx))
                }
                _ => {
                    if let Some(e) = self.session.lets.get(&name) {
                        Ok(e.clone())
                    } else if let Some(e) = self.session.bivector(&name) {
                        Ok(e.clone())
                    } else if let Some(sym) = self.session.functions.get(&name) {
                        Ok(DiffPoly::atom(Atom::fun(sym)))
                    } else if self.session.constants.iter().any(|c| c == &name) {
                        Ok(DiffPoly::atom(Atom::Const(name.as_str().into())))
                    } else if self.session.var_id(&name).is_some() {
                        Ok(DiffPoly::var(self.session.var_id(&name).unwrap()))
                    } else {
                        err(t.line, t.col, format!("`{name}` is not declared"))
                    }
                }
            },
            other => err(t.line, t.col, format!("expected an expression, found {other}")),
        }
    }

    /// `pd(f, k, ...)`: one 1-based argument index per derivative.
    fn symbol_derivative(&mut self, line: u32, col: u32) -> Result<DiffPoly, LangError> {
        self.expect(Tok::LParen)?;
        let (fname, fl, fc) = self.ident()?;
        let Some(sym) = self.session.functions.get(&fname).cloned() else {
            return err(fl, fc, format!("`{fname}` is not a function symbol"));
        };
        let mut partials = vec![0u8; sym.args.len()];
        let mut any = false;
        while self.eat(Tok::Comma) {
            let t = self.next()?;
            match t.tok {
                Tok::Int(digits) => {
                    let k: usize = digits.parse().unwrap_or(0);
                    if k == 0 || k > sym.args.len() {
                        return err(
                            t.line,
                            t.col,
                            format!("`{fname}` has arguments 1..={}", sym.args.len()),
                        );
                    }
                    partials[k - 1] += 1;
                    any = true;
                }
                other => {
                    return err(t.line, t.col, format!("expected an argument index, found {other}"))
                }
            }
        }
        self.expect(Tok::RParen)?;
        if !any {
            return err(line, col, "pd needs at least one argument index");
        }
        while partials.last() == Some(&0) {
            partials.pop();
        }
        Ok(DiffPoly::atom(Atom::FunDeriv { sym, partials }))
    }
}

// ---------------------------------------------------------------------------
// Canonical printing

fn render_atom(a: &Atom, session: &Session) -> String {
    match a {
        Atom::Indep(v) => session.var_names[*v].clone(),
        Atom::Const(name) => name.to_string(),
        Atom::JetU(s) => format!("u[{}]", s.render(&session.var_names)),
        Atom::JetP(s) => format!("p[{}]", s.render(&session.var_names)),
        Atom::Tag(s) => format!("@F[{}]", s.render(&session.var_names)),
        Atom::FunDeriv { sym, partials } => {
            if partials.is_empty() {
                sym.name.to_string()
            } else {
                let mut idx = Vec::new();
                for (j, k) in partials.iter().enumerate() {
                    for _ in 0..*k {
                        idx.push((j + 1).to_string());
                    }
                }
                format!("pd({},{})", sym.name, idx.join(","))
            }
        }
    }
}

/// Deterministic canonical rendering: terms sorted by odd degree
/// descending, then by the canonical monomial order; within a term the
/// coefficient comes first and factors follow the atom order.
pub fn print_canonical(e: &DiffPoly, session: &Session) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut terms: Vec<_> = e.terms().collect();
    terms.sort_by(|(m1, _), (m2, _)| {
        m2.p_degree()
            .cmp(&m1.p_degree())
            .then_with(|| m1.cmp(m2))
    });
    let mut out = String::new();
    for (i, (mono, coeff)) in terms.into_iter().enumerate() {
        let neg = coeff.is_negative();
        if i == 0 {
            if neg {
                out.push_str("- ");
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mag = coeff.abs();
        let mut factors = Vec::new();
        for (a, k) in &mono.evens {
            let base = render_atom(a, session);
            factors.push(if *k > 1 { format!("{base}^{k}") } else { base });
        }
        for a in &mono.odds {
            factors.push(render_atom(a, session));
        }
        if factors.is_empty() {
            out.push_str(&mag.to_string());
        } else {
            if !mag.is_one() {
                out.push_str(&mag.to_string());
                out.push('*');
            }
            out.push_str(&factors.join("*"));
        }
    }
    out
}
