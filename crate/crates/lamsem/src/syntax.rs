//! Term syntax: named lambda-terms with integer constants, a nameless
//! (de Bruijn) variant, parsing and canonical printing, capture-avoiding
//! substitution of closed terms, and the CPS term classifier.
//!
//! Concrete grammar:
//!
//! ```text
//! term := ident | int | "\" ident "." term | term term | "(" term ")" | "@" macro
//! ```
//!
//! Application is left-associative and a lambda body extends maximally to
//! the right. Macros (`@delta`, `@omega`, `@Omega`, `@Y`, `@F`) are expanded
//! during parsing.
//!
//! Subterms are reference-counted and widely shared: cloning a term is
//! cheap, and substitution reuses every branch it does not rewrite. Long
//! reduction sequences of growing terms stay affordable because successive
//! reducts share almost all of their structure.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// Named call-by-value lambda-terms with integer constants.
#[derive(Debug, Clone)]
pub enum Term {
    Var(Arc<str>),
    Const(i64),
    Abs(Arc<str>, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::Const(a), Term::Const(b)) => a == b,
            (Term::Abs(x, a), Term::Abs(y, b)) => x == y && (Arc::ptr_eq(a, b) || a == b),
            (Term::App(f, a), Term::App(g, b)) => {
                (Arc::ptr_eq(f, g) || f == g) && (Arc::ptr_eq(a, b) || a == b)
            }
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Term {
    pub fn var(name: impl Into<Arc<str>>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(c: i64) -> Term {
        Term::Const(c)
    }

    pub fn abs(param: impl Into<Arc<str>>, body: Term) -> Term {
        Term::Abs(param.into(), Arc::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Arc::new(fun), Arc::new(arg))
    }

    /// Values are constants and abstractions.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Const(_) | Term::Abs(_, _))
    }

    /// Number of applications along the leftmost spine:
    /// `|a1 a2| = |a1| + 1`, zero on variables, constants and abstractions.
    pub fn left_app_height(&self) -> usize {
        match self {
            Term::App(fun, _) => fun.left_app_height() + 1,
            _ => 0,
        }
    }

    /// Atoms are variables, constants and abstractions whose body is a CPS term.
    pub fn is_atom(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => true,
            Term::Abs(_, body) => body.is_cps(),
            Term::App(_, _) => false,
        }
    }

    /// CPS terms: an atom, or a CPS term applied to an atom.
    pub fn is_cps(&self) -> bool {
        match self {
            Term::App(fun, arg) => fun.is_cps() && arg.is_atom(),
            _ => self.is_atom(),
        }
    }

    pub fn is_closed(&self) -> bool {
        first_free_var(self).is_none()
    }

    /// Node count, used by the generators for size budgets.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Abs(_, body) => 1 + body.size(),
            Term::App(fun, arg) => 1 + fun.size() + arg.size(),
        }
    }
}

/// First free variable of `t` in left-to-right order, if any.
pub fn first_free_var(t: &Term) -> Option<String> {
    fn walk<'a>(t: &'a Term, scope: &mut Vec<&'a str>) -> Option<String> {
        match t {
            Term::Var(x) => {
                if scope.iter().any(|b| *b == x.as_ref()) {
                    None
                } else {
                    Some(x.to_string())
                }
            }
            Term::Const(_) => None,
            Term::Abs(x, body) => {
                scope.push(x);
                let r = walk(body, scope);
                scope.pop();
                r
            }
            Term::App(fun, arg) => walk(fun, scope).or_else(|| walk(arg, scope)),
        }
    }
    walk(t, &mut Vec::new())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("substitution requires a closed replacement term, but `{replacement}` has free variable `{free}`")]
pub struct OpenReplacement {
    pub replacement: String,
    pub free: String,
}

/// Substitution `a[x <- b]` of a closed term `b` for all free occurrences of
/// `x` in `a`. Restricting `b` to closed terms keeps the operation
/// capture-avoiding without alpha-renaming.
pub fn subst(a: &Term, x: &str, b: &Term) -> Result<Term, OpenReplacement> {
    if let Some(free) = first_free_var(b) {
        return Err(OpenReplacement {
            replacement: b.to_string(),
            free,
        });
    }
    Ok(subst_closed(a, x, b))
}

/// Substitution worker; callers guarantee that `b` is closed.
pub(crate) fn subst_closed(a: &Term, x: &str, b: &Term) -> Term {
    let b = Arc::new(b.clone());
    match subst_node(a, x, &b) {
        Some(t) => t,
        None => a.clone(),
    }
}

/// Returns `None` when `a` contains no free `x`, so unchanged subtrees are
/// shared rather than copied.
fn subst_arc(a: &Arc<Term>, x: &str, b: &Arc<Term>) -> Option<Arc<Term>> {
    subst_node(a, x, b).map(Arc::new)
}

fn subst_node(a: &Term, x: &str, b: &Arc<Term>) -> Option<Term> {
    match a {
        Term::Var(y) => {
            if y.as_ref() == x {
                Some((**b).clone())
            } else {
                None
            }
        }
        Term::Const(_) => None,
        Term::Abs(y, body) => {
            if y.as_ref() == x {
                None
            } else {
                subst_arc(body, x, b).map(|nb| Term::Abs(y.clone(), nb))
            }
        }
        Term::App(fun, arg) => {
            let nf = subst_arc(fun, x, b);
            let na = subst_arc(arg, x, b);
            if nf.is_none() && na.is_none() {
                None
            } else {
                Some(Term::App(
                    nf.unwrap_or_else(|| fun.clone()),
                    na.unwrap_or_else(|| arg.clone()),
                ))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical printing
// ---------------------------------------------------------------------------

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(self, f)
    }
}

fn write_term(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(x) => write!(f, "{x}"),
        Term::Const(c) => write!(f, "{c}"),
        Term::Abs(x, body) => {
            write!(f, "\\{x}. ")?;
            write_term(body, f)
        }
        Term::App(fun, arg) => {
            write_fun(fun, f)?;
            write!(f, " ")?;
            write_arg(arg, f)
        }
    }
}

fn write_fun(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Abs(_, _) => {
            write!(f, "(")?;
            write_term(t, f)?;
            write!(f, ")")
        }
        _ => write_term(t, f),
    }
}

fn write_arg(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(_) | Term::Const(_) => write_term(t, f),
        _ => {
            write!(f, "(")?;
            write_term(t, f)?;
            write!(f, ")")
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    Ident(String),
    Int(i64),
    Macro(String),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '\\' => {
                toks.push((Tok::Lambda, i));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, i));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            '@' => {
                let start = i;
                i += 1;
                let name_start = i;
                while i < bytes.len() && is_ident_char(bytes[i] as char) {
                    i += 1;
                }
                if i == name_start {
                    return Err(ParseError {
                        offset: start,
                        message: "expected macro name after `@`".into(),
                    });
                }
                toks.push((Tok::Macro(src[name_start..i].to_string()), start));
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = src[start..i].parse().map_err(|_| ParseError {
                    offset: start,
                    message: "integer constant out of range".into(),
                })?;
                toks.push((Tok::Int(n), start));
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < bytes.len() && is_ident_char(bytes[i] as char) {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            other => {
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(toks)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a (Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a (Tok, usize)> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.here(),
            message: message.into(),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if let Some((Tok::Lambda, _)) = self.peek() {
            self.next();
            let name = match self.next() {
                Some((Tok::Ident(x), _)) => x.clone(),
                _ => return Err(self.err("expected identifier after `\\`")),
            };
            match self.next() {
                Some((Tok::Dot, _)) => {}
                _ => return Err(self.err("expected `.` after lambda binder")),
            }
            let body = self.term()?;
            Ok(Term::abs(name, body))
        } else {
            self.application()
        }
    }

    fn application(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?.ok_or_else(|| self.err("expected a term"))?;
        while let Some(next) = self.atom()? {
            t = Term::app(t, next);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Option<Term>, ParseError> {
        match self.peek() {
            Some((Tok::Ident(x), _)) => {
                let t = Term::var(x.clone());
                self.next();
                Ok(Some(t))
            }
            Some((Tok::Int(n), _)) => {
                let t = Term::constant(*n);
                self.next();
                Ok(Some(t))
            }
            Some((Tok::Macro(name), off)) => {
                let t = lookup_macro(name).cloned().ok_or(ParseError {
                    offset: *off,
                    message: format!("unknown macro `@{name}`"),
                })?;
                self.next();
                Ok(Some(t))
            }
            Some((Tok::LParen, _)) => {
                self.next();
                let t = self.term()?;
                match self.next() {
                    Some((Tok::RParen, _)) => Ok(Some(t)),
                    _ => Err(self.err("expected `)`")),
                }
            }
            _ => Ok(None),
        }
    }
}

/// Parse a term from its concrete syntax, expanding macros.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: src.len(),
    };
    let t = p.term()?;
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Builtin named terms
// ---------------------------------------------------------------------------

/// Fixed table of builtin named terms, usable in source as `@name`.
pub type MacroTable = BTreeMap<&'static str, Term>;

static MACROS: OnceLock<MacroTable> = OnceLock::new();

/// The macro table: `delta`, `omega`, `Omega`, `Y`, `F`.
pub fn macro_table() -> &'static MacroTable {
    MACROS.get_or_init(|| {
        let delta = parse("\\x. x x").expect("delta");
        let omega = Term::app(delta.clone(), delta.clone());
        let big_omega = Term::abs("x", omega.clone());
        let y = parse("\\f. (\\x. f (x x)) (\\x. f (\\y. (x x) y))").expect("Y");
        let f = parse("\\f. \\x. (\\g. \\y. g y) (f x)").expect("F");
        let mut m = BTreeMap::new();
        m.insert("delta", delta);
        m.insert("omega", omega);
        m.insert("Omega", big_omega);
        m.insert("Y", y);
        m.insert("F", f);
        m
    })
}

pub fn lookup_macro(name: &str) -> Option<&'static Term> {
    macro_table().get(name)
}

// ---------------------------------------------------------------------------
// De Bruijn terms
// ---------------------------------------------------------------------------

/// Nameless terms; index 0 refers to the innermost enclosing binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DbTerm {
    Var(usize),
    Const(i64),
    Abs(Box<DbTerm>),
    App(Box<DbTerm>, Box<DbTerm>),
}

impl DbTerm {
    pub fn abs(body: DbTerm) -> DbTerm {
        DbTerm::Abs(Box::new(body))
    }

    pub fn app(fun: DbTerm, arg: DbTerm) -> DbTerm {
        DbTerm::App(Box::new(fun), Box::new(arg))
    }
}

impl fmt::Display for DbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DbTerm::Var(n) => write!(f, "#{n}"),
            DbTerm::Const(c) => write!(f, "{c}"),
            DbTerm::Abs(body) => write!(f, "\\. {body}"),
            DbTerm::App(fun, arg) => {
                match **fun {
                    DbTerm::Abs(_) => write!(f, "({fun})")?,
                    _ => write!(f, "{fun}")?,
                }
                write!(f, " ")?;
                match **arg {
                    DbTerm::Var(_) | DbTerm::Const(_) => write!(f, "{arg}"),
                    _ => write!(f, "({arg})"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term is not closed: free variable `{0}`")]
pub struct FreeVariable(pub String);

/// Convert a closed named term to de Bruijn form.
pub fn to_debruijn(t: &Term) -> Result<DbTerm, FreeVariable> {
    fn walk<'a>(t: &'a Term, scope: &mut Vec<&'a str>) -> Result<DbTerm, FreeVariable> {
        match t {
            Term::Var(x) => scope
                .iter()
                .rev()
                .position(|b| *b == x.as_ref())
                .map(DbTerm::Var)
                .ok_or_else(|| FreeVariable(x.to_string())),
            Term::Const(c) => Ok(DbTerm::Const(*c)),
            Term::Abs(x, body) => {
                scope.push(x);
                let b = walk(body, scope);
                scope.pop();
                Ok(DbTerm::abs(b?))
            }
            Term::App(fun, arg) => Ok(DbTerm::app(walk(fun, scope)?, walk(arg, scope)?)),
        }
    }
    walk(t, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Term {
        parse(src).unwrap()
    }

    #[test]
    fn parse_lambda_and_self_application() {
        assert_eq!(
            p("\\x. x x"),
            Term::abs("x", Term::app(Term::var("x"), Term::var("x")))
        );
    }

    #[test]
    fn parse_omega_macro() {
        let delta = p("\\x. x x");
        assert_eq!(p("@omega"), Term::app(delta.clone(), delta));
    }

    #[test]
    fn application_is_left_associative() {
        assert_eq!(
            p("f x y"),
            Term::app(Term::app(Term::var("f"), Term::var("x")), Term::var("y"))
        );
    }

    #[test]
    fn lambda_body_extends_right() {
        assert_eq!(p("\\x. x x x"), p("\\x. ((x x) x)"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("\\x").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse("x )").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(parse("@nosuch").unwrap_err().message.contains("nosuch"));
    }

    #[test]
    fn print_is_canonical() {
        assert_eq!(p("@omega").to_string(), "(\\x. x x) (\\x. x x)");
        assert_eq!(p("f x y").to_string(), "f x y");
        assert_eq!(p("f (x y)").to_string(), "f (x y)");
        assert_eq!(p("\\x. \\y. x").to_string(), "\\x. \\y. x");
    }

    #[test]
    fn subst_examples() {
        let delta = lookup_macro("delta").unwrap();
        let omega = lookup_macro("omega").unwrap();
        assert_eq!(&subst(&p("x x"), "x", delta).unwrap(), omega);
        assert_eq!(subst(&p("\\x. x"), "x", &p("0")).unwrap(), p("\\x. x"));
        assert_eq!(subst(&p("y"), "x", &p("0")).unwrap(), p("y"));
    }

    #[test]
    fn subst_rejects_open_replacement() {
        let err = subst(&p("x"), "x", &p("y z")).unwrap_err();
        assert_eq!(err.free, "y");
    }

    #[test]
    fn subst_preserves_sharing_of_untouched_branches() {
        let big = p("\\u. u u u");
        let t = Term::app(Term::var("x"), big.clone());
        let r = subst(&t, "x", &p("0")).unwrap();
        assert_eq!(r, Term::app(p("0"), big));
        let (Term::App(_, old_arg), Term::App(_, new_arg)) = (&t, &r) else {
            panic!("applications expected");
        };
        assert!(Arc::ptr_eq(old_arg, new_arg));
    }

    #[test]
    fn value_predicate() {
        assert!(p("\\x. x").is_value());
        assert!(p("0").is_value());
        assert!(!p("0 0").is_value());
        assert!(!p("x").is_value());
    }

    #[test]
    fn debruijn_conversion() {
        assert_eq!(
            to_debruijn(&p("\\x. \\y. x")).unwrap(),
            DbTerm::abs(DbTerm::abs(DbTerm::Var(1)))
        );
        assert_eq!(
            to_debruijn(&p("@delta")).unwrap(),
            DbTerm::abs(DbTerm::app(DbTerm::Var(0), DbTerm::Var(0)))
        );
        assert_eq!(to_debruijn(&p("z")), Err(FreeVariable("z".into())));
    }

    #[test]
    fn left_app_height_examples() {
        assert_eq!(p("@delta").left_app_height(), 0);
        assert_eq!(p("@omega").left_app_height(), 1);
        assert_eq!(p("@omega (0 0)").left_app_height(), 2);
    }

    #[test]
    fn cps_classifier() {
        assert!(p("@omega").is_cps());
        assert!(!p("@omega (0 0)").is_cps());
        assert!(p("\\x. x x").is_cps());
        assert!(p("x").is_atom());
        assert!(!p("x x").is_atom());
    }

    #[test]
    fn macros_match_their_definitions() {
        let m = macro_table();
        assert_eq!(m["omega"], Term::app(m["delta"].clone(), m["delta"].clone()));
        assert_eq!(m["Omega"], Term::abs("x", m["omega"].clone()));
        assert_eq!(
            m["Y"].to_string(),
            "\\f. (\\x. f (x x)) (\\x. f (\\y. x x y))"
        );
        assert_eq!(m["F"].to_string(), "\\f. \\x. (\\g. \\y. g y) (f x)");
        for t in m.values() {
            assert!(t.is_closed());
        }
    }
}
