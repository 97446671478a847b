//! Text formats: polynomial literals, declaration blocks and key-value reports.
//!
//! Polynomials follow `poly := term (('+'|'-') term)*` with integer or
//! rational coefficients; inside blocks the identifier `p` (when it is not a
//! declared variable) denotes the prime, so `1/p` and `p^2` are accepted.
//! Parentheses and products of sums are also accepted.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{self, Q};
use crate::base::BasePair;
use crate::error::{GlueError, Result};
use crate::ideal::{AffineAlgebra, PolyRing, Regime};
use crate::module::{ModuleGluingDatum, ModulePresentation};
use crate::poly::Poly;
use crate::precision::{Factor, TruncatedAlgebra};
use crate::triple::{AffineGluingTriple, DomainCondition};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 17] = ["->", "<=", "+", "-", "*", "/", "^", "(", ")", "[", "]", "{", "}", ";", ",", ":", "|"];

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, column) = (ln + 1, i + 1);
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Int(s.parse().expect("digits")), line, column });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line, column });
                continue;
            }
            let rest: String = chars[i..].iter().take(2).collect();
            let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                return Err(GlueError::Parse { line, column, message: format!("unexpected character '{c}'") });
            };
            i += sym.len();
            out.push(Token { tok: Tok::Sym(sym), line, column });
        }
    }
    let (line, column) = out.last().map_or((1, 1), |t| (t.line, t.column + 1));
    out.push(Token { tok: Tok::End, line, column });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    prime: Option<BigInt>,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0, prime: None })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let t = &self.toks[self.pos];
        Err(GlueError::Parse { line: t.line, column: t.column, message: message.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}'"))
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected '{w}'"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected a name"),
        }
    }

    fn nat(&mut self) -> Result<BigInt> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.err("expected a natural number"),
        }
    }

    fn small(&mut self) -> Result<u32> {
        let n = self.nat()?;
        u32::try_from(n).or_else(|_| self.err("number too large"))
    }

    fn end(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    /// `Zp(5)`, `Qt`, optionally followed by `[x, y]`.
    fn base(&mut self) -> Result<BasePair> {
        let name = self.ident()?;
        let text = if self.eat_sym("(") {
            let n = self.nat()?;
            self.expect_sym(")")?;
            format!("{name}({n})")
        } else {
            name
        };
        let b = BasePair::parse(&text).or_else(|e| self.err(e.to_string()))?;
        self.prime = b.prime().ok().cloned();
        Ok(b)
    }

    fn names(&mut self, stop: &[&str]) -> Result<Vec<String>> {
        let mut out = Vec::new();
        while !stop.iter().any(|s| self.is_sym(s)) {
            out.push(self.ident()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    fn poly(&mut self, vars: &[String]) -> Result<Poly> {
        let mut acc = if self.eat_sym("-") { -self.product(vars)? } else { self.product(vars)? };
        loop {
            if self.eat_sym("+") {
                acc = &acc + &self.product(vars)?;
            } else if self.eat_sym("-") {
                acc = &acc - &self.product(vars)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self, vars: &[String]) -> Result<Poly> {
        let mut acc = self.power(vars)?;
        loop {
            if self.eat_sym("*") {
                acc = &acc * &self.power(vars)?;
            } else if self.eat_sym("/") {
                let d = self.power(vars)?;
                if d.total_degree().unwrap_or(0) > 0 || d.is_zero() {
                    return self.err("division by a non-constant");
                }
                acc = acc.scale(&(Q::one() / d.constant_term()));
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self, vars: &[String]) -> Result<Poly> {
        let b = self.atom(vars)?;
        if self.eat_sym("^") {
            let e = self.small()?;
            return Ok(b.pow(e));
        }
        Ok(b)
    }

    fn atom(&mut self, vars: &[String]) -> Result<Poly> {
        let n = vars.len();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Poly::constant(n, arith::int(&v)))
            }
            Tok::Ident(name) => {
                if let Some(i) = vars.iter().position(|v| *v == name) {
                    self.bump();
                    return Ok(Poly::var(n, i));
                }
                if name == "p" {
                    if let Some(p) = self.prime.clone() {
                        self.bump();
                        return Ok(Poly::constant(n, arith::int(&p)));
                    }
                }
                self.err(format!("unknown variable '{name}'"))
            }
            Tok::Sym("(") => {
                self.bump();
                let f = self.poly(vars)?;
                self.expect_sym(")")?;
                Ok(f)
            }
            _ => self.err("expected a term"),
        }
    }

    fn poly_list(&mut self, vars: &[String], stop: &str) -> Result<Vec<Poly>> {
        let mut out = Vec::new();
        while !self.is_sym(stop) {
            out.push(self.poly(vars)?);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok(out)
    }

    fn column(&mut self, vars: &[String]) -> Result<Vec<Poly>> {
        self.expect_sym("[")?;
        let c = self.poly_list(vars, "]")?;
        self.expect_sym("]")?;
        Ok(c)
    }

    /// `factor NAME: vars a, b; rels f, g;` with the `rels` clause optional.
    fn factor(&mut self) -> Result<Factor> {
        self.expect_word("factor")?;
        let name = self.ident()?;
        self.expect_sym(":")?;
        self.expect_word("vars")?;
        let vars = self.names(&[";"])?;
        self.expect_sym(";")?;
        let rels = if self.is_word("rels") {
            self.bump();
            let r = self.poly_list(&vars, ";")?;
            self.expect_sym(";")?;
            r
        } else {
            vec![]
        };
        let refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
        Ok(Factor::new(&name, &refs, rels))
    }
}

/// Parses a polynomial literal in the given variables.
pub fn parse_poly(text: &str, vars: &[String]) -> Result<Poly> {
    let mut p = Parser::new(text)?;
    let f = p.poly(vars)?;
    p.end()?;
    Ok(f)
}

/// Parses a polynomial over a base pair, where `p` names the prime.
pub fn parse_poly_over(text: &str, base: &BasePair, vars: &[String]) -> Result<Poly> {
    let mut p = Parser::new(text)?;
    p.prime = base.prime().ok().cloned();
    let f = p.poly(vars)?;
    p.end()?;
    Ok(f)
}

/// `algebra B over Zp(5) prec 8 { factor d0: vars u; rels ; ... }`
pub fn parse_algebra(text: &str) -> Result<TruncatedAlgebra> {
    let mut p = Parser::new(text)?;
    p.expect_word("algebra")?;
    let name = p.ident()?;
    p.expect_word("over")?;
    let base = p.base()?;
    p.expect_word("prec")?;
    let prec = p.small()?;
    p.expect_sym("{")?;
    let mut factors = Vec::new();
    while p.is_word("factor") {
        factors.push(p.factor()?);
    }
    p.expect_sym("}")?;
    p.end()?;
    Ok(TruncatedAlgebra::new(&name, base, prec, factors))
}

/// `module M over Zp(5)[x] { gens 2; rel [x, -1]; rel [0, p^2]; }`
pub fn parse_module(text: &str) -> Result<ModulePresentation> {
    let mut p = Parser::new(text)?;
    p.expect_word("module")?;
    p.ident()?;
    p.expect_word("over")?;
    let (ring, vars) = ring_header(&mut p, Regime::OverR)?;
    p.expect_sym("{")?;
    let m = module_body(&mut p, ring, &vars)?;
    p.expect_sym("}")?;
    p.end()?;
    Ok(m)
}

fn ring_header(p: &mut Parser, regime: Regime) -> Result<(AffineAlgebra, Vec<String>)> {
    let base = p.base()?;
    let vars = if p.eat_sym("[") {
        let v = p.names(&["]"])?;
        p.expect_sym("]")?;
        v
    } else {
        vec![]
    };
    let rels = if p.is_word("rels") {
        p.bump();
        p.expect_sym("(")?;
        let r = p.poly_list(&vars, ")")?;
        p.expect_sym(")")?;
        r
    } else {
        vec![]
    };
    let ring = PolyRing::from_names(base, regime, vars.clone());
    Ok((AffineAlgebra::new(ring, rels)?, vars))
}

fn module_body(p: &mut Parser, ring: AffineAlgebra, vars: &[String]) -> Result<ModulePresentation> {
    p.expect_word("gens")?;
    let n = p.small()? as usize;
    p.expect_sym(";")?;
    let mut rels = Vec::new();
    while p.is_word("rel") {
        p.bump();
        let c = p.column(vars)?;
        if c.len() != n {
            return p.err(format!("relation has {} entries, expected {n}", c.len()));
        }
        rels.push(c);
        p.expect_sym(";")?;
    }
    ModulePresentation::new(ring, n, rels)
}

/// ```text
/// datum D over Zp(5)[x] prec 8 {
///   F { gens 1; }
///   N { gens 1; rel [p^2]; }
///   iota [1];
///   iota_inv [1];
/// }
/// ```
/// `iota` lists one column per generator of `N`, `iota_inv` one per generator of `F`.
pub fn parse_datum(text: &str) -> Result<ModuleGluingDatum> {
    let mut p = Parser::new(text)?;
    p.expect_word("datum")?;
    p.ident()?;
    p.expect_word("over")?;
    let (ring, vars) = ring_header(&mut p, Regime::OverR)?;
    p.expect_word("prec")?;
    let prec = p.small()?;
    p.expect_sym("{")?;
    p.expect_word("F")?;
    p.expect_sym("{")?;
    let f = module_body(&mut p, ring.in_regime(Regime::OverRInvPi)?, &vars)?;
    p.expect_sym("}")?;
    p.expect_word("N")?;
    p.expect_sym("{")?;
    let nmod = module_body(&mut p, ring, &vars)?.with_precision(prec);
    p.expect_sym("}")?;
    let mut iota = Vec::new();
    let mut iota_inv = Vec::new();
    loop {
        if p.is_word("iota") {
            p.bump();
            iota.push(p.column(&vars)?);
        } else if p.is_word("iota_inv") {
            p.bump();
            iota_inv.push(p.column(&vars)?);
        } else {
            break;
        }
        p.expect_sym(";")?;
    }
    p.expect_sym("}")?;
    p.end()?;
    if iota.len() != nmod.n_gens || iota_inv.len() != f.n_gens {
        return Err(GlueError::Invalid(format!(
            "iota needs {} columns and iota_inv {}, got {} and {}",
            nmod.n_gens,
            f.n_gens,
            iota.len(),
            iota_inv.len()
        )));
    }
    Ok(ModuleGluingDatum { f, nmod, iota, iota_inv, prec })
}

/// `triple T { base Zp(5); A vars x rels ; B { factor ...; }; j x -> (u | v + 1/p); domain |g| <= 1 on d0; }`
pub fn parse_triple(text: &str, prec: u32) -> Result<AffineGluingTriple> {
    let mut p = Parser::new(text)?;
    p.expect_word("triple")?;
    let name = p.ident()?;
    p.expect_sym("{")?;
    p.expect_word("base")?;
    let base = p.base()?;
    p.expect_sym(";")?;
    p.expect_word("A")?;
    p.expect_word("vars")?;
    let avars = p.names(&[";"])?;
    if p.eat_sym(";") && !p.is_word("rels") && !p.is_word("B") {
        return p.err("expected 'rels' or 'B'");
    }
    let arels = if p.is_word("rels") {
        p.bump();
        let r = p.poly_list(&avars, ";")?;
        p.expect_sym(";")?;
        r
    } else {
        vec![]
    };
    p.expect_word("B")?;
    p.expect_sym("{")?;
    let mut factors = Vec::new();
    while p.is_word("factor") {
        factors.push(p.factor()?);
    }
    p.expect_sym("}")?;
    p.expect_sym(";")?;
    let mut jstar: Vec<Vec<Option<Poly>>> = factors.iter().map(|_| vec![None; avars.len()]).collect();
    while p.is_word("j") {
        p.bump();
        let v = p.ident()?;
        let Some(i) = avars.iter().position(|a| *a == v) else {
            return p.err(format!("'{v}' is not a variable of A"));
        };
        p.expect_sym("->")?;
        p.expect_sym("(")?;
        for (f, fac) in factors.iter().enumerate() {
            if f > 0 {
                p.expect_sym("|")?;
            }
            jstar[f][i] = Some(p.poly(&fac.vars)?);
        }
        p.expect_sym(")")?;
        p.expect_sym(";")?;
    }
    let mut domain = Vec::new();
    if p.is_word("domain") {
        p.bump();
        loop {
            p.expect_sym("|")?;
            let g = p.poly(&avars)?;
            p.expect_sym("|")?;
            p.expect_sym("<=")?;
            if p.nat()? != BigInt::one() {
                return p.err("only |g| <= 1 is supported");
            }
            p.expect_word("on")?;
            let fname = p.ident()?;
            let Some(factor) = factors.iter().position(|f| f.name == fname) else {
                return p.err(format!("no factor named '{fname}'"));
            };
            domain.push(DomainCondition { factor, g });
            if !p.eat_sym(",") {
                break;
            }
        }
        p.expect_sym(";")?;
    }
    p.expect_sym("}")?;
    p.end()?;
    let jstar: Vec<Vec<Poly>> = jstar
        .into_iter()
        .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()
        .ok_or_else(|| GlueError::Invalid("every variable of A needs a 'j' clause".into()))?;
    for (f, row) in jstar.iter().enumerate() {
        for g in row {
            for (_, c) in g.terms() {
                let den = c.denom();
                let pr = base.prime()?;
                let mut d = den.clone();
                while (&d % pr).is_zero() {
                    d /= pr;
                }
                if !d.is_one() {
                    return Err(GlueError::Invalid(format!(
                        "image on {} has denominator {den}; only powers of p are allowed",
                        factors[f].name
                    )));
                }
            }
        }
    }
    let a = AffineAlgebra::new(PolyRing::from_names(base.clone(), Regime::OverRInvPi, avars), arels)?;
    let b = TruncatedAlgebra::new(&name, base, prec, factors);
    AffineGluingTriple::new(&name, a, Arc::new(b), jstar, domain)
}

/// A versioned, line-oriented `key: value` report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

pub const REPORT_VERSION: u32 = 1;

impl Report {
    pub fn new(kind: &str) -> Self {
        let mut r = Report::default();
        r.push("gluekit-report", REPORT_VERSION);
        r.push("kind", kind);
        r
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        // values stay on one line
        self.entries.push((key.into(), value.to_string().replace('\n', "; ")));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once(": ") else {
                return Err(GlueError::Parse { line: i + 1, column: 1, message: "expected 'key: value'".into() });
            };
            entries.push((k.to_string(), v.to_string()));
        }
        if entries.first().map(|(k, _)| k.as_str()) != Some("gluekit-report") {
            return Err(GlueError::Parse { line: 1, column: 1, message: "missing report header".into() });
        }
        Ok(Report { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn poly_literals() {
        let v = names(&["x", "y"]);
        let f = parse_poly("3/2*x^2*y - 5*x + 1", &v).unwrap();
        assert_eq!(f.coeff(&[2, 1]), Q::new(3.into(), 2.into()));
        assert_eq!(f.coeff(&[1, 0]), q(-5));
        assert_eq!(f.constant_term(), q(1));
        assert_eq!(f.display(&v), parse_poly(&f.display(&v), &v).unwrap().display(&v));
        match parse_poly("x + $", &v) {
            Err(GlueError::Parse { line: 1, column: 5, .. }) => {}
            e => panic!("{e:?}"),
        }
        assert!(parse_poly("x + z", &v).is_err());
    }

    #[test]
    fn blocks() {
        let b = parse_algebra("algebra B over Zp(5) prec 8 { factor disk0: vars u; rels ; factor disk1: vars v; rels ; }").unwrap();
        assert_eq!(b.factors.len(), 2);
        let m = parse_module("module M over Zp(5)[x] { gens 2; rel [x, -1]; rel [0, p^2]; }").unwrap();
        assert_eq!(m.relations[1][1], Poly::constant(1, q(25)));
        let t = parse_triple(
            "triple T { base Zp(5); A vars x rels ; B { factor d0: vars u; factor d1: vars v; }; j x -> (u | v + 1/p); domain |p*x| <= 1 on d0, |p*x - 1| <= 1 on d1; }",
            4,
        )
        .unwrap();
        assert_eq!(t.jstar[1][0], &Poly::var(1, 0) + &Poly::constant(1, Q::new(1.into(), 5.into())));
        assert_eq!(t.domain.len(), 2);
        match parse_module("module M over Zp(5)[x] {\n gens 2;\n rel [x];\n}") {
            Err(GlueError::Parse { line: 3, .. }) => {}
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn reports_round_trip() {
        let mut r = Report::new("demo");
        r.push("relations", "a\nb");
        let text = r.render();
        assert!(text.starts_with("gluekit-report: 1\n"));
        assert_eq!(Report::parse(&text).unwrap(), r);
    }
}
