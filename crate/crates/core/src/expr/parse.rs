//! Recursive-descent parser for the inequality language.
//!
//! ```text
//! system  := (decl | formula)*
//! decl    := "var" NAME "in" "[" bound "," bound "]" ";"
//! bound   := ["-"] decimal | ["-"] "inf"
//! formula := expr ("<=" | ">=" | "=") expr ";"
//! ```
//!
//! Precedence from tightest: unary minus, `^2`, `* /`, `+ -`. Chains of the
//! same level are nested to the right with the operator inverted where
//! needed, so `a - b + c` reads as `a - (b - c)`.

use crate::error::ParseError;
use crate::expr::{AtomicFormula, BinaryOp, Constant, System, Term, UnaryOp};
use crate::interval::{Interval, IntervalBox};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(String),
    Name(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = [
    "<=", ">=", "=", "+", "-", "*", "/", "^", "(", ")", "[", "]", ",", ";",
];

const KEYWORDS: [&str; 3] = ["var", "in", "inf"];

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            if lit.matches('.').count() > 1 {
                return Err(syntax(line, col, format!("malformed number `{lit}`")));
            }
            Tok::Num(lit)
        } else if c.is_alphabetic() {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Name(chars[start..i].iter().collect())
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    Tok::Sym(s)
                }
                None => return Err(syntax(line, col, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token { tok, line, col });
        col += i - start;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        let found = match &t.tok {
            Tok::Num(s) | Tok::Name(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        syntax(t.line, t.col, format!("{}, found {found}", message.into()))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek().tok, Tok::Sym(t) if t == s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{s}`")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == kw)
    }

    fn system(&mut self) -> Result<System, ParseError> {
        let mut declarations = IntervalBox::new();
        let mut formulas = Vec::new();
        while self.peek().tok != Tok::Eof {
            if self.is_keyword("var") {
                self.declaration(&mut declarations)?;
            } else {
                formulas.extend(self.formula()?);
            }
        }
        Ok(System::new(declarations, formulas))
    }

    fn declaration(&mut self, decls: &mut IntervalBox) -> Result<(), ParseError> {
        self.bump();
        let at = self.peek().clone();
        let name = match &at.tok {
            Tok::Name(n) if !is_reserved(n) => n.clone(),
            _ => return Err(self.error_here("expected a variable name")),
        };
        self.bump();
        if !self.is_keyword("in") {
            return Err(self.error_here("expected `in`"));
        }
        self.bump();
        self.expect_sym("[")?;
        let lo = self.bound()?.0;
        self.expect_sym(",")?;
        let hi = self.bound()?.1;
        self.expect_sym("]")?;
        self.expect_sym(";")?;
        if decls.contains_var(&name) {
            return Err(ParseError::DuplicateDeclaration {
                line: at.line,
                col: at.col,
                name,
            });
        }
        let domain = Interval::new(lo, hi).map_err(|_| ParseError::EmptyDomain {
            line: at.line,
            col: at.col,
            name: name.clone(),
        })?;
        decls.insert(name, domain);
        Ok(())
    }

    /// Lower and upper enclosing doubles of a possibly negated bound.
    fn bound(&mut self) -> Result<(f64, f64), ParseError> {
        let negative = self.eat_sym("-");
        let (lo, hi) = match self.peek().tok.clone() {
            Tok::Name(n) if n == "inf" => (f64::INFINITY, f64::INFINITY),
            Tok::Num(lit) => match Constant::parse(&lit) {
                Some(c) => c.enclosure().bounds().expect("non-empty"),
                None => return Err(self.error_here("malformed number")),
            },
            _ => return Err(self.error_here("expected a bound")),
        };
        self.bump();
        Ok(if negative { (-hi, -lo) } else { (lo, hi) })
    }

    fn formula(&mut self) -> Result<Vec<AtomicFormula>, ParseError> {
        let lhs = self.expr()?;
        let rel = match self.peek().tok {
            Tok::Sym(s @ ("<=" | ">=" | "=")) => s,
            _ => return Err(self.error_here("expected `<=`, `>=` or `=`")),
        };
        self.bump();
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        Ok(match rel {
            "<=" => vec![AtomicFormula::le(lhs, rhs)],
            ">=" => vec![AtomicFormula::le(rhs, lhs)],
            _ => vec![
                AtomicFormula::le(lhs.clone(), rhs.clone()),
                AtomicFormula::le(rhs, lhs),
            ],
        })
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        self.chain(&[("+", BinaryOp::Add), ("-", BinaryOp::Sub)], Self::product)
    }

    fn product(&mut self) -> Result<Term, ParseError> {
        self.chain(&[("*", BinaryOp::Mul), ("/", BinaryOp::Div)], Self::power)
    }

    fn chain(
        &mut self,
        ops: &[(&str, BinaryOp)],
        operand: fn(&mut Self) -> Result<Term, ParseError>,
    ) -> Result<Term, ParseError> {
        let first = operand(self)?;
        let mut rest = Vec::new();
        'outer: loop {
            for (sym, op) in ops {
                if self.eat_sym(sym) {
                    rest.push((*op, operand(self)?));
                    continue 'outer;
                }
            }
            break;
        }
        Ok(nest_right(first, rest))
    }

    fn power(&mut self) -> Result<Term, ParseError> {
        let mut base = self.unary()?;
        while let Tok::Sym("^") = self.peek().tok {
            let at = self.bump();
            match self.peek().tok.clone() {
                Tok::Num(lit) if lit == "2" => {
                    self.bump();
                    base = Term::sq(base);
                }
                _ => {
                    return Err(ParseError::Exponent {
                        line: at.line,
                        col: at.col,
                    })
                }
            }
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Term, ParseError> {
        if self.eat_sym("-") {
            return Ok(Term::neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let at = self.peek().clone();
        match at.tok {
            Tok::Num(lit) => {
                self.bump();
                Constant::parse(&lit)
                    .map(Term::Const)
                    .ok_or_else(|| syntax(at.line, at.col, format!("malformed number `{lit}`")))
            }
            Tok::Name(name) if *self.peek_at(1) == Tok::Sym("(") => {
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        self.expect_sym(",")?;
                    }
                }
                if name != "sin" {
                    return Err(ParseError::UnknownSymbol {
                        line: at.line,
                        col: at.col,
                        name,
                    });
                }
                if args.len() != 1 {
                    return Err(ParseError::Arity {
                        line: at.line,
                        col: at.col,
                        symbol: name,
                        expected: 1,
                        found: args.len(),
                    });
                }
                Ok(Term::unary(UnaryOp::Sin, args.pop().expect("one argument")))
            }
            Tok::Name(name) if !is_reserved(&name) => {
                self.bump();
                Ok(Term::Var(name))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.expr()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            _ => Err(self.error_here("expected an expression")),
        }
    }
}

fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name) || name == "sin"
}

fn nest_right(first: Term, rest: Vec<(BinaryOp, Term)>) -> Term {
    let mut rest = rest.into_iter();
    let Some((op, second)) = rest.next() else {
        return first;
    };
    let tail: Vec<_> = rest
        .map(|(o, t)| (if matches!(op, BinaryOp::Sub | BinaryOp::Div) { o.inverse() } else { o }, t))
        .collect();
    Term::binary(op, first, nest_right(second, tail))
}

pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    p.system()
}

/// Parses a single expression.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let t = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here("expected end of expression"));
    }
    Ok(t)
}
