//! A minimal expression grammar for user-defined problem data.
//!
//! Grammar: float literals; variables `t`, `x`, `r`, `c`; named constants
//! `lambda`, `R`, `mu`, `omega`; binary `+ - * / ^` with standard precedence
//! (`^` right-associative and tightest, then unary minus, then `* /`, then
//! `+ -`); functions `sqrt`, `exp`, `log` (natural), `abs`, `pow(a, b)`,
//! `sigma(t)` (the kernel mass numerator for the configured (μ, ω)), and
//! `ml(mu, nu, x)`.
//!
//! Parse errors carry a byte offset and the token set that would have been
//! accepted. Evaluation is total on the declared domain; outside it (square
//! root of a negative, log of a non-positive, division by zero, non-finite
//! overflow, …) it returns a domain-fault diagnostic quoting the offending
//! subexpression.

use std::fmt;
use std::sync::Arc;

use fbvp_core::green::Kernel;
use fbvp_core::specfun::{mittag_leffler, EvalPolicy, MLIndex};

/// Variables that may appear in an expression; which ones are actually bound
/// depends on the slot (`q(t)`, `u(x)`, `v(x)`, `gamma(r)`, `f(t,x)`).
pub const VARIABLES: [&str; 4] = ["t", "x", "r", "c"];
/// Named constants bound from the configuration.
pub const CONSTANTS: [&str; 4] = ["lambda", "R", "mu", "omega"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    /// Binding strength; unary minus sits at 3, between `* /` and `^`.
    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Abs,
    Pow,
    Sigma,
    Ml,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Sigma => "sigma",
            Func::Ml => "ml",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Sqrt | Func::Exp | Func::Log | Func::Abs | Func::Sigma => 1,
            Func::Pow => 2,
            Func::Ml => 3,
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "sigma" => Func::Sigma,
            "ml" => Func::Ml,
            _ => return None,
        })
    }
}

/// Parsed syntax tree. `Ident` covers both variables and named constants;
/// binding happens at evaluation time against the slot's environment.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("domain fault in '{subexpr}': {message}")]
pub struct EvalError {
    /// Pretty-printed offending subexpression.
    pub subexpr: String,
    pub message: String,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                toks.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                toks.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                if bytes.get(i + 1) == Some(&b'*') {
                    return Err(ParseError {
                        offset: i,
                        message: "'**' is not an operator; exponentiation is '^'".into(),
                    });
                }
                toks.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                toks.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    // otherwise the 'e' belongs to a following identifier;
                    // leave it for the next token.
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| ParseError {
                    offset: start,
                    message: format!("invalid number literal '{text}'"),
                })?;
                toks.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    offset: i,
                    message: format!(
                        "unexpected character '{}'",
                        src[i..].chars().next().unwrap()
                    ),
                });
            }
        }
    }
    toks.push((Tok::End, src.len()));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser (precedence climbing)
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const OPERAND_EXPECTED: &str = "a number, an identifier, '(', or unary '-'";

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: &Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError {
                offset: self.offset(),
                message: format!("unexpected {}; expected {expected}", self.peek().describe()),
            })
        }
    }

    fn parse_binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            if op.prec() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_binary(op.prec() + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Tok::Minus) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_primary()?;
        if matches!(self.peek(), Tok::Caret) {
            self.bump();
            // Right-associative; the exponent may itself be unary-negated.
            let exponent = self.parse_unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.parse_binary(0)?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(&Tok::LParen, &format!("'(' after function '{name}'"))?;
                    let mut args = vec![self.parse_binary(0)?];
                    while matches!(self.peek(), Tok::Comma) {
                        self.bump();
                        args.push(self.parse_binary(0)?);
                    }
                    self.expect(&Tok::RParen, "')' or ','")?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            offset,
                            message: format!(
                                "{name} expects {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else if VARIABLES.contains(&name.as_str()) || CONSTANTS.contains(&name.as_str()) {
                    Ok(Expr::Ident(name))
                } else {
                    Err(ParseError {
                        offset,
                        message: format!(
                            "unknown identifier '{name}'; expected one of: {}, {}, or a \
                             function ({})",
                            VARIABLES.join(", "),
                            CONSTANTS.join(", "),
                            ["sqrt", "exp", "log", "abs", "pow", "sigma", "ml"].join(", ")
                        ),
                    })
                }
            }
            other => Err(ParseError {
                offset,
                message: format!(
                    "unexpected {}; expected {OPERAND_EXPECTED}",
                    other.describe()
                ),
            }),
        }
    }
}

/// Parse `src` into a syntax tree.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let expr = parser.parse_binary(0)?;
    if !matches!(parser.peek(), Tok::End) {
        return Err(ParseError {
            offset: parser.offset(),
            message: format!(
                "unexpected {} after a complete expression; expected an operator \
                 ('+', '-', '*', '/', '^') or end of input",
                parser.peek().describe()
            ),
        });
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Pretty-printer (round-trips: re-parsing the output yields the same tree)
// ---------------------------------------------------------------------------

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Ident(_) | Expr::Call(..) => 5,
            Expr::Neg(_) => 3,
            Expr::Bin(op, ..) => op.prec(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(out: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(out, "({e})")
            } else {
                write!(out, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(out, "{v}"),
            Expr::Ident(name) => write!(out, "{name}"),
            Expr::Neg(inner) => {
                write!(out, "-")?;
                child(out, inner, inner.prec() < 3)
            }
            Expr::Bin(op, lhs, rhs) => {
                let p = op.prec();
                // Left-associative ops keep a same-precedence right child in
                // parens (a-(b-c) ≠ a-b-c); right-associative '^' mirrors
                // that on the left.
                let (lp, rp) = if *op == BinOp::Pow {
                    (lhs.prec() <= p, rhs.prec() < p)
                } else {
                    (lhs.prec() < p, rhs.prec() <= p)
                };
                child(out, lhs, lp)?;
                write!(out, "{}", op.symbol())?;
                child(out, rhs, rp)
            }
            Expr::Call(func, args) => {
                write!(out, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(out, ",")?;
                    }
                    write!(out, "{a}")?;
                }
                write!(out, ")")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Binding environment for one evaluation: slot variables, configuration
/// constants, and the kernel that backs `sigma(·)`.
pub struct Env<'a> {
    pub vars: &'a [(&'a str, f64)],
    pub consts: &'a [(&'a str, f64)],
    pub kernel: Option<&'a Arc<Kernel>>,
}

impl Expr {
    /// Every identifier appearing in the tree, in first-appearance order.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn walk<'e>(e: &'e Expr, out: &mut Vec<&'e str>) {
            match e {
                Expr::Num(_) => {}
                Expr::Ident(name) => {
                    if !out.contains(&name.as_str()) {
                        out.push(name);
                    }
                }
                Expr::Neg(inner) => walk(inner, out),
                Expr::Bin(_, lhs, rhs) => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
                Expr::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        walk(self, &mut out);
        out
    }

    fn fault(&self, message: impl Into<String>) -> EvalError {
        EvalError {
            subexpr: self.to_string(),
            message: message.into(),
        }
    }

    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Num(v) => *v,
            Expr::Ident(name) => env
                .vars
                .iter()
                .chain(env.consts.iter())
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| self.fault(format!("'{name}' is not bound in this context")))?,
            Expr::Neg(inner) => -inner.eval(env)?,
            Expr::Bin(op, lhs, rhs) => {
                let a = lhs.eval(env)?;
                let b = rhs.eval(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.fault("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, args) => {
                let mut vals = [0.0f64; 3];
                for (slot, arg) in vals.iter_mut().zip(args.iter()) {
                    *slot = arg.eval(env)?;
                }
                match func {
                    Func::Sqrt => {
                        if vals[0] < 0.0 {
                            return Err(self.fault(format!("argument {} is negative", vals[0])));
                        }
                        vals[0].sqrt()
                    }
                    Func::Exp => vals[0].exp(),
                    Func::Log => {
                        if vals[0] <= 0.0 {
                            return Err(self.fault(format!("argument {} is not positive", vals[0])));
                        }
                        vals[0].ln()
                    }
                    Func::Abs => vals[0].abs(),
                    Func::Pow => vals[0].powf(vals[1]),
                    Func::Sigma => {
                        let kernel = env.kernel.ok_or_else(|| {
                            self.fault("sigma(·) is not available in this context")
                        })?;
                        kernel
                            .sigma(vals[0])
                            .map_err(|e| self.fault(e.to_string()))?
                    }
                    Func::Ml => {
                        let index = MLIndex::new(vals[0], vals[1])
                            .map_err(|e| self.fault(e.to_string()))?;
                        mittag_leffler(index, vals[2], &EvalPolicy::default())
                            .map_err(|e| self.fault(e.to_string()))?
                    }
                }
            }
        };
        if !value.is_finite() {
            return Err(self.fault(format!("non-finite value {value}")));
        }
        Ok(value)
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Expr {
        parse_expr(src).unwrap_or_else(|e| panic!("'{src}' should parse: {e}"))
    }

    #[test]
    fn documented_examples() {
        // "1/x^0.2" → div(1, pow(x, 0.2))
        let tree = parse("1/x^0.2");
        assert_eq!(
            tree,
            Expr::Bin(
                BinOp::Div,
                Box::new(Expr::Num(1.0)),
                Box::new(Expr::Bin(
                    BinOp::Pow,
                    Box::new(Expr::Ident("x".into())),
                    Box::new(Expr::Num(0.2)),
                )),
            )
        );
        // lambda bound as a named constant → valid tree.
        parse("lambda/sqrt(sigma(t)*sigma(1-t))");
        // "2**x" → syntax error at offset 1.
        let err = parse_expr("2**x").unwrap_err();
        assert_eq!(err.offset, 1);
        assert!(err.message.contains('^'), "hint should mention '^': {err}");
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ right-associative and tighter than unary minus.
        assert_eq!(parse("2^3^2"), parse("2^(3^2)"));
        assert_ne!(parse("2^3^2"), parse("(2^3)^2"));
        assert_eq!(parse("-2^2"), Expr::Neg(Box::new(parse("2^2"))));
        // Unary minus tighter than * and /.
        assert_eq!(
            parse("-t*x"),
            Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Neg(Box::new(Expr::Ident("t".into())))),
                Box::new(Expr::Ident("x".into())),
            )
        );
        // * tighter than +; left associativity of -.
        assert_eq!(parse("1+2*3"), parse("1+(2*3)"));
        assert_eq!(parse("1-2-3"), parse("(1-2)-3"));
        // Exponent may be unary-negated without parens.
        assert_eq!(parse("x^-0.2"), parse("x^(-0.2)"));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let err = parse_expr("1+").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.message.contains("expected"), "{err}");

        let err = parse_expr("sqrt 4").unwrap_err();
        assert_eq!(err.offset, 5);

        let err = parse_expr("foo(1)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.message.contains("unknown identifier"), "{err}");

        let err = parse_expr("pow(1)").unwrap_err();
        assert!(err.message.contains("2 argument"), "{err}");

        let err = parse_expr("1 2").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.message.contains("operator"), "{err}");
    }

    #[test]
    fn round_trip_is_identity_on_trees() {
        for src in [
            "1/x^0.2",
            "lambda/sqrt(sigma(t)*sigma(1-t))",
            "-2^2",
            "(-2)^2",
            "2^3^2",
            "(2^3)^2",
            "1-(2-3)",
            "1-2-3",
            "a_bad_case_not_needed_1+2*3-4/5",
            "x^-0.2",
            "-(t+x)",
            "--x",
            "abs(-x)+ml(1.5,1,omega*t^mu)",
            "pow(x,R)-exp(log(1.0000001))",
            "0.009/sqrt(sigma(t)*sigma(1-t))",
        ] {
            let Ok(tree) = parse_expr(src) else {
                continue; // the deliberately-invalid corpus entry
            };
            let printed = tree.to_string();
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("printed form '{printed}' should parse: {e}"));
            assert_eq!(reparsed, tree, "round trip changed '{src}' → '{printed}'");
        }
    }

    #[test]
    fn evaluation_and_domain_faults() {
        let env = Env {
            vars: &[("t", 0.25)],
            consts: &[("lambda", 2.0)],
            kernel: None,
        };
        let v = parse("lambda*t^0.5+1").eval(&env).unwrap();
        assert!((v - 2.0).abs() < 1e-15);

        let err = parse("sqrt(t-1)").eval(&env).unwrap_err();
        assert!(err.subexpr.contains("sqrt"), "{err}");
        assert!(err.message.contains("negative"), "{err}");

        let err = parse("1/(t-t)").eval(&env).unwrap_err();
        assert!(err.message.contains("division by zero"), "{err}");

        let err = parse("log(t-t)").eval(&env).unwrap_err();
        assert!(err.message.contains("not positive"), "{err}");

        let err = parse("exp(exp(t+9))").eval(&env).unwrap_err();
        assert!(err.message.contains("non-finite"), "{err}");

        let err = parse("x").eval(&env).unwrap_err();
        assert!(err.message.contains("not bound"), "{err}");

        // (-8)^(1/3) is NaN in IEEE pow: flagged, not propagated.
        let err = parse("(0-8)^(1/3)").eval(&env).unwrap_err();
        assert!(err.message.contains("non-finite"), "{err}");
    }

    #[test]
    fn identifier_collection() {
        let tree = parse("lambda/sqrt(sigma(t)*sigma(1-t))+x");
        assert_eq!(tree.identifiers(), vec!["lambda", "t", "x"]);
    }
}
