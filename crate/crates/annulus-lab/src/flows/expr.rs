//! Pratt parser and evaluator for radial profiles and polar field components.
//!
//! Grammar: decimal literals, variables `r` (and `theta` where angle
//! dependence is allowed), constants `pi` and `e`, functions `sin cos ln exp
//! sqrt abs`, operators `+ - * / ^` with `^` right-associative and binding
//! tighter than unary minus, which binds tighter than `*` and `/`. There is
//! no implicit multiplication and no scientific-notation literal (`2e-3` is
//! `2*e-3`; write `0.002`).

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Ln,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    /// (left, right) binding powers; `Pow` is right-associative.
    fn binding(self) -> (u8, u8) {
        match self {
            BinOp::Add | BinOp::Sub => (1, 2),
            BinOp::Mul | BinOp::Div => (3, 4),
            BinOp::Pow => (8, 7),
        }
    }

    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

const NEG_BP: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Radius,
    Angle,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Which variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSet {
    RadiusOnly,
    RadiusAngle,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at position {position}: found {found}, expected one of {expected:?}")]
pub struct ParseError {
    pub position: usize,
    pub found: String,
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{func}({arg:.6e}) undefined at r={radius:.6e}, theta={theta:.6e}")]
    Domain {
        func: &'static str,
        arg: f64,
        radius: f64,
        theta: f64,
    },
    #[error("division by zero at r={radius:.6e}, theta={theta:.6e}")]
    DivisionByZero { radius: f64, theta: f64 },
    #[error("non-finite result at r={radius:.6e}, theta={theta:.6e}")]
    NonFinite { radius: f64, theta: f64 },
}

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
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut seen_dot = false;
                while i < bytes.len() {
                    match bytes[i] as char {
                        '0'..='9' => i += 1,
                        '.' if !seen_dot => {
                            seen_dot = true;
                            i += 1;
                        }
                        _ => break,
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    position: start,
                    found: text.to_string(),
                    expected: vec!["number"],
                })?;
                out.push((Tok::Num(value), start));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    position: i,
                    found: c.to_string(),
                    expected: vec!["number", "identifier", "operator", "(", ")"],
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: VarSet,
    src: &'a str,
}

const OPERAND_EXPECTED: &[&str] = &["number", "identifier", "(", "-"];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn found(&self) -> String {
        match self.toks.get(self.pos) {
            Some((Tok::Ident(s), _)) => format!("identifier `{s}`"),
            Some((Tok::Num(v), _)) => format!("number `{v}`"),
            Some((t, _)) => format!("`{}`", tok_text(t)),
            None => "end of input".to_string(),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            position: self.here(),
            found: self.found(),
            expected: expected.to_vec(),
        }
    }

    fn parse_expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_operand()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Caret) => BinOp::Pow,
                Some(Tok::RParen) | None => break,
                Some(_) => return Err(self.error(&["+", "-", "*", "/", "^", ")", "end of input"])),
            };
            let (l_bp, r_bp) = op.binding();
            if l_bp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.parse_expr(r_bp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_operand(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Num(_)) => {
                if let Some(Tok::Num(v)) = self.bump() {
                    Ok(Expr::Num(v))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::Minus) => {
                self.bump();
                let inner = self.parse_expr(NEG_BP)?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.parse_expr(0)?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.error(&[")"])),
                }
            }
            Some(Tok::Ident(_)) => {
                let pos = self.here();
                let name = match self.bump() {
                    Some(Tok::Ident(s)) => s,
                    _ => unreachable!(),
                };
                self.parse_ident(&name, pos)
            }
            _ => Err(self.error(OPERAND_EXPECTED)),
        }
    }

    fn parse_ident(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let func = match name {
            "r" => return Ok(Expr::Radius),
            "theta" if self.vars == VarSet::RadiusAngle => return Ok(Expr::Angle),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => {
                let mut expected = vec!["r", "pi", "e", "sin", "cos", "ln", "exp", "sqrt", "abs"];
                if self.vars == VarSet::RadiusAngle {
                    expected.insert(1, "theta");
                }
                return Err(ParseError {
                    position: pos,
                    found: format!("identifier `{name}`"),
                    expected,
                });
            }
        };
        match self.peek() {
            Some(Tok::LParen) => {
                self.bump();
                let arg = self.parse_expr(0)?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    _ => Err(self.error(&[")"])),
                }
            }
            _ => Err(self.error(&["("])),
        }
    }
}

fn tok_text(t: &Tok) -> &'static str {
    match t {
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Caret => "^",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Num(_) => "number",
        Tok::Ident(_) => "identifier",
    }
}

/// Parse an expression over the given variable set.
pub fn parse_expr(src: &str, vars: VarSet) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        vars,
        src,
    };
    let _ = p.src;
    let expr = p.parse_expr(0)?;
    if p.pos != p.toks.len() {
        return Err(p.error(&["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(expr)
}

impl Expr {
    pub fn eval(&self, radius: f64, theta: f64) -> Result<f64, EvalError> {
        let v = self.eval_inner(radius, theta)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { radius, theta })
        }
    }

    fn eval_inner(&self, radius: f64, theta: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Radius => radius,
            Expr::Angle => theta,
            Expr::Neg(e) => -e.eval_inner(radius, theta)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval_inner(radius, theta)?;
                let y = b.eval_inner(radius, theta)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero { radius, theta });
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                }
            }
            Expr::Call(func, arg) => {
                let x = arg.eval_inner(radius, theta)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain {
                                func: "ln",
                                arg: x,
                                radius,
                                theta,
                            });
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                func: "sqrt",
                                arg: x,
                                radius,
                                theta,
                            });
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }

    /// Symbolic partial derivative with respect to `r`.
    pub fn derivative_r(&self) -> Expr {
        self.derivative(Expr::Radius)
    }

    /// Symbolic partial derivative with respect to `theta`.
    pub fn derivative_theta(&self) -> Expr {
        self.derivative(Expr::Angle)
    }

    fn derivative(&self, var: Expr) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Radius | Expr::Angle => {
                Expr::Num(if *self == var { 1.0 } else { 0.0 })
            }
            Expr::Neg(e) => neg(e.derivative(var)),
            Expr::Bin(op, a, b) => {
                let da = a.derivative(var.clone());
                let db = b.derivative(var);
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    BinOp::Div => div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        mul((**b).clone(), (**b).clone()),
                    ),
                    BinOp::Pow => match **b {
                        // d(a^n) = n a^(n-1) a'
                        Expr::Num(n) => mul(
                            mul(Expr::Num(n), pow((**a).clone(), Expr::Num(n - 1.0))),
                            da,
                        ),
                        // d(a^b) = a^b (b' ln a + b a'/a)
                        _ => mul(
                            pow((**a).clone(), (**b).clone()),
                            add(
                                mul(db, Expr::Call(Func::Ln, a.clone())),
                                div(mul((**b).clone(), da), (**a).clone()),
                            ),
                        ),
                    },
                }
            }
            Expr::Call(func, arg) => {
                let da = arg.derivative(var);
                let a = (**arg).clone();
                let outer = match func {
                    Func::Sin => Expr::Call(Func::Cos, arg.clone()),
                    Func::Cos => neg(Expr::Call(Func::Sin, arg.clone())),
                    Func::Exp => Expr::Call(Func::Exp, arg.clone()),
                    Func::Ln => return div(da, a),
                    Func::Sqrt => {
                        return div(da, mul(Expr::Num(2.0), Expr::Call(Func::Sqrt, arg.clone())))
                    }
                    // d|a| = (a/|a|) a'; undefined at a = 0
                    Func::Abs => div(a.clone(), Expr::Call(Func::Abs, arg.clone())),
                };
                mul(outer, da)
            }
        }
    }

    /// Whether the expression mentions `theta`.
    pub fn uses_angle(&self) -> bool {
        match self {
            Expr::Angle => true,
            Expr::Num(_) | Expr::Radius => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_angle(),
            Expr::Bin(_, a, b) => a.uses_angle() || b.uses_angle(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_bp: u8) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Radius => write!(f, "r"),
            Expr::Angle => write!(f, "theta"),
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Neg(e) => {
                if NEG_BP < min_bp {
                    write!(f, "(-")?;
                    e.fmt_prec(f, NEG_BP)?;
                    write!(f, ")")
                } else {
                    write!(f, "-")?;
                    e.fmt_prec(f, NEG_BP)
                }
            }
            Expr::Bin(op, a, b) => {
                let (l_bp, r_bp) = op.binding();
                let right_assoc = matches!(op, BinOp::Pow);
                let left_min = if right_assoc { l_bp + 1 } else { l_bp };
                let wrap = l_bp < min_bp;
                if wrap {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, left_min)?;
                write!(f, "{}", op.symbol())?;
                b.fmt_prec(f, r_bp)?;
                if wrap {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

// Folding constructors keep symbolic derivatives from ballooning.

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(x), _) if *x == 0.0 => b,
        (_, Expr::Num(y)) if *y == 0.0 => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (_, Expr::Num(y)) if *y == 0.0 => a,
        (Expr::Num(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(x), _) if *x == 0.0 => Expr::Num(0.0),
        (_, Expr::Num(y)) if *y == 0.0 => Expr::Num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 0.0 => Expr::Num(0.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (_, Expr::Num(y)) if *y == 0.0 => Expr::Num(1.0),
        _ => Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Neg(inner) => *inner,
        _ => Expr::Neg(Box::new(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval_r(src: &str, r: f64) -> f64 {
        parse_expr(src, VarSet::RadiusOnly)
            .unwrap()
            .eval(r, 0.0)
            .unwrap()
    }

    #[test]
    fn basic_profiles() {
        assert_eq!(eval_r("r", 2.0), 2.0);
        assert_eq!(eval_r("1/r^2", 2.0), 0.25);
        assert!((eval_r("sin(pi/2)", 1.0) - 1.0).abs() < 1e-15);
        assert!((eval_r("ln(e)", 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval_r("2+3*4", 0.0), 14.0);
        assert_eq!(eval_r("2^3^2", 0.0), 512.0); // right-assoc
        assert_eq!(eval_r("-2^2", 0.0), -4.0); // ^ binds tighter than unary -
        assert_eq!(eval_r("-2*3", 0.0), -6.0);
        assert_eq!(eval_r("2-3-4", 0.0), -5.0); // left-assoc
        assert_eq!(eval_r("(2-3)-4", 0.0), -5.0);
        assert_eq!(eval_r("2/4/2", 0.0), 0.25);
    }

    #[test]
    fn unbalanced_paren_position() {
        match parse_expr("r*(", VarSet::RadiusOnly) {
            Err(e) => {
                assert_eq!(e.position, 3);
                assert!(e.expected.contains(&"number"));
            }
            Ok(_) => panic!("expected syntax error"),
        }
    }

    #[test]
    fn unknown_identifier_carries_expectations() {
        let err = parse_expr("foo(2)", VarSet::RadiusOnly).unwrap_err();
        assert_eq!(err.position, 0);
        assert!(err.expected.contains(&"sin"));
        assert!(!err.expected.contains(&"theta"));
        let err = parse_expr("theta", VarSet::RadiusOnly).unwrap_err();
        assert_eq!(err.position, 0);
        // theta allowed only in the angle-extended grammar
        assert!(parse_expr("theta", VarSet::RadiusAngle).is_ok());
    }

    #[test]
    fn no_implicit_multiplication() {
        assert!(parse_expr("2r", VarSet::RadiusOnly).is_err());
        assert!(parse_expr("2 r", VarSet::RadiusOnly).is_err());
    }

    #[test]
    fn ln_of_negative_reports_radius() {
        let e = parse_expr("ln(r-2)", VarSet::RadiusOnly).unwrap();
        match e.eval(1.5, 0.0) {
            Err(EvalError::Domain { func, radius, .. }) => {
                assert_eq!(func, "ln");
                assert_eq!(radius, 1.5);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(e.eval(3.0, 0.0).is_ok());
    }

    #[test]
    fn division_by_zero_detected() {
        let e = parse_expr("1/(r-1)", VarSet::RadiusOnly).unwrap();
        assert!(matches!(
            e.eval(1.0, 0.0),
            Err(EvalError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn symbolic_derivative_matches_finite_differences() {
        let cases = [
            "r^3",
            "1/r^2",
            "sin(r)*cos(2*r)",
            "exp(-r^2)",
            "ln(r)+sqrt(r)",
            "(r-1)^2/2",
            "r^r",
        ];
        for src in cases {
            let e = parse_expr(src, VarSet::RadiusOnly).unwrap();
            let d = e.derivative_r();
            for k in 1..=10 {
                let r = 0.5 + 0.25 * k as f64;
                let h = 1e-6 * r;
                let fd = (e.eval(r + h, 0.0).unwrap() - e.eval(r - h, 0.0).unwrap()) / (2.0 * h);
                let sym = d.eval(r, 0.0).unwrap();
                let scale = sym.abs().max(1.0);
                assert!(
                    (fd - sym).abs() < 1e-6 * scale,
                    "{src} at r={r}: fd={fd}, sym={sym}"
                );
            }
        }
        let e = parse_expr("r*sin(theta)", VarSet::RadiusAngle).unwrap();
        let dth = e.derivative_theta();
        assert!((dth.eval(2.0, 0.5).unwrap() - 2.0 * 0.5f64.cos()).abs() < 1e-12);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.1f64..10.0).prop_map(Expr::Num),
            Just(Expr::Radius),
            Just(Expr::Angle),
        ];
        leaf.prop_recursive(5, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Add,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Sub,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Mul,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                    BinOp::Div,
                    Box::new(a),
                    Box::new(b)
                )),
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
                inner.clone().prop_map(|a| Expr::Call(Func::Abs, Box::new(a))),
                (inner.clone(), 0.5f64..3.0).prop_map(|(a, p)| Expr::Bin(
                    BinOp::Pow,
                    Box::new(Expr::Call(Func::Abs, Box::new(a))),
                    Box::new(Expr::Num(p))
                )),
            ]
        })
    }

    proptest! {
        /// Printing then reparsing reproduces the same values.
        #[test]
        fn print_parse_roundtrip(e in arb_expr(), r in 0.05f64..5.0, th in 0.0f64..6.28) {
            let printed = e.to_string();
            let reparsed = parse_expr(&printed, VarSet::RadiusAngle)
                .unwrap_or_else(|err| panic!("reparse of `{printed}` failed: {err}"));
            match (e.eval(r, th), reparsed.eval(r, th)) {
                (Ok(a), Ok(b)) => {
                    let scale = a.abs().max(1.0);
                    prop_assert!((a - b).abs() <= 1e-14 * scale, "`{}`: {} vs {}", printed, a, b);
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "`{printed}`: eval disagreement {a:?} vs {b:?}"),
            }
        }
    }
}
