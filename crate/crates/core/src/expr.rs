//! Scalar expression language used to write f, g, φ and ρ in problem files.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables are resolved against a declared set at parse time and stored
//! with their slot index so evaluation does not need string lookups.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Variables available to f and g.
pub const STATE_VARS: [&str; 3] = ["t", "x", "y"];
/// Variables available to φ and ρ.
pub const TIME_VARS: [&str; 1] = ["t"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error(
        "function `{name}` takes {expected} argument(s) but {found} were given (position {pos})"
    )]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        pos: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Cbrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Atan,
    Min,
    Max,
    Pow,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Abs,
        Func::Sqrt,
        Func::Cbrt,
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Atan,
        Func::Min,
        Func::Max,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Cbrt => "cbrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `slot` is the index of `name` in the variable set the expression was parsed against.
    Var {
        name: String,
        slot: usize,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

/// Parse `source` allowing only the variables in `allowed_vars`.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ParseError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        idx: 0,
        vars: allowed_vars,
        end: source.len(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(expr)
}

impl Expr {
    /// Evaluate with variables bound by name.
    pub fn eval(&self, env: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(&|name, _| env.get(name).copied())
    }

    /// Evaluate with variables bound positionally, in the order of the
    /// variable set passed to [`parse`].
    pub fn eval_slots(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(&|_, slot| values.get(slot).copied())
    }

    fn eval_with(&self, lookup: &dyn Fn(&str, usize) -> Option<f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var { name, slot } => {
                lookup(name, *slot).ok_or_else(|| EvalError::MissingBinding(name.clone()))?
            }
            Expr::Neg(inner) => -inner.eval_with(lookup)?,
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval_with(lookup)?;
                let b = rhs.eval_with(lookup)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain(format!("division by zero ({a} / 0)")));
                        }
                        a / b
                    }
                    BinOp::Pow => real_pow(a, b)?,
                }
            }
            Expr::Call { func, args } => {
                let a = args[0].eval_with(lookup)?;
                match func {
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Cbrt => a.cbrt(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain(format!("ln of nonpositive value {a}")));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Atan => a.atan(),
                    Func::Min => a.min(args[1].eval_with(lookup)?),
                    Func::Max => a.max(args[1].eval_with(lookup)?),
                    Func::Pow => real_pow(a, args[1].eval_with(lookup)?)?,
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain(format!("non-finite result in `{self}`")))
        }
    }

    /// True when some variable reference in the tree has the given name.
    pub fn mentions(&self, var: &str) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var { name, .. } => name == var,
            Expr::Neg(inner) => inner.mentions(var),
            Expr::Binary { lhs, rhs, .. } => lhs.mentions(var) || rhs.mentions(var),
            Expr::Call { args, .. } => args.iter().any(|a| a.mentions(var)),
        }
    }
}

fn real_pow(base: f64, exp: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exp < 0.0 {
        return Err(EvalError::Domain(format!(
            "0 raised to negative power {exp}"
        )));
    }
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(EvalError::Domain(format!(
            "negative base {base} raised to non-integer power {exp}"
        )));
    }
    Ok(base.powf(exp))
}

/// Fully parenthesised rendering; parsing it back yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                i += 1;
                TokenKind::Op(c as char)
            }
            b'(' => {
                i += 1;
                TokenKind::LParen
            }
            b')' => {
                i += 1;
                TokenKind::RParen
            }
            b',' => {
                i += 1;
                TokenKind::Comma
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                TokenKind::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                TokenKind::Ident(src[start..i].to_string())
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { kind, pos: start });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.idx).cloned();
        if tok.is_some() {
            self.idx += 1;
        }
        tok
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn expect(&mut self, want: TokenKind, what: &str) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.next() {
            Some(tok) if tok.kind == want => Ok(()),
            Some(tok) => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {what}, found {}", tok.kind.describe()),
            }),
            None => Err(ParseError::Syntax {
                pos,
                msg: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.idx += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.idx += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_op() {
            Some('-') => {
                self.idx += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.idx += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let tok = self.next().ok_or(ParseError::Syntax {
            pos,
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        kind: TokenKind::LParen,
                        ..
                    })
                );
                if is_call {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
                        name: name.clone(),
                        pos,
                    })?;
                    self.idx += 1;
                    let mut args = vec![self.expr()?];
                    while matches!(
                        self.peek(),
                        Some(Token {
                            kind: TokenKind::Comma,
                            ..
                        })
                    ) {
                        self.idx += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(TokenKind::RParen, "`)` or `,`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name,
                            expected: func.arity(),
                            found: args.len(),
                            pos,
                        });
                    }
                    Ok(Expr::Call { func, args })
                } else if let Some(slot) = self.vars.iter().position(|v| *v == name) {
                    Ok(Expr::Var { name, slot })
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError::Syntax {
                        pos,
                        msg: format!("function `{name}` must be followed by `(`"),
                    })
                } else {
                    Err(ParseError::UnknownIdentifier { name, pos })
                }
            }
            other => Err(ParseError::Syntax {
                pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, vars: &[&str], vals: &[f64]) -> f64 {
        parse(src, vars).unwrap().eval_slots(vals).unwrap()
    }

    #[test]
    fn single_variable() {
        let e = parse("t", &TIME_VARS).unwrap();
        assert_eq!(
            e,
            Expr::Var {
                name: "t".into(),
                slot: 0
            }
        );
    }

    #[test]
    fn example_f_parses_and_evaluates() {
        let e = parse("(1/4)*((1+abs(x))^(1/4) + (1+abs(y))^(1/4))", &STATE_VARS).unwrap();
        assert_eq!(e.eval_slots(&[0.3, 0.0, 0.0]).unwrap(), 0.5);
        assert!(e.mentions("x") && e.mentions("y") && !e.mentions("t"));
    }

    #[test]
    fn example_g_at_origin() {
        let v = ev(
            "(1/3)*((1+abs(x))^(1/3) + (1+abs(y))^(1/3))",
            &STATE_VARS,
            &[0.0, 0.0, 0.0],
        );
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn named_environment() {
        let e = parse("atan(t)", &TIME_VARS).unwrap();
        let env = HashMap::from([("t".to_string(), 1.0)]);
        assert!((e.eval(&env).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(ev("(1+abs(x))^(1/4)", &["x"], &[0.0]), 1.0);
        assert_eq!(
            e.eval(&HashMap::new()),
            Err(EvalError::MissingBinding("t".into()))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", &[], &[]), 14.0);
        assert_eq!(ev("2^3^2", &[], &[]), 512.0);
        assert_eq!(ev("-2^2", &[], &[]), -4.0);
        assert_eq!(ev("2^-1", &[], &[]), 0.5);
        assert_eq!(ev("-2*3", &[], &[]), -6.0);
        assert_eq!(ev("8/4/2", &[], &[]), 1.0);
        assert_eq!(ev("10-4-3", &[], &[]), 3.0);
        assert_eq!(ev("(2+3)*4", &[], &[]), 20.0);
        assert_eq!(ev("1.5e2 + .5", &[], &[]), 150.5);
        assert_eq!(ev("max(1, min(5, 3)) + pow(2, 3)", &[], &[]), 11.0);
        assert_eq!(ev("cbrt(-8)", &[], &[]), -2.0);
        assert_eq!(ev("(-2)^3", &[], &[]), -8.0);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse("2*^x", &["x"]),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(parse("", &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("(1+2", &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse("1 2", &[]),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse("3 $ 4", &[]),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(parse("sin", &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1..2", &[]), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn identifier_errors() {
        assert_eq!(
            parse("x + 1", &TIME_VARS),
            Err(ParseError::UnknownIdentifier {
                name: "x".into(),
                pos: 0
            })
        );
        assert!(matches!(
            parse("foo(t)", &TIME_VARS),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse("min(t)", &TIME_VARS),
            Err(ParseError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            parse("sqrt(t, t)", &TIME_VARS),
            Err(ParseError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
    }

    #[test]
    fn domain_errors() {
        let cases = [
            "sqrt(-1)",
            "ln(0)",
            "0^(-1)",
            "(-2)^0.5",
            "1/0",
            "exp(1000)",
            "pow(-1, 0.5)",
        ];
        for src in cases {
            let e = parse(src, &[]).unwrap();
            assert!(
                matches!(e.eval_slots(&[]), Err(EvalError::Domain(_))),
                "{src} should be a domain error"
            );
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (0usize..3).prop_map(|slot| Expr::Var {
                name: STATE_VARS[slot].to_string(),
                slot
            }),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::Binary {
                        op,
                        lhs: Box::new(l),
                        rhs: Box::new(r)
                    }),
                (0usize..Func::ALL.len(), inner.clone(), inner).prop_map(|(i, a, b)| {
                    let func = Func::ALL[i];
                    let args = if func.arity() == 2 {
                        vec![a, b]
                    } else {
                        vec![a]
                    };
                    Expr::Call { func, args }
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed, &STATE_VARS).unwrap();
            prop_assert_eq!(reparsed, e);
        }

        #[test]
        fn addition_commutes(x in -1e150f64..1e150, y in -1e150f64..1e150) {
            let xy = parse("x+y", &["x", "y"]).unwrap();
            let yx = parse("y+x", &["x", "y"]).unwrap();
            prop_assert_eq!(xy.eval_slots(&[x, y]).unwrap(), yx.eval_slots(&[x, y]).unwrap());
        }
    }
}
