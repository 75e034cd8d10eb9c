//! Arithmetic expressions over named variables, compiled to a postfix tape
//! with forward-mode derivatives.
//!
//! Grammar:
//! ```text
//! list    := expr (';' expr)*
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//! Functions: sin cos exp sqrt log abs max min pow. Constant: pi.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
    Abs,
    Max,
    Min,
}

impl Func {
    fn lookup(name: &str) -> Option<(Self, usize)> {
        Some(match name {
            "sin" => (Self::Sin, 1),
            "cos" => (Self::Cos, 1),
            "exp" => (Self::Exp, 1),
            "sqrt" => (Self::Sqrt, 1),
            "log" => (Self::Log, 1),
            "abs" => (Self::Abs, 1),
            "max" => (Self::Max, 2),
            "min" => (Self::Min, 2),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
    Abs,
    Max,
    Min,
}

/// A compiled scalar expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    ast: Node,
    tape: Vec<Op>,
    n_vars: usize,
    source: String,
}

/// Reusable evaluation stacks.
#[derive(Debug, Clone, Default)]
pub struct EvalScratch {
    values: Vec<f64>,
    grads: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    vars: &'a [&'a str],
}

fn lex(src: &str, offset: usize) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::ParseError {
                position: offset + start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((Tok::Num(v), offset + start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), offset + start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), offset + i));
            i += 1;
        } else {
            return Err(Error::ParseError {
                position: offset + i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::ParseError {
            position: self.here(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some(Tok::Ident(name)) => {
                let at = self.here();
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    if name == "pow" {
                        if args.len() != 2 {
                            return Err(Error::ParseError {
                                position: at,
                                message: "pow takes 2 arguments".into(),
                            });
                        }
                        let b = args.pop().unwrap();
                        let a = args.pop().unwrap();
                        return Ok(Node::Pow(Box::new(a), Box::new(b)));
                    }
                    match Func::lookup(&name) {
                        Some((f, arity)) if arity == args.len() => Ok(Node::Call(f, args)),
                        Some((_, arity)) => Err(Error::ParseError {
                            position: at,
                            message: format!("{name} takes {arity} argument(s), got {}", args.len()),
                        }),
                        None => Err(Error::ParseError {
                            position: at,
                            message: format!("unknown function '{name}'"),
                        }),
                    }
                } else if name == "pi" {
                    Ok(Node::Const(std::f64::consts::PI))
                } else if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Node::Var(i))
                } else {
                    Err(Error::ParseError {
                        position: at,
                        message: format!("unknown variable '{name}'"),
                    })
                }
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(inner)
            }
            Some(Tok::Sym(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of expression"),
        }
    }
}

fn compile(node: &Node, tape: &mut Vec<Op>) {
    match node {
        Node::Const(v) => tape.push(Op::Const(*v)),
        Node::Var(i) => tape.push(Op::Var(*i)),
        Node::Neg(a) => {
            compile(a, tape);
            tape.push(Op::Neg);
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            compile(a, tape);
            compile(b, tape);
            tape.push(match node {
                Node::Add(..) => Op::Add,
                Node::Sub(..) => Op::Sub,
                Node::Mul(..) => Op::Mul,
                Node::Div(..) => Op::Div,
                _ => Op::Pow,
            });
        }
        Node::Call(f, args) => {
            for a in args {
                compile(a, tape);
            }
            tape.push(match f {
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
                Func::Exp => Op::Exp,
                Func::Sqrt => Op::Sqrt,
                Func::Log => Op::Log,
                Func::Abs => Op::Abs,
                Func::Max => Op::Max,
                Func::Min => Op::Min,
            });
        }
    }
}

/// Parses one expression over `vars`.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
    parse_at(src, 0, vars)
}

fn parse_at(src: &str, offset: usize, vars: &[&str]) -> Result<Expr> {
    let toks = lex(src, offset)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: offset + src.len(),
        vars,
    };
    if p.toks.is_empty() {
        return p.err("empty expression");
    }
    let ast = p.expr()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    let mut tape = Vec::new();
    compile(&ast, &mut tape);
    Ok(Expr {
        ast,
        tape,
        n_vars: vars.len(),
        source: src.trim().to_string(),
    })
}

/// Rewrites identifiers of `src` for which `rename` returns a replacement;
/// replacements are parenthesized.
pub fn rename_identifiers(src: &str, rename: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut pieces = Vec::new();
    let mut offset = 0;
    for piece in src.split(';') {
        let mut out = String::with_capacity(piece.len());
        let mut last = 0;
        for (tok, pos) in lex(piece, offset)? {
            if let Tok::Ident(name) = tok {
                if let Some(new) = rename(&name) {
                    let pos = pos - offset;
                    out.push_str(&piece[last..pos]);
                    out.push('(');
                    out.push_str(&new);
                    out.push(')');
                    last = pos + name.len();
                }
            }
        }
        out.push_str(&piece[last..]);
        pieces.push(out);
        offset += piece.len() + 1;
    }
    Ok(pieces.join(";"))
}

/// Parses semicolon-separated expressions; positions refer to `src`.
pub fn parse_list(src: &str, vars: &[&str]) -> Result<Vec<Expr>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for piece in src.split(';') {
        out.push(parse_at(piece, offset, vars)?);
        offset += piece.len() + 1;
    }
    Ok(out)
}

impl Expr {
    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Value at `vars` (may be non-finite; callers decide).
    pub fn eval(&self, vars: &[f64], scratch: &mut EvalScratch) -> f64 {
        let st = &mut scratch.values;
        st.clear();
        for op in &self.tape {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => vars[i],
                Op::Neg => -st.pop().unwrap(),
                Op::Sin => st.pop().unwrap().sin(),
                Op::Cos => st.pop().unwrap().cos(),
                Op::Exp => st.pop().unwrap().exp(),
                Op::Sqrt => st.pop().unwrap().sqrt(),
                Op::Log => st.pop().unwrap().ln(),
                Op::Abs => st.pop().unwrap().abs(),
                _ => {
                    let b = st.pop().unwrap();
                    let a = st.pop().unwrap();
                    match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        Op::Pow => pow(a, b),
                        Op::Max => a.max(b),
                        Op::Min => a.min(b),
                        _ => unreachable!(),
                    }
                }
            };
            st.push(v);
        }
        st.pop().unwrap()
    }

    /// Value and gradient with respect to all variables.
    pub fn eval_grad(&self, vars: &[f64], grad: &mut [f64], scratch: &mut EvalScratch) -> f64 {
        let n = self.n_vars;
        let vs = &mut scratch.values;
        let gs = &mut scratch.grads;
        vs.clear();
        gs.clear();
        for op in &self.tape {
            match *op {
                Op::Const(c) => {
                    vs.push(c);
                    gs.extend(std::iter::repeat_n(0.0, n));
                }
                Op::Var(i) => {
                    vs.push(vars[i]);
                    gs.extend((0..n).map(|k| if k == i { 1.0 } else { 0.0 }));
                }
                Op::Neg | Op::Sin | Op::Cos | Op::Exp | Op::Sqrt | Op::Log | Op::Abs => {
                    let a = vs.pop().unwrap();
                    let (v, d) = match *op {
                        Op::Neg => (-a, -1.0),
                        Op::Sin => (a.sin(), a.cos()),
                        Op::Cos => (a.cos(), -a.sin()),
                        Op::Exp => (a.exp(), a.exp()),
                        Op::Sqrt => (a.sqrt(), 0.5 / a.sqrt()),
                        Op::Log => (a.ln(), 1.0 / a),
                        Op::Abs => (a.abs(), if a > 0.0 { 1.0 } else if a < 0.0 { -1.0 } else { 0.0 }),
                        _ => unreachable!(),
                    };
                    let top = gs.len() - n;
                    gs[top..].iter_mut().for_each(|g| *g *= d);
                    vs.push(v);
                }
                _ => {
                    let b = vs.pop().unwrap();
                    let a = vs.pop().unwrap();
                    let bt = gs.len() - n;
                    let at = bt - n;
                    let (v, da, db) = match *op {
                        Op::Add => (a + b, 1.0, 1.0),
                        Op::Sub => (a - b, 1.0, -1.0),
                        Op::Mul => (a * b, b, a),
                        Op::Div => (a / b, 1.0 / b, -a / (b * b)),
                        Op::Pow => {
                            let v = pow(a, b);
                            let b_varies = gs[bt..].iter().any(|g| *g != 0.0);
                            let da = if b == 0.0 { 0.0 } else { b * pow(a, b - 1.0) };
                            let db = if b_varies { v * a.ln() } else { 0.0 };
                            (v, da, db)
                        }
                        Op::Max => {
                            if a >= b {
                                (a, 1.0, 0.0)
                            } else {
                                (b, 0.0, 1.0)
                            }
                        }
                        Op::Min => {
                            if a <= b {
                                (a, 1.0, 0.0)
                            } else {
                                (b, 0.0, 1.0)
                            }
                        }
                        _ => unreachable!(),
                    };
                    for k in 0..n {
                        let ga = gs[at + k];
                        let gb = gs[bt + k];
                        // Skip zero partials so 0 * inf does not poison them.
                        let mut g = 0.0;
                        if ga != 0.0 {
                            g += da * ga;
                        }
                        if gb != 0.0 {
                            g += db * gb;
                        }
                        gs[at + k] = g;
                    }
                    gs.truncate(bt);
                    vs.push(v);
                }
            }
        }
        grad.copy_from_slice(&gs[..n]);
        vs.pop().unwrap()
    }

    /// True when the expression uses only nonnegative constants, variables,
    /// `+`, `*`, division by positive constants, positive constant powers,
    /// `sqrt` and `max`: such expressions are nondecreasing in every
    /// variable on the nonnegative orthant.
    pub fn is_monotone_safe(&self) -> bool {
        fn positive_const(n: &Node) -> Option<f64> {
            match n {
                Node::Const(c) if *c > 0.0 => Some(*c),
                Node::Div(a, b) => Some(positive_const(a)? / positive_const(b)?),
                Node::Mul(a, b) => Some(positive_const(a)? * positive_const(b)?),
                _ => None,
            }
        }
        fn safe(n: &Node) -> bool {
            match n {
                Node::Const(c) => *c >= 0.0,
                Node::Var(_) => true,
                Node::Add(a, b) | Node::Mul(a, b) => safe(a) && safe(b),
                Node::Div(a, b) => safe(a) && positive_const(b).is_some(),
                Node::Pow(a, b) => safe(a) && positive_const(b).is_some(),
                Node::Call(Func::Sqrt, args) | Node::Call(Func::Max, args) => args.iter().all(safe),
                _ => false,
            }
        }
        safe(&self.ast)
    }
}

/// Real power that keeps integer exponents of negative bases finite.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vars: &[&str], at: &[f64]) -> f64 {
        parse(src, vars).unwrap().eval(at, &mut EvalScratch::default())
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], &[]), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], &[]), -4.0);
        assert_eq!(ev("2 ^ -1", &[], &[]), 0.5);
        assert_eq!(ev("(1 + 2) * 3 - 4 / 2", &[], &[]), 7.0);
        assert_eq!(ev("max(y1, 2) + pow(y1, 2)", &["y1"], &[3.0]), 12.0);
        assert!((ev("sin(pi / 2)", &[], &[]) - 1.0).abs() < 1e-15);
        assert_eq!(ev("1e-3 * 2E2", &[], &[]), 0.2);
        assert_eq!(ev("(-2)^3", &[], &[]), -8.0);
    }

    #[test]
    fn identifier_renaming() {
        let out = rename_identifiers("x1*x2 + sin(x1)", |n| (n == "x1").then(|| "y2".to_string())).unwrap();
        assert_eq!(out, "(y2)*x2 + sin((y2))");
        assert_eq!(rename_identifiers("1 + 2", |_| None).unwrap(), "1 + 2");
        assert_eq!(rename_identifiers("x1; x1 ;2", |_| Some("z".into())).unwrap(), "(z); (z) ;2");
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_list("y1; y2; +", &["y1", "y2"]).unwrap_err();
        assert_eq!(
            err,
            Error::ParseError {
                position: 8,
                message: "unexpected '+'".into()
            }
        );
        assert!(matches!(parse("y3", &["y1"]), Err(Error::ParseError { position: 0, .. })));
        assert!(matches!(parse("sin(1, 2)", &[]), Err(Error::ParseError { .. })));
        assert!(matches!(parse("(1", &[]), Err(Error::ParseError { position: 2, .. })));
        assert!(matches!(parse("1 $ 2", &[]), Err(Error::ParseError { position: 2, .. })));
        assert!(matches!(parse("", &[]), Err(Error::ParseError { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let vars = ["y1", "y2"];
        let srcs = [
            "y1^2 + y2^2",
            "sin(y1) * exp(y2) / (2 + cos(y1 * y2))",
            "sqrt(1 + y1^2) - log(3 + y2) + abs(y1 - 0.3)",
            "pow(2 + y1, y2) + max(y1, y2) * min(y1, -y2)",
        ];
        let at = [0.7, -0.4];
        let mut s = EvalScratch::default();
        for src in srcs {
            let e = parse(src, &vars).unwrap();
            let mut g = [0.0; 2];
            let v = e.eval_grad(&at, &mut g, &mut s);
            assert!((v - e.eval(&at, &mut s)).abs() < 1e-15);
            for k in 0..2 {
                let h = 1e-6;
                let mut p = at;
                let mut m = at;
                p[k] += h;
                m[k] -= h;
                let fd = (e.eval(&p, &mut s) - e.eval(&m, &mut s)) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7, "{src} d/dy{}: {fd} vs {}", k + 1, g[k]);
            }
        }
    }

    #[test]
    fn constant_exponent_at_zero_base() {
        let e = parse("y1^2", &["y1"]).unwrap();
        let mut g = [0.0];
        e.eval_grad(&[0.0], &mut g, &mut EvalScratch::default());
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn monotone_safety() {
        let vars = ["a1", "a2"];
        assert!(parse("max(a1, a2^(1/2))", &vars).unwrap().is_monotone_safe());
        assert!(parse("(a1^4 + 16*a2^2)^0.25", &vars).unwrap().is_monotone_safe());
        assert!(parse("a1 + a2 / 2", &vars).unwrap().is_monotone_safe());
        assert!(!parse("a1 - a2", &vars).unwrap().is_monotone_safe());
        assert!(!parse("sin(a1)", &vars).unwrap().is_monotone_safe());
        assert!(!parse("a1 / a2", &vars).unwrap().is_monotone_safe());
        assert!(!parse("-1 + a1", &vars).unwrap().is_monotone_safe());
    }
}
