//! Small arithmetic expression language for user-defined limit state
//! functions: `+ - * / ^`, unary minus, parentheses, the functions
//! `sin cos sqrt abs log exp` (log is natural), numeric literals, named
//! variables, and named constants. Expressions compile once against a
//! variable list; evaluation then works on a plain `&[f64]`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum UnaryFn {
    Sin,
    Cos,
    Sqrt,
    Abs,
    Log,
    Exp,
}

impl UnaryFn {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "sqrt" => UnaryFn::Sqrt,
            "abs" => UnaryFn::Abs,
            "log" => UnaryFn::Log,
            "exp" => UnaryFn::Exp,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Abs => x.abs(),
            UnaryFn::Log => x.ln(),
            UnaryFn::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Literal(f64),
    Variable(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Call(UnaryFn, Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Literal(v) => *v,
            Node::Variable(i) => vars[*i],
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Node::Neg(a) => -a.eval(vars),
            Node::Call(f, a) => f.apply(a.eval(vars)),
        }
    }
}

/// An expression compiled against a fixed variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledExpr {
    root: Node,
    source: String,
    arity: usize,
}

impl CompiledExpr {
    /// Parse `source`, binding identifiers to `variables` by position, then
    /// to `constants`, then to the builtins `pi` and `e`.
    pub fn compile(
        source: &str,
        variables: &[String],
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self, ExprError> {
        let mut parser = Parser {
            chars: source.char_indices().peekable(),
            source,
            variables,
            constants,
        };
        let root = parser.expression()?;
        parser.skip_ws();
        if let Some((pos, ch)) = parser.chars.peek().copied() {
            return Err(ExprError::Parse {
                pos,
                msg: format!("unexpected character '{ch}'"),
            });
        }
        Ok(CompiledExpr {
            root,
            source: source.to_string(),
            arity: variables.len(),
        })
    }

    /// Evaluate at one input point; non-finite results are evaluation errors.
    pub fn eval(&self, vars: &[f64]) -> Result<f64, ExprError> {
        debug_assert_eq!(vars.len(), self.arity);
        let v = self.root.eval(vars);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Display for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    source: &'a str,
    variables: &'a [String],
    constants: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn expression(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                Some((_, '+')) => {
                    self.chars.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some((_, '-')) => {
                    self.chars.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                Some((_, '*')) => {
                    self.chars.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some((_, '/')) => {
                    self.chars.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '-')) => {
                self.chars.next();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some((_, '+')) => {
                self.chars.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, '^'))) {
            self.chars.next();
            // Right-associative; exponent may itself be signed.
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '(')) => {
                self.chars.next();
                let inner = self.expression()?;
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => Ok(inner),
                    Some((pos, ch)) => Err(ExprError::Parse {
                        pos,
                        msg: format!("expected ')', found '{ch}'"),
                    }),
                    None => Err(ExprError::Parse {
                        pos: self.source.len(),
                        msg: "expected ')', found end of input".into(),
                    }),
                }
            }
            Some((pos, c)) if c.is_ascii_digit() || c == '.' => self.number(pos),
            Some((pos, c)) if c.is_ascii_alphabetic() || c == '_' => self.identifier(pos),
            Some((pos, ch)) => Err(ExprError::Parse {
                pos,
                msg: format!("unexpected character '{ch}'"),
            }),
            None => Err(ExprError::Parse {
                pos: self.source.len(),
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn number(&mut self, start: usize) -> Result<Node, ExprError> {
        let mut end = start;
        let mut seen_exp = false;
        while let Some(&(pos, c)) = self.chars.peek() {
            let accept = c.is_ascii_digit()
                || c == '.'
                || c == 'e'
                || c == 'E'
                || ((c == '+' || c == '-') && seen_exp && {
                    let prev = self.source.as_bytes()[pos - 1];
                    prev == b'e' || prev == b'E'
                });
            if !accept {
                break;
            }
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            end = pos + c.len_utf8();
            self.chars.next();
        }
        let text = &self.source[start..end];
        text.parse::<f64>()
            .map(Node::Literal)
            .map_err(|_| ExprError::Parse {
                pos: start,
                msg: format!("invalid number '{text}'"),
            })
    }

    fn identifier(&mut self, start: usize) -> Result<Node, ExprError> {
        let mut end = start;
        while let Some(&(pos, c)) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                end = pos + c.len_utf8();
                self.chars.next();
            } else {
                break;
            }
        }
        let name = &self.source[start..end];
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, '('))) {
            let f = UnaryFn::from_name(name)
                .ok_or_else(|| ExprError::UnknownIdentifier(name.to_string()))?;
            self.chars.next();
            let arg = self.expression()?;
            self.skip_ws();
            match self.chars.next() {
                Some((_, ')')) => Ok(Node::Call(f, Box::new(arg))),
                _ => Err(ExprError::Parse {
                    pos: end,
                    msg: format!("unclosed argument list for '{name}'"),
                }),
            }
        } else if let Some(i) = self.variables.iter().position(|v| v == name) {
            Ok(Node::Variable(i))
        } else if let Some(&v) = self.constants.get(name) {
            Ok(Node::Literal(v))
        } else if name == "pi" {
            Ok(Node::Literal(std::f64::consts::PI))
        } else if name == "e" {
            Ok(Node::Literal(std::f64::consts::E))
        } else {
            Err(ExprError::UnknownIdentifier(name.to_string()))
        }
    }
}
