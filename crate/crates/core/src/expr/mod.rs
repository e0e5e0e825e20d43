//! Expression trees for real symbols `g(λ)`.
//!
//! The grammar is deliberately small: the variable `x` (standing for the
//! spectral variable λ), named real parameters, numeric literals, the
//! operators `+ - * / ^`, and the functions `sqrt log abs exp sin cos`.
//! Symbolic differentiation may introduce an internal `sign` node, which the
//! printer also emits so that derivatives round-trip.

mod diff;
mod parse;
mod roots;
mod symbol;

use std::fmt;

use crate::scalar::Real;

pub use parse::{parse, ParseError};
pub use roots::{find_zeros, ZeroScan};
pub use symbol::{singular_points, SpectralSymbol, DEFAULT_FD_SAMPLES};

/// Unary functions available in the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Log,
    Abs,
    Exp,
    Sin,
    Cos,
    /// Derivative of `abs`; zero at the origin. Not accepted by the parser
    /// except as the printed form of a derivative.
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn eval<T: Real>(self, u: T) -> T {
        match self {
            Func::Sqrt => u.sqrt(),
            Func::Log => u.ln(),
            Func::Abs => u.abs(),
            Func::Exp => u.exp(),
            Func::Sin => u.sin(),
            Func::Cos => u.cos(),
            Func::Sign => {
                if u > T::zero() {
                    T::one()
                } else if u < T::zero() {
                    -T::one()
                } else if u.is_nan() {
                    u
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// A symbol in one real variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    /// Named real parameter, bound to its value at parse time.
    Param { name: String, value: f64 },
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with an exponent that does not depend on the variable.
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    /// Evaluates at `x`. Values outside the natural domain (log of a
    /// negative number, poles) come back as NaN or ±∞.
    pub fn eval<T: Real>(&self, x: T) -> T {
        match self {
            Expr::Const(c) => T::lit(*c),
            Expr::Var => x,
            Expr::Param { value, .. } => T::lit(*value),
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, p) => {
                let base = a.eval(x);
                let exponent = p.eval(x);
                if exponent == T::lit(2.0) {
                    base * base
                } else {
                    base.powf(exponent)
                }
            }
            Expr::Call(f, a) => f.eval(a.eval(x)),
        }
    }

    /// True when the tree mentions the variable.
    pub fn depends_on_var(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Const(_) | Expr::Param { .. } => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_var() || b.depends_on_var()
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var | Expr::Param { .. } => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Sub-expressions whose zeros make the symbol non-smooth or undefined:
    /// arguments of `abs`, `log`, `sqrt`, `sign`, denominators, and bases of
    /// non-integer or negative powers.
    pub fn singular_arguments(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out
    }

    fn collect_singular<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Const(_) | Expr::Var | Expr::Param { .. } => {}
            Expr::Neg(a) => a.collect_singular(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
            }
            Expr::Div(a, b) => {
                if b.depends_on_var() {
                    out.push(b);
                }
                a.collect_singular(out);
                b.collect_singular(out);
            }
            Expr::Pow(a, p) => {
                let e = p.eval::<f64>(0.0);
                let smooth = e >= 2.0 && e.fract() == 0.0 || e == 0.0 || e == 1.0;
                if !smooth && a.depends_on_var() {
                    out.push(a);
                }
                a.collect_singular(out);
            }
            Expr::Call(f, a) => {
                if matches!(f, Func::Abs | Func::Log | Func::Sqrt | Func::Sign) && a.depends_on_var() {
                    out.push(a);
                }
                a.collect_singular(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "x"),
            Expr::Param { name, .. } => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " * ")?;
                b.fmt_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " / ")?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(a, p) => {
                a.fmt_at(f, 5)?;
                write!(f, "^")?;
                p.fmt_at(f, 3)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn p(text: &str) -> Expr {
        parse(text, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn printing_uses_minimal_parentheses() {
        assert_eq!(p("(x + 1) * 2").to_string(), "(x + 1) * 2");
        assert_eq!(p("x - (x - 1)").to_string(), "x - (x - 1)");
        assert_eq!(p("-x^2").to_string(), "-x^2");
        assert_eq!(p("(-x)^2").to_string(), "(-x)^2");
        assert_eq!(p("x^-1").to_string(), "x^-1");
        assert_eq!(p("x^(1/2)").to_string(), "x^(1 / 2)");
        assert_eq!(p("2^3^2").to_string(), "2^3^2");
        assert_eq!(p("(2^3)^2").to_string(), "(2^3)^2");
    }

    #[test]
    fn sign_is_zero_at_origin() {
        let e = Expr::Call(Func::Sign, Box::new(Expr::Var));
        assert_eq!(e.eval(0.0f64), 0.0);
        assert_eq!(e.eval(-0.5f64), -1.0);
        assert_eq!(e.eval(3.0f64), 1.0);
    }

    #[test]
    fn singular_arguments_are_structural() {
        let e = p("log(abs(x)) + sqrt(x^2 + 1) + 1/(x - 2) + x^2");
        let args: Vec<String> = e.singular_arguments().iter().map(|a| a.to_string()).collect();
        assert_eq!(args, vec!["abs(x)", "x", "x^2 + 1", "x - 2"]);
        assert!(p("x^3 + exp(x)").singular_arguments().is_empty());
        assert_eq!(p("x^0.5").singular_arguments().len(), 1);
    }
}
