//! Symbolic differentiation with local simplification only.

use super::{Expr, Func};

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x + y).unwrap_or_else(|| Expr::Add(Box::new(a), Box::new(b))),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x - y).unwrap_or_else(|| Expr::Sub(Box::new(a), Box::new(b))),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x * y).unwrap_or_else(|| Expr::Mul(Box::new(a), Box::new(b))),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, -1.0) => neg(b),
        _ if is_const(&b, -1.0) => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => folded(x / y).unwrap_or_else(|| Expr::Div(Box::new(a), Box::new(b))),
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, 0.0) && !is_const(&b, 0.0) => Expr::Const(0.0),
        // (c * e) / d  ->  (c / d) * e
        (Expr::Mul(c, e), Expr::Const(d)) if matches!(**c, Expr::Const(_)) => {
            let Expr::Const(c) = **c else { unreachable!() };
            match folded(c / d) {
                Some(k) => mul(k, (**e).clone()),
                None => Expr::Div(Box::new(a), Box::new(b)),
            }
        }
        // (c * e) / (d * f)  ->  (c / d) * (e / f)
        (Expr::Mul(c, e), Expr::Mul(d, f)) if matches!((&**c, &**d), (Expr::Const(_), Expr::Const(_))) => {
            let (Expr::Const(c), Expr::Const(d)) = (&**c, &**d) else { unreachable!() };
            match folded(c / d) {
                Some(k) => mul(k, div((**e).clone(), (**f).clone())),
                None => Expr::Div(Box::new(a), Box::new(b)),
            }
        }
        // sign(u) / abs(u)  ->  1 / u
        (Expr::Call(Func::Sign, u), Expr::Call(Func::Abs, v)) if u == v => {
            Expr::Div(Box::new(Expr::Const(1.0)), u.clone())
        }
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, p: Expr) -> Expr {
    if is_const(&p, 1.0) {
        return a;
    }
    if is_const(&p, 0.0) {
        return Expr::Const(1.0);
    }
    Expr::Pow(Box::new(a), Box::new(p))
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    /// Derivative with respect to `x`.
    ///
    /// `abs(u)` differentiates to `u' * sign(u)`; the kink at `u = 0` is not
    /// represented here and is picked up by [`Expr::singular_arguments`].
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param { .. } => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Neg(a) => neg(a.differentiate()),
            Expr::Add(a, b) => add(a.differentiate(), b.differentiate()),
            Expr::Sub(a, b) => sub(a.differentiate(), b.differentiate()),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(), (**b).clone()),
                mul((**a).clone(), b.differentiate()),
            ),
            Expr::Div(a, b) => {
                if b.depends_on_var() {
                    div(
                        sub(
                            mul(a.differentiate(), (**b).clone()),
                            mul((**a).clone(), b.differentiate()),
                        ),
                        pow((**b).clone(), Expr::Const(2.0)),
                    )
                } else {
                    div(a.differentiate(), (**b).clone())
                }
            }
            Expr::Pow(a, p) => {
                if !a.depends_on_var() {
                    return Expr::Const(0.0);
                }
                let lowered = sub((**p).clone(), Expr::Const(1.0));
                mul(mul((**p).clone(), pow((**a).clone(), lowered)), a.differentiate())
            }
            Expr::Call(f, a) => {
                let inner = a.differentiate();
                if is_const(&inner, 0.0) {
                    return Expr::Const(0.0);
                }
                let u = (**a).clone();
                match f {
                    Func::Sqrt => div(inner, mul(Expr::Const(2.0), call(Func::Sqrt, u))),
                    Func::Log => div(inner, u),
                    Func::Abs => mul(inner, call(Func::Sign, u)),
                    Func::Exp => mul(call(Func::Exp, u), inner),
                    Func::Sin => mul(call(Func::Cos, u), inner),
                    Func::Cos => mul(neg(call(Func::Sin, u)), inner),
                    Func::Sign => Expr::Const(0.0),
                }
            }
        }
    }
}
