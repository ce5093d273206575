//! Expression tree for the Hamiltonian DSL, with evaluation over any
//! [`DiffScalar`] and a pretty-printer whose output re-parses to an
//! identical tree.

use crate::error::{Error, Result};
use crate::scalar::{real, DiffScalar};
use num_traits::Zero;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuncOp {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl FuncOp {
    pub fn name(self) -> &'static str {
        match self {
            FuncOp::Sin => "sin",
            FuncOp::Cos => "cos",
            FuncOp::Exp => "exp",
            FuncOp::Log => "log",
            FuncOp::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => FuncOp::Sin,
            "cos" => FuncOp::Cos,
            "exp" => FuncOp::Exp,
            "log" => FuncOp::Log,
            "sqrt" => FuncOp::Sqrt,
            _ => return None,
        })
    }
}

/// Variable reference: a coordinate slot or a named parameter (by index into
/// the parameter table fixed at parse time).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRef {
    /// `q_i`, zero-based.
    Q(usize),
    /// `p_i`, zero-based.
    P(usize),
    Param(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Var(VarRef),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Power with an integer exponent folded at parse time.
    PowInt(Box<Expr>, i32),
    /// Power with a real constant exponent folded at parse time.
    PowReal(Box<Expr>, f64),
    Func(FuncOp, Box<Expr>),
}

impl Expr {
    /// Fold `Pow` nodes whose exponent is a pure constant into `PowInt` /
    /// `PowReal`; leave variable exponents as general powers.
    pub fn fold_powers(self) -> Expr {
        match self {
            Expr::Neg(e) => Expr::Neg(Box::new(e.fold_powers())),
            Expr::Func(f, e) => Expr::Func(f, Box::new(e.fold_powers())),
            Expr::PowInt(e, n) => Expr::PowInt(Box::new(e.fold_powers()), n),
            Expr::PowReal(e, c) => Expr::PowReal(Box::new(e.fold_powers()), c),
            Expr::Bin(BinOp::Pow, l, r) => {
                let l = l.fold_powers();
                let r = r.fold_powers();
                if let Some(c) = r.constant_value() {
                    if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                        Expr::PowInt(Box::new(l), c as i32)
                    } else {
                        Expr::PowReal(Box::new(l), c)
                    }
                } else {
                    Expr::Bin(BinOp::Pow, Box::new(l), Box::new(r))
                }
            }
            Expr::Bin(op, l, r) => {
                Expr::Bin(op, Box::new(l.fold_powers()), Box::new(r.fold_powers()))
            }
            other => other,
        }
    }

    /// Value of a variable-free subtree, if it is one.
    fn constant_value(&self) -> Option<f64> {
        match self {
            Expr::Number(x) => Some(*x),
            Expr::Neg(e) => e.constant_value().map(|x| -x),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.constant_value()?, r.constant_value()?);
                Some(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                })
            }
            Expr::PowInt(e, n) => Some(e.constant_value()?.powi(*n)),
            Expr::PowReal(e, c) => Some(e.constant_value()?.powf(*c)),
            Expr::Func(_, _) | Expr::Var(_) => None,
        }
    }

    /// Indices of the parameters this expression actually references.
    pub fn referenced_params(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Var(VarRef::Param(i)) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Expr::Var(_) | Expr::Number(_) => {}
            Expr::Neg(e) | Expr::Func(_, e) | Expr::PowInt(e, _) | Expr::PowReal(e, _) => {
                e.referenced_params(out)
            }
            Expr::Bin(_, l, r) => {
                l.referenced_params(out);
                r.referenced_params(out);
            }
        }
    }

    /// Replace parameter references with whole subtrees (used to expand
    /// rotational invariants like `r2` into polynomial expressions).
    pub fn substitute_params(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Var(VarRef::Param(i)) => subs[*i].clone(),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Number(x) => Expr::Number(*x),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute_params(subs))),
            Expr::Bin(op, l, r) => Expr::Bin(
                *op,
                Box::new(l.substitute_params(subs)),
                Box::new(r.substitute_params(subs)),
            ),
            Expr::PowInt(e, n) => Expr::PowInt(Box::new(e.substitute_params(subs)), *n),
            Expr::PowReal(e, c) => Expr::PowReal(Box::new(e.substitute_params(subs)), *c),
            Expr::Func(f, e) => Expr::Func(*f, Box::new(e.substitute_params(subs))),
        }
    }

    /// Evaluate over any differentiable scalar. `coords` supplies the flat
    /// `(q_1..q_n, p_1..p_n)` values, `params` the bound parameter values.
    pub fn eval<T: DiffScalar>(&self, n: usize, coords: &[T], params: &[T::Real]) -> Result<T> {
        let v = self.eval_inner(n, coords, params)?;
        if !v.all_finite() {
            return Err(Error::NonFinite {
                context: self.to_source(&[]),
            });
        }
        Ok(v)
    }

    fn eval_inner<T: DiffScalar>(&self, n: usize, coords: &[T], params: &[T::Real]) -> Result<T> {
        Ok(match self {
            Expr::Number(x) => T::constant(real::<T::Real>(*x)),
            Expr::Var(VarRef::Q(i)) => coords[*i],
            Expr::Var(VarRef::P(i)) => coords[n + *i],
            Expr::Var(VarRef::Param(i)) => T::constant(params[*i]),
            Expr::Neg(e) => -e.eval_inner(n, coords, params)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval_inner(n, coords, params)?;
                let b = r.eval_inner(n, coords, params)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.real_value() == T::Real::zero() {
                            return Err(self.domain_error("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        // Variable exponent: a^b = exp(b ln a), a > 0.
                        if a.real_value() <= T::Real::zero() {
                            return Err(self.domain_error("power with non-positive base"));
                        }
                        (b * a.ln()).exp()
                    }
                }
            }
            Expr::PowInt(e, k) => {
                let a = e.eval_inner(n, coords, params)?;
                if *k < 0 && a.real_value() == T::Real::zero() {
                    return Err(self.domain_error("zero base with negative exponent"));
                }
                a.powi(*k)
            }
            Expr::PowReal(e, c) => {
                let a = e.eval_inner(n, coords, params)?;
                if a.real_value() <= T::Real::zero() {
                    return Err(self.domain_error("power with non-positive base"));
                }
                a.powf(real::<T::Real>(*c))
            }
            Expr::Func(f, e) => {
                let a = e.eval_inner(n, coords, params)?;
                match f {
                    FuncOp::Sin => a.sin(),
                    FuncOp::Cos => a.cos(),
                    FuncOp::Exp => a.exp(),
                    FuncOp::Log => {
                        if a.real_value() <= T::Real::zero() {
                            return Err(self.domain_error("log of non-positive value"));
                        }
                        a.ln()
                    }
                    FuncOp::Sqrt => {
                        if a.real_value() < T::Real::zero() {
                            return Err(self.domain_error("sqrt of negative value"));
                        }
                        a.sqrt()
                    }
                }
            }
        })
    }

    fn domain_error(&self, msg: &str) -> Error {
        Error::Domain {
            expr: self.to_source(&[]),
            msg: msg.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 3,
            // A negative literal prints with a leading minus, so it binds
            // like a negation for parenthesization purposes.
            Expr::Neg(_) => 5,
            Expr::Number(x) if x.is_sign_negative() => 5,
            Expr::Bin(BinOp::Pow, _, _) | Expr::PowInt(_, _) | Expr::PowReal(_, _) => 7,
            _ => 10,
        }
    }

    /// Render back to DSL source. `param_names` resolves `Param` indices;
    /// pass the table used at parse time.
    pub fn to_source(&self, param_names: &[String]) -> String {
        let mut out = String::new();
        self.write_source(&mut out, param_names, 0, false);
        out
    }

    fn write_source(&self, out: &mut String, names: &[String], parent: u8, right_side: bool) {
        let prec = self.precedence();
        // Left-associative grammar: a right child of equal precedence needs
        // parentheses, a left child does not.
        let need_parens = prec < parent || (prec == parent && right_side);
        if need_parens {
            out.push('(');
        }
        match self {
            Expr::Number(x) => {
                let _ = write!(out, "{x}");
            }
            Expr::Var(VarRef::Q(i)) => {
                let _ = write!(out, "q{}", i + 1);
            }
            Expr::Var(VarRef::P(i)) => {
                let _ = write!(out, "p{}", i + 1);
            }
            Expr::Var(VarRef::Param(i)) => {
                out.push_str(names.get(*i).map(String::as_str).unwrap_or("param"));
            }
            Expr::Neg(e) => {
                out.push('-');
                e.write_source(out, names, prec, true);
            }
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                l.write_source(out, names, prec, false);
                out.push_str(sym);
                r.write_source(out, names, prec, true);
            }
            Expr::PowInt(e, k) => {
                e.write_source(out, names, prec, false);
                let _ = write!(out, "^{k}");
            }
            Expr::PowReal(e, c) => {
                e.write_source(out, names, prec, false);
                let _ = write!(out, "^{c}");
            }
            Expr::Func(f, e) => {
                out.push_str(f.name());
                out.push('(');
                e.write_source(out, names, 0, false);
                out.push(')');
            }
        }
        if need_parens {
            out.push(')');
        }
    }
}
