//! Scalar expressions for user-defined costs and plant terms, backed by
//! `meval`'s parser.

use std::fmt;
use std::sync::Arc;

use meval::{ContextProvider, FuncEvalError};

use crate::error::{Error, Result};

/// A parsed expression bound to an ordered list of variable names.
#[derive(Clone)]
pub struct CompiledExpr {
    source: String,
    expr: meval::Expr,
    vars: Arc<[String]>,
}

struct Bindings<'a> {
    names: &'a [String],
    values: &'a [f64],
}

impl ContextProvider for Bindings<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        if let Some(k) = self.names.iter().position(|n| n == name) {
            return Some(self.values[k]);
        }
        match name {
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, FuncEvalError> {
        let unary = |f: fn(f64) -> f64| match args {
            [x] => Ok(f(*x)),
            _ => Err(FuncEvalError::NumberArgs(1)),
        };
        match name {
            "sin" => unary(f64::sin),
            "cos" => unary(f64::cos),
            "tan" => unary(f64::tan),
            "tanh" => unary(f64::tanh),
            "exp" => unary(f64::exp),
            "ln" => unary(f64::ln),
            "sqrt" => unary(f64::sqrt),
            "abs" => unary(f64::abs),
            "atan" => unary(f64::atan),
            "pow" => match args {
                [x, y] => Ok(x.powf(*y)),
                _ => Err(FuncEvalError::NumberArgs(2)),
            },
            _ => Err(FuncEvalError::UnknownFunction),
        }
    }
}

impl CompiledExpr {
    pub fn parse(source: &str, vars: &[String]) -> Result<Self> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::Config(format!("cannot parse expression `{source}`: {e}")))?;
        let compiled = CompiledExpr {
            source: source.to_string(),
            expr,
            vars: vars.to_vec().into(),
        };
        // a trial evaluation surfaces unknown variables and functions up front
        let probe = vec![0.0; vars.len()];
        compiled
            .expr
            .eval_with_context(compiled.bindings(&probe))
            .map_err(|e| Error::Config(format!("expression `{source}`: {e}")))?;
        Ok(compiled)
    }

    fn bindings<'a>(&'a self, values: &'a [f64]) -> Bindings<'a> {
        Bindings {
            names: &self.vars,
            values,
        }
    }

    /// Evaluates with `values` in the order of the bound variable names.
    /// Evaluation failures (which parse-time probing rules out) yield NaN.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.vars.len());
        self.expr.eval_with_context(self.bindings(values)).unwrap_or(f64::NAN)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for CompiledExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CompiledExpr({:?})", self.source)
    }
}
