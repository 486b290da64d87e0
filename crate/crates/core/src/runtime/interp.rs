//! Interpreter for perception and action bodies.

use serde::{Deserialize, Serialize};

use crate::dsl::{BinaryOp, Expr, Stmt, UnaryOp, Value};
use crate::world::{BuiltinError, WorldState};

use super::store::{PropertyStore, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BodyError {
    #[error("division by zero")]
    DivisionByZero,
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("type error: {0}")]
    Type(String),
}

/// A property write made by a body or an external `set_property`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub property: String,
    pub old: Value,
    pub new: Value,
    /// `perception <name>`, `action <name>` or `set`.
    pub by: String,
}

pub struct Exec<'a> {
    pub store: &'a mut PropertyStore,
    pub world: &'a mut WorldState,
    pub caller: &'a str,
    pub tick: u64,
    pub by: String,
    pub deltas: &'a mut Vec<Delta>,
}

impl Exec<'_> {
    /// Run a body to completion. On error the remaining statements are
    /// skipped; writes already made stay in place.
    pub fn run(&mut self, body: &[Stmt]) -> Result<(), BodyError> {
        for stmt in body {
            self.stmt(stmt)?;
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), BodyError> {
        match stmt {
            Stmt::Assign { property, value } => {
                let v = self.eval(value)?;
                let old = self.store.write(property, v.clone(), self.tick)?;
                self.deltas.push(Delta { property: property.clone(), old, new: v, by: self.by.clone() });
            }
            Stmt::If { cond, then_branch, else_branch } => {
                if self.truth(cond)? {
                    self.run(then_branch)?;
                } else {
                    self.run(else_branch)?;
                }
            }
            Stmt::Call(name, args) => {
                self.call(name, args)?;
            }
        }
        Ok(())
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Result<Value, BodyError> {
        let values = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.world.eval_builtin(name, &values, self.caller)?)
    }

    fn truth(&mut self, e: &Expr) -> Result<bool, BodyError> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            other => Err(BodyError::Type(format!("condition evaluated to {other}, expected a boolean"))),
        }
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Value, BodyError> {
        match e {
            Expr::Literal(v) => Ok(v.clone()),
            Expr::Property(p) => {
                self.store.get(p).cloned().ok_or_else(|| BodyError::Store(StoreError::UnknownProperty(p.clone())))
            }
            Expr::Call(name, args) => self.call(name, args),
            Expr::Unary(UnaryOp::Neg, inner) => match self.eval(inner)? {
                Value::Number(n) => Ok(Value::Number(-n)),
                other => Err(BodyError::Type(format!("cannot negate {other}"))),
            },
            Expr::Unary(UnaryOp::Not, inner) => Ok(Value::Bool(!self.truth(inner)?)),
            Expr::Binary(BinaryOp::And, a, b) => Ok(Value::Bool(self.truth(a)? && self.truth(b)?)),
            Expr::Binary(BinaryOp::Or, a, b) => Ok(Value::Bool(self.truth(a)? || self.truth(b)?)),
            Expr::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                binary(*op, x, y)
            }
        }
    }
}

fn binary(op: BinaryOp, x: Value, y: Value) -> Result<Value, BodyError> {
    use BinaryOp::*;
    if matches!(op, Eq | Ne) {
        if !x.same_type(&y) {
            return Err(BodyError::Type(format!("cannot compare {x} with {y}")));
        }
        return Ok(Value::Bool((x == y) == (op == Eq)));
    }
    let (Value::Number(a), Value::Number(b)) = (&x, &y) else {
        return Err(BodyError::Type(format!("`{}` needs numbers, found {x} and {y}", op.symbol())));
    };
    let (a, b) = (*a, *b);
    Ok(match op {
        Add => Value::Number(a + b),
        Sub => Value::Number(a - b),
        Mul => Value::Number(a * b),
        Div if b == 0.0 => return Err(BodyError::DivisionByZero),
        Div => Value::Number(a / b),
        Lt => Value::Bool(a < b),
        Le => Value::Bool(a <= b),
        Gt => Value::Bool(a > b),
        Ge => Value::Bool(a >= b),
        Eq | Ne | And | Or => unreachable!("handled above"),
    })
}
