//! Canonical source form. Output of these `Display` impls reparses to the
//! same AST.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

struct Indent(usize);

impl Display for Indent {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for _ in 0..self.0 {
            f.write_str("    ")?;
        }
        Ok(())
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Property(p) => write!(f, "self.{p}"),
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Unary(op, e) => {
                f.write_str(match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Not => "!",
                })?;
                write_operand(e, f)
            }
            Expr::Binary(op, l, r) => {
                write_operand(l, f)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(r, f)
            }
        }
    }
}

// Nested operators are always parenthesised; parentheses leave no trace in
// the tree so this is enough for the round trip.
fn write_operand(e: &Expr, f: &mut Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Binary(..) | Expr::Unary(..) => write!(f, "({e})"),
        Expr::Literal(Value::Number(n)) if *n < 0.0 => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

fn write_block(stmts: &[Stmt], depth: usize, f: &mut Formatter<'_>) -> fmt::Result {
    if stmts.is_empty() {
        return f.write_str("{ }");
    }
    f.write_str("{\n")?;
    for s in stmts {
        write_stmt(s, depth + 1, f)?;
    }
    write!(f, "{}}}", Indent(depth))
}

fn write_stmt(stmt: &Stmt, depth: usize, f: &mut Formatter<'_>) -> fmt::Result {
    write!(f, "{}", Indent(depth))?;
    match stmt {
        Stmt::Assign { property, value } => writeln!(f, "self.{property} = {value};"),
        Stmt::Call(name, args) => writeln!(f, "{};", Expr::Call(name.clone(), args.clone())),
        Stmt::If { cond, then_branch, else_branch } => {
            write!(f, "if {cond} ")?;
            write_block(then_branch, depth, f)?;
            if !else_branch.is_empty() {
                f.write_str(" else ")?;
                write_block(else_branch, depth, f)?;
            }
            f.write_char('\n')
        }
    }
}

impl Display for AgentClass {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "agent {} {{", self.name)?;
        for p in &self.properties {
            writeln!(f, "    property {} = {};", p.name, p.initial)?;
        }
        for p in &self.perceptions {
            write!(f, "    perception {} provide: {}", p.name, p.provides.join(", "))?;
            if let Some(n) = p.every {
                write!(f, " @every({n})")?;
            }
            f.write_char(' ')?;
            write_block(&p.body, 1, f)?;
            f.write_char('\n')?;
        }
        for a in &self.actions {
            write!(f, "    action {}", a.name)?;
            if !a.effects.is_empty() {
                let effects: Vec<String> = a.effects.iter().map(ToString::to_string).collect();
                write!(f, " ensure: {}", effects.join(", "))?;
            }
            f.write_char(' ')?;
            write_block(&a.body, 1, f)?;
            f.write_char('\n')?;
        }
        if !self.rules.is_empty() {
            writeln!(f, "    rules {{")?;
            for r in &self.rules {
                writeln!(f, "        {r}")?;
            }
            writeln!(f, "    }}")?;
        }
        writeln!(f, "}}")
    }
}

fn write_placement(at: &Placement, f: &mut Formatter<'_>) -> fmt::Result {
    match at {
        Placement::At { x, y } => write!(f, " at ({x}, {y})"),
        Placement::Random => f.write_str(" at random"),
    }
}

impl Display for ScenarioDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {{")?;
        if let (Some(w), Some(h)) = (self.width, self.height) {
            writeln!(f, "    world {w} x {h};")?;
        }
        if let Some(s) = self.seed {
            writeln!(f, "    seed {s};")?;
        }
        for s in &self.spawns {
            write!(f, "    spawn {}: {}", s.name, s.class)?;
            write_placement(&s.at, f)?;
            if !s.overrides.is_empty() {
                let items: Vec<String> = s.overrides.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                write!(f, " with {{ {} }}", items.join(", "))?;
            }
            writeln!(f, ";")?;
        }
        for e in &self.entities {
            write!(f, "    entity {}: {}", e.name, e.kind)?;
            write_placement(&e.at, f)?;
            writeln!(f, ";")?;
        }
        writeln!(f, "}}")
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for (i, c) in self.classes.iter().enumerate() {
            if i > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{c}")?;
        }
        if let Some(s) = &self.scenario {
            if !self.classes.is_empty() {
                f.write_char('\n')?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}
