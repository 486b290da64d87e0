//! Recursive descent parser for `.iag` sources.

use std::collections::HashSet;

use super::ast::*;
use super::error::{ParseError, Span};
use super::lexer::{tokenize, Tok, Token};

/// Parse a whole `.iag` file: agent classes plus an optional scenario block.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(source)?;
    let mut program = Program::default();
    let mut class_names: HashSet<String> = HashSet::new();
    while !p.at_eof() {
        let (word, span) = p.ident()?;
        match word.as_str() {
            "agent" => {
                let (class, name_span) = p.agent()?;
                if !class_names.insert(class.name.clone()) {
                    return Err(ParseError::validation(
                        name_span,
                        format!("duplicate agent class `{}`", class.name),
                    ));
                }
                program.classes.push(class);
            }
            "scenario" => {
                if program.scenario.is_some() {
                    return Err(ParseError::validation(span, "only one scenario block is allowed"));
                }
                program.scenario = Some(p.scenario()?);
            }
            other => {
                return Err(ParseError::syntax(
                    span,
                    format!("expected `agent` or `scenario`, found `{other}`"),
                ))
            }
        }
    }
    check_scenario(&program, &p.placements)?;
    Ok(program)
}

/// Scenario references that can only be checked once every class is known.
fn check_scenario(program: &Program, placements: &[PlacementSpans]) -> Result<(), ParseError> {
    let Some(sc) = &program.scenario else { return Ok(()) };
    let width = sc.width.unwrap_or(crate::world::DEFAULT_SIZE);
    let height = sc.height.unwrap_or(crate::world::DEFAULT_SIZE);
    let mut spawns = sc.spawns.iter();
    let mut entities = sc.entities.iter();
    for spans in placements {
        let at = match &spans.class {
            Some((class_name, class_span)) => {
                let spawn = spawns.next().expect("one spawn per recorded placement");
                let Some(class) = program.class(class_name) else {
                    return Err(ParseError::validation(*class_span, format!("unknown class `{class_name}`")));
                };
                for ((property, value), pspan) in spawn.overrides.iter().zip(&spans.overrides) {
                    let Some(decl) = class.property(property) else {
                        return Err(ParseError::validation(
                            *pspan,
                            format!("class `{class_name}` has no property `{property}`"),
                        ));
                    };
                    if !decl.initial.same_type(value) {
                        return Err(ParseError::validation(
                            *pspan,
                            format!("property `{property}` holds a {}, cannot start at {value}", decl.initial.type_name()),
                        ));
                    }
                }
                &spawn.at
            }
            None => &entities.next().expect("one entity per recorded placement").at,
        };
        if let (Placement::At { x, y }, Some(span)) = (at, spans.at) {
            if *x >= width || *y >= height {
                return Err(ParseError::validation(
                    span,
                    format!("`{}` placed at ({x}, {y}) outside the {width}x{height} world", spans.name),
                ));
            }
        }
    }
    Ok(())
}

/// Parse a conjunctive goal such as `intend(T, P)` or `main, not(danger)`.
/// A trailing `.` is accepted.
pub fn parse_query(source: &str) -> Result<Goal, ParseError> {
    let mut p = Parser::new(source)?;
    if p.at_eof() {
        return Ok(Vec::new());
    }
    let mut goal = vec![p.literal()?];
    while p.eat(&Tok::Comma) {
        goal.push(p.literal()?);
    }
    p.eat(&Tok::Dot);
    p.expect_eof()?;
    Ok(goal)
}

/// Parse a single clause, e.g. `eat :- not(danger).` The final `.` is optional.
pub fn parse_clause(source: &str) -> Result<Clause, ParseError> {
    let mut p = Parser::new(source)?;
    let clause = p.clause(true)?;
    p.expect_eof()?;
    Ok(clause)
}

/// Parse a property value literal (`true`, `3`, `-2.5`, `calm`, `"dog"`).
pub fn parse_value(source: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(source)?;
    let v = p.value()?;
    p.expect_eof()?;
    Ok(v)
}

/// Parse an annotation edit in declaration form: `mew ensure: reduce danger`.
/// Tendencies are checked; properties are checked later against the class.
pub fn parse_effect_decl(source: &str) -> Result<(String, Vec<EffectAnnotation>), ParseError> {
    let mut p = Parser::new(source)?;
    let (action, _) = p.ident()?;
    p.keyword("ensure")?;
    p.expect(&Tok::Colon)?;
    let effects = p.effect_list()?;
    p.eat(&Tok::Semi);
    p.expect_eof()?;
    Ok((action, effects.into_iter().map(|(e, _)| e).collect()))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
    placements: Vec<PlacementSpans>,
}

/// Source positions of a scenario line, for checks that need the classes.
struct PlacementSpans {
    name: String,
    class: Option<(String, Span)>,
    at: Option<Span>,
    overrides: Vec<Span>,
}

impl Parser {
    fn new(source: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: tokenize(source)?, pos: 0, anon: 0, placements: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::syntax(
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: &Tok) -> Result<Span, ParseError> {
        if self.peek() == tok {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.advance().span)),
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn is_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> Result<Span, ParseError> {
        if self.is_keyword(word) {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    fn lower_ident(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let (name, span) = self.ident()?;
        if !name.starts_with(|c: char| c.is_lowercase()) {
            return Err(ParseError::syntax(
                span,
                format!("{what} `{name}` must start with a lowercase letter"),
            ));
        }
        Ok((name, span))
    }

    fn unsigned(&mut self, what: &str) -> Result<u64, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) if n >= 0.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => {
                self.advance();
                Ok(n as u64)
            }
            Tok::Number(_) => Err(ParseError::syntax(span, format!("{what} must be a non-negative integer"))),
            _ => Err(self.unexpected(what)),
        }
    }

    // ---- agent classes -------------------------------------------------

    fn agent(&mut self) -> Result<(AgentClass, Span), ParseError> {
        let (name, name_span) = self.lower_ident("agent class name")?;
        self.expect(&Tok::LBrace)?;
        let mut class = AgentClass {
            name,
            properties: Vec::new(),
            perceptions: Vec::new(),
            actions: Vec::new(),
            rules: Vec::new(),
        };
        let mut v = Validation::default();
        while !self.eat(&Tok::RBrace) {
            let (word, span) = self.ident()?;
            match word.as_str() {
                "property" => {
                    let (name, span) = self.lower_ident("property name")?;
                    self.expect(&Tok::Assign)?;
                    let initial = self.value()?;
                    self.expect(&Tok::Semi)?;
                    v.properties.push(span);
                    class.properties.push(PropertyDecl { name, initial });
                }
                "perception" => {
                    let (name, span) = self.lower_ident("perception name")?;
                    self.keyword("provide")?;
                    self.expect(&Tok::Colon)?;
                    let mut provides = Vec::new();
                    let mut spans = Vec::new();
                    loop {
                        let (sym, s) = self.lower_ident("provided symbol")?;
                        provides.push(sym);
                        spans.push(s);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    let every = if self.eat(&Tok::At) {
                        let at = self.keyword("every")?;
                        self.expect(&Tok::LParen)?;
                        let n = self.unsigned("tick period")?;
                        self.expect(&Tok::RParen)?;
                        if n == 0 {
                            return Err(ParseError::validation(at, "`@every` period must be at least 1"));
                        }
                        Some(n)
                    } else {
                        None
                    };
                    let body_start = self.span();
                    let body = self.block()?;
                    v.methods.push((name.clone(), span));
                    v.provides.push(spans);
                    v.bodies.push(body_start);
                    class.perceptions.push(PerceptionDecl { name, provides, every, body });
                }
                "action" => {
                    let (name, span) = self.lower_ident("action name")?;
                    let mut effects = Vec::new();
                    let mut ensure_seen = false;
                    while self.is_keyword("ensure") {
                        let kw = self.advance().span;
                        if ensure_seen {
                            return Err(ParseError::validation(
                                kw,
                                format!("repeated `ensure:` on action `{name}`; list effects with commas"),
                            ));
                        }
                        ensure_seen = true;
                        self.expect(&Tok::Colon)?;
                        effects = self.effect_list()?;
                    }
                    let body_start = self.span();
                    let body = self.block()?;
                    v.methods.push((name.clone(), span));
                    v.effects.push(effects.iter().map(|(_, s)| *s).collect());
                    v.action_bodies.push(body_start);
                    class.actions.push(ActionDecl {
                        name,
                        effects: effects.into_iter().map(|(e, _)| e).collect(),
                        body,
                    });
                }
                "rules" => {
                    self.expect(&Tok::LBrace)?;
                    while !self.eat(&Tok::RBrace) {
                        let span = self.span();
                        class.rules.push(self.clause(false)?);
                        v.rules.push(span);
                    }
                }
                other => {
                    return Err(ParseError::syntax(
                        span,
                        format!(
                            "expected `property`, `perception`, `action` or `rules`, found `{other}`"
                        ),
                    ))
                }
            }
        }
        v.check(&mut class)?;
        Ok((class, name_span))
    }

    fn effect_list(&mut self) -> Result<Vec<(EffectAnnotation, Span)>, ParseError> {
        let mut effects = Vec::new();
        loop {
            let (word, span) = self.ident()?;
            let tendency = Tendency::from_keyword(&word).ok_or_else(|| {
                ParseError::validation(
                    span,
                    format!("unknown tendency `{word}` (expected increase, reduce, maintain or independent)"),
                )
            })?;
            let (property, pspan) = self.lower_ident("property name")?;
            effects.push((EffectAnnotation { tendency, property }, pspan));
            if !self.eat(&Tok::Comma) {
                return Ok(effects);
            }
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Value::Number(n))
            }
            Tok::Minus => {
                self.advance();
                match self.peek().clone() {
                    Tok::Number(n) => {
                        self.advance();
                        Ok(Value::Number(-n))
                    }
                    _ => Err(self.unexpected("number")),
                }
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Value::Symbol(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Value::Bool(s == "true"))
            }
            Tok::Ident(s) if s.starts_with(|c: char| c.is_lowercase()) => {
                self.advance();
                Ok(Value::Symbol(s))
            }
            _ => Err(ParseError::syntax(
                span,
                format!("expected a value (number, boolean or symbol), found {}", self.peek().describe()),
            )),
        }
    }

    // ---- rules ---------------------------------------------------------

    fn clause(&mut self, optional_dot: bool) -> Result<Clause, ParseError> {
        self.anon = 0;
        let head_span = self.span();
        let head = self.term()?;
        match &head {
            Term::Atom(n) | Term::Compound(n, _) if n != "not" => {}
            Term::Atom(_) | Term::Compound(..) => {
                return Err(ParseError::syntax(head_span, "a clause head cannot be negated"))
            }
            _ => return Err(ParseError::syntax(head_span, "a clause head must be an atom or compound term")),
        }
        let mut body = Vec::new();
        if self.eat(&Tok::Neck) {
            body.push(self.literal()?);
            while self.eat(&Tok::Comma) {
                body.push(self.literal()?);
            }
        }
        if !(self.eat(&Tok::Dot) || optional_dot && self.at_eof()) {
            return Err(self.unexpected("`.` or `,`"));
        }
        Ok(Clause { head, body })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if self.is_keyword("not") && *self.peek_at(1) == Tok::LParen {
            self.advance();
            self.advance();
            let atom = self.term()?;
            self.expect(&Tok::RParen)?;
            return Ok(Literal::negative(atom));
        }
        let span = self.span();
        let atom = self.term()?;
        if matches!(atom, Term::Number(_)) {
            return Err(ParseError::syntax(span, "a number is not a goal"));
        }
        Ok(Literal::positive(atom))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Term::Number(n))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Number(_)) => {
                self.advance();
                let Tok::Number(n) = self.advance().tok else { unreachable!() };
                Ok(Term::Number(-n))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Term::Atom(s))
            }
            Tok::Ident(name) => {
                self.advance();
                if name == "_" {
                    self.anon += 1;
                    return Ok(Term::Var(format!("_{}", self.anon)));
                }
                if name.starts_with(|c: char| c.is_uppercase() || c == '_') {
                    return Ok(Term::Var(name));
                }
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.term()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.term()?);
                    }
                    self.expect(&Tok::RParen)?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Atom(name))
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    // ---- imperative bodies ----------------------------------------------

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        if self.is_keyword("self") {
            self.advance();
            self.expect(&Tok::Dot)?;
            let (property, _) = self.lower_ident("property name")?;
            self.expect(&Tok::Assign)?;
            let value = self.expr()?;
            self.expect(&Tok::Semi)?;
            return Ok(Stmt::Assign { property, value });
        }
        if self.is_keyword("if") {
            return self.if_stmt();
        }
        let (name, span) = self.ident()?;
        if *self.peek() != Tok::LParen {
            return Err(ParseError::syntax(
                span,
                format!("expected `self.<property> = ...`, `if` or a builtin call, found `{name}`"),
            ));
        }
        let args = self.call_args()?;
        self.expect(&Tok::Semi)?;
        Ok(Stmt::Call(name, args))
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        self.keyword("if")?;
        let cond = self.expr()?;
        let then_branch = self.block()?;
        let else_branch = if self.is_keyword("else") {
            self.advance();
            if self.is_keyword("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If { cond, then_branch, else_branch })
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
            self.expect(&Tok::RParen)?;
        }
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.and_expr()?;
            lhs = Expr::Binary(BinaryOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.cmp_expr()?;
            lhs = Expr::Binary(BinaryOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.add_expr()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary_expr()?)));
        }
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary_expr()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Expr::Literal(Value::Number(n)))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Literal(Value::Symbol(s)))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(word) => {
                let span = self.advance().span;
                match word.as_str() {
                    "true" => Ok(Expr::Literal(Value::Bool(true))),
                    "false" => Ok(Expr::Literal(Value::Bool(false))),
                    "self" => {
                        self.expect(&Tok::Dot)?;
                        let (p, _) = self.lower_ident("property name")?;
                        Ok(Expr::Property(p))
                    }
                    _ if *self.peek() == Tok::LParen => {
                        let args = self.call_args()?;
                        Ok(Expr::Call(word, args))
                    }
                    _ if word.starts_with(|c: char| c.is_lowercase()) => {
                        Ok(Expr::Literal(Value::Symbol(word)))
                    }
                    _ => Err(ParseError::syntax(span, format!("unexpected `{word}` in expression"))),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    // ---- scenario --------------------------------------------------------

    fn scenario(&mut self) -> Result<ScenarioDecl, ParseError> {
        self.expect(&Tok::LBrace)?;
        let mut sc = ScenarioDecl::default();
        let mut names: HashSet<String> = HashSet::new();
        while !self.eat(&Tok::RBrace) {
            let (word, span) = self.ident()?;
            match word.as_str() {
                "world" => {
                    if sc.width.is_some() {
                        return Err(ParseError::validation(span, "world size declared twice"));
                    }
                    let w = self.unsigned("world width")? as u32;
                    if !self.is_keyword("x") {
                        return Err(self.unexpected("`x` (write sizes as `10 x 10`)"));
                    }
                    self.advance();
                    let h = self.unsigned("world height")? as u32;
                    if w == 0 || h == 0 {
                        return Err(ParseError::validation(span, "world dimensions must be positive"));
                    }
                    self.expect(&Tok::Semi)?;
                    sc.width = Some(w);
                    sc.height = Some(h);
                }
                "seed" => {
                    let s = self.unsigned("seed")?;
                    self.expect(&Tok::Semi)?;
                    sc.seed = Some(s);
                }
                "spawn" | "entity" => {
                    let (name, nspan) = self.lower_ident("entity name")?;
                    if !names.insert(name.clone()) {
                        return Err(ParseError::validation(nspan, format!("duplicate entity name `{name}`")));
                    }
                    self.expect(&Tok::Colon)?;
                    let (kind, kind_span) = self.lower_ident(if word == "spawn" { "class name" } else { "entity kind" })?;
                    let mut spans = PlacementSpans {
                        name: name.clone(),
                        class: (word == "spawn").then(|| (kind.clone(), kind_span)),
                        at: None,
                        overrides: Vec::new(),
                    };
                    let at = if self.is_keyword("at") {
                        self.advance();
                        spans.at = Some(self.span());
                        if self.is_keyword("random") {
                            self.advance();
                            Placement::Random
                        } else {
                            self.expect(&Tok::LParen)?;
                            let x = self.unsigned("x coordinate")? as u32;
                            self.expect(&Tok::Comma)?;
                            let y = self.unsigned("y coordinate")? as u32;
                            self.expect(&Tok::RParen)?;
                            Placement::At { x, y }
                        }
                    } else {
                        Placement::Random
                    };
                    if word == "spawn" {
                        let mut overrides = Vec::new();
                        if self.is_keyword("with") {
                            self.advance();
                            self.expect(&Tok::LBrace)?;
                            loop {
                                let (p, pspan) = self.lower_ident("property name")?;
                                self.expect(&Tok::Assign)?;
                                overrides.push((p, self.value()?));
                                spans.overrides.push(pspan);
                                if !self.eat(&Tok::Comma) {
                                    break;
                                }
                            }
                            self.expect(&Tok::RBrace)?;
                        }
                        sc.spawns.push(SpawnDecl { name, class: kind, at, overrides });
                    } else {
                        sc.entities.push(EntityDecl { name, kind, at });
                    }
                    self.placements.push(spans);
                    self.expect(&Tok::Semi)?;
                }
                other => {
                    return Err(ParseError::syntax(
                        span,
                        format!("expected `world`, `seed`, `spawn` or `entity`, found `{other}`"),
                    ))
                }
            }
        }
        Ok(sc)
    }
}

/// Spans collected while parsing one agent class, used to pinpoint
/// validation failures after the whole class is known.
#[derive(Default)]
struct Validation {
    properties: Vec<Span>,
    methods: Vec<(String, Span)>,
    provides: Vec<Vec<Span>>,
    bodies: Vec<Span>,
    effects: Vec<Vec<Span>>,
    action_bodies: Vec<Span>,
    rules: Vec<Span>,
}

impl Validation {
    fn check(&self, class: &mut AgentClass) -> Result<(), ParseError> {
        let mut seen = HashSet::new();
        for (p, span) in class.properties.iter().zip(&self.properties) {
            if !seen.insert(p.name.as_str()) {
                return Err(ParseError::validation(*span, format!("duplicate property `{}`", p.name)));
            }
        }
        let declared = |name: &str| class.properties.iter().any(|p| p.name == name);

        let mut methods = HashSet::new();
        for (name, span) in &self.methods {
            if !methods.insert(name.as_str()) {
                return Err(ParseError::validation(*span, format!("duplicate method `{name}`")));
            }
        }

        for (perception, spans) in class.perceptions.iter().zip(&self.provides) {
            let mut provided = HashSet::new();
            for (sym, span) in perception.provides.iter().zip(spans) {
                if !declared(sym) {
                    return Err(ParseError::validation(
                        *span,
                        format!("perception `{}` provides undeclared property `{sym}`", perception.name),
                    ));
                }
                if !provided.insert(sym.as_str()) {
                    return Err(ParseError::validation(*span, format!("`{sym}` provided twice")));
                }
            }
        }
        for (perception, span) in class.perceptions.iter().zip(&self.bodies) {
            check_body(&perception.body, *span, &declared, Some(&perception.provides), &perception.name)?;
        }

        for (action, spans) in class.actions.iter().zip(&self.effects) {
            let mut touched = HashSet::new();
            for (effect, span) in action.effects.iter().zip(spans) {
                if !declared(&effect.property) {
                    return Err(ParseError::validation(
                        *span,
                        format!("action `{}` ensures undeclared property `{}`", action.name, effect.property),
                    ));
                }
                if !touched.insert(effect.property.as_str()) {
                    return Err(ParseError::validation(
                        *span,
                        format!("action `{}` declares more than one effect on `{}`", action.name, effect.property),
                    ));
                }
            }
        }
        for (action, span) in class.actions.iter().zip(&self.action_bodies) {
            check_body(&action.body, *span, &declared, None, &action.name)?;
        }

        let names: Vec<String> = class.properties.iter().map(|p| p.name.clone()).collect();
        for (rule, span) in class.rules.iter_mut().zip(&self.rules) {
            if rule.body.iter().any(|l| matches!(l.atom, Term::Number(_))) {
                return Err(ParseError::validation(*span, "a number is not a goal"));
            }
            rule.mark_property_atoms(&names);
        }
        Ok(())
    }
}

fn check_body(
    body: &[Stmt],
    span: Span,
    declared: &dyn Fn(&str) -> bool,
    provides: Option<&[String]>,
    method: &str,
) -> Result<(), ParseError> {
    for stmt in body {
        match stmt {
            Stmt::Assign { property, value } => {
                if !declared(property) {
                    return Err(ParseError::validation(
                        span,
                        format!("`{method}` assigns undeclared property `{property}`"),
                    ));
                }
                if let Some(provides) = provides {
                    if !provides.iter().any(|p| p == property) {
                        return Err(ParseError::validation(
                            span,
                            format!("perception `{method}` writes `{property}` which is not in its provide list"),
                        ));
                    }
                }
                check_expr(value, span, declared, method)?;
            }
            Stmt::If { cond, then_branch, else_branch } => {
                check_expr(cond, span, declared, method)?;
                check_body(then_branch, span, declared, provides, method)?;
                check_body(else_branch, span, declared, provides, method)?;
            }
            Stmt::Call(_, args) => {
                for a in args {
                    check_expr(a, span, declared, method)?;
                }
            }
        }
    }
    Ok(())
}

fn check_expr(expr: &Expr, span: Span, declared: &dyn Fn(&str) -> bool, method: &str) -> Result<(), ParseError> {
    match expr {
        Expr::Literal(_) => Ok(()),
        Expr::Property(p) if declared(p) => Ok(()),
        Expr::Property(p) => Err(ParseError::validation(
            span,
            format!("`{method}` reads undeclared property `{p}`"),
        )),
        Expr::Call(_, args) => args.iter().try_for_each(|a| check_expr(a, span, declared, method)),
        Expr::Unary(_, e) => check_expr(e, span, declared, method),
        Expr::Binary(_, l, r) => {
            check_expr(l, span, declared, method)?;
            check_expr(r, span, declared, method)
        }
    }
}
