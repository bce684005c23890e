//! Recursive-descent parser for Feather declarations and commands.

use crate::expr::{AttrName, BinaryOp, Expr, Subject, UnaryOp};
use crate::model::{ConstraintKind, DecompKind, Value};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, Pos};

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;

fn decomp_keyword(w: &str) -> Option<DecompKind> {
    match w {
        "mandatory" => Some(DecompKind::Mandatory),
        "optional" => Some(DecompKind::Optional),
        "alternative" => Some(DecompKind::Alternative),
        "or" => Some(DecompKind::Or),
        _ => None,
    }
}

fn constraint_keyword(w: &str) -> Option<ConstraintKind> {
    match w {
        "requires" => Some(ConstraintKind::Requires),
        "excludes" => Some(ConstraintKind::Excludes),
        _ => None,
    }
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        let i = (self.at + 1).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseError {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", self.peek()),
        })
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.error(&format!("'{w}'"))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(&t.to_string())
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(what),
        }
    }

    fn attribute_identifier(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Word(w) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            Tok::Var(_) => Err(ParseError {
                pos: self.pos(),
                message: "attribute identifiers must start with a lowercase letter".to_string(),
            }),
            _ => self.error("an attribute identifier"),
        }
    }

    fn variable(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Var(v) => {
                let v = v.clone();
                self.advance();
                Ok(v)
            }
            _ => self.error("a feature variable"),
        }
    }

    fn structural(&mut self, name: &str) -> PResult<()> {
        match self.peek() {
            Tok::Structural(s) if s == name => {
                self.advance();
                Ok(())
            }
            _ => self.error(&format!("'{name}'")),
        }
    }

    fn constraint_kind(&mut self) -> PResult<ConstraintKind> {
        if let Tok::Word(w) = self.peek() {
            if let Some(k) = constraint_keyword(w) {
                self.advance();
                return Ok(k);
            }
        }
        self.error("'requires' or 'excludes'")
    }

    // ---- declarations ----

    fn literal(&mut self) -> PResult<Value> {
        let negative = match self.peek() {
            Tok::Minus => {
                self.advance();
                Some(true)
            }
            Tok::Plus => {
                self.advance();
                Some(false)
            }
            _ => None,
        };
        let v = match (self.peek().clone(), negative) {
            (Tok::Int(i), neg) => Value::Int(if neg == Some(true) { -i } else { i }),
            (Tok::Real(r), neg) => Value::Real(if neg == Some(true) { -r } else { r }),
            (Tok::Word(w), None) if w == "true" || w == "false" => Value::Bool(w == "true"),
            (Tok::Str(s), None) => Value::Str(s),
            _ => return self.error("a literal value"),
        };
        self.advance();
        Ok(v)
    }

    fn attribute_decls(&mut self) -> PResult<Vec<(String, Value)>> {
        let mut out = Vec::new();
        while self.eat_word("attribute") {
            let id = self.attribute_identifier()?;
            let v = self.literal()?;
            out.push((id, v));
        }
        Ok(out)
    }

    fn root_decl(&mut self) -> PResult<RootDecl> {
        let pos = self.pos();
        self.expect_word("root")?;
        let name = self.string("the root feature name")?;
        let attributes = self.attribute_decls()?;
        self.expect(Tok::Semi)?;
        Ok(RootDecl {
            name,
            attributes,
            pos,
        })
    }

    fn feature_decl(&mut self) -> PResult<FeatureDecl> {
        let pos = self.pos();
        self.expect_word("feature")?;
        let name = self.string("a feature name")?;
        let parent = self.string("the parent feature name")?;
        let (decomp, group_sibling) = match self.peek() {
            Tok::Word(w) if decomp_keyword(w).is_some() => {
                let k = decomp_keyword(w).expect("checked");
                self.advance();
                if k.is_group() {
                    self.expect_word("to")?;
                    (k, Some(self.string("a sibling feature name")?))
                } else {
                    (k, None)
                }
            }
            _ => return self.error("a decomposition type"),
        };
        let attributes = self.attribute_decls()?;
        self.expect(Tok::Semi)?;
        Ok(FeatureDecl {
            name,
            parent,
            decomp,
            group_sibling,
            attributes,
            pos,
        })
    }

    fn constraint_decl(&mut self) -> PResult<ConstraintDecl> {
        let pos = self.pos();
        self.expect_word("constraint")?;
        let left = self.string("a feature name")?;
        let kind = self.constraint_kind()?;
        let right = self.string("a feature name")?;
        self.expect(Tok::Semi)?;
        Ok(ConstraintDecl {
            left,
            kind,
            right,
            pos,
        })
    }

    fn declarations(&mut self) -> PResult<Declarations> {
        if !self.at_word("root") {
            return self.error("the root feature declaration");
        }
        let root = Some(self.root_decl()?);
        let mut features = Vec::new();
        while self.at_word("feature") {
            features.push(self.feature_decl()?);
        }
        let mut constraints = Vec::new();
        while self.at_word("constraint") {
            constraints.push(self.constraint_decl()?);
        }
        Ok(Declarations {
            root,
            features,
            constraints,
        })
    }

    // ---- commands ----

    fn feature_desc(&mut self) -> PResult<Subject> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Subject::Feature(s))
            }
            Tok::Var(v) => {
                self.advance();
                Ok(Subject::Var(v))
            }
            _ => self.error("a feature name or feature variable"),
        }
    }

    fn name_desc(&mut self) -> PResult<NameDesc> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(NameDesc::Literal(s))
            }
            Tok::Var(v) => {
                self.advance();
                self.expect(Tok::Dot)?;
                self.structural("_name")?;
                Ok(NameDesc::VarName(v))
            }
            _ => self.error("a feature name or V._name"),
        }
    }

    fn constraint_desc(&mut self) -> PResult<ConstraintDesc> {
        let left = self.feature_desc()?;
        let kind = self.constraint_kind()?;
        let right = self.feature_desc()?;
        Ok(ConstraintDesc { left, kind, right })
    }

    fn decomp_setting(&mut self) -> PResult<DecompSetting> {
        let value = match self.peek().clone() {
            Tok::Word(w) if decomp_keyword(&w).is_some() => {
                self.advance();
                DecompValue::Kind(decomp_keyword(&w).expect("checked"))
            }
            Tok::Str(_) | Tok::Var(_) => {
                let s = self.feature_desc()?;
                self.expect(Tok::Dot)?;
                self.structural("_decomp")?;
                DecompValue::Of(s)
            }
            _ => return self.error("a decomposition value"),
        };
        let sibling = if self.eat_word("to") {
            Some(self.feature_desc()?)
        } else {
            None
        };
        Ok(DecompSetting { value, sibling })
    }

    fn attr_value(&mut self) -> PResult<AttrValue> {
        let tag = match self.peek() {
            Tok::Word(w) => w.clone(),
            _ => return self.error("an attribute type (numeric, boolean, string or inherited)"),
        };
        let value = match tag.as_str() {
            "inherited" => {
                self.advance();
                self.expect(Tok::Colon)?;
                let s = self.feature_desc()?;
                self.expect(Tok::Dot)?;
                AttrValue::Inherited(s, self.attribute_identifier()?)
            }
            "numeric" => {
                self.advance();
                self.expect(Tok::Colon)?;
                AttrValue::Numeric(self.expr()?)
            }
            "boolean" => {
                self.advance();
                self.expect(Tok::Colon)?;
                AttrValue::Boolean(self.expr()?)
            }
            "string" => {
                self.advance();
                self.expect(Tok::Colon)?;
                AttrValue::Str(self.string("a string literal")?)
            }
            _ => return self.error("an attribute type (numeric, boolean, string or inherited)"),
        };
        Ok(value)
    }

    fn attr_assign(&mut self) -> PResult<AttrAssign> {
        let name = self.attribute_identifier()?;
        self.expect(Tok::Eq)?;
        Ok(AttrAssign {
            name,
            value: self.attr_value()?,
        })
    }

    fn feature_update(&mut self) -> PResult<FeatureUpdate> {
        if let Tok::Structural(s) = self.peek().clone() {
            let pos = self.pos();
            self.advance();
            self.expect(Tok::Eq)?;
            return match s.as_str() {
                "_name" => Ok(FeatureUpdate::Name(self.string("a string literal")?)),
                "_parent" => Ok(FeatureUpdate::Parent(self.name_desc()?)),
                "_decomp" => Ok(FeatureUpdate::Decomp(self.decomp_setting()?)),
                _ => Err(ParseError {
                    pos,
                    message: format!("{s} is read-only"),
                }),
            };
        }
        Ok(FeatureUpdate::Attr(self.attr_assign()?))
    }

    fn feature_updates(&mut self) -> PResult<Vec<FeatureUpdate>> {
        self.expect_word("set")?;
        let mut out = vec![self.feature_update()?];
        while self.eat(&Tok::Comma) {
            out.push(self.feature_update()?);
        }
        Ok(out)
    }

    fn constraint_update(&mut self) -> PResult<ConstraintUpdate> {
        let part = match self.peek() {
            Tok::Word(w) => w.clone(),
            _ => return self.error("leftfeature, constrainttype or rightfeature"),
        };
        let make: fn(&mut Parser) -> PResult<ConstraintUpdate> = match part.as_str() {
            "leftfeature" => |p| Ok(ConstraintUpdate::Left(p.name_desc()?)),
            "rightfeature" => |p| Ok(ConstraintUpdate::Right(p.name_desc()?)),
            "constrainttype" => |p| Ok(ConstraintUpdate::Kind(p.constraint_kind()?)),
            _ => return self.error("leftfeature, constrainttype or rightfeature"),
        };
        self.advance();
        self.expect(Tok::Eq)?;
        make(self)
    }

    fn constraint_updates(&mut self) -> PResult<Vec<ConstraintUpdate>> {
        self.expect_word("set")?;
        let mut out = vec![self.constraint_update()?];
        while self.eat(&Tok::Comma) {
            out.push(self.constraint_update()?);
        }
        Ok(out)
    }

    fn add_feature(&mut self) -> PResult<CommandKind> {
        let name = self.string("the new feature name")?;
        self.expect_word("with")?;
        self.expect_word("attributes")?;
        self.expect(Tok::LParen)?;
        let mut parent = None;
        let mut decomp = None;
        for i in 0..2 {
            if i == 1 {
                self.expect(Tok::Comma)?;
            }
            match self.peek() {
                Tok::Structural(s) if s == "_parent" && parent.is_none() => {
                    self.advance();
                    self.expect(Tok::Eq)?;
                    parent = Some(self.name_desc()?);
                }
                Tok::Structural(s) if s == "_decomp" && decomp.is_none() => {
                    self.advance();
                    self.expect(Tok::Eq)?;
                    decomp = Some(self.decomp_setting()?);
                }
                _ if parent.is_none() && decomp.is_none() => return self.error("'_parent' or '_decomp'"),
                _ if parent.is_none() => return self.error("'_parent'"),
                _ => return self.error("'_decomp'"),
            }
        }
        let mut attributes = Vec::new();
        while self.eat(&Tok::Comma) {
            attributes.push(self.attr_assign()?);
        }
        self.expect(Tok::RParen)?;
        Ok(CommandKind::AddFeature {
            name,
            parent: parent.expect("parsed"),
            decomp: decomp.expect("parsed"),
            attributes,
        })
    }

    fn command(&mut self) -> PResult<Command> {
        let pos = self.pos();
        let verb = match self.peek() {
            Tok::Word(w) if matches!(w.as_str(), "add" | "update" | "updateall" | "remove" | "removeall") => {
                w.clone()
            }
            _ => return self.error("a command"),
        };
        self.advance();
        let on_feature = if self.eat_word("feature") {
            true
        } else if self.eat_word("constraint") {
            false
        } else {
            return self.error("'feature' or 'constraint'");
        };
        let kind = match (verb.as_str(), on_feature) {
            ("add", true) => self.add_feature()?,
            ("update", true) => {
                let target = self.feature_desc()?;
                CommandKind::UpdateFeature {
                    target,
                    updates: self.feature_updates()?,
                }
            }
            ("updateall", true) => {
                let var = self.variable()?;
                CommandKind::UpdateAllFeatures {
                    var,
                    updates: self.feature_updates()?,
                }
            }
            ("remove", true) => CommandKind::RemoveFeature {
                target: self.feature_desc()?,
            },
            ("removeall", true) => CommandKind::RemoveAllFeatures {
                var: self.variable()?,
            },
            ("add", false) => CommandKind::AddConstraint {
                desc: self.constraint_desc()?,
            },
            ("update", false) => {
                let desc = self.constraint_desc()?;
                CommandKind::UpdateConstraint {
                    desc,
                    updates: self.constraint_updates()?,
                }
            }
            ("updateall", false) => {
                let desc = self.constraint_desc()?;
                CommandKind::UpdateAllConstraints {
                    desc,
                    updates: self.constraint_updates()?,
                }
            }
            ("remove", false) => CommandKind::RemoveConstraint {
                desc: self.constraint_desc()?,
            },
            _ => CommandKind::RemoveAllConstraints {
                desc: self.constraint_desc()?,
            },
        };
        let where_clause = if self.eat_word("where") {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(Command {
            kind,
            where_clause,
            pos,
        })
    }

    fn commands(&mut self) -> PResult<Vec<Command>> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            out.push(self.command()?);
        }
        Ok(out)
    }

    // ---- expressions, lowest precedence first ----

    fn expr(&mut self) -> PResult<Expr> {
        self.binary_level(0)
    }

    fn binary_op(&self, level: usize) -> Option<BinaryOp> {
        let op = match (level, self.peek()) {
            (0, Tok::Word(w)) if w == "or" => BinaryOp::Or,
            (1, Tok::Word(w)) if w == "and" => BinaryOp::And,
            (2, Tok::Eq) => BinaryOp::Eq,
            (2, Tok::Ne) => BinaryOp::Ne,
            (3, Tok::Lt) => BinaryOp::Lt,
            (3, Tok::Le) => BinaryOp::Le,
            (3, Tok::Gt) => BinaryOp::Gt,
            (3, Tok::Ge) => BinaryOp::Ge,
            (4, Tok::Plus) => BinaryOp::Add,
            (4, Tok::Minus) => BinaryOp::Sub,
            (5, Tok::Star) => BinaryOp::Mul,
            (5, Tok::Slash) => BinaryOp::Div,
            (5, Tok::Percent) => BinaryOp::Rem,
            _ => return None,
        };
        Some(op)
    }

    fn binary_level(&mut self, level: usize) -> PResult<Expr> {
        if level > 5 {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        while let Some(op) = self.binary_op(level) {
            self.advance();
            let rhs = self.binary_level(level + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::unary(UnaryOp::Neg, self.unary()?));
        }
        if self.eat_word("not") {
            return Ok(Expr::unary(UnaryOp::Not, self.unary()?));
        }
        if *self.peek() == Tok::Plus && matches!(self.peek2(), Tok::Int(_) | Tok::Real(_)) {
            self.advance();
        }
        self.primary()
    }

    fn term_attr(&mut self) -> PResult<AttrName> {
        self.expect(Tok::Dot)?;
        let attr = match self.peek().clone() {
            Tok::Word(w) => AttrName::User(w),
            Tok::Structural(s) => match s.as_str() {
                "_name" => AttrName::Name,
                "_parent" => AttrName::Parent,
                "_decomp" => AttrName::Decomp,
                _ => AttrName::DecompId,
            },
            _ => return self.error("an attribute identifier"),
        };
        self.advance();
        Ok(attr)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::int(i))
            }
            Tok::Real(r) => {
                self.advance();
                Ok(Expr::real(r))
            }
            Tok::Str(s) => {
                self.advance();
                if *self.peek() == Tok::Dot {
                    let attr = self.term_attr()?;
                    Ok(Expr::Term {
                        subject: Subject::Feature(s),
                        attr,
                    })
                } else {
                    Ok(Expr::string(s))
                }
            }
            Tok::Var(v) => {
                self.advance();
                let attr = self.term_attr()?;
                Ok(Expr::Term {
                    subject: Subject::Var(v),
                    attr,
                })
            }
            Tok::Word(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Expr::boolean(w == "true"))
            }
            Tok::Word(w) if decomp_keyword(&w).is_some() => {
                self.advance();
                Ok(Expr::decomp(decomp_keyword(&w).expect("checked")))
            }
            _ => self.error("an expression"),
        }
    }

    fn finish<T>(&mut self, v: T) -> PResult<T> {
        if *self.peek() != Tok::Eof {
            return self.error("end of input");
        }
        Ok(v)
    }
}

/// Parses a script: declarations (root first) followed by zero or more
/// commands.
pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let mut p = Parser::new(text)?;
    let declarations = p.declarations()?;
    let commands = p.commands()?;
    p.finish(Script {
        declarations,
        commands,
    })
}

/// Parses a file holding only commands.
pub fn parse_commands(text: &str) -> Result<Vec<Command>, ParseError> {
    let mut p = Parser::new(text)?;
    let commands = p.commands()?;
    p.finish(commands)
}

/// Parses a single expression.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish(e)
}
