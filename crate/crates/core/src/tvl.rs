//! Import and export of the TVL subset: a string enum header, then one
//! block per feature holding attributes, child groups and constraints.
//!
//! ```text
//! root Shop {
//!   int budget is 100;
//!   group allof { Catalog, opt Extras }
//!   Extras requires Catalog;
//! }
//! Catalog {
//!   group oneof { Books, Music }
//! }
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{format_real, Constraint, ConstraintKind, DecompKind, Feature, FeatureModel, Value};
use crate::syntax::lexer::is_string_char;
use crate::syntax::Pos;

const KEYWORDS: [&str; 17] = [
    "root", "group", "allof", "oneof", "someof", "opt", "requires", "excludes", "int", "real", "bool",
    "string", "is", "enum", "in", "true", "false",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TvlError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{0}")]
    Structure(String),
    #[error("cannot be written as TVL: {0}")]
    Unrepresentable(String),
}

/// An imported TVL document. The string enum header is kept for re-export
/// only; attribute values are not checked against it.
#[derive(Debug, Clone, PartialEq)]
pub struct TvlModel {
    pub string_enum: Option<Vec<String>>,
    pub model: FeatureModel,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Str(String),
    Int(i64),
    Real(f64),
    LBrace,
    RBrace,
    Comma,
    Semi,
    Eof,
}

fn syntax(pos: Pos, message: impl Into<String>) -> TvlError {
    TvlError::Syntax {
        pos,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, TvlError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        let start = i;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let tok = match c {
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            '"' => {
                i += 1;
                while i < chars.len() && chars[i] != '"' {
                    if !is_string_char(chars[i]) {
                        return Err(syntax(pos, format!("character {:?} is not allowed in a string", chars[i])));
                    }
                    i += 1;
                }
                if i == chars.len() {
                    return Err(syntax(pos, "unterminated string"));
                }
                let body: String = chars[start + 1..i].iter().collect();
                i += 1;
                if body.is_empty() {
                    return Err(syntax(pos, "empty string literal"));
                }
                Tok::Str(body)
            }
            c if c.is_ascii_alphabetic() => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Id(chars[start..i].iter().collect())
            }
            c if c.is_ascii_digit() || ((c == '+' || c == '-') && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let real = chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit);
                if real {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                if real {
                    Tok::Real(s.parse().map_err(|_| syntax(pos, format!("invalid real {s}")))?)
                } else {
                    Tok::Int(s.parse().map_err(|_| syntax(pos, format!("integer {s} is out of range")))?)
                }
            }
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::enum_variant_names)]
enum GroupKind {
    AllOf,
    OneOf,
    SomeOf,
}

/// A group with its `(child, opt, position)` entries.
type Group = (GroupKind, Vec<(String, bool, Pos)>);

struct Block {
    name: String,
    pos: Pos,
    attributes: Vec<(String, Value)>,
    groups: Vec<Group>,
    constraints: Vec<Constraint>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Id(s) if s == w)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TvlError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> TvlError {
        syntax(self.pos(), format!("expected {what}, found {:?}", self.peek()))
    }

    fn word(&mut self, w: &str) -> Result<(), TvlError> {
        if self.is_word(w) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{w}'")))
        }
    }

    fn id(&mut self) -> Result<String, TvlError> {
        match self.peek() {
            Tok::Id(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected("a feature ID")),
        }
    }

    fn string_enum(&mut self) -> Result<Option<Vec<String>>, TvlError> {
        if !self.is_word("enum") {
            return Ok(None);
        }
        self.next();
        self.word("string")?;
        self.word("in")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut values = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Str(s) => {
                    self.next();
                    values.push(s);
                }
                _ => return Err(self.unexpected("a string literal")),
            }
            if *self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        self.expect(Tok::RBrace, "'}'")?;
        self.expect(Tok::Semi, "';'")?;
        Ok(Some(values))
    }

    fn block(&mut self) -> Result<Block, TvlError> {
        let pos = self.pos();
        let name = self.id()?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut b = Block {
            name,
            pos,
            attributes: Vec::new(),
            groups: Vec::new(),
            constraints: Vec::new(),
        };
        while ["int", "real", "bool", "string"].iter().any(|w| self.is_word(w)) {
            b.attributes.push(self.attribute()?);
        }
        while self.is_word("group") {
            b.groups.push(self.group()?);
        }
        while *self.peek() != Tok::RBrace {
            let left = self.id()?;
            let kind = if self.is_word("requires") {
                ConstraintKind::Requires
            } else if self.is_word("excludes") {
                ConstraintKind::Excludes
            } else {
                return Err(self.unexpected("'requires' or 'excludes'"));
            };
            self.next();
            let right = self.id()?;
            self.expect(Tok::Semi, "';'")?;
            b.constraints.push(Constraint::new(left, kind, right));
        }
        self.next();
        Ok(b)
    }

    fn attribute(&mut self) -> Result<(String, Value), TvlError> {
        let Tok::Id(ty) = self.next() else { unreachable!("checked by caller") };
        let pos = self.pos();
        let name = match self.next() {
            Tok::Id(s) if s.starts_with(|c: char| c.is_ascii_lowercase()) => s,
            _ => return Err(syntax(pos, "expected an attribute ID")),
        };
        self.word("is")?;
        let pos = self.pos();
        let value = match (ty.as_str(), self.next()) {
            ("int", Tok::Int(i)) => Value::Int(i),
            ("real", Tok::Real(r)) => Value::Real(r),
            ("bool", Tok::Id(s)) if s == "true" || s == "false" => Value::Bool(s == "true"),
            ("string", Tok::Str(s)) => Value::Str(s),
            (ty, found) => return Err(syntax(pos, format!("expected a {ty} literal, found {found:?}"))),
        };
        self.expect(Tok::Semi, "';'")?;
        Ok((name, value))
    }

    fn group(&mut self) -> Result<Group, TvlError> {
        self.next();
        let kind = match self.peek() {
            Tok::Id(s) if s == "allof" => GroupKind::AllOf,
            Tok::Id(s) if s == "oneof" => GroupKind::OneOf,
            Tok::Id(s) if s == "someof" => GroupKind::SomeOf,
            _ => return Err(self.unexpected("'allof', 'oneof' or 'someof'")),
        };
        self.next();
        self.expect(Tok::LBrace, "'{'")?;
        let mut members = Vec::new();
        loop {
            let opt = kind == GroupKind::AllOf && self.is_word("opt");
            if opt {
                self.next();
            }
            let pos = self.pos();
            members.push((self.id()?, opt, pos));
            if *self.peek() != Tok::Comma {
                break;
            }
            self.next();
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok((kind, members))
    }
}

/// Parses a TVL document and builds its feature model.
pub fn parse_tvl(text: &str) -> Result<TvlModel, TvlError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
    };
    let string_enum = p.string_enum()?;
    p.word("root")?;
    let mut blocks = vec![p.block()?];
    while *p.peek() != Tok::Eof {
        blocks.push(p.block()?);
    }
    Ok(TvlModel {
        string_enum,
        model: build(&blocks)?,
    })
}

pub fn import_tvl(text: &str) -> Result<FeatureModel, TvlError> {
    parse_tvl(text).map(|t| t.model)
}

fn build(blocks: &[Block]) -> Result<FeatureModel, TvlError> {
    let structure = |m: String| Err(TvlError::Structure(m));
    let mut by_name: HashMap<&str, &Block> = HashMap::new();
    for b in blocks {
        if by_name.insert(&b.name, b).is_some() {
            return structure(format!("{}: feature {} has more than one block", b.pos, b.name));
        }
    }
    let root = &blocks[0];
    // (name, parent, kind, group id) in order of first mention
    let mut placed: IndexMap<&str, (&str, DecompKind, u32)> = IndexMap::new();
    let mut next_group = 1;
    let mut queue = vec![root.name.as_str()];
    let mut seen: HashSet<&str> = HashSet::from([root.name.as_str()]);
    while let Some(name) = queue.pop() {
        let Some(b) = by_name.get(name) else { continue };
        let mut children = Vec::new();
        for (kind, members) in &b.groups {
            let group = if *kind == GroupKind::AllOf {
                0
            } else {
                next_group += 1;
                next_group - 1
            };
            for (child, opt, pos) in members {
                let decomp = match (kind, opt) {
                    (GroupKind::AllOf, false) => DecompKind::Mandatory,
                    (GroupKind::AllOf, true) => DecompKind::Optional,
                    (GroupKind::OneOf, _) => DecompKind::Alternative,
                    (GroupKind::SomeOf, _) => DecompKind::Or,
                };
                if !seen.insert(child) {
                    return structure(format!("{pos}: feature {child} appears more than once in the tree"));
                }
                placed.insert(child, (name, decomp, group));
                children.push(child.as_str());
            }
        }
        queue.extend(children.into_iter().rev());
    }
    if let Some(orphan) = blocks.iter().find(|b| !seen.contains(b.name.as_str())) {
        return structure(format!(
            "{}: feature {} is not a child of any reachable feature",
            orphan.pos, orphan.name
        ));
    }

    let attributes = |name: &str| -> Result<IndexMap<String, Value>, TvlError> {
        let mut out = IndexMap::new();
        if let Some(b) = by_name.get(name) {
            for (k, v) in &b.attributes {
                if out.insert(k.clone(), v.clone()).is_some() {
                    return Err(TvlError::Structure(format!(
                        "{}: attribute {k} of feature {name} is declared more than once",
                        b.pos
                    )));
                }
            }
        }
        Ok(out)
    };
    let mut features = vec![Feature {
        attributes: attributes(&root.name)?,
        ..Feature::new(root.name.clone())
    }];
    for (name, (parent, decomp, group_id)) in &placed {
        features.push(Feature {
            name: name.to_string(),
            parent: Some(parent.to_string()),
            decomp: Some(*decomp),
            group_id: *group_id,
            attributes: attributes(name)?,
        });
    }
    let mut constraints = Vec::new();
    for b in blocks {
        for c in &b.constraints {
            for end in [&c.left, &c.right] {
                if !seen.contains(end.as_str()) {
                    return structure(format!("{}: constraint {c} names unknown feature {end}", b.pos));
                }
            }
            constraints.push(c.clone());
        }
    }
    let mut model = FeatureModel::from_parts_unchecked(root.name.clone(), features, constraints);
    model.normalize_constraints();
    debug_assert!(model.validate().is_empty(), "{:?}", model.validate());
    Ok(model)
}

fn is_tvl_id(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

fn literal(v: &Value) -> (&'static str, String) {
    match v {
        Value::Int(i) => ("int", i.to_string()),
        Value::Real(r) => ("real", format_real(*r)),
        Value::Bool(b) => ("bool", b.to_string()),
        Value::Str(s) => ("string", format!("\"{s}\"")),
    }
}

pub fn export_tvl(model: &FeatureModel) -> Result<String, TvlError> {
    export_tvl_with_enum(model, None)
}

/// Writes `model` as TVL: the root block first (carrying every
/// constraint), then a block for each other feature that has attributes or
/// children, in preorder.
pub fn export_tvl_with_enum(model: &FeatureModel, string_enum: Option<&[String]>) -> Result<String, TvlError> {
    for f in model.features() {
        if !is_tvl_id(&f.name) {
            return Err(TvlError::Unrepresentable(format!("feature name \"{}\" is not a TVL ID", f.name)));
        }
    }
    let mut out = String::new();
    if let Some(values) = string_enum {
        let list: Vec<String> = values.iter().map(|v| format!("\"{v}\"")).collect();
        let _ = writeln!(out, "enum string in {{ {} }};", list.join(", "));
    }
    for (i, f) in model.preorder().into_iter().enumerate() {
        let children: Vec<&Feature> = model
            .children(&f.name)
            .into_iter()
            .map(|c| model.feature(c).expect("child exists"))
            .collect();
        let is_root = i == 0;
        if !is_root && children.is_empty() && f.attributes.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{}{} {{", if is_root { "root " } else { "" }, f.name);
        for (k, v) in &f.attributes {
            let (ty, lit) = literal(v);
            let _ = writeln!(out, "  {ty} {k} is {lit};");
        }
        let solitary: Vec<String> = children
            .iter()
            .filter(|c| !c.decomp.is_some_and(DecompKind::is_group))
            .map(|c| match c.decomp {
                Some(DecompKind::Optional) => format!("opt {}", c.name),
                _ => c.name.clone(),
            })
            .collect();
        if !solitary.is_empty() {
            let _ = writeln!(out, "  group allof {{ {} }}", solitary.join(", "));
        }
        let mut groups: IndexMap<u32, (DecompKind, Vec<&str>)> = IndexMap::new();
        for c in children.iter().filter(|c| c.group_id > 0) {
            let kind = c.decomp.expect("non-root");
            groups.entry(c.group_id).or_insert((kind, Vec::new())).1.push(&c.name);
        }
        for (kind, members) in groups.values() {
            let card = if *kind == DecompKind::Alternative { "oneof" } else { "someof" };
            let _ = writeln!(out, "  group {card} {{ {} }}", members.join(", "));
        }
        if is_root {
            for c in model.constraints() {
                let _ = writeln!(out, "  {} {} {};", c.left, c.kind.keyword(), c.right);
            }
        }
        out.push_str("}\n");
    }
    Ok(out)
}
