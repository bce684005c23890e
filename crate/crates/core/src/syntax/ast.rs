//! Syntax tree for Feather scripts.

use crate::expr::{Expr, Subject};
use crate::model::{ConstraintKind, DecompKind, Value};

use super::Pos;

#[derive(Debug, Clone, PartialEq)]
pub struct RootDecl {
    pub name: String,
    pub attributes: Vec<(String, Value)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecl {
    pub name: String,
    pub parent: String,
    pub decomp: DecompKind,
    /// The `to` operand of `alternative to X` / `or to X`.
    pub group_sibling: Option<String>,
    pub attributes: Vec<(String, Value)>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDecl {
    pub left: String,
    pub kind: ConstraintKind,
    pub right: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Declarations {
    pub root: Option<RootDecl>,
    pub features: Vec<FeatureDecl>,
    pub constraints: Vec<ConstraintDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub declarations: Declarations,
    pub commands: Vec<Command>,
}

/// A literal feature name or `V._name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NameDesc {
    Literal(String),
    VarName(String),
}

impl NameDesc {
    pub fn subject(&self) -> Subject {
        match self {
            NameDesc::Literal(n) => Subject::Feature(n.clone()),
            NameDesc::VarName(v) => Subject::Var(v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompValue {
    Kind(DecompKind),
    /// `X._decomp`
    Of(Subject),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompSetting {
    pub value: DecompValue,
    /// `to X`: join the group X belongs to.
    pub sibling: Option<Subject>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    /// `inherited : X.attr`
    Inherited(Subject, String),
    Numeric(Expr),
    Boolean(Expr),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrAssign {
    pub name: String,
    pub value: AttrValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureUpdate {
    Name(String),
    Parent(NameDesc),
    Decomp(DecompSetting),
    Attr(AttrAssign),
}

impl FeatureUpdate {
    /// Key identifying which part of the feature this update targets.
    pub fn part(&self) -> String {
        match self {
            FeatureUpdate::Name(_) => "_name".to_string(),
            FeatureUpdate::Parent(_) => "_parent".to_string(),
            FeatureUpdate::Decomp(_) => "_decomp".to_string(),
            FeatureUpdate::Attr(a) => a.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintUpdate {
    Left(NameDesc),
    Kind(ConstraintKind),
    Right(NameDesc),
}

impl ConstraintUpdate {
    pub fn part(&self) -> &'static str {
        match self {
            ConstraintUpdate::Left(_) => "leftfeature",
            ConstraintUpdate::Kind(_) => "constrainttype",
            ConstraintUpdate::Right(_) => "rightfeature",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintDesc {
    pub left: Subject,
    pub kind: ConstraintKind,
    pub right: Subject,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommandKind {
    AddFeature {
        name: String,
        parent: NameDesc,
        decomp: DecompSetting,
        attributes: Vec<AttrAssign>,
    },
    UpdateFeature {
        target: Subject,
        updates: Vec<FeatureUpdate>,
    },
    UpdateAllFeatures {
        var: String,
        updates: Vec<FeatureUpdate>,
    },
    RemoveFeature {
        target: Subject,
    },
    RemoveAllFeatures {
        var: String,
    },
    AddConstraint {
        desc: ConstraintDesc,
    },
    UpdateConstraint {
        desc: ConstraintDesc,
        updates: Vec<ConstraintUpdate>,
    },
    UpdateAllConstraints {
        desc: ConstraintDesc,
        updates: Vec<ConstraintUpdate>,
    },
    RemoveConstraint {
        desc: ConstraintDesc,
    },
    RemoveAllConstraints {
        desc: ConstraintDesc,
    },
}

impl CommandKind {
    /// Short code used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            CommandKind::AddFeature { .. } => "addf",
            CommandKind::UpdateFeature { .. } => "upf",
            CommandKind::UpdateAllFeatures { .. } => "upmf",
            CommandKind::RemoveFeature { .. } => "rmf",
            CommandKind::RemoveAllFeatures { .. } => "rmmf",
            CommandKind::AddConstraint { .. } => "addc",
            CommandKind::UpdateConstraint { .. } => "upc",
            CommandKind::UpdateAllConstraints { .. } => "upmc",
            CommandKind::RemoveConstraint { .. } => "rmc",
            CommandKind::RemoveAllConstraints { .. } => "rmmc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub kind: CommandKind,
    pub where_clause: Option<Expr>,
    pub pos: Pos,
}

impl Command {
    pub fn new(kind: CommandKind, where_clause: Option<Expr>) -> Self {
        Command {
            kind,
            where_clause,
            pos: Pos::default(),
        }
    }

    pub fn code(&self) -> &'static str {
        self.kind.code()
    }

    /// Every feature variable in the command, in order of first appearance:
    /// descriptors and value slots first, then the where-clause.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |v: &str| {
            if !out.iter().any(|o: &String| o == v) {
                out.push(v.to_string());
            }
        };
        let subject = |s: &Subject, push: &mut dyn FnMut(&str)| {
            if let Subject::Var(v) = s {
                push(v);
            }
        };
        let mut exprs: Vec<&Expr> = Vec::new();
        match &self.kind {
            CommandKind::AddFeature {
                parent,
                decomp,
                attributes,
                ..
            } => {
                subject(&parent.subject(), &mut push);
                decomp_vars(decomp, &mut |v| push(v));
                for a in attributes {
                    attr_vars(&a.value, &mut |v| push(v), &mut exprs);
                }
            }
            CommandKind::UpdateFeature { target, updates } => {
                subject(target, &mut push);
                feature_update_vars(updates, &mut |v| push(v), &mut exprs);
            }
            CommandKind::UpdateAllFeatures { var, updates } => {
                push(var);
                feature_update_vars(updates, &mut |v| push(v), &mut exprs);
            }
            CommandKind::RemoveFeature { target } => subject(target, &mut push),
            CommandKind::RemoveAllFeatures { var } => push(var),
            CommandKind::AddConstraint { desc }
            | CommandKind::RemoveConstraint { desc }
            | CommandKind::RemoveAllConstraints { desc } => {
                subject(&desc.left, &mut push);
                subject(&desc.right, &mut push);
            }
            CommandKind::UpdateConstraint { desc, updates }
            | CommandKind::UpdateAllConstraints { desc, updates } => {
                subject(&desc.left, &mut push);
                subject(&desc.right, &mut push);
                for u in updates {
                    match u {
                        ConstraintUpdate::Left(n) | ConstraintUpdate::Right(n) => {
                            subject(&n.subject(), &mut push)
                        }
                        ConstraintUpdate::Kind(_) => {}
                    }
                }
            }
        }
        let mut rest = Vec::new();
        for e in exprs {
            e.collect_variables(&mut rest);
        }
        if let Some(w) = &self.where_clause {
            w.collect_variables(&mut rest);
        }
        for v in rest {
            push(&v);
        }
        out
    }
}

fn decomp_vars(d: &DecompSetting, push: &mut dyn FnMut(&str)) {
    if let DecompValue::Of(Subject::Var(v)) = &d.value {
        push(v);
    }
    if let Some(Subject::Var(v)) = &d.sibling {
        push(v);
    }
}

fn attr_vars<'a>(a: &'a AttrValue, push: &mut dyn FnMut(&str), exprs: &mut Vec<&'a Expr>) {
    match a {
        AttrValue::Inherited(Subject::Var(v), _) => push(v),
        AttrValue::Numeric(e) | AttrValue::Boolean(e) => exprs.push(e),
        _ => {}
    }
}

fn feature_update_vars<'a>(
    updates: &'a [FeatureUpdate],
    push: &mut dyn FnMut(&str),
    exprs: &mut Vec<&'a Expr>,
) {
    for u in updates {
        match u {
            FeatureUpdate::Name(_) => {}
            FeatureUpdate::Parent(NameDesc::VarName(v)) => push(v),
            FeatureUpdate::Parent(NameDesc::Literal(_)) => {}
            FeatureUpdate::Decomp(d) => decomp_vars(d, push),
            FeatureUpdate::Attr(a) => attr_vars(&a.value, push, exprs),
        }
    }
}
