//! Line-oriented intermediate dump: the initial model as declarations, then
//! one line per command with every expression in postfix order.

use std::fmt::Write as _;

use crate::expr::{Expr, Subject};
use crate::model::FeatureModel;
use crate::syntax::ast::{
    AttrAssign, AttrValue, Command, CommandKind, ConstraintDesc, ConstraintUpdate, DecompSetting, DecompValue,
    FeatureUpdate, NameDesc,
};
use crate::syntax::serialize_declarations;

fn subject(s: &Subject) -> String {
    match s {
        Subject::Feature(n) => format!("\"{n}\""),
        Subject::Var(v) => v.clone(),
    }
}

fn name_desc(n: &NameDesc) -> String {
    match n {
        NameDesc::Literal(l) => format!("\"{l}\""),
        NameDesc::VarName(v) => format!("{v}._name"),
    }
}

fn postfix(e: &Expr) -> String {
    format!("[{}]", e.postfix())
}

fn decomp(d: &DecompSetting) -> String {
    let mut s = match &d.value {
        DecompValue::Kind(k) => k.keyword().to_string(),
        DecompValue::Of(x) => format!("{}._decomp", subject(x)),
    };
    if let Some(sib) = &d.sibling {
        let _ = write!(s, " to {}", subject(sib));
    }
    s
}

fn attr(a: &AttrAssign) -> String {
    let value = match &a.value {
        AttrValue::Inherited(s, at) => format!("inherited {}.{at}", subject(s)),
        AttrValue::Numeric(e) => format!("numeric {}", postfix(e)),
        AttrValue::Boolean(e) => format!("boolean {}", postfix(e)),
        AttrValue::Str(s) => format!("string \"{s}\""),
    };
    format!("{}={value}", a.name)
}

fn feature_update(u: &FeatureUpdate) -> String {
    match u {
        FeatureUpdate::Name(n) => format!("_name=\"{n}\""),
        FeatureUpdate::Parent(p) => format!("_parent={}", name_desc(p)),
        FeatureUpdate::Decomp(d) => format!("_decomp={}", decomp(d)),
        FeatureUpdate::Attr(a) => attr(a),
    }
}

fn constraint_desc(d: &ConstraintDesc) -> String {
    format!("{} {} {}", subject(&d.left), d.kind.keyword(), subject(&d.right))
}

fn constraint_update(u: &ConstraintUpdate) -> String {
    match u {
        ConstraintUpdate::Left(n) => format!("leftfeature={}", name_desc(n)),
        ConstraintUpdate::Kind(k) => format!("constrainttype={}", k.keyword()),
        ConstraintUpdate::Right(n) => format!("rightfeature={}", name_desc(n)),
    }
}

fn command_line(cmd: &Command) -> String {
    let mut parts: Vec<String> = vec![cmd.code().to_string()];
    match &cmd.kind {
        CommandKind::AddFeature {
            name,
            parent,
            decomp: d,
            attributes,
        } => {
            parts.push(format!("\"{name}\""));
            parts.push(format!("_parent={}", name_desc(parent)));
            parts.push(format!("_decomp={}", decomp(d)));
            parts.extend(attributes.iter().map(attr));
        }
        CommandKind::UpdateFeature { target, updates } => {
            parts.push(subject(target));
            parts.extend(updates.iter().map(feature_update));
        }
        CommandKind::UpdateAllFeatures { var, updates } => {
            parts.push(var.clone());
            parts.extend(updates.iter().map(feature_update));
        }
        CommandKind::RemoveFeature { target } => parts.push(subject(target)),
        CommandKind::RemoveAllFeatures { var } => parts.push(var.clone()),
        CommandKind::AddConstraint { desc }
        | CommandKind::RemoveConstraint { desc }
        | CommandKind::RemoveAllConstraints { desc } => parts.push(constraint_desc(desc)),
        CommandKind::UpdateConstraint { desc, updates } | CommandKind::UpdateAllConstraints { desc, updates } => {
            parts.push(constraint_desc(desc));
            parts.extend(updates.iter().map(constraint_update));
        }
    }
    if let Some(w) = &cmd.where_clause {
        parts.push(format!("where {}", postfix(w)));
    }
    parts.join(" | ")
}

/// Renders the intermediate dump of a model and its commands.
pub fn dump_intermediate(model: &FeatureModel, commands: &[Command]) -> String {
    let mut out = String::from("# declarations\n");
    out.push_str(&serialize_declarations(model));
    let _ = writeln!(out, "# commands {}", commands.len());
    for (i, c) in commands.iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, command_line(c));
    }
    out
}
