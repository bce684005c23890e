//! Checks that need the whole parse tree but not a model.

use std::collections::HashSet;
use std::fmt;

use crate::expr::{AttrName, BinaryOp, Expr, Literal};

use super::ast::*;
use super::Pos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticDiagnostic {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for StaticDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

fn diag(out: &mut Vec<StaticDiagnostic>, pos: Pos, message: String) {
    out.push(StaticDiagnostic { pos, message });
}

fn duplicate_attributes(out: &mut Vec<StaticDiagnostic>, pos: Pos, feature: &str, attrs: &[(String, crate::model::Value)]) {
    let mut seen = HashSet::new();
    for (id, _) in attrs {
        if !seen.insert(id.as_str()) {
            diag(out, pos, format!("attribute \"{id}\" is declared more than once for feature \"{feature}\""));
        }
    }
}

pub fn validate_declarations(decls: &Declarations) -> Vec<StaticDiagnostic> {
    let mut out = Vec::new();
    let Some(root) = &decls.root else {
        diag(&mut out, Pos::default(), "missing root feature declaration".to_string());
        return out;
    };
    let mut names: HashSet<&str> = HashSet::new();
    names.insert(root.name.as_str());
    duplicate_attributes(&mut out, root.pos, &root.name, &root.attributes);
    for f in &decls.features {
        if !names.insert(f.name.as_str()) {
            diag(&mut out, f.pos, format!("feature \"{}\" is declared more than once", f.name));
        }
        duplicate_attributes(&mut out, f.pos, &f.name, &f.attributes);
    }
    for c in &decls.constraints {
        for end in [&c.left, &c.right] {
            if !names.contains(end.as_str()) {
                diag(&mut out, c.pos, format!("constraint refers to undeclared feature \"{end}\""));
            }
        }
    }
    out
}

pub fn validate_commands(commands: &[Command]) -> Vec<StaticDiagnostic> {
    let mut out = Vec::new();
    for cmd in commands {
        validate_command(cmd, &mut out);
    }
    out
}

pub fn validate_script(script: &Script) -> Vec<StaticDiagnostic> {
    let mut out = validate_declarations(&script.declarations);
    out.extend(validate_commands(&script.commands));
    out
}

fn repeated_parts(parts: impl IntoIterator<Item = String>, pos: Pos, out: &mut Vec<StaticDiagnostic>) {
    let mut seen = HashSet::new();
    for p in parts {
        if !seen.insert(p.clone()) {
            diag(out, pos, format!("{p} is updated more than once"));
        }
    }
}

fn validate_command(cmd: &Command, out: &mut Vec<StaticDiagnostic>) {
    let pos = cmd.pos;
    let mut exprs: Vec<&Expr> = Vec::new();
    match &cmd.kind {
        CommandKind::AddFeature { attributes, .. } => {
            let mut seen = HashSet::new();
            for a in attributes {
                if !seen.insert(a.name.as_str()) {
                    diag(out, pos, format!("attribute \"{}\" is assigned more than once", a.name));
                }
                attr_exprs(&a.value, &mut exprs);
            }
        }
        CommandKind::UpdateFeature { updates, .. } | CommandKind::UpdateAllFeatures { updates, .. } => {
            repeated_parts(updates.iter().map(FeatureUpdate::part), pos, out);
            if matches!(cmd.kind, CommandKind::UpdateAllFeatures { .. })
                && updates.iter().any(|u| matches!(u, FeatureUpdate::Name(_)))
            {
                diag(out, pos, "_name cannot be updated by updateall".to_string());
            }
            for u in updates {
                if let FeatureUpdate::Attr(a) = u {
                    attr_exprs(&a.value, &mut exprs);
                }
            }
        }
        CommandKind::UpdateConstraint { updates, .. } | CommandKind::UpdateAllConstraints { updates, .. } => {
            repeated_parts(updates.iter().map(|u| u.part().to_string()), pos, out);
            if matches!(cmd.kind, CommandKind::UpdateAllConstraints { .. }) && updates.len() > 2 {
                diag(out, pos, "updateall constraint accepts at most two updates".to_string());
            }
        }
        _ => {}
    }
    if let Some(w) = &cmd.where_clause {
        exprs.push(w);
    }
    for e in exprs {
        check_structural_terms(e, false, pos, out);
    }
}

fn attr_exprs<'a>(v: &'a AttrValue, exprs: &mut Vec<&'a Expr>) {
    if let AttrValue::Numeric(e) | AttrValue::Boolean(e) = v {
        exprs.push(e);
    }
}

fn is_decomp_operand(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Lit(Literal::Decomp(_))
            | Expr::Term {
                attr: AttrName::Decomp,
                ..
            }
    )
}

fn is_decomp_id_operand(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Term {
            attr: AttrName::DecompId,
            ..
        }
    )
}

/// `_decomp` terms and decomposition literals may only be compared with
/// each other; `_decompID` terms only with other `_decompID` terms.
fn check_structural_terms(e: &Expr, allowed: bool, pos: Pos, out: &mut Vec<StaticDiagnostic>) {
    match e {
        Expr::Lit(Literal::Decomp(k)) if !allowed => diag(
            out,
            pos,
            format!("decomposition value {k} can only be compared with another decomposition value"),
        ),
        Expr::Term {
            attr: AttrName::Decomp,
            ..
        } if !allowed => diag(
            out,
            pos,
            format!("{e} can only be compared with another decomposition value"),
        ),
        Expr::Term {
            attr: AttrName::DecompId,
            ..
        } if !allowed => diag(out, pos, format!("{e} can only be compared with another _decompID")),
        Expr::Binary(BinaryOp::Eq | BinaryOp::Ne, l, r) => {
            let ok = (is_decomp_operand(l) && is_decomp_operand(r))
                || (is_decomp_id_operand(l) && is_decomp_id_operand(r));
            check_structural_terms(l, ok, pos, out);
            check_structural_terms(r, ok, pos, out);
        }
        Expr::Binary(_, l, r) => {
            check_structural_terms(l, false, pos, out);
            check_structural_terms(r, false, pos, out);
        }
        Expr::Unary(_, x) => check_structural_terms(x, false, pos, out),
        _ => {}
    }
}
