//! add / update / updateall / remove / removeall for cross-tree constraints.

use crate::expr::Subject;
use crate::model::{Constraint, FeatureModel};
use crate::resolver::{derive_unambiguous, described_constraints, Derived, ResolutionSet};
use crate::syntax::ast::{CommandKind, ConstraintDesc, ConstraintUpdate};

use super::{error, sentence, warning, Ctx, Effect, Failure, Outcome, Severity, Step, NO_RESOLUTIONS};

fn constraint_list(cs: &[Constraint]) -> String {
    cs.iter().map(|c| format!("({c})")).collect::<Vec<_>>().join(", ")
}

fn require_endpoints(ctx: &Ctx, desc: &ConstraintDesc) -> Step<()> {
    ctx.require_literal(&desc.left, "feature")?;
    ctx.require_literal(&desc.right, "feature")
}

pub(super) fn add(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let CommandKind::AddConstraint { desc } = &ctx.cmd.kind else {
        unreachable!("dispatched on kind")
    };
    require_endpoints(ctx, desc)?;
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let (existing, absent) = described_constraints(ctx.snap, &desc.left, desc.kind, &desc.right, &set);
    let added = !absent.is_empty();
    work.add_constraints(absent).map_err(|e| error(sentence(e)))?;
    if existing.is_empty() {
        return Ok(Outcome::applied());
    }
    Ok(Outcome {
        effect: if added { Effect::Partial } else { Effect::None },
        diagnostic: Some((
            Severity::Warning,
            format!(
                "Following Cross-tree Constraint(s) already exist: {}",
                constraint_list(&existing)
            ),
        )),
    })
}

/// Stored constraints matched by the description, each with the tuples
/// that generated it, in order of first match.
fn matches<'s>(
    ctx: &Ctx,
    desc: &ConstraintDesc,
    set: &'s ResolutionSet,
) -> Vec<(Constraint, Vec<&'s [usize]>)> {
    let mut out: Vec<(Constraint, Vec<&[usize]>)> = Vec::new();
    for t in set.tuples() {
        let (l, r) = (endpoint(ctx, set, t, &desc.left), endpoint(ctx, set, t, &desc.right));
        let Some(stored) = ctx.snap.find_constraint(&Constraint::new(l, desc.kind, r)) else {
            continue;
        };
        match out.iter_mut().find(|(s, _)| s == stored) {
            Some((_, ts)) => ts.push(t),
            None => out.push((stored.clone(), vec![t])),
        }
    }
    out
}

fn endpoint<'m>(ctx: &Ctx<'m>, set: &ResolutionSet, t: &[usize], s: &Subject) -> &'m str {
    let i = set.subject_index(ctx.snap, t, s).expect("literals checked and variables bound");
    &ctx.snap.feature_at(i).expect("in range").name
}

fn derive_endpoint(
    ctx: &Ctx,
    set: &ResolutionSet,
    tuples: &[&[usize]],
    subject: &Subject,
    side: &str,
) -> Step<String> {
    let derived = derive_unambiguous(tuples.iter().copied(), |t| {
        Ok::<_, Failure>(set.subject_index(ctx.snap, t, subject).expect("bound"))
    })?;
    match derived {
        Derived::Value(i) => Ok(ctx.name(i).to_string()),
        Derived::Ambiguous(v) => Err(error(format!(
            "Command is ambiguous on what the new {side}-feature will be ({})",
            ctx.name_list(v)
        ))),
        Derived::NoResolution => Err(warning(NO_RESOLUTIONS)),
    }
}

pub(super) fn update(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let (desc, updates, all) = match &ctx.cmd.kind {
        CommandKind::UpdateConstraint { desc, updates } => (desc, updates, false),
        CommandKind::UpdateAllConstraints { desc, updates } => (desc, updates, true),
        _ => unreachable!("dispatched on kind"),
    };
    require_endpoints(ctx, desc)?;
    for u in updates {
        if let ConstraintUpdate::Left(n) | ConstraintUpdate::Right(n) = u {
            ctx.require_literal(&n.subject(), "feature")?;
        }
    }
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let found = matches(ctx, desc, &set);
    if found.is_empty() {
        let which = if all { "update all" } else { "update" };
        return Err(warning(format!("No constraints match the {which} command")));
    }
    if !all && found.len() > 1 {
        let stored: Vec<Constraint> = found.into_iter().map(|(c, _)| c).collect();
        return Err(error(format!(
            "Command is ambiguous on which constraint will be updated: {}",
            constraint_list(&stored)
        )));
    }
    let mut left_slot = desc.left.clone();
    let mut right_slot = desc.right.clone();
    let mut kind = desc.kind;
    for u in updates {
        match u {
            ConstraintUpdate::Left(n) => left_slot = n.subject(),
            ConstraintUpdate::Right(n) => right_slot = n.subject(),
            ConstraintUpdate::Kind(k) => kind = *k,
        }
    }
    let mut rewrites = Vec::with_capacity(found.len());
    for (stored, tuples) in &found {
        let left = derive_endpoint(ctx, &set, tuples, &left_slot, "left")?;
        let right = derive_endpoint(ctx, &set, tuples, &right_slot, "right")?;
        rewrites.push((stored, Constraint::new(left, kind, right)));
    }
    for (stored, new) in rewrites {
        if work.remove_constraint(stored) {
            work.add_constraint(new).map_err(|e| error(sentence(e)))?;
        }
    }
    Ok(Outcome::applied())
}

pub(super) fn remove(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let (desc, all) = match &ctx.cmd.kind {
        CommandKind::RemoveConstraint { desc } => (desc, false),
        CommandKind::RemoveAllConstraints { desc } => (desc, true),
        _ => unreachable!("dispatched on kind"),
    };
    require_endpoints(ctx, desc)?;
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let (found, _) = described_constraints(ctx.snap, &desc.left, desc.kind, &desc.right, &set);
    if found.is_empty() {
        let which = if all { "remove all" } else { "remove" };
        return Err(warning(format!("No constraints match the {which} command")));
    }
    if !all && found.len() > 1 {
        return Err(error(format!(
            "Command is ambiguous on which constraint will be removed: {}",
            constraint_list(&found)
        )));
    }
    for c in &found {
        work.remove_constraint(c);
    }
    Ok(Outcome::applied())
}
