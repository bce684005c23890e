//! add / update / updateall / remove / removeall for features.

use crate::expr::{evaluate, Evaluated, Subject};
use crate::model::{DecompKind, Feature, FeatureModel, ModelError, Value};
use crate::resolver::{derive_unambiguous, described_features, Derived, ResolutionSet};
use crate::syntax::ast::{AttrAssign, AttrValue, CommandKind, DecompSetting, DecompValue, FeatureUpdate, NameDesc};

use super::{error, sentence, warning, Ctx, Effect, Failure, Outcome, Severity, Step, NO_RESOLUTIONS};

type Tuples<'a> = [&'a [usize]];

fn new_prefix(is_update: bool) -> &'static str {
    if is_update {
        "new "
    } else {
        ""
    }
}

fn subject_at(ctx: &Ctx, set: &ResolutionSet, t: &[usize], s: &Subject) -> usize {
    set.subject_index(ctx.snap, t, s).expect("literals checked and variables bound")
}

fn derive_parent(ctx: &Ctx, set: &ResolutionSet, tuples: &Tuples, desc: &NameDesc, is_update: bool) -> Step<usize> {
    let subject = desc.subject();
    match derive_unambiguous(tuples.iter().copied(), |t| Ok::<_, Failure>(subject_at(ctx, set, t, &subject)))? {
        Derived::Value(i) => Ok(i),
        Derived::Ambiguous(v) => Err(error(format!(
            "Command is ambiguous on what the {}parent will be ({})",
            new_prefix(is_update),
            ctx.name_list(v)
        ))),
        Derived::NoResolution => Err(warning(NO_RESOLUTIONS)),
    }
}

fn ambiguous_relation(is_update: bool) -> Failure {
    error(format!(
        "Command is ambiguous on what the {}decomposition relation will be",
        new_prefix(is_update)
    ))
}

fn derive_kind(
    ctx: &Ctx,
    set: &ResolutionSet,
    tuples: &Tuples,
    value: &DecompValue,
    is_update: bool,
) -> Step<DecompKind> {
    let derived = derive_unambiguous(tuples.iter().copied(), |t| match value {
        DecompValue::Kind(k) => Ok(*k),
        DecompValue::Of(s) => {
            let i = subject_at(ctx, set, t, s);
            ctx.snap.feature_at(i).and_then(|f| f.decomp).ok_or_else(|| {
                error(format!("The root feature \"{}\" has no decomposition relation", ctx.name(i)))
            })
        }
    })?;
    match derived {
        Derived::Value(k) => Ok(k),
        Derived::Ambiguous(_) => Err(ambiguous_relation(is_update)),
        Derived::NoResolution => Err(warning(NO_RESOLUTIONS)),
    }
}

/// The sibling named by `to X`. Siblings that share a group are
/// interchangeable; anything else disagreeing is ambiguous.
fn derive_sibling(ctx: &Ctx, set: &ResolutionSet, tuples: &Tuples, s: &Subject, is_update: bool) -> Step<usize> {
    let key = |i: usize| match ctx.snap.feature_at(i).map(|f| f.group_id) {
        Some(g) if g > 0 => (g, usize::MAX),
        _ => (0, i),
    };
    let mut first: Option<usize> = None;
    for t in tuples {
        let i = subject_at(ctx, set, t, s);
        match first {
            None => first = Some(i),
            Some(f) if key(f) != key(i) => return Err(ambiguous_relation(is_update)),
            Some(_) => {}
        }
    }
    first.ok_or_else(|| warning(NO_RESOLUTIONS))
}

/// The group a feature joins by naming `sibling` under `parent` as `kind`.
fn check_join(model: &FeatureModel, sibling: &str, parent: &str, kind: DecompKind) -> Result<u32, String> {
    let s = model
        .feature(sibling)
        .ok_or_else(|| format!("The specified sibling (i.e., \"{sibling}\") does not exist"))?;
    if !kind.is_group() {
        return Err(format!("A {kind} decomposition relation cannot be shared with \"{sibling}\""));
    }
    if s.group_id == 0 || s.parent.as_deref() != Some(parent) || s.decomp != Some(kind) {
        return Err(format!(
            "Feature \"{sibling}\" is not in an {kind} decomposition relation under \"{parent}\""
        ));
    }
    Ok(s.group_id)
}

fn slot_value(ctx: &Ctx, set: &ResolutionSet, t: &[usize], a: &AttrAssign) -> Step<Value> {
    let name = &a.name;
    let computed = |e, numeric: bool| {
        let want = if numeric { "numeric" } else { "boolean" };
        match evaluate(e, ctx.snap, &set.env(t)) {
            Ok(Evaluated::Value(v)) if v.is_numeric() == numeric && (numeric || matches!(v, Value::Bool(_))) => Ok(v),
            Ok(_) => Err(error(format!("The value of attribute \"{name}\" is not {want}"))),
            Err(e) => Err(error(format!("The value of attribute \"{name}\" cannot be evaluated: {e}"))),
        }
    };
    match &a.value {
        AttrValue::Str(s) => Ok(Value::Str(s.clone())),
        AttrValue::Numeric(e) => computed(e, true),
        AttrValue::Boolean(e) => computed(e, false),
        AttrValue::Inherited(s, attr) => {
            let f = ctx.snap.feature_at(subject_at(ctx, set, t, s)).expect("in range");
            f.attribute(attr).cloned().ok_or_else(|| {
                error(format!("Feature \"{}\" does not have an attribute named \"{attr}\"", f.name))
            })
        }
    }
}

fn derive_attr(ctx: &Ctx, set: &ResolutionSet, tuples: &Tuples, a: &AttrAssign) -> Step<Value> {
    match derive_unambiguous(tuples.iter().copied(), |t| slot_value(ctx, set, t, a))? {
        Derived::Value(v) => Ok(v),
        Derived::Ambiguous(_) => Err(error(format!(
            "Command is ambiguous on what the value of attribute \"{}\" will be",
            a.name
        ))),
        Derived::NoResolution => Err(warning(NO_RESOLUTIONS)),
    }
}

fn require_decomp_literals(ctx: &Ctx, d: &DecompSetting) -> Step<()> {
    if let DecompValue::Of(s) = &d.value {
        ctx.require_literal(s, "feature")?;
    }
    if let Some(s) = &d.sibling {
        ctx.require_literal(s, "sibling")?;
    }
    Ok(())
}

fn all_tuples(set: &ResolutionSet) -> Vec<&[usize]> {
    set.tuples().iter().map(Vec::as_slice).collect()
}

pub(super) fn add(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let CommandKind::AddFeature {
        name,
        parent,
        decomp,
        attributes,
    } = &ctx.cmd.kind
    else {
        unreachable!("dispatched on kind")
    };
    if ctx.snap.contains(name) {
        return Err(error(format!("Feature name \"{name}\" is in use")));
    }
    ctx.require_literal(&parent.subject(), "parent")?;
    require_decomp_literals(ctx, decomp)?;
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let tuples = all_tuples(&set);
    let p = derive_parent(ctx, &set, &tuples, parent, false)?;
    let kind = derive_kind(ctx, &set, &tuples, &decomp.value, false)?;
    let join = match &decomp.sibling {
        Some(s) => {
            let si = derive_sibling(ctx, &set, &tuples, s, false)?;
            Some(check_join(ctx.snap, ctx.name(si), ctx.name(p), kind).map_err(error)?)
        }
        None => None,
    };
    let mut feature = Feature::new(name.clone());
    for a in attributes {
        let v = derive_attr(ctx, &set, &tuples, a)?;
        feature.attributes.insert(a.name.clone(), v);
    }
    work.attach_feature(feature, ctx.name(p), kind, join)
        .map_err(|e| error(sentence(e)))?;
    Ok(Outcome::applied())
}

struct Relation {
    parent: String,
    kind: DecompKind,
    sibling: Option<String>,
}

struct FeaturePlan {
    target: String,
    relation: Option<Relation>,
    attrs: Vec<(String, Value)>,
    rename: Option<String>,
}

enum PlanError {
    /// The update would break the tree; updateall skips such targets.
    Skip(String),
    Fail(Failure),
}

impl From<Failure> for PlanError {
    fn from(f: Failure) -> Self {
        PlanError::Fail(f)
    }
}

fn plan_update(
    ctx: &Ctx,
    set: &ResolutionSet,
    tuples: &Tuples,
    target: usize,
    updates: &[FeatureUpdate],
) -> Result<FeaturePlan, PlanError> {
    let feat = ctx.snap.feature_at(target).expect("in range");
    let mut plan = FeaturePlan {
        target: feat.name.clone(),
        relation: None,
        attrs: Vec::new(),
        rename: None,
    };
    let (mut new_parent, mut new_kind, mut sibling) = (None, None, None);
    for u in updates {
        match u {
            FeatureUpdate::Name(n) => {
                if *n != feat.name && ctx.snap.contains(n) {
                    return Err(error(format!("New feature name \"{n}\" is in use")).into());
                }
                plan.rename = Some(n.clone());
            }
            FeatureUpdate::Parent(d) => new_parent = Some(derive_parent(ctx, set, tuples, d, true)?),
            FeatureUpdate::Decomp(d) => {
                new_kind = Some(derive_kind(ctx, set, tuples, &d.value, true)?);
                if let Some(s) = &d.sibling {
                    sibling = Some(derive_sibling(ctx, set, tuples, s, true)?);
                }
            }
            FeatureUpdate::Attr(a) => {
                if feat.attribute(&a.name).is_none() {
                    return Err(error(sentence(ModelError::UnknownAttribute {
                        feature: feat.name.clone(),
                        attribute: a.name.clone(),
                    }))
                    .into());
                }
                plan.attrs.push((a.name.clone(), derive_attr(ctx, set, tuples, a)?));
            }
        }
    }
    if new_parent.is_none() && new_kind.is_none() {
        return Ok(plan);
    }
    let (Some(old_parent), Some(old_kind)) = (&feat.parent, feat.decomp) else {
        return Err(PlanError::Skip(sentence(ModelError::RootMove)));
    };
    let parent = new_parent.map_or_else(|| old_parent.clone(), |p| ctx.name(p).to_string());
    let kind = new_kind.unwrap_or(old_kind);
    if ctx.snap.is_in_subtree(&feat.name, &parent) {
        return Err(PlanError::Skip(sentence(ModelError::Cycle {
            feature: feat.name.clone(),
            parent,
        })));
    }
    let sibling = sibling.map(|s| ctx.name(s).to_string());
    if let Some(s) = &sibling {
        check_join(ctx.snap, s, &parent, kind).map_err(|m| PlanError::Fail(error(m)))?;
    }
    plan.relation = Some(Relation { parent, kind, sibling });
    Ok(plan)
}

/// Applies a plan. A failing move leaves `work` unchanged; the later steps
/// were checked against the snapshot and do not depend on the tree.
fn apply_plan(work: &mut FeatureModel, plan: &FeaturePlan) -> Result<(), String> {
    if let Some(rel) = &plan.relation {
        let join = match &rel.sibling {
            Some(s) => Some(check_join(work, s, &rel.parent, rel.kind)?),
            None => None,
        };
        work.move_feature(&plan.target, &rel.parent, rel.kind, join)
            .map_err(sentence)?;
    }
    for (a, v) in &plan.attrs {
        work.set_attribute(&plan.target, a, v.clone()).map_err(sentence)?;
    }
    if let Some(n) = &plan.rename {
        work.rename_feature(&plan.target, n).map_err(sentence)?;
    }
    Ok(())
}

/// Outcome of a multi-target command that skipped `skipped` targets.
fn skipping_outcome(ctx: &Ctx, applied: bool, skipped: Vec<usize>) -> Outcome {
    if skipped.is_empty() {
        return Outcome::applied();
    }
    let list = ctx.name_list(skipped);
    let (effect, message) = if applied {
        (Effect::Partial, format!("Command has a partial effect; skipped feature(s): ({list})"))
    } else {
        (Effect::None, format!("Command has no effect; skipped feature(s): ({list})"))
    };
    Outcome {
        effect,
        diagnostic: Some((Severity::Warning, message)),
    }
}

pub(super) fn update(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let (target, updates, all) = match &ctx.cmd.kind {
        CommandKind::UpdateFeature { target, updates } => (target.clone(), updates, false),
        CommandKind::UpdateAllFeatures { var, updates } => (Subject::Var(var.clone()), updates, true),
        _ => unreachable!("dispatched on kind"),
    };
    ctx.require_literal(&target, "feature")?;
    for u in updates {
        match u {
            FeatureUpdate::Parent(d) => ctx.require_literal(&d.subject(), "parent")?,
            FeatureUpdate::Decomp(d) => require_decomp_literals(ctx, d)?,
            _ => {}
        }
    }
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let targets = described_features(ctx.snap, &target, &set);
    if !all && targets.len() > 1 {
        return Err(error(format!(
            "Command is ambiguous on which feature will be updated ({})",
            ctx.name_list(targets)
        )));
    }
    let position = target.var().and_then(|v| set.position(v));
    let mut plans = Vec::new();
    let mut skipped = Vec::new();
    for &f in &targets {
        let tuples: Vec<&[usize]> = match position {
            Some(p) => set.tuples().iter().filter(|t| t[p] == f).map(Vec::as_slice).collect(),
            None => all_tuples(&set),
        };
        match plan_update(ctx, &set, &tuples, f, updates) {
            Ok(plan) => plans.push((f, plan)),
            Err(PlanError::Skip(m)) if !all => return Err(error(m)),
            Err(PlanError::Skip(_)) => skipped.push(f),
            Err(PlanError::Fail(failure)) => return Err(failure),
        }
    }
    if !all {
        let (_, plan) = &plans[0];
        apply_plan(work, plan).map_err(error)?;
        return Ok(Outcome::applied());
    }
    let mut applied = false;
    for (f, plan) in &plans {
        match apply_plan(work, plan) {
            Ok(()) => applied = true,
            Err(_) => skipped.push(*f),
        }
    }
    Ok(skipping_outcome(ctx, applied, skipped))
}

pub(super) fn remove(ctx: &Ctx, work: &mut FeatureModel) -> Step<Outcome> {
    let (target, all) = match &ctx.cmd.kind {
        CommandKind::RemoveFeature { target } => (target.clone(), false),
        CommandKind::RemoveAllFeatures { var } => (Subject::Var(var.clone()), true),
        _ => unreachable!("dispatched on kind"),
    };
    ctx.require_literal(&target, "feature")?;
    ctx.precheck()?;
    let set = ctx.resolve()?;
    let targets = described_features(ctx.snap, &target, &set);
    if !all {
        if targets.len() > 1 {
            return Err(error(format!(
                "Command is ambiguous on which feature will be removed ({})",
                ctx.name_list(targets)
            )));
        }
        work.remove_subtree(ctx.name(targets[0]))
            .map_err(|e| error(sentence(e)))?;
        return Ok(Outcome::applied());
    }
    let mut applied = false;
    let mut skipped = Vec::new();
    for f in targets {
        let name = ctx.name(f);
        if name == ctx.snap.root_name() {
            skipped.push(f);
        } else if work.contains(name) {
            work.remove_subtree(name).map_err(|e| error(sentence(e)))?;
            applied = true;
        }
    }
    Ok(skipping_outcome(ctx, applied, skipped))
}
