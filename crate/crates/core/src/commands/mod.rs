//! Command execution: the ten Feather commands, their diagnostics and the
//! three run modes.
//!
//! Every command reads the model as it was before the command started and
//! writes into a scratch copy that replaces the model only when the command
//! has an effect. A command that fails leaves the model untouched.

mod constraint;
mod feature;

use std::fmt;

use crate::expr::{
    add_usage, collect_usages, evaluate_condition, typecheck_open, AttrName, NoVars, Subject, Type,
    UsageType, Usages,
};
use crate::model::FeatureModel;
use crate::resolver::{resolve_with, ResolutionSet, SearchStrategy};
use crate::syntax::ast::{AttrValue, Command, CommandKind, DecompSetting, DecompValue, FeatureUpdate};

pub const NO_RESOLUTIONS: &str = "No resolutions could be found to satisfy the where clause";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// One reported problem, rendered as `cmd #<n> (<code>) : <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based position of the command in the script.
    pub index: usize,
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cmd #{} ({}) : {}", self.index, self.code, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Applied,
    /// Applied to some targets only.
    Partial,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub effect: Effect,
    pub diagnostic: Option<(Severity, String)>,
}

impl Outcome {
    fn applied() -> Self {
        Outcome {
            effect: Effect::Applied,
            diagnostic: None,
        }
    }
}

/// A command-level failure: the command has no effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Failure {
    pub severity: Severity,
    pub message: String,
}

pub(crate) fn error(message: impl Into<String>) -> Failure {
    Failure {
        severity: Severity::Error,
        message: message.into(),
    }
}

pub(crate) fn warning(message: impl Into<String>) -> Failure {
    Failure {
        severity: Severity::Warning,
        message: message.into(),
    }
}

pub(crate) type Step<T> = Result<T, Failure>;

/// Upper-cases the first letter of a lower-case library message.
pub(crate) fn sentence(message: impl std::fmt::Display) -> String {
    let s = message.to_string();
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => s,
    }
}

pub(crate) struct Ctx<'a> {
    pub snap: &'a FeatureModel,
    pub cmd: &'a Command,
    pub strategy: SearchStrategy,
}

impl Ctx<'_> {
    pub fn name(&self, index: usize) -> &str {
        &self.snap.feature_at(index).expect("index in range").name
    }

    /// Names of the given features in declaration order.
    pub fn name_list(&self, mut indices: Vec<usize>) -> String {
        indices.sort_unstable();
        indices.dedup();
        indices.iter().map(|&i| self.name(i)).collect::<Vec<_>>().join(", ")
    }

    pub fn require_literal(&self, subject: &Subject, role: &str) -> Step<()> {
        match subject {
            Subject::Feature(n) if !self.snap.contains(n) => {
                Err(error(format!("The specified {role} (i.e., \"{n}\") does not exist")))
            }
            _ => Ok(()),
        }
    }

    /// Checks every expression of the command that can be checked before
    /// variables are bound.
    pub fn precheck(&self) -> Step<()> {
        let invalid = |e: crate::expr::EvalError| error(format!("Invalid expression: {e}"));
        if let Some(w) = &self.cmd.where_clause {
            match typecheck_open(w, self.snap).map_err(invalid)? {
                Some(Type::Boolean) | None => {}
                Some(t) => return Err(error(format!("The where clause has type {t}, not boolean"))),
            }
        }
        for (name, value) in attr_values(&self.cmd.kind) {
            let (e, want) = match value {
                AttrValue::Numeric(e) => (e, "numeric"),
                AttrValue::Boolean(e) => (e, "boolean"),
                AttrValue::Inherited(subject, attr) => {
                    self.require_literal(subject, "feature")?;
                    if let Subject::Feature(n) = subject {
                        let f = self.snap.feature(n).expect("checked");
                        if f.attribute(attr).is_none() {
                            return Err(error(format!("Feature \"{n}\" does not have an attribute named \"{attr}\"")));
                        }
                    }
                    continue;
                }
                AttrValue::Str(_) => continue,
            };
            let ok = match typecheck_open(e, self.snap).map_err(invalid)? {
                None => true,
                Some(t) if want == "numeric" => t.is_numeric(),
                Some(t) => t == Type::Boolean,
            };
            if !ok {
                return Err(error(format!("The value of attribute \"{name}\" is not {want}")));
            }
        }
        Ok(())
    }

    /// Jointly resolves all variables of the command.
    pub fn resolve(&self) -> Step<ResolutionSet> {
        let vars = self.cmd.variables();
        if vars.is_empty() {
            return match &self.cmd.where_clause {
                None => Ok(ResolutionSet::unit()),
                Some(w) => match evaluate_condition(w, self.snap, &NoVars) {
                    Ok(true) => Ok(ResolutionSet::unit()),
                    Ok(false) => Err(warning(NO_RESOLUTIONS)),
                    Err(e) => Err(error(format!("The where clause cannot be evaluated: {e}"))),
                },
            };
        }
        let set = resolve_with(
            self.snap,
            &vars,
            &command_usages(self.cmd),
            self.cmd.where_clause.as_ref(),
            self.strategy,
        );
        if set.is_empty() {
            Err(warning(NO_RESOLUTIONS))
        } else {
            Ok(set)
        }
    }
}

fn attr_values(kind: &CommandKind) -> Vec<(&str, &AttrValue)> {
    match kind {
        CommandKind::AddFeature { attributes, .. } => {
            attributes.iter().map(|a| (a.name.as_str(), &a.value)).collect()
        }
        CommandKind::UpdateFeature { updates, .. } | CommandKind::UpdateAllFeatures { updates, .. } => updates
            .iter()
            .filter_map(|u| match u {
                FeatureUpdate::Attr(a) => Some((a.name.as_str(), &a.value)),
                _ => None,
            })
            .collect(),
        _ => Vec::new(),
    }
}

fn decomp_usages(d: &DecompSetting, out: &mut Usages) {
    if let DecompValue::Of(Subject::Var(v)) = &d.value {
        add_usage(out, v, AttrName::Decomp, UsageType::Decomp);
    }
    if let Some(Subject::Var(v)) = &d.sibling {
        add_usage(out, v, AttrName::DecompId, UsageType::GroupId);
    }
}

/// Attribute usages of every variable across the whole command. Besides
/// the where-clause this covers value expressions, inherited sources,
/// `X._decomp` values, `to X` siblings and the attributes an update assigns
/// to a variable target.
pub fn command_usages(cmd: &Command) -> Usages {
    let mut out = Usages::new();
    if let Some(w) = &cmd.where_clause {
        collect_usages(w, UsageType::Boolean, &mut out);
    }
    for (_, value) in attr_values(&cmd.kind) {
        match value {
            AttrValue::Numeric(e) => collect_usages(e, UsageType::Numeric, &mut out),
            AttrValue::Boolean(e) => collect_usages(e, UsageType::Boolean, &mut out),
            AttrValue::Inherited(Subject::Var(v), a) => {
                add_usage(&mut out, v, AttrName::User(a.clone()), UsageType::Any)
            }
            _ => {}
        }
    }
    match &cmd.kind {
        CommandKind::AddFeature { decomp, .. } => decomp_usages(decomp, &mut out),
        CommandKind::UpdateFeature { target, updates } => {
            feature_update_usages(target.var(), updates, &mut out)
        }
        CommandKind::UpdateAllFeatures { var, updates } => feature_update_usages(Some(var), updates, &mut out),
        _ => {}
    }
    out
}

fn feature_update_usages(target: Option<&str>, updates: &[FeatureUpdate], out: &mut Usages) {
    for u in updates {
        match u {
            FeatureUpdate::Decomp(d) => decomp_usages(d, out),
            FeatureUpdate::Attr(a) => {
                if let Some(v) = target {
                    add_usage(out, v, AttrName::User(a.name.clone()), UsageType::Any);
                }
            }
            _ => {}
        }
    }
}

/// Executes one command with the default search strategy.
pub fn execute(model: &mut FeatureModel, cmd: &Command) -> Outcome {
    execute_with(model, cmd, SearchStrategy::default())
}

pub fn execute_with(model: &mut FeatureModel, cmd: &Command, strategy: SearchStrategy) -> Outcome {
    let mut work = model.clone();
    let ctx = Ctx {
        snap: model,
        cmd,
        strategy,
    };
    let result = match &cmd.kind {
        CommandKind::AddFeature { .. } => feature::add(&ctx, &mut work),
        CommandKind::UpdateFeature { .. } | CommandKind::UpdateAllFeatures { .. } => {
            feature::update(&ctx, &mut work)
        }
        CommandKind::RemoveFeature { .. } | CommandKind::RemoveAllFeatures { .. } => {
            feature::remove(&ctx, &mut work)
        }
        CommandKind::AddConstraint { .. } => constraint::add(&ctx, &mut work),
        CommandKind::UpdateConstraint { .. } | CommandKind::UpdateAllConstraints { .. } => {
            constraint::update(&ctx, &mut work)
        }
        CommandKind::RemoveConstraint { .. } | CommandKind::RemoveAllConstraints { .. } => {
            constraint::remove(&ctx, &mut work)
        }
    };
    let outcome = match result {
        Ok(o) => o,
        Err(f) => Outcome {
            effect: Effect::None,
            diagnostic: Some((f.severity, f.message)),
        },
    };
    if outcome.effect != Effect::None {
        debug_assert!(work.validate().is_empty(), "{:?}", work.validate());
        *model = work;
    }
    outcome
}

/// When a run stops early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    /// Attempt every command.
    IgnoreAll,
    /// Stop after the first command reporting an error.
    #[default]
    StopOnError,
    /// Stop after the first command reporting anything.
    StopOnWarning,
}

impl RunMode {
    fn halts_on(self, severity: Severity) -> bool {
        match self {
            RunMode::IgnoreAll => false,
            RunMode::StopOnError => severity == Severity::Error,
            RunMode::StopOnWarning => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunReport {
    pub diagnostics: Vec<Diagnostic>,
    /// Effect of each attempted command, in order.
    pub effects: Vec<Effect>,
    /// 1-based index of the command that stopped the run.
    pub halted_at: Option<usize>,
}

impl RunReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }
}

pub fn run_script(model: &mut FeatureModel, commands: &[Command], mode: RunMode) -> RunReport {
    run_script_with(model, commands, mode, SearchStrategy::default())
}

pub fn run_script_with(
    model: &mut FeatureModel,
    commands: &[Command],
    mode: RunMode,
    strategy: SearchStrategy,
) -> RunReport {
    let mut report = RunReport::default();
    for (i, cmd) in commands.iter().enumerate() {
        let outcome = execute_with(model, cmd, strategy);
        report.effects.push(outcome.effect);
        if let Some((severity, message)) = outcome.diagnostic {
            report.diagnostics.push(Diagnostic {
                index: i + 1,
                code: cmd.code(),
                severity,
                message,
            });
            if mode.halts_on(severity) {
                report.halted_at = Some(i + 1);
                break;
            }
        }
    }
    report
}
