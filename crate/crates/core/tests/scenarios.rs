//! The services-model walkthrough, command by command, plus run modes over
//! the diagnostics script.

mod common;

use feather::commands::{execute, run_script, Effect, Outcome, RunMode, Severity};
use feather::model::{Constraint, DecompKind, FeatureModel, Value};
use feather::syntax::{load_commands, load_script};

fn services() -> FeatureModel {
    load_script(&common::fixture("services.feaf")).unwrap().0
}

fn run(m: &mut FeatureModel, text: &str) -> Outcome {
    let cmds = load_commands(text).unwrap();
    assert_eq!(cmds.len(), 1);
    execute(m, &cmds[0])
}

fn applied(m: &mut FeatureModel, text: &str) {
    let o = run(m, text);
    assert_eq!(o.effect, Effect::Applied, "{text}: {:?}", o.diagnostic);
    assert!(m.validate().is_empty());
}

fn extracost(m: &FeatureModel, f: &str) -> Option<Value> {
    m.feature(f).unwrap().attribute("extracost").cloned()
}

const HSCP: &str = "High Speed Connection Protocol";

#[test]
fn single_feature_updates() {
    let mut m = services();
    applied(&mut m, r#"update feature "Dating Club" set extracost = numeric: 5;"#);
    assert_eq!(extracost(&m, "Dating Club"), Some(Value::Int(5)));

    applied(
        &mut m,
        r#"update feature "Dating Club" set _parent = "Package 2", _decomp = optional, extracost = numeric: 8;"#,
    );
    let dc = m.feature("Dating Club").unwrap();
    assert_eq!(dc.parent.as_deref(), Some("Package 2"));
    assert_eq!(dc.decomp, Some(DecompKind::Optional));
    assert_eq!(dc.group_id, 0);
    assert_eq!(extracost(&m, "Dating Club"), Some(Value::Int(8)));
    // Video Chat stays behind in what is now a one-member or-group
    assert_eq!(m.feature("Video Chat").unwrap().decomp, Some(DecompKind::Or));
}

#[test]
fn moving_a_package_carries_its_subtree() {
    let mut m = services();
    applied(&mut m, r#"update feature "Package 1" set _parent = "Infrastructure", _decomp = optional;"#);
    assert!(m.is_in_subtree("Infrastructure", "Annoyed Birds"));
    let o = run(&mut m, r#"update feature "Infrastructure" set _parent = "Annoyed Birds";"#);
    assert_eq!(o.effect, Effect::None);
    assert_eq!(o.diagnostic.unwrap().0, Severity::Error);
}

#[test]
fn bulk_extracost_cap() {
    let mut m = services();
    applied(&mut m, "updateall feature F set extracost = numeric: 5 where F.extracost > 5;");
    for f in ["Puzzle Mania", "Stock Wizard", "Dating Club", "Video Chat"] {
        assert_eq!(extracost(&m, f), Some(Value::Int(5)), "{f}");
    }
    assert_eq!(extracost(&m, "Speed Kart"), Some(Value::Int(4)));
}

#[test]
fn bulk_move_into_the_premium_or_group() {
    let mut m = services();
    applied(
        &mut m,
        r#"updateall feature F
  set _parent = "Package 3",
      _decomp = or to G
  where F.extracost > 0
        and (F._parent = "Package 1" or
              F._parent = "Package 2")
        and G._parent = "Package 3"
        and G.stype = "fun";"#,
    );
    let group = m.feature("Dating Club").unwrap().group_id;
    for f in ["3D Racing", "Ultimate Chess", "Don't Wait in the City", "Speed Kart", "Puzzle Mania"] {
        let x = m.feature(f).unwrap();
        assert_eq!(x.parent.as_deref(), Some("Package 3"), "{f}");
        assert_eq!(x.group_id, group, "{f}");
    }
    assert_eq!(m.children("Package 3").len(), 9);
}

#[test]
fn removing_a_feature_takes_its_constraints() {
    let mut m = services();
    applied(&mut m, &format!(r#"add constraint "Video Chat" requires "{HSCP}";"#));
    applied(&mut m, r#"remove feature "Video Chat";"#);
    assert!(!m.contains("HD Streaming"));
    assert!(m.constraints().iter().all(|c| !c.involves("Video Chat")));
}

#[test]
fn removeall_including_the_root_is_partial() {
    let mut m = services();
    let o = run(&mut m, r#"removeall feature F where F._name = "Services" or F._name = "Package 2";"#);
    assert_eq!(o.effect, Effect::Partial);
    assert_eq!(o.diagnostic.unwrap().0, Severity::Warning);
    assert!(m.contains("Services") && !m.contains("Package 2"));
}

#[test]
fn constraint_commands() {
    let mut m = services();
    let before = m.constraints().len();
    applied(&mut m, &format!(r#"add constraint "Video Chat" requires "{HSCP}";"#));
    applied(
        &mut m,
        &format!(r#"add constraint F requires "{HSCP}" where F._parent = "Package 3" and F.stype = "utility";"#),
    );
    assert_eq!(m.constraints().len(), before + 3);

    applied(
        &mut m,
        &format!(r#"update constraint "Video Chat" requires "{HSCP}" set rightfeature = "Video Protocol";"#),
    );
    assert!(m.find_constraint(&Constraint::requires("Video Chat", "Video Protocol")).is_some());
    assert!(m.find_constraint(&Constraint::requires("Video Chat", HSCP)).is_none());

    applied(
        &mut m,
        &format!(
            r#"updateall constraint F requires "{HSCP}" set rightfeature = "Ultra Speed Protocol"
               where F._parent = "Package 3" and F.stype = "utility";"#
        ),
    );
    for f in ["Stock Wizard", "Money Money Money"] {
        assert!(m.find_constraint(&Constraint::requires(f, "Ultra Speed Protocol")).is_some());
    }

    applied(&mut m, r#"remove constraint "Highway Jam" excludes "All Sideways";"#);
    // orientation does not matter for excludes
    let mut n = services();
    applied(&mut n, r#"remove constraint "All Sideways" excludes "Highway Jam";"#);

    applied(&mut m, r#"removeall constraint F excludes "All Sideways";"#);
    assert!(m.constraints().iter().all(|c| !c.involves("All Sideways")));
}

#[test]
fn same_effect_constraints_are_stored_once() {
    let mut m = services();
    let o = run(&mut m, r#"add constraint "All Sideways" excludes "Highway Jam";"#);
    assert_eq!(o.effect, Effect::None);
    assert_eq!(
        o.diagnostic,
        Some((
            Severity::Warning,
            "Following Cross-tree Constraint(s) already exist: (Highway Jam excludes All Sideways)".into()
        ))
    );
}

fn diagnostics_script() -> (FeatureModel, Vec<feather::syntax::ast::Command>) {
    load_script(&common::fixture("diagnostics.feaf")).unwrap()
}

#[test]
fn run_modes_halt_after_the_offending_command() {
    let (base, cmds) = diagnostics_script();
    let mut m = base.clone();
    let all = run_script(&mut m, &cmds, RunMode::IgnoreAll);
    assert_eq!(all.effects.len(), cmds.len());
    assert_eq!(all.halted_at, None);
    assert_eq!(all.diagnostics.len(), 11);

    let mut m = base.clone();
    let e = run_script(&mut m, &cmds, RunMode::StopOnError);
    assert_eq!(e.halted_at, Some(1));
    assert_eq!(m, base);

    // without the failing commands only warnings remain
    let errors: Vec<usize> = all
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.index - 1)
        .collect();
    assert_eq!(errors, [0, 2, 3, 5, 12, 13]);
    let no_errors: Vec<_> = cmds
        .iter()
        .enumerate()
        .filter(|(i, _)| !errors.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    let e = run_script(&mut base.clone(), &no_errors, RunMode::StopOnError);
    assert_eq!(e.halted_at, None);
    assert_eq!(e.diagnostics.len(), 5);
    let w = run_script(&mut base.clone(), &no_errors, RunMode::StopOnWarning);
    assert_eq!(w.halted_at, Some(w.diagnostics[0].index));
    assert_eq!(w.diagnostics.len(), 1);
    assert_eq!(w.effects.len(), w.diagnostics[0].index);
}

#[test]
fn diagnostics_script_final_model() {
    let (mut m, cmds) = diagnostics_script();
    run_script(&mut m, &cmds, RunMode::IgnoreAll);
    assert_eq!(m.feature("F7").unwrap().attribute("w"), Some(&Value::Int(14)));
    assert_eq!(m.feature("F6-5").unwrap().attribute("w"), Some(&Value::Int(8)));
    assert!(!m.contains("F5") && !m.contains("New Feature"));
    assert!(m.find_constraint(&Constraint::requires("F2", "F6-1")).is_some());
    assert!(m.find_constraint(&Constraint::requires("F6-5", "F6-7")).is_some());
    assert!(m.validate().is_empty());
}
