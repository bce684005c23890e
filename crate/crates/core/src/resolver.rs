//! Feature-variable resolution: finds every assignment of concrete features
//! to a command's variables under which its where-clause holds.
//!
//! Each variable's domain is first narrowed to the features able to fill
//! every `V.attr` occurrence with a compatible type, then by the top-level
//! conjuncts mentioning that variable alone. Variables are bound so that
//! each one shares a conjunct with those before it where possible, smaller
//! domains first, and every other conjunct is checked as soon as all of
//! its variables are bound.
//! A tuple is a resolution iff the where-clause typechecks, evaluates
//! without error and yields true.

use crate::expr::{
    admits, evaluate_condition, Binding, Expr, Subject, Usage, Usages, VarEnv,
};
use crate::model::{Constraint, ConstraintKind, Feature, FeatureModel};

/// How the search tree is explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Sequential,
    /// Splits the first variable's domain across the rayon pool. Falls back
    /// to sequential search when built without the `parallel` feature.
    Parallel,
}

impl Default for SearchStrategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            SearchStrategy::Parallel
        } else {
            SearchStrategy::Sequential
        }
    }
}

/// All resolutions of a set of variables. Tuples hold feature positions
/// (declaration order) aligned with `variables`, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionSet {
    variables: Vec<String>,
    tuples: Vec<Vec<usize>>,
}

impl ResolutionSet {
    /// The single empty tuple: what a command without variables resolves to
    /// when its where-clause holds.
    pub fn unit() -> Self {
        ResolutionSet {
            variables: Vec::new(),
            tuples: vec![Vec::new()],
        }
    }

    pub fn empty(variables: Vec<String>) -> Self {
        ResolutionSet {
            variables,
            tuples: Vec::new(),
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn position(&self, var: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == var)
    }

    /// Variable environment for one tuple.
    pub fn env<'a>(&'a self, tuple: &'a [usize]) -> TupleEnv<'a> {
        TupleEnv {
            vars: &self.variables,
            tuple,
        }
    }

    pub fn binding(&self, model: &FeatureModel, tuple: &[usize]) -> Binding {
        self.variables
            .iter()
            .zip(tuple)
            .map(|(v, &i)| (v.clone(), model.feature_at(i).expect("index in range").name.clone()))
            .collect()
    }

    /// Distinct features bound to `var` across all tuples, in declaration
    /// order.
    pub fn project(&self, var: &str) -> Vec<usize> {
        let Some(p) = self.position(var) else {
            return Vec::new();
        };
        let mut out: Vec<usize> = self.tuples.iter().map(|t| t[p]).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The feature `subject` denotes under `tuple`, if it exists.
    pub fn subject_index(&self, model: &FeatureModel, tuple: &[usize], subject: &Subject) -> Option<usize> {
        match subject {
            Subject::Feature(n) => model.index_of(n),
            Subject::Var(v) => self.position(v).map(|p| tuple[p]),
        }
    }
}

/// Binds variables to the features at the given positions.
#[derive(Debug, Clone, Copy)]
pub struct TupleEnv<'a> {
    vars: &'a [String],
    tuple: &'a [usize],
}

impl VarEnv for TupleEnv<'_> {
    fn lookup<'m>(&self, model: &'m FeatureModel, var: &str) -> Option<&'m Feature> {
        let p = self.vars.iter().position(|v| v == var)?;
        self.tuple.get(p).and_then(|&i| model.feature_at(i))
    }
}

/// Positions of the features able to stand in for a variable with `usages`.
pub fn candidate_domain(model: &FeatureModel, usages: &[Usage]) -> Vec<usize> {
    model
        .features()
        .enumerate()
        .filter(|(_, f)| admits(f, usages))
        .map(|(i, _)| i)
        .collect()
}

struct Search<'a> {
    model: &'a FeatureModel,
    /// Variables in binding order.
    order: Vec<String>,
    domains: Vec<Vec<usize>>,
    /// Conjuncts to check right after binding `order[level]`.
    checks: Vec<Vec<&'a Expr>>,
}

impl Search<'_> {
    fn accepts(&self, level: usize, bound: &[usize]) -> bool {
        let env = TupleEnv {
            vars: &self.order[..bound.len()],
            tuple: bound,
        };
        self.checks[level]
            .iter()
            .all(|c| evaluate_condition(c, self.model, &env) == Ok(true))
    }

    fn dfs(&self, bound: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let level = bound.len();
        if level == self.order.len() {
            out.push(bound.clone());
            return;
        }
        for &f in &self.domains[level] {
            bound.push(f);
            if self.accepts(level, bound) {
                self.dfs(bound, out);
            }
            bound.pop();
        }
    }

    fn run_sequential(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.dfs(&mut Vec::with_capacity(self.order.len()), &mut out);
        out
    }

    #[cfg(feature = "parallel")]
    fn run_parallel(&self) -> Vec<Vec<usize>> {
        use rayon::prelude::*;
        if self.order.is_empty() {
            return self.run_sequential();
        }
        self.domains[0]
            .par_iter()
            .flat_map_iter(|&f| {
                let mut out = Vec::new();
                let mut bound = Vec::with_capacity(self.order.len());
                bound.push(f);
                if self.accepts(0, &bound) {
                    self.dfs(&mut bound, &mut out);
                }
                out
            })
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn run_parallel(&self) -> Vec<Vec<usize>> {
        self.run_sequential()
    }
}

/// Picks the next variable among those sharing a conjunct with the bound
/// ones (any variable when none does), smallest domain first.
fn binding_order(domains: &[Vec<usize>], conjuncts: &[(&Expr, Vec<usize>)]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(domains.len());
    let mut left: Vec<usize> = (0..domains.len()).collect();
    while !left.is_empty() {
        let linked = |v: usize| {
            conjuncts
                .iter()
                .any(|(_, m)| m.contains(&v) && m.iter().any(|o| order.contains(o)))
        };
        let pick = left
            .iter()
            .copied()
            .min_by_key(|&v| (!linked(v), domains[v].len()))
            .expect("non-empty");
        order.push(pick);
        left.retain(|&v| v != pick);
    }
    order
}

/// Resolves `variables` jointly against `condition` (absent means true).
/// Variables of `condition` missing from `variables` are appended. `usages`
/// narrows each variable's domain and should cover every expression of the
/// command the variables occur in.
pub fn resolve_with(
    model: &FeatureModel,
    variables: &[String],
    usages: &Usages,
    condition: Option<&Expr>,
    strategy: SearchStrategy,
) -> ResolutionSet {
    let mut vars: Vec<String> = variables.to_vec();
    if let Some(c) = condition {
        for v in c.variables() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let mut domains: Vec<Vec<usize>> = vars
        .iter()
        .map(|v| candidate_domain(model, usages.get(v).map_or(&[][..], Vec::as_slice)))
        .collect();

    // conjuncts as (expression, positions in `vars` it mentions)
    let mut conjuncts: Vec<(&Expr, Vec<usize>)> = Vec::new();
    for c in condition.map(Expr::conjuncts).unwrap_or_default() {
        let mentioned: Vec<usize> = c
            .variables()
            .iter()
            .map(|v| vars.iter().position(|o| o == v).expect("condition variables included"))
            .collect();
        match mentioned.as_slice() {
            [] => {
                if evaluate_condition(c, model, &crate::expr::NoVars) != Ok(true) {
                    return ResolutionSet::empty(vars);
                }
            }
            // single-variable conjuncts filter the domain up front
            [v] => {
                let var = std::slice::from_ref(&vars[*v]);
                domains[*v].retain(|&f| {
                    let env = TupleEnv {
                        vars: var,
                        tuple: std::slice::from_ref(&f),
                    };
                    evaluate_condition(c, model, &env) == Ok(true)
                });
            }
            _ => conjuncts.push((c, mentioned)),
        }
    }
    if domains.iter().any(Vec::is_empty) {
        return ResolutionSet::empty(vars);
    }
    let perm = binding_order(&domains, &conjuncts);
    let order: Vec<String> = perm.iter().map(|&i| vars[i].clone()).collect();

    let mut checks: Vec<Vec<&Expr>> = vec![Vec::new(); order.len()];
    for (c, mentioned) in conjuncts {
        let level = mentioned
            .iter()
            .map(|v| perm.iter().position(|p| p == v).expect("all variables ordered"))
            .max()
            .expect("at least two variables");
        checks[level].push(c);
    }
    let search = Search {
        model,
        order,
        domains: perm.iter().map(|&i| domains[i].clone()).collect(),
        checks,
    };
    let found = match strategy {
        SearchStrategy::Sequential => search.run_sequential(),
        SearchStrategy::Parallel => search.run_parallel(),
    };
    // back from binding order to the caller's variable order
    let mut tuples: Vec<Vec<usize>> = found
        .into_iter()
        .map(|t| {
            let mut out = vec![0; t.len()];
            for (level, &i) in perm.iter().enumerate() {
                out[i] = t[level];
            }
            out
        })
        .collect();
    tuples.sort_unstable();
    ResolutionSet {
        variables: vars,
        tuples,
    }
}

/// Resolves the variables of a where-clause on its own.
pub fn resolve(model: &FeatureModel, condition: &Expr) -> ResolutionSet {
    let usages = crate::expr::referenced_usages(condition);
    resolve_with(model, &[], &usages, Some(condition), SearchStrategy::default())
}

/// Features a descriptor denotes: a present literal name, or the distinct
/// features the variable takes across `resolutions`.
pub fn described_features(model: &FeatureModel, desc: &Subject, resolutions: &ResolutionSet) -> Vec<usize> {
    match desc {
        Subject::Feature(n) => model.index_of(n).into_iter().collect(),
        Subject::Var(v) => resolutions.project(v),
    }
}

/// Candidate constraints generated by a constraint description, split into
/// the stored constraints they match and those not stored. Both lists are
/// free of same-effect duplicates and keep first-generation order. Matches
/// are returned as stored.
pub fn described_constraints(
    model: &FeatureModel,
    left: &Subject,
    kind: ConstraintKind,
    right: &Subject,
    resolutions: &ResolutionSet,
) -> (Vec<Constraint>, Vec<Constraint>) {
    let mut matched: Vec<Constraint> = Vec::new();
    let mut absent: Vec<Constraint> = Vec::new();
    for t in resolutions.tuples() {
        let (Some(l), Some(r)) = (
            resolutions.subject_index(model, t, left),
            resolutions.subject_index(model, t, right),
        ) else {
            continue;
        };
        let c = Constraint::new(
            model.feature_at(l).expect("in range").name.clone(),
            kind,
            model.feature_at(r).expect("in range").name.clone(),
        );
        match model.find_constraint(&c) {
            Some(stored) => {
                if !matched.contains(stored) {
                    matched.push(stored.clone());
                }
            }
            None => {
                if !absent.iter().any(|a| a.same_effect(&c)) {
                    absent.push(c);
                }
            }
        }
    }
    (matched, absent)
}

/// Outcome of deriving one slot value over a resolution set.
#[derive(Debug, Clone, PartialEq)]
pub enum Derived<T> {
    Value(T),
    /// Distinct values in order of first appearance.
    Ambiguous(Vec<T>),
    NoResolution,
}

/// Evaluates `slot` under every tuple and reports the common value, or the
/// distinct values when they disagree. The first failing evaluation aborts.
pub fn derive_unambiguous<'t, T: PartialEq, E>(
    tuples: impl IntoIterator<Item = &'t [usize]>,
    mut slot: impl FnMut(&'t [usize]) -> Result<T, E>,
) -> Result<Derived<T>, E> {
    let mut values: Vec<T> = Vec::new();
    for t in tuples {
        let v = slot(t)?;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    Ok(match values.len() {
        0 => Derived::NoResolution,
        1 => Derived::Value(values.pop().expect("one value")),
        _ => Derived::Ambiguous(values),
    })
}

/// Brute-force reference: every tuple over all features, filtered by the
/// full where-clause. Exponential; for tests and cross-checks only.
pub fn resolve_exhaustive(model: &FeatureModel, variables: &[String], condition: &Expr) -> Vec<Vec<usize>> {
    let n = model.len();
    let k = variables.len();
    let mut out = Vec::new();
    let mut t = vec![0usize; k];
    if k > 0 && n == 0 {
        return out;
    }
    loop {
        let env = TupleEnv {
            vars: variables,
            tuple: &t,
        };
        if evaluate_condition(condition, model, &env) == Ok(true) {
            out.push(t.clone());
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}
