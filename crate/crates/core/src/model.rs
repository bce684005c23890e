//! The feature model: a tree of attributed features plus a set of
//! cross-tree constraints, and the integrity-preserving edits on it.
//!
//! Decomposition relations are stored inline on each [`Feature`] (parent
//! link, relation kind and group id) rather than as a separate relation set.
//! Every mutating method either applies completely or returns an error and
//! leaves the model untouched.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

/// A typed attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Integer,
            Value::Real(_) => ValueType::Real,
            Value::Bool(_) => ValueType::Boolean,
            Value::Str(_) => ValueType::String,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Real(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Real(r) => Some(r),
            _ => None,
        }
    }
}

/// Formats a real so that it always carries a fractional part and never
/// uses exponent notation, which is the only form the literal grammar has.
pub fn format_real(r: f64) -> String {
    let mut s = format!("{r}");
    if !s.contains('.') {
        s.push_str(".0");
    }
    s
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&format_real(*r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Integer,
    Real,
    Boolean,
    String,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Integer => "integer",
            ValueType::Real => "real",
            ValueType::Boolean => "boolean",
            ValueType::String => "string",
        })
    }
}

/// Kind of the decomposition relation linking a feature to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecompKind {
    Mandatory,
    Optional,
    Alternative,
    Or,
}

impl DecompKind {
    pub const ALL: [DecompKind; 4] = [
        DecompKind::Mandatory,
        DecompKind::Optional,
        DecompKind::Alternative,
        DecompKind::Or,
    ];

    /// Alternative and or relations bind a group of siblings.
    pub fn is_group(self) -> bool {
        matches!(self, DecompKind::Alternative | DecompKind::Or)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            DecompKind::Mandatory => "mandatory",
            DecompKind::Optional => "optional",
            DecompKind::Alternative => "alternative",
            DecompKind::Or => "or",
        }
    }
}

impl fmt::Display for DecompKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Names of the four built-in attributes every feature exposes.
pub const STRUCTURAL_ATTRIBUTES: [&str; 4] = ["_name", "_parent", "_decomp", "_decompID"];

/// Attribute identifiers start with a lowercase ASCII letter followed by
/// letters, digits or underscores.
pub fn is_attribute_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub parent: Option<String>,
    pub decomp: Option<DecompKind>,
    /// 0 for solitary relations (and the root), positive for group members.
    pub group_id: u32,
    pub attributes: IndexMap<String, Value>,
}

impl Feature {
    /// A detached feature with no attributes.
    pub fn new(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            parent: None,
            decomp: None,
            group_id: 0,
            attributes: IndexMap::new(),
        }
    }

    pub fn with_attribute(mut self, id: impl Into<String>, value: Value) -> Self {
        self.attributes.insert(id.into(), value);
        self
    }

    pub fn attribute(&self, id: &str) -> Option<&Value> {
        self.attributes.get(id)
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Requires,
    Excludes,
}

impl ConstraintKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ConstraintKind::Requires => "requires",
            ConstraintKind::Excludes => "excludes",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A requires/excludes constraint between two features.
///
/// `PartialEq` compares orientation as written. Use [`Constraint::same_effect`]
/// or [`Constraint::effect_key`] for the identity that treats `X excludes Y`
/// and `Y excludes X` as one constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub left: String,
    pub kind: ConstraintKind,
    pub right: String,
}

impl Constraint {
    pub fn new(left: impl Into<String>, kind: ConstraintKind, right: impl Into<String>) -> Self {
        Constraint {
            left: left.into(),
            kind,
            right: right.into(),
        }
    }

    pub fn requires(left: impl Into<String>, right: impl Into<String>) -> Self {
        Self::new(left, ConstraintKind::Requires, right)
    }

    pub fn excludes(left: impl Into<String>, right: impl Into<String>) -> Self {
        Self::new(left, ConstraintKind::Excludes, right)
    }

    /// Canonical key: excludes endpoints are sorted, requires keeps direction.
    pub fn effect_key(&self) -> (&str, ConstraintKind, &str) {
        match self.kind {
            ConstraintKind::Excludes if self.right < self.left => {
                (&self.right, self.kind, &self.left)
            }
            _ => (&self.left, self.kind, &self.right),
        }
    }

    pub fn same_effect(&self, other: &Constraint) -> bool {
        self.effect_key() == other.effect_key()
    }

    pub fn involves(&self, feature: &str) -> bool {
        self.left == feature || self.right == feature
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.kind, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("feature \"{0}\" does not exist")]
    UnknownFeature(String),
    #[error("feature name \"{0}\" is in use")]
    NameInUse(String),
    #[error("the root feature cannot be removed")]
    RootRemoval,
    #[error("the root feature cannot be moved")]
    RootMove,
    #[error("moving \"{feature}\" under \"{parent}\" would create a cycle")]
    Cycle { feature: String, parent: String },
    #[error("feature \"{feature}\" cannot join decomposition group {group} as {kind} under \"{parent}\"")]
    GroupMismatch {
        feature: String,
        parent: String,
        kind: DecompKind,
        group: u32,
    },
    #[error("feature \"{feature}\" does not have an attribute named \"{attribute}\"")]
    UnknownAttribute { feature: String, attribute: String },
    #[error("\"{0}\" is not a valid attribute identifier")]
    InvalidAttributeName(String),
}

/// What a subtree removal took out of the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Removal {
    /// Removed features in preorder, starting with the subtree root.
    pub features: Vec<String>,
    pub constraints: Vec<Constraint>,
}

/// A broken model invariant, as reported by [`FeatureModel::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingRoot(String),
    RootHasParent(String),
    RootHasDecomposition(String),
    KeyMismatch { key: String, name: String },
    MissingParent(String),
    UnknownParent { feature: String, parent: String },
    MissingDecomposition(String),
    Cycle(String),
    GroupIdMismatch { feature: String, group_id: u32 },
    InconsistentGroup { group_id: u32, feature: String },
    InvalidAttributeName { feature: String, attribute: String },
    UnknownConstraintEndpoint(Constraint),
    DuplicateConstraint(Constraint),
    StaleGroupCounter { next: u32, max: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRoot(r) => write!(f, "root \"{r}\" is not a feature of the model"),
            Violation::RootHasParent(r) => write!(f, "root \"{r}\" has a parent"),
            Violation::RootHasDecomposition(r) => {
                write!(f, "root \"{r}\" has a decomposition relation")
            }
            Violation::KeyMismatch { key, name } => {
                write!(f, "feature stored under \"{key}\" is named \"{name}\"")
            }
            Violation::MissingParent(n) => write!(f, "non-root feature \"{n}\" has no parent"),
            Violation::UnknownParent { feature, parent } => {
                write!(f, "feature \"{feature}\" names unknown parent \"{parent}\"")
            }
            Violation::MissingDecomposition(n) => {
                write!(f, "non-root feature \"{n}\" has no decomposition relation")
            }
            Violation::Cycle(n) => write!(f, "feature \"{n}\" is on a parent cycle"),
            Violation::GroupIdMismatch { feature, group_id } => write!(
                f,
                "feature \"{feature}\" has group id {group_id} inconsistent with its relation kind"
            ),
            Violation::InconsistentGroup { group_id, feature } => write!(
                f,
                "group {group_id} member \"{feature}\" disagrees on parent or relation kind"
            ),
            Violation::InvalidAttributeName { feature, attribute } => write!(
                f,
                "feature \"{feature}\" has invalid attribute identifier \"{attribute}\""
            ),
            Violation::UnknownConstraintEndpoint(c) => {
                write!(f, "constraint ({c}) names an unknown feature")
            }
            Violation::DuplicateConstraint(c) => write!(f, "constraint ({c}) is stored twice"),
            Violation::StaleGroupCounter { next, max } => write!(
                f,
                "group counter {next} does not exceed the largest group id {max}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    features: IndexMap<String, Feature>,
    root: String,
    constraints: Vec<Constraint>,
    next_group_id: u32,
}

impl FeatureModel {
    /// A model holding only `root`. Parent and relation fields of `root`
    /// are cleared.
    pub fn new(mut root: Feature) -> Self {
        root.parent = None;
        root.decomp = None;
        root.group_id = 0;
        let name = root.name.clone();
        let mut features = IndexMap::new();
        features.insert(name.clone(), root);
        FeatureModel {
            features,
            root: name,
            constraints: Vec::new(),
            next_group_id: 1,
        }
    }

    /// Assembles a model without checking any invariant. Meant for loaders
    /// that validate afterwards and for building corrupt fixtures.
    pub fn from_parts_unchecked(
        root: String,
        features: Vec<Feature>,
        constraints: Vec<Constraint>,
    ) -> Self {
        let max = features.iter().map(|f| f.group_id).max().unwrap_or(0);
        FeatureModel {
            features: features.into_iter().map(|f| (f.name.clone(), f)).collect(),
            root,
            constraints,
            next_group_id: max + 1,
        }
    }

    /// Mutable access bypassing every integrity check.
    pub fn feature_mut_unchecked(&mut self, name: &str) -> Option<&mut Feature> {
        self.features.get_mut(name)
    }

    pub fn constraints_mut_unchecked(&mut self) -> &mut Vec<Constraint> {
        &mut self.constraints
    }

    pub fn root_name(&self) -> &str {
        &self.root
    }

    pub fn root(&self) -> &Feature {
        &self.features[self.root.as_str()]
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.features.contains_key(name)
    }

    /// Features in declaration/insertion order.
    pub fn features(&self) -> impl ExactSizeIterator<Item = &Feature> + '_ {
        self.features.values()
    }

    pub fn feature_at(&self, index: usize) -> Option<&Feature> {
        self.features.get_index(index).map(|(_, f)| f)
    }

    /// Position of `name` in declaration order.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.get_index_of(name)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn next_group_id(&self) -> u32 {
        self.next_group_id
    }

    fn require(&self, name: &str) -> Result<&Feature, ModelError> {
        self.features
            .get(name)
            .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))
    }

    /// Direct children of `name` in declaration order.
    pub fn children(&self, name: &str) -> Vec<&str> {
        self.features
            .values()
            .filter(|f| f.parent.as_deref() == Some(name))
            .map(|f| f.name.as_str())
            .collect()
    }

    fn children_index(&self) -> HashMap<&str, Vec<&str>> {
        let mut map: HashMap<&str, Vec<&str>> = HashMap::new();
        for f in self.features.values() {
            if let Some(p) = &f.parent {
                map.entry(p.as_str()).or_default().push(&f.name);
            }
        }
        map
    }

    /// `f` and all its transitive descendants, in preorder.
    pub fn subtree(&self, name: &str) -> Result<Vec<String>, ModelError> {
        self.require(name)?;
        let index = self.children_index();
        let mut out = Vec::new();
        let mut stack = vec![name];
        while let Some(n) = stack.pop() {
            out.push(n.to_string());
            if let Some(kids) = index.get(n) {
                stack.extend(kids.iter().rev());
            }
        }
        Ok(out)
    }

    /// Whole tree in preorder, children in declaration order.
    pub fn preorder(&self) -> Vec<&Feature> {
        let index = self.children_index();
        let mut out = Vec::with_capacity(self.features.len());
        let mut stack = vec![self.root.as_str()];
        while let Some(n) = stack.pop() {
            if let Some(f) = self.features.get(n) {
                out.push(f);
            }
            if let Some(kids) = index.get(n) {
                stack.extend(kids.iter().rev());
            }
        }
        out
    }

    /// True when `node` is `ancestor` or lies below it. Walks parent links,
    /// bounded by the model size so corrupt cycles terminate.
    pub fn is_in_subtree(&self, ancestor: &str, node: &str) -> bool {
        let mut cur = Some(node);
        let mut steps = 0;
        while let Some(n) = cur {
            if n == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.features.len() {
                return false;
            }
            cur = self.features.get(n).and_then(|f| f.parent.as_deref());
        }
        false
    }

    /// Stored constraints that mention `name` on either side.
    pub fn involving_ctcs(&self, name: &str) -> Result<Vec<Constraint>, ModelError> {
        self.require(name)?;
        Ok(self
            .constraints
            .iter()
            .filter(|c| c.involves(name))
            .cloned()
            .collect())
    }

    /// Features of group `group_id`, in declaration order.
    pub fn group_members(&self, group_id: u32) -> Vec<&Feature> {
        if group_id == 0 {
            return Vec::new();
        }
        self.features
            .values()
            .filter(|f| f.group_id == group_id)
            .collect()
    }

    fn fresh_group_id(&mut self) -> u32 {
        let id = self.next_group_id;
        self.next_group_id += 1;
        id
    }

    /// Resolves the group id a feature gets when linked under `parent` with
    /// `kind`, optionally joining an existing group. `mover` is the feature
    /// being relinked, if it is already in the model.
    fn check_group(
        &self,
        mover: &str,
        parent: &str,
        kind: DecompKind,
        join_group: Option<u32>,
    ) -> Result<Option<u32>, ModelError> {
        let mismatch = |group| ModelError::GroupMismatch {
            feature: mover.to_string(),
            parent: parent.to_string(),
            kind,
            group,
        };
        match (kind.is_group(), join_group) {
            (false, None) => Ok(Some(0)),
            (false, Some(g)) => Err(mismatch(g)),
            (true, None) => Ok(None),
            (true, Some(g)) => {
                let fits = g > 0
                    && self.features.values().any(|f| {
                        f.group_id == g
                            && f.parent.as_deref() == Some(parent)
                            && f.decomp == Some(kind)
                    });
                if fits {
                    Ok(Some(g))
                } else {
                    Err(mismatch(g))
                }
            }
        }
    }

    /// Inserts `feature` under `parent`. Solitary kinds get group id 0, a
    /// joined group keeps its id and any other group kind opens a fresh group.
    /// Returns the assigned group id.
    pub fn attach_feature(
        &mut self,
        mut feature: Feature,
        parent: &str,
        kind: DecompKind,
        join_group: Option<u32>,
    ) -> Result<u32, ModelError> {
        if self.features.contains_key(&feature.name) {
            return Err(ModelError::NameInUse(feature.name));
        }
        self.require(parent)?;
        if let Some(bad) = feature.attributes.keys().find(|k| !is_attribute_identifier(k)) {
            return Err(ModelError::InvalidAttributeName(bad.clone()));
        }
        let group = match self.check_group(&feature.name, parent, kind, join_group)? {
            Some(g) => g,
            None => self.fresh_group_id(),
        };
        feature.parent = Some(parent.to_string());
        feature.decomp = Some(kind);
        feature.group_id = group;
        self.features.insert(feature.name.clone(), feature);
        Ok(group)
    }

    /// Relinks `name` (and implicitly its subtree) under `new_parent`.
    ///
    /// Keeping both the parent and a group kind without naming a group to
    /// join leaves the current group untouched.
    pub fn move_feature(
        &mut self,
        name: &str,
        new_parent: &str,
        kind: DecompKind,
        join_group: Option<u32>,
    ) -> Result<u32, ModelError> {
        let current = self.require(name)?;
        if current.is_root() {
            return Err(ModelError::RootMove);
        }
        self.require(new_parent)?;
        if self.is_in_subtree(name, new_parent) {
            return Err(ModelError::Cycle {
                feature: name.to_string(),
                parent: new_parent.to_string(),
            });
        }
        let unchanged_group = current.parent.as_deref() == Some(new_parent)
            && current.decomp == Some(kind)
            && current.group_id > 0;
        let keep = unchanged_group.then_some(current.group_id);
        let group = match join_group {
            Some(g) if Some(g) == keep => g,
            _ => match self.check_group(name, new_parent, kind, join_group)? {
                Some(g) => g,
                None => match keep {
                    Some(g) => g,
                    None => self.fresh_group_id(),
                },
            },
        };
        let f = self.features.get_mut(name).expect("checked above");
        f.parent = Some(new_parent.to_string());
        f.decomp = Some(kind);
        f.group_id = group;
        Ok(group)
    }

    /// Removes `name`, its descendants, and every constraint touching any of
    /// them.
    pub fn remove_subtree(&mut self, name: &str) -> Result<Removal, ModelError> {
        if self.require(name)?.is_root() {
            return Err(ModelError::RootRemoval);
        }
        let doomed = self.subtree(name)?;
        let doomed_set: HashSet<&str> = doomed.iter().map(String::as_str).collect();
        let mut removed_constraints = Vec::new();
        self.constraints.retain(|c| {
            let hit = doomed_set.contains(c.left.as_str()) || doomed_set.contains(c.right.as_str());
            if hit {
                removed_constraints.push(c.clone());
            }
            !hit
        });
        self.features.retain(|k, _| !doomed_set.contains(k.as_str()));
        Ok(Removal {
            features: doomed,
            constraints: removed_constraints,
        })
    }

    /// Renames a feature in place, rewriting child links and constraint
    /// endpoints. Declaration order is preserved.
    pub fn rename_feature(&mut self, old: &str, new: &str) -> Result<(), ModelError> {
        let index = self
            .features
            .get_index_of(old)
            .ok_or_else(|| ModelError::UnknownFeature(old.to_string()))?;
        if old == new {
            return Ok(());
        }
        if self.features.contains_key(new) {
            return Err(ModelError::NameInUse(new.to_string()));
        }
        let (_, mut feature) = self.features.shift_remove_index(index).expect("index valid");
        feature.name = new.to_string();
        self.features.shift_insert(index, new.to_string(), feature);
        for f in self.features.values_mut() {
            if f.parent.as_deref() == Some(old) {
                f.parent = Some(new.to_string());
            }
        }
        for c in &mut self.constraints {
            if c.left == old {
                c.left = new.to_string();
            }
            if c.right == old {
                c.right = new.to_string();
            }
        }
        if self.root == old {
            self.root = new.to_string();
        }
        self.normalize_constraints();
        Ok(())
    }

    /// Overwrites an existing attribute. Attributes cannot be introduced
    /// this way.
    pub fn set_attribute(&mut self, name: &str, attribute: &str, value: Value) -> Result<(), ModelError> {
        let f = self
            .features
            .get_mut(name)
            .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))?;
        match f.attributes.get_mut(attribute) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(ModelError::UnknownAttribute {
                feature: name.to_string(),
                attribute: attribute.to_string(),
            }),
        }
    }

    /// The stored constraint with the same effect as `c`, if any.
    pub fn find_constraint(&self, c: &Constraint) -> Option<&Constraint> {
        self.constraints.iter().find(|s| s.same_effect(c))
    }

    /// Adds `c` unless a same-effect constraint is stored. Returns whether
    /// the model changed.
    pub fn add_constraint(&mut self, c: Constraint) -> Result<bool, ModelError> {
        self.require(&c.left)?;
        self.require(&c.right)?;
        if self.find_constraint(&c).is_some() {
            return Ok(false);
        }
        self.constraints.push(c);
        Ok(true)
    }

    /// Bulk variant of [`add_constraint`](Self::add_constraint). Either all
    /// endpoints exist and the new constraints are appended, or nothing
    /// changes. Returns the constraints that were actually added.
    pub fn add_constraints(
        &mut self,
        batch: impl IntoIterator<Item = Constraint>,
    ) -> Result<Vec<Constraint>, ModelError> {
        let batch: Vec<Constraint> = batch.into_iter().collect();
        for c in &batch {
            self.require(&c.left)?;
            self.require(&c.right)?;
        }
        let mut seen: HashSet<(String, ConstraintKind, String)> = self
            .constraints
            .iter()
            .map(owned_key)
            .collect();
        let mut added = Vec::new();
        for c in batch {
            if seen.insert(owned_key(&c)) {
                added.push(c.clone());
                self.constraints.push(c);
            }
        }
        Ok(added)
    }

    /// Removes the stored constraint with the same effect as `c`.
    pub fn remove_constraint(&mut self, c: &Constraint) -> bool {
        match self.constraints.iter().position(|s| s.same_effect(c)) {
            Some(i) => {
                self.constraints.remove(i);
                true
            }
            None => false,
        }
    }

    /// Collapses same-effect duplicates to their first stored representative.
    pub fn normalize_constraints(&mut self) {
        let mut seen = HashSet::new();
        self.constraints.retain(|c| seen.insert(owned_key(c)));
    }

    /// Every broken invariant; empty for a well-formed model.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, f) in &self.features {
            if key != &f.name {
                out.push(Violation::KeyMismatch {
                    key: key.clone(),
                    name: f.name.clone(),
                });
            }
            for attr in f.attributes.keys() {
                if !is_attribute_identifier(attr) {
                    out.push(Violation::InvalidAttributeName {
                        feature: f.name.clone(),
                        attribute: attr.clone(),
                    });
                }
            }
        }
        match self.features.get(self.root.as_str()) {
            None => out.push(Violation::MissingRoot(self.root.clone())),
            Some(r) => {
                if r.parent.is_some() {
                    out.push(Violation::RootHasParent(r.name.clone()));
                }
                if r.decomp.is_some() || r.group_id != 0 {
                    out.push(Violation::RootHasDecomposition(r.name.clone()));
                }
            }
        }
        let mut groups: HashMap<u32, (&str, Option<DecompKind>)> = HashMap::new();
        let mut max_group = 0;
        for f in self.features.values() {
            if f.name == self.root {
                continue;
            }
            match &f.parent {
                None => out.push(Violation::MissingParent(f.name.clone())),
                Some(p) if !self.features.contains_key(p) => out.push(Violation::UnknownParent {
                    feature: f.name.clone(),
                    parent: p.clone(),
                }),
                Some(_) => {
                    if !self.is_in_subtree(&self.root, &f.name) {
                        out.push(Violation::Cycle(f.name.clone()));
                    }
                }
            }
            match f.decomp {
                None => out.push(Violation::MissingDecomposition(f.name.clone())),
                Some(kind) if kind.is_group() != (f.group_id > 0) => {
                    out.push(Violation::GroupIdMismatch {
                        feature: f.name.clone(),
                        group_id: f.group_id,
                    })
                }
                Some(_) => {}
            }
            if f.group_id > 0 {
                max_group = max_group.max(f.group_id);
                let parent = f.parent.as_deref().unwrap_or("");
                match groups.get(&f.group_id) {
                    None => {
                        groups.insert(f.group_id, (parent, f.decomp));
                    }
                    Some(&(p, k)) => {
                        if p != parent || k != f.decomp {
                            out.push(Violation::InconsistentGroup {
                                group_id: f.group_id,
                                feature: f.name.clone(),
                            });
                        }
                    }
                }
            }
        }
        if max_group > 0 && self.next_group_id <= max_group {
            out.push(Violation::StaleGroupCounter {
                next: self.next_group_id,
                max: max_group,
            });
        }
        let mut seen = HashSet::new();
        for c in &self.constraints {
            if !self.features.contains_key(&c.left) || !self.features.contains_key(&c.right) {
                out.push(Violation::UnknownConstraintEndpoint(c.clone()));
            }
            if !seen.insert(c.effect_key()) {
                out.push(Violation::DuplicateConstraint(c.clone()));
            }
        }
        out
    }

    /// Structural equality up to declaration order, group-id labels, and
    /// constraint orientation/order within same-effect classes.
    pub fn is_isomorphic(&self, other: &FeatureModel) -> bool {
        if self.root != other.root || self.features.len() != other.features.len() {
            return false;
        }
        let mut forward: HashMap<u32, u32> = HashMap::new();
        let mut backward: HashMap<u32, u32> = HashMap::new();
        for a in self.features.values() {
            let Some(b) = other.features.get(&a.name) else {
                return false;
            };
            if a.parent != b.parent || a.decomp != b.decomp || a.attributes != b.attributes {
                return false;
            }
            if (a.group_id == 0) != (b.group_id == 0) {
                return false;
            }
            if a.group_id > 0
                && (*forward.entry(a.group_id).or_insert(b.group_id) != b.group_id
                    || *backward.entry(b.group_id).or_insert(a.group_id) != a.group_id)
            {
                return false;
            }
        }
        let mine: HashSet<_> = self.constraints.iter().map(Constraint::effect_key).collect();
        let theirs: HashSet<_> = other.constraints.iter().map(Constraint::effect_key).collect();
        mine == theirs
    }
}

fn owned_key(c: &Constraint) -> (String, ConstraintKind, String) {
    let (l, k, r) = c.effect_key();
    (l.to_string(), k, r.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureModel {
        let mut m = FeatureModel::new(Feature::new("R"));
        m.attach_feature(Feature::new("A"), "R", DecompKind::Mandatory, None).unwrap();
        m.attach_feature(Feature::new("B"), "R", DecompKind::Optional, None).unwrap();
        let g = m
            .attach_feature(Feature::new("A1"), "A", DecompKind::Alternative, None)
            .unwrap();
        m.attach_feature(Feature::new("A2"), "A", DecompKind::Alternative, Some(g))
            .unwrap();
        m.attach_feature(Feature::new("A21"), "A2", DecompKind::Optional, None)
            .unwrap();
        m.add_constraint(Constraint::requires("A21", "B")).unwrap();
        m.add_constraint(Constraint::excludes("A1", "B")).unwrap();
        m
    }

    #[test]
    fn subtree_of_leaf_and_root() {
        let m = small();
        assert_eq!(m.subtree("B").unwrap(), vec!["B"]);
        assert_eq!(m.subtree("R").unwrap().len(), m.len());
        assert_eq!(m.subtree("A").unwrap(), vec!["A", "A1", "A2", "A21"]);
        assert_eq!(
            m.subtree("nope"),
            Err(ModelError::UnknownFeature("nope".into()))
        );
    }

    #[test]
    fn involving_ctcs_filters_both_sides() {
        let m = small();
        assert_eq!(m.involving_ctcs("B").unwrap().len(), 2);
        assert_eq!(m.involving_ctcs("A").unwrap(), vec![]);
    }

    #[test]
    fn remove_subtree_takes_constraints_along() {
        let mut m = small();
        let r = m.remove_subtree("A2").unwrap();
        assert_eq!(r.features, vec!["A2", "A21"]);
        assert_eq!(r.constraints, vec![Constraint::requires("A21", "B")]);
        assert_eq!(m.len(), 4);
        assert!(m.validate().is_empty());
        assert_eq!(m.remove_subtree("R"), Err(ModelError::RootRemoval));
    }

    #[test]
    fn leaf_removal_without_constraints() {
        let mut m = small();
        m.attach_feature(Feature::new("C"), "R", DecompKind::Optional, None).unwrap();
        let before = m.constraints().to_vec();
        m.remove_subtree("C").unwrap();
        assert_eq!(m.constraints(), &before[..]);
    }

    #[test]
    fn attach_group_ids() {
        let mut m = small();
        let a1 = m.feature("A1").unwrap().group_id;
        assert!(a1 > 0);
        assert_eq!(m.feature("A2").unwrap().group_id, a1);
        assert_eq!(m.feature("A").unwrap().group_id, 0);
        let g = m.attach_feature(Feature::new("X"), "B", DecompKind::Or, None).unwrap();
        assert!(m.features().filter(|f| f.name != "X").all(|f| f.group_id != g));
        // joining an alternative group as or is a mismatch
        let err = m
            .attach_feature(Feature::new("Y"), "A", DecompKind::Or, Some(a1))
            .unwrap_err();
        assert!(matches!(err, ModelError::GroupMismatch { .. }));
        // joining from a different parent is a mismatch as well
        assert!(m
            .attach_feature(Feature::new("Y"), "B", DecompKind::Alternative, Some(a1))
            .is_err());
        assert_eq!(
            m.attach_feature(Feature::new("A"), "R", DecompKind::Optional, None),
            Err(ModelError::NameInUse("A".into()))
        );
        assert!(m.validate().is_empty());
    }

    #[test]
    fn group_ids_are_never_reused() {
        let mut m = small();
        let g = m.attach_feature(Feature::new("X"), "B", DecompKind::Or, None).unwrap();
        m.remove_subtree("X").unwrap();
        let h = m.attach_feature(Feature::new("Y"), "B", DecompKind::Or, None).unwrap();
        assert!(h > g);
    }

    #[test]
    fn move_rejects_cycles_and_root() {
        let mut m = small();
        let before = m.clone();
        assert!(matches!(
            m.move_feature("A", "A21", DecompKind::Optional, None),
            Err(ModelError::Cycle { .. })
        ));
        assert!(matches!(
            m.move_feature("A", "A", DecompKind::Optional, None),
            Err(ModelError::Cycle { .. })
        ));
        assert_eq!(
            m.move_feature("R", "A", DecompKind::Optional, None),
            Err(ModelError::RootMove)
        );
        assert_eq!(m, before);
    }

    #[test]
    fn move_carries_subtree_and_is_idempotent() {
        let mut m = small();
        m.move_feature("A2", "B", DecompKind::Optional, None).unwrap();
        assert_eq!(m.subtree("B").unwrap(), vec!["B", "A2", "A21"]);
        assert_eq!(m.feature("A2").unwrap().group_id, 0);
        let once = m.clone();
        m.move_feature("A2", "B", DecompKind::Optional, None).unwrap();
        assert_eq!(m, once);
        // staying in place keeps an existing group
        let g = m.feature("A1").unwrap().group_id;
        m.move_feature("A1", "A", DecompKind::Alternative, None).unwrap();
        assert_eq!(m.feature("A1").unwrap().group_id, g);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn normalize_collapses_symmetric_excludes_only() {
        let mut m = small();
        m.constraints_mut_unchecked().push(Constraint::excludes("B", "A1"));
        m.constraints_mut_unchecked().push(Constraint::requires("B", "A21"));
        assert!(!m.validate().is_empty());
        m.normalize_constraints();
        assert_eq!(m.constraints().len(), 3);
        assert!(m.validate().is_empty());
        let once = m.clone();
        m.normalize_constraints();
        assert_eq!(m, once);
    }

    #[test]
    fn validate_reports_two_cycle() {
        let mut m = small();
        m.feature_mut_unchecked("A").unwrap().parent = Some("A21".into());
        let v = m.validate();
        assert!(v.contains(&Violation::Cycle("A".into())), "{v:?}");
    }

    #[test]
    fn validate_reports_inconsistent_group() {
        let mut m = small();
        m.feature_mut_unchecked("A2").unwrap().parent = Some("B".into());
        let v = m.validate();
        assert!(
            v.iter().any(|x| matches!(x, Violation::InconsistentGroup { .. })),
            "{v:?}"
        );
    }

    #[test]
    fn rename_rewrites_links() {
        let mut m = small();
        m.rename_feature("A2", "Z").unwrap();
        assert_eq!(m.feature("A21").unwrap().parent.as_deref(), Some("Z"));
        assert!(m.constraints().iter().all(|c| !c.involves("A2")));
        assert_eq!(m.index_of("Z"), Some(4));
        assert!(m.validate().is_empty());
        assert_eq!(m.rename_feature("Z", "B"), Err(ModelError::NameInUse("B".into())));
    }

    #[test]
    fn real_formatting_keeps_fraction() {
        assert_eq!(format_real(3.0), "3.0");
        assert_eq!(format_real(14.75), "14.75");
        assert_eq!(format_real(1e20), "100000000000000000000.0");
        assert_eq!(format_real(-0.5), "-0.5");
    }
}
