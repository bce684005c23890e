//! Model construction from declarations, and serialization back to them.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Constraint, Feature, FeatureModel};

use super::ast::{Declarations, FeatureDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("missing root feature declaration")]
    MissingRoot,
    #[error("feature \"{0}\" is declared more than once")]
    DuplicateFeature(String),
    #[error("attribute \"{attribute}\" is declared more than once for feature \"{feature}\"")]
    DuplicateAttribute { feature: String, attribute: String },
    #[error("parent \"{parent}\" of feature \"{feature}\" is not declared")]
    UnknownParent { feature: String, parent: String },
    #[error("feature \"{0}\" is its own ancestor")]
    Cycle(String),
    #[error("sibling \"{sibling}\" of feature \"{feature}\" is not a declared non-root feature")]
    UnknownSibling { feature: String, sibling: String },
    #[error("features \"{feature}\" and \"{sibling}\" cannot share a group: they differ in parent or decomposition type")]
    InconsistentGroup { feature: String, sibling: String },
    #[error("constraint refers to undeclared feature \"{0}\"")]
    UnknownConstraintEndpoint(String),
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn attributes_of(
    name: &str,
    attrs: &[(String, crate::model::Value)],
) -> Result<indexmap::IndexMap<String, crate::model::Value>, BuildError> {
    let mut out = indexmap::IndexMap::new();
    for (k, v) in attrs {
        if out.insert(k.clone(), v.clone()).is_some() {
            return Err(BuildError::DuplicateAttribute {
                feature: name.to_string(),
                attribute: k.clone(),
            });
        }
    }
    Ok(out)
}

/// Builds the initial model. Declaration order does not matter; features
/// keep their declaration order and group ids are numbered from 1 in order
/// of each group's first declared member.
pub fn build_model(decls: &Declarations) -> Result<FeatureModel, BuildError> {
    let root = decls.root.as_ref().ok_or(BuildError::MissingRoot)?;
    let feats: &[FeatureDecl] = &decls.features;
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, f) in feats.iter().enumerate() {
        if f.name == root.name || index.insert(f.name.as_str(), i).is_some() {
            return Err(BuildError::DuplicateFeature(f.name.clone()));
        }
    }
    for f in feats {
        if f.parent != root.name && !index.contains_key(f.parent.as_str()) {
            return Err(BuildError::UnknownParent {
                feature: f.name.clone(),
                parent: f.parent.clone(),
            });
        }
    }
    for f in feats {
        let mut cur = f.parent.as_str();
        let mut steps = 0;
        while cur != root.name {
            if cur == f.name || steps > feats.len() {
                return Err(BuildError::Cycle(f.name.clone()));
            }
            cur = feats[index[cur]].parent.as_str();
            steps += 1;
        }
    }

    let mut uf = UnionFind((0..feats.len()).collect());
    for (i, f) in feats.iter().enumerate() {
        if let Some(s) = &f.group_sibling {
            let j = *index.get(s.as_str()).ok_or_else(|| BuildError::UnknownSibling {
                feature: f.name.clone(),
                sibling: s.clone(),
            })?;
            let other = &feats[j];
            if other.parent != f.parent || other.decomp != f.decomp {
                return Err(BuildError::InconsistentGroup {
                    feature: f.name.clone(),
                    sibling: s.clone(),
                });
            }
            uf.union(i, j);
        }
    }
    let mut group_of_class: HashMap<usize, u32> = HashMap::new();
    let mut features = Vec::with_capacity(feats.len() + 1);
    let mut r = Feature::new(root.name.clone());
    r.attributes = attributes_of(&root.name, &root.attributes)?;
    features.push(r);
    for (i, f) in feats.iter().enumerate() {
        let group_id = if f.decomp.is_group() {
            let class = uf.find(i);
            let next = group_of_class.len() as u32 + 1;
            *group_of_class.entry(class).or_insert(next)
        } else {
            0
        };
        features.push(Feature {
            name: f.name.clone(),
            parent: Some(f.parent.clone()),
            decomp: Some(f.decomp),
            group_id,
            attributes: attributes_of(&f.name, &f.attributes)?,
        });
    }

    let mut constraints = Vec::with_capacity(decls.constraints.len());
    for c in &decls.constraints {
        for end in [&c.left, &c.right] {
            if *end != root.name && !index.contains_key(end.as_str()) {
                return Err(BuildError::UnknownConstraintEndpoint(end.clone()));
            }
        }
        constraints.push(Constraint::new(c.left.clone(), c.kind, c.right.clone()));
    }
    let mut model = FeatureModel::from_parts_unchecked(root.name.clone(), features, constraints);
    model.normalize_constraints();
    debug_assert!(model.validate().is_empty(), "{:?}", model.validate());
    Ok(model)
}

fn attribute_lines(out: &mut String, f: &Feature) {
    for (k, v) in &f.attributes {
        let _ = write!(out, "\n  attribute {k} {v}");
    }
}

/// Renders `model` as Feather declarations: the root, the other features in
/// preorder, then the constraints.
pub fn serialize_declarations(model: &FeatureModel) -> String {
    let mut out = String::new();
    let order = model.preorder();
    let mut group_ref: HashMap<u32, Vec<&str>> = HashMap::new();
    for f in &order {
        if f.group_id > 0 {
            group_ref.entry(f.group_id).or_default().push(&f.name);
        }
    }
    for f in order {
        match (&f.parent, f.decomp) {
            (Some(parent), Some(kind)) => {
                let _ = write!(out, "feature \"{}\" \"{}\" {}", f.name, parent, kind.keyword());
                if kind.is_group() {
                    let members = &group_ref[&f.group_id];
                    let sibling = if members.len() == 1 {
                        members[0]
                    } else if members[0] == f.name {
                        members[1]
                    } else {
                        members[0]
                    };
                    let _ = write!(out, " to \"{sibling}\"");
                }
            }
            _ => {
                let _ = write!(out, "root \"{}\"", f.name);
            }
        }
        attribute_lines(&mut out, f);
        out.push_str(";\n");
    }
    for c in model.constraints() {
        let _ = writeln!(out, "constraint \"{}\" {} \"{}\";", c.left, c.kind.keyword(), c.right);
    }
    out
}
