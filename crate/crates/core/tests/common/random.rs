//! Seeded generators for models, where-clauses and commands.

use feather::expr::{AttrName, BinaryOp, Expr, Subject, UnaryOp};
use feather::model::{Constraint, ConstraintKind, DecompKind, Feature, FeatureModel, Value};
use feather::syntax::ast::{
    AttrAssign, AttrValue, Command, CommandKind, ConstraintDesc, ConstraintUpdate, DecompSetting, DecompValue,
    FeatureUpdate, NameDesc,
};
use rand::seq::SliceRandom;
use rand::Rng;

/// Attribute pool. `a`, `e` hold integers, `b` reals, `c` booleans, `d`
/// strings and `f` any of those, so equal names can carry clashing types.
pub const ATTRS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const STRINGS: [&str; 3] = ["x", "y", "z"];
pub const VARS: [&str; 3] = ["X", "Y", "Z"];

fn value_for<R: Rng>(rng: &mut R, attr: &str) -> Value {
    let pick = match attr {
        "a" | "e" => 0,
        "b" => 1,
        "c" => 2,
        "d" => 3,
        _ => rng.gen_range(0..4),
    };
    match pick {
        0 => Value::Int(rng.gen_range(-3..=10)),
        1 => Value::Real(f64::from(rng.gen_range(-8..=40)) / 4.0),
        2 => Value::Bool(rng.gen()),
        _ => Value::Str(STRINGS.choose(rng).unwrap().to_string()),
    }
}

pub struct ModelShape {
    pub max_features: usize,
    pub max_attrs: usize,
    /// Prefix of every feature name; the root is `<prefix>0`.
    pub prefix: &'static str,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            max_features: 30,
            max_attrs: 6,
            prefix: "F",
        }
    }
}

/// A random well-formed model: random parents, kinds and groups, up to
/// `max_attrs` attributes per feature and a handful of constraints.
pub fn model<R: Rng>(rng: &mut R, shape: &ModelShape) -> FeatureModel {
    let n = rng.gen_range(1..=shape.max_features);
    let attrs = |rng: &mut R, f: Feature| {
        let k = rng.gen_range(0..=shape.max_attrs.min(ATTRS.len()));
        ATTRS
            .choose_multiple(rng, k)
            .fold(f, |f, a| {
                let v = value_for(rng, a);
                f.with_attribute(*a, v)
            })
    };
    let root = attrs(rng, Feature::new(format!("{}0", shape.prefix)));
    let mut m = FeatureModel::new(root);
    // (parent, kind, group id) of every group opened so far
    let mut groups: Vec<(usize, DecompKind, u32)> = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let kind = *DecompKind::ALL.choose(rng).unwrap();
        let join = if kind.is_group() && rng.gen_bool(0.6) {
            groups
                .iter()
                .filter(|(p, k, _)| *p == parent && *k == kind)
                .map(|g| g.2)
                .collect::<Vec<_>>()
                .choose(rng)
                .copied()
        } else {
            None
        };
        let f = attrs(rng, Feature::new(format!("{}{i}", shape.prefix)));
        let parent_name = format!("{}{parent}", shape.prefix);
        let g = m.attach_feature(f, &parent_name, kind, join).expect("generated attach");
        if kind.is_group() && join.is_none() {
            groups.push((parent, kind, g));
        }
    }
    if n > 1 {
        for _ in 0..rng.gen_range(0..=n / 2) {
            let l = rng.gen_range(0..n);
            let r = rng.gen_range(0..n);
            if l != r {
                let kind = if rng.gen() { ConstraintKind::Requires } else { ConstraintKind::Excludes };
                let c = Constraint::new(format!("{}{l}", shape.prefix), kind, format!("{}{r}", shape.prefix));
                m.add_constraint(c).expect("generated constraint");
            }
        }
    }
    m
}

/// Draws expressions over a fixed model's feature names.
pub struct ExprGen<'a> {
    pub names: Vec<String>,
    pub vars: &'a [&'a str],
}

impl<'a> ExprGen<'a> {
    pub fn new(model: &FeatureModel, vars: &'a [&'a str]) -> Self {
        ExprGen {
            names: model.features().map(|f| f.name.clone()).collect(),
            vars,
        }
    }

    pub fn subject<R: Rng>(&self, rng: &mut R) -> Subject {
        if self.vars.is_empty() || rng.gen_bool(0.15) {
            Subject::Feature(self.literal_name(rng))
        } else {
            Subject::Var(self.vars.choose(rng).unwrap().to_string())
        }
    }

    /// An existing name most of the time, sometimes one that is absent.
    pub fn literal_name<R: Rng>(&self, rng: &mut R) -> String {
        if rng.gen_bool(0.05) {
            "Nowhere".to_string()
        } else {
            self.names.choose(rng).unwrap().clone()
        }
    }

    fn term<R: Rng>(&self, rng: &mut R, attr: AttrName) -> Expr {
        Expr::Term {
            subject: self.subject(rng),
            attr,
        }
    }

    fn user_attr<R: Rng>(&self, rng: &mut R, pool: &[&str]) -> AttrName {
        if rng.gen_bool(0.05) {
            AttrName::User("g".to_string())
        } else {
            AttrName::User(pool.choose(rng).unwrap().to_string())
        }
    }

    pub fn numeric<R: Rng>(&self, rng: &mut R, depth: u32) -> Expr {
        if depth == 0 || rng.gen_bool(0.5) {
            return match rng.gen_range(0..6) {
                0 => Expr::int(rng.gen_range(-2..=8)),
                1 => Expr::real(f64::from(rng.gen_range(-4..=20)) / 2.0),
                // occasionally a string or boolean, to exercise type errors
                2 if rng.gen_bool(0.2) => {
                    let a = self.user_attr(rng, &["c", "d"]);
                    self.term(rng, a)
                }
                _ => {
                    let a = self.user_attr(rng, &["a", "b", "e", "f"]);
                    self.term(rng, a)
                }
            };
        }
        if rng.gen_bool(0.15) {
            return Expr::unary(UnaryOp::Neg, self.numeric(rng, depth - 1));
        }
        let op = *[BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Rem]
            .choose(rng)
            .unwrap();
        Expr::binary(op, self.numeric(rng, depth - 1), self.numeric(rng, depth - 1))
    }

    fn atom<R: Rng>(&self, rng: &mut R) -> Expr {
        match rng.gen_range(0..9) {
            0..=2 => {
                let op = *[BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne]
                    .choose(rng)
                    .unwrap();
                Expr::binary(op, self.numeric(rng, 2), self.numeric(rng, 1))
            }
            3 => {
                let a = self.user_attr(rng, &["d", "f"]);
                let l = self.term(rng, a);
                let r = if rng.gen() {
                    Expr::string(*STRINGS.choose(rng).unwrap())
                } else {
                    let a = self.user_attr(rng, &["d", "f"]);
                    self.term(rng, a)
                };
                Expr::binary(if rng.gen() { BinaryOp::Eq } else { BinaryOp::Ne }, l, r)
            }
            4 => {
                let a = self.user_attr(rng, &["c", "f"]);
                let t = self.term(rng, a);
                if rng.gen() {
                    t
                } else {
                    Expr::binary(BinaryOp::Eq, t, Expr::boolean(rng.gen()))
                }
            }
            5 => {
                let l = self.term(rng, AttrName::Decomp);
                let r = if rng.gen() {
                    Expr::decomp(*DecompKind::ALL.choose(rng).unwrap())
                } else {
                    self.term(rng, AttrName::Decomp)
                };
                Expr::binary(if rng.gen() { BinaryOp::Eq } else { BinaryOp::Ne }, l, r)
            }
            6 => Expr::binary(
                if rng.gen() { BinaryOp::Eq } else { BinaryOp::Ne },
                self.term(rng, AttrName::DecompId),
                self.term(rng, AttrName::DecompId),
            ),
            7 => Expr::binary(
                BinaryOp::Eq,
                self.term(rng, AttrName::Parent),
                self.term(rng, AttrName::Name),
            ),
            _ => Expr::binary(
                if rng.gen_bool(0.8) { BinaryOp::Eq } else { BinaryOp::Ne },
                self.term(rng, AttrName::Name),
                Expr::string(self.literal_name(rng)),
            ),
        }
    }

    pub fn condition<R: Rng>(&self, rng: &mut R, depth: u32) -> Expr {
        if depth == 0 || rng.gen_bool(0.35) {
            return self.atom(rng);
        }
        match rng.gen_range(0..5) {
            0 | 1 => Expr::and(self.condition(rng, depth - 1), self.condition(rng, depth - 1)),
            2 | 3 => Expr::or(self.condition(rng, depth - 1), self.condition(rng, depth - 1)),
            _ => Expr::unary(UnaryOp::Not, self.condition(rng, depth - 1)),
        }
    }

    fn name_desc<R: Rng>(&self, rng: &mut R) -> NameDesc {
        match self.subject(rng) {
            Subject::Feature(n) => NameDesc::Literal(n),
            Subject::Var(v) => NameDesc::VarName(v),
        }
    }

    fn decomp<R: Rng>(&self, rng: &mut R) -> DecompSetting {
        let value = if rng.gen_bool(0.2) {
            DecompValue::Of(self.subject(rng))
        } else {
            DecompValue::Kind(*DecompKind::ALL.choose(rng).unwrap())
        };
        let grouped = match &value {
            DecompValue::Kind(k) => k.is_group(),
            DecompValue::Of(_) => true,
        };
        let sibling = (grouped && rng.gen_bool(0.5)).then(|| self.subject(rng));
        DecompSetting { value, sibling }
    }

    fn attr_assign<R: Rng>(&self, rng: &mut R, name: &str) -> AttrAssign {
        let value = match rng.gen_range(0..4) {
            0 => AttrValue::Numeric(self.numeric(rng, 2)),
            1 => AttrValue::Boolean(self.condition(rng, 1)),
            2 => AttrValue::Str(STRINGS.choose(rng).unwrap().to_string()),
            _ => AttrValue::Inherited(self.subject(rng), ATTRS.choose(rng).unwrap().to_string()),
        };
        AttrAssign {
            name: name.to_string(),
            value,
        }
    }

    fn feature_updates<R: Rng>(&self, rng: &mut R, allow_name: bool, fresh: &str) -> Vec<FeatureUpdate> {
        let mut parts: Vec<usize> = vec![1, 2, 3, 4];
        if allow_name {
            parts.push(0);
        }
        parts.shuffle(rng);
        parts.truncate(rng.gen_range(1..=3));
        parts
            .into_iter()
            .map(|p| match p {
                0 => FeatureUpdate::Name(if rng.gen() { fresh.to_string() } else { self.literal_name(rng) }),
                1 => FeatureUpdate::Parent(self.name_desc(rng)),
                2 => FeatureUpdate::Decomp(self.decomp(rng)),
                3 => {
                    let a = ATTRS[rng.gen_range(0..3)];
                    FeatureUpdate::Attr(self.attr_assign(rng, a))
                }
                _ => {
                    let a = ATTRS[rng.gen_range(3..6)];
                    FeatureUpdate::Attr(self.attr_assign(rng, a))
                }
            })
            .collect()
    }

    fn constraint_desc<R: Rng>(&self, rng: &mut R) -> ConstraintDesc {
        ConstraintDesc {
            left: self.subject(rng),
            kind: if rng.gen() { ConstraintKind::Requires } else { ConstraintKind::Excludes },
            right: self.subject(rng),
        }
    }

    fn constraint_updates<R: Rng>(&self, rng: &mut R, max: usize) -> Vec<ConstraintUpdate> {
        let mut parts = vec![0, 1, 2];
        parts.shuffle(rng);
        parts.truncate(rng.gen_range(1..=max));
        parts
            .into_iter()
            .map(|p| match p {
                0 => ConstraintUpdate::Left(self.name_desc(rng)),
                1 => ConstraintUpdate::Kind(if rng.gen() { ConstraintKind::Requires } else { ConstraintKind::Excludes }),
                _ => ConstraintUpdate::Right(self.name_desc(rng)),
            })
            .collect()
    }

    /// Any of the ten command kinds with random descriptors, slots and an
    /// optional where-clause. `fresh` is a name not used in the model.
    pub fn command<R: Rng>(&self, rng: &mut R, fresh: &str) -> Command {
        let var = || self.vars[0].to_string();
        let kind = match rng.gen_range(0..10) {
            0 => {
                let mut attributes = Vec::new();
                let k = rng.gen_range(0..=2);
                let names: Vec<&str> = ATTRS.choose_multiple(rng, k).copied().collect();
                for a in names {
                    attributes.push(self.attr_assign(rng, a));
                }
                CommandKind::AddFeature {
                    name: if rng.gen_bool(0.85) { fresh.to_string() } else { self.literal_name(rng) },
                    parent: self.name_desc(rng),
                    decomp: self.decomp(rng),
                    attributes,
                }
            }
            1 => CommandKind::UpdateFeature {
                target: self.subject(rng),
                updates: self.feature_updates(rng, true, fresh),
            },
            2 => CommandKind::UpdateAllFeatures {
                var: var(),
                updates: self.feature_updates(rng, false, fresh),
            },
            3 => CommandKind::RemoveFeature {
                target: self.subject(rng),
            },
            4 => CommandKind::RemoveAllFeatures { var: var() },
            5 => CommandKind::AddConstraint {
                desc: self.constraint_desc(rng),
            },
            6 => CommandKind::UpdateConstraint {
                desc: self.constraint_desc(rng),
                updates: self.constraint_updates(rng, 3),
            },
            7 => CommandKind::UpdateAllConstraints {
                desc: self.constraint_desc(rng),
                updates: self.constraint_updates(rng, 2),
            },
            8 => CommandKind::RemoveConstraint {
                desc: self.constraint_desc(rng),
            },
            _ => CommandKind::RemoveAllConstraints {
                desc: self.constraint_desc(rng),
            },
        };
        let where_clause = rng.gen_bool(0.8).then(|| self.condition(rng, 2));
        Command::new(kind, where_clause)
    }
}

/// A model every TVL construct can carry: identifier names and attribute
/// values the TVL subset accepts.
pub fn tvl_model<R: Rng>(rng: &mut R) -> FeatureModel {
    let mut m = model(
        rng,
        &ModelShape {
            max_features: 25,
            max_attrs: 4,
            prefix: "N",
        },
    );
    m.normalize_constraints();
    m
}
