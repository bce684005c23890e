//! Expressions over attribute values: AST, dynamic type checking and
//! evaluation against a model plus a variable binding.
//!
//! Operators follow C precedence and semantics except `/`, which is always
//! real division. `%` is integer-only. `and`/`or` evaluate both operands and
//! require both to be well typed.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{format_real, DecompKind, Feature, FeatureModel, Value, ValueType};

/// The feature a term or descriptor refers to: a literal name or a feature
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Subject {
    Feature(String),
    Var(String),
}

impl Subject {
    pub fn var(&self) -> Option<&str> {
        match self {
            Subject::Var(v) => Some(v),
            Subject::Feature(_) => None,
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Feature(n) => write!(f, "\"{n}\""),
            Subject::Var(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AttrName {
    Name,
    Parent,
    Decomp,
    DecompId,
    User(String),
}

impl AttrName {
    pub fn is_structural(&self) -> bool {
        !matches!(self, AttrName::User(_))
    }

    /// Fixed type of a structural attribute.
    pub fn structural_type(&self) -> Option<Type> {
        match self {
            AttrName::Name | AttrName::Parent => Some(Type::String),
            AttrName::Decomp => Some(Type::Decomp),
            AttrName::DecompId => Some(Type::GroupId),
            AttrName::User(_) => None,
        }
    }
}

impl fmt::Display for AttrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrName::Name => f.write_str("_name"),
            AttrName::Parent => f.write_str("_parent"),
            AttrName::Decomp => f.write_str("_decomp"),
            AttrName::DecompId => f.write_str("_decompID"),
            AttrName::User(a) => f.write_str(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Value(Value),
    Decomp(DecompKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "<>",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    /// C binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Term { subject: Subject, attr: AttrName },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(i: i64) -> Expr {
        Expr::Lit(Literal::Value(Value::Int(i)))
    }

    pub fn real(r: f64) -> Expr {
        Expr::Lit(Literal::Value(Value::Real(r)))
    }

    pub fn boolean(b: bool) -> Expr {
        Expr::Lit(Literal::Value(Value::Bool(b)))
    }

    pub fn string(s: impl Into<String>) -> Expr {
        Expr::Lit(Literal::Value(Value::Str(s.into())))
    }

    pub fn decomp(k: DecompKind) -> Expr {
        Expr::Lit(Literal::Decomp(k))
    }

    pub fn var_attr(var: impl Into<String>, attr: AttrName) -> Expr {
        Expr::Term {
            subject: Subject::Var(var.into()),
            attr,
        }
    }

    pub fn feature_attr(feature: impl Into<String>, attr: AttrName) -> Expr {
        Expr::Term {
            subject: Subject::Feature(feature.into()),
            attr,
        }
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::And, l, r)
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::binary(BinaryOp::Or, l, r)
    }

    /// Feature variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    pub(crate) fn collect_variables(&self, out: &mut Vec<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Term { subject, .. } => {
                if let Subject::Var(v) = subject {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
            Expr::Unary(_, e) => e.collect_variables(out),
            Expr::Binary(_, l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }

    /// Splits a chain of top-level `and`s into its operands.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Binary(BinaryOp::And, l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Space-separated postfix rendering, used by the intermediate dump.
    pub fn postfix(&self) -> String {
        let mut out = Vec::new();
        self.postfix_into(&mut out);
        out.join(" ")
    }

    fn postfix_into(&self, out: &mut Vec<String>) {
        match self {
            Expr::Lit(Literal::Value(v)) => out.push(v.to_string()),
            Expr::Lit(Literal::Decomp(k)) => out.push(format!("decomp:{k}")),
            Expr::Term { subject, attr } => out.push(format!("{subject}.{attr}")),
            Expr::Unary(op, e) => {
                e.postfix_into(out);
                out.push(
                    match op {
                        UnaryOp::Neg => "neg",
                        UnaryOp::Not => "not",
                    }
                    .to_string(),
                );
            }
            Expr::Binary(op, l, r) => {
                l.postfix_into(out);
                r.postfix_into(out);
                out.push(op.symbol().to_string());
            }
        }
    }
}

/// Fully parenthesized infix rendering.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(Literal::Value(v)) => write!(f, "{v}"),
            Expr::Lit(Literal::Decomp(k)) => write!(f, "{k}"),
            Expr::Term { subject, attr } => write!(f, "{subject}.{attr}"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Expr::Unary(UnaryOp::Not, e) => write!(f, "(not {e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// Static type of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Integer,
    Real,
    Boolean,
    String,
    Decomp,
    /// `_decompID`; only comparable for equality with another group id.
    GroupId,
}

impl Type {
    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Integer | Type::Real)
    }
}

impl From<ValueType> for Type {
    fn from(t: ValueType) -> Self {
        match t {
            ValueType::Integer => Type::Integer,
            ValueType::Real => Type::Real,
            ValueType::Boolean => Type::Boolean,
            ValueType::String => Type::String,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Integer => "integer",
            Type::Real => "real",
            Type::Boolean => "boolean",
            Type::String => "string",
            Type::Decomp => "decomposition",
            Type::GroupId => "decomposition id",
        })
    }
}

/// The result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluated {
    Value(Value),
    Decomp(DecompKind),
    GroupId(u32),
}

impl Evaluated {
    pub fn into_value(self) -> Option<Value> {
        match self {
            Evaluated::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Evaluated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Evaluated::Value(v) => write!(f, "{v}"),
            Evaluated::Decomp(k) => write!(f, "{k}"),
            Evaluated::GroupId(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("feature \"{0}\" does not exist")]
    UnknownFeature(String),
    #[error("feature variable {0} is not bound")]
    UnboundVariable(String),
    #[error("feature \"{feature}\" does not have an attribute named \"{attribute}\"")]
    MissingAttribute { feature: String, attribute: String },
    #[error("the root feature \"{feature}\" has no {attribute}")]
    RootStructural { feature: String, attribute: String },
    #[error("operator {op} cannot be applied to {operands}")]
    TypeMismatch { op: String, operands: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("arithmetic result is not a finite number")]
    NonFinite,
}

impl EvalError {
    /// Static type errors, as opposed to failures only visible on values.
    pub fn is_type_error(&self) -> bool {
        !matches!(
            self,
            EvalError::DivisionByZero | EvalError::Overflow | EvalError::NonFinite
        )
    }
}

/// Source of feature variable bindings.
pub trait VarEnv {
    fn lookup<'m>(&self, model: &'m FeatureModel, var: &str) -> Option<&'m Feature>;
}

/// Feature variable name → concrete feature name.
pub type Binding = IndexMap<String, String>;

impl VarEnv for Binding {
    fn lookup<'m>(&self, model: &'m FeatureModel, var: &str) -> Option<&'m Feature> {
        self.get(var).and_then(|n| model.feature(n))
    }
}

/// Binds nothing.
pub struct NoVars;

impl VarEnv for NoVars {
    fn lookup<'m>(&self, _: &'m FeatureModel, _: &str) -> Option<&'m Feature> {
        None
    }
}

fn subject_feature<'m, E: VarEnv + ?Sized>(
    subject: &Subject,
    model: &'m FeatureModel,
    env: &E,
) -> Result<&'m Feature, EvalError> {
    match subject {
        Subject::Feature(n) => model
            .feature(n)
            .ok_or_else(|| EvalError::UnknownFeature(n.clone())),
        Subject::Var(v) => env
            .lookup(model, v)
            .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
    }
}

fn read_term(feature: &Feature, attr: &AttrName) -> Result<Evaluated, EvalError> {
    let root_err = || EvalError::RootStructural {
        feature: feature.name.clone(),
        attribute: attr.to_string(),
    };
    Ok(match attr {
        AttrName::Name => Evaluated::Value(Value::Str(feature.name.clone())),
        AttrName::Parent => Evaluated::Value(Value::Str(feature.parent.clone().unwrap_or_default())),
        AttrName::Decomp => Evaluated::Decomp(feature.decomp.ok_or_else(root_err)?),
        AttrName::DecompId => {
            if feature.is_root() {
                return Err(root_err());
            }
            Evaluated::GroupId(feature.group_id)
        }
        AttrName::User(a) => Evaluated::Value(feature.attribute(a).cloned().ok_or_else(|| {
            EvalError::MissingAttribute {
                feature: feature.name.clone(),
                attribute: a.clone(),
            }
        })?),
    })
}

fn term_type(feature: &Feature, attr: &AttrName) -> Result<Type, EvalError> {
    match attr {
        AttrName::User(a) => feature
            .attribute(a)
            .map(|v| v.value_type().into())
            .ok_or_else(|| EvalError::MissingAttribute {
                feature: feature.name.clone(),
                attribute: a.clone(),
            }),
        AttrName::Decomp | AttrName::DecompId if feature.is_root() => {
            Err(EvalError::RootStructural {
                feature: feature.name.clone(),
                attribute: attr.to_string(),
            })
        }
        other => Ok(other.structural_type().expect("structural")),
    }
}

fn mismatch(op: &str, types: &[Option<Type>]) -> EvalError {
    let operands = types
        .iter()
        .map(|t| t.map_or("unknown".to_string(), |t| t.to_string()))
        .collect::<Vec<_>>()
        .join(" and ");
    EvalError::TypeMismatch {
        op: op.to_string(),
        operands,
    }
}

/// Type inference where `None` stands for a not-yet-known type (an unbound
/// variable term under [`typecheck_open`]).
fn infer<E: VarEnv + ?Sized>(
    expr: &Expr,
    model: &FeatureModel,
    env: &E,
    open: bool,
) -> Result<Option<Type>, EvalError> {
    match expr {
        Expr::Lit(Literal::Value(v)) => Ok(Some(v.value_type().into())),
        Expr::Lit(Literal::Decomp(_)) => Ok(Some(Type::Decomp)),
        Expr::Term { subject, attr } => {
            if open {
                if let Subject::Var(_) = subject {
                    return Ok(attr.structural_type());
                }
            }
            let f = subject_feature(subject, model, env)?;
            term_type(f, attr).map(Some)
        }
        Expr::Unary(op, e) => {
            let t = infer(e, model, env, open)?;
            match op {
                UnaryOp::Neg => match t {
                    None => Ok(None),
                    Some(t) if t.is_numeric() => Ok(Some(t)),
                    _ => Err(mismatch("-", &[t])),
                },
                UnaryOp::Not => match t {
                    None | Some(Type::Boolean) => Ok(Some(Type::Boolean)),
                    _ => Err(mismatch("not", &[t])),
                },
            }
        }
        Expr::Binary(op, l, r) => {
            let lt = infer(l, model, env, open)?;
            let rt = infer(r, model, env, open)?;
            binary_type(*op, lt, rt)
        }
    }
}

fn binary_type(op: BinaryOp, lt: Option<Type>, rt: Option<Type>) -> Result<Option<Type>, EvalError> {
    let numeric = |t: Option<Type>| t.is_none_or(Type::is_numeric);
    let err = || mismatch(op.symbol(), &[lt, rt]);
    match op {
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul => {
            if !numeric(lt) || !numeric(rt) {
                return Err(err());
            }
            Ok(match (lt, rt) {
                (Some(Type::Integer), Some(Type::Integer)) => Some(Type::Integer),
                (Some(Type::Real), _) | (_, Some(Type::Real)) => Some(Type::Real),
                _ => None,
            })
        }
        BinaryOp::Div => {
            if !numeric(lt) || !numeric(rt) {
                return Err(err());
            }
            Ok(Some(Type::Real))
        }
        BinaryOp::Rem => {
            let int = |t: Option<Type>| t.is_none_or(|t| t == Type::Integer);
            if !int(lt) || !int(rt) {
                return Err(err());
            }
            Ok(Some(Type::Integer))
        }
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
            if !numeric(lt) || !numeric(rt) {
                return Err(err());
            }
            Ok(Some(Type::Boolean))
        }
        BinaryOp::Eq | BinaryOp::Ne => match (lt, rt) {
            (Some(a), Some(b)) if a == b || (a.is_numeric() && b.is_numeric()) => {
                Ok(Some(Type::Boolean))
            }
            (Some(_), Some(_)) => Err(err()),
            _ => Ok(Some(Type::Boolean)),
        },
        BinaryOp::And | BinaryOp::Or => {
            let boolean = |t: Option<Type>| t.is_none_or(|t| t == Type::Boolean);
            if !boolean(lt) || !boolean(rt) {
                return Err(err());
            }
            Ok(Some(Type::Boolean))
        }
    }
}

/// Type of `expr` under `model` and `env`. Every variable must be bound.
pub fn typecheck<E: VarEnv + ?Sized>(
    expr: &Expr,
    model: &FeatureModel,
    env: &E,
) -> Result<Type, EvalError> {
    infer(expr, model, env, false)?.ok_or_else(|| {
        // only reachable if a variable slipped through unbound
        EvalError::UnboundVariable(expr.variables().join(", "))
    })
}

/// Checks everything that does not depend on variable bindings: literal
/// feature terms must exist and carry the attribute, and operators must
/// accept every operand whose type is already known. Returns the type if it
/// is determined without bindings.
pub fn typecheck_open(expr: &Expr, model: &FeatureModel) -> Result<Option<Type>, EvalError> {
    infer(expr, model, &NoVars, true)
}

fn as_value(e: Evaluated, op: &str) -> Result<Value, EvalError> {
    match e {
        Evaluated::Value(v) => Ok(v),
        Evaluated::Decomp(_) => Err(mismatch(op, &[Some(Type::Decomp)])),
        Evaluated::GroupId(_) => Err(mismatch(op, &[Some(Type::GroupId)])),
    }
}

fn finite(r: f64) -> Result<Value, EvalError> {
    if r.is_finite() {
        Ok(Value::Real(r))
    } else {
        Err(EvalError::NonFinite)
    }
}

fn arith(op: BinaryOp, a: Value, b: Value) -> Result<Value, EvalError> {
    let err = || mismatch(op.symbol(), &[Some(a.value_type().into()), Some(b.value_type().into())]);
    if op == BinaryOp::Rem {
        return match (&a, &b) {
            (Value::Int(_), Value::Int(0)) => Err(EvalError::DivisionByZero),
            (Value::Int(x), Value::Int(y)) => x.checked_rem(*y).map(Value::Int).ok_or(EvalError::Overflow),
            _ => Err(err()),
        };
    }
    if op == BinaryOp::Div {
        let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
            return Err(err());
        };
        if y == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return finite(x / y);
    }
    match (&a, &b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinaryOp::Add => x.checked_add(*y),
                BinaryOp::Sub => x.checked_sub(*y),
                BinaryOp::Mul => x.checked_mul(*y),
                _ => unreachable!("arith called with {op:?}"),
            };
            r.map(Value::Int).ok_or(EvalError::Overflow)
        }
        _ => {
            let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
                return Err(err());
            };
            finite(match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                _ => unreachable!("arith called with {op:?}"),
            })
        }
    }
}

fn equal(op: BinaryOp, a: &Evaluated, b: &Evaluated) -> Result<bool, EvalError> {
    use Evaluated as E;
    let eq = match (a, b) {
        (E::Value(Value::Int(x)), E::Value(Value::Int(y))) => x == y,
        (E::Value(x), E::Value(y)) if x.is_numeric() && y.is_numeric() => {
            x.as_f64() == y.as_f64()
        }
        (E::Value(Value::Bool(x)), E::Value(Value::Bool(y))) => x == y,
        (E::Value(Value::Str(x)), E::Value(Value::Str(y))) => x == y,
        (E::Decomp(x), E::Decomp(y)) => x == y,
        (E::GroupId(x), E::GroupId(y)) => x == y,
        _ => {
            return Err(mismatch(op.symbol(), &[Some(evaluated_type(a)), Some(evaluated_type(b))]));
        }
    };
    Ok(eq)
}

fn evaluated_type(e: &Evaluated) -> Type {
    match e {
        Evaluated::Value(v) => v.value_type().into(),
        Evaluated::Decomp(_) => Type::Decomp,
        Evaluated::GroupId(_) => Type::GroupId,
    }
}

/// Evaluates `expr`. Type errors are reported the same way `typecheck`
/// would report them; division or modulo by zero, integer overflow and
/// non-finite reals are dynamic errors.
pub fn evaluate<E: VarEnv + ?Sized>(
    expr: &Expr,
    model: &FeatureModel,
    env: &E,
) -> Result<Evaluated, EvalError> {
    match expr {
        Expr::Lit(Literal::Value(v)) => Ok(Evaluated::Value(v.clone())),
        Expr::Lit(Literal::Decomp(k)) => Ok(Evaluated::Decomp(*k)),
        Expr::Term { subject, attr } => read_term(subject_feature(subject, model, env)?, attr),
        Expr::Unary(UnaryOp::Neg, e) => match as_value(evaluate(e, model, env)?, "-")? {
            Value::Int(i) => i.checked_neg().map(|i| Evaluated::Value(Value::Int(i))).ok_or(EvalError::Overflow),
            Value::Real(r) => Ok(Evaluated::Value(Value::Real(-r))),
            other => Err(mismatch("-", &[Some(other.value_type().into())])),
        },
        Expr::Unary(UnaryOp::Not, e) => match as_value(evaluate(e, model, env)?, "not")? {
            Value::Bool(b) => Ok(Evaluated::Value(Value::Bool(!b))),
            other => Err(mismatch("not", &[Some(other.value_type().into())])),
        },
        Expr::Binary(op, l, r) => {
            let a = evaluate(l, model, env)?;
            let b = evaluate(r, model, env)?;
            let op = *op;
            let result = match op {
                BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => {
                    arith(op, as_value(a, op.symbol())?, as_value(b, op.symbol())?)?
                }
                BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                    let (a, b) = (as_value(a, op.symbol())?, as_value(b, op.symbol())?);
                    let ord = match (&a, &b) {
                        (Value::Int(x), Value::Int(y)) => x.partial_cmp(y),
                        _ => match (a.as_f64(), b.as_f64()) {
                            (Some(x), Some(y)) => x.partial_cmp(&y),
                            _ => None,
                        },
                    };
                    let ord = ord.ok_or_else(|| {
                        mismatch(op.symbol(), &[Some(a.value_type().into()), Some(b.value_type().into())])
                    })?;
                    Value::Bool(match op {
                        BinaryOp::Lt => ord.is_lt(),
                        BinaryOp::Le => ord.is_le(),
                        BinaryOp::Gt => ord.is_gt(),
                        _ => ord.is_ge(),
                    })
                }
                BinaryOp::Eq => Value::Bool(equal(op, &a, &b)?),
                BinaryOp::Ne => Value::Bool(!equal(op, &a, &b)?),
                BinaryOp::And | BinaryOp::Or => {
                    match (as_value(a, op.symbol())?, as_value(b, op.symbol())?) {
                        (Value::Bool(x), Value::Bool(y)) => {
                            Value::Bool(if op == BinaryOp::And { x && y } else { x || y })
                        }
                        (x, y) => {
                            return Err(mismatch(
                                op.symbol(),
                                &[Some(x.value_type().into()), Some(y.value_type().into())],
                            ))
                        }
                    }
                }
            };
            Ok(Evaluated::Value(result))
        }
    }
}

/// Evaluates a condition: typechecks to boolean and yields its value.
pub fn evaluate_condition<E: VarEnv + ?Sized>(
    expr: &Expr,
    model: &FeatureModel,
    env: &E,
) -> Result<bool, EvalError> {
    match typecheck(expr, model, env)? {
        Type::Boolean => {}
        t => {
            return Err(EvalError::TypeMismatch {
                op: "where".to_string(),
                operands: t.to_string(),
            })
        }
    }
    match evaluate(expr, model, env)? {
        Evaluated::Value(Value::Bool(b)) => Ok(b),
        other => Err(mismatch("where", &[Some(evaluated_type(&other))])),
    }
}

/// Type a variable-attribute occurrence must have in its context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UsageType {
    Numeric,
    Integer,
    Boolean,
    String,
    Decomp,
    GroupId,
    /// Any type: bare equality between two terms whose types come from the
    /// model, or an attribute that only has to exist.
    Any,
}

impl UsageType {
    /// Whether a stored attribute value can fill this usage.
    pub fn accepts(self, v: &Value) -> bool {
        match self {
            UsageType::Numeric => v.is_numeric(),
            UsageType::Integer => matches!(v, Value::Int(_)),
            UsageType::Boolean => matches!(v, Value::Bool(_)),
            UsageType::String => matches!(v, Value::Str(_)),
            UsageType::Decomp | UsageType::GroupId => false,
            UsageType::Any => true,
        }
    }

    fn from_type(t: Type) -> UsageType {
        match t {
            Type::Integer | Type::Real => UsageType::Numeric,
            Type::Boolean => UsageType::Boolean,
            Type::String => UsageType::String,
            Type::Decomp => UsageType::Decomp,
            Type::GroupId => UsageType::GroupId,
        }
    }
}

/// One `V.attr` occurrence and the type its context demands.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Usage {
    pub attr: AttrName,
    pub ty: UsageType,
}

/// Per-variable attribute usages, variables in order of first appearance.
pub type Usages = IndexMap<String, Vec<Usage>>;

/// Type an expression has regardless of the model, if any.
fn static_usage(expr: &Expr) -> Option<UsageType> {
    match expr {
        Expr::Lit(Literal::Value(v)) => Some(UsageType::from_type(v.value_type().into())),
        Expr::Lit(Literal::Decomp(_)) => Some(UsageType::Decomp),
        Expr::Term { attr, .. } => attr.structural_type().map(UsageType::from_type),
        Expr::Unary(UnaryOp::Neg, _) => Some(UsageType::Numeric),
        Expr::Unary(UnaryOp::Not, _) => Some(UsageType::Boolean),
        Expr::Binary(op, _, _) => Some(match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => {
                UsageType::Numeric
            }
            _ => UsageType::Boolean,
        }),
    }
}

/// Records every variable-attribute occurrence in `expr`, evaluated in a
/// context expecting `expected`, into `out`.
pub fn collect_usages(expr: &Expr, expected: UsageType, out: &mut Usages) {
    match expr {
        Expr::Lit(_) => {}
        Expr::Term { subject, attr } => {
            if let Subject::Var(v) = subject {
                let ty = attr.structural_type().map_or(expected, UsageType::from_type);
                add_usage(out, v, attr.clone(), ty);
            }
        }
        Expr::Unary(UnaryOp::Neg, e) => collect_usages(e, UsageType::Numeric, out),
        Expr::Unary(UnaryOp::Not, e) => collect_usages(e, UsageType::Boolean, out),
        Expr::Binary(op, l, r) => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                collect_usages(l, UsageType::Numeric, out);
                collect_usages(r, UsageType::Numeric, out);
            }
            BinaryOp::Rem => {
                collect_usages(l, UsageType::Integer, out);
                collect_usages(r, UsageType::Integer, out);
            }
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                collect_usages(l, UsageType::Numeric, out);
                collect_usages(r, UsageType::Numeric, out);
            }
            BinaryOp::Eq | BinaryOp::Ne => {
                collect_usages(l, static_usage(r).unwrap_or(UsageType::Any), out);
                collect_usages(r, static_usage(l).unwrap_or(UsageType::Any), out);
            }
            BinaryOp::And | BinaryOp::Or => {
                collect_usages(l, UsageType::Boolean, out);
                collect_usages(r, UsageType::Boolean, out);
            }
        },
    }
}

pub(crate) fn add_usage(out: &mut Usages, var: &str, attr: AttrName, ty: UsageType) {
    let list = out.entry(var.to_string()).or_default();
    let u = Usage { attr, ty };
    if !list.contains(&u) {
        list.push(u);
    }
}

/// Usages of a boolean condition such as a where-clause.
pub fn referenced_usages(expr: &Expr) -> Usages {
    let mut out = Usages::new();
    collect_usages(expr, UsageType::Boolean, &mut out);
    out
}

/// Whether `feature` can stand in for a variable with these usages without
/// making any occurrence ill-typed.
pub fn admits(feature: &Feature, usages: &[Usage]) -> bool {
    usages.iter().all(|u| match &u.attr {
        AttrName::Name | AttrName::Parent => true,
        AttrName::Decomp | AttrName::DecompId => !feature.is_root(),
        AttrName::User(a) => feature.attribute(a).is_some_and(|v| u.ty.accepts(v)),
    })
}

/// Renders a real or integer in literal syntax, for messages.
pub fn render_number(v: &Value) -> String {
    match v {
        Value::Real(r) => format_real(*r),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DecompKind, Feature, FeatureModel};

    fn model() -> FeatureModel {
        let mut m = FeatureModel::new(Feature::new("R"));
        m.attach_feature(
            Feature::new("F")
                .with_attribute("attr", Value::Int(3))
                .with_attribute("s", Value::Str("x".into()))
                .with_attribute("b", Value::Bool(false)),
            "R",
            DecompKind::Optional,
            None,
        )
        .unwrap();
        m
    }

    fn num(e: &Expr) -> Value {
        evaluate(e, &model(), &NoVars).unwrap().into_value().unwrap()
    }

    #[test]
    fn division_is_mathematical() {
        let e = Expr::binary(BinaryOp::Div, Expr::int(7), Expr::int(2));
        assert_eq!(num(&e), Value::Real(3.5));
        assert_eq!(typecheck(&e, &model(), &NoVars), Ok(Type::Real));
    }

    #[test]
    fn integer_ops_stay_integer_and_promote() {
        let e = Expr::binary(BinaryOp::Mul, Expr::int(4), Expr::int(5));
        assert_eq!(num(&e), Value::Int(20));
        let e = Expr::binary(BinaryOp::Add, Expr::int(4), Expr::real(0.5));
        assert_eq!(num(&e), Value::Real(4.5));
        let e = Expr::binary(BinaryOp::Rem, Expr::int(-7), Expr::int(3));
        assert_eq!(num(&e), Value::Int(-1));
    }

    #[test]
    fn modulo_rejects_reals() {
        let e = Expr::binary(BinaryOp::Rem, Expr::real(7.0), Expr::int(2));
        assert!(matches!(typecheck(&e, &model(), &NoVars), Err(EvalError::TypeMismatch { .. })));
    }

    #[test]
    fn zero_division_is_dynamic() {
        let m = model();
        for op in [BinaryOp::Div, BinaryOp::Rem] {
            let e = Expr::binary(op, Expr::int(1), Expr::int(0));
            assert!(typecheck(&e, &m, &NoVars).is_ok());
            assert_eq!(evaluate(&e, &m, &NoVars), Err(EvalError::DivisionByZero));
        }
    }

    #[test]
    fn feature_term_checks() {
        let m = model();
        let plus5 = |f: &str, a: &str| {
            Expr::binary(BinaryOp::Add, Expr::feature_attr(f, AttrName::User(a.into())), Expr::int(5))
        };
        assert_eq!(typecheck(&plus5("F", "attr"), &m, &NoVars), Ok(Type::Integer));
        assert!(matches!(
            typecheck(&plus5("F", "s"), &m, &NoVars),
            Err(EvalError::TypeMismatch { .. })
        ));
        assert_eq!(
            typecheck(&plus5("G", "attr"), &m, &NoVars),
            Err(EvalError::UnknownFeature("G".into()))
        );
        assert!(matches!(
            typecheck(&plus5("F", "zzz"), &m, &NoVars),
            Err(EvalError::MissingAttribute { .. })
        ));
    }

    #[test]
    fn mixed_equality_promotes() {
        let e = Expr::binary(BinaryOp::Eq, Expr::int(2), Expr::real(2.0));
        assert_eq!(num(&e), Value::Bool(true));
        let e = Expr::binary(BinaryOp::Eq, Expr::int(2), Expr::string("2"));
        assert!(typecheck(&e, &model(), &NoVars).is_err());
    }

    #[test]
    fn root_structural_terms() {
        let m = model();
        let parent = Expr::feature_attr("R", AttrName::Parent);
        assert_eq!(evaluate(&parent, &m, &NoVars), Ok(Evaluated::Value(Value::Str(String::new()))));
        let decomp = Expr::feature_attr("R", AttrName::Decomp);
        assert!(matches!(evaluate(&decomp, &m, &NoVars), Err(EvalError::RootStructural { .. })));
        let d = Expr::binary(BinaryOp::Eq, Expr::feature_attr("F", AttrName::Decomp), Expr::decomp(DecompKind::Optional));
        assert_eq!(num(&d), Value::Bool(true));
    }

    #[test]
    fn usages_follow_context() {
        // (V1.price < 10 or V2.reqintcon = false)
        let e = Expr::or(
            Expr::binary(BinaryOp::Lt, Expr::var_attr("V1", AttrName::User("price".into())), Expr::int(10)),
            Expr::binary(BinaryOp::Eq, Expr::var_attr("V2", AttrName::User("reqintcon".into())), Expr::boolean(false)),
        );
        let u = referenced_usages(&e);
        assert_eq!(u.len(), 2);
        assert_eq!(u["V1"], vec![Usage { attr: AttrName::User("price".into()), ty: UsageType::Numeric }]);
        assert_eq!(u["V2"], vec![Usage { attr: AttrName::User("reqintcon".into()), ty: UsageType::Boolean }]);
        assert!(referenced_usages(&Expr::boolean(true)).is_empty());
    }

    #[test]
    fn conflicting_usages_admit_nothing() {
        let a = || Expr::var_attr("V", AttrName::User("a".into()));
        let e = Expr::and(
            Expr::binary(BinaryOp::Lt, a(), Expr::int(5)),
            Expr::binary(BinaryOp::Eq, a(), Expr::string("x")),
        );
        let u = referenced_usages(&e);
        assert_eq!(u["V"].len(), 2);
        let f = Feature::new("X").with_attribute("a", Value::Int(1));
        let g = Feature::new("Y").with_attribute("a", Value::Str("x".into()));
        assert!(!admits(&f, &u["V"]));
        assert!(!admits(&g, &u["V"]));
    }

    #[test]
    fn open_check_ignores_variables() {
        let m = model();
        let e = Expr::binary(BinaryOp::Add, Expr::var_attr("V", AttrName::User("a".into())), Expr::int(1));
        assert_eq!(typecheck_open(&e, &m), Ok(None));
        let bad = Expr::binary(BinaryOp::Add, Expr::var_attr("V", AttrName::Name), Expr::int(1));
        assert!(typecheck_open(&bad, &m).is_err());
    }

    #[test]
    fn postfix_order() {
        let e = Expr::binary(
            BinaryOp::Add,
            Expr::int(1),
            Expr::binary(BinaryOp::Mul, Expr::int(2), Expr::int(3)),
        );
        assert_eq!(e.postfix(), "1 2 3 * +");
    }
}
