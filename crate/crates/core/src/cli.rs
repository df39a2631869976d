//! Problem files, reports and the built-in fixture corpus.
//!
//! A problem file is one JSON object:
//!
//! ```json
//! { "schema_version": 1, "kind": "mapping", "description": "...",
//!   "payload": { "mapping": { "type": "smooth_plus", ... } },
//!   "queries": [ { "id": "m2r", "op": "metric2_regularity", "u": [0], "y": [0], "w": [1] } ] }
//! ```
//!
//! Queries may carry `expect` entries, checked by [`run_problem`] and used by the corpus.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::lsv::{
    self, combined_lower_bound, lower_bound_calm, lower_bound_calm_relaxed, lower_bound_conic, subderivative_estimate,
    GammaFamily, GraphFn, LsvInstance, MatrixField, SUBDERIVATIVE_SCHEDULE,
};
use crate::polyhedra::{ConvexPolyhedron, PolyhedralSet};
use crate::regularity::{self as reg, ConditionCheck, RegularityVerdict, TraceEntry};
use crate::setmaps::{ClosedSet, StructuredMapping};
use crate::smoothmaps::{PolyMap, SmoothMap};
use crate::systems::{self, ConstraintSystem, VariationalSystem};
use crate::Config;

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INCONSISTENT: i32 = 2;

// ---------------------------------------------------------------- problem schema

/// Rows are `[a₁, …, a_n, b]`: `a·x <= b` in `ineq`, `a·x = b` in `eq`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PieceSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ineq: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eq: Vec<Vec<f64>>,
}

/// A union of convex pieces in `ℝ^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    pub dim: usize,
    pub pieces: Vec<PieceSpec>,
}

impl SetSpec {
    fn rows(&self, rows: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, f64)>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.dim + 1 {
                    return Err(Error::Validation(format!("constraint row has {} entries, expected {}", r.len(), self.dim + 1)));
                }
                Ok((r[..self.dim].to_vec(), r[self.dim]))
            })
            .collect()
    }

    pub fn to_pieces(&self) -> Result<Vec<ConvexPolyhedron>> {
        self.pieces.iter().map(|p| ConvexPolyhedron::new(self.dim, self.rows(&p.ineq)?, self.rows(&p.eq)?)).collect()
    }

    pub fn to_set(&self) -> Result<PolyhedralSet> {
        PolyhedralSet::new(self.dim, self.to_pieces()?)
    }

    pub fn to_convex(&self) -> Result<ConvexPolyhedron> {
        let mut p = self.to_pieces()?;
        if p.len() != 1 {
            return Err(Error::Validation("expected a single convex piece".into()));
        }
        Ok(p.remove(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClosedSetSpec {
    Polyhedral(SetSpec),
    /// Zero set of a polynomial map.
    Manifold { h: PolyMap },
}

impl ClosedSetSpec {
    pub fn build(&self) -> Result<ClosedSet> {
        Ok(match self {
            ClosedSetSpec::Polyhedral(s) => ClosedSet::Polyhedral(s.to_set()?),
            ClosedSetSpec::Manifold { h } => ClosedSet::Manifold { h: h.clone() },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MappingSpec {
    Graph { in_dim: usize, out_dim: usize, graph: SetSpec },
    Indicator { set: ClosedSetSpec, out_dim: usize },
    Constant { in_dim: usize, set: ClosedSetSpec },
    Product { left: Box<MappingSpec>, right: Box<MappingSpec> },
    SmoothPlus { f: PolyMap, c: Box<MappingSpec> },
    NormalCone { set: SetSpec },
}

impl MappingSpec {
    pub fn build(&self) -> Result<StructuredMapping> {
        let m = match self {
            MappingSpec::Graph { in_dim, out_dim, graph } => {
                StructuredMapping::GraphPolyhedral { in_dim: *in_dim, out_dim: *out_dim, graph: graph.to_set()? }
            }
            MappingSpec::Indicator { set, out_dim } => StructuredMapping::Indicator { set: set.build()?, out_dim: *out_dim },
            MappingSpec::Constant { in_dim, set } => StructuredMapping::ConstantSet { in_dim: *in_dim, set: set.build()? },
            MappingSpec::Product { left, right } => StructuredMapping::product(left.build()?, right.build()?),
            MappingSpec::SmoothPlus { f, c } => StructuredMapping::smooth_plus(f.clone(), c.build()?)?,
            MappingSpec::NormalCone { set } => StructuredMapping::NormalConeMap { set: set.to_convex()? },
        };
        m.validate()?;
        Ok(m)
    }

    /// `(F, C)` of `F + C`.
    fn split(&self) -> Result<(&PolyMap, &MappingSpec)> {
        match self {
            MappingSpec::SmoothPlus { f, c } => Ok((f, c)),
            _ => Err(Error::Validation("query needs a mapping of the form smooth_plus".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingPayload {
    pub mapping: MappingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPayload {
    pub phi: PolyMap,
    pub omega: SetSpec,
    pub t: MappingSpec,
}

/// Either `kkt_inequalities` (then `ℳ = ∇g`, `C₀ = ℝ₋^t × {0}`) or both `m` and `c0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalPayload {
    pub f: PolyMap,
    pub g: PolyMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<PolyMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_inequalities: Option<usize>,
}

impl VariationalPayload {
    pub fn build(&self) -> Result<VariationalSystem> {
        match (&self.kkt_inequalities, &self.m, &self.c0) {
            (Some(t), None, None) => VariationalSystem::kkt(self.f.clone(), self.g.clone(), *t),
            (None, Some(m), Some(c0)) => VariationalSystem::new(self.f.clone(), self.g.clone(), m.clone(), c0.to_convex()?),
            _ => Err(Error::Validation("give either kkt_inequalities or both m and c0".into())),
        }
    }
}

/// `𝒜(ξ)` as a polynomial map with `rows·cols` components, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub entries: PolyMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GammaSpec {
    /// Graph of `(ξ, z, η)` in one polyhedral set.
    JointlyPolyhedral { z_dim: usize, eta_dim: usize, graph: SetSpec },
    /// `Γ(ξ, z) = N_D(ξ)` for every `z`, with `D` the instance domain.
    NormalCone { z_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsvPayload {
    pub domain: SetSpec,
    pub a: MatrixSpec,
    pub gamma: GammaSpec,
}

impl LsvPayload {
    pub fn build(&self) -> Result<LsvInstance> {
        let xi_dim = self.domain.dim;
        let domain = self.domain.to_set()?;
        let a = MatrixField::from_poly(self.a.entries.clone(), self.a.rows, self.a.cols)?;
        let gamma = match &self.gamma {
            GammaSpec::JointlyPolyhedral { z_dim, eta_dim, graph } => {
                GammaFamily::jointly_polyhedral(xi_dim, *z_dim, *eta_dim, graph.to_set()?)?
            }
            GammaSpec::NormalCone { z_dim } => {
                let (z_dim, set) = (*z_dim, ClosedSet::Polyhedral(domain.clone()));
                let cfg = Config::default();
                let eval: GraphFn = Arc::new(move |xi: &[f64]| {
                    if !set.contains(xi, &cfg) {
                        return Ok(None);
                    }
                    let nc = set.normal_cone(xi, &cfg)?;
                    let lifted = nc.embed(z_dim + xi.len(), &(z_dim..z_dim + xi.len()).collect::<Vec<_>>());
                    Ok(Some(PolyhedralSet::clone(&lifted)))
                });
                GammaFamily::general(z_dim, xi_dim, true, true, None, eval)
            }
        };
        LsvInstance::new(ClosedSet::Polyhedral(domain), a, gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Problem {
    Mapping(MappingPayload),
    ConstraintSystem(ConstraintPayload),
    VariationalSystem(VariationalPayload),
    LsvInstance(LsvPayload),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Mapping(_) => "mapping",
            Problem::ConstraintSystem(_) => "constraint_system",
            Problem::VariationalSystem(_) => "variational_system",
            Problem::LsvInstance(_) => "lsv_instance",
        }
    }
}

/// Which certifier a `lower_bound` query runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Calm,
    CalmRelaxed,
    Conic,
    Combined,
}

/// Rules for `sufficient_m2r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficientRule {
    PolyhedralConstraint,
    NonpolyhedralConstraint,
    PolyhedralMapping,
    IndicatorPolyhedral,
    IndicatorNonpolyhedral,
}

/// `y` is always a value of the whole mapping; `F + C` splits use `y − F(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum QueryOp {
    // mapping
    RegValue { u: Vec<f64>, y: Vec<f64> },
    MetricRegularity { u: Vec<f64>, y: Vec<f64> },
    Metric2Regularity {
        u: Vec<f64>,
        y: Vec<f64>,
        w: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        conditions: Vec<String>,
    },
    Gfrerer { u: Vec<f64>, y: Vec<f64>, w: Vec<f64>, eta: Vec<f64> },
    M2rEquivGfrerer { u: Vec<f64>, y: Vec<f64>, w: Vec<f64> },
    Conditions { u: Vec<f64>, y: Vec<f64>, w: Vec<f64>, ids: Vec<String> },
    SufficientM2r { u: Vec<f64>, y: Vec<f64>, w: Vec<f64>, rule: SufficientRule },
    RegChain { u: Vec<f64>, y: Vec<f64> },
    /// `curve` maps `t` to `(u(t), y(t))`.
    Curve {
        u: Vec<f64>,
        y: Vec<f64>,
        curve: PolyMap,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<Vec<f64>>,
    },
    Classic2 {
        u: Vec<f64>,
        w: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<SetSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<SetSpec>,
    },
    // constraint systems
    CsMetricRegularity { x: Vec<f64>, sigma: Vec<f64> },
    CsMetric2Polyhedral { x: Vec<f64>, sigma: Vec<f64>, w: Vec<f64> },
    CsMetric2Unconstrained { x: Vec<f64>, sigma: Vec<f64>, w: Vec<f64> },
    CsCoderivativeCheck { x: Vec<f64>, sigma: Vec<f64> },
    // variational systems
    VsMetricRegularity { x: Vec<f64>, lambda: Vec<f64>, zeta: Vec<f64> },
    VsCompiledMetricRegularity { x: Vec<f64>, lambda: Vec<f64>, zeta: Vec<f64> },
    VsMetric2Regularity {
        x: Vec<f64>,
        lambda: Vec<f64>,
        zeta: Vec<f64>,
        w: Vec<f64>,
        v: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphas: Option<Vec<Vec<f64>>>,
    },
    VsTransitionRegular { lambda: Vec<f64>, zeta: Vec<f64> },
    // LSV instances
    LsvValue { xi: Vec<f64> },
    Singularity { xi: Vec<f64> },
    Subderivative {
        xi: Vec<f64>,
        omega: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schedule: Option<Vec<f64>>,
    },
    LowerBound { xi: Vec<f64>, omega: Vec<f64>, theorem: BoundKind },
}

impl QueryOp {
    fn kind(&self) -> &'static str {
        use QueryOp::*;
        match self {
            RegValue { .. }
            | MetricRegularity { .. }
            | Metric2Regularity { .. }
            | Gfrerer { .. }
            | M2rEquivGfrerer { .. }
            | Conditions { .. }
            | SufficientM2r { .. }
            | RegChain { .. }
            | Curve { .. }
            | Classic2 { .. } => "mapping",
            CsMetricRegularity { .. } | CsMetric2Polyhedral { .. } | CsMetric2Unconstrained { .. } | CsCoderivativeCheck { .. } => {
                "constraint_system"
            }
            VsMetricRegularity { .. } | VsCompiledMetricRegularity { .. } | VsMetric2Regularity { .. } | VsTransitionRegular { .. } => {
                "variational_system"
            }
            LsvValue { .. } | Singularity { .. } | Subderivative { .. } | LowerBound { .. } => "lsv_instance",
        }
    }
}

/// A check on the query result. `path` is a JSON pointer where a `*` segment
/// ranges over array elements; every selected value must pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<Value>,
    /// Numbers, or arrays of numbers, within `tol` (default `1e-9`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    #[serde(flatten)]
    pub op: QueryOp,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Short citation of the example a fixture reproduces, e.g. `Ex(5.9)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(flatten)]
    pub problem: Problem,
    pub queries: Vec<Query>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        if p.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!("unsupported schema_version {}", p.schema_version)));
        }
        let mut seen = std::collections::HashSet::new();
        for q in &p.queries {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::Validation(format!("duplicate query id {:?}", q.id)));
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub id: String,
    pub op: String,
    /// `ok`, `refused` (a hypothesis or precondition of the check failed) or `error`.
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<RegularityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<Value>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub conditions: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Failed expectations, by path.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: Config,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub results: Vec<QueryResult>,
    /// Milliseconds per query id; excluded from [`Report::payload_json`].
    pub timings_ms: BTreeMap<String, f64>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The report without timings; byte-identical across runs with the same input and seed.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timings_ms");
        serde_json::to_string_pretty(&v).expect("reports serialize")
    }

    pub fn mismatch_count(&self) -> usize {
        self.results.iter().map(|r| r.mismatches.len()).sum()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let what = match (&r.verdict, &r.message) {
                (Some(v), _) => format!("{:?} {:?}", v.property, v.status),
                (None, Some(m)) => m.clone(),
                (None, None) => "done".into(),
            };
            let mark = if r.mismatches.is_empty() { "" } else { " [expectation mismatch]" };
            s.push_str(&format!("{:<28} {:<8} {}{}\n", r.id, r.outcome, what, mark));
        }
        s
    }
}

fn exit_code_of(e: &Error) -> Option<i32> {
    match e {
        Error::Inconsistency(_) => Some(EXIT_INCONSISTENT),
        Error::Validation(_)
        | Error::DimensionMismatch { .. }
        | Error::Parse { .. }
        | Error::BasepointOffGraph
        | Error::PointNotInSet
        | Error::NotASolution(_)
        | Error::CurveOffGraph(_)
        | Error::NonzeroOffset(_) => Some(EXIT_INPUT),
        _ => None,
    }
}

fn is_refusal(e: &Error) -> bool {
    matches!(
        e,
        Error::ConditionFailed(_)
            | Error::NotPolyhedral(_)
            | Error::DirectionNotInDomain
            | Error::DirectionNotTangent
            | Error::EmptyGraphicalDerivative
            | Error::NormalConeUnavailable
    )
}

// ---------------------------------------------------------------- execution

struct Output {
    verdict: Option<RegularityVerdict>,
    numeric: Option<Value>,
    conditions: Map<String, Value>,
}

impl Output {
    fn verdict(v: RegularityVerdict) -> Self {
        Output { verdict: Some(v), numeric: None, conditions: Map::new() }
    }
    fn numeric(v: Value) -> Self {
        Output { verdict: None, numeric: Some(v), conditions: Map::new() }
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn condition_value(c: &ConditionCheck) -> Value {
    json!({ "holds": c.holds, "witness": c.witness })
}

fn c_part(f: &PolyMap, u: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let fu = f.evaluate(u)?;
    crate::error::check_dim("y", fu.len(), y.len())?;
    Ok(crate::linalg::sub(y, &fu))
}

fn closed_set_of(c: &MappingSpec, want: &str) -> Result<ClosedSet> {
    match (c, want) {
        (MappingSpec::Indicator { set, .. }, "indicator") | (MappingSpec::Constant { set, .. }, "constant") => set.build(),
        _ => Err(Error::Validation(format!("condition needs an F + C with C of type {want}"))),
    }
}

fn polyhedral(set: ClosedSet) -> Result<PolyhedralSet> {
    match set {
        ClosedSet::Polyhedral(p) => Ok(p),
        ClosedSet::Manifold { .. } => Err(Error::NotPolyhedral("condition needs a polyhedral set".into())),
    }
}

fn run_condition(id: &str, spec: &MappingSpec, u: &[f64], y: &[f64], w: &[f64], cfg: &Config) -> Result<ConditionCheck> {
    let (f, c) = spec.split()?;
    let sf = SmoothMap::from(f.clone());
    match id {
        "Eq(5.3)" => reg::constant_set_condition(&sf, &closed_set_of(c, "constant")?, u, &c_part(f, u, y)?, w, cfg),
        "Eq(5.8)" => reg::constant_set_range_condition(&sf, &closed_set_of(c, "constant")?, u, &c_part(f, u, y)?, w, cfg),
        "Eq(5.4)" => reg::polyhedral_mapping_condition(&sf, &c.build()?, u, &c_part(f, u, y)?, w, cfg),
        "Eq(5.5)" => reg::indicator_condition(&sf, &closed_set_of(c, "indicator")?, u, w, cfg),
        "Eq(5.6)" => reg::range_normal_separation(&sf, &closed_set_of(c, "indicator")?, u, cfg),
        "Eq(5.7)" => reg::span_tangent_condition(f, &polyhedral(closed_set_of(c, "indicator")?)?, u, w, cfg),
        "Rem(5.9)" => reg::tangent_set_condition(f, &polyhedral(closed_set_of(c, "constant")?)?, u, w, cfg),
        "Eq(6.2)" => reg::classic_kernel_condition(f, u, w),
        "Eq(6.3)" => reg::classic_rank_condition(f, u, w),
        _ => Err(Error::Validation(format!("unknown condition id {id:?}"))),
    }
}

fn append_conditions(
    out: &mut Output,
    ids: &[String],
    spec: &MappingSpec,
    u: &[f64],
    y: &[f64],
    w: &[f64],
    cfg: &Config,
) -> Result<()> {
    for id in ids {
        let value = match run_condition(id, spec, u, y, w, cfg) {
            Ok(c) => {
                if let Some(v) = out.verdict.as_mut() {
                    v.trace.push(TraceEntry { id: id.clone(), result: if c.holds { "holds" } else { "fails" }.into() });
                }
                condition_value(&c)
            }
            Err(e) if is_refusal(&e) => json!({ "refused": e.to_string() }),
            Err(e) => return Err(e),
        };
        out.conditions.insert(id.clone(), value);
    }
    Ok(())
}

fn lsv_json(v: &lsv::LsvValue) -> Value {
    json!({ "value": v.value, "exact": v.exact, "argmin": v.argmin })
}

fn run_mapping(spec: &MappingSpec, op: &QueryOp, cfg: &Config) -> Result<Output> {
    let s = spec.build()?;
    Ok(match op {
        QueryOp::RegValue { u, y } => Output::numeric(lsv_json(&lsv::reg_value(&s, u, y, cfg)?)),
        QueryOp::MetricRegularity { u, y } => Output::verdict(reg::check_metric_regularity(&s, u, y, cfg)?),
        QueryOp::Metric2Regularity { u, y, w, conditions } => {
            let mut out = Output::verdict(reg::check_metric2_regularity(&s, u, y, w, cfg)?);
            append_conditions(&mut out, conditions, spec, u, y, w, cfg)?;
            out
        }
        QueryOp::Gfrerer { u, y, w, eta } => Output::verdict(reg::check_gfrerer(&s, u, y, w, eta, cfg)?),
        QueryOp::M2rEquivGfrerer { u, y, w } => {
            let r = reg::m2r_equiv_gfrerer(&s, u, y, w, cfg)?;
            if !r.consistent {
                return Err(Error::Inconsistency("metric 2-regularity and Gfrerer regularity disagree".into()));
            }
            Output::numeric(to_value(&r))
        }
        QueryOp::Conditions { u, y, w, ids } => {
            let mut out = Output::numeric(Value::Null);
            out.numeric = None;
            append_conditions(&mut out, ids, spec, u, y, w, cfg)?;
            out
        }
        QueryOp::SufficientM2r { u, y, w, rule } => {
            let (f, c) = spec.split()?;
            let sf = SmoothMap::from(f.clone());
            let v = match rule {
                SufficientRule::PolyhedralConstraint => {
                    reg::sufficient_m2r_polyhedral_constraint(&sf, &closed_set_of(c, "constant")?, u, &c_part(f, u, y)?, w, cfg)?
                }
                SufficientRule::NonpolyhedralConstraint => {
                    reg::sufficient_m2r_nonpolyhedral_constraint(&sf, &closed_set_of(c, "constant")?, u, &c_part(f, u, y)?, w, cfg)?
                }
                SufficientRule::PolyhedralMapping => reg::sufficient_m2r_polyhedral_mapping(&sf, &c.build()?, u, &c_part(f, u, y)?, w, cfg)?,
                SufficientRule::IndicatorPolyhedral => reg::sufficient_m2r_indicator_polyhedral(&sf, &closed_set_of(c, "indicator")?, u, w, cfg)?,
                SufficientRule::IndicatorNonpolyhedral => {
                    reg::sufficient_m2r_indicator_nonpolyhedral(&sf, &closed_set_of(c, "indicator")?, u, w, cfg)?
                }
            };
            Output::verdict(v)
        }
        QueryOp::RegChain { u, y } => {
            let (f, c) = spec.split()?;
            let r = reg::reg_chain(f, &c.build()?, u, &c_part(f, u, y)?, cfg)?;
            if !r.ordered {
                return Err(Error::Inconsistency(format!("Reg-chain out of order: {r:?}")));
            }
            Output::numeric(to_value(&r))
        }
        QueryOp::Curve { u, y, curve, schedule } => {
            crate::error::check_dim("curve parameter", 1, curve.in_dim())?;
            crate::error::check_dim("curve value", u.len() + y.len(), curve.out_dim())?;
            let n = u.len();
            let eval = |t: f64| {
                let v = curve.evaluate(&[t]).unwrap_or_else(|_| vec![f64::NAN; curve.out_dim()]);
                (v[..n].to_vec(), v[n..].to_vec())
            };
            let sched = schedule.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
            Output::numeric(to_value(&reg::curve_falsifier(&s, u, y, &eval, &sched, cfg)?))
        }
        QueryOp::Classic2 { u, w, domain, value } => {
            let (f, _) = spec.split()?;
            let d = domain.as_ref().map(SetSpec::to_set).transpose()?;
            let v = value.as_ref().map(SetSpec::to_set).transpose()?;
            Output::verdict(reg::classic2_regularity(f, u, w, d.as_ref(), v.as_ref(), cfg)?)
        }
        _ => unreachable!("dispatched by kind"),
    })
}

fn run_constraint(p: &ConstraintPayload, op: &QueryOp, cfg: &Config) -> Result<Output> {
    let cs = ConstraintSystem::new(p.phi.clone(), p.omega.to_set()?, p.t.build()?)?;
    Ok(match op {
        QueryOp::CsMetricRegularity { x, sigma } => Output::verdict(systems::cs_metric_regularity(&cs, x, sigma, cfg)?),
        QueryOp::CsMetric2Polyhedral { x, sigma, w } => Output::verdict(systems::cs_metric2_regularity_polyhedral(&cs, x, sigma, w, cfg)?),
        QueryOp::CsMetric2Unconstrained { x, sigma, w } => {
            let direct = systems::cs_metric2_regularity_unconstrained(&cs, x, sigma, w, cfg);
            let product = systems::cs_unconstrained_via_product(&cs, x, sigma, w, cfg);
            if let (Ok(a), Ok(b)) = (&direct, &product) {
                if a.status.is_positive() != b.status.is_positive() {
                    return Err(Error::Inconsistency("system and product checks disagree".into()));
                }
            }
            Output::verdict(direct?)
        }
        QueryOp::CsCoderivativeCheck { x, sigma } => {
            let closed = systems::compiled_coderivative(&cs, x, sigma, cfg)?;
            let (s, u, y) = systems::compiled_mapping(&cs, x, sigma)?;
            let generic = crate::gendiff::coderivative(&s, &u, &y, cfg)?;
            if !closed.graph.set_eq(&generic.graph, cfg) {
                return Err(Error::Inconsistency("closed-form and generic coderivatives differ".into()));
            }
            Output::numeric(json!({ "equal": true }))
        }
        _ => unreachable!("dispatched by kind"),
    })
}

fn run_variational(p: &VariationalPayload, op: &QueryOp, cfg: &Config) -> Result<Output> {
    let vs = p.build()?;
    Ok(match op {
        QueryOp::VsMetricRegularity { x, lambda, zeta } => Output::verdict(systems::vs_metric_regularity(&vs, x, lambda, zeta, cfg)?),
        QueryOp::VsCompiledMetricRegularity { x, lambda, zeta } => {
            let cs = systems::compile_variational_system(&vs, cfg)?;
            Output::verdict(systems::cs_metric_regularity(&cs, x, &[lambda.as_slice(), zeta].concat(), cfg)?)
        }
        QueryOp::VsMetric2Regularity { x, lambda, zeta, w, v, alphas } => {
            Output::verdict(systems::vs_metric2_regularity(&vs, x, lambda, zeta, w, v, alphas.as_deref(), cfg)?)
        }
        QueryOp::VsTransitionRegular { lambda, zeta } => {
            Output::numeric(json!({ "regular": systems::lemma_t_regular(&vs, lambda, zeta, cfg)? }))
        }
        _ => unreachable!("dispatched by kind"),
    })
}

fn run_lsv(p: &LsvPayload, op: &QueryOp, cfg: &Config) -> Result<Output> {
    let inst = p.build()?;
    Ok(match op {
        QueryOp::LsvValue { xi } => Output::numeric(lsv_json(&inst.lsv_value(xi, cfg)?)),
        QueryOp::Singularity { xi } => {
            let r = inst.singularity_report(xi, cfg)?;
            Output::numeric(json!({
                "is_singular": r.is_singular,
                "lsv_value": r.lsv_value,
                "unit_points": r.unit_points,
                "zeros": r.zeros,
            }))
        }
        QueryOp::Subderivative { xi, omega, schedule } => {
            let phi = |x: &[f64]| Ok(inst.lsv_value(x, cfg)?.value);
            let domain = ClosedSet::Polyhedral(p.domain.to_set()?);
            let project = |x: &[f64]| domain.project(x, cfg).ok();
            let sched = schedule.clone().unwrap_or_else(|| SUBDERIVATIVE_SCHEDULE.to_vec());
            Output::numeric(to_value(&subderivative_estimate(&phi, xi, omega, &sched, Some(&project), cfg)?))
        }
        QueryOp::LowerBound { xi, omega, theorem } => Output::numeric(match theorem {
            BoundKind::Calm => to_value(&lower_bound_calm(&inst, xi, omega, cfg)?),
            BoundKind::CalmRelaxed => to_value(&lower_bound_calm_relaxed(&inst, xi, omega, cfg)?),
            BoundKind::Conic => to_value(&lower_bound_conic(&inst, xi, omega, cfg)?),
            BoundKind::Combined => to_value(&combined_lower_bound(&inst, xi, omega, cfg)?),
        }),
        _ => unreachable!("dispatched by kind"),
    })
}

fn execute(problem: &Problem, op: &QueryOp, cfg: &Config) -> Result<Output> {
    if op.kind() != problem.kind() {
        return Err(Error::Validation(format!("operation applies to {} problems, not {}", op.kind(), problem.kind())));
    }
    match problem {
        Problem::Mapping(p) => run_mapping(&p.mapping, op, cfg),
        Problem::ConstraintSystem(p) => run_constraint(p, op, cfg),
        Problem::VariationalSystem(p) => run_variational(p, op, cfg),
        Problem::LsvInstance(p) => run_lsv(p, op, cfg),
    }
}

fn op_name(op: &QueryOp) -> String {
    to_value(op)["op"].as_str().unwrap_or_default().to_string()
}

/// Runs every query, collecting errors per query; the exit code is the worst one seen.
pub fn run_problem(file: &ProblemFile, cfg: &Config) -> Report {
    let mut results = Vec::with_capacity(file.queries.len());
    let mut timings = BTreeMap::new();
    let mut exit = EXIT_OK;
    for q in &file.queries {
        let start = Instant::now();
        let out = execute(&file.problem, &q.op, cfg);
        timings.insert(q.id.clone(), start.elapsed().as_secs_f64() * 1e3);
        let mut r = QueryResult {
            id: q.id.clone(),
            op: op_name(&q.op),
            outcome: "ok".into(),
            verdict: None,
            numeric: None,
            conditions: Map::new(),
            message: None,
            mismatches: vec![],
        };
        match out {
            Ok(o) => {
                r.verdict = o.verdict;
                r.numeric = o.numeric;
                r.conditions = o.conditions;
            }
            Err(e) => {
                r.outcome = if is_refusal(&e) { "refused" } else { "error" }.into();
                r.message = Some(format!("query {:?}: {e}", q.id));
                if let Some(code) = exit_code_of(&e) {
                    exit = exit.max(code);
                }
            }
        }
        r.mismatches = check_expectations(&to_value(&r), &q.expect);
        results.push(r);
    }
    Report {
        tool: "lsvreg",
        version: VERSION,
        seed: cfg.seed,
        config: *cfg,
        kind: file.problem.kind(),
        reference: file.reference.clone(),
        results,
        timings_ms: timings,
        exit_code: exit,
    }
}

// ---------------------------------------------------------------- expectations

fn select<'a>(v: &'a Value, segments: &[&str], out: &mut Vec<&'a Value>) {
    let Some((head, rest)) = segments.split_first() else {
        out.push(v);
        return;
    };
    if *head == "*" {
        if let Value::Array(items) = v {
            for item in items {
                select(item, rest, out);
            }
        }
        return;
    }
    let key = head.replace("~1", "/").replace("~0", "~");
    let next = match v {
        Value::Object(m) => m.get(&key),
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    };
    if let Some(n) = next {
        select(n, rest, out);
    }
}

fn approx_eq(a: &Value, b: &Value, tol: f64) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => (x.as_f64().unwrap_or(f64::NAN) - y.as_f64().unwrap_or(f64::NAN)).abs() <= tol,
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| approx_eq(p, q, tol)),
        _ => a == b,
    }
}

/// Failed expectations as `path: reason` strings.
pub fn check_expectations(result: &Value, expect: &[Expectation]) -> Vec<String> {
    let mut failed = vec![];
    for e in expect {
        let segments: Vec<&str> = e.path.trim_start_matches('/').split('/').filter(|s| !s.is_empty()).collect();
        let mut found = vec![];
        select(result, &segments, &mut found);
        if found.is_empty() {
            failed.push(format!("{}: missing", e.path));
            continue;
        }
        for v in found {
            let num = v.as_f64();
            let bad = e.equals.as_ref().is_some_and(|x| x != v)
                || e.approx.as_ref().is_some_and(|x| !approx_eq(v, x, e.tol.unwrap_or(1e-9)))
                || e.le.is_some_and(|b| !num.is_some_and(|n| n <= b))
                || e.ge.is_some_and(|b| !num.is_some_and(|n| n >= b));
            if bad {
                failed.push(format!("{}: got {v}", e.path));
                break;
            }
        }
    }
    failed
}

// ---------------------------------------------------------------- corpus

/// Built-in fixtures as `(file name, JSON text)`.
pub const CORPUS: &[(&str, &str)] = &[
    ("two_valued_gamma.json", include_str!("../fixtures/two_valued_gamma.json")),
    ("normal_cone_gamma.json", include_str!("../fixtures/normal_cone_gamma.json")),
    ("drifting_gamma.json", include_str!("../fixtures/drifting_gamma.json")),
    ("halfline_indicator.json", include_str!("../fixtures/halfline_indicator.json")),
    ("parabola_constraint.json", include_str!("../fixtures/parabola_constraint.json")),
    ("lifted_parabola.json", include_str!("../fixtures/lifted_parabola.json")),
    ("square.json", include_str!("../fixtures/square.json")),
    ("square_constraint_system.json", include_str!("../fixtures/square_constraint_system.json")),
    ("split_constraint_system.json", include_str!("../fixtures/split_constraint_system.json")),
    ("kkt_strict.json", include_str!("../fixtures/kkt_strict.json")),
    ("kkt_degenerate.json", include_str!("../fixtures/kkt_degenerate.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub reference: Option<String>,
    pub description: String,
    pub exit_code: i32,
    pub mismatches: Vec<String>,
}

impl CorpusEntry {
    pub fn passed(&self) -> bool {
        self.exit_code == EXIT_OK && self.mismatches.is_empty()
    }
}

/// Loads `*.json` from `dir` in name order, or the built-in set.
pub fn corpus_sources(dir: Option<&Path>) -> Result<Vec<(String, String)>> {
    let Some(dir) = dir else {
        return Ok(CORPUS.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect());
    };
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Validation(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?;
            Ok((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), text))
        })
        .collect()
}

pub fn run_corpus(sources: &[(String, String)], cfg: &Config) -> Vec<CorpusEntry> {
    sources
        .iter()
        .map(|(name, text)| match ProblemFile::from_json(text) {
            Ok(file) => {
                let report = run_problem(&file, cfg);
                let mismatches = report
                    .results
                    .iter()
                    .flat_map(|r| {
                        let mut m: Vec<String> = r.mismatches.iter().map(|x| format!("{}: {x}", r.id)).collect();
                        if r.outcome == "error" {
                            m.push(format!("{}: {}", r.id, r.message.clone().unwrap_or_default()));
                        }
                        m
                    })
                    .collect();
                CorpusEntry {
                    name: name.clone(),
                    reference: file.reference.clone(),
                    description: file.description.clone(),
                    exit_code: report.exit_code,
                    mismatches,
                }
            }
            Err(e) => CorpusEntry {
                name: name.clone(),
                reference: None,
                description: String::new(),
                exit_code: EXIT_INPUT,
                mismatches: vec![e.to_string()],
            },
        })
        .collect()
}

/// Exit code of a corpus run: `0` when every fixture matches, `2` otherwise.
pub fn corpus_exit_code(entries: &[CorpusEntry]) -> i32 {
    if entries.iter().all(CorpusEntry::passed) {
        EXIT_OK
    } else {
        EXIT_INCONSISTENT
    }
}

#[cfg(test)]
mod tests;
