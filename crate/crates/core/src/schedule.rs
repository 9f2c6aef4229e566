//! Delay schedules `s(t)`.
//!
//! The adiabatic condition `|ds/dt| ≤ ε·g(s)²/D` is applied either once with
//! the worst-case gap (global schedule, constant rate) or pointwise along a
//! gap model (local schedule). A local schedule is tabulated as `t(s)` at
//! adapted nodes and inverted by monotone cubic interpolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::GapEnvelope;
use crate::hamiltonian::dhds_spectral_norm;
use crate::instance::ProblemInstance;
use crate::numeric::{integrate, MonotoneCubic, QuadError, QuadSettings};
use crate::spectrum::GapFunction;

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const MIN_LOCAL_NODES: usize = 128;
pub const DEFAULT_NODES: usize = 257;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("epsilon = {0} must be positive and finite")]
    BadEpsilon(f64),
    #[error("g_min = {0} must be positive and finite")]
    BadGap(f64),
    #[error("D = {0} must be positive and finite")]
    BadNorm(f64),
    #[error("a local schedule needs at least {MIN_LOCAL_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("gap model vanishes or is undefined near s = {at}")]
    Singularity { at: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(QuadError),
}

impl From<QuadError> for ScheduleError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::NonFinite { at } => ScheduleError::Singularity { at },
            other => ScheduleError::Quadrature(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Global,
    LocalExact,
    LocalEnvelope,
}

impl ScheduleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Global => "global",
            ScheduleKind::LocalExact => "local-exact",
            ScheduleKind::LocalEnvelope => "local-envelope",
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(ScheduleKind::Global),
            "local-exact" => Ok(ScheduleKind::LocalExact),
            "local-envelope" => Ok(ScheduleKind::LocalEnvelope),
            other => Err(format!("unknown schedule kind `{other}`")),
        }
    }
}

/// A positive function `s ↦ g(s)` on `[0, 1]` that drives a schedule.
pub trait GapModel: Sync {
    fn gap(&self, s: f64) -> f64;

    /// Interior points where the model is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn kind(&self) -> ScheduleKind {
        ScheduleKind::LocalExact
    }
}

/// The exact numerical gap. Solver failures surface as `NaN`, which the
/// quadrature reports as a singularity at that `s`.
impl GapModel for GapFunction<'_> {
    fn gap(&self, s: f64) -> f64 {
        self.eval(s).unwrap_or(f64::NAN)
    }
}

impl GapModel for GapEnvelope {
    fn gap(&self, s: f64) -> f64 {
        self.eval(s)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.a, self.b]
    }

    fn kind(&self) -> ScheduleKind {
        ScheduleKind::LocalEnvelope
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantGap(pub f64);

impl GapModel for ConstantGap {
    fn gap(&self, _s: f64) -> f64 {
        self.0
    }
}

/// Wraps a closure as a gap model.
pub struct FnGap<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> GapModel for FnGap<F> {
    fn gap(&self, s: f64) -> f64 {
        (self.0)(s)
    }
}

fn check_inputs(d_norm: f64, epsilon: f64) -> Result<(), ScheduleError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ScheduleError::BadEpsilon(epsilon));
    }
    if !(d_norm > 0.0 && d_norm.is_finite()) {
        return Err(ScheduleError::BadNorm(d_norm));
    }
    Ok(())
}

fn inverse_square(model: &dyn GapModel) -> impl FnMut(f64) -> f64 + '_ {
    move |s| {
        let g = model.gap(s);
        if g > 0.0 {
            1.0 / (g * g)
        } else {
            f64::NAN
        }
    }
}

fn split_points(model: &dyn GapModel) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut inner: Vec<f64> = model
        .breakpoints()
        .into_iter()
        .filter(|&x| x > 0.0 && x < 1.0)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(1.0);
    pts
}

/// `T = (1/ε)∫₀¹ D/g(s)² ds` to relative tolerance `1e−8`.
pub fn total_time(model: &dyn GapModel, d_norm: f64, epsilon: f64) -> Result<f64, ScheduleError> {
    check_inputs(d_norm, epsilon)?;
    let r = integrate(
        inverse_square(model),
        &split_points(model),
        &QuadSettings::default(),
    )?;
    Ok(d_norm * r.value / epsilon)
}

#[derive(Debug, Clone)]
pub struct Schedule {
    kind: ScheduleKind,
    epsilon: f64,
    total_time: f64,
    d_norm: f64,
    t: Vec<f64>,
    s: Vec<f64>,
    g: Vec<f64>,
    s_of_t: Option<MonotoneCubic>,
    t_of_s: Option<MonotoneCubic>,
}

impl Schedule {
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn d_norm(&self) -> f64 {
        self.d_norm
    }

    /// Table columns `(t, s, g_model(s))`.
    pub fn table(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.t, &self.s, &self.g)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn s_at(&self, t: f64) -> f64 {
        match &self.s_of_t {
            Some(c) => c.eval(t),
            None if self.total_time > 0.0 => (t / self.total_time).clamp(0.0, 1.0),
            None => 1.0,
        }
    }

    pub fn t_at(&self, s: f64) -> f64 {
        match &self.t_of_s {
            Some(c) => c.eval(s),
            None => s.clamp(0.0, 1.0) * self.total_time,
        }
    }

    /// `ds/dt` of the interpolated schedule at table node `j`.
    pub fn rate_at_node(&self, j: usize) -> f64 {
        match &self.s_of_t {
            Some(c) => c.node_slopes()[j],
            None => 1.0 / self.total_time,
        }
    }

    /// Fraction of the total time spent with `|s − center| ≤ half_width`.
    pub fn time_fraction_near(&self, center: f64, half_width: f64) -> f64 {
        let lo = (center - half_width).clamp(0.0, 1.0);
        let hi = (center + half_width).clamp(0.0, 1.0);
        (self.t_at(hi) - self.t_at(lo)) / self.total_time
    }
}

/// Linear schedule with `T = D/(ε·g_min²)` using the exact `D` of `inst`.
pub fn global_schedule(
    inst: &ProblemInstance,
    epsilon: f64,
    g_min: f64,
) -> Result<Schedule, ScheduleError> {
    global_schedule_with_norm(
        dhds_spectral_norm(inst).value,
        epsilon,
        g_min,
        DEFAULT_NODES,
    )
}

pub fn global_schedule_with_norm(
    d_norm: f64,
    epsilon: f64,
    g_min: f64,
    nodes: usize,
) -> Result<Schedule, ScheduleError> {
    check_inputs(d_norm, epsilon)?;
    if !(g_min > 0.0 && g_min.is_finite()) {
        return Err(ScheduleError::BadGap(g_min));
    }
    let total = d_norm / (epsilon * g_min * g_min);
    let nodes = nodes.max(2);
    let last = (nodes - 1) as f64;
    let s: Vec<f64> = (0..nodes).map(|j| j as f64 / last).collect();
    let t: Vec<f64> = s.iter().map(|&x| x * total).collect();
    Ok(Schedule {
        kind: ScheduleKind::Global,
        epsilon,
        total_time: total,
        d_norm,
        t,
        s,
        g: vec![g_min; nodes],
        s_of_t: None,
        t_of_s: None,
    })
}

pub fn local_schedule(
    inst: &ProblemInstance,
    model: &dyn GapModel,
    epsilon: f64,
    nodes: usize,
) -> Result<Schedule, ScheduleError> {
    local_schedule_with_norm(model, dhds_spectral_norm(inst).value, epsilon, nodes)
}

/// Tabulates `t(s) = (1/ε)∫₀ˢ D/g² dσ` at `nodes` points and inverts it.
///
/// Nodes equidistribute the mixed measure `(t(s)/T + s)/2`, so half of them
/// follow the `1/g²` density and the rest keep a uniform floor; model
/// breakpoints are always nodes.
pub fn local_schedule_with_norm(
    model: &dyn GapModel,
    d_norm: f64,
    epsilon: f64,
    nodes: usize,
) -> Result<Schedule, ScheduleError> {
    check_inputs(d_norm, epsilon)?;
    if nodes < MIN_LOCAL_NODES {
        return Err(ScheduleError::TooFewNodes(nodes));
    }
    let pieces = QuadSettings {
        rel_tol: 1e-11,
        ..QuadSettings::default()
    };

    // Pilot pass on a uniform grid merged with the breakpoints.
    let mut pilot: Vec<f64> = (0..nodes).map(|j| j as f64 / (nodes - 1) as f64).collect();
    pilot.extend(split_points(model));
    pilot.sort_by(f64::total_cmp);
    pilot.dedup();
    let pilot_cum = cumulative(model, &pilot, &pieces)?;
    let pilot_total = *pilot_cum.last().expect("pilot nodes");
    let measure: Vec<f64> = pilot
        .iter()
        .zip(&pilot_cum)
        .map(|(&s, &c)| 0.5 * (c / pilot_total + s))
        .collect();

    let mut s_nodes: Vec<f64> = (0..nodes)
        .map(|j| invert_linear(&measure, &pilot, j as f64 / (nodes - 1) as f64))
        .collect();
    s_nodes[0] = 0.0;
    s_nodes[nodes - 1] = 1.0;
    for bp in split_points(model) {
        let k = s_nodes.partition_point(|&x| x < bp);
        if k < s_nodes.len() && s_nodes[k] == bp {
            continue;
        }
        // Snap the nearer neighbour onto the breakpoint when it is interior.
        let snap = if k == 0 || k == s_nodes.len() {
            None
        } else if bp - s_nodes[k - 1] < s_nodes[k] - bp && k > 1 {
            Some(k - 1)
        } else if k < s_nodes.len() - 1 {
            Some(k)
        } else {
            None
        };
        match snap {
            Some(i) => s_nodes[i] = bp,
            None => s_nodes.insert(k, bp),
        }
    }
    s_nodes.dedup();

    let cum = cumulative(model, &s_nodes, &pieces)?;
    let scale = d_norm / epsilon;
    let t: Vec<f64> = cum.iter().map(|c| c * scale).collect();
    let g: Vec<f64> = s_nodes.iter().map(|&s| model.gap(s)).collect();
    if let Some(j) = g.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(ScheduleError::Singularity { at: s_nodes[j] });
    }
    let rates: Vec<f64> = g.iter().map(|&x| epsilon * x * x / d_norm).collect();
    let delays: Vec<f64> = rates.iter().map(|r| 1.0 / r).collect();
    let total = *t.last().expect("nodes");
    let s_of_t = MonotoneCubic::new(t.clone(), s_nodes.clone(), Some(rates));
    let t_of_s = MonotoneCubic::new(s_nodes.clone(), t.clone(), Some(delays));
    Ok(Schedule {
        kind: model.kind(),
        epsilon,
        total_time: total,
        d_norm,
        t,
        s: s_nodes,
        g,
        s_of_t: Some(s_of_t),
        t_of_s: Some(t_of_s),
    })
}

/// `∫₀^{s_j} dσ/g²` at each point of the increasing grid `s`.
fn cumulative(
    model: &dyn GapModel,
    s: &[f64],
    settings: &QuadSettings,
) -> Result<Vec<f64>, ScheduleError> {
    let mut out = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in s.windows(2) {
        acc += integrate(inverse_square(model), &[w[0], w[1]], settings)?.value;
        out.push(acc);
    }
    Ok(out)
}

fn invert_linear(y: &[f64], x: &[f64], target: f64) -> f64 {
    let k = y.partition_point(|&v| v < target).clamp(1, y.len() - 1);
    let (y0, y1) = (y[k - 1], y[k]);
    if y1 <= y0 {
        return x[k];
    }
    x[k - 1] + (target - y0) / (y1 - y0) * (x[k] - x[k - 1])
}
