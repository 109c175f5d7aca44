use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{GainSpec, Netlist, Quantity, Task, Text};
use crate::algebra::text::{parse_expr_at, parse_scalar_at};
use crate::algebra::{ModeRegistry, OperatorExpr};
use crate::error::{Error, Result};
use crate::lindblad::{CMatrix, DensityMatrix, DEFAULT_LEAK_THRESHOLD};
use crate::oracle::DEFAULT_AMPLIFIER_DIM;
use crate::slh::{combine_loops, compensate_linear, AmplifierParams, EffectiveModel, EliminationScheme, FeedbackLoopSpec};
use crate::units::{Dimension, Unit};

pub const DEFAULT_POINTS: usize = 101;
/// Normalization time for correlation delays, 0.2 ns.
pub const DEFAULT_TAU_STAR_US: f64 = 2e-4;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialMode {
    Vacuum,
    Fock(usize),
    Coherent(Complex64),
    Thermal(f64),
}

#[derive(Clone, Debug)]
pub struct ResolvedLoop {
    pub id: String,
    pub line: usize,
    pub spec: FeedbackLoopSpec,
}

#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub task: Task,
    pub line: usize,
    pub mode: String,
    pub t_max: Option<f64>,
    pub n_points: usize,
    pub tau_max: Option<f64>,
    pub n_tau: usize,
    pub tau_star: f64,
    pub initial: Vec<(String, InitialMode)>,
    pub compensate_linear: bool,
    pub high_gain: bool,
    pub elimination: EliminationScheme,
    pub kappa_ratios: Vec<f64>,
    pub gamma_ref: Option<f64>,
    pub t_probe: Option<f64>,
    pub amp_dim: usize,
    pub leak_threshold: f64,
    pub inputs: BTreeMap<String, f64>,
}

/// A netlist with every literal evaluated, in internal units.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub registry: Arc<ModeRegistry>,
    /// `(name, internal value, declared unit)`.
    pub params: Vec<(String, f64, Unit)>,
    pub plant_h: OperatorExpr,
    pub loops: Vec<ResolvedLoop>,
    pub run: Option<ResolvedRun>,
}

struct Scope {
    values: BTreeMap<String, f64>,
    dims: BTreeMap<String, Dimension>,
}

fn real(c: Complex64, text: &Text) -> Result<f64> {
    if c.im.abs() > 1e-12 * c.re.abs().max(1.0) || !c.re.is_finite() {
        return Err(Error::parse(
            text.span.line,
            text.span.column,
            format!("`{}` must evaluate to a finite real number, got {c}", text.text),
        ));
    }
    Ok(c.re)
}

fn dimension_name(d: Dimension) -> &'static str {
    match d {
        Dimension::Rate => "a rate (MHz_over_2pi or rad_per_us)",
        Dimension::Amplitude => "a drive amplitude (sq_MHz_over_2pi or sqrt_rad_per_us)",
        Dimension::Angle => "an angle (rad)",
        Dimension::Time => "a time (us or ns)",
        Dimension::None => "dimensionless",
    }
}

impl Scope {
    fn quantity(&self, q: &Quantity, expected: Dimension, what: &str) -> Result<f64> {
        let t = &q.expr;
        let (line, col) = (t.span.line, t.span.column);
        let empty = BTreeMap::new();
        let uses_params = parse_scalar_at(&t.text, &empty, line, col).is_err();
        let v = real(parse_scalar_at(&t.text, &self.values, line, col)?, t)?;
        match q.unit {
            Some(u) if uses_params => Err(Error::parse(
                line,
                col,
                format!(
                    "`{what}` uses parameters, which are already in internal units; drop the `{}` suffix",
                    u.suffix()
                ),
            )),
            Some(u) => {
                let ok = u.dimension() == expected || (expected == Dimension::None && u == Unit::Dimensionless);
                if !ok {
                    return Err(Error::parse(
                        line,
                        col,
                        format!("`{what}` must be {}, got `{}`", dimension_name(expected), u.suffix()),
                    ));
                }
                if u == Unit::SqMhzOver2Pi && v < 0.0 {
                    return Err(Error::parse(line, col, format!("`{what}` in sq_MHz_over_2pi must be >= 0")));
                }
                Ok(u.to_internal(v))
            }
            None if uses_params => {
                if let Some(d) = self.dims.get(t.text.trim()) {
                    if *d != expected && !(expected == Dimension::None && *d == Dimension::None) {
                        return Err(Error::parse(
                            line,
                            col,
                            format!("`{what}` must be {}, but `{}` is not", dimension_name(expected), t.text.trim()),
                        ));
                    }
                }
                Ok(v)
            }
            None if expected == Dimension::None => Ok(v),
            None => Err(Error::parse(
                line,
                col + t.text.chars().count(),
                format!("unit suffix missing on `{what}`: expected {}", dimension_name(expected)),
            )),
        }
    }

    fn operator(&self, t: &Text, registry: &Arc<ModeRegistry>) -> Result<OperatorExpr> {
        parse_expr_at(&t.text, registry, &self.values, t.span.line, t.span.column)
    }

    fn scalar(&self, text: &str, anchor: &Text) -> Result<f64> {
        let t = Text {
            text: text.to_string(),
            span: anchor.span,
        };
        real(parse_scalar_at(text, &self.values, anchor.span.line, anchor.span.column)?, &t)
    }
}

fn parse_initial(t: &Text, scope: &Scope, registry: &ModeRegistry) -> Result<Vec<(String, InitialMode)>> {
    let (line, col) = (t.span.line, t.span.column);
    let text = t.text.trim();
    if text == "vacuum" {
        return Ok(Vec::new());
    }
    let mut out: Vec<(String, InitialMode)> = Vec::new();
    let mut items = Vec::new();
    let (mut depth, mut start) = (0i32, None);
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if c.is_whitespace() && depth == 0 {
            if let Some(s) = start.take() {
                items.push(&text[s..i]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        items.push(&text[s..]);
    }
    for item in items {
        let bad = || {
            Error::parse(
                line,
                col,
                format!("invalid initial state `{item}`: expected vacuum, fock(k)@m, coherent(re[, im])@m or thermal(n)@m"),
            )
        };
        let (call, mode) = item.rsplit_once('@').ok_or_else(bad)?;
        let open = call.find('(').ok_or_else(bad)?;
        if !call.ends_with(')') {
            return Err(bad());
        }
        let kind = &call[..open];
        let args: Vec<f64> = call[open + 1..call.len() - 1]
            .split(',')
            .map(|a| scope.scalar(a.trim(), t))
            .collect::<Result<_>>()?;
        if registry.index_of(mode).is_none() {
            return Err(Error::parse(line, col, format!("unknown mode `{mode}` in initial state")));
        }
        if out.iter().any(|(m, _)| m == mode) {
            return Err(Error::parse(line, col, format!("mode `{mode}` given twice in initial state")));
        }
        let state = match (kind, args.as_slice()) {
            ("fock", [k]) if *k >= 0.0 && k.fract() == 0.0 => InitialMode::Fock(*k as usize),
            ("coherent", [re]) => InitialMode::Coherent(Complex64::new(*re, 0.0)),
            ("coherent", [re, im]) => InitialMode::Coherent(Complex64::new(*re, *im)),
            ("thermal", [n]) if *n >= 0.0 => InitialMode::Thermal(*n),
            ("vacuum", _) => InitialMode::Vacuum,
            _ => return Err(bad()),
        };
        out.push((mode.to_string(), state));
    }
    Ok(out)
}

impl Netlist {
    pub fn resolve(&self) -> Result<Resolved> {
        if self.modes.is_empty() {
            return Err(Error::parse(1, 1, "no modes declared: add a [modes] section"));
        }
        for m in &self.modes {
            if m.dim < 2 {
                return Err(Error::parse(m.span.line, m.span.column, format!("truncation of `{}` must be >= 2", m.label)));
            }
        }
        let registry = ModeRegistry::new(self.modes.iter().map(|m| (m.label.as_str(), m.dim)))
            .map_err(|e| e.at(self.modes[0].span.line, "modes"))?;

        let mut scope = Scope {
            values: BTreeMap::new(),
            dims: BTreeMap::new(),
        };
        let mut params = Vec::new();
        for p in &self.params {
            if registry.index_of(&p.name).is_some() {
                log::debug!("parameter `{}` shares its name with a mode", p.name);
            }
            let unit = p.value.unit.expect("parameters always carry a unit");
            let bare = Scope {
                values: BTreeMap::new(),
                dims: BTreeMap::new(),
            };
            let v = bare.quantity(&p.value, unit.dimension(), &p.name)?;
            scope.values.insert(p.name.clone(), v);
            scope.dims.insert(p.name.clone(), unit.dimension());
            params.push((p.name.clone(), v, unit));
        }

        let plant_h = match &self.plant_h {
            Some(t) => scope.operator(t, &registry)?,
            None => OperatorExpr::zero(&registry),
        };

        let mut loops = Vec::new();
        for l in &self.loops {
            let line = l.span.line;
            let ctx = format!("loop {}", l.id);
            let theta = scope.quantity(&l.theta, Dimension::Angle, "theta")?;
            let op_l = scope.operator(&l.l, &registry)?;
            let op_lf = scope.operator(&l.l_f, &registry)?;
            let amp = match &l.gain {
                GainSpec::Rates { kappa, xi } => AmplifierParams::from_kappa_xi(
                    scope.quantity(kappa, Dimension::Rate, "kappa")?,
                    scope.quantity(xi, Dimension::Rate, "xi")?,
                ),
                GainSpec::Gain(g) => AmplifierParams::from_gain(scope.quantity(g, Dimension::None, "G0")?),
            }
            .map_err(|e| e.at(line, ctx.clone()))?;
            let drive = match &l.drive {
                Some(q) => scope.quantity(q, Dimension::Amplitude, "A")?,
                None => 0.0,
            };
            let phi = match &l.phi {
                Some(q) => scope.quantity(q, Dimension::Angle, "phi")?,
                None => 0.0,
            };
            if phi.abs() > PI * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("phi = {phi} lies outside [-pi, pi]")).at(line, ctx));
            }
            let mut spec = FeedbackLoopSpec::new(plant_h.clone(), theta, op_l, op_lf, amp, drive, phi)
                .map_err(|e| e.at(line, ctx.clone()))?;
            if let Some(m) = &l.amplifier_mode {
                spec.amplifier_mode = m.clone();
                spec.validate().map_err(|e| e.at(line, ctx.clone()))?;
            }
            loops.push(ResolvedLoop {
                id: l.id.clone(),
                line,
                spec,
            });
        }

        let run = match &self.run {
            None => None,
            Some(r) => {
                let line = r.span.line;
                let mode = match &r.mode {
                    Some(m) => {
                        registry.require(m).map_err(|e| e.at(line, "run"))?;
                        m.clone()
                    }
                    None => registry.label(0).to_string(),
                };
                let opt = |q: &Option<Quantity>, d: Dimension, what: &str| -> Result<Option<f64>> {
                    q.as_ref().map(|q| scope.quantity(q, d, what)).transpose()
                };
                let mut inputs = BTreeMap::new();
                for (k, q) in &r.inputs {
                    let d = if k.starts_with('G') {
                        Dimension::None
                    } else if k.starts_with('A') {
                        Dimension::Amplitude
                    } else {
                        Dimension::Rate
                    };
                    inputs.insert(k.clone(), scope.quantity(q, d, k)?);
                }
                let kappa_ratios = match &r.kappa_ratios {
                    Some(t) => t
                        .text
                        .split(',')
                        .map(|s| scope.scalar(s.trim(), t))
                        .collect::<Result<Vec<_>>>()?,
                    None => Vec::new(),
                };
                let initial = match &r.initial_state {
                    Some(t) => parse_initial(t, &scope, &registry)?,
                    None => Vec::new(),
                };
                Some(ResolvedRun {
                    task: r.task,
                    line,
                    mode,
                    t_max: opt(&r.t_max, Dimension::Time, "t_max")?,
                    n_points: r.n_points.unwrap_or(DEFAULT_POINTS),
                    tau_max: opt(&r.tau_max, Dimension::Time, "tau_max")?,
                    n_tau: r.n_tau.unwrap_or(DEFAULT_POINTS),
                    tau_star: opt(&r.tau_star, Dimension::Time, "tau_star")?.unwrap_or(DEFAULT_TAU_STAR_US),
                    initial,
                    compensate_linear: r.compensate_linear,
                    high_gain: r.high_gain,
                    elimination: r.elimination,
                    kappa_ratios,
                    gamma_ref: opt(&r.gamma_ref, Dimension::Rate, "gamma_ref")?,
                    t_probe: opt(&r.t_probe, Dimension::Time, "t_probe")?,
                    amp_dim: r.amp_dim.unwrap_or(DEFAULT_AMPLIFIER_DIM),
                    leak_threshold: r.leak_threshold.unwrap_or(DEFAULT_LEAK_THRESHOLD),
                    inputs,
                })
            }
        };

        Ok(Resolved {
            registry,
            params,
            plant_h,
            loops,
            run,
        })
    }
}

impl Resolved {
    pub fn scheme(&self) -> (EliminationScheme, bool, bool) {
        match &self.run {
            Some(r) => (r.elimination, r.high_gain, r.compensate_linear),
            None => (EliminationScheme::default(), false, false),
        }
    }

    /// Effective single-plant model: every loop eliminated and summed, the
    /// plant Hamiltonian counted once.
    pub fn model(&self) -> Result<EffectiveModel> {
        let (scheme, high_gain, compensate) = self.scheme();
        let model = if self.loops.is_empty() {
            let m = EffectiveModel::closed(self.plant_h.clone());
            m.validate()?;
            m
        } else {
            let zero = OperatorExpr::zero(&self.registry);
            for l in &self.loops {
                combine_loops(&zero, std::slice::from_ref(&l.spec), scheme, high_gain)
                    .map_err(|e| e.at(l.line, format!("loop {}", l.id)))?;
            }
            let specs: Vec<FeedbackLoopSpec> = self.loops.iter().map(|l| l.spec.clone()).collect();
            combine_loops(&self.plant_h, &specs, scheme, high_gain)?
        };
        Ok(if compensate { compensate_linear(&model) } else { model })
    }

    /// Product initial state; modes not listed start in vacuum.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let listed: &[(String, InitialMode)] = self.run.as_ref().map(|r| r.initial.as_slice()).unwrap_or(&[]);
        let mut m = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for mode in self.registry.modes() {
            let single = ModeRegistry::new([(mode.label.as_str(), mode.dim)])?;
            let kind = listed
                .iter()
                .find(|(l, _)| *l == mode.label)
                .map(|(_, k)| k.clone())
                .unwrap_or(InitialMode::Vacuum);
            let rho = match kind {
                InitialMode::Vacuum => DensityMatrix::vacuum(&single),
                InitialMode::Fock(k) => DensityMatrix::fock(&single, &[k])?,
                InitialMode::Coherent(alpha) => DensityMatrix::coherent(&single, &[alpha])?,
                InitialMode::Thermal(n) => DensityMatrix::thermal(&single, &[n])?,
            };
            m = m.kronecker(rho.matrix());
        }
        DensityMatrix::from_matrix(&self.registry, m)
    }
}
