//! Netlist format.
//!
//! A netlist is a sequence of blocks of `key = value` lines; `#` starts a
//! comment.
//!
//! ```text
//! [modes]              label = truncation
//! [params]             name = <expr> <unit>
//! [plant]              H = <operator>
//! [loop <id>]          theta, L, L_f, kappa + xi | G0, A, phi, amplifier_mode
//! [run]                task = ... and task options
//! ```
//!
//! Dimensioned numbers carry a unit suffix (`MHz_over_2pi`, `rad_per_us`,
//! `sq_MHz_over_2pi`, `sqrt_rad_per_us`, `rad`, `us`, `ns`, `1`). An
//! expression that uses parameters takes no suffix: parameters are already
//! converted to internal units (rad/µs, µs, √(rad/µs)). Operator literals use
//! the grammar of [`crate::algebra::text`] with parameters in scope.
//!
//! The AST keeps expressions as source text so that sweeps and truncation
//! overrides can re-resolve them; [`Netlist`]'s `Display` prints a form that
//! parses back to an equal AST.

mod resolve;
mod run;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::slh::EliminationScheme;
use crate::units::Unit;

pub use resolve::{InitialMode, Resolved, ResolvedLoop, ResolvedRun};
pub use run::{format_model, netlist_hash, run, Cell, OutputFormat, RunReport, Table};

/// Source position. Positions never take part in AST equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Text {
    pub text: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quantity {
    pub expr: Text,
    pub unit: Option<Unit>,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Some(u) => write!(f, "{} {}", self.expr.text, u.suffix()),
            None => write!(f, "{}", self.expr.text),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeDecl {
    pub label: String,
    pub dim: usize,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Quantity,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GainSpec {
    Rates { kappa: Quantity, xi: Quantity },
    Gain(Quantity),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopDecl {
    pub id: String,
    pub theta: Quantity,
    pub l: Text,
    pub l_f: Text,
    pub gain: GainSpec,
    pub drive: Option<Quantity>,
    pub phi: Option<Quantity>,
    pub amplifier_mode: Option<String>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Evolve,
    Steady,
    G2,
    Fano,
    Nongauss,
    KerrCoeffs,
    QuarticCoeffs,
    OracleSweep,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Evolve,
        Task::Steady,
        Task::G2,
        Task::Fano,
        Task::Nongauss,
        Task::KerrCoeffs,
        Task::QuarticCoeffs,
        Task::OracleSweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Evolve => "evolve",
            Task::Steady => "steady",
            Task::G2 => "g2",
            Task::Fano => "fano",
            Task::Nongauss => "nongauss",
            Task::KerrCoeffs => "kerr-coeffs",
            Task::QuarticCoeffs => "quartic-coeffs",
            Task::OracleSweep => "oracle-sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

/// Inputs of the closed-form coefficient tasks.
pub const KERR_INPUTS: [&str; 4] = ["G0", "gamma_a", "A_T", "omega_a"];
pub const QUARTIC_INPUTS: [&str; 9] = ["G1", "G3", "gamma", "gamma1", "gamma2", "gamma3", "A1", "A3", "A4"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunBlock {
    pub task: Task,
    pub mode: Option<String>,
    pub t_max: Option<Quantity>,
    pub n_points: Option<usize>,
    pub tau_max: Option<Quantity>,
    pub n_tau: Option<usize>,
    pub tau_star: Option<Quantity>,
    pub initial_state: Option<Text>,
    pub compensate_linear: bool,
    pub high_gain: bool,
    pub elimination: EliminationScheme,
    pub kappa_ratios: Option<Text>,
    pub gamma_ref: Option<Quantity>,
    pub t_probe: Option<Quantity>,
    pub amp_dim: Option<usize>,
    pub leak_threshold: Option<f64>,
    /// Coefficient-task inputs, keyed by the names in [`KERR_INPUTS`] and
    /// [`QUARTIC_INPUTS`].
    pub inputs: Vec<(String, Quantity)>,
    pub span: Span,
}

impl RunBlock {
    fn new(task: Task, span: Span) -> Self {
        RunBlock {
            task,
            mode: None,
            t_max: None,
            n_points: None,
            tau_max: None,
            n_tau: None,
            tau_star: None,
            initial_state: None,
            compensate_linear: false,
            high_gain: false,
            elimination: EliminationScheme::default(),
            kappa_ratios: None,
            gamma_ref: None,
            t_probe: None,
            amp_dim: None,
            leak_threshold: None,
            inputs: Vec::new(),
            span,
        }
    }

    pub fn input(&self, name: &str) -> Option<&Quantity> {
        self.inputs.iter().find(|(k, _)| k == name).map(|(_, q)| q)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Netlist {
    pub modes: Vec<ModeDecl>,
    pub params: Vec<ParamDecl>,
    pub plant_h: Option<Text>,
    pub loops: Vec<LoopDecl>,
    pub run: Option<RunBlock>,
}

const RESERVED: [&str; 11] = ["a", "ad", "n", "x", "p", "i", "pi", "sqrt", "exp", "cos", "sin"];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn split_quantity(value: &str, span: Span) -> Quantity {
    if let Some((rest, last)) = value.rsplit_once(char::is_whitespace) {
        let rest = rest.trim_end();
        let dangling = rest.ends_with(['+', '-', '*', '/', '^', '(', ',']);
        if let (Some(unit), false) = (Unit::parse(last), dangling || rest.is_empty()) {
            return Quantity {
                expr: Text {
                    text: rest.to_string(),
                    span,
                },
                unit: Some(unit),
            };
        }
    }
    Quantity {
        expr: Text {
            text: value.to_string(),
            span,
        },
        unit: None,
    }
}

#[derive(PartialEq)]
enum Section {
    Modes,
    Params,
    Plant,
    Loop,
    Run,
}

#[derive(Default)]
struct LoopFields {
    id: String,
    span: Span,
    theta: Option<Quantity>,
    l: Option<Text>,
    l_f: Option<Text>,
    kappa: Option<Quantity>,
    xi: Option<Quantity>,
    g0: Option<Quantity>,
    drive: Option<Quantity>,
    phi: Option<Quantity>,
    amplifier_mode: Option<String>,
}

impl LoopFields {
    fn finish(self) -> Result<LoopDecl> {
        let missing = |what: &str| {
            Error::parse(self.span.line, self.span.column, format!("loop `{}` needs `{what}`", self.id))
        };
        let gain = match (self.kappa, self.xi, self.g0) {
            (Some(kappa), Some(xi), None) => GainSpec::Rates { kappa, xi },
            (None, None, Some(g)) => GainSpec::Gain(g),
            _ => {
                return Err(Error::parse(
                    self.span.line,
                    self.span.column,
                    format!("loop `{}` needs either both `kappa` and `xi` or `G0` alone", self.id),
                ))
            }
        };
        Ok(LoopDecl {
            theta: self.theta.ok_or_else(|| missing("theta"))?,
            l: self.l.ok_or_else(|| missing("L"))?,
            l_f: self.l_f.ok_or_else(|| missing("L_f"))?,
            id: self.id,
            gain,
            drive: self.drive,
            phi: self.phi,
            amplifier_mode: self.amplifier_mode,
            span: self.span,
        })
    }
}

fn parse_usize(value: &str, span: Span) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::parse(span.line, span.column, format!("expected a non-negative integer, found `{value}`")))
}

fn parse_bool(value: &str, span: Span) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::parse(span.line, span.column, format!("expected true or false, found `{value}`"))),
    }
}

impl Netlist {
    /// Parses and checks a netlist: every literal is evaluated once so that
    /// syntax, unit and mode errors are reported with their position.
    pub fn parse(text: &str) -> Result<Netlist> {
        let netlist = Self::parse_syntax(text)?;
        netlist.resolve()?;
        Ok(netlist)
    }

    fn parse_syntax(text: &str) -> Result<Netlist> {
        let mut nl = Netlist {
            modes: Vec::new(),
            params: Vec::new(),
            plant_h: None,
            loops: Vec::new(),
            run: None,
        };
        let mut section: Option<Section> = None;
        let mut seen_sections = BTreeSet::new();
        let mut keys = BTreeSet::new();
        let mut current_loop: Option<LoopFields> = None;
        let mut run_keys: Vec<(String, Text)> = Vec::new();
        let mut run_span = Span::default();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.chars().take_while(|c| c.is_whitespace()).count();
            let col = indent + 1;
            if trimmed.starts_with('[') {
                if !trimmed.ends_with(']') {
                    return Err(Error::parse(line, col, "unterminated section header"));
                }
                if let Some(lp) = current_loop.take() {
                    nl.loops.push(lp.finish()?);
                }
                keys.clear();
                let inner: Vec<&str> = trimmed[1..trimmed.len() - 1].split_whitespace().collect();
                let span = Span { line, column: col };
                let sec = match inner.as_slice() {
                    ["modes"] => Section::Modes,
                    ["params"] => Section::Params,
                    ["plant"] => Section::Plant,
                    ["run"] => {
                        run_span = span;
                        Section::Run
                    }
                    ["loop", id] => {
                        if !is_identifier(id) {
                            return Err(Error::parse(line, col, format!("invalid loop id `{id}`")));
                        }
                        if nl.loops.iter().any(|l| l.id == *id) {
                            return Err(Error::parse(line, col, format!("duplicate loop id `{id}`")));
                        }
                        current_loop = Some(LoopFields {
                            id: id.to_string(),
                            span,
                            ..Default::default()
                        });
                        Section::Loop
                    }
                    ["loop"] => return Err(Error::parse(line, col, "loop section needs an id: [loop <id>]")),
                    _ => {
                        return Err(Error::parse(
                            line,
                            col,
                            format!("unknown section `{}`", &trimmed[1..trimmed.len() - 1]),
                        ))
                    }
                };
                if sec != Section::Loop && !seen_sections.insert(inner[0].to_string()) {
                    return Err(Error::parse(line, col, format!("duplicate section [{}]", inner[0])));
                }
                section = Some(sec);
                continue;
            }
            let Some(eq) = content.find('=') else {
                return Err(Error::parse(line, col, format!("expected `key = value`, found `{trimmed}`")));
            };
            let key = content[..eq].trim();
            let after = &content[eq + 1..];
            let value = after.trim();
            let value_col = content[..eq].chars().count() + 2 + after.chars().take_while(|c| c.is_whitespace()).count();
            let span = Span { line, column: value_col };
            if !is_identifier(key) {
                return Err(Error::parse(line, col, format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::parse(line, value_col, format!("missing value for `{key}`")));
            }
            let Some(sec) = &section else {
                return Err(Error::parse(line, col, "key outside of any section"));
            };
            if !keys.insert(key.to_string()) {
                return Err(Error::parse(line, col, format!("duplicate key `{key}`")));
            }
            let text_of = |v: &str| Text {
                text: v.to_string(),
                span,
            };
            match sec {
                Section::Modes => nl.modes.push(ModeDecl {
                    label: key.to_string(),
                    dim: parse_usize(value, span)?,
                    span,
                }),
                Section::Params => {
                    if RESERVED.contains(&key) {
                        return Err(Error::parse(line, col, format!("`{key}` is reserved and cannot name a parameter")));
                    }
                    let q = split_quantity(value, span);
                    if q.unit.is_none() {
                        return Err(Error::parse(
                            line,
                            value_col + value.chars().count(),
                            format!("unit suffix missing on parameter `{key}`"),
                        ));
                    }
                    nl.params.push(ParamDecl {
                        name: key.to_string(),
                        value: q,
                        span,
                    });
                }
                Section::Plant => match key {
                    "H" => nl.plant_h = Some(text_of(value)),
                    _ => return Err(Error::parse(line, col, format!("unknown plant key `{key}` (expected H)"))),
                },
                Section::Loop => {
                    let lp = current_loop.as_mut().expect("loop section without loop state");
                    match key {
                        "theta" => lp.theta = Some(split_quantity(value, span)),
                        "L" => lp.l = Some(text_of(value)),
                        "L_f" => lp.l_f = Some(text_of(value)),
                        "kappa" => lp.kappa = Some(split_quantity(value, span)),
                        "xi" => lp.xi = Some(split_quantity(value, span)),
                        "G0" => lp.g0 = Some(split_quantity(value, span)),
                        "A" => lp.drive = Some(split_quantity(value, span)),
                        "phi" => lp.phi = Some(split_quantity(value, span)),
                        "amplifier_mode" => {
                            if !is_identifier(value) {
                                return Err(Error::parse(line, value_col, format!("invalid mode label `{value}`")));
                            }
                            lp.amplifier_mode = Some(value.to_string())
                        }
                        _ => return Err(Error::parse(line, col, format!("unknown loop key `{key}`"))),
                    }
                }
                Section::Run => run_keys.push((key.to_string(), text_of(value))),
            }
        }
        if let Some(lp) = current_loop.take() {
            nl.loops.push(lp.finish()?);
        }
        if seen_sections.contains("run") {
            nl.run = Some(Self::parse_run(run_keys, run_span)?);
        }
        Ok(nl)
    }

    fn parse_run(entries: Vec<(String, Text)>, span: Span) -> Result<RunBlock> {
        let task_entry = entries
            .iter()
            .find(|(k, _)| k == "task")
            .ok_or_else(|| Error::parse(span.line, span.column, "[run] needs `task`"))?;
        let task = Task::parse(&task_entry.1.text).ok_or_else(|| {
            let names: Vec<&str> = Task::ALL.iter().map(|t| t.name()).collect();
            Error::parse(
                task_entry.1.span.line,
                task_entry.1.span.column,
                format!("unknown task `{}` (expected one of {})", task_entry.1.text, names.join(", ")),
            )
        })?;
        let mut run = RunBlock::new(task, span);
        for (key, v) in entries {
            let s = v.span;
            let value = v.text.as_str();
            match key.as_str() {
                "task" => {}
                "mode" => run.mode = Some(value.to_string()),
                "t_max" => run.t_max = Some(split_quantity(value, s)),
                "n_points" => run.n_points = Some(parse_usize(value, s)?),
                "tau_max" => run.tau_max = Some(split_quantity(value, s)),
                "n_tau" => run.n_tau = Some(parse_usize(value, s)?),
                "tau_star" => run.tau_star = Some(split_quantity(value, s)),
                "initial_state" => run.initial_state = Some(v.clone()),
                "compensate_linear" => run.compensate_linear = parse_bool(value, s)?,
                "high_gain" => run.high_gain = parse_bool(value, s)?,
                "elimination" => {
                    run.elimination = EliminationScheme::parse(value).ok_or_else(|| {
                        Error::parse(s.line, s.column, format!("unknown elimination scheme `{value}` (printed or cascaded)"))
                    })?
                }
                "kappa_ratios" => run.kappa_ratios = Some(v.clone()),
                "gamma_ref" => run.gamma_ref = Some(split_quantity(value, s)),
                "t_probe" => run.t_probe = Some(split_quantity(value, s)),
                "amp_dim" => run.amp_dim = Some(parse_usize(value, s)?),
                "leak_threshold" => {
                    run.leak_threshold = Some(value.parse().map_err(|_| {
                        Error::parse(s.line, s.column, format!("expected a number, found `{value}`"))
                    })?)
                }
                k if KERR_INPUTS.contains(&k) || QUARTIC_INPUTS.contains(&k) => {
                    run.inputs.push((k.to_string(), split_quantity(value, s)))
                }
                _ => return Err(Error::parse(s.line, 1, format!("unknown run key `{key}`"))),
            }
        }
        Ok(run)
    }

    /// Copy with one mode's truncation replaced.
    pub fn with_truncation(&self, label: &str, dim: usize) -> Result<Netlist> {
        let mut nl = self.clone();
        let m = nl
            .modes
            .iter_mut()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))?;
        m.dim = dim;
        Ok(nl)
    }

    /// Copy with a parameter's numeric value replaced (in its declared unit).
    pub fn with_param(&self, name: &str, value: f64) -> Result<Netlist> {
        let mut nl = self.clone();
        let p = nl
            .params
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("no parameter named `{name}`")))?;
        p.value.expr.text = format!("{value:?}");
        Ok(nl)
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[modes]")?;
        for m in &self.modes {
            writeln!(f, "{} = {}", m.label, m.dim)?;
        }
        if !self.params.is_empty() {
            writeln!(f, "\n[params]")?;
            for p in &self.params {
                writeln!(f, "{} = {}", p.name, p.value)?;
            }
        }
        if let Some(h) = &self.plant_h {
            writeln!(f, "\n[plant]\nH = {}", h.text)?;
        }
        for l in &self.loops {
            writeln!(f, "\n[loop {}]", l.id)?;
            writeln!(f, "theta = {}", l.theta)?;
            writeln!(f, "L = {}", l.l.text)?;
            writeln!(f, "L_f = {}", l.l_f.text)?;
            match &l.gain {
                GainSpec::Rates { kappa, xi } => writeln!(f, "kappa = {kappa}\nxi = {xi}")?,
                GainSpec::Gain(g) => writeln!(f, "G0 = {g}")?,
            }
            if let Some(a) = &l.drive {
                writeln!(f, "A = {a}")?;
            }
            if let Some(p) = &l.phi {
                writeln!(f, "phi = {p}")?;
            }
            if let Some(m) = &l.amplifier_mode {
                writeln!(f, "amplifier_mode = {m}")?;
            }
        }
        if let Some(r) = &self.run {
            writeln!(f, "\n[run]\ntask = {}", r.task.name())?;
            if let Some(m) = &r.mode {
                writeln!(f, "mode = {m}")?;
            }
            let quantities = [
                ("t_max", &r.t_max),
                ("tau_max", &r.tau_max),
                ("tau_star", &r.tau_star),
                ("gamma_ref", &r.gamma_ref),
                ("t_probe", &r.t_probe),
            ];
            for (k, q) in quantities {
                if let Some(q) = q {
                    writeln!(f, "{k} = {q}")?;
                }
            }
            for (k, n) in [("n_points", r.n_points), ("n_tau", r.n_tau), ("amp_dim", r.amp_dim)] {
                if let Some(n) = n {
                    writeln!(f, "{k} = {n}")?;
                }
            }
            if let Some(s) = &r.initial_state {
                writeln!(f, "initial_state = {}", s.text)?;
            }
            if let Some(s) = &r.kappa_ratios {
                writeln!(f, "kappa_ratios = {}", s.text)?;
            }
            if let Some(t) = r.leak_threshold {
                writeln!(f, "leak_threshold = {t:?}")?;
            }
            writeln!(f, "compensate_linear = {}", r.compensate_linear)?;
            writeln!(f, "high_gain = {}", r.high_gain)?;
            writeln!(f, "elimination = {}", r.elimination.name())?;
            for (k, q) in &r.inputs {
                writeln!(f, "{k} = {q}")?;
            }
        }
        Ok(())
    }
}
