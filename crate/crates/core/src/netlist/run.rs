use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use super::resolve::{Resolved, ResolvedRun};
use super::{Netlist, Task, KERR_INPUTS, QUARTIC_INPUTS};
use crate::algebra::text::format_monomial;
use crate::algebra::Monomial;
use crate::error::{Error, Result};
use crate::lindblad::{
    integrate, steady_state, DensityMatrix, IntegratorOptions, IntegratorStats, LeakReport, Liouvillian,
    SteadyStateOptions,
};
use crate::observables::{along, fano_factor, g2, g2_zero, non_gaussianity};
use crate::oracle::{elimination_error, OracleOptions};
use crate::slh::{kerr_coefficients, quartic_coefficients, Bath, EffectiveModel, QuarticInputs};
use crate::units::rad_per_us_to_mhz;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// One output data file.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[idx] {
                    Cell::Num(v) => *v,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }

    pub fn render(&self, format: OutputFormat, task: Task, hash: &str) -> String {
        match format {
            OutputFormat::Csv => {
                let mut s = format!("# slhfb task={} netlist_sha256={hash}\n", task.name());
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r.iter().map(Cell::csv).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            OutputFormat::Json => {
                let rows: Vec<Vec<Json>> = self.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect();
                let doc = json!({
                    "task": task.name(),
                    "netlist_sha256": hash,
                    "columns": self.columns,
                    "rows": rows,
                });
                serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub task: Task,
    pub tables: Vec<Table>,
    pub summary: String,
    pub manifest: Json,
    pub files: Vec<PathBuf>,
}

fn num(v: f64) -> Cell {
    Cell::Num(v)
}

fn linspace(end: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![end];
    }
    (0..n).map(|k| end * k as f64 / (n - 1) as f64).collect()
}

pub fn netlist_hash(netlist: &Netlist) -> String {
    let digest = Sha256::digest(netlist.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn dual(v: f64) -> String {
    format!("{v:+.9e} rad/us = {:+.9e} MHz/2pi", rad_per_us_to_mhz(v))
}

/// Human-readable effective model with every Hamiltonian coefficient in
/// both angular and ν/2π units.
pub fn format_model(model: &EffectiveModel) -> String {
    let reg = model.h.registry();
    let mut s = String::from("H_eff:\n");
    if model.h.is_empty() {
        s.push_str("  0\n");
    }
    for (m, c) in model.h.terms() {
        let op = if m.is_identity() {
            "1".to_string()
        } else {
            format_monomial(reg, m)
        };
        let _ = writeln!(s, "  {op}: re {} ; im {}", dual(c.re), dual(c.im));
    }
    s.push_str("channels (rate x dissipator; operator coefficients in sqrt(rad/us)):\n");
    if model.channels.is_empty() {
        s.push_str("  none\n");
    }
    for ch in &model.channels {
        let bath = match ch.bath {
            Bath::Vacuum => "vacuum".to_string(),
            Bath::Squeezed { n, m_re, m_im } => format!("squeezed N={n:?} M=({m_re:?},{m_im:?})"),
        };
        let _ = writeln!(s, "  {:?} x D[{}] ({bath})", ch.rate, ch.op);
    }
    s
}

fn model_json(model: &EffectiveModel) -> Json {
    json!({
        "hamiltonian": model.h.to_string(),
        "channels": model.channels.iter().map(|c| json!({
            "operator": c.op.to_string(),
            "rate": c.rate,
            "bath": c.bath,
        })).collect::<Vec<_>>(),
    })
}

fn leak_json(reports: &[LeakReport]) -> Json {
    json!(reports
        .iter()
        .map(|l| json!({"mode": l.mode, "population": l.population, "threshold": l.threshold, "exceeded": l.exceeded}))
        .collect::<Vec<_>>())
}

/// Worst leak per mode over a set of states.
fn worst_leaks(states: &[DensityMatrix], threshold: f64) -> Vec<LeakReport> {
    let mut worst: Vec<LeakReport> = Vec::new();
    for rho in states {
        for l in rho.leak_report(threshold) {
            match worst.iter_mut().find(|w| w.mode == l.mode) {
                Some(w) if w.population < l.population => *w = l,
                Some(_) => {}
                None => worst.push(l),
            }
        }
    }
    for w in &worst {
        if w.exceeded {
            log::warn!("truncation leak on mode `{}`: {:e} > {:e}", w.mode, w.population, w.threshold);
        }
    }
    worst
}

fn require<T: Copy>(v: Option<T>, run: &ResolvedRun, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::parse(run.line, 1, format!("task {} needs `{key}`", run.task.name())))
}

fn input(run: &ResolvedRun, key: &str) -> Result<f64> {
    require(run.inputs.get(key).copied(), run, key)
}

struct Outcome {
    tables: Vec<Table>,
    summary: String,
    extra: Json,
}

struct Context<'a> {
    resolved: &'a Resolved,
    run: &'a ResolvedRun,
}

impl Context<'_> {
    fn model(&self) -> Result<(EffectiveModel, Liouvillian)> {
        let model = self.resolved.model()?;
        let liou = Liouvillian::build(&model, &self.resolved.registry).map_err(|e| e.at(self.run.line, "run"))?;
        Ok((model, liou))
    }

    fn trajectory(&self) -> Result<(EffectiveModel, crate::lindblad::Trajectory)> {
        let (model, liou) = self.model()?;
        let t_max = require(self.run.t_max, self.run, "t_max")?;
        let times = linspace(t_max, self.run.n_points);
        let rho0 = self.resolved.initial_state()?;
        let traj = integrate(&liou, &rho0, &times, &IntegratorOptions::default())?;
        Ok((model, traj))
    }

    fn stats_json(stats: &IntegratorStats) -> Json {
        serde_json::to_value(stats).unwrap_or(Json::Null)
    }

    fn time_series(&self) -> Result<Outcome> {
        let (model, traj) = self.trajectory()?;
        let reg = &self.resolved.registry;
        let mode = self.run.mode.as_str();
        let leaks = worst_leaks(&traj.states, self.run.leak_threshold);
        let mut summary = format_model(&model);
        let table = match self.run.task {
            Task::Evolve => {
                let mut cols = vec!["t_us".to_string()];
                cols.extend(reg.modes().iter().map(|m| format!("n_{}", m.label)));
                cols.extend(["purity".to_string(), "trace".to_string()]);
                let mut t = Table {
                    name: "evolve".into(),
                    columns: cols,
                    rows: Vec::new(),
                };
                let numbers: Vec<_> = reg
                    .modes()
                    .iter()
                    .map(|m| crate::lindblad::annihilation_matrix(reg, &m.label).map(|a| a.adjoint() * a))
                    .collect::<Result<_>>()?;
                for (time, rho) in traj.times.iter().zip(&traj.states) {
                    let mut row = vec![num(*time)];
                    row.extend(numbers.iter().map(|n| num(rho.expect(n).re)));
                    row.push(num(rho.purity()));
                    row.push(num(rho.trace().re));
                    t.push(row);
                }
                t
            }
            Task::Fano => {
                let mut t = Table::new("fano", &["t_us", "n", "fano"]);
                let fano = along(&traj.states, |r| Ok(fano_factor(r, mode).unwrap_or(f64::NAN)))?;
                let n = along(&traj.states, |r| Ok(mean_photons(r, mode)))?;
                for ((time, f), n) in traj.times.iter().zip(&fano).zip(&n) {
                    t.push(vec![num(*time), num(*n), num(*f)]);
                }
                let last = fano.last().copied().unwrap_or(f64::NAN);
                let _ = writeln!(summary, "final Fano factor F = {last:.6} ({})", if last < 1.0 { "sub-Poissonian" } else { "not sub-Poissonian" });
                t
            }
            Task::Nongauss => {
                let mut t = Table::new("nongauss", &["t_us", "n", "delta"]);
                let delta = along(&traj.states, |r| non_gaussianity(r, mode))?;
                let n = along(&traj.states, |r| Ok(mean_photons(r, mode)))?;
                for ((time, d), n) in traj.times.iter().zip(&delta).zip(&n) {
                    t.push(vec![num(*time), num(*n), num(*d)]);
                }
                let (k, peak) = delta
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (k, d)| if d > acc.1 { (k, d) } else { acc });
                let _ = writeln!(summary, "peak non-Gaussianity delta = {peak:.6} at t = {} us", traj.times[k]);
                t
            }
            _ => unreachable!("not a time-series task"),
        };
        Ok(Outcome {
            tables: vec![table],
            summary,
            extra: json!({
                "model": model_json(&model),
                "integrator": Self::stats_json(&traj.stats),
                "leaks": leak_json(&leaks),
            }),
        })
    }

    fn steady(&self) -> Result<Outcome> {
        let (model, liou) = self.model()?;
        let rho = steady_state(&liou, &SteadyStateOptions::default())?;
        let mode = self.run.mode.as_str();
        let idx = self.resolved.registry.require(mode)?;
        let leaks = worst_leaks(std::slice::from_ref(&rho), self.run.leak_threshold);
        let mut summary = format_model(&model);
        let n = mean_photons(&rho, mode);
        let _ = writeln!(summary, "steady state of mode {mode}: <n> = {n:.6}");
        for (name, v) in [
            ("Fano factor", fano_factor(&rho, mode)),
            ("g2(0)", g2_zero(&rho, mode)),
            ("non-Gaussianity", non_gaussianity(&rho, mode)),
        ] {
            match v {
                Ok(v) => {
                    let _ = writeln!(summary, "  {name} = {v:.6}");
                }
                Err(e) => {
                    let _ = writeln!(summary, "  {name}: {e}");
                }
            }
        }
        let outcome_extra = json!({"model": model_json(&model), "leaks": leak_json(&leaks)});
        match self.run.task {
            Task::Steady => {
                let mut t = Table::new("steady", &["level", "population"]);
                for (k, p) in rho.mode_populations(idx).iter().enumerate() {
                    t.push(vec![num(k as f64), num(*p)]);
                }
                Ok(Outcome {
                    tables: vec![t],
                    summary,
                    extra: outcome_extra,
                })
            }
            _ => {
                let tau_max = require(self.run.tau_max, self.run, "tau_max")?;
                let taus = linspace(tau_max, self.run.n_tau);
                let values = g2(&liou, &rho, mode, &taus, &IntegratorOptions::default())?;
                let mut t = Table::new("g2", &["tau_us", "tau_over_tau_star", "g2"]);
                for (tau, g) in taus.iter().zip(&values) {
                    t.push(vec![num(*tau), num(tau / self.run.tau_star), num(*g)]);
                }
                let later = values.iter().skip(1).copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(
                    summary,
                    "g2(0) = {:.6}; max over tau > 0 = {later:.6} ({})",
                    values[0],
                    if later > values[0] { "antibunched" } else { "no antibunching" }
                );
                Ok(Outcome {
                    tables: vec![t],
                    summary,
                    extra: outcome_extra,
                })
            }
        }
    }

    fn kerr(&self) -> Result<Outcome> {
        let g0 = input(self.run, "G0")?;
        let gamma = input(self.run, "gamma_a")?;
        let a_t = input(self.run, "A_T")?;
        let k = kerr_coefficients(g0, gamma, a_t).map_err(|e| e.at(self.run.line, "kerr-coeffs"))?;
        let mut t = Table::new("coefficients", &["name", "rad_per_us", "MHz_over_2pi"]);
        let mut rows = vec![("delta", k.delta), ("chi", k.chi)];
        if let Some(w) = self.run.inputs.get("omega_a") {
            rows.push(("omega_a_minus_delta", w - k.delta));
        }
        let mut summary = String::new();
        if !self.resolved.loops.is_empty() {
            let model = self.resolved.model()?;
            let reg = &self.resolved.registry;
            let idx = reg.require(&self.run.mode)?;
            let n2 = model.h.coefficient(&Monomial::single(reg.len(), idx, 2, 2)).re;
            let n1 = model.h.coefficient(&Monomial::single(reg.len(), idx, 1, 1)).re;
            rows.push(("model_ad2a2", n2));
            rows.push(("model_ada", n1));
            summary.push_str(&format_model(&model));
        }
        for (name, v) in &rows {
            t.push(vec![Cell::Text(name.to_string()), num(*v), num(rad_per_us_to_mhz(*v))]);
            let _ = writeln!(summary, "{name} = {}", dual(*v));
        }
        Ok(Outcome {
            tables: vec![t],
            summary,
            extra: json!({"kerr": k}),
        })
    }

    fn quartic(&self) -> Result<Outcome> {
        let v = |k: &str| input(self.run, k);
        let inputs = QuarticInputs {
            g1: v("G1")?,
            g3: v("G3")?,
            gamma: v("gamma")?,
            gamma1: v("gamma1")?,
            gamma2: v("gamma2")?,
            gamma3: v("gamma3")?,
            a1: v("A1")?,
            a3: v("A3")?,
            a4: v("A4")?,
        };
        let q = quartic_coefficients(&inputs).map_err(|e| e.at(self.run.line, "quartic-coeffs"))?;
        let mut t = Table::new("coefficients", &["name", "rad_per_us", "MHz_over_2pi"]);
        let mut summary = String::new();
        for (name, c) in [("chi1", q.chi1), ("chi2", q.chi2), ("chi3", q.chi3), ("chi4", q.chi4)] {
            t.push(vec![Cell::Text(name.into()), num(c), num(rad_per_us_to_mhz(c))]);
            let _ = writeln!(summary, "{name} = {}", dual(c));
        }
        let _ = writeln!(
            summary,
            "balancing loop 2: G2 = {:?}, A2 = {:?} sqrt(rad/us) (A2^2/2pi = {:?} MHz)",
            q.g2,
            q.a2,
            rad_per_us_to_mhz(q.a2 * q.a2)
        );
        Ok(Outcome {
            tables: vec![t],
            summary,
            extra: json!({"quartic": q, "inputs": inputs}),
        })
    }

    fn oracle(&self) -> Result<Outcome> {
        let line = self.run.line;
        if self.resolved.loops.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "oracle-sweep needs exactly one loop, found {}",
                self.resolved.loops.len()
            ))
            .at(line, "run"));
        }
        let gamma = require(self.run.gamma_ref, self.run, "gamma_ref")?;
        if self.run.kappa_ratios.is_empty() {
            return Err(Error::parse(line, 1, "task oracle-sweep needs `kappa_ratios`"));
        }
        let t_probe = self.run.t_probe.unwrap_or(3.0 / gamma);
        let opts = OracleOptions {
            amp_dim: self.run.amp_dim,
            leak_threshold: self.run.leak_threshold,
            scheme: self.run.elimination,
            integrator: IntegratorOptions::default(),
        };
        let spec = &self.resolved.loops[0].spec;
        let rho0 = self.resolved.initial_state()?;
        let table = elimination_error(spec, &rho0, gamma, &self.run.kappa_ratios, t_probe, &opts)
            .map_err(|e| e.at(self.resolved.loops[0].line, format!("loop {}", self.resolved.loops[0].id)))?;
        let mut t = Table::new(
            "oracle",
            &["ratio", "kappa_rad_per_us", "kappa_MHz_over_2pi", "trace_distance"],
        );
        let mut summary = format!(
            "elimination check ({} scheme), t_probe = {t_probe} us, amplifier truncation {}\n",
            table.scheme, self.run.amp_dim
        );
        for r in &table.rows {
            t.push(vec![num(r.ratio), num(r.kappa), num(rad_per_us_to_mhz(r.kappa)), num(r.trace_distance)]);
            let _ = writeln!(summary, "  kappa/gamma = {:>8}: trace distance {:.6}", r.ratio, r.trace_distance);
        }
        let _ = writeln!(summary, "verdict: {}", table.verdict.name());
        Ok(Outcome {
            tables: vec![t],
            summary,
            extra: json!({"oracle": table}),
        })
    }
}

fn mean_photons(rho: &DensityMatrix, mode: &str) -> f64 {
    crate::lindblad::annihilation_matrix(rho.registry(), mode)
        .map(|a| rho.expect(&(a.adjoint() * a)).re)
        .unwrap_or(f64::NAN)
}

fn params_json(resolved: &Resolved) -> Json {
    json!(resolved
        .params
        .iter()
        .map(|(name, v, unit)| {
            let mut p = json!({"name": name, "declared_unit": unit.suffix(), "internal": v});
            if unit.dimension() == crate::units::Dimension::Rate {
                p["rad_per_us"] = json!(v);
                p["MHz_over_2pi"] = json!(rad_per_us_to_mhz(*v));
            }
            p
        })
        .collect::<Vec<_>>())
}

fn loops_json(resolved: &Resolved) -> Json {
    json!(resolved
        .loops
        .iter()
        .map(|l| {
            let s = &l.spec;
            json!({
                "id": l.id,
                "theta": s.theta,
                "L": s.l.to_string(),
                "L_f": s.l_f.to_string(),
                "G0": s.amp.gain(),
                "r0": s.amp.r0(),
                "kappa": s.amp.kappa(),
                "xi": s.amp.xi(),
                "N": s.amp.n_bath(),
                "M": s.amp.m_bath(),
                "A": s.drive,
                "phi": s.phi,
                "amplifier_mode": s.amplifier_mode,
            })
        })
        .collect::<Vec<_>>())
}

/// Runs the netlist's task. With `out_dir` set, writes the data file(s),
/// `summary.txt`, `manifest.json` and the canonical `netlist.net`.
pub fn run(netlist: &Netlist, out_dir: Option<&Path>, format: OutputFormat) -> Result<RunReport> {
    let resolved = netlist.resolve()?;
    let run = resolved
        .run
        .as_ref()
        .ok_or_else(|| Error::parse(1, 1, "netlist has no [run] section"))?;
    let ctx = Context {
        resolved: &resolved,
        run,
    };
    let outcome = match run.task {
        Task::Evolve | Task::Fano | Task::Nongauss => ctx.time_series()?,
        Task::Steady | Task::G2 => ctx.steady()?,
        Task::KerrCoeffs => ctx.kerr()?,
        Task::QuarticCoeffs => ctx.quartic()?,
        Task::OracleSweep => ctx.oracle()?,
    };
    let hash = netlist_hash(netlist);
    let (scheme, high_gain, compensate) = resolved.scheme();
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut manifest = json!({
        "tool": "slhfb",
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "netlist_sha256": hash,
        "task": run.task.name(),
        "modes": resolved.registry.modes(),
        "params": params_json(&resolved),
        "loops": loops_json(&resolved),
        "elimination": scheme.name(),
        "high_gain": high_gain,
        "compensate_linear": compensate,
        "observable_mode": run.mode,
        "units": {"rate": "rad_per_us", "time": "us", "amplitude": "sqrt_rad_per_us"},
        "coefficient_inputs": run.inputs,
        "details": outcome.extra,
    });
    let known: Vec<&str> = KERR_INPUTS.iter().chain(QUARTIC_INPUTS.iter()).copied().collect();
    debug_assert!(run.inputs.keys().all(|k| known.contains(&k.as_str())));

    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for t in &outcome.tables {
            let path = dir.join(format!("{}.{}", t.name, format.extension()));
            std::fs::write(&path, t.render(format, run.task, &hash))?;
            files.push(path);
        }
        let summary_path = dir.join("summary.txt");
        std::fs::write(&summary_path, &outcome.summary)?;
        files.push(summary_path);
        let net_path = dir.join("netlist.net");
        std::fs::write(&net_path, netlist.to_string())?;
        files.push(net_path);
        manifest["outputs"] = json!(files
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect::<Vec<_>>());
        let manifest_path = dir.join("manifest.json");
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        files.push(manifest_path);
    }
    Ok(RunReport {
        task: run.task,
        tables: outcome.tables,
        summary: outcome.summary,
        manifest,
        files,
    })
}
