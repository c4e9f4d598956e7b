//! TOML experiment configuration: strict schema, defaults and cross-field
//! validation that reports every violation at once.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slitlab_core::field::Grid2D;
use slitlab_core::propagate::Absorber;
use slitlab_core::reference::PhysicsScenario;
use slitlab_core::regularize::{
    sample_delta_eps, sample_h_eps, PowerLaw, RegFamilySpec, RegKind, SlitConfig,
};
use slitlab_core::verify::TestFunction;

pub const SCHEMA_VERSION: u32 = 1;

/// Boundary cells kept free between the screen and the box edge.
const SCREEN_MARGIN_CELLS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Simulate,
    Sweep,
    Born,
    Compare,
    Decay,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Simulate => "simulate",
            Study::Sweep => "sweep",
            Study::Born => "born",
            Study::Compare => "compare",
            Study::Decay => "decay",
        }
    }

    /// Minimum ε schedule length the study needs.
    pub fn min_schedule(self) -> usize {
        match self {
            Study::Sweep => 4,
            Study::Decay => 5,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x_min: f64,
    pub y_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub p0: f64,
    pub x0: f64,
    pub t0: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub x1: f64,
    /// Observation time; defaults to `t0 + T`.
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SlitMode {
    Single,
    Double,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SlitsSection {
    pub mode: SlitMode,
    pub d: Option<f64>,
    pub a: Option<f64>,
    pub intervals: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Box,
    Mollified,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSection {
    pub kind: KindName,
    /// `H_ε = h0·ε^{−α}`.
    pub alpha: Option<f64>,
    pub h0: Option<f64>,
    /// `c_ε = c0·ε^{c_exponent}`.
    pub c0: Option<f64>,
    pub c_exponent: Option<f64>,
    /// Plateau half-width `r0/ε`.
    pub plateau_r0: Option<f64>,
    pub plateau_edge: Option<f64>,
    /// ε for single-run studies.
    pub eps: Option<f64>,
    /// Explicit ε schedule (strictly decreasing).
    pub schedule: Option<Vec<f64>>,
    /// `[k_lo, k_hi]` for the dyadic schedule `2^{−k}`.
    pub schedule_k: Option<[i32; 2]>,
    /// Defaults to `−x0`.
    pub packet_center: Option<f64>,
    pub packet_width_x: Option<f64>,
    pub packet_width_y: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub stride: Option<usize>,
    pub absorb_strength: Option<f64>,
    pub absorb_width: Option<usize>,
    pub monitor_width: Option<usize>,
    pub boundary_threshold: Option<f64>,
    pub norm_drift_threshold: Option<f64>,
    /// Decay study: bound on `dt·max V`.
    pub phase_budget: Option<f64>,
    /// Decay study: bound on `dt/c_ε²`.
    pub dt_per_c2: Option<f64>,
    pub born_iterations: Option<usize>,
    pub born_lambda: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub study: Option<Study>,
    /// Decay study test functions `[cx, cy, wx, wy]`.
    pub test_functions: Option<Vec<[f64; 4]>>,
    /// Decay study evolution time.
    pub t_end: Option<f64>,
    pub correlation_min: Option<f64>,
    pub fringe_tolerance: Option<f64>,
    pub slope_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub dump_fields: Option<bool>,
}

/// The document as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub slits: SlitsSection,
    pub regularization: RegularizationSection,
    pub solver: SolverSection,
    pub experiment: Option<ExperimentSection>,
    pub output: Option<OutputSection>,
}

/// Every violation found while loading, in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration problem(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const SECTIONS: &[(&str, &[&str], &[&str])] = &[
    (
        "grid",
        &["nx", "ny", "lx", "ly", "x_min", "y_min"],
        &["nx", "ny", "lx", "ly", "x_min", "y_min"],
    ),
    (
        "physics",
        &["p0", "x0", "t0", "T", "x1", "t1"],
        &["p0", "x0", "t0", "T", "x1"],
    ),
    ("slits", &["mode", "d", "a", "intervals"], &["mode"]),
    (
        "regularization",
        &[
            "kind",
            "alpha",
            "h0",
            "c0",
            "c_exponent",
            "plateau_r0",
            "plateau_edge",
            "eps",
            "schedule",
            "schedule_k",
            "packet_center",
            "packet_width_x",
            "packet_width_y",
        ],
        &["kind"],
    ),
    (
        "solver",
        &[
            "dt",
            "stride",
            "absorb_strength",
            "absorb_width",
            "monitor_width",
            "boundary_threshold",
            "norm_drift_threshold",
            "phase_budget",
            "dt_per_c2",
            "born_iterations",
            "born_lambda",
        ],
        &["dt"],
    ),
    (
        "experiment",
        &[
            "study",
            "test_functions",
            "t_end",
            "correlation_min",
            "fringe_tolerance",
            "slope_min",
        ],
        &[],
    ),
    ("output", &["directory", "dump_fields"], &[]),
];

const REQUIRED_SECTIONS: &[&str] = &["grid", "physics", "slits", "regularization", "solver"];

/// Unknown and missing keys across the whole document.
fn schema_violations(doc: &toml::Table) -> Vec<String> {
    let mut out = Vec::new();
    for (key, value) in doc {
        if key == "schema_version" {
            continue;
        }
        match SECTIONS.iter().find(|s| s.0 == key) {
            None => out.push(format!("unknown top-level key `{key}`")),
            Some((name, allowed, _)) => match value.as_table() {
                None => out.push(format!("`{name}` must be a table")),
                Some(t) => {
                    for k in t.keys() {
                        if !allowed.contains(&k.as_str()) {
                            out.push(format!("unknown key `{name}.{k}`"));
                        }
                    }
                }
            },
        }
    }
    if !doc.contains_key("schema_version") {
        out.push("missing required key `schema_version`".into());
    }
    for (name, _, required) in SECTIONS {
        match doc.get(*name).and_then(|v| v.as_table()) {
            Some(t) => {
                for r in *required {
                    if !t.contains_key(*r) {
                        out.push(format!("missing required key `{name}.{r}`"));
                    }
                }
            }
            None if REQUIRED_SECTIONS.contains(name) && !doc.contains_key(*name) => {
                out.push(format!("missing required section `[{name}]`"));
            }
            None => {}
        }
    }
    out
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub grid: Grid2D,
    pub slits: SlitConfig,
    pub spec: RegFamilySpec,
    pub schedule: Vec<f64>,
    pub eps: f64,
    pub t1: f64,
    pub test_functions: Vec<TestFunction>,
    pub output_dir: PathBuf,
}

pub const DEFAULT_TEST_FUNCTIONS: [[f64; 4]; 3] = [
    [0.0, 0.0, 0.5, 1.5],
    [-0.3, 1.0, 0.5, 1.0],
    [0.3, -0.5, 0.5, 1.0],
];

impl RawConfig {
    /// Fills every optional key with its documented default.
    pub fn with_defaults(mut self) -> Self {
        let r = &mut self.regularization;
        let mollified = r.kind == KindName::Mollified;
        r.alpha.get_or_insert(if mollified { 0.4 } else { 1.0 });
        r.h0.get_or_insert(1.0);
        r.c0.get_or_insert(1.0);
        r.c_exponent.get_or_insert(1.0);
        r.plateau_r0.get_or_insert(1.0);
        r.plateau_edge.get_or_insert(1.0);
        if r.schedule.is_none() && r.schedule_k.is_none() {
            r.schedule_k = Some([2, 8]);
        }
        r.packet_center.get_or_insert(-self.physics.x0);
        r.packet_width_x.get_or_insert(1.0);
        r.packet_width_y.get_or_insert(1.0);
        self.physics
            .t1
            .get_or_insert(self.physics.t0 + self.physics.big_t);
        let s = &mut self.solver;
        s.stride.get_or_insert(1);
        s.absorb_width.get_or_insert(32);
        s.monitor_width.get_or_insert(4);
        s.boundary_threshold.get_or_insert(1e-3);
        s.norm_drift_threshold.get_or_insert(1e-9);
        s.phase_budget.get_or_insert(0.05);
        s.dt_per_c2.get_or_insert(0.25);
        s.born_iterations.get_or_insert(5);
        s.born_lambda.get_or_insert(1.0);
        let e = self.experiment.get_or_insert(ExperimentSection {
            study: None,
            test_functions: None,
            t_end: None,
            correlation_min: None,
            fringe_tolerance: None,
            slope_min: None,
        });
        e.test_functions
            .get_or_insert(DEFAULT_TEST_FUNCTIONS.to_vec());
        e.t_end.get_or_insert(self.physics.t0);
        e.correlation_min.get_or_insert(0.9);
        e.fringe_tolerance.get_or_insert(0.1);
        e.slope_min.get_or_insert(0.8);
        let o = self.output.get_or_insert(OutputSection {
            directory: None,
            dump_fields: None,
        });
        o.directory.get_or_insert_with(|| PathBuf::from("out"));
        o.dump_fields.get_or_insert(false);
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("`{name}` = {v} must be positive"));
    }
}

fn resolve_slits(s: &SlitsSection, errs: &mut Vec<String>) -> Option<SlitConfig> {
    let built = match s.mode {
        SlitMode::Single => match s.d {
            Some(d) => SlitConfig::single_slit(d),
            None => {
                errs.push("`slits.d` is required for mode = \"single\"".into());
                return None;
            }
        },
        SlitMode::Double => match (s.a, s.d) {
            (Some(a), Some(d)) => SlitConfig::double_slit(a, d),
            _ => {
                errs.push("`slits.a` and `slits.d` are required for mode = \"double\"".into());
                return None;
            }
        },
        SlitMode::Custom => match &s.intervals {
            Some(iv) => SlitConfig::new(iv.iter().map(|p| (p[0], p[1])).collect()),
            None => {
                errs.push("`slits.intervals` is required for mode = \"custom\"".into());
                return None;
            }
        },
    };
    built.map_err(|e| errs.push(format!("slits: {e}"))).ok()
}

fn resolve_spec(raw: &RawConfig) -> RegFamilySpec {
    let r = &raw.regularization;
    RegFamilySpec {
        kind: match r.kind {
            KindName::Box => RegKind::Box,
            KindName::Mollified => RegKind::Mollified,
        },
        delta_support: PowerLaw::new(r.c0.unwrap_or(1.0), r.c_exponent.unwrap_or(1.0)),
        barrier_height: PowerLaw::new(r.h0.unwrap_or(1.0), -r.alpha.unwrap_or(1.0)),
        plateau: PowerLaw::new(r.plateau_r0.unwrap_or(1.0), -1.0),
        plateau_edge: r.plateau_edge.unwrap_or(1.0),
        packet_center: r.packet_center.unwrap_or(-raw.physics.x0),
        packet_width_x: PowerLaw::constant(r.packet_width_x.unwrap_or(1.0)),
        packet_width_y: PowerLaw::constant(r.packet_width_y.unwrap_or(1.0)),
    }
}

/// Cross-field checks on a defaulted document.
pub fn validate(raw: RawConfig, study: Study) -> Result<ExperimentConfig, ConfigErrors> {
    let raw = raw.with_defaults();
    let mut errs = Vec::new();
    if raw.schema_version != SCHEMA_VERSION {
        errs.push(format!(
            "schema_version = {} is not supported (expected {SCHEMA_VERSION})",
            raw.schema_version
        ));
    }
    let exp = raw.experiment.clone().expect("defaulted");
    if let Some(s) = exp.study {
        if s != study {
            errs.push(format!(
                "`experiment.study` = \"{}\" does not match the requested study \"{}\"",
                s.name(),
                study.name()
            ));
        }
    }

    let g = &raw.grid;
    let grid = Grid2D::new(g.nx, g.ny, g.lx, g.ly, g.x_min, g.y_min)
        .map_err(|e| errs.push(format!("grid: {e}")))
        .ok();

    let p = &raw.physics;
    for (name, v) in [
        ("physics.x0", p.x0),
        ("physics.t0", p.t0),
        ("physics.T", p.big_t),
        ("physics.x1", p.x1),
    ] {
        positive(&mut errs, name, v);
    }
    if !p.p0.is_finite() {
        errs.push("`physics.p0` must be finite".into());
    }
    let t1 = p.t1.expect("defaulted");
    if !(p.t0 < t1) {
        errs.push(format!(
            "`physics.t0` = {} must be smaller than `physics.t1` = {t1}",
            p.t0
        ));
    }
    if let Some(gr) = &grid {
        let right = gr.x_min() + gr.lx() - SCREEN_MARGIN_CELLS * gr.dx();
        if p.x1 > right {
            errs.push(format!(
                "`physics.x1` = {} must stay below the box right edge minus margin ({right})",
                p.x1
            ));
        }
        if gr
            .nearest_column(0.0)
            .map(|i| gr.x(i).abs() > 1e-9 * gr.dx())
            .unwrap_or(true)
        {
            errs.push("the grid must contain a column on the slit plane x = 0".into());
        }
    }

    let slits = resolve_slits(&raw.slits, &mut errs);
    let spec = resolve_spec(&raw);
    let r = &raw.regularization;
    let schedule = match (&r.schedule, r.schedule_k) {
        (Some(s), None) => s.clone(),
        (None, Some([lo, hi])) => slitlab_core::regularize::dyadic_schedule(lo, hi),
        (Some(_), Some(_)) => {
            errs.push(
                "give either `regularization.schedule` or `regularization.schedule_k`, not both"
                    .into(),
            );
            Vec::new()
        }
        (None, None) => unreachable!("defaulted"),
    };
    if schedule.len() < study.min_schedule() {
        errs.push(format!(
            "the {} study needs an ε schedule of length ≥ {}, got {}",
            study.name(),
            study.min_schedule(),
            schedule.len()
        ));
    }
    if let Err(e) = spec.check_schedule(&schedule) {
        errs.push(format!("regularization: {e}"));
    }
    let eps = r.eps.or_else(|| schedule.last().copied()).unwrap_or(0.0);
    positive(&mut errs, "regularization.eps", eps);

    let s = &raw.solver;
    positive(&mut errs, "solver.dt", s.dt);
    if s.stride == Some(0) {
        errs.push("`solver.stride` must be at least 1".into());
    }
    if let Some(a) = s.absorb_strength {
        if !(a >= 0.0) {
            errs.push("`solver.absorb_strength` must be non-negative".into());
        }
    }
    if s.dt > 0.0 && study != Study::Decay {
        let end = study_end_time(study, &raw);
        if steps_for(end, s.dt).is_none() {
            errs.push(format!(
                "`solver.dt` = {} must divide the run length {end} of the {} study",
                s.dt,
                study.name()
            ));
        } else if let (Some(n), Some(k)) = (steps_for(end, s.dt), s.stride) {
            if k > 0 && n % k != 0 {
                errs.push(format!(
                    "`solver.stride` = {k} must divide the step count {n}"
                ));
            }
        }
    }
    positive(
        &mut errs,
        "solver.phase_budget",
        s.phase_budget.expect("defaulted"),
    );
    positive(
        &mut errs,
        "solver.dt_per_c2",
        s.dt_per_c2.expect("defaulted"),
    );
    positive(&mut errs, "experiment.t_end", exp.t_end.expect("defaulted"));

    // Resolution of δ₀^ε and h_ε at every ε the study will sample.
    if let (Some(gr), Some(sl)) = (&grid, &slits) {
        let used: Vec<f64> = match study {
            Study::Sweep | Study::Decay => schedule.clone(),
            _ => vec![eps],
        };
        for e in used.into_iter().filter(|e| *e > 0.0) {
            if let Err(err) = sample_delta_eps(&spec, e, gr) {
                errs.push(format!("regularization at ε = {e}: {err}"));
            }
            if let Err(err) = sample_h_eps(&spec, sl, e, gr) {
                errs.push(format!("regularization at ε = {e}: {err}"));
            }
        }
    }

    // Packet placement is checked by sampling it on the grid.
    if let Some(gr) = &grid {
        if let Err(e) = slitlab_core::regularize::sample_initial(&spec, eps.max(1e-300), p.p0, gr) {
            errs.push(format!("initial packet: {e}"));
        }
    }

    let mut test_functions = Vec::new();
    for (i, t) in exp
        .test_functions
        .clone()
        .expect("defaulted")
        .iter()
        .enumerate()
    {
        match TestFunction::new(t[0], t[1], t[2], t[3]) {
            Ok(tf) => test_functions.push(tf),
            Err(e) => errs.push(format!("experiment.test_functions[{i}]: {e}")),
        }
    }

    if !errs.is_empty() {
        return Err(ConfigErrors(errs));
    }
    let output_dir = raw
        .output
        .as_ref()
        .and_then(|o| o.directory.clone())
        .expect("defaulted");
    Ok(ExperimentConfig {
        grid: grid.expect("checked"),
        slits: slits.expect("checked"),
        spec,
        schedule,
        eps,
        t1,
        test_functions,
        output_dir,
        raw,
    })
}

/// Length of the evolution a study runs; the comparison always ends at
/// `t0 + T`, the decay study sets its own steps.
fn study_end_time(study: Study, raw: &RawConfig) -> f64 {
    match study {
        Study::Compare => raw.physics.t0 + raw.physics.big_t,
        _ => raw.physics.t1.expect("defaulted"),
    }
}

/// `t / dt` when it is an integer up to roundoff.
pub fn steps_for(t: f64, dt: f64) -> Option<usize> {
    let n = (t / dt).round();
    (n >= 1.0 && (n * dt - t).abs() <= 1e-9 * t).then_some(n as usize)
}

impl ExperimentConfig {
    pub fn solver(&self) -> &SolverSection {
        &self.raw.solver
    }

    pub fn experiment(&self) -> &ExperimentSection {
        self.raw.experiment.as_ref().expect("defaulted")
    }

    pub fn dump_fields(&self) -> bool {
        self.raw
            .output
            .as_ref()
            .and_then(|o| o.dump_fields)
            .unwrap_or(false)
    }

    pub fn end_time(&self, study: Study) -> f64 {
        study_end_time(study, &self.raw)
    }

    pub fn steps(&self, study: Study) -> usize {
        steps_for(self.end_time(study), self.raw.solver.dt).expect("validated")
    }

    pub fn absorber(&self) -> Option<Absorber> {
        let s = &self.raw.solver;
        match s.absorb_strength {
            Some(a) if a > 0.0 => Some(Absorber {
                strength: a,
                width_cells: s.absorb_width.expect("defaulted"),
            }),
            _ => None,
        }
    }

    /// Scenario whose flight time ends at `t_end`.
    pub fn scenario(&self, t_end: f64) -> Result<PhysicsScenario, slitlab_core::Error> {
        let p = &self.raw.physics;
        PhysicsScenario::new(p.x0, p.t0, t_end - p.t0, p.x1, self.slits.clone())
    }
}

/// Parses and validates a document held in memory.
pub fn parse_config(text: &str, study: Study) -> Result<ExperimentConfig, ConfigErrors> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![format!("malformed TOML: {}", e.message())])
    })?;
    let schema = schema_violations(&doc);
    if !schema.is_empty() {
        return Err(ConfigErrors(schema));
    }
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| ConfigErrors(vec![format!("invalid value: {}", e.message())]))?;
    validate(raw, study)
}

pub fn load_config(path: &Path, study: Study) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text, study)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
schema_version = 1

[grid]
nx = 128
ny = 64
lx = 32.0
ly = 32.0
x_min = -16.0
y_min = -16.0

[physics]
p0 = 3.0
x0 = 8.0
t0 = 1.0
T = 1.0
x1 = 6.0

[slits]
mode = "single"
d = 1.0

[regularization]
kind = "box"
eps = 0.5

[solver]
dt = 0.01
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, Study::Simulate).unwrap();
        assert_eq!(c.t1, 2.0);
        assert_eq!(c.schedule.len(), 7);
        assert_eq!(c.spec.packet_center, -8.0);
        assert_eq!(c.raw.solver.stride, Some(1));
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.test_functions.len(), 3);
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let text = MINIMAL.replace("dt = 0.01", "dt = 0.01\ndtt = 1\n[extra]\nz = 1");
        let e = parse_config(&text, Study::Simulate).unwrap_err();
        assert_eq!(e.0.len(), 2, "{e}");
        assert!(e.0.iter().any(|m| m.contains("solver.dtt")));
        assert!(e.0.iter().any(|m| m.contains("extra")));
    }

    #[test]
    fn missing_keys_are_reported() {
        let text = MINIMAL
            .replace("nx = 128\n", "")
            .replace("schema_version = 1\n", "");
        let e = parse_config(&text, Study::Simulate).unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("grid.nx")));
        assert!(e.0.iter().any(|m| m.contains("schema_version")));
    }

    #[test]
    fn time_order_names_both_fields() {
        let text = MINIMAL.replace("x1 = 6.0", "x1 = 6.0\nt1 = 0.5");
        let e = parse_config(&text, Study::Simulate).unwrap_err();
        assert!(
            e.0.iter()
                .any(|m| m.contains("physics.t0") && m.contains("physics.t1")),
            "{e}"
        );
    }

    #[test]
    fn short_schedule_for_decay() {
        let text = MINIMAL.replace("eps = 0.5", "eps = 0.5\nschedule = [0.5, 0.25]");
        let e = parse_config(&text, Study::Decay).unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("decay")), "{e}");
    }

    #[test]
    fn several_violations_at_once() {
        let text = MINIMAL
            .replace("nx = 128", "nx = 60")
            .replace("dt = 0.01", "dt = -1.0")
            .replace("T = 1.0", "T = -1.0");
        let e = parse_config(&text, Study::Simulate).unwrap_err();
        assert!(e.0.len() >= 3, "{e}");
    }

    #[test]
    fn study_mismatch() {
        let text = format!("{MINIMAL}\n[experiment]\nstudy = \"born\"\n");
        assert!(parse_config(&text, Study::Simulate).is_err());
        assert!(parse_config(&text, Study::Born).is_ok());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse_config(MINIMAL, Study::Simulate).unwrap();
        let again = parse_config(&c.raw.to_toml(), Study::Simulate).unwrap();
        assert_eq!(again.raw, c.raw);
    }
}
