//! Scenario files: a TOML document with `schema`, `name`, `seed` and
//! exactly one family section.

use serde::{Deserialize, Serialize};
use std::fmt;

pub const SCHEMA_VERSION: u32 = 1;

/// One field-level problem found while parsing or validating.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed scenario: {0}")]
    Syntax(String),
    #[error("invalid scenario:\n{}", list(.0))]
    Invalid(Vec<FieldError>),
}

fn list(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

impl ConfigError {
    pub fn fields(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Syntax(_) => &[],
        }
    }
}

/// Result of [`parse_scenario`]: the validated scenario plus the dotted
/// paths of keys the schema does not know.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub scenario: Scenario,
    pub unknown: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub seed: Option<u64>,
    /// Output subdirectory; defaults to `name`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localtime: Option<LocalTimeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propdecay: Option<PropDecaySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waveop: Option<WaveOpSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eikonal: Option<EikonalSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xsection: Option<XSectionSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub localmotion: Option<LocalMotionSpec>,
}

/// Scenario families, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Evolve,
    LocalTime,
    PropDecay,
    WaveOp,
    Eikonal,
    Partition,
    Uncertainty,
    XSection,
    LocalMotion,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Evolve,
        Family::LocalTime,
        Family::PropDecay,
        Family::WaveOp,
        Family::Eikonal,
        Family::Partition,
        Family::Uncertainty,
        Family::XSection,
        Family::LocalMotion,
    ];

    pub fn section(self) -> &'static str {
        match self {
            Family::Evolve => "evolve",
            Family::LocalTime => "localtime",
            Family::PropDecay => "propdecay",
            Family::WaveOp => "waveop",
            Family::Eikonal => "eikonal",
            Family::Partition => "partition",
            Family::Uncertainty => "uncertainty",
            Family::XSection => "xsection",
            Family::LocalMotion => "localmotion",
        }
    }
}

impl Scenario {
    /// The family whose section is present. Only meaningful after validation.
    pub fn family(&self) -> Family {
        self.families()[0]
    }

    fn families(&self) -> Vec<Family> {
        let present = [
            self.evolve.is_some(),
            self.localtime.is_some(),
            self.propdecay.is_some(),
            self.waveop.is_some(),
            self.eikonal.is_some(),
            self.partition.is_some(),
            self.uncertainty.is_some(),
            self.xsection.is_some(),
            self.localmotion.is_some(),
        ];
        Family::ALL.iter().zip(present).filter(|(_, p)| *p).map(|(f, _)| *f).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated scenarios carry a seed")
    }

    pub fn output_dir(&self) -> &str {
        self.output.as_deref().unwrap_or(&self.name)
    }

    /// The scenario with every default filled in, as TOML.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut c = Checker::default();
        if self.schema != SCHEMA_VERSION {
            c.push("schema", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if self.name.trim().is_empty() {
            c.push("name", "must not be empty");
        }
        let dir = self.output_dir();
        if dir.is_empty() || dir.contains(['/', '\\']) || dir == "." || dir == ".." {
            c.push(if self.output.is_some() { "output" } else { "name" }, "must be a plain directory name");
        }
        if self.seed.is_none() {
            c.push("seed", "missing (a seed is mandatory)");
        }
        match self.families().len() {
            0 => c.push("scenario", "no family section (expected one of evolve, localtime, propdecay, waveop, eikonal, partition, uncertainty, xsection, localmotion)"),
            1 => {}
            _ => c.push("scenario", "more than one family section"),
        }
        if let Some(s) = &self.evolve {
            c.nested("evolve", |c| s.check(c));
        }
        if let Some(s) = &self.localtime {
            c.nested("localtime", |c| s.check(c));
        }
        if let Some(s) = &self.propdecay {
            c.nested("propdecay", |c| s.check(c));
        }
        if let Some(s) = &self.waveop {
            c.nested("waveop", |c| s.check(c));
        }
        if let Some(s) = &self.eikonal {
            c.nested("eikonal", |c| s.check(c));
        }
        if let Some(s) = &self.partition {
            c.nested("partition", |c| s.check(c));
        }
        if let Some(s) = &self.uncertainty {
            c.nested("uncertainty", |c| s.check(c));
        }
        if let Some(s) = &self.xsection {
            c.nested("xsection", |c| s.check(c));
        }
        if let Some(s) = &self.localmotion {
            c.nested("localmotion", |c| s.check(c));
        }
        c.finish()
    }
}

/// Parses and validates scenario text. In strict mode unknown keys are
/// errors; otherwise they are returned in [`Parsed::unknown`].
pub fn parse_scenario(text: &str, strict: bool) -> Result<Parsed, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut unknown = Vec::new();
    let scenario: Scenario =
        serde_ignored::deserialize(de, |path| unknown.push(dotted(&path))).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if strict && !unknown.is_empty() {
        return Err(ConfigError::Invalid(
            unknown.iter().map(|k| FieldError { field: k.clone(), message: "unknown key".into() }).collect(),
        ));
    }
    scenario.validate()?;
    Ok(Parsed { scenario, unknown })
}

/// `a.b[2].c`, skipping the wrapper segments serde inserts for options.
fn dotted(path: &serde_ignored::Path) -> String {
    use serde_ignored::Path as P;
    match path {
        P::Root => String::new(),
        P::Seq { parent, index } => format!("{}[{index}]", dotted(parent)),
        P::Map { parent, key } => {
            let head = dotted(parent);
            if head.is_empty() {
                key.clone()
            } else {
                format!("{head}.{key}")
            }
        }
        P::Some { parent } | P::NewtypeStruct { parent } | P::NewtypeVariant { parent } => dotted(parent),
    }
}

/// Collects field errors under a dotted prefix.
#[derive(Default)]
pub struct Checker {
    prefix: String,
    errors: Vec<FieldError>,
}

impl Checker {
    fn path(&self, field: &str) -> String {
        if self.prefix.is_empty() || field.is_empty() {
            format!("{}{field}", self.prefix)
        } else {
            format!("{}.{field}", self.prefix)
        }
    }

    pub fn push(&mut self, field: &str, message: impl Into<String>) {
        let field = self.path(field);
        self.errors.push(FieldError { field, message: message.into() });
    }

    /// Runs `f` on a checker scoped to `prefix.field` and keeps its errors.
    pub fn nested(&mut self, field: &str, f: impl FnOnce(&mut Checker)) {
        let mut sub = Checker { prefix: self.path(field), errors: Vec::new() };
        f(&mut sub);
        self.errors.append(&mut sub.errors);
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.push(field, format!("must be positive and finite (got {v})"));
        }
    }

    pub fn finite(&mut self, field: &str, v: f64) {
        if !v.is_finite() {
            self.push(field, format!("must be finite (got {v})"));
        }
    }

    pub fn at_least(&mut self, field: &str, v: usize, min: usize) {
        if v < min {
            self.push(field, format!("must be at least {min} (got {v})"));
        }
    }

    pub fn power_of_two(&mut self, field: &str, v: usize) {
        if !v.is_power_of_two() || v < 2 {
            self.push(field, format!("must be a power of two >= 2 (got {v})"));
        }
    }

    pub fn dim(&mut self, field: &str, v: usize) {
        if !(1..=3).contains(&v) {
            self.push(field, format!("must be 1, 2 or 3 (got {v})"));
        }
    }

    pub fn increasing(&mut self, field: &str, v: &[f64], min_len: usize) {
        if v.len() < min_len {
            self.push(field, format!("needs at least {min_len} entries"));
        } else if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            self.push(field, "must be finite and strictly increasing");
        }
    }

    pub fn masses(&mut self, field: &str, v: &[f64]) {
        for (i, m) in v.iter().enumerate() {
            if !(*m > 0.0 && m.is_finite()) {
                self.push(&format!("{field}[{i}]"), format!("mass must be positive and finite (got {m})"));
            }
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(self.errors))
        }
    }
}

// ---- shared pieces -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub half_extent: f64,
    pub hbar: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { dim: 1, points: 1024, half_extent: 40.0, hbar: 1.0 }
    }
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_extent: f64) -> Self {
        Self { dim, points, half_extent, hbar: 1.0 }
    }

    fn check(&self, c: &mut Checker) {
        c.dim("dim", self.dim);
        c.power_of_two("points", self.points);
        c.positive("half_extent", self.half_extent);
        c.positive("hbar", self.hbar);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    Gaussian,
    SoftCoulomb,
}

/// A radial pair potential: `strength exp(-r^2/width^2)` or
/// `strength / sqrt(r^2 + width^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub strength: f64,
    /// Gaussian width or soft-core length.
    pub width: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self { kind: PotentialKind::Gaussian, strength: -1.0, width: 1.0 }
    }
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, strength: f64, width: f64) -> Self {
        Self { kind, strength, width }
    }

    fn check(&self, c: &mut Checker) {
        c.finite("strength", self.strength);
        c.positive("width", self.width);
    }
}

/// Gaussian packet `exp(-(x-x0)^2/(4 width^2) + i k0 x)` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PacketSpec {
    pub x0: f64,
    pub k0: f64,
    pub width: f64,
}

impl Default for PacketSpec {
    fn default() -> Self {
        Self { x0: 0.0, k0: 2.0, width: 2.0 }
    }
}

impl PacketSpec {
    fn check(&self, c: &mut Checker) {
        c.finite("x0", self.x0);
        c.finite("k0", self.k0);
        c.positive("width", self.width);
    }
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

// ---- evolve ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dft: Option<DftSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<GaussianSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plancherel: Option<PlancherelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub far_field: Option<FarFieldSpec>,
}

impl Default for EvolveSpec {
    fn default() -> Self {
        Self { dft: None, gaussian: Some(GaussianSpec::default()), plancherel: None, far_field: None }
    }
}

impl EvolveSpec {
    fn check(&self, c: &mut Checker) {
        if let Some(s) = &self.dft {
            c.nested("dft", |c| s.check(c));
        }
        if let Some(s) = &self.gaussian {
            c.nested("gaussian", |c| s.check(c));
        }
        if let Some(s) = &self.plancherel {
            c.nested("plancherel", |c| s.check(c));
        }
        if let Some(s) = &self.far_field {
            c.nested("far_field", |c| s.check(c));
        }
        if self.dft.is_none() && self.gaussian.is_none() && self.plancherel.is_none() && self.far_field.is_none() {
            c.push("", "no checks enabled");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DftSpec {
    pub grids: Vec<GridSpec>,
    pub tolerance: f64,
}

impl Default for DftSpec {
    fn default() -> Self {
        Self { grids: vec![GridSpec::new(1, 4096, 20.0), GridSpec::new(3, 256, 20.0)], tolerance: 1e-12 }
    }
}

impl DftSpec {
    fn check(&self, c: &mut Checker) {
        c.at_least("grids", self.grids.len(), 1);
        for (i, g) in self.grids.iter().enumerate() {
            c.nested(&format!("grids[{i}]"), |c| g.check(c));
        }
        c.positive("tolerance", self.tolerance);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianSpec {
    pub points: usize,
    pub half_extent: f64,
    pub mass: f64,
    pub hbar: f64,
    pub packet: PacketSpec,
    pub time: f64,
    pub tolerance: f64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            points: 1024,
            half_extent: 40.0,
            mass: 1.0,
            hbar: 1.0,
            packet: PacketSpec { x0: -5.0, k0: 1.0, width: 1.0 },
            time: 2.0,
            tolerance: 1e-8,
        }
    }
}

impl GaussianSpec {
    fn check(&self, c: &mut Checker) {
        c.power_of_two("points", self.points);
        c.positive("half_extent", self.half_extent);
        c.positive("mass", self.mass);
        c.positive("hbar", self.hbar);
        c.nested("packet", |c| self.packet.check(c));
        c.finite("time", self.time);
        c.positive("tolerance", self.tolerance);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlancherelSpec {
    pub states: usize,
    pub points: usize,
    pub half_extent: f64,
    pub oversample: usize,
    pub panels: usize,
    pub tolerance: f64,
}

impl Default for PlancherelSpec {
    fn default() -> Self {
        Self { states: 5, points: 256, half_extent: 20.0, oversample: 4, panels: 64, tolerance: 1e-6 }
    }
}

impl PlancherelSpec {
    fn check(&self, c: &mut Checker) {
        c.at_least("states", self.states, 1);
        c.power_of_two("points", self.points);
        c.positive("half_extent", self.half_extent);
        c.at_least("oversample", self.oversample, 1);
        c.at_least("panels", self.panels, 1);
        c.positive("tolerance", self.tolerance);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FarFieldSpec {
    pub points: usize,
    pub half_extent: f64,
    pub oversample: usize,
    /// Spectral parameter `mu > 0`.
    pub energy: f64,
    pub direction: Vec<f64>,
    pub outgoing: bool,
    pub radii: Vec<f64>,
    /// Relative error allowed at the largest radius.
    pub tolerance: f64,
}

impl Default for FarFieldSpec {
    fn default() -> Self {
        Self {
            points: 64,
            half_extent: 12.0,
            oversample: 2,
            energy: 1.0,
            direction: vec![0.6, 0.0, 0.8],
            outgoing: true,
            radii: vec![3.0, 6.0, 12.0, 24.0],
            tolerance: 0.05,
        }
    }
}

impl FarFieldSpec {
    fn check(&self, c: &mut Checker) {
        c.power_of_two("points", self.points);
        c.positive("half_extent", self.half_extent);
        c.at_least("oversample", self.oversample, 1);
        c.positive("energy", self.energy);
        if self.direction.len() != 3 {
            c.push("direction", "must have 3 components");
        } else {
            let n: f64 = self.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n > 0.0 && n.is_finite()) {
                c.push("direction", "must be a nonzero vector");
            }
        }
        c.increasing("radii", &self.radii, 2);
        if self.radii.first().is_some_and(|r| *r <= 0.0) {
            c.push("radii", "must be positive");
        }
        c.positive("tolerance", self.tolerance);
    }
}

// ---- localtime ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalTimeSpec {
    pub grid: GridSpec,
    pub mass: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Free and interacting packet.
    pub packet: PacketSpec,
    /// Short-range well for the interacting and eigenstate cases.
    pub potential: PotentialSpec,
    pub free_tolerance: f64,
    pub flat_tolerance: f64,
}

impl Default for LocalTimeSpec {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(1, 16384, 400.0),
            mass: 1.0,
            dt: 0.05,
            times: vec![5.0, 6.25, 8.0, 10.0, 12.5, 16.0, 20.0, 25.0, 32.0, 40.0, 50.0],
            packet: PacketSpec { x0: 0.0, k0: 1.0, width: 1.0 },
            potential: PotentialSpec::new(PotentialKind::Gaussian, -2.0, 1.0),
            free_tolerance: 1e-8,
            flat_tolerance: 0.05,
        }
    }
}

impl LocalTimeSpec {
    fn check(&self, c: &mut Checker) {
        c.nested("grid", |c| self.grid.check(c));
        if self.grid.dim != 1 {
            c.push("grid.dim", "local-time scenarios are one-dimensional");
        }
        c.positive("mass", self.mass);
        c.positive("dt", self.dt);
        c.increasing("times", &self.times, 2);
        if self.times.first().is_some_and(|t| *t <= 0.0) {
            c.push("times", "must be positive");
        }
        c.nested("packet", |c| self.packet.check(c));
        c.nested("potential", |c| self.potential.check(c));
        c.positive("free_tolerance", self.free_tolerance);
        c.positive("flat_tolerance", self.flat_tolerance);
    }
}

// ---- propdecay ------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    WeightWeight,
    WeightOutgoing,
    IncomingOutgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimateSpec {
    pub family: EstimateKind,
    pub s: f64,
    pub delta: f64,
    pub theta: f64,
    pub rho: f64,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        Self { family: EstimateKind::WeightWeight, s: 1.0, delta: 0.0, theta: 0.0, rho: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropDecaySpec {
    pub grid: GridSpec,
    pub sigma: f64,
    pub probes: usize,
    /// Momentum band of the probes.
    pub probe_band: f64,
    /// Gaussian envelope width of the probes in position.
    pub probe_envelope: f64,
    pub times: Vec<f64>,
    pub estimates: Vec<EstimateSpec>,
    pub slope_tolerance: f64,
}

impl Default for PropDecaySpec {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(1, 8192, 512.0),
            sigma: 2.0,
            probes: 16,
            probe_band: 8.0,
            probe_envelope: 4.0,
            times: log_spaced(5.0, 50.0, 12),
            estimates: vec![
                EstimateSpec { s: 1.0, ..EstimateSpec::default() },
                EstimateSpec { s: 2.0, ..EstimateSpec::default() },
                EstimateSpec { family: EstimateKind::IncomingOutgoing, s: 2.0, ..EstimateSpec::default() },
            ],
            slope_tolerance: 0.2,
        }
    }
}

impl PropDecaySpec {
    fn check(&self, c: &mut Checker) {
        c.nested("grid", |c| self.grid.check(c));
        c.positive("sigma", self.sigma);
        c.at_least("probes", self.probes, 1);
        c.positive("probe_band", self.probe_band);
        c.positive("probe_envelope", self.probe_envelope);
        c.increasing("times", &self.times, 2);
        if self.times.first().is_some_and(|t| *t <= 0.0) {
            c.push("times", "must be positive");
        }
        c.at_least("estimates", self.estimates.len(), 1);
        for (i, e) in self.estimates.iter().enumerate() {
            c.nested(&format!("estimates[{i}]"), |c| {
                c.finite("s", e.s);
                c.finite("delta", e.delta);
                c.finite("theta", e.theta);
                c.finite("rho", e.rho);
            });
        }
        c.positive("slope_tolerance", self.slope_tolerance);
    }
}

// ---- waveop ---------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    pub lo: f64,
    pub hi: f64,
    pub edge: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { lo: 1.5, hi: 2.5, edge: 0.25 }
    }
}

/// Long-range modification: glued phase with cutoff `d` and searched `R0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModifierSpec {
    pub d: f64,
    pub rho: f64,
    pub r0_start: f64,
    pub table_nodes: usize,
    /// Required ratio of the Cook tail to the modified tail at the horizon.
    pub superiority: f64,
}

impl Default for ModifierSpec {
    fn default() -> Self {
        Self { d: 1.0, rho: 0.1, r0_start: 8.0, table_nodes: 28, superiority: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveOpSpec {
    pub grid: GridSpec,
    pub dt: f64,
    pub potential: PotentialSpec,
    /// Declared decay exponent of the potential.
    pub decay: f64,
    pub packet: PacketSpec,
    /// Packet for the completeness check (bound states are projected out).
    pub scattering_packet: PacketSpec,
    pub sign: SignSpec,
    pub horizon: f64,
    /// Checkpoints for the tail table; the last one must equal `horizon`.
    pub checkpoints: Vec<f64>,
    pub window: WindowSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modifier: Option<ModifierSpec>,
    pub self_convergence: bool,
    pub slope_margin: f64,
    pub isometry_tolerance: f64,
    pub intertwining_tolerance: f64,
    pub completeness_tolerance: f64,
    pub solver_tolerance: f64,
}

impl Default for WaveOpSpec {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(1, 4096, 320.0),
            dt: 0.01,
            potential: PotentialSpec::default(),
            decay: 1.0,
            packet: PacketSpec::default(),
            scattering_packet: PacketSpec { x0: -20.0, k0: 2.0, width: 2.0 },
            sign: SignSpec::Plus,
            horizon: 40.0,
            checkpoints: vec![5.0, 10.0, 20.0, 40.0],
            window: WindowSpec::default(),
            modifier: None,
            self_convergence: true,
            slope_margin: 0.2,
            isometry_tolerance: 1e-6,
            intertwining_tolerance: 1e-3,
            completeness_tolerance: 1e-2,
            solver_tolerance: 1e-10,
        }
    }
}

impl WaveOpSpec {
    fn check(&self, c: &mut Checker) {
        c.nested("grid", |c| self.grid.check(c));
        if self.grid.dim != 1 {
            c.push("grid.dim", "wave-operator scenarios are one-dimensional");
        }
        if self.grid.hbar != 1.0 {
            c.push("grid.hbar", "wave-operator scenarios use hbar = 1");
        }
        c.positive("dt", self.dt);
        c.nested("potential", |c| self.potential.check(c));
        c.positive("decay", self.decay);
        c.nested("packet", |c| self.packet.check(c));
        c.nested("scattering_packet", |c| self.scattering_packet.check(c));
        c.positive("horizon", self.horizon);
        c.increasing("checkpoints", &self.checkpoints, 3);
        if self.checkpoints.first().is_some_and(|t| *t <= 0.0) {
            c.push("checkpoints", "must be positive");
        }
        if self.checkpoints.last().is_some_and(|t| *t != self.horizon) {
            c.push("checkpoints", "last checkpoint must equal the horizon");
        }
        c.nested("window", |c| {
            c.finite("lo", self.window.lo);
            c.positive("edge", self.window.edge);
            if !(self.window.hi > self.window.lo) {
                c.push("hi", "must exceed lo");
            }
        });
        if let Some(m) = &self.modifier {
            c.nested("modifier", |c| {
                c.positive("d", m.d);
                c.positive("rho", m.rho);
                c.positive("r0_start", m.r0_start);
                c.at_least("table_nodes", m.table_nodes, 4);
                c.positive("superiority", m.superiority);
            });
        }
        c.positive("slope_margin", self.slope_margin);
        c.positive("isometry_tolerance", self.isometry_tolerance);
        c.positive("intertwining_tolerance", self.intertwining_tolerance);
        c.positive("completeness_tolerance", self.completeness_tolerance);
        c.positive("solver_tolerance", self.solver_tolerance);
    }
}

// ---- eikonal --------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EikonalSpec {
    pub dim: usize,
    pub potential: PotentialSpec,
    pub rho: f64,
    pub horizon: f64,
    pub tail_tolerance: f64,
    /// Cone samples, split evenly between the two signs.
    pub samples: usize,
    pub radius: [f64; 2],
    pub speed: [f64; 2],
    /// Cone opening: `+-cos(x, xi) >= cone`.
    pub cone: f64,
    pub difference_step: f64,
    pub residual_tolerance: f64,
    pub free_samples: usize,
    pub orbits: usize,
    pub orbit_time: f64,
    pub orbit_tolerance: f64,
}

impl Default for EikonalSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            potential: PotentialSpec::new(PotentialKind::SoftCoulomb, 0.5, 1.0),
            rho: 0.1,
            horizon: 3200.0,
            tail_tolerance: 1.0,
            samples: 1000,
            radius: [30.0, 120.0],
            speed: [0.5, 3.0],
            cone: 0.2,
            difference_step: 1e-3,
            residual_tolerance: 1e-4,
            free_samples: 200,
            orbits: 8,
            orbit_time: 40.0,
            orbit_tolerance: 1e-8,
        }
    }
}

impl EikonalSpec {
    fn check(&self, c: &mut Checker) {
        c.dim("dim", self.dim);
        c.nested("potential", |c| self.potential.check(c));
        c.positive("rho", self.rho);
        c.positive("horizon", self.horizon);
        c.positive("tail_tolerance", self.tail_tolerance);
        c.at_least("samples", self.samples, 2);
        for (name, r) in [("radius", self.radius), ("speed", self.speed)] {
            if !(r[0] > 0.0 && r[1] > r[0] && r[1].is_finite()) {
                c.push(name, "must be an increasing pair of positive numbers");
            }
        }
        if !(self.cone >= 0.0 && self.cone < 1.0) {
            c.push("cone", "must lie in [0, 1)");
        }
        c.positive("difference_step", self.difference_step);
        c.positive("residual_tolerance", self.residual_tolerance);
        c.positive("orbit_time", self.orbit_time);
        c.positive("orbit_tolerance", self.orbit_tolerance);
    }
}

// ---- partition ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionCase {
    pub masses: Vec<f64>,
    pub dim: usize,
}

impl Default for PartitionCase {
    fn default() -> Self {
        Self { masses: vec![1.0, 2.0, 3.0], dim: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartitionSpec {
    pub cases: Vec<PartitionCase>,
    pub gamma: f64,
    pub samples: usize,
    pub gradient_samples: usize,
    pub sum_tolerance: f64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self {
            cases: vec![PartitionCase::default(), PartitionCase { masses: vec![1.0, 1.5, 2.0, 2.5], dim: 3 }],
            gamma: 1.5,
            samples: 10_000,
            gradient_samples: 50,
            sum_tolerance: 1e-10,
        }
    }
}

impl PartitionSpec {
    fn check(&self, c: &mut Checker) {
        c.at_least("cases", self.cases.len(), 1);
        for (i, case) in self.cases.iter().enumerate() {
            c.nested(&format!("cases[{i}]"), |c| {
                c.at_least("masses", case.masses.len(), 2);
                c.masses("masses", &case.masses);
                c.dim("dim", case.dim);
            });
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            c.push("gamma", format!("must exceed 1 (got {})", self.gamma));
        }
        c.at_least("samples", self.samples, 1);
        c.positive("sum_tolerance", self.sum_tolerance);
    }
}

// ---- uncertainty ----------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeEnergySpec {
    pub states: usize,
    pub points: usize,
    pub half_extent: f64,
    pub time: f64,
    /// Momentum radius that admissible states must avoid.
    pub gap: f64,
    pub tolerance: f64,
}

impl Default for TimeEnergySpec {
    fn default() -> Self {
        Self { states: 50, points: 32, half_extent: 10.0, time: 2.5, gap: 0.5, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UncertaintySpec {
    pub grid: GridSpec,
    pub mass: f64,
    pub random_states: usize,
    pub gaussian_tolerance: f64,
    pub hermite_tolerance: f64,
    pub bound_tolerance: f64,
    pub time_energy: TimeEnergySpec,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(1, 256, 16.0),
            mass: 1.0,
            random_states: 100,
            gaussian_tolerance: 1e-10,
            hermite_tolerance: 1e-8,
            bound_tolerance: 1e-10,
            time_energy: TimeEnergySpec::default(),
        }
    }
}

impl UncertaintySpec {
    fn check(&self, c: &mut Checker) {
        c.nested("grid", |c| self.grid.check(c));
        if self.grid.dim != 1 {
            c.push("grid.dim", "position/momentum sweep is one-dimensional");
        }
        c.positive("mass", self.mass);
        c.at_least("random_states", self.random_states, 1);
        c.positive("gaussian_tolerance", self.gaussian_tolerance);
        c.positive("hermite_tolerance", self.hermite_tolerance);
        c.positive("bound_tolerance", self.bound_tolerance);
        let t = &self.time_energy;
        c.nested("time_energy", |c| {
            c.power_of_two("points", t.points);
            c.positive("half_extent", t.half_extent);
            c.finite("time", t.time);
            if t.time == 0.0 {
                c.push("time", "must be nonzero");
            }
            c.positive("gap", t.gap);
            c.positive("tolerance", t.tolerance);
        });
    }
}

// ---- xsection -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XSectionSpec {
    pub mass: f64,
    pub hbar: f64,
    pub energy: f64,
    pub charge_product: f64,
    pub charge_unit: f64,
    pub kappa: f64,
    /// Scattering angles in degrees.
    pub angles: Vec<f64>,
    pub born_tolerance: f64,
    pub c: f64,
    /// Speeds for the relativistic factors, as fractions of `c`.
    pub speeds: Vec<f64>,
    /// Small speeds for the kinetic-energy expansion, as fractions of `c`.
    pub small_speeds: Vec<f64>,
    pub exact_tolerance: f64,
    pub clock: ClockSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClockSpec {
    pub rest_mass: f64,
    pub h: f64,
    pub c: f64,
    pub g: f64,
    pub tolerance: f64,
}

impl Default for ClockSpec {
    fn default() -> Self {
        Self { rest_mass: 9.1093837015e-31, h: 1.054571817e-34, c: 299_792_458.0, g: 6.67430e-11, tolerance: 1e-12 }
    }
}

impl Default for XSectionSpec {
    fn default() -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            energy: 1.0,
            charge_product: 1.0,
            charge_unit: 1.0,
            kappa: 1e-3,
            angles: vec![10.0, 30.0, 60.0, 90.0, 120.0, 150.0, 170.0],
            born_tolerance: 0.01,
            c: 1.0,
            speeds: vec![0.0, 0.1, 0.5, 0.9, 0.99],
            small_speeds: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            exact_tolerance: 1e-15,
            clock: ClockSpec::default(),
        }
    }
}

impl XSectionSpec {
    fn check(&self, c: &mut Checker) {
        c.positive("mass", self.mass);
        c.positive("hbar", self.hbar);
        c.positive("energy", self.energy);
        c.finite("charge_product", self.charge_product);
        c.positive("charge_unit", self.charge_unit);
        c.positive("kappa", self.kappa);
        c.at_least("angles", self.angles.len(), 1);
        if self.angles.iter().any(|a| !(*a > 0.0 && *a <= 180.0)) {
            c.push("angles", "must lie in (0, 180] degrees");
        }
        c.positive("born_tolerance", self.born_tolerance);
        c.positive("c", self.c);
        for (name, v) in [("speeds", &self.speeds), ("small_speeds", &self.small_speeds)] {
            if v.is_empty() || v.iter().any(|b| !(*b >= 0.0 && *b < 1.0)) {
                c.push(name, "must be a nonempty list of fractions in [0, 1)");
            }
        }
        if self.small_speeds.contains(&0.0) {
            c.push("small_speeds", "must be nonzero");
        }
        c.positive("exact_tolerance", self.exact_tolerance);
        c.nested("clock", |c| {
            c.positive("rest_mass", self.clock.rest_mass);
            c.positive("h", self.clock.h);
            c.positive("c", self.clock.c);
            c.positive("g", self.clock.g);
            c.positive("tolerance", self.clock.tolerance);
        });
    }
}

// ---- localmotion ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalMotionSpec {
    pub h_local: Vec<Vec<f64>>,
    pub h_environment: Vec<Vec<f64>>,
    /// Coupling operator on the product space; scaled by each epsilon.
    pub coupling: Vec<Vec<f64>>,
    pub epsilons: Vec<f64>,
    /// Constant interaction `value * 1` for the decoupled control.
    pub constant: f64,
    pub witness_floor: f64,
    pub zero_tolerance: f64,
    pub slope_tolerance: f64,
}

impl Default for LocalMotionSpec {
    fn default() -> Self {
        let zero4 = vec![0.0; 4];
        let mut xx = vec![zero4; 4];
        for (i, row) in xx.iter_mut().enumerate() {
            row[3 - i] = 1.0;
        }
        Self {
            h_local: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            h_environment: vec![vec![0.0, 0.0], vec![0.0, 2.0]],
            coupling: xx,
            epsilons: vec![0.1, 0.05, 0.025],
            constant: 0.7,
            witness_floor: 1e-6,
            zero_tolerance: 1e-12,
            slope_tolerance: 0.1,
        }
    }
}

fn square(c: &mut Checker, field: &str, m: &[Vec<f64>]) -> usize {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        c.push(field, "must be a nonempty square matrix");
        return 0;
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        c.push(field, "entries must be finite");
    }
    for i in 0..n {
        for j in 0..i {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                c.push(field, format!("must be symmetric (entry [{i}][{j}])"));
                return n;
            }
        }
    }
    n
}

impl LocalMotionSpec {
    fn check(&self, c: &mut Checker) {
        let a = square(c, "h_local", &self.h_local);
        let b = square(c, "h_environment", &self.h_environment);
        let k = square(c, "coupling", &self.coupling);
        if a > 0 && b > 0 && k > 0 && a * b != k {
            c.push("coupling", format!("must be {0}x{0} to act on the product space", a * b));
        }
        c.at_least("epsilons", self.epsilons.len(), 2);
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            c.push("epsilons", "must be positive");
        }
        c.finite("constant", self.constant);
        c.positive("witness_floor", self.witness_floor);
        c.positive("zero_tolerance", self.zero_tolerance);
        c.positive("slope_tolerance", self.slope_tolerance);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema = 1\nname = \"free\"\nseed = 3\n[evolve]\n";

    #[test]
    fn minimal_scenario_fills_defaults() {
        let p = parse_scenario(MINIMAL, true).unwrap();
        let g = p.scenario.evolve.as_ref().unwrap().gaussian.unwrap();
        assert_eq!(g, GaussianSpec::default());
        let echoed = p.scenario.resolved_toml();
        assert!(echoed.contains("[evolve.gaussian]") && echoed.contains("tolerance = 0.00000001"), "{echoed}");
        // the echo is itself a valid scenario with the same content
        assert_eq!(parse_scenario(&echoed, true).unwrap().scenario, p.scenario);
    }

    #[test]
    fn negative_mass_names_the_field() {
        let text = "schema = 1\nname = \"p\"\nseed = 1\n[partition]\ncases = [{ masses = [1.0, -2.0, 3.0], dim = 3 }]\n";
        let err = parse_scenario(text, true).unwrap_err();
        assert_eq!(err.fields()[0].field, "partition.cases[0].masses[1]");
    }

    #[test]
    fn duplicate_section_is_rejected() {
        let text = format!("{MINIMAL}[evolve]\n");
        assert!(matches!(parse_scenario(&text, false), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn missing_seed_is_rejected() {
        let err = parse_scenario("schema = 1\nname = \"x\"\n[evolve]\n", false).unwrap_err();
        assert_eq!(err.fields()[0].field, "seed");
    }

    #[test]
    fn unknown_keys_depend_on_strictness() {
        let text = "schema = 1\nname = \"x\"\nseed = 1\ncolour = 2\n[evolve.gaussian]\ntme = 2.0\n";
        let loose = parse_scenario(text, false).unwrap();
        assert_eq!(loose.unknown, vec!["colour".to_string(), "evolve.gaussian.tme".to_string()]);
        let err = parse_scenario(text, true).unwrap_err();
        assert_eq!(err.fields().len(), 2);
    }

    #[test]
    fn exactly_one_family() {
        let err = parse_scenario("schema = 1\nname = \"x\"\nseed = 1\n", false).unwrap_err();
        assert_eq!(err.fields()[0].field, "scenario");
        let err = parse_scenario(&format!("{MINIMAL}[xsection]\n"), false).unwrap_err();
        assert!(err.fields()[0].message.contains("more than one"));
    }

    #[test]
    fn wrong_schema_version() {
        let err = parse_scenario("schema = 2\nname = \"x\"\nseed = 1\n[evolve]\n", false).unwrap_err();
        assert_eq!(err.fields()[0].field, "schema");
    }
}
