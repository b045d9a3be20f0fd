//! Run configuration: a TOML document with global keys and one table per
//! subcommand. Parsing is strict and collects every problem before failing.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use toml::{Table, Value};

use instantform::collective::PairPotential;
use instantform::minkowski::Signature;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("{} config error(s):\n{}", .0.len(), .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigError>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ValidateFoliation,
    Radar,
    Centers,
    Tube,
    Evolve,
    Reconstruct,
    Spectrum,
}

impl Command {
    pub fn section(self) -> &'static str {
        match self {
            Command::ValidateFoliation => "validate_foliation",
            Command::Radar => "radar",
            Command::Centers => "centers",
            Command::Tube => "tube",
            Command::Evolve => "evolve",
            Command::Reconstruct => "reconstruct",
            Command::Spectrum => "spectrum",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::ValidateFoliation => "validate-foliation",
            Command::Radar => "radar",
            Command::Centers => "centers",
            Command::Tube => "tube",
            Command::Evolve => "evolve",
            Command::Reconstruct => "reconstruct",
            Command::Spectrum => "spectrum",
        }
    }

    const ALL: [Command; 7] = [
        Command::ValidateFoliation,
        Command::Radar,
        Command::Centers,
        Command::Tube,
        Command::Evolve,
        Command::Reconstruct,
        Command::Spectrum,
    ];
}

// ---------------------------------------------------------------------------
// Resolved configuration

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub signature: SignatureName,
    pub c: f64,
    pub seed: u64,
    pub params: Params,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureName {
    Particle,
    Relativity,
}

impl SignatureName {
    pub fn signature(self) -> Signature {
        match self {
            SignatureName::Particle => Signature::Particle,
            SignatureName::Relativity => Signature::Relativity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Foliation(FoliationParams),
    Radar(RadarParams),
    Centers(CentersParams),
    Tube(TubeParams),
    Evolve(EvolveParams),
    Reconstruct(ReconstructParams),
    Spectrum(SpectrumParams),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    Identity,
    Tilted { beta: f64 },
    LapseRamp { a: f64 },
    Rigid { omega: f64 },
    Differential { omega: f64, r0: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridParams {
    pub half_width: f64,
    pub n: usize,
    pub planar: bool,
    pub tau_max: f64,
    pub n_tau: usize,
    pub shell_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationParams {
    pub embedding: EmbeddingSpec,
    pub grid: GridParams,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObserverSpec {
    Inertial { beta: [f64; 3], domain: [f64; 2] },
    Rindler { acceleration: f64, domain: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadarParams {
    pub observer: ObserverSpec,
    pub events: Vec<[f64; 4]>,
    pub random_events: usize,
    pub event_box: f64,
    pub scan_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParticleSpec {
    pub mass: f64,
    pub position: [f64; 3],
    pub momentum: [f64; 3],
    pub charge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentersParams {
    pub potential: PairPotential,
    pub particles: Vec<ParticleSpec>,
    pub frames: usize,
    pub rapidity_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TubeParams {
    pub potential: PairPotential,
    pub particles: Vec<ParticleSpec>,
    pub frames: usize,
    pub rapidity_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvolveParams {
    pub m1: f64,
    pub m2: f64,
    pub q1q2: f64,
    pub potential: PairPotential,
    pub darwin_scale: f64,
    pub rho: [f64; 3],
    pub pi: [f64; 3],
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructParams {
    pub evolve: EvolveParams,
    pub h: [f64; 3],
    pub z: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantumGridKind {
    Radial,
    Cartesian,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumParams {
    pub m1: f64,
    pub m2: f64,
    pub alpha: f64,
    pub grid: QuantumGridKind,
    pub n_points: usize,
    pub length: f64,
    pub ell: u32,
    pub n_levels: usize,
    pub convergence: bool,
}

// ---------------------------------------------------------------------------
// Strict reader

struct Reader {
    errors: RefCell<Vec<ConfigError>>,
}

struct Section<'a> {
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl Reader {
    fn error(&self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.borrow_mut().push(ConfigError { path: path.into(), message: message.into() });
    }

    fn section<'a>(&self, path: String, table: &'a Table) -> Section<'a> {
        Section { path, table, used: RefCell::new(BTreeSet::new()) }
    }

    fn finish(&self, s: &Section<'_>) {
        let used = s.used.borrow();
        for key in s.table.keys() {
            if !used.contains(key) {
                self.error(s.join(key), "unknown key");
            }
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl<'a> Section<'a> {
    fn join(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.table.get(key)
    }

    fn f64_or(&self, r: &Reader, key: &str, default: Option<f64>) -> f64 {
        match self.raw(key) {
            Some(v) => match as_f64(v) {
                Some(x) if x.is_finite() => x,
                _ => {
                    r.error(self.join(key), "expected a finite number");
                    f64::NAN
                }
            },
            None => default.unwrap_or_else(|| {
                r.error(self.join(key), "missing required field");
                f64::NAN
            }),
        }
    }

    fn f64(&self, r: &Reader, key: &str) -> f64 {
        self.f64_or(r, key, None)
    }

    fn opt_f64(&self, r: &Reader, key: &str) -> Option<f64> {
        self.raw(key)?;
        Some(self.f64(r, key))
    }

    fn usize_or(&self, r: &Reader, key: &str, default: Option<usize>) -> usize {
        match self.raw(key) {
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                r.error(self.join(key), "expected a non-negative integer");
                0
            }
            None => default.unwrap_or_else(|| {
                r.error(self.join(key), "missing required field");
                0
            }),
        }
    }

    fn bool_or(&self, r: &Reader, key: &str, default: bool) -> bool {
        match self.raw(key) {
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                r.error(self.join(key), "expected a boolean");
                default
            }
            None => default,
        }
    }

    fn array<const N: usize>(&self, r: &Reader, key: &str, default: Option<[f64; N]>) -> [f64; N] {
        match self.raw(key) {
            Some(v) => parse_array(r, &self.join(key), v),
            None => default.unwrap_or_else(|| {
                r.error(self.join(key), "missing required field");
                [f64::NAN; N]
            }),
        }
    }

    fn choice<T: Copy>(&self, r: &Reader, key: &str, options: &[(&str, T)], default: Option<T>) -> Option<T> {
        match self.raw(key) {
            Some(Value::String(s)) => match options.iter().find(|(name, _)| name == s) {
                Some((_, v)) => Some(*v),
                None => {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    r.error(self.join(key), format!("unknown value {s:?}; expected one of {names:?}"));
                    None
                }
            },
            Some(_) => {
                r.error(self.join(key), "expected a string");
                None
            }
            None => {
                if default.is_none() {
                    r.error(self.join(key), "missing required field");
                }
                default
            }
        }
    }

    fn table(&self, r: &Reader, key: &str) -> Option<Section<'a>> {
        match self.raw(key) {
            Some(Value::Table(t)) => Some(r.section(self.join(key), t)),
            Some(_) => {
                r.error(self.join(key), "expected a table");
                None
            }
            None => {
                r.error(self.join(key), "missing required table");
                None
            }
        }
    }
}

fn parse_array<const N: usize>(r: &Reader, path: &str, v: &Value) -> [f64; N] {
    let mut out = [f64::NAN; N];
    match v {
        Value::Array(items) if items.len() == N => {
            for (i, item) in items.iter().enumerate() {
                match as_f64(item) {
                    Some(x) if x.is_finite() => out[i] = x,
                    _ => r.error(format!("{path}[{i}]"), "expected a finite number"),
                }
            }
        }
        _ => r.error(path, format!("expected an array of {N} numbers")),
    }
    out
}

const POTENTIALS: [(&str, PairPotential); 3] = [
    ("none", PairPotential::None),
    ("coulomb", PairPotential::Coulomb),
    ("coulomb_darwin", PairPotential::CoulombDarwin),
];

fn positive(r: &Reader, path: String, x: f64) {
    if x.is_finite() && x <= 0.0 {
        r.error(path, format!("must be positive, got {x}"));
    }
}

fn at_least(r: &Reader, path: String, n: usize, min: usize) {
    if n < min {
        r.error(path, format!("must be at least {min}, got {n}"));
    }
}

// ---------------------------------------------------------------------------
// Sections

fn grid_params(r: &Reader, s: &Section<'_>) -> GridParams {
    let g = GridParams {
        half_width: s.f64(r, "half_width"),
        n: s.usize_or(r, "n", Some(11)),
        planar: s.bool_or(r, "planar", false),
        tau_max: s.f64_or(r, "tau_max", Some(1.0)),
        n_tau: s.usize_or(r, "n_tau", Some(3)),
        shell_radius: s.opt_f64(r, "shell_radius"),
    };
    positive(r, s.join("half_width"), g.half_width);
    at_least(r, s.join("n"), g.n, 1);
    at_least(r, s.join("n_tau"), g.n_tau, 1);
    if g.tau_max < 0.0 {
        r.error(s.join("tau_max"), "must be non-negative");
    }
    r.finish(s);
    g
}

fn foliation(r: &Reader, s: &Section<'_>) -> FoliationParams {
    let embedding = match s.table(r, "embedding") {
        Some(e) => {
            let kinds = [("identity", 0), ("tilted", 1), ("lapse_ramp", 2), ("rigid", 3), ("differential", 4)];
            let spec = match e.choice(r, "kind", &kinds, None) {
                Some(0) => EmbeddingSpec::Identity,
                Some(1) => {
                    let beta = e.f64(r, "beta");
                    if beta.abs() >= 1.0 {
                        r.error(e.join("beta"), "|beta| must be below 1");
                    }
                    EmbeddingSpec::Tilted { beta }
                }
                Some(2) => EmbeddingSpec::LapseRamp { a: e.f64(r, "a") },
                Some(3) => EmbeddingSpec::Rigid { omega: e.f64(r, "omega") },
                Some(_) => {
                    let r0 = e.f64(r, "r0");
                    positive(r, e.join("r0"), r0);
                    EmbeddingSpec::Differential { omega: e.f64(r, "omega"), r0 }
                }
                None => EmbeddingSpec::Identity,
            };
            r.finish(&e);
            spec
        }
        None => EmbeddingSpec::Identity,
    };
    let grid = match s.table(r, "grid") {
        Some(g) => grid_params(r, &g),
        None => GridParams { half_width: 1.0, n: 1, planar: false, tau_max: 0.0, n_tau: 1, shell_radius: None },
    };
    FoliationParams { embedding, grid }
}

fn domain(r: &Reader, s: &Section<'_>) -> [f64; 2] {
    let d = s.array::<2>(r, "domain", None);
    if d[0].is_finite() && d[1].is_finite() && d[1] <= d[0] {
        r.error(s.join("domain"), "upper bound must exceed lower bound");
    }
    d
}

fn radar(r: &Reader, s: &Section<'_>, c: f64) -> RadarParams {
    let observer = match s.table(r, "observer") {
        Some(o) => {
            let spec = match o.choice(r, "kind", &[("inertial", 0), ("rindler", 1)], None) {
                Some(0) => {
                    let beta = o.array::<3>(r, "beta", Some([0.0; 3]));
                    let b2: f64 = beta.iter().map(|b| b * b).sum();
                    if b2 >= 1.0 {
                        r.error(o.join("beta"), "|beta| must be below 1");
                    }
                    ObserverSpec::Inertial { beta, domain: domain(r, &o) }
                }
                Some(_) => {
                    let acceleration = o.f64(r, "acceleration");
                    positive(r, o.join("acceleration"), acceleration);
                    ObserverSpec::Rindler { acceleration, domain: domain(r, &o) }
                }
                None => ObserverSpec::Inertial { beta: [0.0; 3], domain: [-1.0, 1.0] },
            };
            r.finish(&o);
            spec
        }
        None => ObserverSpec::Inertial { beta: [0.0; 3], domain: [-1.0, 1.0] },
    };
    let events = match s.raw("events") {
        Some(Value::Array(items)) => {
            items.iter().enumerate().map(|(i, v)| parse_array::<4>(r, &format!("{}[{i}]", s.join("events")), v)).collect()
        }
        Some(_) => {
            r.error(s.join("events"), "expected an array of [ct, x, y, z] events");
            Vec::new()
        }
        None => Vec::new(),
    };
    let random_events = s.usize_or(r, "random_events", Some(0));
    let event_box = s.f64_or(r, "event_box", Some(c));
    positive(r, s.join("event_box"), event_box);
    let scan_points = s.usize_or(r, "scan_points", Some(2048));
    at_least(r, s.join("scan_points"), scan_points, 2);
    if events.is_empty() && random_events == 0 {
        r.error(s.join("events"), "no events: give `events` or `random_events`");
    }
    r.finish(s);
    RadarParams { observer, events, random_events, event_box, scan_points }
}

fn particles(r: &Reader, s: &Section<'_>, potential: PairPotential) -> Vec<ParticleSpec> {
    let key = "particles";
    let items = match s.raw(key) {
        Some(Value::Array(items)) => items,
        Some(_) => {
            r.error(s.join(key), "expected an array of particle tables");
            return Vec::new();
        }
        None => {
            r.error(s.join(key), "missing required field");
            return Vec::new();
        }
    };
    if items.is_empty() {
        r.error(s.join(key), "at least one particle is required");
    }
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let path = format!("{}[{i}]", s.join(key));
        let Value::Table(t) = item else {
            r.error(path, "expected a table");
            continue;
        };
        let p = r.section(path, t);
        let spec = ParticleSpec {
            mass: p.f64(r, "mass"),
            position: p.array::<3>(r, "position", None),
            momentum: p.array::<3>(r, "momentum", Some([0.0; 3])),
            charge: p.f64_or(r, "charge", Some(0.0)),
        };
        positive(r, p.join("mass"), spec.mass);
        r.finish(&p);
        out.push(spec);
    }
    if potential != PairPotential::None {
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if out[i].position == out[j].position {
                    r.error(
                        format!("{}[{j}].position", s.join(key)),
                        format!("coincides with particle {i} while a pair potential is enabled"),
                    );
                }
            }
        }
    }
    out
}

fn centers(r: &Reader, s: &Section<'_>) -> CentersParams {
    let potential = s.choice(r, "potential", &POTENTIALS, Some(PairPotential::None)).unwrap_or_default();
    let particles = particles(r, s, potential);
    let frames = s.usize_or(r, "frames", Some(10));
    let rapidity_max = s.f64_or(r, "rapidity_max", Some(1.0));
    if rapidity_max < 0.0 {
        r.error(s.join("rapidity_max"), "must be non-negative");
    }
    r.finish(s);
    CentersParams { potential, particles, frames, rapidity_max }
}

fn tube(r: &Reader, s: &Section<'_>) -> TubeParams {
    let potential = s.choice(r, "potential", &POTENTIALS, Some(PairPotential::None)).unwrap_or_default();
    let particles = particles(r, s, potential);
    let frames = s.usize_or(r, "frames", Some(100));
    at_least(r, s.join("frames"), frames, 1);
    let rapidity_max = s.f64_or(r, "rapidity_max", Some(1.5));
    if rapidity_max < 0.0 {
        r.error(s.join("rapidity_max"), "must be non-negative");
    }
    r.finish(s);
    TubeParams { potential, particles, frames, rapidity_max }
}

fn evolve_fields(r: &Reader, s: &Section<'_>) -> EvolveParams {
    let p = EvolveParams {
        m1: s.f64(r, "m1"),
        m2: s.f64(r, "m2"),
        q1q2: s.f64_or(r, "q1q2", Some(0.0)),
        potential: s.choice(r, "potential", &POTENTIALS, Some(PairPotential::None)).unwrap_or_default(),
        darwin_scale: s.f64_or(r, "darwin_scale", Some(1.0)),
        rho: s.array::<3>(r, "rho", None),
        pi: s.array::<3>(r, "pi", None),
        dt: s.f64(r, "dt"),
        steps: s.usize_or(r, "steps", None),
        record_every: s.usize_or(r, "record_every", Some(1)),
    };
    positive(r, s.join("m1"), p.m1);
    positive(r, s.join("m2"), p.m2);
    positive(r, s.join("dt"), p.dt);
    at_least(r, s.join("steps"), p.steps, 1);
    at_least(r, s.join("record_every"), p.record_every, 1);
    if p.potential != PairPotential::None && p.rho == [0.0; 3] {
        r.error(s.join("rho"), "separation must be non-zero when a pair potential is enabled");
    }
    p
}

fn spectrum(r: &Reader, s: &Section<'_>) -> SpectrumParams {
    let kinds = [("radial", QuantumGridKind::Radial), ("cartesian", QuantumGridKind::Cartesian)];
    let p = SpectrumParams {
        m1: s.f64(r, "m1"),
        m2: s.f64(r, "m2"),
        alpha: s.f64(r, "alpha"),
        grid: s.choice(r, "grid", &kinds, Some(QuantumGridKind::Radial)).unwrap_or(QuantumGridKind::Radial),
        n_points: s.usize_or(r, "n_points", Some(2048)),
        length: s.f64(r, "length"),
        ell: s.usize_or(r, "ell", Some(0)) as u32,
        n_levels: s.usize_or(r, "n_levels", Some(3)),
        convergence: s.bool_or(r, "convergence", true),
    };
    positive(r, s.join("m1"), p.m1);
    positive(r, s.join("m2"), p.m2);
    positive(r, s.join("length"), p.length);
    at_least(r, s.join("n_points"), p.n_points, 16);
    at_least(r, s.join("n_levels"), p.n_levels, 1);
    if p.grid == QuantumGridKind::Cartesian && p.ell != 0 {
        r.error(s.join("ell"), "angular channel applies to radial grids only");
    }
    r.finish(s);
    p
}

/// Parses and validates `text` for `command`; `seed` overrides the document.
pub fn parse_config(text: &str, command: Command, seed: Option<u64>) -> Result<RunConfig, ParseError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| ParseError::Syntax(e.to_string()))?;
    let r = Reader { errors: RefCell::new(Vec::new()) };
    let root = r.section(String::new(), &doc);

    let signature = root
        .choice(
            &r,
            "signature",
            &[("particle", SignatureName::Particle), ("relativity", SignatureName::Relativity)],
            Some(SignatureName::Particle),
        )
        .unwrap_or(SignatureName::Particle);
    let c = root.f64_or(&r, "c", Some(1.0));
    positive(&r, "c".into(), c);
    let doc_seed = match root.raw("seed") {
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => {
            r.error("seed", "expected a non-negative integer");
            0
        }
        None => 0,
    };
    // other subcommand tables may share the document
    for other in Command::ALL {
        if other != command {
            root.raw(other.section());
        }
    }

    let params = match root.table(&r, command.section()) {
        Some(s) => match command {
            Command::ValidateFoliation => {
                let p = foliation(&r, &s);
                r.finish(&s);
                Params::Foliation(p)
            }
            Command::Radar => Params::Radar(radar(&r, &s, c)),
            Command::Centers => Params::Centers(centers(&r, &s)),
            Command::Tube => Params::Tube(tube(&r, &s)),
            Command::Evolve => {
                let p = evolve_fields(&r, &s);
                r.finish(&s);
                Params::Evolve(p)
            }
            Command::Reconstruct => {
                let evolve = evolve_fields(&r, &s);
                let h = s.array::<3>(&r, "h", Some([0.0; 3]));
                let z = s.array::<3>(&r, "z", Some([0.0; 3]));
                r.finish(&s);
                Params::Reconstruct(ReconstructParams { evolve, h, z })
            }
            Command::Spectrum => Params::Spectrum(spectrum(&r, &s)),
        },
        None => return Err(ParseError::Invalid(r.errors.into_inner())),
    };
    r.finish(&root);

    let errors = r.errors.into_inner();
    if !errors.is_empty() {
        return Err(ParseError::Invalid(errors));
    }
    Ok(RunConfig { command, signature, c, seed: seed.unwrap_or(doc_seed), params })
}
