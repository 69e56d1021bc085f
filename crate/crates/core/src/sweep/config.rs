use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::radar::{omega_from_wavelength, DurationConvention};
use crate::SPEED_OF_LIGHT;

/// Default carrier wavelength, 6π cm.
pub const DEFAULT_WAVELENGTH: f64 = 0.06 * std::f64::consts::PI;
pub const DEFAULT_C_XI: [f64; 6] = [4.0, 2.0, 1.0, 0.3, 0.1, 0.03];

/// One grid axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    List(Vec<f64>),
    Linear { from: f64, to: f64, points: usize },
    Log { from: f64, to: f64, points: usize },
}

impl Axis {
    pub fn single(v: f64) -> Self {
        Self::List(vec![v])
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::List(ref v) => v.clone(),
            Self::Linear { from, to, points } => spaced(from, to, points, |x| x, |x| x),
            Self::Log { from, to, points } => {
                spaced(from, to, points, f64::log10, |x| 10f64.powf(x))
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::List(v) => v.len(),
            Self::Linear { points, .. } | Self::Log { points, .. } => *points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Self::Log { .. })
    }

    fn describe(&self) -> String {
        match self {
            Self::List(v) => format!(
                "[{}]",
                v.iter()
                    .map(|x| format!("{x:e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            Self::Linear { from, to, points } => {
                format!("linear {from:e} .. {to:e}, {points} points")
            }
            Self::Log { from, to, points } => format!("log {from:e} .. {to:e}, {points} points"),
        }
    }
}

fn spaced(
    from: f64,
    to: f64,
    n: usize,
    fwd: impl Fn(f64) -> f64,
    inv: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let (a, b) = (fwd(from), fwd(to));
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n)
            .map(|i| match i {
                0 => from,
                i if i == n - 1 => to,
                i => inv(a + (b - a) * i as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

/// Where and what to write.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub name: String,
    pub plots: bool,
    /// Fraction of rows re-checked against the fidelity oracle.
    pub audit: f64,
}

/// Fully resolved sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub speed: f64,
    pub omega_c: f64,
    /// Baseline pump bandwidth; the `sigma_p` axis defaults to it.
    pub sigma_p: f64,
    /// Fixed for the whole sweep, also when `sigma_p` is swept.
    pub epsilon: f64,
    pub convention: DurationConvention,
    pub sigma_p_axis: Axis,
    pub c_xi: Axis,
    pub eta: Axis,
    pub n_b: Axis,
    pub tail_tol: f64,
    pub output: OutputSpec,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let omega_c = omega_from_wavelength(DEFAULT_WAVELENGTH);
        let sigma_p = 2.0 * omega_c / 100.0;
        Self {
            speed: 100.0,
            omega_c,
            sigma_p,
            epsilon: 3.0 * sigma_p,
            convention: DurationConvention::default(),
            sigma_p_axis: Axis::single(sigma_p),
            c_xi: Axis::List(DEFAULT_C_XI.to_vec()),
            eta: Axis::Log {
                from: 0.01,
                to: 1.0,
                points: 5,
            },
            n_b: Axis::Log {
                from: 0.01,
                to: 100.0,
                points: 5,
            },
            tail_tol: 1e-12,
            output: OutputSpec {
                dir: PathBuf::from("out"),
                name: "sweep".into(),
                plots: false,
                audit: 0.0,
            },
        }
    }
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(vec![format!("TOML syntax: {e}")]))?;
        let mut p = Parser { errors: Vec::new() };
        let spec = p.spec(&table);
        if p.errors.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Config(p.errors))
        }
    }

    pub fn point_count(&self) -> usize {
        self.sigma_p_axis.len() * self.c_xi.len() * self.eta.len() * self.n_b.len()
    }

    /// Every resolved value, one per line. Also the input of [`Self::hash_hex`].
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "physics.speed = {:e} m/s", self.speed);
        let _ = writeln!(s, "physics.omega_c = {:e} rad/s", self.omega_c);
        let _ = writeln!(s, "physics.sigma_p = {:e} rad/s", self.sigma_p);
        let _ = writeln!(s, "physics.epsilon = {:e} rad/s", self.epsilon);
        let _ = writeln!(
            s,
            "physics.duration_convention = {}",
            self.convention.name()
        );
        let _ = writeln!(s, "grid.sigma_p = {}", self.sigma_p_axis.describe());
        let _ = writeln!(s, "grid.c_xi = {}", self.c_xi.describe());
        let _ = writeln!(s, "grid.eta = {}", self.eta.describe());
        let _ = writeln!(s, "grid.n_b = {}", self.n_b.describe());
        let _ = writeln!(s, "truncation.tail_tol = {:e}", self.tail_tol);
        let _ = writeln!(s, "output.dir = {}", self.output.dir.display());
        let _ = writeln!(s, "output.name = {}", self.output.name);
        let _ = writeln!(s, "output.plots = {}", self.output.plots);
        let _ = writeln!(s, "output.audit = {}", self.output.audit);
        let _ = writeln!(s, "points = {}", self.point_count());
        s
    }

    /// SHA-256 of the physics, grid and truncation part of [`Self::describe`].
    pub fn hash_hex(&self) -> String {
        let text: String = self
            .describe()
            .lines()
            .filter(|l| !l.starts_with("output."))
            .flat_map(|l| [l, "\n"])
            .collect();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Reads and resolves a config file.
pub fn validate_config(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    SweepSpec::from_toml_str(&text)
}

/// Symbols available to frequency expressions.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyContext {
    pub omega_c: f64,
    pub sigma_p: Option<f64>,
}

/// Evaluates `number | wc | wp | sigma_p` factors joined by `*` or `/`,
/// left to right, e.g. `"wc/100"` or `"3*wp/100"`.
pub fn parse_frequency(expr: &str, ctx: &FrequencyContext) -> std::result::Result<f64, String> {
    let mut value = None::<f64>;
    let mut op = '*';
    let mut rest = expr.trim();
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let factor = match token {
            "" => return Err(format!("malformed expression '{expr}'")),
            "wc" => ctx.omega_c,
            "wp" => 2.0 * ctx.omega_c,
            "sigma_p" => ctx
                .sigma_p
                .ok_or_else(|| format!("'sigma_p' is not available in '{expr}'"))?,
            t => t
                .parse::<f64>()
                .map_err(|_| format!("unknown symbol '{t}' in '{expr}'"))?,
        };
        value = Some(match (value, op) {
            (None, _) => factor,
            (Some(v), '*') => v * factor,
            (Some(v), _) => v / factor,
        });
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    value.ok_or_else(|| format!("empty expression '{expr}'"))
}

struct Parser {
    errors: Vec<String>,
}

const SECTIONS: [&str; 4] = ["physics", "grid", "truncation", "output"];
const PHYSICS_KEYS: [&str; 6] = [
    "speed",
    "wavelength",
    "omega_c",
    "sigma_p",
    "epsilon",
    "duration_convention",
];
const GRID_KEYS: [&str; 4] = ["sigma_p", "c_xi", "eta", "n_b"];
const TRUNCATION_KEYS: [&str; 1] = ["tail_tol"];
const OUTPUT_KEYS: [&str; 4] = ["dir", "name", "plots", "audit"];

impl Parser {
    fn err(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{key}: {msg}"));
    }

    fn section<'a>(&mut self, root: &'a Table, name: &str, keys: &[&str]) -> Option<&'a Table> {
        let t = match root.get(name) {
            None => return None,
            Some(Value::Table(t)) => t,
            Some(_) => {
                self.err(name, "expected a section");
                return None;
            }
        };
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.err(&format!("{name}.{k}"), "unknown key");
            }
        }
        Some(t)
    }

    fn spec(&mut self, root: &Table) -> SweepSpec {
        let mut spec = SweepSpec::default();
        for k in root.keys() {
            if !SECTIONS.contains(&k.as_str()) {
                self.err(k, "unknown section");
            }
        }
        let physics = self.section(root, "physics", &PHYSICS_KEYS);
        let grid = self.section(root, "grid", &GRID_KEYS);
        let truncation = self.section(root, "truncation", &TRUNCATION_KEYS);
        let output = self.section(root, "output", &OUTPUT_KEYS);

        if let Some(t) = physics {
            if let Some(v) = self.number(t, "physics.speed", "speed") {
                if v.abs() < SPEED_OF_LIGHT {
                    spec.speed = v;
                } else {
                    self.err(
                        "physics.speed",
                        format!("{v} is not below the speed of light"),
                    );
                }
            }
            match (t.get("wavelength"), t.get("omega_c")) {
                (Some(_), Some(_)) => self.err(
                    "physics.omega_c",
                    "give either wavelength or omega_c, not both",
                ),
                (Some(_), None) => {
                    if let Some(l) = self.positive(t, "physics.wavelength", "wavelength") {
                        spec.omega_c = omega_from_wavelength(l);
                    }
                }
                (None, Some(_)) => {
                    if let Some(w) = self.positive(t, "physics.omega_c", "omega_c") {
                        spec.omega_c = w;
                    }
                }
                (None, None) => {}
            }
        }
        let base = FrequencyContext {
            omega_c: spec.omega_c,
            sigma_p: None,
        };
        spec.sigma_p = 2.0 * spec.omega_c / 100.0;
        if let Some(v) = physics.and_then(|t| t.get("sigma_p")) {
            if let Some(x) = self.frequency(v, "physics.sigma_p", &base) {
                spec.sigma_p = x;
            }
        }
        let ctx = FrequencyContext {
            sigma_p: Some(spec.sigma_p),
            ..base
        };
        spec.epsilon = 3.0 * spec.sigma_p;
        if let Some(v) = physics.and_then(|t| t.get("epsilon")) {
            if let Some(x) = self.frequency(v, "physics.epsilon", &ctx) {
                spec.epsilon = x;
            }
        }
        if let Some(v) = physics.and_then(|t| t.get("duration_convention")) {
            match v.as_str().map(str::parse::<DurationConvention>) {
                Some(Ok(c)) => spec.convention = c,
                Some(Err(e)) => self.err("physics.duration_convention", e),
                None => self.err("physics.duration_convention", "expected a string"),
            }
        }

        spec.sigma_p_axis = Axis::single(spec.sigma_p);
        if let Some(t) = grid {
            if let Some(a) = self.axis(t, "sigma_p", &ctx, true, |x| x > 0.0, "must be positive") {
                spec.sigma_p_axis = a;
            }
            if let Some(a) = self.axis(t, "c_xi", &ctx, false, |x| x > 0.0, "must be positive") {
                spec.c_xi = a;
            }
            if let Some(a) = self.axis(
                t,
                "eta",
                &ctx,
                false,
                |x| x > 0.0 && x <= 1.0,
                "must lie in (0, 1]",
            ) {
                spec.eta = a;
            }
            if let Some(a) = self.axis(t, "n_b", &ctx, false, |x| x >= 0.0, "must be >= 0") {
                spec.n_b = a;
            }
        }

        if let Some(t) = truncation {
            if let Some(v) = self.number(t, "truncation.tail_tol", "tail_tol") {
                if v > 0.0 && v < 1.0 {
                    spec.tail_tol = v;
                } else {
                    self.err("truncation.tail_tol", format!("{v} must lie in (0, 1)"));
                }
            }
        }

        if let Some(t) = output {
            match t.get("dir") {
                Some(Value::String(s)) => spec.output.dir = PathBuf::from(s),
                Some(_) => self.err("output.dir", "expected a string"),
                None => {}
            }
            match t.get("name") {
                Some(Value::String(s)) if !s.is_empty() && !s.contains(['/', '\\']) => {
                    spec.output.name = s.clone()
                }
                Some(_) => self.err("output.name", "expected a plain file stem"),
                None => {}
            }
            match t.get("plots") {
                Some(Value::Boolean(b)) => spec.output.plots = *b,
                Some(_) => self.err("output.plots", "expected true or false"),
                None => {}
            }
            if let Some(v) = self.number(t, "output.audit", "audit") {
                if (0.0..=1.0).contains(&v) {
                    spec.output.audit = v;
                } else {
                    self.err("output.audit", format!("{v} must lie in [0, 1]"));
                }
            }
        }
        spec
    }

    fn number(&mut self, t: &Table, key: &str, name: &str) -> Option<f64> {
        match t.get(name) {
            None => None,
            Some(Value::Float(f)) if f.is_finite() => Some(*f),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(_) => {
                self.err(key, "expected a finite number");
                None
            }
        }
    }

    fn positive(&mut self, t: &Table, key: &str, name: &str) -> Option<f64> {
        let v = self.number(t, key, name)?;
        if v > 0.0 {
            Some(v)
        } else {
            self.err(key, format!("{v} must be positive"));
            None
        }
    }

    fn frequency(&mut self, v: &Value, key: &str, ctx: &FrequencyContext) -> Option<f64> {
        let x = match v {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            Value::String(s) => match parse_frequency(s, ctx) {
                Ok(x) => x,
                Err(e) => {
                    self.err(key, e);
                    return None;
                }
            },
            _ => {
                self.err(key, "expected a number or an expression string");
                return None;
            }
        };
        if x > 0.0 && x.is_finite() {
            Some(x)
        } else {
            self.err(key, format!("{x} must be a positive frequency"));
            None
        }
    }

    fn scalar(&mut self, v: &Value, key: &str, ctx: &FrequencyContext, freq: bool) -> Option<f64> {
        if freq {
            return self.frequency(v, key, ctx);
        }
        match v {
            Value::Float(f) if f.is_finite() => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(key, "expected a finite number");
                None
            }
        }
    }

    fn axis(
        &mut self,
        t: &Table,
        name: &str,
        ctx: &FrequencyContext,
        freq: bool,
        ok: impl Fn(f64) -> bool,
        range_msg: &str,
    ) -> Option<Axis> {
        let key = format!("grid.{name}");
        let v = t.get(name)?;
        let before = self.errors.len();
        let axis = match v {
            Value::Array(items) => {
                if items.is_empty() {
                    self.err(&key, "axis is empty");
                    return None;
                }
                let vals: Vec<f64> = items
                    .iter()
                    .filter_map(|x| self.scalar(x, &key, ctx, freq))
                    .collect();
                Axis::List(vals)
            }
            Value::Table(r) => {
                for k in r.keys() {
                    if !["from", "to", "points", "scale"].contains(&k.as_str()) {
                        self.err(&format!("{key}.{k}"), "unknown key");
                    }
                }
                let from = r
                    .get("from")
                    .and_then(|x| self.scalar(x, &format!("{key}.from"), ctx, freq));
                let to = r
                    .get("to")
                    .and_then(|x| self.scalar(x, &format!("{key}.to"), ctx, freq));
                let points = match r.get("points") {
                    Some(Value::Integer(n)) if *n >= 1 && *n <= 100_000 => Some(*n as usize),
                    _ => {
                        self.err(
                            &format!("{key}.points"),
                            "expected an integer in 1..=100000",
                        );
                        None
                    }
                };
                let log = match r.get("scale") {
                    None => false,
                    Some(Value::String(s)) if s == "log" => true,
                    Some(Value::String(s)) if s == "linear" => false,
                    Some(_) => {
                        self.err(&format!("{key}.scale"), "expected \"linear\" or \"log\"");
                        false
                    }
                };
                if r.get("from").is_none() || r.get("to").is_none() {
                    self.err(&key, "a range needs both 'from' and 'to'");
                }
                let (from, to, points) = (from?, to?, points?);
                if log && !(from > 0.0 && to > 0.0) {
                    self.err(&key, "log range needs positive endpoints");
                    return None;
                }
                if log {
                    Axis::Log { from, to, points }
                } else {
                    Axis::Linear { from, to, points }
                }
            }
            other => Axis::single(self.scalar(other, &key, ctx, freq)?),
        };
        if self.errors.len() > before {
            return None;
        }
        for x in axis.values() {
            if !ok(x) {
                self.err(&key, format!("value {x} {range_msg}"));
                return None;
            }
        }
        Some(axis)
    }
}
