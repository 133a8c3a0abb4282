use std::fmt;
use std::path::PathBuf;

use heatmem::biorth::{ExponentFamily, SUPPORTED_BITS};
use heatmem::kernel::MemoryKernel;
use heatmem::moment::InitialData;
use heatmem::spectral::Endpoint;
use heatmem::Horizon;
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Configuration error with the line it refers to, when known.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Boundary signal for the `simulate` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Signal {
    Zero,
    Constant {
        value: f64,
    },
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant { value } => *value,
            Signal::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
            Signal::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Signal::Zero => true,
            Signal::Constant { value } => value.is_finite(),
            Signal::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
            Signal::Polynomial { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    #[serde(default = "zero_signal")]
    pub left: Signal,
    #[serde(default = "zero_signal")]
    pub right: Signal,
}

fn zero_signal() -> Signal {
    Signal::Zero
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing {
            left: Signal::Zero,
            right: Signal::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Named {
    Auto,
    Infinite,
}

/// `"auto"` or a fixed first index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScopePolicy {
    Fixed(usize),
    Auto(Named),
}

/// `"infinite"` or a positive horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonSpec {
    Finite(f64),
    Named(Named),
}

impl HorizonSpec {
    pub fn horizon(self) -> Horizon {
        match self {
            HorizonSpec::Finite(t) => Horizon::Finite(t),
            HorizonSpec::Named(_) => Horizon::Infinite,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiorthConfig {
    pub family: ExponentFamily,
    pub horizon: HorizonSpec,
    /// Inclusive index range of the growth fit; upper half of the family when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<[usize; 2]>,
}

impl Default for BiorthConfig {
    fn default() -> Self {
        BiorthConfig {
            family: ExponentFamily::PiSquared { count: 20, shift: 0.0 },
            horizon: HorizonSpec::Named(Named::Infinite),
            fit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub n_max: usize,
    pub endpoints: Vec<Endpoint>,
    /// Modes entering the deficiency; `0` means twice the active count.
    pub check_modes: usize,
    pub compare_memoryless: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            n_max: 12,
            endpoints: Endpoint::BOTH.to_vec(),
            check_modes: 0,
            compare_memoryless: true,
        }
    }
}

/// Fully resolved experiment configuration; echoed into every output directory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub horizon: f64,
    pub steps: usize,
    pub modes: usize,
    pub precision: u32,
    pub series_tol: f64,
    pub refine_levels: usize,
    pub output: PathBuf,
    pub scope: ScopePolicy,
    pub kernel: MemoryKernel,
    pub initial_data: InitialData,
    pub forcing: Forcing,
    pub biorth: BiorthConfig,
    pub control: ControlConfig,
}

pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_MODES: usize = 10;
pub const DEFAULT_SERIES_TOL: f64 = 1e-14;
pub const DEFAULT_REFINE_LEVELS: usize = 4;
pub const MIN_STEPS: usize = 100;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: Option<Spanned<f64>>,
    steps: Option<Spanned<i64>>,
    modes: Option<Spanned<i64>>,
    precision: Option<Spanned<i64>>,
    series_tol: Option<Spanned<f64>>,
    refine_levels: Option<Spanned<i64>>,
    output: Option<PathBuf>,
    scope: Option<Spanned<ScopePolicy>>,
    kernel: Option<Spanned<MemoryKernel>>,
    initial_data: Option<Spanned<InitialData>>,
    forcing: Option<Spanned<Forcing>>,
    biorth: Option<Spanned<BiorthConfig>>,
    control: Option<Spanned<ControlConfig>>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub precision: Option<u32>,
    pub modes: Option<usize>,
}

struct Source<'a>(&'a str);

impl Source<'_> {
    fn line(&self, offset: usize) -> usize {
        self.0[..offset.min(self.0.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: &Spanned<T>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: Some(self.line(span.span().start)),
            message: message.into(),
        }
    }
}

fn plain(message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: None,
        message: message.into(),
    }
}

fn count(src: &Source, v: Option<Spanned<i64>>, name: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) => {
            let x = *s.get_ref();
            if x < min as i64 {
                Err(src.err(&s, format!("{name} must be at least {min}, got {x}")))
            } else {
                Ok(x as usize)
            }
        }
    }
}

fn check_precision(bits: i64) -> Result<u32, String> {
    let b = if bits == 64 { 53 } else { bits };
    if b > 0 && SUPPORTED_BITS.contains(&(b as u32)) {
        Ok(bits as u32)
    } else {
        Err(format!("precision must be one of 64, 128, 256, 512, 1024 bits, got {bits}"))
    }
}

pub fn parse(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| Source(text).line(s.start)),
        message: e.message().trim().to_string(),
    })?;
    let src = Source(text);

    let horizon = match raw.horizon {
        None => DEFAULT_HORIZON,
        Some(s) => {
            let t = *s.get_ref();
            if !(t > 0.0 && t.is_finite()) {
                return Err(src.err(&s, format!("horizon must be positive and finite, got {t}")));
            }
            t
        }
    };
    let steps = count(&src, raw.steps, "steps", DEFAULT_STEPS, MIN_STEPS)?;
    let mut modes = count(&src, raw.modes, "modes", DEFAULT_MODES, 1)?;
    let refine_levels = count(&src, raw.refine_levels, "refine_levels", DEFAULT_REFINE_LEVELS, 2)?;
    let mut precision = match raw.precision {
        None => heatmem::biorth::DEFAULT_BITS,
        Some(s) => check_precision(*s.get_ref()).map_err(|m| src.err(&s, m))?,
    };
    let series_tol = match raw.series_tol {
        None => DEFAULT_SERIES_TOL,
        Some(s) => {
            let v = *s.get_ref();
            if !(v > 0.0 && v.is_finite()) {
                return Err(src.err(&s, format!("series_tol must be positive, got {v}")));
            }
            v
        }
    };
    let scope = match raw.scope {
        None => ScopePolicy::Auto(Named::Auto),
        Some(s) => match *s.get_ref() {
            ScopePolicy::Fixed(0) => return Err(src.err(&s, "scope index starts at 1")),
            ScopePolicy::Auto(Named::Infinite) => {
                return Err(src.err(&s, "scope must be \"auto\" or a mode index"))
            }
            p => p,
        },
    };
    let kernel = match raw.kernel {
        None => MemoryKernel::Constant { c: 1.0 },
        Some(s) => {
            s.get_ref()
                .validate()
                .map_err(|e| src.err(&s, format!("kernel: {e}")))?;
            s.into_inner()
        }
    };
    let initial_data = match raw.initial_data {
        None => InitialData::default(),
        Some(s) => {
            let ok = match s.get_ref() {
                InitialData::Power { scale, power } => scale.is_finite() && power.is_finite(),
                InitialData::Alternating { scale, power } => scale.is_finite() && power.is_finite(),
                InitialData::Explicit { values } => values.iter().all(|v| v.is_finite()),
            };
            if !ok {
                return Err(src.err(&s, "initial_data values must be finite"));
            }
            s.into_inner()
        }
    };
    let forcing = match raw.forcing {
        None => Forcing::default(),
        Some(s) => {
            if !(s.get_ref().left.is_finite() && s.get_ref().right.is_finite()) {
                return Err(src.err(&s, "forcing parameters must be finite"));
            }
            s.into_inner()
        }
    };
    let mut biorth = match raw.biorth {
        None => BiorthConfig::default(),
        Some(s) => {
            let b = s.get_ref();
            if b.family.len() < heatmem::biorth::MIN_FIT_POINTS {
                return Err(src.err(
                    &s,
                    format!(
                        "biorth family needs at least {} exponents for the growth fit, got {}",
                        heatmem::biorth::MIN_FIT_POINTS,
                        b.family.len()
                    ),
                ));
            }
            if let HorizonSpec::Finite(t) = b.horizon {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(src.err(&s, format!("biorth horizon must be positive or \"infinite\", got {t}")));
                }
            }
            if b.horizon == HorizonSpec::Named(Named::Auto) {
                return Err(src.err(&s, "biorth horizon must be a number or \"infinite\""));
            }
            if let Some([lo, hi]) = b.fit {
                if lo == 0 || hi < lo + 1 || hi > b.family.len() {
                    return Err(src.err(&s, format!("biorth fit range [{lo}, {hi}] outside 1..={}", b.family.len())));
                }
            }
            s.into_inner()
        }
    };
    let count = biorth.family.len();
    biorth.fit.get_or_insert([count / 2 + 1, count]);
    let control = match raw.control {
        None => ControlConfig::default(),
        Some(s) => {
            let c = s.get_ref();
            if c.n_max == 0 {
                return Err(src.err(&s, "control n_max must be at least 1"));
            }
            if c.endpoints.is_empty() {
                return Err(src.err(&s, "control needs at least one endpoint"));
            }
            s.into_inner()
        }
    };
    let mut output = raw.output.unwrap_or_else(|| PathBuf::from("out"));

    if let Some(o) = &overrides.out {
        output = o.clone();
    }
    if let Some(bits) = overrides.precision {
        precision = check_precision(bits as i64).map_err(|m| plain(format!("--precision: {m}")))?;
    }
    if let Some(n) = overrides.modes {
        if n == 0 {
            return Err(plain("--modes must be at least 1"));
        }
        modes = n;
    }
    Ok(ExperimentConfig {
        horizon,
        steps,
        modes,
        precision,
        series_tol,
        refine_levels,
        output,
        scope,
        kernel,
        initial_data,
        forcing,
        biorth,
        control,
    })
}

/// TOML text of the resolved configuration.
pub fn echo(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_an_empty_file() {
        let cfg = parse("", &Overrides::default()).unwrap();
        assert_eq!(cfg.steps, DEFAULT_STEPS);
        assert_eq!(cfg.kernel, MemoryKernel::Constant { c: 1.0 });
        assert_eq!(cfg.precision, 256);
        assert_eq!(cfg.biorth.fit, Some([11, 20]));
        let again = parse(&echo(&cfg), &Overrides::default()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse("modes = 4\nhorizon = -1.0\n", &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse("steps = 10\n", &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.to_string().contains("at least 100"));
        let err = parse("horizon = 1.0\n\n[kernel]\ntype = \"bogus\"\n", &Overrides::default()).unwrap_err();
        assert!(err.line.is_some());
        let err = parse("stpes = 200\n", &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn overrides_win() {
        let o = Overrides {
            out: Some("elsewhere".into()),
            precision: Some(512),
            modes: Some(3),
        };
        let cfg = parse("precision = 128\nmodes = 7\n", &o).unwrap();
        assert_eq!((cfg.precision, cfg.modes), (512, 3));
        assert_eq!(cfg.output, PathBuf::from("elsewhere"));
        let bad = Overrides {
            precision: Some(100),
            ..Default::default()
        };
        assert!(parse("", &bad).is_err());
    }

    #[test]
    fn tables_parse() {
        let text = r#"
scope = 2
[kernel]
type = "exp_sum"
terms = [{ c = 1.0, b = 1.0 }, { c = 0.5, b = 2.0 }]
[initial_data]
type = "explicit"
values = [1.0, 0.5]
[forcing.left]
type = "sine"
amplitude = 1.0
frequency = 2.0
[biorth]
family = { type = "pi_squared", count = 12, shift = 0.0 }
horizon = 1.0
fit = [4, 12]
[control]
n_max = 4
endpoints = ["right"]
check_modes = 8
compare_memoryless = false
"#;
        let cfg = parse(text, &Overrides::default()).unwrap();
        assert_eq!(cfg.scope, ScopePolicy::Fixed(2));
        assert_eq!(cfg.control.endpoints, vec![Endpoint::Right]);
        assert_eq!(cfg.biorth.horizon.horizon(), Horizon::Finite(1.0));
        assert_eq!(parse(&echo(&cfg), &Overrides::default()).unwrap(), cfg);
    }
}
