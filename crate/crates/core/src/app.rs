//! Command implementations behind the `lossy-boson` binary: `plan`,
//! `sample`, `validate` and `stats`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{
    decompose_losses, depth_threshold_algebraic, plan, thermalization_depth, transfer_matrix, AlgebraicLossParams,
    AlgebraicThreshold, Depth, LayeredCircuit, PlanParameters, Regime,
};
use crate::error::{Error, Result};
use crate::mps::{MpsOptions, ThinnedMpsSampler, DEFAULT_MAX_BOND};
use crate::numerics::{total_variation, ComplexMatrix, Distribution, FockSample};
use crate::oracle::lossy_exact_distribution;
use crate::rng::RandomStream;
use crate::thermal::{scattershot_herald, ThermalParams, ThermalSampler};
use crate::validate::{run_suite, ValidateOptions, ValidationReport};

/// Transmissions within this of each other count as uniform loss.
const UNIFORM_TOL: f64 = 1e-9;
const MAX_HERALD_ATTEMPTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Plan,
    Sample,
    Validate,
    Stats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Auto,
    Thermal,
    Mps,
    Oracle,
    Scattershot,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

/// Scaling and budget parameters; fields a circuit can supply are optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub photons: Option<usize>,
    pub modes: Option<usize>,
    /// `k` in `N = k M^γ`; derived from `N` and `M` when absent.
    pub density: Option<f64>,
    /// `γ`, default 1.
    pub exponent: Option<f64>,
    pub eps: Option<f64>,
    pub tau: Option<f64>,
    pub depth: Option<usize>,
    /// Per-coupler loss `x` for the thermalization depth; default `1 − τ`.
    pub loss_per_coupler: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub circuit: Option<PathBuf>,
    #[serde(default)]
    pub params: ParamsConfig,
    pub algebraic: Option<AlgebraicLossParams>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Thermal `λ`; defaults to the largest transmission of the circuit.
    pub lambda: Option<f64>,
    /// Squeezing parameter of the scattershot sources.
    pub herald_lambda: Option<f64>,
    pub max_bond: Option<usize>,
    /// Sample file read by `stats`.
    pub input: Option<PathBuf>,
    /// Reference distribution (or sample file) for `stats`.
    pub reference: Option<PathBuf>,
    #[serde(default)]
    pub validate: ValidateOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Input(format!("config line {} column {}: {e}", e.line(), e.column()))
        })
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.circuit, &mut cfg.out, &mut cfg.input, &mut cfg.reference].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn load_circuit(&self) -> Result<Option<LayeredCircuit>> {
        match &self.circuit {
            None => Ok(None),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
                LayeredCircuit::from_json(&text).map(Some)
            }
        }
    }
}

fn missing(field: &str) -> Error {
    Error::Input(format!("missing config field params.{field}"))
}

/// Assembles plan parameters, letting a circuit supply `M`, `D` and `τ`.
fn plan_parameters(p: &ParamsConfig, circuit: Option<&CircuitInfo>) -> Result<PlanParameters> {
    let photons = p.photons.ok_or_else(|| missing("photons"))?;
    let modes = p.modes.or(circuit.map(|c| c.modes)).ok_or_else(|| missing("modes"))?;
    let depth = p.depth.or(circuit.map(|c| c.depth)).ok_or_else(|| missing("depth"))?;
    let tau = p.tau.or(circuit.map(|c| c.layer_tau)).ok_or_else(|| missing("tau"))?;
    let eps = p.eps.ok_or_else(|| missing("eps"))?;
    let exponent = p.exponent.unwrap_or(1.0);
    let density = p.density.unwrap_or(photons as f64 / (modes as f64).powf(exponent));
    let params = PlanParameters { photons, modes, density, exponent, eps, tau, depth };
    params.validate()?;
    Ok(params)
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanReport {
    pub photons: usize,
    pub modes: usize,
    pub depth: usize,
    pub tau: f64,
    pub eps: f64,
    pub thermalization_depth: Depth,
    pub d_star: Depth,
    pub mu_effective: f64,
    pub regime: Regime,
    pub rationale: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebraic: Option<AlgebraicThreshold>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn run_plan(cfg: &RunConfig) -> Result<PlanReport> {
    let circuit = cfg.load_circuit()?.map(|c| CircuitInfo::new(&c)).transpose()?;
    let p = plan_parameters(&cfg.params, circuit.as_ref())?;
    let x = cfg.params.loss_per_coupler.unwrap_or(1.0 - p.tau);
    let d_tilde = thermalization_depth(p.photons, p.eps, x)?;
    let sp = plan(&p)?;
    let algebraic = cfg.algebraic.as_ref().map(|a| depth_threshold_algebraic(&p, a)).transpose()?;
    let note = (sp.d_star == Depth::Unbounded).then(|| "thermal regime unreachable".to_string());
    Ok(PlanReport {
        photons: p.photons,
        modes: p.modes,
        depth: p.depth,
        tau: p.tau,
        eps: p.eps,
        thermalization_depth: d_tilde,
        d_star: sp.d_star,
        mu_effective: sp.mu_effective,
        regime: sp.regime,
        rationale: sp.rationale,
        algebraic,
        note,
    })
}

/// What the samplers need to know about a circuit.
#[derive(Clone, Debug)]
struct CircuitInfo {
    circuit: LayeredCircuit,
    transfer: ComplexMatrix,
    modes: usize,
    depth: usize,
    mu_max: f64,
    /// Common transmission when loss is uniform across modes.
    uniform_mu: Option<f64>,
    /// Per-layer transmission, exact for uniform layers, else `μ_max^{1/D}`.
    layer_tau: f64,
}

impl CircuitInfo {
    fn new(c: &LayeredCircuit) -> Result<Self> {
        let transfer = transfer_matrix(c)?;
        let dec = decompose_losses(&transfer)?;
        let mu_max = dec.mu_max();
        if mu_max <= 0.0 {
            return Err(Error::Degenerate("circuit transmits no light".into()));
        }
        let uniform_mu = dec.mu.iter().all(|m| (m - mu_max).abs() <= UNIFORM_TOL).then_some(mu_max);
        let depth = c.depth();
        let layer_tau = match (c.uniform_transmission(), depth) {
            (_, 0) | (Some(1.0), _) => 1.0,
            (Some(u), d) => u.powf(1.0 / d as f64),
            (None, d) => mu_max.powf(1.0 / d as f64),
        };
        Ok(Self { circuit: c.clone(), transfer, modes: c.modes, depth, mu_max, uniform_mu, layer_tau })
    }
}

/// One emitted sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub n: FockSample,
    pub regime: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub herald: Option<Vec<usize>>,
}

impl SampleLine {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Jsonl => serde_json::to_string(self).expect("sample serializes"),
            Format::Csv => self.n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleMeta {
    pub config_hash: String,
    pub seed: u64,
    pub samples: usize,
    pub workers: usize,
    pub mode: Mode,
    pub regime: String,
    pub photons: usize,
    pub modes: usize,
    pub depth: usize,
    pub mu_max: f64,
    pub uniform_loss: bool,
    pub d_star: Depth,
    pub thermalization_depth: Depth,
    pub format: Format,
}

enum Engine {
    Thermal(ThermalSampler),
    Mps(ThinnedMpsSampler),
    Oracle(Distribution),
    Scattershot { sampler: ThinnedMpsSampler, herald_lambda: f64 },
}

impl Engine {
    fn regime(&self) -> &'static str {
        match self {
            Engine::Thermal(_) => "thermal",
            Engine::Mps(_) => "mps",
            Engine::Oracle(_) => "oracle",
            Engine::Scattershot { .. } => "scattershot",
        }
    }

    fn draw(&mut self, rng: &mut RandomStream) -> Result<SampleLine> {
        let regime = self.regime().to_string();
        match self {
            Engine::Thermal(s) => Ok(SampleLine { n: s.sample(rng)?, regime, herald: None }),
            Engine::Mps(s) => Ok(SampleLine { n: s.sample(rng)?, regime, herald: None }),
            Engine::Oracle(d) => {
                let n = d.sample(rng).ok_or_else(|| Error::Degenerate("empty oracle distribution".into()))?;
                Ok(SampleLine { n, regime, herald: None })
            }
            Engine::Scattershot { sampler, herald_lambda } => {
                let modes = sampler.modes();
                for _ in 0..MAX_HERALD_ATTEMPTS {
                    let herald = scattershot_herald(modes, *herald_lambda, rng)?;
                    if herald.iter().all(|&h| h <= 1) {
                        let n = sampler.sample_pattern(&herald, rng)?;
                        return Ok(SampleLine { n, regime, herald: Some(herald) });
                    }
                }
                Err(Error::Capacity(format!("no collision-free herald in {MAX_HERALD_ATTEMPTS} attempts")))
            }
        }
    }

    fn fork(&self) -> Self {
        match self {
            Engine::Thermal(s) => Engine::Thermal(s.clone()),
            Engine::Mps(s) => Engine::Mps(s.fresh()),
            Engine::Oracle(d) => Engine::Oracle(d.clone()),
            Engine::Scattershot { sampler, herald_lambda } => {
                Engine::Scattershot { sampler: sampler.fresh(), herald_lambda: *herald_lambda }
            }
        }
    }
}

fn need_uniform(info: &CircuitInfo, what: &str) -> Result<f64> {
    info.uniform_mu.ok_or_else(|| {
        Error::Model(format!(
            "{what} needs uniform loss; transmissions are non-uniform (use the thermal sampler)"
        ))
    })
}

fn build_engine(cfg: &RunConfig, info: &CircuitInfo, params: &PlanParameters, regime: Regime) -> Result<Engine> {
    let mode = cfg.mode.unwrap_or_default();
    let opts = MpsOptions { local_photons: None, max_bond: cfg.max_bond.unwrap_or(DEFAULT_MAX_BOND) };
    let n = params.photons;
    let resolved = match mode {
        Mode::Auto => match regime {
            Regime::Thermal => Mode::Thermal,
            Regime::TensorNetwork => Mode::Mps,
        },
        m => m,
    };
    match resolved {
        Mode::Thermal => {
            // uniform μ_max commutes to the input; the residual A/√μ_max is still a contraction
            let lambda = cfg.lambda.unwrap_or(info.mu_max);
            let residual = &info.transfer * C64::new(1.0 / info.mu_max.sqrt(), 0.0);
            Ok(Engine::Thermal(ThermalSampler::new(&residual, ThermalParams::new(lambda)?, n, params.eps)?))
        }
        Mode::Mps => {
            let mu = need_uniform(info, "the tensor-network sampler")?;
            Ok(Engine::Mps(ThinnedMpsSampler::new(&info.circuit, n, mu, opts)?))
        }
        Mode::Oracle => {
            let mu = need_uniform(info, "the oracle sampler")?;
            let unitary = &info.transfer * C64::new(1.0 / mu.sqrt(), 0.0);
            Ok(Engine::Oracle(lossy_exact_distribution(&unitary, mu, n)?))
        }
        Mode::Scattershot => {
            let mu = need_uniform(info, "the scattershot sampler")?;
            let herald_lambda = cfg.herald_lambda.ok_or_else(|| Error::Input("scattershot needs herald_lambda".into()))?;
            ThermalParams::new(herald_lambda)?;
            Ok(Engine::Scattershot { sampler: ThinnedMpsSampler::new(&info.circuit, 0, mu, opts)?, herald_lambda })
        }
        Mode::Auto => unreachable!("auto resolved above"),
    }
}

/// Draws `cfg.samples` outcomes and writes them to `out`. Worker `w` uses
/// stream `split(w)` of the master seed and its lines are written after those
/// of workers `0..w`, so output is byte-identical for a fixed worker count.
pub fn run_sample(cfg: &RunConfig, out: &mut dyn Write) -> Result<SampleMeta> {
    let circuit = cfg.load_circuit()?.ok_or_else(|| Error::Input("sample needs a circuit".into()))?;
    sample_circuit(cfg, &circuit, out)
}

/// [`run_sample`] with the circuit supplied directly; `cfg.circuit` is ignored.
pub fn sample_circuit(cfg: &RunConfig, circuit: &LayeredCircuit, out: &mut dyn Write) -> Result<SampleMeta> {
    let info = CircuitInfo::new(circuit)?;
    let params = plan_parameters(&cfg.params, Some(&info))?;
    if params.modes != info.modes {
        return Err(Error::Input(format!("params.modes {} but circuit has {}", params.modes, info.modes)));
    }
    if params.photons > info.modes {
        return Err(Error::Input(format!("{} photons do not fit in {} modes", params.photons, info.modes)));
    }
    let sp = plan(&params)?;
    let x = cfg.params.loss_per_coupler.unwrap_or(1.0 - params.tau);
    let d_tilde = if x > 0.0 && x < 1.0 { thermalization_depth(params.photons, params.eps, x)? } else { Depth::Unbounded };
    let engine = build_engine(cfg, &info, &params, sp.regime)?;

    let samples = cfg.samples.unwrap_or(1000);
    let workers = cfg.workers.unwrap_or(1).max(1);
    let seed = cfg.seed.unwrap_or(0);
    let format = cfg.format.unwrap_or_default();
    let master = RandomStream::new(seed);
    let share = |w: usize| samples / workers + usize::from(w < samples % workers);

    let results: Vec<Result<Vec<SampleLine>>> = if workers == 1 {
        let mut engine = engine.fork();
        let mut rng = master.split(0);
        vec![(0..samples).map(|_| engine.draw(&mut rng)).collect()]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let mut engine = engine.fork();
                    let mut rng = master.split(w as u64);
                    let count = share(w);
                    scope.spawn(move || (0..count).map(|_| engine.draw(&mut rng)).collect())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
        })
    };
    let io = |e: std::io::Error| Error::Input(format!("writing samples: {e}"));
    for lines in results {
        for line in lines? {
            writeln!(out, "{}", line.render(format)).map_err(io)?;
        }
    }
    out.flush().map_err(io)?;
    Ok(SampleMeta {
        config_hash: cfg.hash(),
        seed,
        samples,
        workers,
        mode: cfg.mode.unwrap_or_default(),
        regime: engine.regime().to_string(),
        photons: params.photons,
        modes: info.modes,
        depth: info.depth,
        mu_max: info.mu_max,
        uniform_loss: info.uniform_mu.is_some(),
        d_star: sp.d_star,
        thermalization_depth: d_tilde,
        format,
    })
}

/// Sidecar path for the metadata of a sample file.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// `run_sample` into `cfg.out`, plus the metadata sidecar.
pub fn run_sample_to_file(cfg: &RunConfig) -> Result<SampleMeta> {
    let path = cfg.out.as_ref().ok_or_else(|| Error::Input("sample needs --out".into()))?;
    let io = |e: std::io::Error| Error::Input(format!("{}: {e}", path.display()));
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    let meta = run_sample(cfg, &mut file)?;
    let text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(meta_path(path), text + "\n").map_err(io)?;
    Ok(meta)
}

pub fn run_validate(cfg: &RunConfig) -> ValidationReport {
    run_suite(&cfg.validate)
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub samples: usize,
    pub modes: usize,
    pub mean_photons: Vec<f64>,
    /// Total photon number → count.
    pub total_histogram: BTreeMap<usize, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tvd: Option<f64>,
}

fn format_for(path: &Path, hint: Option<Format>) -> Format {
    hint.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        _ => Format::Jsonl,
    })
}

/// Parses a sample file; errors carry the 1-based line number.
pub fn read_samples(text: &str, format: Format) -> Result<Vec<FockSample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |what: String| Error::Input(format!("line {}: {what}", i + 1));
        let sample = match format {
            Format::Jsonl => serde_json::from_str::<SampleLine>(line).map_err(|e| err(e.to_string()))?.n,
            Format::Csv => FockSample(
                line.split(',')
                    .map(|f| f.trim().parse::<usize>().map_err(|e| err(format!("{f:?}: {e}"))))
                    .collect::<Result<_>>()?,
            ),
        };
        if let Some(first) = out.first().map(|s: &FockSample| s.len()) {
            if sample.len() != first {
                return Err(err(format!("{} modes, expected {first}", sample.len())));
            }
        }
        out.push(sample);
    }
    Ok(out)
}

/// Reference distribution file: `{"outcomes": [[...], ...], "weights": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    pub outcomes: Vec<FockSample>,
    pub weights: Vec<f64>,
}

impl DistributionFile {
    pub fn from_distribution(d: &Distribution) -> Self {
        let (outcomes, weights) = d.iter().map(|(o, w)| (o.clone(), w)).unzip();
        Self { outcomes, weights }
    }

    pub fn into_distribution(self) -> Result<Distribution> {
        if self.outcomes.len() != self.weights.len() {
            return Err(Error::Input("reference has mismatched outcomes and weights".into()));
        }
        Ok(Distribution::from_pairs(self.outcomes.into_iter().zip(self.weights)))
    }
}

fn load_reference(path: &Path, hint: Option<Format>) -> Result<Distribution> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if let Ok(file) = serde_json::from_str::<DistributionFile>(&text) {
        return file.into_distribution();
    }
    let samples = read_samples(&text, format_for(path, hint))?;
    Ok(Distribution::empirical(samples.iter()))
}

pub fn stats_of(samples: &[FockSample], reference: Option<&Distribution>) -> Result<StatsReport> {
    let modes = samples.first().map_or(0, |s| s.len());
    let mut sums = vec![0u64; modes];
    let mut hist = BTreeMap::new();
    for s in samples {
        for (acc, &k) in sums.iter_mut().zip(s.iter()) {
            *acc += k as u64;
        }
        *hist.entry(s.total()).or_insert(0) += 1;
    }
    let n = samples.len().max(1) as f64;
    let tvd = reference.map(|r| total_variation(&Distribution::empirical(samples.iter()), r)).transpose()?;
    Ok(StatsReport {
        samples: samples.len(),
        modes,
        mean_photons: sums.iter().map(|&s| s as f64 / n).collect(),
        total_histogram: hist,
        tvd,
    })
}

pub fn run_stats(cfg: &RunConfig) -> Result<StatsReport> {
    let path = cfg.input.as_ref().ok_or_else(|| Error::Input("stats needs an input sample file".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let samples = read_samples(&text, format_for(path, cfg.format))?;
    let reference = cfg.reference.as_ref().map(|r| load_reference(r, cfg.format)).transpose()?;
    stats_of(&samples, reference.as_ref())
}

/// Exit status for an error: 1 usage, 2 model violation, 3 capacity.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Resample(_) => 1,
        Error::Model(_) | Error::Degenerate(_) => 2,
        Error::Capacity(_) => 3,
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_brickwork;

    #[test]
    fn sample_files_parse_in_both_formats() {
        let csv = read_samples("1,0,2\n\n0,0,0\n", Format::Csv).unwrap();
        assert_eq!(csv, vec![FockSample(vec![1, 0, 2]), FockSample(vec![0, 0, 0])]);
        let jsonl = read_samples("{\"n\":[1,0],\"regime\":\"thermal\"}\n", Format::Jsonl).unwrap();
        assert_eq!(jsonl, vec![FockSample(vec![1, 0])]);
        let err = read_samples("1,0\n1,0,0\n", Format::Csv).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn sample_lines_render() {
        let line = SampleLine { n: FockSample(vec![0, 2]), regime: "mps".into(), herald: None };
        assert_eq!(line.render(Format::Jsonl), r#"{"n":[0,2],"regime":"mps"}"#);
        assert_eq!(line.render(Format::Csv), "0,2");
        let heralded = SampleLine { herald: Some(vec![1, 1]), ..line };
        assert_eq!(heralded.render(Format::Jsonl), r#"{"n":[0,2],"regime":"mps","herald":[1,1]}"#);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = RunConfig { seed: Some(1), ..RunConfig::default() };
        let b = RunConfig { seed: Some(2), ..RunConfig::default() };
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert!(RunConfig::from_json(r#"{"sede": 1}"#).is_err());
    }

    #[test]
    fn sidecar_path_appends_suffix() {
        assert_eq!(meta_path(Path::new("out/s.jsonl")), PathBuf::from("out/s.jsonl.meta.json"));
    }

    #[test]
    fn circuit_info_recovers_layer_transmission() {
        let mut rng = RandomStream::new(8);
        let info = CircuitInfo::new(&random_brickwork(5, 4, 0.9, &mut rng).unwrap()).unwrap();
        assert!((info.layer_tau - 0.9).abs() < 1e-12);
        assert!((info.uniform_mu.unwrap() - 0.9f64.powi(4)).abs() < 1e-12);
        let lossless = CircuitInfo::new(&random_brickwork(3, 2, 1.0, &mut rng).unwrap()).unwrap();
        assert_eq!(lossless.layer_tau, 1.0);
    }

    #[test]
    fn stats_counts_histogram() {
        let s = vec![FockSample(vec![1, 1]), FockSample(vec![0, 1]), FockSample(vec![0, 1])];
        let r = stats_of(&s, None).unwrap();
        assert_eq!(r.mean_photons, vec![1.0 / 3.0, 1.0]);
        assert_eq!(r.total_histogram, BTreeMap::from([(1, 2), (2, 1)]));
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::Input("x".into())), 1);
        assert_eq!(exit_code(&Error::Model("x".into())), 2);
        assert_eq!(exit_code(&Error::Capacity("x".into())), 3);
    }
}
