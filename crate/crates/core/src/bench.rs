//! Configuration-driven experiments: Monte-Carlo BER sweeps, waveform
//! simulation dumps and single-shot decoding.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{noiseless, synth_waveform, transmit, ChannelLayout, SensorPlacement};
use crate::codes::{enumerate_codebook_capped, is_codeword, ParityCheckMatrix, DEFAULT_CODEBOOK_CAP};
use crate::decoder::{bp_detect, gf_decode, peak_detect, DecodeError, GfDecoderParams, TraceRow};
use crate::heat::{HeatGrid, HeatGridParams};
use crate::medium::{Medium, Sample};
use crate::nlse::{NlseGrid, NlseGridParams};
use crate::rng::{trial_rng, Purpose};
use crate::Error;

/// Version tag written in every BER CSV header.
pub const BER_SCHEMA: &str = "ber/v1";

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PHYSDEC_OUT_DIR";

/// Bundled experiment configurations.
pub const PRESETS: &[(&str, &str)] = &[
    ("heat_demo", include_str!("../configs/heat_demo.json")),
    ("heat_ber", include_str!("../configs/heat_ber.json")),
    ("hamming_ml", include_str!("../configs/hamming_ml.json")),
    ("nlse_ber", include_str!("../configs/nlse_ber.json")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pde {
    Heat,
    Nlse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderId {
    Gf,
    Peak,
    Bp,
    Ml,
}

impl DecoderId {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderId::Gf => "gf",
            DecoderId::Peak => "peak",
            DecoderId::Bp => "bp",
            DecoderId::Ml => "ml",
        }
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DecoderId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "gf" => Ok(DecoderId::Gf),
            "peak" => Ok(DecoderId::Peak),
            "bp" => Ok(DecoderId::Bp),
            "ml" => Ok(DecoderId::Ml),
            other => Err(Error::Config(format!("unknown decoder {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    /// Pulse half-width. For the NLSE it defaults to `sqrt(dispersion_length)`.
    #[serde(default)]
    pub t0: Option<f64>,
    /// Dispersion length of a pulse in ξ units; sets `t0 = sqrt(L_D)` on the
    /// NLSE grid when `t0` is absent.
    #[serde(default)]
    pub dispersion_length: Option<f64>,
    #[serde(default)]
    pub min_spacing: Option<f64>,
    #[serde(default)]
    pub sensors: SensorPlacement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pde: Pde,
    /// Builtin code name (`hamming7_4`, `bch15_7`, `bch31_15`) or a path to a
    /// parity-check file.
    pub code: String,
    #[serde(default)]
    pub heat: Option<HeatGridParams>,
    #[serde(default)]
    pub nlse: Option<NlseGridParams>,
    pub layout: LayoutConfig,
    pub decoder: GfDecoderParams,
    pub noise_levels: Vec<f64>,
    pub trials: u64,
    pub decoders: Vec<DecoderId>,
    pub seed: u64,
    #[serde(default)]
    pub codebook_cap: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self, Error> {
        let text = PRESETS
            .iter()
            .find(|(key, _)| *key == name)
            .map(|(_, text)| *text)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
        Self::from_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The solver plus the layout bound to it.
#[derive(Clone, Debug)]
pub enum System {
    Heat { grid: HeatGrid, layout: ChannelLayout },
    Nlse { grid: NlseGrid, layout: ChannelLayout },
}

impl System {
    pub fn layout(&self) -> &ChannelLayout {
        match self {
            System::Heat { layout, .. } | System::Nlse { layout, .. } => layout,
        }
    }
}

/// A validated experiment with every default filled in.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub code: ParityCheckMatrix,
    pub system: System,
}

fn config_err(field: &str, message: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {message}"))
}

impl Experiment {
    pub fn new(mut config: ExperimentConfig) -> Result<Self, Error> {
        if config.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if config.noise_levels.is_empty() {
            return Err(config_err("noise_levels", "must not be empty"));
        }
        if let Some(&bad) = config.noise_levels.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(config_err("noise_levels", format!("invalid sigma {bad}")));
        }
        if config.decoders.is_empty() {
            return Err(config_err("decoders", "must not be empty"));
        }
        config.decoder.validate().map_err(|e| config_err("decoder", e))?;
        let code = ParityCheckMatrix::load(&config.code).map_err(|e| config_err("code", e))?;

        let system = match config.pde {
            Pde::Heat => {
                let params = config.heat.ok_or_else(|| config_err("heat", "missing grid for pde = heat"))?;
                let grid = HeatGrid::new(params).map_err(|e| config_err("heat", e))?;
                let t0 = config.layout.t0.ok_or_else(|| config_err("layout.t0", "required for pde = heat"))?;
                let layout = ChannelLayout::evenly_spaced(&grid, code.n(), t0, config.layout.sensors, config.layout.min_spacing)
                    .map_err(|e| config_err("layout", e))?;
                if config.decoders.contains(&DecoderId::Bp) {
                    return Err(config_err("decoders", "bp is only defined for pde = nlse"));
                }
                System::Heat { grid, layout }
            }
            Pde::Nlse => {
                let params = config.nlse.ok_or_else(|| config_err("nlse", "missing grid for pde = nlse"))?;
                let grid = NlseGrid::new(params).map_err(|e| config_err("nlse", e))?;
                let t0 = match (config.layout.t0, config.layout.dispersion_length) {
                    (Some(t0), _) => t0,
                    (None, Some(ld)) if ld > 0.0 => ld.sqrt(),
                    _ => return Err(config_err("layout", "set t0 or a positive dispersion_length")),
                };
                config.layout.t0 = Some(t0);
                let layout = ChannelLayout::evenly_spaced(&grid, code.n(), t0, config.layout.sensors, config.layout.min_spacing)
                    .map_err(|e| config_err("layout", e))?;
                if config.decoders.contains(&DecoderId::Bp) && !layout.senses_full_grid() {
                    return Err(config_err("decoders", "bp needs layout.sensors = all"));
                }
                System::Nlse { grid, layout }
            }
        };
        if config.decoders.contains(&DecoderId::Peak) {
            system.layout().pulse_slots().map_err(|e| config_err("decoders", e))?;
        }
        if config.decoders.contains(&DecoderId::Ml) {
            let rank = code.rank();
            let cap = config.codebook_cap.unwrap_or(DEFAULT_CODEBOOK_CAP);
            let k = code.n() - rank;
            if k >= usize::BITS as usize || (1usize << k) > cap {
                return Err(config_err("decoders", format!("ml needs 2^{k} codewords, above the cap {cap}")));
            }
        }
        Ok(Self { config, code, system })
    }
}

/// Uniform sampling of codewords from a null-space basis.
#[derive(Clone, Debug)]
pub struct CodewordSampler {
    basis: Vec<Vec<u8>>,
    n: usize,
}

impl CodewordSampler {
    pub fn new(code: &ParityCheckMatrix) -> Self {
        Self {
            basis: code.null_space_basis(),
            n: code.n(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut bits = vec![0u8; self.n];
        for row in &self.basis {
            if rng.random_bool(0.5) {
                for (b, &r) in bits.iter_mut().zip(row) {
                    *b ^= r;
                }
            }
        }
        bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
    }
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerRecord {
    pub decoder: DecoderId,
    pub sigma: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub diverged: u64,
}

impl BerRecord {
    pub fn block_error_rate(&self) -> f64 {
        self.block_errors as f64 / self.trials as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    bit_errors: u64,
    block_errors: u64,
    diverged: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.bit_errors += o.bit_errors;
        self.block_errors += o.block_errors;
        self.diverged += o.diverged;
    }
}

fn score(estimate: &[f64], truth: &[f64]) -> Counts {
    let bit_errors = estimate.iter().zip(truth).filter(|(a, b)| a != b).count() as u64;
    Counts {
        bit_errors,
        block_errors: u64::from(bit_errors > 0),
        diverged: 0,
    }
}

/// Codewords paired with their noiseless sensor images.
type Images<S> = (Vec<Vec<f64>>, Vec<Vec<S>>);

type Detector<'a, S> = dyn Fn(&[S]) -> Result<Vec<f64>, Error> + Sync + 'a;

struct SweepContext<'a, M: Medium> {
    exp: &'a Experiment,
    medium: &'a M,
    layout: &'a ChannelLayout,
    sampler: CodewordSampler,
    codebook_images: Option<Images<M::Sample>>,
    bp: &'a Detector<'a, M::Sample>,
}

impl<M: Medium> SweepContext<'_, M> {
    fn trial(&self, level: usize, sigma: f64, trial: u64) -> Result<Vec<Counts>, Error> {
        let cfg = &self.exp.config;
        let mut channel_rng = trial_rng(cfg.seed, level, trial, Purpose::Channel);
        let word = self.sampler.sample(&mut channel_rng);
        let obs = transmit(&word, self.layout, self.medium, sigma, &mut channel_rng, cfg.seed)?;
        cfg.decoders
            .iter()
            .map(|id| match id {
                DecoderId::Gf => {
                    let mut rng = trial_rng(cfg.seed, level, trial, Purpose::Decoder);
                    match gf_decode(&obs.y, self.layout, self.medium, &self.exp.code, &cfg.decoder, &mut rng, false) {
                        Ok(out) => Ok(score(&out.estimate, &word)),
                        Err(Error::Decode(DecodeError::Diverged { last_estimate, .. })) => {
                            let mut c = score(&last_estimate, &word);
                            c.block_errors = 1;
                            c.diverged = 1;
                            Ok(c)
                        }
                        Err(e) => Err(e),
                    }
                }
                DecoderId::Peak => Ok(score(&peak_detect(&obs.y, self.layout)?, &word)),
                DecoderId::Bp => Ok(score(&(self.bp)(&obs.y)?, &word)),
                DecoderId::Ml => {
                    let (words, images) = self
                        .codebook_images
                        .as_ref()
                        .ok_or_else(|| Error::Config("ml codebook not prepared".into()))?;
                    let best = ml_index(&obs.y, images);
                    Ok(score(&words[best], &word))
                }
            })
            .collect()
    }
}

/// Index of the closest precomputed image, ties to the lowest index.
fn ml_index<S: Sample>(y: &[S], images: &[Vec<S>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (idx, image) in images.iter().enumerate() {
        let d: f64 = image.iter().zip(y).map(|(a, b)| a.sq_dist(*b)).sum();
        if d < best.1 {
            best = (idx, d);
        }
    }
    best.0
}

fn sweep_medium<M: Medium>(
    exp: &Experiment,
    medium: &M,
    layout: &ChannelLayout,
    bp: &Detector<'_, M::Sample>,
) -> Result<Vec<BerRecord>, Error> {
    let cfg = &exp.config;
    let codebook_images = if cfg.decoders.contains(&DecoderId::Ml) {
        let book = enumerate_codebook_capped(&exp.code, cfg.codebook_cap.unwrap_or(DEFAULT_CODEBOOK_CAP))?;
        let images = book
            .words()
            .par_iter()
            .map(|w| noiseless(w, layout, medium))
            .collect::<Result<Vec<_>, _>>()?;
        Some((book.words().to_vec(), images))
    } else {
        None
    };
    let ctx = SweepContext {
        exp,
        medium,
        layout,
        sampler: CodewordSampler::new(&exp.code),
        codebook_images,
        bp,
    };
    let n = exp.code.n() as u64;
    let mut records = Vec::new();
    for (level, &sigma) in cfg.noise_levels.iter().enumerate() {
        let zero = || vec![Counts::default(); cfg.decoders.len()];
        let totals = (0..cfg.trials)
            .into_par_iter()
            .map(|t| ctx.trial(level, sigma, t))
            .try_fold(zero, |mut acc, counts| {
                for (a, c) in acc.iter_mut().zip(counts?) {
                    *a += c;
                }
                Ok::<_, Error>(acc)
            })
            .try_reduce(zero, |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            })?;
        for (&decoder, c) in cfg.decoders.iter().zip(totals) {
            records.push(BerRecord {
                decoder,
                sigma,
                trials: cfg.trials,
                bit_errors: c.bit_errors,
                block_errors: c.block_errors,
                ber: c.bit_errors as f64 / (cfg.trials * n) as f64,
                diverged: c.diverged,
            });
        }
    }
    Ok(records)
}

/// Records of a finished sweep plus what is needed to reproduce them.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub records: Vec<BerRecord>,
}

impl SweepReport {
    pub fn record(&self, decoder: DecoderId, sigma: f64) -> Option<&BerRecord> {
        self.records.iter().find(|r| r.decoder == decoder && r.sigma == sigma)
    }

    pub fn curve(&self, decoder: DecoderId) -> Vec<&BerRecord> {
        self.records.iter().filter(|r| r.decoder == decoder).collect()
    }

    /// Noise levels where gf has fewer block errors than ml by more than three
    /// binomial standard errors of the ml count.
    pub fn oracle_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for ml in self.curve(DecoderId::Ml) {
            let Some(gf) = self.record(DecoderId::Gf, ml.sigma) else { continue };
            let slack = 3.0 * binomial_std(ml.block_errors, ml.trials);
            if (gf.block_errors as f64) < ml.block_errors as f64 - slack {
                out.push(format!(
                    "sigma {}: gf block errors {} below ml {} by more than {slack:.2}",
                    ml.sigma, gf.block_errors, ml.block_errors
                ));
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), Error> {
        let io = |e: std::io::Error| Error::Config(format!("writing csv: {e}"));
        writeln!(out, "# physdec ber-sweep schema={BER_SCHEMA}").map_err(io)?;
        writeln!(out, "# config_hash={}", self.config_hash).map_err(io)?;
        writeln!(out, "# config={}", self.config.to_json()).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Config(format!("writing csv: {e}"));
        w.write_record(["config_hash", "decoder", "sigma", "trials", "bit_errors", "block_errors", "ber", "bler", "diverged"])
            .map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                self.config_hash.clone(),
                r.decoder.to_string(),
                r.sigma.to_string(),
                r.trials.to_string(),
                r.bit_errors.to_string(),
                r.block_errors.to_string(),
                r.ber.to_string(),
                r.block_error_rate().to_string(),
                r.diverged.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// `sqrt(N p (1 − p))` for a count out of `trials`.
pub fn binomial_std(count: u64, trials: u64) -> f64 {
    let p = count as f64 / trials as f64;
    (trials as f64 * p * (1.0 - p)).sqrt()
}

/// SNR in dB for unit-amplitude pulses, `−20·log10 σ`.
pub fn snr_db(sigma: f64) -> f64 {
    -20.0 * sigma.log10()
}

/// Least-squares slope of `log10 BER` against SNR in dB, over the records
/// with nonzero BER. `None` with fewer than two such points.
pub fn log_ber_slope(records: &[&BerRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.ber > 0.0 && r.sigma > 0.0)
        .map(|r| (snr_db(r.sigma), r.ber.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs every (noise level, decoder) pair. `threads = None` uses all cores.
pub fn run_ber_sweep(config: ExperimentConfig, threads: Option<usize>) -> Result<SweepReport, Error> {
    let exp = Experiment::new(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| match &exp.system {
        System::Heat { grid, layout } => {
            let no_bp = |_: &[f64]| -> Result<Vec<f64>, Error> { Err(Error::Config("bp is NLSE-only".into())) };
            sweep_medium(&exp, grid, layout, &no_bp)
        }
        System::Nlse { grid, layout } => {
            let bp = |y: &[Complex64]| bp_detect(y, layout, grid);
            sweep_medium(&exp, grid, layout, &bp)
        }
    })?;
    Ok(SweepReport {
        config_hash: exp.config.hash(),
        config: exp.config,
        records,
    })
}

/// Default directory for command outputs.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Writes `x,u` (real) or `tau,re,im,abs` (complex) rows.
pub fn waveform_csv<S: Sample>(coords: &[f64], values: &[S]) -> String {
    let mut out = String::new();
    let complex = values.first().and_then(|v| v.im()).is_some();
    out.push_str(if complex { "tau,re,im,abs\n" } else { "x,u\n" });
    for (x, v) in coords.iter().zip(values) {
        match v.im() {
            Some(im) => out.push_str(&format!("{x},{},{im},{}\n", v.re(), v.abs())),
            None => out.push_str(&format!("{x},{}\n", v.re())),
        }
    }
    out
}

/// Writes `sensor_position,y_re,y_im` rows; `y_im` is blank for real data.
pub fn observation_csv<S: Sample>(positions: &[f64], y: &[S]) -> String {
    let mut out = String::from("sensor_position,y_re,y_im\n");
    for (x, v) in positions.iter().zip(y) {
        match v.im() {
            Some(im) => out.push_str(&format!("{x},{},{im}\n", v.re())),
            None => out.push_str(&format!("{x},{},\n", v.re())),
        }
    }
    out
}

/// Parses an observation CSV back into complex samples (imaginary part 0 when
/// blank) together with the sensor positions.
pub fn parse_observation_csv(text: &str) -> Result<(Vec<f64>, Vec<Complex64>), Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut positions = Vec::new();
    let mut values = Vec::new();
    let bad = |line: usize, what: &str| Error::Config(format!("observation row {line}: bad {what}"));
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Config(format!("observation csv: {e}")))?;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let x: f64 = field(0).parse().map_err(|_| bad(line + 1, "sensor_position"))?;
        let re: f64 = field(1).parse().map_err(|_| bad(line + 1, "y_re"))?;
        let im: f64 = match field(2) {
            "" => 0.0,
            s => s.parse().map_err(|_| bad(line + 1, "y_im"))?,
        };
        positions.push(x);
        values.push(Complex64::new(re, im));
    }
    Ok((positions, values))
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iteration,squared_error,potential_energy\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.iteration, r.squared_error, r.potential_energy));
    }
    out
}

/// Files produced by [`simulate`], keyed by file name.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutput {
    pub files: Vec<(String, String)>,
    pub word: Vec<f64>,
}

impl SimulationOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn simulate_medium<M: Medium>(
    exp: &Experiment,
    medium: &M,
    layout: &ChannelLayout,
    word: Vec<f64>,
    sigma: f64,
    decode: bool,
) -> Result<SimulationOutput, Error> {
    let cfg = &exp.config;
    let coords: Vec<f64> = (0..medium.len()).map(|k| medium.coordinate(k)).collect();
    let sensor_pos: Vec<f64> = layout.sensor_indices().iter().map(|&k| coords[k]).collect();
    let u0: Vec<M::Sample> = synth_waveform(&word, layout)?;
    let out = medium.forward(&u0)?;
    // Stream 0 draws the word, stream 1 the noise; `synthetic_observation` matches.
    let mut rng = trial_rng(cfg.seed, 0, 1, Purpose::Channel);
    let obs = transmit(&word, layout, medium, sigma, &mut rng, cfg.seed)?;
    let mut files = vec![
        ("input_waveform.csv".to_string(), waveform_csv(&coords, &u0)),
        ("solver_output.csv".to_string(), waveform_csv(&coords, &out)),
        ("observation.csv".to_string(), observation_csv(&sensor_pos, &obs.y)),
    ];
    if decode {
        let mut drng = trial_rng(cfg.seed, 0, 0, Purpose::Decoder);
        let result = gf_decode(&obs.y, layout, medium, &exp.code, &cfg.decoder, &mut drng, true)?;
        let trace = result.trajectory.as_deref().unwrap_or(&[]);
        files.push(("trace.csv".to_string(), trace_csv(trace)));
        let est_in: Vec<M::Sample> = synth_waveform(&result.final_state, layout)?;
        let est_out = medium.forward(&est_in)?;
        files.push(("estimated_output.csv".to_string(), waveform_csv(&coords, &est_out)));
    }
    Ok(SimulationOutput { files, word })
}

/// Dumps the input waveform, solver output and noisy observation for one
/// word (a random codeword when `word` is `None`), plus a decoding trace when
/// `decode` is set.
pub fn simulate(config: ExperimentConfig, word: Option<Vec<f64>>, sigma: Option<f64>, decode: bool) -> Result<SimulationOutput, Error> {
    let exp = Experiment::new(config)?;
    let n = exp.code.n();
    let word = match word {
        Some(w) if w.len() != n => {
            return Err(Error::Config(format!("word has {} entries, code length is {n}", w.len())));
        }
        Some(w) => w,
        None => CodewordSampler::new(&exp.code).sample(&mut trial_rng(exp.config.seed, 0, 0, Purpose::Channel)),
    };
    let sigma = sigma.unwrap_or(exp.config.noise_levels[0]);
    match &exp.system {
        System::Heat { grid, layout } => simulate_medium(&exp, grid, layout, word, sigma, decode),
        System::Nlse { grid, layout } => simulate_medium(&exp, grid, layout, word, sigma, decode),
    }
}

/// Estimate produced by one decoder in [`decode_observation`].
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderOutcome {
    pub decoder: DecoderId,
    pub estimate: Vec<f64>,
    pub is_codeword: bool,
    pub diverged: bool,
    pub trace: Option<Vec<TraceRow>>,
}

fn decode_medium<M: Medium>(
    exp: &Experiment,
    medium: &M,
    layout: &ChannelLayout,
    y: &[M::Sample],
    bp: &Detector<'_, M::Sample>,
) -> Result<Vec<DecoderOutcome>, Error> {
    let cfg = &exp.config;
    cfg.decoders
        .iter()
        .map(|&decoder| {
            let (estimate, diverged, trace) = match decoder {
                DecoderId::Gf => {
                    let mut rng = trial_rng(cfg.seed, 0, 0, Purpose::Decoder);
                    match gf_decode(y, layout, medium, &exp.code, &cfg.decoder, &mut rng, true) {
                        Ok(r) => (r.estimate, false, r.trajectory),
                        Err(Error::Decode(DecodeError::Diverged { last_estimate, .. })) => (last_estimate, true, None),
                        Err(e) => return Err(e),
                    }
                }
                DecoderId::Peak => (peak_detect(y, layout)?, false, None),
                DecoderId::Bp => (bp(y)?, false, None),
                DecoderId::Ml => {
                    let book = enumerate_codebook_capped(&exp.code, cfg.codebook_cap.unwrap_or(DEFAULT_CODEBOOK_CAP))?;
                    let images = book
                        .words()
                        .iter()
                        .map(|w| noiseless(w, layout, medium))
                        .collect::<Result<Vec<_>, _>>()?;
                    (book.words()[ml_index(y, &images)].clone(), false, None)
                }
            };
            Ok(DecoderOutcome {
                decoder,
                is_codeword: is_codeword(&exp.code, &estimate),
                estimate,
                diverged,
                trace,
            })
        })
        .collect()
}

/// Runs every configured decoder on one observation. Real channels use the
/// real part of `y` and reject nonzero imaginary parts.
pub fn decode_observation(config: ExperimentConfig, y: &[Complex64]) -> Result<Vec<DecoderOutcome>, Error> {
    let exp = Experiment::new(config)?;
    match &exp.system {
        System::Heat { grid, layout } => {
            if y.iter().any(|v| v.im != 0.0) {
                return Err(Error::Config("heat observations are real-valued".into()));
            }
            let real: Vec<f64> = y.iter().map(|v| v.re).collect();
            let no_bp = |_: &[f64]| -> Result<Vec<f64>, Error> { Err(Error::Config("bp is NLSE-only".into())) };
            decode_medium(&exp, grid, layout, &real, &no_bp)
        }
        System::Nlse { grid, layout } => {
            let bp = |v: &[Complex64]| bp_detect(v, layout, grid);
            decode_medium(&exp, grid, layout, y, &bp)
        }
    }
}

/// Transmits `word` (or a seeded random codeword) and returns the noisy
/// observation as complex samples, for the `decode` command.
pub fn synthetic_observation(config: &ExperimentConfig, word: Option<Vec<f64>>, sigma: f64) -> Result<(Vec<f64>, Vec<Complex64>), Error> {
    let exp = Experiment::new(config.clone())?;
    let word = match word {
        Some(w) => w,
        None => CodewordSampler::new(&exp.code).sample(&mut trial_rng(config.seed, 0, 0, Purpose::Channel)),
    };
    let mut rng = trial_rng(config.seed, 0, 1, Purpose::Channel);
    let y = match &exp.system {
        System::Heat { grid, layout } => transmit(&word, layout, grid, sigma, &mut rng, config.seed)?
            .y
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        System::Nlse { grid, layout } => transmit(&word, layout, grid, sigma, &mut rng, config.seed)?.y,
    };
    Ok((word, y))
}
