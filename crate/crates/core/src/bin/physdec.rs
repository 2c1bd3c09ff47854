use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use physdec::bench::{self, DecoderId, ExperimentConfig};
use physdec::codes::{enumerate_codebook_capped, ParityCheckMatrix, DEFAULT_CODEBOOK_CAP};
use physdec::gradcheck;

#[derive(Parser)]
#[command(name = "physdec", version, about = "Physics-aware decoding over PDE channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled config: heat_demo, heat_ber, hamming_ml, nlse_ber.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => bail!("pass --config FILE or --preset NAME"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the analytic gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Dump input waveform, solver output, observation and decoding trace.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated bipolar word such as +1,-1,+1; defaults to a random codeword.
        #[arg(long, allow_hyphen_values = true)]
        word: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Skip the decoding trace.
        #[arg(long)]
        no_decode: bool,
        /// Output directory (default: $PHYSDEC_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode one observation with every configured decoder.
    Decode {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Observation CSV (sensor_position,y_re,y_im). Synthesized when absent.
        #[arg(long)]
        observation: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        word: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Directory for the gf trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo BER sweep; writes one CSV.
    BerSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        trials: Option<u64>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Comma-separated noise levels replacing the config grid.
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        /// Comma-separated decoder subset (gf, peak, bp, ml).
        #[arg(long, value_delimiter = ',')]
        decoders: Option<Vec<DecoderId>>,
        /// Output CSV (default: $PHYSDEC_OUT_DIR/ber_<hash>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print or save the enumerated codebook of a code.
    Codebook {
        /// Builtin name or parity-check file.
        #[arg(long)]
        code: String,
        #[arg(long, default_value_t = DEFAULT_CODEBOOK_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_word(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| match t.trim() {
            "+1" | "1" => Ok(1.0),
            "-1" => Ok(-1.0),
            other => bail!("word entries must be +1 or -1, got {other:?}"),
        })
        .collect()
}

fn fmt_word(w: &[f64]) -> String {
    w.iter().map(|&v| if v > 0.0 { '+' } else { '-' }).collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gradcheck { instances, seed } => {
            let reports = [
                gradcheck::check_heat(instances, seed)?,
                gradcheck::check_nlse(instances, seed)?,
                gradcheck::check_potential(&ParityCheckMatrix::builtin("hamming7_4")?, instances * 5, seed)?,
                gradcheck::check_potential(&ParityCheckMatrix::builtin("bch15_7")?, instances * 5, seed)?,
                gradcheck::check_potential(&ParityCheckMatrix::builtin("bch31_15")?, instances * 5, seed)?,
            ];
            let mut ok = true;
            for r in &reports {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                println!("{status} {:<10} instances={:<4} max_error={:.3e} tol={:.0e}", r.name, r.instances, r.max_error, r.tolerance);
                ok &= r.passed();
            }
            Ok(ok)
        }
        Command::Simulate { cfg, word, sigma, no_decode, out } => {
            let config = cfg.load()?;
            let word = word.as_deref().map(parse_word).transpose()?;
            let result = bench::simulate(config, word, sigma, !no_decode)?;
            let dir = out.unwrap_or_else(bench::default_out_dir);
            result.write_to(&dir).with_context(|| format!("writing {}", dir.display()))?;
            println!("word {}", fmt_word(&result.word));
            for (name, _) in &result.files {
                println!("wrote {}", dir.join(name).display());
            }
            Ok(true)
        }
        Command::Decode { cfg, observation, word, sigma, out } => {
            let config = cfg.load()?;
            let (truth, y) = match observation {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    (None, bench::parse_observation_csv(&text)?.1)
                }
                None => {
                    let sigma = sigma.unwrap_or(config.noise_levels[0]);
                    let word = word.as_deref().map(parse_word).transpose()?;
                    let (w, y) = bench::synthetic_observation(&config, word, sigma)?;
                    (Some(w), y)
                }
            };
            if let Some(t) = &truth {
                println!("sent     {}", fmt_word(t));
            }
            for o in bench::decode_observation(config, &y)? {
                let errors = truth
                    .as_ref()
                    .map(|t| format!(" bit_errors={}", o.estimate.iter().zip(t).filter(|(a, b)| a != b).count()))
                    .unwrap_or_default();
                let div = if o.diverged { " diverged" } else { "" };
                println!("{:<8} {} codeword={}{errors}{div}", o.decoder.as_str(), fmt_word(&o.estimate), o.is_codeword);
                if let (Some(trace), Some(dir)) = (&o.trace, &out) {
                    fs::create_dir_all(dir)?;
                    let path = dir.join("trace.csv");
                    fs::write(&path, bench::trace_csv(trace))?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(true)
        }
        Command::BerSweep { cfg, trials, threads, sigma, decoders, out } => {
            let mut config = cfg.load()?;
            if let Some(t) = trials {
                config.trials = t;
            }
            if let Some(s) = sigma {
                config.noise_levels = s;
            }
            if let Some(d) = decoders {
                config.decoders = d;
            }
            let report = bench::run_ber_sweep(config, threads)?;
            let path = out.unwrap_or_else(|| bench::default_out_dir().join(format!("ber_{}.csv", report.config_hash)));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, report.to_csv_string()).with_context(|| format!("writing {}", path.display()))?;
            for r in &report.records {
                println!(
                    "{:<5} sigma={:<8} ber={:.4e} bler={:.4e} diverged={}",
                    r.decoder.as_str(),
                    r.sigma,
                    r.ber,
                    r.block_error_rate(),
                    r.diverged
                );
            }
            println!("wrote {}", path.display());
            let violations = report.oracle_violations();
            for v in &violations {
                eprintln!("ml oracle violated: {v}");
            }
            Ok(violations.is_empty())
        }
        Command::Codebook { code, cap, out } => {
            let h = ParityCheckMatrix::load(&code)?;
            let book = enumerate_codebook_capped(&h, cap)?;
            let text = book.to_text();
            match out {
                Some(path) => {
                    fs::write(&path, text)?;
                    println!("wrote {} codewords to {}", book.len(), path.display());
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
