use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qisolab_core::config::{ExperimentConfig, ExperimentKind};
use qisolab_core::experiments;

/// Run a named experiment and write CSV tables plus a JSON report.
#[derive(Debug, Parser)]
#[command(name = "qisolab", version, allow_negative_numbers = true)]
struct Cli {
    /// spectrum | gap-sweep | hadamard-check | weber | pruefer-compare | trace | validate
    experiment: Option<ExperimentKind>,

    /// JSON config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    h: Option<f64>,

    #[arg(long)]
    t: Option<f64>,

    #[arg(long)]
    eps: Option<f64>,

    /// Interior points of the fine grid.
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,

    /// Half-length L of the box [-L, L].
    #[arg(long = "grid-L")]
    grid_l: Option<f64>,

    /// Print the effective config as JSON and exit.
    #[arg(long)]
    print_defaults: bool,

    /// Print only failed assertions.
    #[arg(long, short)]
    quiet: bool,
}

impl Cli {
    fn config(&self) -> qisolab_core::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = self.experiment {
            c.experiment = k;
        }
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        if let Some(h) = self.h {
            c.h = h;
        }
        if let Some(t) = self.t {
            c.potential.t = t;
        }
        if let Some(eps) = self.eps {
            c.potential.eps = eps;
        }
        if let Some(n) = self.grid_n {
            c.grid.n = n;
        }
        if let Some(l) = self.grid_l {
            c.grid.half_length = l;
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_defaults {
        println!("{}", config.to_json());
        return ExitCode::SUCCESS;
    }
    let report = match experiments::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for a in &report.assertions {
        if !cli.quiet || !a.passed {
            println!("{}", a.line());
        }
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    let failed = report.failures().count();
    println!(
        "{}: {} assertions, {failed} failed, {:.1} s; report in {}",
        report.experiment,
        report.assertions.len(),
        report.elapsed_seconds,
        config.output_dir.join(report.file_name()).display()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
