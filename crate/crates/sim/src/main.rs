use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fade_sim::harness::sweep::{split_values, sweep};
use fade_sim::harness::units::parse_duration;
use fade_sim::harness::{self, summary_csv, HarnessError, RunReport, Scenario};

#[derive(Parser)]
#[command(name = "fade", version, about = "Simulate and measure the 0xfade reliable Ethernet transport")]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the scenario duration, e.g. "2s" or "500ms".
    #[arg(long, global = true, value_parser = parse_duration)]
    duration: Option<u64>,
    /// Directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json.
    Run { scenario: PathBuf },
    /// Run a scenario once per value of one or more fields.
    Sweep {
        scenario: PathBuf,
        /// Dotted field path, or several separated by commas; `*` matches every
        /// element, e.g. senders.*.link.loss_prob.
        #[arg(long)]
        param: String,
        /// Comma-separated TOML values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Run a scenario and write a per-frame CSV trace.
    Trace {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, cli: &Cli) -> Result<toml::Value, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut doc: toml::Table = text.parse()?;
    if let Some(seed) = cli.seed {
        doc.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(d) = cli.duration {
        doc.insert("duration".into(), toml::Value::Integer(d as i64));
    }
    Ok(toml::Value::Table(doc))
}

fn scenario(path: &Path, cli: &Cli) -> Result<Scenario, HarnessError> {
    Ok(load(path, cli)?.try_into::<Scenario>()?)
}

fn print_report(r: &RunReport) {
    for s in &r.senders {
        println!(
            "{}  {:>9.3} Mb/s  sent {:>9}  resent {:>8} ({:.4})  delay {:>5} us  ack {:>7.0} ns  integrity {}",
            s.mac,
            s.throughput_bps / 1e6,
            s.frames_sent,
            s.frames_resent,
            s.resend_ratio,
            s.final_delay_us,
            s.ack_latency.mean_ns,
            if s.integrity.pass { "pass" } else { "fail" },
        );
    }
    println!(
        "total {:.3} Mb/s  switch drops {}  link drops {}  integrity {}",
        r.throughput_bps / 1e6,
        r.switch_drops,
        r.link_drops,
        r.integrity
    );
}

fn write_report(dir: &Path, name: &str, r: &RunReport) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, r.to_json())?;
    Ok(path)
}

fn execute(cli: &Cli) -> Result<bool, HarnessError> {
    match &cli.command {
        Command::Validate { scenario: path } => {
            let plan = scenario(path, cli)?.validate()?;
            println!("{}: ok ({} senders, {} ns)", path.display(), plan.senders.len(), plan.duration);
            Ok(true)
        }
        Command::Run { scenario: path } => {
            let report = harness::run_scenario(&scenario(path, cli)?, None)?;
            print_report(&report);
            let out = write_report(&cli.out_dir, "report.json", &report)?;
            println!("report: {}", out.display());
            Ok(report.passed())
        }
        Command::Trace { scenario: path, out } => {
            let sc = scenario(path, cli)?;
            sc.validate()?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let trace: Box<dyn Write + Send> = Box::new(BufWriter::new(File::create(out)?));
            let report = harness::run_scenario(&sc, Some(trace))?;
            print_report(&report);
            let rep = write_report(&cli.out_dir, "report.json", &report)?;
            println!("trace: {}\nreport: {}", out.display(), rep.display());
            Ok(report.passed())
        }
        Command::Sweep { scenario: path, param, values } => {
            let template = load(path, cli)?;
            let values = split_values(values);
            let runs = sweep(&template, param, &values)?;
            for run in &runs {
                println!("[{}] {param} = {}", run.index, run.value);
                print_report(&run.report);
                write_report(&cli.out_dir, &format!("report-{:03}.json", run.index), &run.report)?;
            }
            fs::create_dir_all(&cli.out_dir)?;
            let summary = cli.out_dir.join("summary.csv");
            fs::write(&summary, summary_csv(param, &runs)?)?;
            println!("summary: {}", summary.display());
            Ok(runs.iter().all(|r| r.report.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("integrity check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
