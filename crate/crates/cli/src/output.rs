use std::fs::File;
use std::io::{self, BufWriter, Write};

use qgem::config::{Command, RunConfig};

/// Twelve significant digits, `%.12g` style.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    const DIGITS: i32 = 12;
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One-line JSON echo of the resolved configuration.
pub fn header(command: Command, cfg: &RunConfig) -> String {
    let echo = serde_json::json!({
        "command": command.as_str(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    });
    format!("# {echo}\n")
}

pub fn sink(cfg: &RunConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes the header line, then `rows` as CSV under `columns`.
pub fn write_csv(
    command: Command,
    cfg: &RunConfig,
    columns: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    let mut out = sink(cfg)?;
    out.write_all(header(command, cfg).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

pub fn write_json(cfg: &RunConfig, value: &serde_json::Value) -> io::Result<()> {
    let mut out = sink(cfg)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}
