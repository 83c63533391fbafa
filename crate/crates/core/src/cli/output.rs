//! CSV emission. Numbers use Rust's locale-independent scientific format
//! with 17 significant digits, so every value round-trips exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use super::config::RunConfig;
use crate::master::{Comparison, Run, SweepRow};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Path of the config echo written next to `out`.
pub fn echo_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

/// Write CSV to `dest` (or stdout) and, for files, the effective config
/// alongside it.
pub fn emit<F>(dest: Option<&Path>, config: &RunConfig, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    match dest {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
            let echo = echo_path(path);
            let text = serde_json::to_string_pretty(config)?;
            std::fs::write(&echo, text + "\n")
                .with_context(|| format!("cannot write {}", echo.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn trailer(w: &mut dyn Write, run: &Run) -> anyhow::Result<()> {
    if let Some(d) = &run.divergence {
        writeln!(w, "# diverged at t={}", num(d.t))?;
    }
    Ok(())
}

/// One row per synchronization point.
pub fn write_run(w: &mut dyn Write, run: &Run) -> anyhow::Result<()> {
    let layout = &run.layout;
    let mut header = vec!["t".to_owned(), "dt".to_owned()];
    header.extend(layout.outputs.iter().map(|v| format!("y_{}", v.label)));
    header.extend(layout.inputs.iter().map(|v| format!("u_{}", v.label)));
    header.push("eps".into());
    header.extend(layout.bond_labels.iter().map(|b| format!("deltaP_{b}")));
    header.extend(layout.bond_labels.iter().map(|b| format!("deltaE_{b}")));
    header.push("E_total".into());
    {
        let mut csv = csv::Writer::from_writer(&mut *w);
        csv.write_record(&header)?;
        for r in &run.records {
            let mut row = vec![num(r.t), num(r.dt)];
            row.extend(r.y.iter().copied().map(num));
            row.extend(r.u.iter().copied().map(num));
            row.push(num(r.eps));
            row.extend(r.delta_p.iter().copied().map(num));
            row.extend(r.delta_e.iter().copied().map(num));
            row.push(opt(r.energy));
            csv.write_record(&row)?;
        }
        csv.flush()?;
    }
    trailer(w, run)
}

pub fn write_sweep(w: &mut dyn Write, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "dt",
        "cumulative_abs_deltaE",
        "cumulative_deltaE",
        "diverged",
        "diverged_at",
        "steps",
        "wall_time_s",
    ])?;
    for r in rows {
        csv.write_record([
            num(r.dt),
            num(r.cumulative_abs_delta_e),
            num(r.cumulative_delta_e),
            r.diverged.to_string(),
            opt(r.diverged_at),
            r.steps.to_string(),
            num(r.wall_time),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_comparison(w: &mut dyn Write, run: &Run, cmp: &Comparison) -> anyhow::Result<()> {
    {
        let mut csv = csv::Writer::from_writer(&mut *w);
        let mut header = vec!["t".to_owned()];
        header.extend(run.layout.outputs.iter().map(|v| format!("dy_{}", v.label)));
        header.extend(["E_cosim".into(), "E_mono".into(), "E_err".into()]);
        csv.write_record(&header)?;
        let errors = cmp.energy_error();
        for (i, (&t, dy)) in cmp.t.iter().zip(&cmp.dy).enumerate() {
            let mut row = vec![num(t)];
            row.extend(dy.iter().copied().map(num));
            row.push(opt(cmp.energy_cosim[i]));
            row.push(num(cmp.energy_mono[i]));
            row.push(opt(errors[i]));
            csv.write_record(&row)?;
        }
        csv.flush()?;
    }
    trailer(w, run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 500.0, -1e-300, 0.1 + 0.2, std::f64::consts::PI, 1.5e12] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(500.0), "5.0000000000000000e2");
    }

    #[test]
    fn echo_sits_next_to_output() {
        assert_eq!(echo_path(Path::new("out/a.csv")), PathBuf::from("out/a.csv.config.json"));
    }
}
