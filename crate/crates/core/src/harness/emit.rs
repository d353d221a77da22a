//! Result files. CSV carries sweep rows only; JSON carries everything.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::harness::sweep::SweepResult;
use crate::model::Solution;

pub const CSV_COLUMNS: [&str; 10] = [
    "t_max",
    "strategy",
    "objective_j",
    "total_time_s",
    "epochs",
    "data_fraction",
    "mbit_mobile",
    "mbit_edge",
    "mbit_cloud",
    "status",
];

pub fn write_sweep_csv(result: &SweepResult, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in &result.rows {
        let mut record = vec![row.t_max.to_string(), row.strategy.as_str().to_string()];
        match &row.solution {
            Some(s) => {
                let m = &s.metrics;
                record.extend([
                    m.objective.to_string(),
                    m.total_time.to_string(),
                    m.epochs.to_string(),
                    m.data_fraction.to_string(),
                ]);
                record.extend(row.tier_mbit.iter().map(f64::to_string));
            }
            None => record.extend(std::iter::repeat_n(String::new(), 7)),
        }
        record.push(row.status.clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

pub fn sweep_to_json(result: &SweepResult) -> String {
    let mut text = serde_json::to_string_pretty(result).expect("sweep serializes");
    text.push('\n');
    text
}

pub fn emit_sweep_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    write_sweep_csv(result, File::create(path)?)
}

pub fn emit_sweep_json(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sweep_to_json(result))?;
    Ok(())
}

pub fn emit_solution_json(solution: &Solution, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, crate::model::io::solution_to_json(solution))?;
    Ok(())
}
