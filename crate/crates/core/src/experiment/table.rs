use std::io;
use std::path::Path;

use super::{AgentKind, TrialResult};
use crate::Error;

pub const CSV_HEADER: [&str; 8] = [
    "episode",
    "agent",
    "rmsd",
    "return",
    "steps",
    "pairs",
    "ref_steps",
    "ref_return",
];

/// Per-episode, per-agent means across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub episode: usize,
    pub agent: AgentKind,
    pub rmsd: f64,
    pub return_: f64,
    pub steps: f64,
    pub pairs: f64,
    pub ref_steps: f64,
    pub ref_return: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeanTable {
    pub rows: Vec<MeanRow>,
}

/// Sums in sorted order so the mean does not depend on trial order.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Arithmetic mean of every metric over trials, row by row.
pub fn aggregate(results: &[TrialResult]) -> Result<MeanTable, Error> {
    let Some(first) = results.first() else {
        return Ok(MeanTable::default());
    };
    for (i, t) in results.iter().enumerate() {
        if t.records.len() != first.records.len() {
            return Err(Error::Aggregate(format!(
                "trial {i} has {} records, trial 0 has {}",
                t.records.len(),
                first.records.len()
            )));
        }
        let aligned = t
            .records
            .iter()
            .zip(&first.records)
            .all(|(a, b)| a.episode == b.episode && a.agent == b.agent);
        if !aligned {
            return Err(Error::Aggregate(format!(
                "trial {i} records are not aligned with trial 0"
            )));
        }
    }

    let mut buf = vec![0.0; results.len()];
    let mut column = |f: &dyn Fn(&TrialResult, usize) -> f64, row: usize| {
        for (slot, t) in buf.iter_mut().zip(results) {
            *slot = f(t, row);
        }
        mean(&mut buf)
    };

    let rows = first
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| MeanRow {
            episode: r.episode,
            agent: r.agent,
            rmsd: column(&|t, i| t.records[i].rmsd, i),
            return_: column(&|t, i| t.records[i].return_, i),
            steps: column(&|t, i| t.records[i].steps as f64, i),
            pairs: column(&|t, i| t.records[i].pair_count as f64, i),
            ref_steps: column(&|t, i| t.reference_at(t.records[i].episode).steps as f64, i),
            ref_return: column(&|t, i| t.reference_at(t.records[i].episode).return_, i),
        })
        .collect();
    Ok(MeanTable { rows })
}

/// Up to six significant digits, trailing zeros dropped; scientific notation
/// outside `[1e-5, 1e6)`.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        format!("{}e{}", trim(mantissa), exp)
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}")).to_string()
    }
}

impl MeanTable {
    pub fn write<W: io::Write>(&self, writer: W) -> Result<(), Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.episode.to_string(),
                r.agent.name().to_string(),
                fmt_sig(r.rmsd),
                fmt_sig(r.return_),
                fmt_sig(r.steps),
                fmt_sig(r.pairs),
                fmt_sig(r.ref_steps),
                fmt_sig(r.ref_return),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn read<R: io::Read>(reader: R) -> Result<Self, Error> {
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.iter().ne(CSV_HEADER) {
            return Err(Error::Aggregate("unexpected csv header".into()));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::Aggregate(format!("csv row {}: {m}", i + 2));
            let num = |k: usize| -> Result<f64, Error> {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("{}: {e}", CSV_HEADER[k])))
            };
            rows.push(MeanRow {
                episode: rec[0].parse().map_err(|e| bad(format!("episode: {e}")))?,
                agent: AgentKind::from_name(&rec[1])
                    .ok_or_else(|| bad(format!("agent `{}`", &rec[1])))?,
                rmsd: num(2)?,
                return_: num(3)?,
                steps: num(4)?,
                pairs: num(5)?,
                ref_steps: num(6)?,
                ref_return: num(7)?,
            });
        }
        Ok(MeanTable { rows })
    }

    pub fn series(&self, agent: AgentKind) -> impl Iterator<Item = &MeanRow> + '_ {
        self.rows.iter().filter(move |r| r.agent == agent)
    }
}
