use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::{SynthCohort, TruthRecord};
use crate::data::io::{write_activity, write_parent_links, write_persons, write_spells};
use crate::Result;

/// File names written by [`write_synth`], in order.
pub const SYNTH_FILES: [&str; 5] = ["spells.csv", "persons.csv", "activity.csv", "parent_links.csv", "truth.csv"];

pub fn write_truth<W: std::io::Write>(w: W, truth: &[TruthRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for t in truth {
        wr.serialize(t)?;
    }
    wr.flush()?;
    Ok(())
}

/// Write the cohort files and the hidden truth into `dir`.
pub fn write_synth(dir: &Path, s: &SynthCohort) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let p = dir.join(name);
        Ok((p.clone(), BufWriter::new(File::create(&p)?)))
    };
    let mut out = Vec::new();
    let (p, w) = open(SYNTH_FILES[0])?;
    write_spells(w, &s.cohort)?;
    out.push(p);
    let (p, w) = open(SYNTH_FILES[1])?;
    write_persons(w, &s.cohort)?;
    out.push(p);
    let (p, w) = open(SYNTH_FILES[2])?;
    write_activity(w, &s.cohort)?;
    out.push(p);
    let (p, w) = open(SYNTH_FILES[3])?;
    write_parent_links(w, &s.cohort)?;
    out.push(p);
    let (p, w) = open(SYNTH_FILES[4])?;
    write_truth(w, &s.truth)?;
    out.push(p);
    Ok(out)
}
