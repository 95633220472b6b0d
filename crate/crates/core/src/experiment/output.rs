use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::ThetaOutcome;
use super::VERSION;
use crate::error::Result;
use crate::simulate::ConditioningMode;

/// Comment line opening every output table.
pub fn csv_preamble(digest: &str, seed: u64) -> String {
    format!("# halftaper {VERSION} config={digest} seed={seed}\n")
}

/// CSV tables of an ensemble experiment, appended and flushed per taper
/// range so partial runs leave usable output.
pub struct ExperimentWriter {
    dir: PathBuf,
    responses: BufWriter<File>,
    ks: BufWriter<File>,
    boxplot: BufWriter<File>,
    subtitles: BufWriter<File>,
}

fn open(dir: &Path, name: &str, preamble: &str, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    w.write_all(preamble.as_bytes())?;
    writeln!(w, "{header}")?;
    w.flush()?;
    Ok(w)
}

impl ExperimentWriter {
    pub const FILES: [&'static str; 4] = ["responses.csv", "ks.csv", "boxplot.csv", "subtitles.csv"];

    pub fn create(dir: &Path, digest: &str, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let pre = csv_preamble(digest, seed);
        Ok(Self {
            dir: dir.to_path_buf(),
            responses: open(dir, Self::FILES[0], &pre, "theta_ratio,response,mode,sample,realization,value")?,
            ks: open(dir, Self::FILES[1], &pre, "theta_ratio,response,comparison,d,p,n1,n2")?,
            boxplot: open(
                dir,
                Self::FILES[2],
                &pre,
                "theta_ratio,response,mode,n,min,q1,median,q3,max,whisker_lo,whisker_hi,n_outliers,mean",
            )?,
            subtitles: open(
                dir,
                Self::FILES[3],
                &pre,
                "theta_ratio,taper_range,ratio_t,ratio_ht,sparsity_forecast,sparsity_measured",
            )?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_theta(&mut self, o: &ThetaOutcome) -> Result<()> {
        let t = o.theta_ratio;
        let rps = o.realizations_per_sample.max(1);
        for r in &o.responses {
            let name = r.kind.name();
            for mode in ConditioningMode::ALL {
                for (i, v) in r.of(mode).iter().enumerate() {
                    writeln!(self.responses, "{t},{name},{mode},{},{},{v}", i / rps, i % rps)?;
                }
                let s = r.summary(mode);
                writeln!(
                    self.boxplot,
                    "{t},{name},{mode},{},{},{},{},{},{},{},{},{},{}",
                    s.n,
                    s.min,
                    s.q1,
                    s.median,
                    s.q3,
                    s.max,
                    s.whisker_lo,
                    s.whisker_hi,
                    s.outliers.len(),
                    s.mean
                )?;
            }
            for (label, k) in [("T_vs_F", &r.ks_t), ("HT_vs_F", &r.ks_ht)] {
                writeln!(self.ks, "{t},{name},{label},{},{},{},{}", k.d_stat, k.p_value, k.n1, k.n2)?;
            }
        }
        let s = &o.subtitle;
        writeln!(
            self.subtitles,
            "{t},{},{},{},{},{}",
            s.taper_range, s.ratio_t, s.ratio_ht, s.sparsity_forecast, s.sparsity_measured
        )?;
        for w in [&mut self.responses, &mut self.ks, &mut self.boxplot, &mut self.subtitles] {
            w.flush()?;
        }
        Ok(())
    }
}
