//! gnuplot script emission for success-count-versus-condition-number plots.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::output::read_summary_csv;
use crate::error::{Error, Result};

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

/// Write a gnuplot script that plots success count against `κ̃` on a log
/// x-axis. Each summary file is one setting (typically one choice of mode
/// sizes); files holding several measurement counts get one curve per count.
pub fn emit_plot_script(summary_csvs: &[&Path], out_path: &Path) -> Result<()> {
    if summary_csvs.is_empty() {
        return Err(Error::InvalidArgument("at least one summary file is required".into()));
    }
    let mut curves = Vec::new();
    for path in summary_csvs {
        if !path.is_file() {
            return Err(Error::InvalidArgument(format!(
                "summary file {} does not exist",
                path.display()
            )));
        }
        let summary = read_summary_csv(path)?;
        let ms: BTreeSet<usize> = summary.points.iter().map(|p| p.m).collect();
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().trim_end_matches("_summary").to_string())
            .unwrap_or_default();
        let path_str = path.to_string_lossy();
        for m in &ms {
            let title = if ms.len() > 1 {
                format!("{label}, M={m}")
            } else {
                label.clone()
            };
            curves.push(format!(
                "{} using 1:($2=={m} ? $4 : 1/0) with linespoints title {}",
                quote(&path_str),
                quote(&title)
            ));
        }
    }

    let out_png = out_path.with_extension("png");
    let script = format!(
        "# success count versus factor condition number\n\
         set terminal pngcairo size 800,600\n\
         set output {}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale x 10\n\
         set xlabel 'condition number of latent factors (kappa~)'\n\
         set ylabel 'number of successful recoveries'\n\
         set yrange [0:*]\n\
         set grid\n\
         plot {}\n",
        quote(&out_png.to_string_lossy()),
        curves.join(", \\\n     ")
    );
    fs::write(out_path, script)?;
    Ok(())
}
