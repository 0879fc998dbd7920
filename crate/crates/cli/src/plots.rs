//! gnuplot scripts for the emitted CSV files. Columns are addressed by
//! header name so the scripts keep working if columns are appended.

use std::fmt::Write;

use decaylab::analysis::ScanEntry;

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 1200,520 enhanced\n";

/// Two panels plus an inlay: channels on log-log axes, the full curve
/// against the unit-intercept exponential on a log axis, and the first
/// lifetimes on linear axes.
pub fn curve_script(csv: &str, png: &str) -> String {
    let mut s = String::from("# P(t) and its exponential, power-law and interference channels\n");
    s.push_str(PREAMBLE);
    let _ = writeln!(s, "set output '{png}'");
    let _ = writeln!(
        s,
        "\
set multiplot layout 1,2
set xlabel 't / tau'
set ylabel 'P(t)'
set logscale xy
set format y '10^{{%L}}'
plot '{csv}' using 't_lifetimes':'P' with lines lw 2 title 'P', \\
     '' using 't_lifetimes':'P_exp' with lines dt 2 title 'exponential', \\
     '' using 't_lifetimes':'P_tail' with lines dt 3 title 'power law', \\
     '' using 't_lifetimes':(abs(column('P_interf'))) with lines dt 4 title '|interference|'
unset logscale x
set format x '%g'
plot '{csv}' using 't_lifetimes':'P' with lines lw 2 title 'P', \\
     '' using 't_lifetimes':(exp(-column('t_lifetimes'))) with lines dt 2 title 'exp(-t/tau)'
set origin 0.70,0.50
set size 0.28,0.40
unset logscale
set format y '%g'
unset xlabel
unset ylabel
set xrange [0:3]
plot '{csv}' using 't_lifetimes':'P' with lines notitle
unset multiplot"
    );
    s
}

/// Log-log overlay of all scan curves with dips and critical times marked.
pub fn overlay_script(files: &[String], entries: &[ScanEntry], png: &str) -> String {
    let mut s = String::from("# survival probability for each scan entry\n");
    s.push_str(PREAMBLE);
    let _ = writeln!(s, "set output '{png}'");
    s.push_str(
        "set xlabel 't / tau'\nset ylabel 'P(t)'\nset logscale xy\nset format y '10^{%L}'\n",
    );
    for (k, e) in entries.iter().enumerate() {
        if let Some((t, p)) = e.dip {
            let _ = writeln!(
                s,
                "set label {} 'dip {}' at {t:e},{p:e} point pt 7 offset 1,0",
                k + 1,
                e.label.replace('\'', "")
            );
        }
        if let Some(tc) = e.t_critical {
            let _ = writeln!(
                s,
                "set arrow {} from {tc:e}, graph 0 to {tc:e}, graph 1 nohead dt 3 lc {}",
                k + 1,
                k + 1
            );
        }
    }
    let parts: Vec<String> = files
        .iter()
        .zip(entries)
        .enumerate()
        .map(|(k, (f, e))| {
            format!(
                "'{f}' using 't_lifetimes':'P' with lines lc {} title '{}'",
                k + 1,
                e.label.replace('\'', "")
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}
