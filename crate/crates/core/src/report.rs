//! Output files: the results table, per-curve data, plot commands, the
//! capacity and favorable-propagation tables, and a text summary.
//!
//! Reals are written in scientific notation with 17 significant digits so
//! every value round-trips exactly and output is locale-independent.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::channel::{
    assemble_channel, generate_small_scale, orthogonal_channel, LargeScaleProfile,
};
use crate::config::{CapacitySettings, Receiver, ValidatedConfig};
use crate::engine::{rho_from_ebno_db, SweepResult};
use crate::error::MetricsError;
use crate::metrics::{favorable_deviation, sum_rate};
use crate::rng::{derive_stream, Purpose, StreamKey};

pub const RESULTS_HEADER: &str = "detector,K,M,ebno_db,bits,errors,ber,ci_low,ci_high,trials,seed";
pub const CAPACITY_HEADER: &str = "M,K,rho,exact_bits_hz,approx_bits_hz,rel_err";
pub const FAVORABLE_HEADER: &str = "M,K,mean_eps,std_eps";

const DEFAULT_CAPACITY_REALIZATIONS: usize = 50;

/// Full-precision, locale-free real formatting.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Named text files plus a human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

impl OutputBundle {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }
}

pub fn results_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for p in &sweep.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.receiver,
            p.users,
            p.antennas,
            fmt_real(p.ebno_db),
            p.bits,
            p.errors,
            fmt_real(p.ber),
            fmt_real(p.ci_low),
            fmt_real(p.ci_high),
            p.trials,
            p.seed
        )
        .expect("writing to a String");
    }
    out
}

pub fn curve_file_name(receiver: Receiver, antennas: usize) -> String {
    format!("curve_{receiver}_M{antennas}.dat")
}

/// One `.dat` file per `(receiver, M)`, rows sorted by Eb/N0.
pub fn curve_files(sweep: &SweepResult) -> Vec<(String, String)> {
    let mut curves: BTreeMap<(usize, usize), Vec<&crate::engine::BerPoint>> = BTreeMap::new();
    let order = |r: Receiver| {
        sweep
            .config
            .detectors
            .iter()
            .position(|d| *d == r)
            .unwrap_or(usize::MAX)
    };
    for p in &sweep.points {
        curves
            .entry((order(p.receiver), p.antennas))
            .or_default()
            .push(p);
    }
    curves
        .into_values()
        .map(|mut pts| {
            pts.sort_by(|a, b| a.ebno_db.total_cmp(&b.ebno_db));
            let mut body = String::from("# ebno_db ber ci_low ci_high\n");
            for p in &pts {
                writeln!(
                    body,
                    "{} {} {} {}",
                    fmt_real(p.ebno_db),
                    fmt_real(p.ber),
                    fmt_real(p.ci_low),
                    fmt_real(p.ci_high)
                )
                .expect("writing to a String");
            }
            (curve_file_name(pts[0].receiver, pts[0].antennas), body)
        })
        .collect()
}

/// Generic gnuplot commands drawing every curve file.
pub fn plot_script(curve_names: &[String]) -> String {
    let mut out = String::from(
        "set logscale y\nset format y \"10^{%L}\"\nset xlabel \"Eb/N0 (dB)\"\nset ylabel \"BER\"\nset grid\nset key outside\n",
    );
    let plots: Vec<String> = curve_names
        .iter()
        .map(|name| {
            let title = name
                .trim_start_matches("curve_")
                .trim_end_matches(".dat")
                .replace('_', " ");
            format!("\"{name}\" using 1:2 with linespoints title \"{title}\"")
        })
        .collect();
    if !plots.is_empty() {
        writeln!(out, "plot {}", plots.join(", \\\n     ")).expect("writing to a String");
    }
    out
}

pub fn summary(sweep: &SweepResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<5} {:>4} {:>5} {:>8} {:>12} {:>25} {:>10} {:>12} {:>8}",
        "rx", "K", "M", "Eb/N0", "BER", "CI", "errors", "bits", "trials"
    )
    .expect("writing to a String");
    for p in &sweep.points {
        writeln!(
            out,
            "{:<5} {:>4} {:>5} {:>8.2} {:>12.4e} [{:>10.3e}, {:>10.3e}] {:>10} {:>12} {:>8}{}",
            p.receiver.name(),
            p.users,
            p.antennas,
            p.ebno_db,
            p.ber,
            p.ci_low,
            p.ci_high,
            p.errors,
            p.bits,
            p.trials,
            if p.converged { "" } else { "  (unconverged)" }
        )
        .expect("writing to a String");
    }
    for f in &sweep.failures {
        writeln!(
            out,
            "FAILED {} M={} Eb/N0={}: {}",
            f.receiver, f.antennas, f.ebno_db, f.error
        )
        .expect("writing to a String");
    }
    out
}

/// Everything `simulate` writes, keyed by file name.
pub fn simulation_bundle(sweep: &SweepResult) -> OutputBundle {
    let mut files = vec![("results.csv".to_string(), results_csv(sweep))];
    let curves = curve_files(sweep);
    let names: Vec<String> = curves.iter().map(|(n, _)| n.clone()).collect();
    files.extend(curves);
    files.push(("plot_script.gp".to_string(), plot_script(&names)));
    OutputBundle {
        files,
        summary: summary(sweep),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRow {
    pub antennas: usize,
    pub users: usize,
    pub rho: f64,
    pub exact: f64,
    pub approx: f64,
    pub rel_err: f64,
    pub realizations: usize,
}

/// Capacity settings in effect: the configured ones, or `ρ = 0` followed by
/// the Eb/N0 grid mapped to `ρ`, over 50 realizations.
pub fn capacity_settings(cfg: &ValidatedConfig) -> CapacitySettings {
    cfg.capacity.clone().unwrap_or_else(|| CapacitySettings {
        rho_list: std::iter::once(0.0)
            .chain(cfg.ebno_grid_db.iter().map(|&db| rho_from_ebno_db(db)))
            .collect(),
        realizations: DEFAULT_CAPACITY_REALIZATIONS,
    })
}

/// Exact log-det and approximate sum rate averaged over realizations, for
/// every `(M, ρ)`. Realization `r` uses the channel stream of trial `r`.
pub fn capacity_rows(cfg: &ValidatedConfig) -> Vec<CapacityRow> {
    let settings = capacity_settings(cfg);
    let profile = cfg.profile();
    let k = cfg.num_users;
    let mut rows = Vec::new();
    for &m in &cfg.antenna_list {
        let channels: Vec<_> = (0..settings.realizations as u64)
            .map(|r| {
                let mut s = derive_stream(StreamKey::new(cfg.master_seed, Purpose::Channel, r));
                assemble_channel(generate_small_scale(m, k, &mut s), profile.clone())
                    .expect("validated profile")
            })
            .collect();
        for &rho in &settings.rho_list {
            let (mut exact, mut approx) = (0.0, 0.0);
            for ch in &channels {
                let s = sum_rate(ch, rho).expect("validated rho");
                exact += s.exact;
                approx += s.approx;
            }
            let n = channels.len() as f64;
            let rate = crate::metrics::SumRate {
                exact: exact / n,
                approx: approx / n,
            };
            rows.push(CapacityRow {
                antennas: m,
                users: k,
                rho,
                exact: rate.exact,
                approx: rate.approx,
                rel_err: rate.relative_error(),
                realizations: channels.len(),
            });
        }
    }
    rows
}

pub fn capacity_csv(rows: &[CapacityRow]) -> String {
    let mut out = String::from(CAPACITY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.antennas,
            r.users,
            fmt_real(r.rho),
            fmt_real(r.exact),
            fmt_real(r.approx),
            fmt_real(r.rel_err)
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FavorableRow {
    pub antennas: usize,
    pub users: usize,
    pub mean_eps: f64,
    pub std_eps: f64,
}

/// Mean and sample standard deviation of the favorable-propagation
/// deviation with `D = I`. `orthogonal` swaps the Rayleigh draw for exactly
/// orthogonal columns.
pub fn favorable_rows(
    antenna_list: &[usize],
    users: usize,
    realizations: usize,
    seed: u64,
    orthogonal: bool,
) -> Result<Vec<FavorableRow>, MetricsError> {
    let mut rows = Vec::with_capacity(antenna_list.len());
    for &m in antenna_list {
        let mut eps = Vec::with_capacity(realizations);
        for r in 0..realizations as u64 {
            let ch = if orthogonal {
                orthogonal_channel(m, LargeScaleProfile::uniform(users))?
            } else {
                let mut s = derive_stream(StreamKey::new(seed, Purpose::Channel, r));
                assemble_channel(
                    generate_small_scale(m, users, &mut s),
                    LargeScaleProfile::uniform(users),
                )?
            };
            eps.push(favorable_deviation(&ch)?.epsilon);
        }
        let n = eps.len() as f64;
        let mean = eps.iter().sum::<f64>() / n;
        let std = if eps.len() > 1 {
            (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        rows.push(FavorableRow {
            antennas: m,
            users,
            mean_eps: mean,
            std_eps: std,
        });
    }
    Ok(rows)
}

pub fn favorable_csv(rows: &[FavorableRow]) -> String {
    let mut out = String::from(FAVORABLE_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.antennas,
            r.users,
            fmt_real(r.mean_eps),
            fmt_real(r.std_eps)
        )
        .expect("writing to a String");
    }
    out
}
