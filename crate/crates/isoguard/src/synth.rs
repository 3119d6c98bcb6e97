//! Synthetic datasets: contaminated Gaussian clusters, and a surrogate with
//! the 41-column layout of the NSL-KDD connection records.

use std::path::{Path, PathBuf};

use isoguard_core::data::{ColumnData, Dataset};
use isoguard_core::rng::{self, tag, StreamRng};
use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{write_csv, TargetLabels, DEFAULT_TARGET};

pub const DATA_FILE: &str = "synthetic.csv";
pub const MASK_FILE: &str = "injected_mask.csv";

/// Two Gaussian classes over the informative features, uniform noise
/// features, and a share of the normal rows replaced by far-field points that
/// keep the normal label. Far-field points lie on the side of the normal
/// centre facing away from the anomaly centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    /// Distance between the two class centres.
    pub separation: f64,
    /// Distance of each injected point from the normal centre.
    pub outlier_magnitude: f64,
    /// Share of normal rows that are injected far-field points.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_normal: 1000,
            n_anomaly: 100,
            n_informative: 5,
            n_noise: 10,
            separation: 3.0,
            outlier_magnitude: 8.0,
            outlier_fraction: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// `true` for injected far-field rows.
    pub injected: Vec<bool>,
}

fn unit_direction(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let invalid = |name: &'static str, reason: &str| isoguard_core::Error::InvalidParameter { name, reason: reason.into() };
    if spec.n_informative == 0 {
        return Err(invalid("n_informative", "at least one informative feature is needed").into());
    }
    if spec.n_normal == 0 || spec.n_anomaly == 0 {
        return Err(invalid("counts", "both classes need at least one row").into());
    }
    if !(0.0..1.0).contains(&spec.outlier_fraction) {
        return Err(invalid("outlier_fraction", "must be in [0, 1)").into());
    }
    if !spec.separation.is_finite() || !spec.outlier_magnitude.is_finite() {
        return Err(invalid("separation", "must be finite").into());
    }
    let k = spec.n_informative;
    let d = k + spec.n_noise;
    let n = spec.n_normal + spec.n_anomaly;
    let n_injected = (spec.outlier_fraction * spec.n_normal as f64).round() as usize;
    let offset = spec.separation / (k as f64).sqrt();

    let mut rng = rng::stream(spec.seed, tag::SYNTHETIC, 0);
    let mut rows: Vec<(Vec<f64>, u8, bool)> = Vec::with_capacity(n);
    for i in 0..n {
        let label = u8::from(i >= spec.n_normal);
        let injected = i < n_injected;
        let mut row = Vec::with_capacity(d);
        if injected {
            let mut dir = unit_direction(&mut rng, k);
            // reflect into the half-space away from the anomaly centre
            if dir.iter().sum::<f64>() > 0.0 {
                dir.iter_mut().for_each(|u| *u = -*u);
            }
            row.extend(dir.into_iter().map(|u| spec.outlier_magnitude * u));
        } else {
            let centre = if label == 1 { offset } else { 0.0 };
            row.extend((0..k).map(|_| centre + rng.sample::<f64, _>(StandardNormal)));
        }
        row.extend((0..spec.n_noise).map(|_| rng.random_range(-2.0..2.0)));
        rows.push((row, label, injected));
    }
    rng::shuffle(&mut rng, &mut rows);

    let mut names: Vec<String> = (0..k).map(|i| format!("inf_{i}")).collect();
    names.extend((0..spec.n_noise).map(|i| format!("noise_{i}")));
    let columns = (0..d).map(|c| ColumnData::Numeric(rows.iter().map(|r| r.0[c]).collect())).collect();
    let target = rows.iter().map(|r| r.1).collect();
    Ok(SyntheticData {
        dataset: Dataset::new(names, columns, target)?,
        injected: rows.iter().map(|r| r.2).collect(),
    })
}

/// Writes the data file and the per-row injection mask into `dir`; returns
/// the data file path.
pub fn write_synthetic(dir: &Path, data: &SyntheticData) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(DATA_FILE);
    write_csv(&path, &data.dataset, DEFAULT_TARGET, &TargetLabels::default())?;
    let mask = dir.join(MASK_FILE);
    let mut w = csv::Writer::from_path(&mask).map_err(|e| Error::csv(&mask, e))?;
    w.write_record(["row", "injected"]).map_err(|e| Error::csv(&mask, e))?;
    for (i, &m) in data.injected.iter().enumerate() {
        w.write_record([i.to_string(), u8::from(m).to_string()]).map_err(|e| Error::csv(&mask, e))?;
    }
    w.flush().map_err(|e| Error::io(&mask, e))?;
    Ok(path)
}

pub fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            match rec.get(1) {
                Some("1") => Ok(true),
                Some("0") => Ok(false),
                other => Err(Error::format(path, format!("bad mask value {other:?}"))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KddLikeSpec {
    pub n_rows: usize,
    pub anomaly_fraction: f64,
    /// Share of rows whose features follow the other class's profile.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for KddLikeSpec {
    fn default() -> Self {
        Self { n_rows: 5000, anomaly_fraction: 0.47, overlap: 0.03, seed: 0 }
    }
}

pub const KDD_COLUMNS: [&str; 41] = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land", "wrong_fragment",
    "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised", "root_shell", "su_attempted",
    "num_root", "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate", "srv_serror_rate",
    "rerror_rate", "srv_rerror_rate", "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate",
    "dst_host_count", "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
];

/// Per-class generator of one column.
enum Gen {
    Zero,
    Flag(f64, f64),
    Count(f64, f64),
    LogNormal((f64, f64), (f64, f64)),
    /// Beta parameters per class; the anomaly class may mix in a saturated
    /// component with the given weight.
    Rate((f64, f64), (f64, f64), f64),
    Pick(&'static [(&'static str, f64)], &'static [(&'static str, f64)]),
}

fn kdd_generators() -> Vec<Gen> {
    use Gen::*;
    const PROTO_N: &[(&str, f64)] = &[("tcp", 0.8), ("udp", 0.15), ("icmp", 0.05)];
    const PROTO_A: &[(&str, f64)] = &[("tcp", 0.7), ("udp", 0.05), ("icmp", 0.25)];
    const SERV_N: &[(&str, f64)] =
        &[("http", 0.55), ("smtp", 0.1), ("ftp_data", 0.1), ("domain_u", 0.12), ("other", 0.08), ("ftp", 0.05)];
    const SERV_A: &[(&str, f64)] = &[
        ("private", 0.45), ("ecr_i", 0.2), ("other", 0.1), ("http", 0.1), ("telnet", 0.05), ("ftp_data", 0.05),
        ("eco_i", 0.05),
    ];
    const FLAG_N: &[(&str, f64)] = &[("SF", 0.95), ("S0", 0.01), ("REJ", 0.03), ("RSTR", 0.01)];
    const FLAG_A: &[(&str, f64)] = &[("S0", 0.45), ("REJ", 0.2), ("SF", 0.3), ("RSTR", 0.03), ("SH", 0.02)];
    let serror = || Rate((0.2, 8.0), (0.3, 3.0), 0.5);
    let rerror = || Rate((0.2, 10.0), (0.5, 2.0), 0.0);
    vec![
        Count(2.0, 0.5),
        Pick(PROTO_N, PROTO_A),
        Pick(SERV_N, SERV_A),
        Pick(FLAG_N, FLAG_A),
        LogNormal((6.0, 1.5), (3.0, 2.5)),
        LogNormal((7.0, 2.0), (1.0, 2.0)),
        Flag(0.0005, 0.002),
        Flag(0.0, 0.03),
        Zero,
        Count(0.2, 0.1),
        Count(0.001, 0.01),
        Flag(0.7, 0.1),
        Count(0.05, 0.02),
        Flag(0.002, 0.001),
        Zero,
        Count(0.05, 0.01),
        Count(0.02, 0.005),
        Flag(0.001, 0.0),
        Count(0.01, 0.002),
        Zero,
        Zero,
        Flag(0.01, 0.005),
        Count(8.0, 120.0),
        Count(10.0, 15.0),
        serror(),
        serror(),
        rerror(),
        rerror(),
        Rate((8.0, 0.5), (0.5, 4.0), 0.0),
        Rate((0.3, 8.0), (0.5, 5.0), 0.0),
        Rate((0.5, 4.0), (0.5, 4.0), 0.0),
        Count(150.0, 230.0),
        Count(190.0, 20.0),
        Rate((6.0, 1.0), (0.5, 4.0), 0.0),
        Rate((0.3, 8.0), (0.6, 5.0), 0.0),
        Rate((0.5, 4.0), (0.5, 2.0), 0.0),
        Rate((0.3, 6.0), (0.3, 6.0), 0.0),
        serror(),
        serror(),
        rerror(),
        rerror(),
    ]
}

fn pick(rng: &mut StreamRng, table: &[(&'static str, f64)]) -> &'static str {
    let total: f64 = table.iter().map(|t| t.1).sum();
    let mut u = rng.random_range(0.0..total);
    for &(name, w) in table {
        if u < w {
            return name;
        }
        u -= w;
    }
    table[table.len() - 1].0
}

fn beta(rng: &mut StreamRng, (a, b): (f64, f64)) -> f64 {
    let v: f64 = Beta::new(a, b).expect("positive parameters").sample(rng);
    (v * 100.0).round() / 100.0
}

/// Connection-record-shaped data: 41 feature columns (three nominal) plus a
/// `class` column of `normal` / `anomaly`.
pub fn generate_kdd_like(spec: &KddLikeSpec) -> Result<Dataset> {
    if spec.n_rows < 4 || !(spec.anomaly_fraction > 0.0 && spec.anomaly_fraction < 1.0) || !(0.0..=1.0).contains(&spec.overlap) {
        return Err(isoguard_core::Error::InvalidParameter {
            name: "kdd_like",
            reason: "need at least 4 rows, an anomaly fraction in (0, 1) and an overlap in [0, 1]".into(),
        }
        .into());
    }
    let gens = kdd_generators();
    let n_anomaly = ((spec.anomaly_fraction * spec.n_rows as f64).round() as usize).clamp(1, spec.n_rows - 1);
    let mut target: Vec<u8> = (0..spec.n_rows).map(|i| u8::from(i < n_anomaly)).collect();
    let mut rng = rng::stream(spec.seed, tag::SYNTHETIC, 1);
    rng::shuffle(&mut rng, &mut target);
    let profile: Vec<u8> = target.iter().map(|&t| if rng.random_bool(spec.overlap) { 1 - t } else { t }).collect();

    let mut columns = Vec::with_capacity(gens.len());
    for g in &gens {
        let col = match g {
            Gen::Pick(n, a) => ColumnData::Nominal(
                profile.iter().map(|&t| pick(&mut rng, if t == 1 { a } else { n }).to_string()).collect(),
            ),
            _ => ColumnData::Numeric(
                profile
                    .iter()
                    .map(|&t| {
                        let anomalous = t == 1;
                        match *g {
                            Gen::Zero => 0.0,
                            Gen::Flag(pn, pa) => f64::from(u8::from(rng.random_bool(if anomalous { pa } else { pn }))),
                            Gen::Count(mn, ma) => {
                                let mean = if anomalous { ma } else { mn };
                                Poisson::new(mean).map(|p| p.sample(&mut rng)).unwrap_or(0.0).min(255.0_f64.max(mean * 4.0))
                            }
                            Gen::LogNormal(pn, pa) => {
                                let (mu, sigma) = if anomalous { pa } else { pn };
                                let z: f64 = rng.sample(StandardNormal);
                                (mu + sigma * z).exp().round()
                            }
                            Gen::Rate(pn, pa, saturated) => {
                                if anomalous && saturated > 0.0 && rng.random_bool(saturated) {
                                    beta(&mut rng, (8.0, 0.3))
                                } else {
                                    beta(&mut rng, if anomalous { pa } else { pn })
                                }
                            }
                            Gen::Pick(..) => unreachable!(),
                        }
                    })
                    .collect(),
            ),
        };
        columns.push(col);
    }
    Ok(Dataset::new(KDD_COLUMNS.iter().map(|s| s.to_string()).collect(), columns, target)?)
}
